//! Signatures, finite relational structures and MSO syntax.

mod formula;
mod parser;

pub use formula::{is_set_var, Formula, FormulaInfo};
pub use parser::{parse_formula, ParseError};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::Graph;
use crate::perm::Permutation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("duplicate relation symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("relation `{0}` must have arity >= 1")]
    BadArity(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("tuple arity {got} does not match arity {expected} of `{symbol}`")]
    TupleArity { symbol: String, expected: usize, got: usize },
    #[error("tuple entry {0} outside domain 1..={1}")]
    OutOfDomain(usize, usize),
    #[error("letter `{0}` outside the alphabet")]
    LetterOutsideAlphabet(char),
    #[error("alphabet letters must be distinct lowercase ascii, got `{0}`")]
    BadAlphabet(char),
}

/// A purely relational signature plus flags saying whether membership and
/// cardinality atoms are admitted in formulas over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    name: String,
    relations: Vec<(String, usize)>,
    set_atoms_allowed: bool,
    card_atoms_allowed: bool,
}

impl Signature {
    pub fn new(
        name: impl Into<String>,
        relations: Vec<(String, usize)>,
        set_atoms_allowed: bool,
        card_atoms_allowed: bool,
    ) -> Result<Self, StructureError> {
        let mut seen = BTreeSet::new();
        for (sym, arity) in &relations {
            if !seen.insert(sym.clone()) {
                return Err(StructureError::DuplicateSymbol(sym.clone()));
            }
            if *arity == 0 {
                return Err(StructureError::BadArity(sym.clone()));
            }
        }
        Ok(Signature { name: name.into(), relations, set_atoms_allowed, card_atoms_allowed })
    }

    /// Two linear orders `<1` (positions) and `<2` (values).
    pub fn toto() -> Self {
        Signature::new("TOTO", vec![("<1".into(), 2), ("<2".into(), 2)], true, true).unwrap()
    }

    /// A single linear order `<`.
    pub fn linear_order() -> Self {
        Signature::new("TOLO", vec![("<".into(), 2)], true, true).unwrap()
    }

    /// Words over `alphabet`: position order `<` and one unary predicate
    /// `P<letter>` per letter.
    pub fn word(alphabet: &[char]) -> Result<Self, StructureError> {
        let mut rels = vec![("<".to_string(), 2)];
        let mut seen = BTreeSet::new();
        for &c in alphabet {
            if !c.is_ascii_lowercase() || !seen.insert(c) {
                return Err(StructureError::BadAlphabet(c));
            }
            rels.push((format!("P{c}"), 1));
        }
        Signature::new(format!("TOW[{}]", alphabet.iter().collect::<String>()), rels, true, true)
    }

    /// Graphs as a symmetric binary edge relation `E`. Cardinality atoms
    /// are reserved for theories equipped with a linear order.
    pub fn graph() -> Self {
        Signature::new("TOG", vec![("E".into(), 2)], true, false).unwrap()
    }

    /// Vertex/edge incidence structures of labeled graphs: unary `vertex`,
    /// `edge`, `min1`, `min2`, `succ1`, `succ2` and binary `Inc`.
    pub fn incidence() -> Self {
        Signature::new(
            "TOLG",
            vec![
                ("vertex".into(), 1),
                ("edge".into(), 1),
                ("Inc".into(), 2),
                ("min1".into(), 1),
                ("min2".into(), 1),
                ("succ1".into(), 1),
                ("succ2".into(), 1),
            ],
            true,
            false,
        )
        .unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.relations.iter().find(|(s, _)| s == symbol).map(|&(_, a)| a)
    }

    pub fn set_atoms_allowed(&self) -> bool {
        self.set_atoms_allowed
    }

    pub fn card_atoms_allowed(&self) -> bool {
        self.card_atoms_allowed
    }
}

/// A finite structure: domain `1..=n` and extensional interpretations of
/// the signature's relation symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    domain_size: usize,
    relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl Structure {
    pub fn new(signature: Signature, domain_size: usize) -> Self {
        let relations = signature.relations.iter().map(|(s, _)| (s.clone(), BTreeSet::new())).collect();
        Structure { signature, domain_size, relations }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn insert(&mut self, symbol: &str, tuple: Vec<usize>) -> Result<(), StructureError> {
        let arity = self
            .signature
            .arity(symbol)
            .ok_or_else(|| StructureError::UnknownSymbol(symbol.to_string()))?;
        if tuple.len() != arity {
            return Err(StructureError::TupleArity {
                symbol: symbol.to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        for &x in &tuple {
            if x == 0 || x > self.domain_size {
                return Err(StructureError::OutOfDomain(x, self.domain_size));
            }
        }
        self.relations.get_mut(symbol).unwrap().insert(tuple);
        Ok(())
    }

    pub fn contains(&self, symbol: &str, tuple: &[usize]) -> bool {
        self.relations.get(symbol).is_some_and(|s| s.contains(tuple))
    }

    pub fn tuples(&self, symbol: &str) -> impl Iterator<Item = &Vec<usize>> + '_ {
        self.relations.get(symbol).into_iter().flatten()
    }

    /// The permutation as a structure with two orders: element `i` is the
    /// point at position `i`, `<1` compares positions and `<2` values.
    pub fn of_permutation(p: &Permutation) -> Structure {
        let n = p.len();
        let mut s = Structure::new(Signature::toto(), n);
        for i in 1..=n {
            for j in 1..=n {
                if i < j {
                    s.insert("<1", vec![i, j]).unwrap();
                }
                if p.value(i) < p.value(j) {
                    s.insert("<2", vec![i, j]).unwrap();
                }
            }
        }
        s
    }

    /// A word as a structure: `<` is position order, `P<letter>` marks the
    /// positions carrying that letter.
    pub fn of_word(word: &str, alphabet: &[char]) -> Result<Structure, StructureError> {
        let sig = Signature::word(alphabet)?;
        let chars: Vec<char> = word.chars().collect();
        let mut s = Structure::new(sig, chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if !alphabet.contains(&c) {
                return Err(StructureError::LetterOutsideAlphabet(c));
            }
            s.insert(&format!("P{c}"), vec![i + 1]).unwrap();
        }
        for i in 1..=chars.len() {
            for j in i + 1..=chars.len() {
                s.insert("<", vec![i, j]).unwrap();
            }
        }
        Ok(s)
    }

    /// A graph as a structure with a symmetric, irreflexive edge relation.
    pub fn of_graph(g: &Graph) -> Structure {
        let mut s = Structure::new(Signature::graph(), g.vertex_count());
        for (u, v) in g.edges() {
            s.insert("E", vec![u, v]).unwrap();
            s.insert("E", vec![v, u]).unwrap();
        }
        s
    }

    /// The linear order on `1..=n` over the single-order signature.
    pub fn linear_order(n: usize) -> Structure {
        let mut s = Structure::new(Signature::linear_order(), n);
        for i in 1..=n {
            for j in i + 1..=n {
                s.insert("<", vec![i, j]).unwrap();
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_structure_orders() {
        let p: Permutation = "21".parse().unwrap();
        let s = Structure::of_permutation(&p);
        assert!(s.contains("<1", &[1, 2]));
        assert!(!s.contains("<1", &[2, 1]));
        assert!(s.contains("<2", &[2, 1]));
        assert!(!s.contains("<2", &[1, 2]));
    }

    #[test]
    fn permutation_structure_is_a_pair_of_strict_total_orders() {
        for n in 0..=8 {
            for p in crate::perm::all_permutations(n.min(5)) {
                let s = Structure::of_permutation(&p);
                for rel in ["<1", "<2"] {
                    let pairs: Vec<&Vec<usize>> = s.tuples(rel).collect();
                    assert_eq!(pairs.len(), p.len() * p.len().saturating_sub(1) / 2);
                    for a in &pairs {
                        for b in &pairs {
                            if a[1] == b[0] {
                                assert!(s.contains(rel, &[a[0], b[1]]), "transitivity of {rel}");
                            }
                        }
                    }
                    for i in 1..=p.len() {
                        assert!(!s.contains(rel, &[i, i]));
                        for j in 1..=p.len() {
                            if i != j {
                                assert!(s.contains(rel, &[i, j]) ^ s.contains(rel, &[j, i]));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn word_structure() {
        let s = Structure::of_word("aba", &['a', 'b']).unwrap();
        assert_eq!(s.domain_size(), 3);
        assert!(s.contains("Pa", &[1]));
        assert!(s.contains("Pb", &[2]));
        assert!(s.contains("Pa", &[3]));
        assert!(!s.contains("Pb", &[3]));
        assert!(Structure::of_word("abc", &['a', 'b']).is_err());
    }

    #[test]
    fn graph_structure_symmetric() {
        let g = Graph::complete(2);
        let s = Structure::of_graph(&g);
        assert!(s.contains("E", &[1, 2]));
        assert!(s.contains("E", &[2, 1]));
        assert!(!s.contains("E", &[1, 1]));
    }

    #[test]
    fn analyze_matches_definition() {
        let sig = Signature::toto();
        let atom = parse_formula("x <1 y", &sig).unwrap();
        let info = atom.analyze();
        assert_eq!(info.quantifier_depth, 0);
        assert_eq!(
            info.free_element_vars,
            BTreeSet::from(["x".to_string(), "y".to_string()])
        );
        let closed = parse_formula("E x. A y. x <1 y", &sig).unwrap();
        let info = closed.analyze();
        assert_eq!(info.quantifier_depth, 2);
        assert!(info.free_element_vars.is_empty());
        // Negation is transparent for quantifier depth.
        let f = parse_formula("E x. x = x", &sig).unwrap();
        assert_eq!(Formula::not(f.clone()).analyze().quantifier_depth, f.analyze().quantifier_depth);
    }

    #[test]
    fn substitution_avoids_capture() {
        let sig = Signature::toto();
        let f = parse_formula("E y. x <1 y", &sig).unwrap();
        let g = f.substitute_element_var("x", "y");
        // The binder must have been renamed: the free `y` cannot be captured.
        assert!(g.free_element_vars().contains("y"));
        let printed = g.to_string();
        let reparsed = parse_formula(&printed, &sig).unwrap();
        assert_eq!(reparsed, g);
    }
}
