//! Brute-force MSO satisfaction over finite structures.
//!
//! Element quantifiers range over the domain, set quantifiers over all
//! subsets (enumerated by increasing population count so that sparse
//! witnesses are found early). Results of subformulas are memoized keyed by
//! the subformula's identity and the restriction of the assignment to its
//! free variables; structurally equal subtrees are shared, which is what
//! makes the compiled counting sentences (with their many repeated inner
//! copies) evaluable at desk scale.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::logic::{is_set_var, Formula, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable `{0}` is not bound by the assignment")]
    UnboundVariable(String),
    #[error("relation symbol `{symbol}` does not match the structure's signature: {detail}")]
    SignatureMismatch { symbol: String, detail: String },
    #[error("membership atoms are not allowed over signature {0}")]
    MembershipNotAllowed(String),
    #[error("cardinality atoms are not allowed over signature {0}")]
    CardNotAllowed(String),
    #[error("variable `{0}` is used both as an element and as a set variable")]
    MixedVariableKind(String),
    #[error("domain of size {0} is too large for set variables (max 127)")]
    DomainTooLargeForSets(usize),
    #[error("assignment value {0} outside domain 1..={1}")]
    AssignmentOutOfDomain(usize, usize),
    #[error("node budget exceeded after {0} nodes")]
    BudgetExceeded(u64),
    #[error("free element variables {actual:?} do not match the requested tuple variables {requested:?}")]
    TupleVarsMismatch { requested: Vec<String>, actual: Vec<String> },
    #[error("formula has free set variables {0:?}")]
    FreeSetVars(Vec<String>),
}

/// Bindings for the free variables of a formula. Sets are subsets of the
/// structure's domain `1..=n`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    elements: BTreeMap<String, usize>,
    sets: BTreeMap<String, BTreeSet<usize>>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn bind_element(mut self, var: &str, value: usize) -> Self {
        self.elements.insert(var.to_string(), value);
        self
    }

    pub fn bind_set(mut self, var: &str, values: impl IntoIterator<Item = usize>) -> Self {
        self.sets.insert(var.to_string(), values.into_iter().collect());
        self
    }

    pub fn elements(&self) -> &BTreeMap<String, usize> {
        &self.elements
    }

    pub fn sets(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.sets
    }
}

type NodeId = u32;
type VarId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Atom { rel: u32, args: Vec<VarId> },
    Equal(VarId, VarId),
    Member(VarId, VarId),
    Card { q: u32, r: u32, set: VarId },
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Iff(NodeId, NodeId),
    Exists(VarId, NodeId),
    Forall(VarId, NodeId),
    ExistsSet(VarId, NodeId),
    ForallSet(VarId, NodeId),
}

enum RelTable {
    Unary(Vec<bool>),
    Binary(Vec<bool>),
    General(std::collections::HashSet<Vec<usize>>),
}

/// A prepared evaluator for one `(structure, formula)` pair. The memo cache
/// is private to the evaluator; independent evaluators may run in parallel.
pub struct Evaluator<'a> {
    structure: &'a Structure,
    n: usize,
    nodes: Vec<Node>,
    root: NodeId,
    free_vars: Vec<Vec<VarId>>,
    memoize: Vec<bool>,
    var_names: Vec<String>,
    var_is_set: Vec<bool>,
    rels: Vec<RelTable>,
    env: Vec<Option<u128>>,
    memo: HashMap<(NodeId, Vec<u128>), bool>,
    nodes_evaluated: u64,
    budget: u64,
}

struct Builder<'a> {
    structure: &'a Structure,
    nodes: Vec<Node>,
    interned: HashMap<Node, NodeId>,
    refcount: Vec<u32>,
    vars: HashMap<String, VarId>,
    var_names: Vec<String>,
    var_is_set: Vec<bool>,
    rel_ids: HashMap<String, u32>,
    rel_names: Vec<String>,
}

impl<'a> Builder<'a> {
    fn var(&mut self, name: &str, set: bool) -> Result<VarId, EvalError> {
        if let Some(&id) = self.vars.get(name) {
            if self.var_is_set[id as usize] != set {
                return Err(EvalError::MixedVariableKind(name.to_string()));
            }
            return Ok(id);
        }
        let id = self.var_names.len() as VarId;
        self.vars.insert(name.to_string(), id);
        self.var_names.push(name.to_string());
        self.var_is_set.push(set);
        Ok(id)
    }

    fn rel(&mut self, name: &str, arity: usize) -> Result<u32, EvalError> {
        match self.structure.signature().arity(name) {
            None => Err(EvalError::SignatureMismatch {
                symbol: name.to_string(),
                detail: format!("not declared in signature {}", self.structure.signature().name()),
            }),
            Some(a) if a != arity => Err(EvalError::SignatureMismatch {
                symbol: name.to_string(),
                detail: format!("declared arity {a}, used with {arity} arguments"),
            }),
            Some(_) => {
                if let Some(&id) = self.rel_ids.get(name) {
                    return Ok(id);
                }
                let id = self.rel_names.len() as u32;
                self.rel_ids.insert(name.to_string(), id);
                self.rel_names.push(name.to_string());
                Ok(id)
            }
        }
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.interned.get(&node) {
            self.refcount[id as usize] += 1;
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.refcount.push(1);
        self.interned.insert(node, id);
        id
    }

    fn build(&mut self, f: &Formula) -> Result<NodeId, EvalError> {
        let sig = self.structure.signature();
        let node = match f {
            Formula::Atom { rel, args } => {
                let rel = self.rel(rel, args.len())?;
                let args = args
                    .iter()
                    .map(|a| self.var(a, false))
                    .collect::<Result<Vec<_>, _>>()?;
                Node::Atom { rel, args }
            }
            Formula::Equal(a, b) => Node::Equal(self.var(a, false)?, self.var(b, false)?),
            Formula::Member { element, set } => {
                if !sig.set_atoms_allowed() {
                    return Err(EvalError::MembershipNotAllowed(sig.name().to_string()));
                }
                Node::Member(self.var(element, false)?, self.var(set, true)?)
            }
            Formula::Card { q, r, set } => {
                if !sig.card_atoms_allowed() {
                    return Err(EvalError::CardNotAllowed(sig.name().to_string()));
                }
                Node::Card { q: *q, r: *r, set: self.var(set, true)? }
            }
            Formula::Not(a) => Node::Not(self.build(a)?),
            Formula::And(a, b) => Node::And(self.build(a)?, self.build(b)?),
            Formula::Or(a, b) => Node::Or(self.build(a)?, self.build(b)?),
            Formula::Implies(a, b) => Node::Implies(self.build(a)?, self.build(b)?),
            Formula::Iff(a, b) => Node::Iff(self.build(a)?, self.build(b)?),
            Formula::Exists { var, body } => {
                let v = self.var(var, false)?;
                Node::Exists(v, self.build(body)?)
            }
            Formula::Forall { var, body } => {
                let v = self.var(var, false)?;
                Node::Forall(v, self.build(body)?)
            }
            Formula::ExistsSet { var, body } => {
                let v = self.var(var, true)?;
                Node::ExistsSet(v, self.build(body)?)
            }
            Formula::ForallSet { var, body } => {
                let v = self.var(var, true)?;
                Node::ForallSet(v, self.build(body)?)
            }
        };
        Ok(self.intern(node))
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(structure: &'a Structure, formula: &Formula) -> Result<Self, EvalError> {
        let mut b = Builder {
            structure,
            nodes: Vec::new(),
            interned: HashMap::new(),
            refcount: Vec::new(),
            vars: HashMap::new(),
            var_names: Vec::new(),
            var_is_set: Vec::new(),
            rel_ids: HashMap::new(),
            rel_names: Vec::new(),
        };
        let root = b.build(formula)?;
        let n = structure.domain_size();
        if b.var_is_set.iter().any(|&s| s) && n > 127 {
            return Err(EvalError::DomainTooLargeForSets(n));
        }

        // Free variables per node, computable in id order because children
        // are interned before their parents.
        let mut free_vars: Vec<Vec<VarId>> = Vec::with_capacity(b.nodes.len());
        for node in &b.nodes {
            let mut fv: BTreeSet<VarId> = BTreeSet::new();
            match node {
                Node::Atom { args, .. } => fv.extend(args.iter().copied()),
                Node::Equal(a, c) => {
                    fv.insert(*a);
                    fv.insert(*c);
                }
                Node::Member(e, s) => {
                    fv.insert(*e);
                    fv.insert(*s);
                }
                Node::Card { set, .. } => {
                    fv.insert(*set);
                }
                Node::Not(a) => fv.extend(free_vars[*a as usize].iter().copied()),
                Node::And(a, c) | Node::Or(a, c) | Node::Implies(a, c) | Node::Iff(a, c) => {
                    fv.extend(free_vars[*a as usize].iter().copied());
                    fv.extend(free_vars[*c as usize].iter().copied());
                }
                Node::Exists(v, body)
                | Node::Forall(v, body)
                | Node::ExistsSet(v, body)
                | Node::ForallSet(v, body) => {
                    fv.extend(free_vars[*body as usize].iter().copied());
                    fv.remove(v);
                }
            }
            free_vars.push(fv.into_iter().collect());
        }

        // Subtree sizes, well-defined on the dag (shared nodes count once
        // per occurrence).
        let mut size: Vec<u64> = Vec::with_capacity(b.nodes.len());
        for node in &b.nodes {
            let s = match node {
                Node::Atom { .. } | Node::Equal(..) | Node::Member(..) | Node::Card { .. } => 1,
                Node::Not(a) => 1 + size[*a as usize],
                Node::And(a, c) | Node::Or(a, c) | Node::Implies(a, c) | Node::Iff(a, c) => {
                    1 + size[*a as usize] + size[*c as usize]
                }
                Node::Exists(_, a) | Node::Forall(_, a) | Node::ExistsSet(_, a) | Node::ForallSet(_, a) => {
                    1 + size[*a as usize]
                }
            };
            size.push(s);
        }

        // Memoize quantifier and shared nodes whose subtrees are large
        // enough that a cache probe beats recomputation.
        let memoize: Vec<bool> = b
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                if size[i] <= 32 {
                    return false;
                }
                match node {
                    Node::Exists(..) | Node::Forall(..) | Node::ExistsSet(..) | Node::ForallSet(..) => {
                        true
                    }
                    _ => b.refcount[i] > 1,
                }
            })
            .collect();

        // Dense relation tables.
        let mut rels = Vec::with_capacity(b.rel_names.len());
        for name in &b.rel_names {
            let arity = structure.signature().arity(name).unwrap();
            let table = match arity {
                1 => {
                    let mut t = vec![false; n + 1];
                    for tuple in structure.tuples(name) {
                        t[tuple[0]] = true;
                    }
                    RelTable::Unary(t)
                }
                2 => {
                    let mut t = vec![false; (n + 1) * (n + 1)];
                    for tuple in structure.tuples(name) {
                        t[tuple[0] * (n + 1) + tuple[1]] = true;
                    }
                    RelTable::Binary(t)
                }
                _ => RelTable::General(structure.tuples(name).cloned().collect()),
            };
            rels.push(table);
        }

        Ok(Evaluator {
            structure,
            n,
            nodes: b.nodes,
            root,
            free_vars,
            memoize,
            var_names: b.var_names,
            var_is_set: b.var_is_set,
            rels,
            env: Vec::new(),
            memo: HashMap::new(),
            nodes_evaluated: 0,
            budget: u64::MAX,
        })
    }

    /// Aborts with [`EvalError::BudgetExceeded`] once more than `budget`
    /// nodes have been visited across all runs of this evaluator.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn nodes_evaluated(&self) -> u64 {
        self.nodes_evaluated
    }

    pub fn structure(&self) -> &Structure {
        self.structure
    }

    /// Evaluates under the given assignment of the root's free variables.
    pub fn run(&mut self, assignment: &Assignment) -> Result<bool, EvalError> {
        self.env = vec![None; self.var_names.len()];
        for &v in &self.free_vars[self.root as usize].clone() {
            let name = &self.var_names[v as usize];
            if self.var_is_set[v as usize] {
                let Some(set) = assignment.sets.get(name) else {
                    return Err(EvalError::UnboundVariable(name.clone()));
                };
                let mut mask: u128 = 0;
                for &x in set {
                    if x == 0 || x > self.n {
                        return Err(EvalError::AssignmentOutOfDomain(x, self.n));
                    }
                    mask |= 1u128 << (x - 1);
                }
                self.env[v as usize] = Some(mask);
            } else {
                let Some(&x) = assignment.elements.get(name) else {
                    return Err(EvalError::UnboundVariable(name.clone()));
                };
                if x == 0 || x > self.n {
                    return Err(EvalError::AssignmentOutOfDomain(x, self.n));
                }
                self.env[v as usize] = Some(x as u128);
            }
        }
        self.eval(self.root)
    }

    fn eval(&mut self, id: NodeId) -> Result<bool, EvalError> {
        self.nodes_evaluated += 1;
        if self.nodes_evaluated > self.budget {
            return Err(EvalError::BudgetExceeded(self.budget));
        }
        let key = if self.memoize[id as usize] {
            let key: Vec<u128> = self.free_vars[id as usize]
                .iter()
                .map(|&v| self.env[v as usize].expect("free variable bound"))
                .collect();
            if let Some(&cached) = self.memo.get(&(id, key.clone())) {
                return Ok(cached);
            }
            Some(key)
        } else {
            None
        };
        // Leaves are evaluated in place; connective and quantifier nodes
        // copy out their small ids first so recursion can borrow mutably.
        enum Step {
            Done(bool),
            Not(NodeId),
            And(NodeId, NodeId),
            Or(NodeId, NodeId),
            Implies(NodeId, NodeId),
            Iff(NodeId, NodeId),
            Exists(VarId, NodeId),
            Forall(VarId, NodeId),
            ExistsSet(VarId, NodeId),
            ForallSet(VarId, NodeId),
        }
        let step = match &self.nodes[id as usize] {
            Node::Atom { rel, args } => Step::Done(match &self.rels[*rel as usize] {
                RelTable::Unary(t) => t[self.env[args[0] as usize].unwrap() as usize],
                RelTable::Binary(t) => {
                    let a = self.env[args[0] as usize].unwrap() as usize;
                    let b = self.env[args[1] as usize].unwrap() as usize;
                    t[a * (self.n + 1) + b]
                }
                RelTable::General(t) => {
                    let vals: Vec<usize> =
                        args.iter().map(|&v| self.env[v as usize].unwrap() as usize).collect();
                    t.contains(&vals)
                }
            }),
            Node::Equal(a, b) => Step::Done(self.env[*a as usize] == self.env[*b as usize]),
            Node::Member(e, s) => {
                let x = self.env[*e as usize].unwrap() as usize;
                let mask = self.env[*s as usize].unwrap();
                Step::Done(mask >> (x - 1) & 1 == 1)
            }
            Node::Card { q, r, set } => {
                let mask = self.env[*set as usize].unwrap();
                Step::Done(mask.count_ones() % *r == *q)
            }
            Node::Not(a) => Step::Not(*a),
            Node::And(a, b) => Step::And(*a, *b),
            Node::Or(a, b) => Step::Or(*a, *b),
            Node::Implies(a, b) => Step::Implies(*a, *b),
            Node::Iff(a, b) => Step::Iff(*a, *b),
            Node::Exists(v, body) => Step::Exists(*v, *body),
            Node::Forall(v, body) => Step::Forall(*v, *body),
            Node::ExistsSet(v, body) => Step::ExistsSet(*v, *body),
            Node::ForallSet(v, body) => Step::ForallSet(*v, *body),
        };
        let result = match step {
            Step::Done(b) => b,
            Step::Not(a) => !self.eval(a)?,
            Step::And(a, b) => self.eval(a)? && self.eval(b)?,
            Step::Or(a, b) => self.eval(a)? || self.eval(b)?,
            Step::Implies(a, b) => !self.eval(a)? || self.eval(b)?,
            Step::Iff(a, b) => self.eval(a)? == self.eval(b)?,
            Step::Exists(v, body) => {
                let saved = self.env[v as usize];
                let mut found = false;
                for x in 1..=self.n {
                    self.env[v as usize] = Some(x as u128);
                    if self.eval(body)? {
                        found = true;
                        break;
                    }
                }
                self.env[v as usize] = saved;
                found
            }
            Step::Forall(v, body) => {
                let saved = self.env[v as usize];
                let mut holds = true;
                for x in 1..=self.n {
                    self.env[v as usize] = Some(x as u128);
                    if !self.eval(body)? {
                        holds = false;
                        break;
                    }
                }
                self.env[v as usize] = saved;
                holds
            }
            Step::ExistsSet(v, body) => {
                let saved = self.env[v as usize];
                let mut found = false;
                let mut it = SubsetsByPopcount::new(self.n);
                while let Some(mask) = it.next() {
                    self.env[v as usize] = Some(mask);
                    if self.eval(body)? {
                        found = true;
                        break;
                    }
                }
                self.env[v as usize] = saved;
                found
            }
            Step::ForallSet(v, body) => {
                let saved = self.env[v as usize];
                let mut holds = true;
                let mut it = SubsetsByPopcount::new(self.n);
                while let Some(mask) = it.next() {
                    self.env[v as usize] = Some(mask);
                    if !self.eval(body)? {
                        holds = false;
                        break;
                    }
                }
                self.env[v as usize] = saved;
                holds
            }
        };
        if let Some(key) = key {
            self.memo.insert((id, key), result);
        }
        Ok(result)
    }
}

/// Enumerates the subsets of `{0, ..., n-1}` as bitmasks, by increasing
/// population count and numerically within each count.
struct SubsetsByPopcount {
    n: usize,
    k: usize,
    current: Option<u128>,
}

impl SubsetsByPopcount {
    fn new(n: usize) -> Self {
        SubsetsByPopcount { n, k: 0, current: Some(0) }
    }

    fn next(&mut self) -> Option<u128> {
        let out = self.current?;
        self.current = self.advance(out);
        Some(out)
    }

    fn advance(&mut self, prev: u128) -> Option<u128> {
        let n = self.n;
        if self.k > 0 {
            // Gosper's hack within the current popcount class.
            let c = prev & prev.wrapping_neg();
            let r = prev + c;
            if r >> n == 0 {
                let next = (((prev ^ r) >> 2) / c) | r;
                if next >> n == 0 {
                    return Some(next);
                }
            }
        }
        // Move to the next popcount class.
        self.k += 1;
        if self.k > n {
            return None;
        }
        Some((1u128 << self.k) - 1)
    }
}

/// Evaluates `formula` on `structure` under `assignment`.
pub fn evaluate(structure: &Structure, formula: &Formula, assignment: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(structure, formula)?.run(assignment)
}

/// Evaluates a sentence under the empty assignment.
pub fn satisfies(structure: &Structure, sentence: &Formula) -> Result<bool, EvalError> {
    evaluate(structure, sentence, &Assignment::new())
}

/// Counts ordered tuples (with repetition) over the domain satisfying
/// `formula`, whose free element variables must be exactly `vars` and which
/// must have no free set variables.
pub fn count_tuples(structure: &Structure, formula: &Formula, vars: &[&str]) -> Result<u64, EvalError> {
    let info = formula.analyze();
    if !info.free_set_vars.is_empty() {
        return Err(EvalError::FreeSetVars(info.free_set_vars.into_iter().collect()));
    }
    let mut requested: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
    requested.sort();
    requested.dedup();
    let actual: Vec<String> = info.free_element_vars.iter().cloned().collect();
    if requested != actual || requested.len() != vars.len() {
        return Err(EvalError::TupleVarsMismatch {
            requested: vars.iter().map(|s| s.to_string()).collect(),
            actual,
        });
    }
    for v in vars {
        if is_set_var(v) {
            return Err(EvalError::MixedVariableKind(v.to_string()));
        }
    }

    let mut ev = Evaluator::new(structure, formula)?;
    let n = structure.domain_size();
    let k = vars.len();
    if k == 0 {
        return Ok(ev.run(&Assignment::new())? as u64);
    }
    if n == 0 {
        return Ok(0);
    }
    let var_ids: Vec<VarId> = vars
        .iter()
        .map(|v| ev.var_names.iter().position(|name| name == v).unwrap() as VarId)
        .collect();
    ev.env = vec![None; ev.var_names.len()];
    let mut tuple = vec![1usize; k];
    let mut count = 0u64;
    loop {
        for (i, &v) in var_ids.iter().enumerate() {
            ev.env[v as usize] = Some(tuple[i] as u128);
        }
        if ev.eval(ev.root)? {
            count += 1;
        }
        // Odometer.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(count);
            }
            i -= 1;
            if tuple[i] < n {
                tuple[i] += 1;
                break;
            }
            tuple[i] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Signature};
    use crate::perm::{all_permutations, Permutation};

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn toto(text: &str) -> Formula {
        parse_formula(text, &Signature::toto()).unwrap()
    }

    fn skew_merged_text() -> &'static str {
        "ES X. ES Y. (A x. (x in X | x in Y) & !(x in X & x in Y)) \
         & (A x. A y. (x in X & y in X) -> (x <1 y <-> x <2 y)) \
         & (A x. A y. (x in Y & y in Y) -> (x <1 y <-> y <2 x))"
    }

    #[test]
    fn trivial_sentences() {
        let s = Structure::of_permutation(&perm("1"));
        assert!(satisfies(&s, &toto("E x. x = x")).unwrap());
        assert!(!satisfies(&s, &toto("E x. E y. !(x = y)")).unwrap());
        let empty = Structure::of_permutation(&Permutation::empty());
        assert!(!satisfies(&empty, &toto("E x. x = x")).unwrap());
        assert!(satisfies(&empty, &toto("A x. x = x")).unwrap());
    }

    #[test]
    fn skew_merged_examples() {
        let f = toto(skew_merged_text());
        assert!(satisfies(&Structure::of_permutation(&perm("2413")), &f).unwrap());
        assert!(!satisfies(&Structure::of_permutation(&perm("2143")), &f).unwrap());
    }

    #[test]
    fn count_inversions() {
        let inv = toto("x <1 y & y <2 x");
        let s321 = Structure::of_permutation(&perm("321"));
        assert_eq!(count_tuples(&s321, &inv, &["x", "y"]).unwrap(), 3);
        let id = Structure::of_permutation(&Permutation::identity(5));
        assert_eq!(count_tuples(&id, &inv, &["x", "y"]).unwrap(), 0);
        let s21 = Structure::of_permutation(&perm("21"));
        assert_eq!(count_tuples(&s21, &inv, &["x", "y"]).unwrap(), 1);
        // Variable mismatch errors.
        assert!(count_tuples(&s21, &inv, &["x"]).is_err());
        assert!(count_tuples(&s21, &inv, &["x", "z"]).is_err());
    }

    #[test]
    fn unbound_and_mismatch_errors() {
        let s = Structure::of_permutation(&perm("21"));
        let f = toto("x <1 y");
        assert!(matches!(
            evaluate(&s, &f, &Assignment::new().bind_element("x", 1)),
            Err(EvalError::UnboundVariable(_))
        ));
        let g = parse_formula("E x. E y. E(x,y)", &Signature::graph()).unwrap();
        assert!(matches!(
            satisfies(&s, &g),
            Err(EvalError::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn card_atom_semantics() {
        let s = Structure::of_permutation(&perm("3142"));
        let f = toto("card[0,2](X)");
        for mask in 0u32..16 {
            let set: Vec<usize> = (1..=4).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let expected = set.len() % 2 == 0;
            let asg = Assignment::new().bind_set("X", set);
            assert_eq!(evaluate(&s, &f, &asg).unwrap(), expected);
        }
    }

    #[test]
    fn quantifier_duality_exhaustive_small() {
        let bodies = ["x <1 y & y <2 x", "x <2 y | x = y", "x <1 y -> x <2 y"];
        for body in bodies {
            let ex = toto(&format!("E y. {body}"));
            let duals = toto(&format!("!(A y. !({body}))"));
            for p in all_permutations(4) {
                let s = Structure::of_permutation(&p);
                for x in 1..=4 {
                    let asg = Assignment::new().bind_element("x", x);
                    assert_eq!(
                        evaluate(&s, &ex, &asg).unwrap(),
                        evaluate(&s, &duals, &asg).unwrap(),
                        "perm {p}, x={x}, body {body}"
                    );
                }
            }
        }
    }

    #[test]
    fn isomorphism_invariance() {
        // Relabeling the domain of the structure must not change any
        // sentence's truth value.
        let sentences = [
            toto("E x. A y. x = y | x <2 y"),
            toto(skew_merged_text()),
            toto("E x. E y. x <1 y & y <2 x"),
        ];
        let p = perm("25314");
        let n = p.len();
        let base = Structure::of_permutation(&p);
        // Relabel i -> n + 1 - i.
        let mut relabeled = Structure::new(Signature::toto(), n);
        for rel in ["<1", "<2"] {
            for t in base.tuples(rel) {
                relabeled.insert(rel, vec![n + 1 - t[0], n + 1 - t[1]]).unwrap();
            }
        }
        for f in &sentences {
            assert_eq!(satisfies(&base, f).unwrap(), satisfies(&relabeled, f).unwrap());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = Permutation::identity(6);
        let s = Structure::of_permutation(&p);
        let f = toto(skew_merged_text());
        let mut ev = Evaluator::new(&s, &f).unwrap().with_budget(50);
        assert!(matches!(ev.run(&Assignment::new()), Err(EvalError::BudgetExceeded(_))));
        let mut ev = Evaluator::new(&s, &f).unwrap();
        assert!(ev.run(&Assignment::new()).unwrap());
        assert!(ev.nodes_evaluated() > 0);
    }

    #[test]
    fn subset_iteration_order() {
        let mut it = SubsetsByPopcount::new(3);
        let mut got = Vec::new();
        while let Some(m) = it.next() {
            got.push(m);
        }
        assert_eq!(got, vec![0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]);
    }

    #[test]
    fn domain_cap_for_sets() {
        let s = Structure::linear_order(130);
        let f = parse_formula("ES X. E x. x in X", &Signature::linear_order()).unwrap();
        assert!(matches!(
            satisfies(&s, &f),
            Err(EvalError::DomainTooLargeForSets(130))
        ));
        // FO formulas are fine on the same structure.
        let g = parse_formula("E x. E y. x < y", &Signature::linear_order()).unwrap();
        assert!(satisfies(&s, &g).unwrap());
    }

    #[test]
    fn mixed_variable_kind_rejected() {
        // Programmatically built formula abusing `x` as set and element.
        let bad = Formula::and(Formula::equal("x", "x"), Formula::member("y", "x"));
        let s = Structure::of_permutation(&perm("21"));
        assert!(matches!(
            Evaluator::new(&s, &bad),
            Err(EvalError::MixedVariableKind(_))
        ));
    }
}
