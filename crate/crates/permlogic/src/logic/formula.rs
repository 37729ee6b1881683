//! MSO abstract syntax: element variables are lowercase, set variables
//! uppercase; `card[q,r](X)` is a first-class atom.

use std::collections::BTreeSet;
use std::fmt;

/// Returns true when `name` denotes a set variable, i.e. its first
/// alphabetic character is uppercase. Generated names may start with `_`.
pub fn is_set_var(name: &str) -> bool {
    name.chars().find(|c| c.is_ascii_alphabetic()).is_some_and(|c| c.is_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Relational atom `R(x1, ..., xk)`; order atoms print infix.
    Atom { rel: String, args: Vec<String> },
    Equal(String, String),
    /// `x in X`
    Member { element: String, set: String },
    /// `card[q,r](X)`: true iff `|X| ≡ q (mod r)`.
    Card { q: u32, r: u32, set: String },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists { var: String, body: Box<Formula> },
    Forall { var: String, body: Box<Formula> },
    ExistsSet { var: String, body: Box<Formula> },
    ForallSet { var: String, body: Box<Formula> },
}

/// Static facts about a formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaInfo {
    pub free_element_vars: BTreeSet<String>,
    pub free_set_vars: BTreeSet<String>,
    /// Atoms have depth 0, negation is transparent, binary connectives take
    /// the maximum, and every quantifier (element or set) adds 1.
    pub quantifier_depth: usize,
    pub node_count: usize,
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: Vec<&str>) -> Formula {
        Formula::Atom { rel: rel.into(), args: args.into_iter().map(String::from).collect() }
    }

    pub fn equal(a: &str, b: &str) -> Formula {
        Formula::Equal(a.into(), b.into())
    }

    pub fn member(element: &str, set: &str) -> Formula {
        Formula::Member { element: element.into(), set: set.into() }
    }

    pub fn card(q: u32, r: u32, set: &str) -> Formula {
        Formula::Card { q, r, set: set.into() }
    }

    #[allow(clippy::should_implement_trait)] // builder, used as Formula::not
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-associated conjunction; panics on an empty list.
    pub fn and_all(fs: Vec<Formula>) -> Formula {
        fs.into_iter().reduce(Formula::and).expect("non-empty conjunction")
    }

    /// Left-associated disjunction; panics on an empty list.
    pub fn or_all(fs: Vec<Formula>) -> Formula {
        fs.into_iter().reduce(Formula::or).expect("non-empty disjunction")
    }

    pub fn exists(var: &str, body: Formula) -> Formula {
        Formula::Exists { var: var.into(), body: Box::new(body) }
    }

    pub fn forall(var: &str, body: Formula) -> Formula {
        Formula::Forall { var: var.into(), body: Box::new(body) }
    }

    pub fn exists_set(var: &str, body: Formula) -> Formula {
        Formula::ExistsSet { var: var.into(), body: Box::new(body) }
    }

    pub fn forall_set(var: &str, body: Formula) -> Formula {
        Formula::ForallSet { var: var.into(), body: Box::new(body) }
    }

    /// Existentially quantifies a list of element variables around `body`.
    pub fn exists_all(vars: &[&str], body: Formula) -> Formula {
        vars.iter().rev().fold(body, |b, v| Formula::exists(v, b))
    }

    pub fn forall_all(vars: &[&str], body: Formula) -> Formula {
        vars.iter().rev().fold(body, |b, v| Formula::forall(v, b))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom { .. } | Formula::Equal(..) | Formula::Member { .. } | Formula::Card { .. } => vec![],
            Formula::Not(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                vec![a, b]
            }
            Formula::Exists { body, .. }
            | Formula::Forall { body, .. }
            | Formula::ExistsSet { body, .. }
            | Formula::ForallSet { body, .. } => vec![body],
        }
    }

    pub fn analyze(&self) -> FormulaInfo {
        let mut info = FormulaInfo {
            free_element_vars: BTreeSet::new(),
            free_set_vars: BTreeSet::new(),
            quantifier_depth: 0,
            node_count: 0,
        };
        fn walk(f: &Formula, info: &mut FormulaInfo) -> usize {
            info.node_count += 1;
            match f {
                Formula::Atom { args, .. } => {
                    for a in args {
                        info.free_element_vars.insert(a.clone());
                    }
                    0
                }
                Formula::Equal(a, b) => {
                    info.free_element_vars.insert(a.clone());
                    info.free_element_vars.insert(b.clone());
                    0
                }
                Formula::Member { element, set } => {
                    info.free_element_vars.insert(element.clone());
                    info.free_set_vars.insert(set.clone());
                    0
                }
                Formula::Card { set, .. } => {
                    info.free_set_vars.insert(set.clone());
                    0
                }
                Formula::Not(a) => walk(a, info),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::Iff(a, b) => walk(a, info).max(walk(b, info)),
                Formula::Exists { var, body } | Formula::Forall { var, body } => {
                    let free_before = info.free_element_vars.contains(var);
                    let d = walk(body, info);
                    if !free_before {
                        info.free_element_vars.remove(var);
                    }
                    d + 1
                }
                Formula::ExistsSet { var, body } | Formula::ForallSet { var, body } => {
                    let free_before = info.free_set_vars.contains(var);
                    let d = walk(body, info);
                    if !free_before {
                        info.free_set_vars.remove(var);
                    }
                    d + 1
                }
            }
        }
        info.quantifier_depth = walk(self, &mut info);
        info
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn free_element_vars(&self) -> BTreeSet<String> {
        self.analyze().free_element_vars
    }

    pub fn free_set_vars(&self) -> BTreeSet<String> {
        self.analyze().free_set_vars
    }

    pub fn is_sentence(&self) -> bool {
        let info = self.analyze();
        info.free_element_vars.is_empty() && info.free_set_vars.is_empty()
    }

    /// Every variable name occurring anywhere (free or bound).
    pub fn all_var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn walk(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Atom { args, .. } => out.extend(args.iter().cloned()),
                Formula::Equal(a, b) => {
                    out.insert(a.clone());
                    out.insert(b.clone());
                }
                Formula::Member { element, set } => {
                    out.insert(element.clone());
                    out.insert(set.clone());
                }
                Formula::Card { set, .. } => {
                    out.insert(set.clone());
                }
                Formula::Exists { var, body }
                | Formula::Forall { var, body }
                | Formula::ExistsSet { var, body }
                | Formula::ForallSet { var, body } => {
                    out.insert(var.clone());
                    walk(body, out);
                }
                _ => {
                    for c in f.children() {
                        walk(c, out);
                    }
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Whether `name` occurs as a bound set variable.
    pub fn binds_set_var(&self, name: &str) -> bool {
        match self {
            Formula::ExistsSet { var, body } | Formula::ForallSet { var, body } => {
                var == name || body.binds_set_var(name)
            }
            _ => self.children().iter().any(|c| c.binds_set_var(name)),
        }
    }

    /// All relation symbols used by atoms.
    pub fn relation_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn walk(f: &Formula, out: &mut BTreeSet<String>) {
            if let Formula::Atom { rel, .. } = f {
                out.insert(rel.clone());
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn contains_card_atom(&self) -> bool {
        matches!(self, Formula::Card { .. }) || self.children().iter().any(|c| c.contains_card_atom())
    }

    /// Capture-avoiding substitution of the free element variable `from` by
    /// the element variable `to`. Binders that would capture `to` are
    /// renamed with a fresh `_g` name first.
    pub fn substitute_element_var(&self, from: &str, to: &str) -> Formula {
        let mut avoid = self.all_var_names();
        avoid.insert(to.to_string());
        avoid.insert(from.to_string());
        let mut counter = 0usize;
        self.subst(from, to, &mut avoid, &mut counter)
    }

    fn subst(
        &self,
        from: &str,
        to: &str,
        avoid: &mut BTreeSet<String>,
        counter: &mut usize,
    ) -> Formula {
        let swap = |name: &str| -> String {
            if name == from {
                to.to_string()
            } else {
                name.to_string()
            }
        };
        match self {
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(|a| swap(a)).collect(),
            },
            Formula::Equal(a, b) => Formula::Equal(swap(a), swap(b)),
            Formula::Member { element, set } => {
                Formula::Member { element: swap(element), set: set.clone() }
            }
            Formula::Card { .. } => self.clone(),
            Formula::Not(a) => Formula::not(a.subst(from, to, avoid, counter)),
            Formula::And(a, b) => {
                Formula::and(a.subst(from, to, avoid, counter), b.subst(from, to, avoid, counter))
            }
            Formula::Or(a, b) => {
                Formula::or(a.subst(from, to, avoid, counter), b.subst(from, to, avoid, counter))
            }
            Formula::Implies(a, b) => {
                Formula::implies(a.subst(from, to, avoid, counter), b.subst(from, to, avoid, counter))
            }
            Formula::Iff(a, b) => {
                Formula::iff(a.subst(from, to, avoid, counter), b.subst(from, to, avoid, counter))
            }
            Formula::Exists { var, body } | Formula::Forall { var, body } => {
                let make = |v: String, b: Formula| match self {
                    Formula::Exists { .. } => Formula::Exists { var: v, body: Box::new(b) },
                    _ => Formula::Forall { var: v, body: Box::new(b) },
                };
                if var == from {
                    // `from` is shadowed below; nothing free to replace.
                    self.clone()
                } else if var == to {
                    // Rename the binder out of the way first.
                    let fresh = loop {
                        let cand = format!("_g{counter}");
                        *counter += 1;
                        if !avoid.contains(&cand) {
                            avoid.insert(cand.clone());
                            break cand;
                        }
                    };
                    let renamed = body.subst(var, &fresh, avoid, counter);
                    make(fresh, renamed.subst(from, to, avoid, counter))
                } else {
                    make(var.clone(), body.subst(from, to, avoid, counter))
                }
            }
            Formula::ExistsSet { var, body } => Formula::ExistsSet {
                var: var.clone(),
                body: Box::new(body.subst(from, to, avoid, counter)),
            },
            Formula::ForallSet { var, body } => Formula::ForallSet {
                var: var.clone(),
                body: Box::new(body.subst(from, to, avoid, counter)),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists { .. }
            | Formula::Forall { .. }
            | Formula::ExistsSet { .. }
            | Formula::ForallSet { .. } => 0,
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(..) => 5,
            _ => 6,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_inner(f)?;
            write!(f, ")")
        } else {
            self.fmt_inner(f)
        }
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { rel, args } => {
                if rel.starts_with('<') && args.len() == 2 {
                    write!(f, "{} {} {}", args[0], rel, args[1])
                } else {
                    write!(f, "{rel}({})", args.join(","))
                }
            }
            Formula::Equal(a, b) => write!(f, "{a} = {b}"),
            Formula::Member { element, set } => write!(f, "{element} in {set}"),
            Formula::Card { q, r, set } => write!(f, "card[{q},{r}]({set})"),
            Formula::Not(a) => {
                write!(f, "!")?;
                a.fmt_child(f, 5)
            }
            Formula::And(a, b) => {
                a.fmt_child(f, 4)?;
                write!(f, " & ")?;
                b.fmt_child(f, 5)
            }
            Formula::Or(a, b) => {
                a.fmt_child(f, 3)?;
                write!(f, " | ")?;
                b.fmt_child(f, 4)
            }
            Formula::Implies(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, " -> ")?;
                b.fmt_child(f, 3)
            }
            Formula::Iff(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, " <-> ")?;
                b.fmt_child(f, 2)
            }
            Formula::Exists { var, body } => {
                write!(f, "E {var}. ")?;
                body.fmt_inner(f)
            }
            Formula::Forall { var, body } => {
                write!(f, "A {var}. ")?;
                body.fmt_inner(f)
            }
            Formula::ExistsSet { var, body } => {
                write!(f, "ES {var}. ")?;
                body.fmt_inner(f)
            }
            Formula::ForallSet { var, body } => {
                write!(f, "AS {var}. ")?;
                body.fmt_inner(f)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_inner(f)
    }
}
