//! A small library of ready-made formulas used across tests, the CLI and
//! the verification suites.

use crate::logic::{parse_formula, Formula, Signature};

fn toto(text: &str) -> Formula {
    parse_formula(text, &Signature::toto()).expect("built-in formula parses")
}

/// `∀x ∀y (x <1 y → x <2 y)`: the point set is increasing.
pub fn increasing_sentence() -> Formula {
    toto("A x. A y. x <1 y -> x <2 y")
}

/// `∀x ∀y (x <1 y → y <2 x)`: the point set is decreasing.
pub fn decreasing_sentence() -> Formula {
    toto("A x. A y. x <1 y -> y <2 x")
}

/// The skew-merged sentence: a partition into an increasing and a
/// decreasing part exists. Quantifier depth 4.
pub fn skew_merged_sentence() -> Formula {
    toto(
        "ES X. ES Y. (A x. (x in X | x in Y) & !(x in X & x in Y)) \
         & (A x. A y. (x in X & y in X) -> (x <1 y <-> x <2 y)) \
         & (A x. A y. (x in Y & y in Y) -> (x <1 y <-> y <2 x))",
    )
}

/// `x <1 y ∧ y <2 x` with free `x`, `y`: the pair is an inversion.
pub fn inversion_formula() -> Formula {
    toto("x <1 y & y <2 x")
}

/// Free `x`: the point immediately to the right of `x` is below it.
pub fn descent_formula() -> Formula {
    toto("E z. (x <1 z & !(E w. x <1 w & w <1 z)) & z <2 x")
}

/// A fixed corpus of ten two-order sentences, each with at most two order
/// atoms and quantifier depth at most 3.
pub fn toto_corpus() -> Vec<(&'static str, Formula)> {
    vec![
        ("has-inversion", toto("E x. E y. x <1 y & y <2 x")),
        ("has-ascent-pair", toto("E x. E y. x <1 y & x <2 y")),
        ("increasing", increasing_sentence()),
        ("decreasing", decreasing_sentence()),
        ("first-is-lowest", toto("E x. A y. x = y | (x <1 y & x <2 y)")),
        ("at-least-two", toto("E x. E y. !(x = y)")),
        ("singleton-set-exists", toto("ES X. E x. x in X & (A y. y in X -> y = x)")),
        (
            "prefix-closed-set-exists",
            toto("ES X. (E x. x in X) & (A x. x in X -> (A y. y <1 x -> y in X))"),
        ),
        ("leftmost-is-topmost", toto("E x. A y. (y <2 x | y = x) & (x <1 y | x = y)")),
        ("no-value-isolated", toto("A x. E y. y <2 x | x <2 y")),
    ]
}

/// Proper 3-colorability over the graph signature.
pub fn three_colorability_sentence() -> Formula {
    parse_formula(
        "ES X. ES Y. ES Z. (A x. x in X | x in Y | x in Z) \
         & (A x. A y. E(x,y) -> !(x in X & y in X) & !(x in Y & y in Y) & !(x in Z & y in Z))",
        &Signature::graph(),
    )
    .expect("built-in formula parses")
}
