//! Logic of two orders on permutations, executable at desk scale.
//!
//! A permutation is modelled as a finite structure with two linear orders:
//! `<1` for positions and `<2` for values. This crate provides
//!
//! * [`perm`] — permutation values, pattern containment (classical and
//!   vincular), statistics and structural operations,
//! * [`logic`] — signatures, finite relational structures and an MSO
//!   formula AST with a parser and printer,
//! * [`eval`] — a memoizing brute-force MSO evaluator,
//! * [`transform`] — formula-to-formula compilers (relativization, merges,
//!   modular counting, cardinality expansion, word simulation and the
//!   incidence-graph interpretation),
//! * [`construct`] — concrete witness permutations and structures (skew
//!   towers `pi_kl`, spirals, labeled incidence structures, gridding
//!   matrices, tree-width),
//! * [`reduce`] — the graph-to-permutation encoder with its sentence
//!   translation, decoder and track-closure semantics,
//! * [`ef`] — an exact solver for k-move Ehrenfeucht–Fraïssé games,
//! * [`merge`] — admissible 2-colorings certifying membership in
//!   `Av(alpha) ⊙ Av(alpha)`.
//!
//! Everything is immutable after construction and safe to share across
//! threads; all operations are pure functions.

pub mod construct;
pub mod ef;
pub mod eval;
pub mod graph;
pub mod logic;
pub mod merge;
pub mod perm;
pub mod reduce;
pub mod sentences;
pub mod transform;
