//! A workbench for first-order logic on finite words with numerical
//! predicates.
//!
//! The crate provides, on top of a small formula language and a brute-force
//! model checker:
//!
//! - unvaried numerical predicates with a finite-degree interface and the
//!   link graph they induce ([`predicates`], [`linkgraph`]);
//! - a compiler rewriting formulas over arbitrary unvaried predicates into
//!   formulas over order, `MSB0`, powers of two and finite-degree
//!   predicates only, via a four-zone layout of the universe ([`workzone`]);
//! - a two-party protocol that evaluates a formula over a split word with a
//!   single bounded message, plus an empirical suffix-class counter
//!   ([`protocol`]);
//! - executable constructions around definability of `MSB0`, set encoding
//!   with a single finite-degree predicate, and counting versus summing
//!   ([`constructions`]).
//!
//! Everything is validated against the [`evaluator`] oracle on small
//! instances. Data-parallel search loops run on rayon by default; disable
//! the `parallel` feature for strictly sequential execution.

pub mod constructions;
pub mod evaluator;
pub mod expr;
pub mod formula;
pub mod generate;
pub mod linkgraph;
pub mod par;
pub mod parse;
pub mod predicates;
pub mod protocol;
pub mod words;
pub mod workzone;
