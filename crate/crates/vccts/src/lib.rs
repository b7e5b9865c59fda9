//! A workbench for VCCTS, a value-passing process calculus whose parallel
//! composition is parameterized by a graph of locations. Processes located at
//! graph vertices communicate along edges; transitions carry multisets of
//! located labels, so actions at unrelated locations can fire simultaneously.
//!
//! The crate is split by concern:
//!
//! * [`symbol`], [`expr`], [`graph`], [`term`] — syntax: symbols with
//!   co-symbols, integer expressions, location graphs, process terms and the
//!   executable located form.
//! * [`canon`] — the guarded-sum canonical forms, recursion unfolding and
//!   validation of executable processes.
//! * [`rename`] — canonical relabeling of locations, used to hash states up
//!   to location bijections.
//! * [`semantics`] — internal reduction, barbs, single- and multi-labelled
//!   localized transitions with residual maps, serialization.
//! * [`equiv`] — bounded weak barbed bisimulation and localized early weak
//!   bisimulation checkers with witness extraction.
//! * [`lang`] — a small multi-threaded imperative language with an
//!   interleaving reference semantics and a data-race detector.
//! * [`translate`] — the compilation of programs and configurations into
//!   located processes, plus the co-simulation harness.
//! * [`memmodel`] — conflict-freedom analysis and the two relaxed-memory
//!   rewrite systems (compiler reorderings and TSO) with closure computation.
//! * [`corpus`] — seeded deterministic generators for random canonical
//!   processes, used by property tests and CLI corpora.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion CLI
//! crate carries parsing, JSON export and file handling.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod canon;
pub mod corpus;
pub mod equiv;
pub mod expr;
pub mod graph;
pub mod lang;
pub mod memmodel;
pub mod rename;
pub mod semantics;
pub mod symbol;
pub mod term;
pub mod translate;

pub use expr::{BExpr, Env, EvalError, Expr};
pub use graph::{Graph, GraphError, Loc};
pub use symbol::Symbol;
pub use term::{Process, Term, Val};
