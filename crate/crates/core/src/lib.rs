//! Saturation prover workbench.
//!
//! The crate is organized around a small symbolic kernel ([`logic`]) with
//! everything else layered on top: CNF parsing ([`tptp`]), watchlist
//! subsumption indexing ([`indexing`]), multi-watchlist progress tracking
//! ([`proofwatch`]), clause featurization ([`features`]), a gradient-boosted
//! tree learner ([`learner`]), watchlist subset selection ([`selection`]),
//! and the given-clause search loop itself ([`saturation`]).

pub mod features;
pub mod indexing;
pub mod learner;
pub mod logic;
pub mod proofwatch;
pub mod saturation;
pub mod selection;
pub mod tptp;

pub use logic::{Clause, ClauseId, Literal, Origin, Rule, Substitution, Sym, SymbolTable, Term, Var};
