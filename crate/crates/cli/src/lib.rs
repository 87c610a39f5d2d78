//! Harness library behind the `hintgrind` binary: corpus generation, single
//! prove runs, the index benchmark, training-data export, model training,
//! watchlist selection, and the looping prove/learn experiment.

pub mod corpus;
pub mod experiment;
pub mod ops;
pub mod report;
pub mod session;
