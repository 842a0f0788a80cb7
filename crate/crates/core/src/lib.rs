//! Proof-artifact toolkit: a miniature dependent-type kernel, extraction of
//! self-supervised training records from proof terms, task encoding,
//! hash-based dataset splitting, best-first proof search with pluggable
//! oracles, evaluation and contamination scanning.

pub mod eval;
pub mod extract;
pub mod fixtures;
pub mod kernel;
pub mod scan;
pub mod search;
pub mod split;
pub mod tasks;
