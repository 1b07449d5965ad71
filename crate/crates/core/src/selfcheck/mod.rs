//! Self-check suite: runs the library's verification criteria end to end
//! and reports one pass/fail line per criterion. Reused by the
//! `acceptance` integration test and the CLI `self-check` subcommand.

mod corpus;
pub use corpus::{smooth_corpus, CorpusFn};
