//! An executable abstract machine for effect handlers on a stack made of
//! alternating C and OCaml segments, with a word-accounted fiber runtime.
//!
//! ```
//! use fibervm::{run_source, RunOptions};
//!
//! let src = "(handle (+ (perform Ask 0) 1) (val x x) (eff Ask u k (continue k 41)))";
//! let result = run_source(src, &RunOptions::default()).unwrap();
//! assert_eq!(result.outcome.value().unwrap().to_string(), "42");
//! ```

pub mod cli;
pub mod diagnostics;
pub mod lang;
pub mod machine;
pub mod runtime;
pub mod stdlib;

pub use lang::{parse, ParseError, SourceProgram};
pub use machine::{
    run, run_expr, run_source, FatalKind, Machine, Outcome, RunOptions, RunResult, Value,
};
pub use runtime::{ContinuationMode, Metrics, RuntimeConfig};
