//! The object language: an untyped lambda calculus with two calling
//! conventions, integer arithmetic, exceptions, and deep effect handlers.
//!
//! Concrete syntax is parenthesised prefix notation:
//!
//! ```text
//! e ::= INT | IDENT | (lambda (x) e) | (clambda (x) e) | (e e ...) | (op e e)
//!     | (raise L e) | (perform L e) | (handle e (val x e) (exn L x e)* (eff L x k e)*)
//!     | (let (x e) e) | (continue e e) | (discontinue e L e)
//! ```
//!
//! `let`, `continue`, `discontinue` and n-ary application are expanded while
//! parsing, so [`Expr`] only holds core forms.

mod ast;
mod desugar;
mod parser;
mod printer;

use std::path::{Path, PathBuf};
use std::rc::Rc;

pub use ast::{
    ArithOp, EffCase, ExnCase, Expr, HandlerError, HandlerSpec, Ident, Label, LamKind, ValueCase,
};
pub use desugar::{desugar_continue, desugar_discontinue, desugar_let, wrap_entry, ENTRY_PARAM};
pub use parser::{is_keyword, parse, ParseError};
pub use printer::{print, print_short};

/// A parsed program ready to run: `entry` is already wrapped with
/// [`wrap_entry`].
#[derive(Debug, Clone)]
pub struct SourceProgram {
    pub path: PathBuf,
    pub text: String,
    pub entry: Rc<Expr>,
}

impl SourceProgram {
    pub fn from_source(
        path: impl AsRef<Path>,
        text: impl Into<String>,
    ) -> Result<Self, ParseError> {
        let text = text.into();
        let entry = wrap_entry(parse(&text)?);
        Ok(SourceProgram {
            path: path.as_ref().to_path_buf(),
            text,
            entry,
        })
    }

    pub fn name(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}
