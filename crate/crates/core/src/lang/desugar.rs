use std::rc::Rc;

use super::ast::{Expr, Label, LamKind};

/// Parameter name of the entry wrapper. Not lexable, so it cannot capture a
/// user variable.
pub const ENTRY_PARAM: &str = "%entry";

/// `continue k v` is `((k (lambda (x) x)) v)`.
pub fn desugar_continue(k: Rc<Expr>, v: Rc<Expr>) -> Rc<Expr> {
    let resumer = Expr::lam(LamKind::OCaml, "x", Expr::var("x"));
    Expr::app(Expr::app(k, resumer), v)
}

/// `discontinue k l v` is `((k (lambda (x) (raise l x))) v)`.
pub fn desugar_discontinue(k: Rc<Expr>, label: Label, v: Rc<Expr>) -> Rc<Expr> {
    let resumer = Rc::new(Expr::Lam(
        LamKind::OCaml,
        Rc::from("x"),
        Rc::new(Expr::Raise(label, Expr::var("x"))),
    ));
    Expr::app(Expr::app(k, resumer), v)
}

/// `let (x e) body` is `((lambda (x) body) e)`.
pub fn desugar_let(name: &str, bound: Rc<Expr>, body: Rc<Expr>) -> Rc<Expr> {
    Expr::app(Expr::lam(LamKind::OCaml, name, body), bound)
}

/// Wraps a program so that it starts with a callback from the initial C stack
/// into OCaml, like a native program entering through its C `main`.
pub fn wrap_entry(e: Rc<Expr>) -> Rc<Expr> {
    Expr::app(Expr::lam(LamKind::OCaml, ENTRY_PARAM, e), Expr::int(0))
}
