use std::fmt::Write;

use super::ast::{Expr, HandlerSpec, LamKind};

/// Prints a core expression in the concrete syntax accepted by [`parse`].
///
/// [`parse`]: super::parse
pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

/// Like [`print`] but cut to at most `max` characters.
pub fn print_short(e: &Expr, max: usize) -> String {
    let s = print(e);
    if s.chars().count() <= max {
        s
    } else {
        let cut: String = s.chars().take(max.saturating_sub(3)).collect();
        format!("{cut}...")
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(x) => out.push_str(x),
        Expr::App(f, a) => {
            out.push('(');
            write_expr(out, f);
            out.push(' ');
            write_expr(out, a);
            out.push(')');
        }
        Expr::Lam(kind, x, body) => {
            let kw = match kind {
                LamKind::OCaml => "lambda",
                LamKind::C => "clambda",
            };
            let _ = write!(out, "({kw} ({x}) ");
            write_expr(out, body);
            out.push(')');
        }
        Expr::Arith(op, a, b) => {
            let _ = write!(out, "({} ", op.symbol());
            write_expr(out, a);
            out.push(' ');
            write_expr(out, b);
            out.push(')');
        }
        Expr::Raise(l, e) => {
            let _ = write!(out, "(raise {l} ");
            write_expr(out, e);
            out.push(')');
        }
        Expr::Perform(l, e) => {
            let _ = write!(out, "(perform {l} ");
            write_expr(out, e);
            out.push(')');
        }
        Expr::Handle(body, h) => {
            out.push_str("(handle ");
            write_expr(out, body);
            write_handler(out, h);
            out.push(')');
        }
    }
}

fn write_handler(out: &mut String, h: &HandlerSpec) {
    let _ = write!(out, " (val {} ", h.value_case.param);
    write_expr(out, &h.value_case.body);
    out.push(')');
    for c in &h.exn_cases {
        let _ = write!(out, " (exn {} {} ", c.label, c.param);
        write_expr(out, &c.body);
        out.push(')');
    }
    for c in &h.eff_cases {
        let _ = write!(out, " (eff {} {} {} ", c.label, c.param, c.kont_param);
        write_expr(out, &c.body);
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn prints_canonical_form() {
        let src = "(handle (f (perform E 1)) (val x (+ x 1)) (exn X e 0) (eff E v k ((k (lambda (x) x)) v)))";
        assert_eq!(print(&parse(src).unwrap()), src);
    }

    #[test]
    fn short_form_truncates() {
        let e = parse("(lambda (x) (+ x (+ x (+ x (+ x x)))))").unwrap();
        let s = print_short(&e, 16);
        assert_eq!(s.chars().count(), 16);
        assert!(s.ends_with("..."));
    }
}
