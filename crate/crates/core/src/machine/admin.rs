use std::rc::Rc;

use super::rules::Rule;
use super::stack::Term;
use super::value::{Continuation, Env, Frame, PrimApp, Value};
use crate::lang::{Expr, Ident, Label};
use crate::stdlib::lookup_builtin;

pub const DIVISION_BY_ZERO: &str = "Division_by_zero";

#[derive(Debug, Clone, PartialEq)]
pub enum Admin {
    Stepped(Rule),
    NoMatch,
    Unbound(Ident),
}

/// Resolves a variable: the environment first, then the builtin namespace.
pub fn lookup(env: &Env, name: &str) -> Option<Value> {
    if let Some(v) = env.lookup(name) {
        return Some(v.clone());
    }
    lookup_builtin(name).map(|builtin| {
        Value::Prim(Rc::new(PrimApp {
            builtin,
            args: Vec::new(),
        }))
    })
}

fn second_is_arg(frames: &[Frame]) -> bool {
    frames.len() >= 2 && matches!(frames[frames.len() - 2], Frame::Arg(..))
}

/// One administrative reduction on `(τ, ε, fl)`, shared by both stacks.
/// `frames` has its top at the end.
pub fn admin_step(term: &mut Term, env: &mut Env, frames: &mut Vec<Frame>) -> Admin {
    match term {
        Term::Expr(e) => {
            let e = e.clone();
            match &*e {
                Expr::Var(x) => match lookup(env, x) {
                    Some(v) => {
                        *term = Term::Value(v);
                        Admin::Stepped(Rule::Var)
                    }
                    None => Admin::Unbound(x.clone()),
                },
                Expr::Arith(op, lhs, rhs) => {
                    frames.push(Frame::Arith1(*op, rhs.clone(), env.clone()));
                    *term = Term::expr(lhs.clone());
                    Admin::Stepped(Rule::Arith1)
                }
                Expr::App(f, a) => {
                    frames.push(Frame::Arg(a.clone(), env.clone()));
                    *term = Term::expr(f.clone());
                    Admin::Stepped(Rule::App1)
                }
                Expr::Lam(kind, x, body) => {
                    *term =
                        Term::Value(Value::closure(*kind, x.clone(), body.clone(), env.clone()));
                    Admin::Stepped(Rule::App2)
                }
                Expr::Perform(l, payload) => {
                    let k = Continuation::perform_site();
                    frames.push(Frame::Fun(Value::Eff(l.clone(), Box::new(k))));
                    *term = Term::expr(payload.clone());
                    Admin::Stepped(Rule::Perform)
                }
                Expr::Raise(l, payload) => {
                    frames.push(Frame::Fun(Value::Exn(l.clone())));
                    *term = Term::expr(payload.clone());
                    Admin::Stepped(Rule::Raise)
                }
                Expr::Int(n) => {
                    *term = Term::Value(Value::Int(*n));
                    Admin::NoMatch
                }
                Expr::Handle(..) => Admin::NoMatch,
            }
        }
        Term::Value(v) => match (&*v, frames.last()) {
            (Value::Int(n1), Some(Frame::Arith1(..))) => {
                let n1 = *n1;
                let Some(Frame::Arith1(op, rhs, env1)) = frames.pop() else {
                    unreachable!()
                };
                frames.push(Frame::Arith2(op, n1));
                *term = Term::expr(rhs);
                *env = env1;
                Admin::Stepped(Rule::Arith2)
            }
            (Value::Int(n2), Some(Frame::Arith2(op, n1))) => {
                let result = op.apply(*n1, *n2);
                frames.pop();
                match result {
                    Some(n) => *term = Term::Value(Value::Int(n)),
                    None => {
                        frames.push(Frame::Fun(Value::Exn(Label::new(DIVISION_BY_ZERO))));
                        *term = Term::Value(Value::Int(0));
                    }
                }
                Admin::Stepped(Rule::Arith3)
            }
            (Value::Closure(_) | Value::Prim(_), Some(Frame::Arg(..))) => {
                let Some(Frame::Arg(arg, env2)) = frames.pop() else {
                    unreachable!()
                };
                frames.push(Frame::Fun(v.clone()));
                *term = Term::expr(arg);
                *env = env2;
                Admin::Stepped(Rule::App3)
            }
            (Value::Kont(_), Some(Frame::Arg(..))) if second_is_arg(frames) => {
                let Some(Frame::Arg(e1, env1)) = frames.pop() else {
                    unreachable!()
                };
                frames.push(Frame::Fun(v.clone()));
                *term = Term::expr(e1);
                *env = env1;
                Admin::Stepped(Rule::Resume1)
            }
            (Value::Closure(_), Some(Frame::Fun(Value::Kont(_)))) if second_is_arg(frames) => {
                let Some(k) = frames.pop() else {
                    unreachable!()
                };
                let Some(Frame::Arg(e2, env2)) = frames.pop() else {
                    unreachable!()
                };
                frames.push(Frame::Fun(v.clone()));
                frames.push(k);
                *term = Term::expr(e2);
                *env = env2;
                Admin::Stepped(Rule::Resume2)
            }
            _ => Admin::NoMatch,
        },
    }
}
