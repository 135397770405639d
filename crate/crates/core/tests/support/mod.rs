//! Random program generator shared by the property and acceptance tests.
#![allow(dead_code)]

use fibervm::{run_source, ContinuationMode, RunOptions, RunResult, RuntimeConfig};
use proptest::prelude::*;

/// Shape of a generated program. Variables are resolved against the names in
/// scope when rendering, so every program is closed.
#[derive(Debug, Clone)]
pub enum G {
    Int(i64),
    Var(usize),
    Arith(&'static str, Box<G>, Box<G>),
    Print(Box<G>),
    Raise(u8, Box<G>),
    Perform(u8, Box<G>),
    Let(Box<G>, Box<G>),
    /// OCaml calls a C function that calls back into OCaml.
    ThroughC(Box<G>),
    Handle(Box<Handler>),
}

#[derive(Debug, Clone)]
pub struct Handler {
    body: G,
    val: G,
    exn: Option<(u8, G)>,
    eff: Option<(u8, Resumption)>,
}

/// What an effect case does with its continuation: at most one resumption.
#[derive(Debug, Clone)]
pub enum Resumption {
    Continue(G),
    Discontinue(u8, G),
    Drop(G),
}

pub fn program() -> impl Strategy<Value = G> {
    let leaf = prop_oneof![(-3i64..10).prop_map(G::Int), (0usize..6).prop_map(G::Var)];
    leaf.prop_recursive(5, 48, 4, |inner| {
        let label = 0u8..2;
        let resumption = prop_oneof![
            3 => inner.clone().prop_map(Resumption::Continue),
            1 => (label.clone(), inner.clone()).prop_map(|(l, g)| Resumption::Discontinue(l, g)),
            1 => inner.clone().prop_map(Resumption::Drop),
        ];
        // Handler bodies usually perform the effect they handle.
        let handler = (
            label.clone(),
            any::<bool>(),
            (inner.clone(), inner.clone(), inner.clone()),
            proptest::option::of((label.clone(), inner.clone())),
            proptest::option::weighted(0.8, resumption),
        )
            .prop_map(|(l, performs, (a, b, val), exn, eff)| {
                let body = if performs {
                    G::Let(Box::new(G::Perform(l, Box::new(a))), Box::new(b))
                } else {
                    a
                };
                G::Handle(Box::new(Handler {
                    body,
                    val,
                    exn,
                    eff: eff.map(|r| (l, r)),
                }))
            });
        prop_oneof![
            2 => (prop_oneof![Just("+"), Just("-"), Just("*"), Just("/")], inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| G::Arith(op, Box::new(a), Box::new(b))),
            1 => inner.clone().prop_map(|g| G::Print(Box::new(g))),
            1 => (label.clone(), inner.clone()).prop_map(|(l, g)| G::Raise(l, Box::new(g))),
            2 => (label.clone(), inner.clone()).prop_map(|(l, g)| G::Perform(l, Box::new(g))),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| G::Let(Box::new(a), Box::new(b))),
            1 => inner.clone().prop_map(|g| G::ThroughC(Box::new(g))),
            4 => handler,
        ]
    })
}

struct Renderer {
    fresh: usize,
}

impl Renderer {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn render(&mut self, g: &G, scope: &mut Vec<String>) -> String {
        match g {
            G::Int(n) => n.to_string(),
            G::Var(i) => match scope.len() {
                0 => i.to_string(),
                n => scope[n - 1 - i % n].clone(),
            },
            G::Arith(op, a, b) => {
                format!("({op} {} {})", self.render(a, scope), self.render(b, scope))
            }
            G::Print(a) => format!("(print_int {})", self.render(a, scope)),
            G::Raise(l, a) => format!("(raise E{l} {})", self.render(a, scope)),
            G::Perform(l, a) => format!("(perform A{l} {})", self.render(a, scope)),
            G::Let(a, b) => {
                let bound = self.render(a, scope);
                let x = self.name("v");
                let body = self.bind(&x, b, scope);
                format!("(let ({x} {bound}) {body})")
            }
            G::ThroughC(a) => {
                let c = self.name("c");
                let o = self.name("o");
                let body = self.render(a, scope);
                format!("((clambda ({c}) ((lambda ({o}) {body}) {c})) 0)")
            }
            G::Handle(h) => {
                let body = self.render(&h.body, scope);
                let x = self.name("r");
                let val = self.bind(&x, &h.val, scope);
                let mut out = format!("(handle {body} (val {x} {val})");
                if let Some((l, g)) = &h.exn {
                    let e = self.name("e");
                    out += &format!(" (exn E{l} {e} {})", self.bind(&e, g, scope));
                }
                if let Some((l, r)) = &h.eff {
                    let p = self.name("p");
                    let k = self.name("k");
                    let case = match r {
                        Resumption::Continue(g) => {
                            format!("(continue {k} {})", self.bind(&p, g, scope))
                        }
                        Resumption::Discontinue(m, g) => {
                            format!("(discontinue {k} E{m} {})", self.bind(&p, g, scope))
                        }
                        Resumption::Drop(g) => self.bind(&p, g, scope),
                    };
                    out += &format!(" (eff A{l} {p} {k} {case})");
                }
                out + ")"
            }
        }
    }

    fn bind(&mut self, x: &str, g: &G, scope: &mut Vec<String>) -> String {
        scope.push(x.to_string());
        let s = self.render(g, scope);
        scope.pop();
        s
    }
}

pub fn source(g: &G) -> String {
    Renderer { fresh: 0 }.render(g, &mut Vec::new())
}

pub fn options(mode: ContinuationMode, opt_exn: bool) -> RunOptions {
    RunOptions {
        runtime: RuntimeConfig {
            mode,
            ..RuntimeConfig::default()
        },
        opt_exn,
        max_steps: 200_000,
        ..RunOptions::default()
    }
}

pub fn exec(src: &str, o: &RunOptions) -> RunResult {
    run_source(src, o).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"))
}

pub fn agree(a: &RunResult, b: &RunResult) -> bool {
    a.outcome.same_result(&b.outcome) && a.output == b.output
}
