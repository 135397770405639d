//! One test per transition rule. Each builds the left-hand configuration by
//! hand, takes exactly one step and compares against the right-hand side.

use std::rc::Rc;

use fibervm::lang::{parse, ArithOp, Expr, HandlerSpec, Label};
use fibervm::machine::*;
use fibervm::runtime::{ContinuationMode, FiberId, FiberState, KontId};
use fibervm::stdlib::INVALID_ARGUMENT;

fn e(src: &str) -> Rc<Expr> {
    parse(src).unwrap_or_else(|err| panic!("{src}: {err}"))
}

fn env(bindings: &[(&str, Value)]) -> Env {
    bindings.iter().fold(Env::empty(), |acc, (x, v)| {
        acc.extend(Rc::from(*x), v.clone())
    })
}

fn spec(cases: &str) -> Rc<HandlerSpec> {
    match &*e(&format!("(handle 0 {cases})")) {
        Expr::Handle(_, h) => h.clone(),
        _ => unreachable!(),
    }
}

fn handler(cases: &str, env: Env) -> Rc<HandlerClosure> {
    Rc::new(HandlerClosure {
        spec: spec(cases),
        env,
    })
}

fn closure(src: &str, env: Env) -> Value {
    match &*e(src) {
        Expr::Lam(kind, x, body) => Value::closure(*kind, x.clone(), body.clone(), env),
        _ => panic!("{src} is not a lambda"),
    }
}

fn fiber(frames: Vec<Frame>, handler: Rc<HandlerClosure>, meta: Option<FiberId>) -> Fiber {
    Fiber {
        frames,
        handler,
        meta,
    }
}

fn c_seg(id: u64, frames: Vec<Frame>) -> Segment {
    Segment::C { id, frames }
}

fn o_seg(fibers: Vec<Fiber>) -> Segment {
    Segment::OCaml { fibers }
}

fn exn(l: &str) -> Frame {
    Frame::Fun(Value::Exn(Label::new(l)))
}

fn int(n: i64) -> Term {
    Term::Value(Value::Int(n))
}

struct Case {
    m: Machine,
}

impl Case {
    fn new(term: Term, env: Env, segments: Vec<Segment>) -> Case {
        Case::with(term, env, segments, RunOptions::default())
    }

    fn with(term: Term, env: Env, segments: Vec<Segment>, options: RunOptions) -> Case {
        let config = Configuration {
            term,
            env,
            stack: Stack { segments },
            store: Default::default(),
        };
        Case {
            m: Machine::with_config(config, options),
        }
    }

    /// Allocates runtime fibers so that hand-built stacks can name them.
    fn fibers(mut self, n: usize) -> Case {
        for _ in 0..n {
            self.m.runtime_mut().alloc_fiber(None);
        }
        self
    }

    fn step(&mut self, rule: Rule) {
        match self.m.step() {
            StepOutcome::Next(r) => assert_eq!(r, rule),
            other => panic!("expected {rule}, got {other:?}"),
        }
    }

    fn expect(&self, term: Term, env: Env, segments: Vec<Segment>) {
        let c = self.m.config();
        assert_eq!(c.term, term, "term");
        assert_eq!(c.env, env, "env");
        assert_eq!(c.stack.segments, segments, "stack");
    }
}

const F1: FiberId = FiberId(1);
const F2: FiberId = FiberId(2);
const F3: FiberId = FiberId(3);

/// Entry C stack plus one OCaml segment whose single fiber holds `frames`.
fn in_fiber(frames: Vec<Frame>) -> Vec<Segment> {
    vec![
        c_seg(0, vec![]),
        o_seg(vec![fiber(frames, HandlerClosure::identity(), Some(F1))]),
    ]
}

fn base() -> Vec<Frame> {
    vec![Frame::Arith2(ArithOp::Add, 100)]
}

fn with_base(frames: Vec<Frame>) -> Vec<Frame> {
    let mut out = base();
    out.extend(frames);
    out
}

// Administrative rules, shown on an OCaml fiber's frame list.

#[test]
fn var() {
    let rho = env(&[("x", Value::Int(5))]);
    let mut c = Case::new(Term::expr(e("x")), rho.clone(), in_fiber(base())).fibers(1);
    c.step(Rule::Var);
    c.expect(int(5), rho, in_fiber(base()));
}

#[test]
fn arith1() {
    let rho = env(&[("y", Value::Int(2))]);
    let mut c = Case::new(Term::expr(e("(* y 3)")), rho.clone(), in_fiber(base())).fibers(1);
    c.step(Rule::Arith1);
    let pushed = Frame::Arith1(ArithOp::Mul, e("3"), rho.clone());
    c.expect(Term::expr(e("y")), rho, in_fiber(with_base(vec![pushed])));
}

#[test]
fn arith2() {
    let rho = env(&[("z", Value::Int(9))]);
    let waiting = Frame::Arith1(ArithOp::Sub, e("z"), rho.clone());
    let mut c = Case::new(int(4), Env::empty(), in_fiber(with_base(vec![waiting]))).fibers(1);
    c.step(Rule::Arith2);
    c.expect(
        Term::expr(e("z")),
        rho,
        in_fiber(with_base(vec![Frame::Arith2(ArithOp::Sub, 4)])),
    );
}

#[test]
fn arith3() {
    let rho = env(&[("q", Value::Int(1))]);
    let frames = with_base(vec![Frame::Arith2(ArithOp::Sub, 10)]);
    let mut c = Case::new(int(3), rho.clone(), in_fiber(frames)).fibers(1);
    c.step(Rule::Arith3);
    c.expect(int(7), rho, in_fiber(base()));
}

#[test]
fn arith3_division_by_zero_raises() {
    let frames = with_base(vec![Frame::Arith2(ArithOp::Div, 10)]);
    let mut c = Case::new(int(0), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::Arith3);
    c.expect(
        int(0),
        Env::empty(),
        in_fiber(with_base(vec![exn(DIVISION_BY_ZERO)])),
    );
}

#[test]
fn app1() {
    let rho = env(&[("f", Value::Int(0))]);
    let mut c = Case::new(Term::expr(e("(f a)")), rho.clone(), in_fiber(base())).fibers(1);
    c.step(Rule::App1);
    let pushed = Frame::Arg(e("a"), rho.clone());
    c.expect(Term::expr(e("f")), rho, in_fiber(with_base(vec![pushed])));
}

#[test]
fn app2() {
    let rho = env(&[("w", Value::Int(8))]);
    let mut c = Case::new(
        Term::expr(e("(lambda (x) w)")),
        rho.clone(),
        in_fiber(base()),
    )
    .fibers(1);
    c.step(Rule::App2);
    c.expect(
        Term::Value(closure("(lambda (x) w)", rho.clone())),
        rho,
        in_fiber(base()),
    );
}

#[test]
fn app3() {
    let rho = env(&[("a", Value::Int(1))]);
    let f = closure("(lambda (x) x)", Env::empty());
    let frames = with_base(vec![Frame::Arg(e("a"), rho.clone())]);
    let mut c = Case::new(Term::Value(f.clone()), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::App3);
    c.expect(
        Term::expr(e("a")),
        rho,
        in_fiber(with_base(vec![Frame::Fun(f)])),
    );
}

fn kont(id: u64) -> Value {
    Value::Kont(KontCell::new(KontId(id), Continuation::perform_site()))
}

#[test]
fn resume1() {
    let rho1 = env(&[("r", Value::Int(1))]);
    let rho2 = env(&[("v", Value::Int(2))]);
    let k = kont(7);
    let frames = with_base(vec![
        Frame::Arg(e("v"), rho2.clone()),
        Frame::Arg(e("r"), rho1.clone()),
    ]);
    let mut c = Case::new(Term::Value(k.clone()), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::Resume1);
    c.expect(
        Term::expr(e("r")),
        rho1,
        in_fiber(with_base(vec![Frame::Arg(e("v"), rho2), Frame::Fun(k)])),
    );
}

#[test]
fn resume2() {
    let rho2 = env(&[("v", Value::Int(2))]);
    let k = kont(7);
    let resumer = closure("(lambda (x) x)", Env::empty());
    let frames = with_base(vec![
        Frame::Arg(e("v"), rho2.clone()),
        Frame::Fun(k.clone()),
    ]);
    let mut c = Case::new(Term::Value(resumer.clone()), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::Resume2);
    c.expect(
        Term::expr(e("v")),
        rho2,
        in_fiber(with_base(vec![Frame::Fun(resumer), Frame::Fun(k)])),
    );
}

#[test]
fn perform() {
    let rho = env(&[("p", Value::Int(3))]);
    let mut c = Case::new(
        Term::expr(e("(perform Ask p)")),
        rho.clone(),
        in_fiber(base()),
    )
    .fibers(1);
    c.step(Rule::Perform);
    let eff = Value::Eff(Label::new("Ask"), Box::new(Continuation::perform_site()));
    c.expect(
        Term::expr(e("p")),
        rho,
        in_fiber(with_base(vec![Frame::Fun(eff)])),
    );
}

#[test]
fn raise() {
    let rho = env(&[("p", Value::Int(3))]);
    let mut c = Case::new(
        Term::expr(e("(raise Boom p)")),
        rho.clone(),
        in_fiber(base()),
    )
    .fibers(1);
    c.step(Rule::Raise);
    c.expect(
        Term::expr(e("p")),
        rho,
        in_fiber(with_base(vec![exn("Boom")])),
    );
}

#[test]
fn administrative_rules_also_run_on_c_frames() {
    let rho = env(&[("y", Value::Int(2))]);
    let mut c = Case::new(
        Term::expr(e("(+ y 1)")),
        rho.clone(),
        vec![c_seg(0, vec![])],
    );
    c.step(Rule::Arith1);
    c.expect(
        Term::expr(e("y")),
        rho,
        vec![c_seg(
            0,
            vec![Frame::Arith1(
                ArithOp::Add,
                e("1"),
                env(&[("y", Value::Int(2))]),
            )],
        )],
    );
}

// C stack rules.

#[test]
fn call_c() {
    let rho = env(&[("c", Value::Int(1))]);
    let f = closure("(clambda (x) (+ x c))", rho.clone());
    let mut c = Case::new(int(5), Env::empty(), vec![c_seg(0, vec![Frame::Fun(f)])]);
    c.step(Rule::CallC);
    c.expect(
        Term::expr(e("(+ x c)")),
        rho.extend(Rc::from("x"), Value::Int(5)),
        vec![c_seg(0, vec![])],
    );
}

#[test]
fn callback() {
    let f = closure("(lambda (x) x)", Env::empty());
    let mut c = Case::new(int(5), Env::empty(), vec![c_seg(0, vec![Frame::Fun(f)])]);
    c.step(Rule::Callback);
    c.expect(
        Term::expr(e("x")),
        env(&[("x", Value::Int(5))]),
        vec![c_seg(0, vec![]), o_seg(vec![Fiber::identity(Some(F1))])],
    );
}

#[test]
fn ret_to_o() {
    let rho = env(&[("z", Value::Int(0))]);
    let below = || o_seg(vec![fiber(base(), HandlerClosure::identity(), Some(F1))]);
    let mut c = Case::new(
        int(6),
        rho.clone(),
        vec![c_seg(0, vec![]), below(), c_seg(1, vec![])],
    )
    .fibers(1);
    c.step(Rule::RetToO);
    c.expect(int(6), rho, vec![c_seg(0, vec![]), below()]);
}

#[test]
fn exn_fwd_o() {
    let mut c = Case::new(
        int(6),
        Env::empty(),
        vec![
            c_seg(0, vec![]),
            o_seg(vec![fiber(base(), HandlerClosure::identity(), Some(F1))]),
            c_seg(1, vec![Frame::Arith2(ArithOp::Add, 1), exn("E")]),
        ],
    )
    .fibers(1);
    c.step(Rule::ExnFwdO);
    c.expect(int(6), Env::empty(), in_fiber(with_base(vec![exn("E")])));
}

#[test]
fn entry_stack_finishes_with_its_value() {
    let mut c = Case::new(int(3), Env::empty(), vec![c_seg(0, vec![])]);
    assert!(matches!(c.m.step(), StepOutcome::Done(Value::Int(3))));
}

#[test]
fn exception_reaching_the_entry_stack_is_fatal() {
    let mut c = Case::new(int(3), Env::empty(), vec![c_seg(0, vec![exn("E")])]);
    assert!(matches!(
        c.m.step(),
        StepOutcome::Fatal(FatalKind::UncaughtException(l)) if l.as_str() == "E"
    ));
}

// OCaml stack rules.

#[test]
fn call_o() {
    let rho = env(&[("c", Value::Int(1))]);
    let f = closure("(lambda (x) (+ x c))", rho.clone());
    let mut c = Case::new(
        int(5),
        Env::empty(),
        in_fiber(with_base(vec![Frame::Fun(f)])),
    )
    .fibers(1);
    c.step(Rule::CallO);
    c.expect(
        Term::expr(e("(+ x c)")),
        rho.extend(Rc::from("x"), Value::Int(5)),
        in_fiber(base()),
    );
}

#[test]
fn ext_call() {
    let f = closure("(clambda (x) x)", Env::empty());
    let mut c = Case::new(
        int(5),
        Env::empty(),
        in_fiber(with_base(vec![Frame::Fun(f)])),
    )
    .fibers(1);
    c.step(Rule::ExtCall);
    let mut expected = in_fiber(base());
    expected.push(c_seg(1, vec![]));
    c.expect(Term::expr(e("x")), env(&[("x", Value::Int(5))]), expected);
}

#[test]
fn ret_to_c() {
    let rho = env(&[("z", Value::Int(0))]);
    let entry = vec![c_seg(0, vec![Frame::Arith2(ArithOp::Add, 1)])];
    let mut segments = entry.clone();
    segments.push(o_seg(vec![Fiber::identity(Some(F1))]));
    let mut c = Case::new(int(6), rho.clone(), segments).fibers(1);
    c.step(Rule::RetToC);
    c.expect(int(6), rho, entry);
    assert_eq!(c.m.runtime().fiber_state(F1), FiberState::Dead);
}

#[test]
fn ret_fib() {
    let hrho = env(&[("k0", Value::Int(10))]);
    let h = handler("(val r (+ r k0))", hrho.clone());
    let mut c = Case::new(
        int(6),
        Env::empty(),
        vec![
            c_seg(0, vec![]),
            o_seg(vec![
                fiber(base(), HandlerClosure::identity(), Some(F1)),
                fiber(vec![], h, Some(F2)),
            ]),
        ],
    )
    .fibers(2);
    c.step(Rule::RetFib);
    c.expect(
        Term::expr(e("(+ r k0)")),
        hrho.extend(Rc::from("r"), Value::Int(6)),
        in_fiber(base()),
    );
    assert_eq!(c.m.runtime().fiber_state(F2), FiberState::Dead);
}

#[test]
fn handle() {
    let rho = env(&[("b", Value::Int(1))]);
    let cases = "(val x x) (eff E v k 0)";
    let src = format!("(handle b {cases})");
    let mut c = Case::new(Term::expr(e(&src)), rho.clone(), in_fiber(base())).fibers(1);
    c.step(Rule::Handle);
    c.expect(
        Term::expr(e("b")),
        rho.clone(),
        vec![
            c_seg(0, vec![]),
            o_seg(vec![
                fiber(base(), HandlerClosure::identity(), Some(F1)),
                Fiber::new(handler(cases, rho), Some(F2)),
            ]),
        ],
    );
}

fn two_fibers(top_handler: Rc<HandlerClosure>, top_frames: Vec<Frame>) -> Vec<Segment> {
    vec![
        c_seg(0, vec![]),
        o_seg(vec![
            fiber(base(), HandlerClosure::identity(), Some(F1)),
            fiber(top_frames, top_handler, Some(F2)),
        ]),
    ]
}

#[test]
fn exn_hn() {
    let hrho = env(&[("d", Value::Int(40))]);
    let h = handler("(val x x) (exn E p (+ p d))", hrho.clone());
    let top = vec![Frame::Arith2(ArithOp::Add, 1), exn("E")];
    let mut c = Case::new(int(2), Env::empty(), two_fibers(h, top)).fibers(2);
    c.step(Rule::ExnHn);
    c.expect(
        Term::expr(e("(+ p d)")),
        hrho.extend(Rc::from("p"), Value::Int(2)),
        in_fiber(base()),
    );
}

#[test]
fn exn_fwd_fib() {
    let h = handler("(val x x) (exn Other p 0)", Env::empty());
    let top = vec![Frame::Arith2(ArithOp::Add, 1), exn("E")];
    let rho = env(&[("q", Value::Int(0))]);
    let mut c = Case::new(int(2), rho.clone(), two_fibers(h, top)).fibers(2);
    c.step(Rule::ExnFwdFib);
    c.expect(int(2), rho, in_fiber(with_base(vec![exn("E")])));
}

#[test]
fn exn_fwd_c() {
    let c_frames = vec![Frame::Arith2(ArithOp::Mul, 3)];
    let mut c = Case::new(
        int(2),
        Env::empty(),
        vec![
            c_seg(0, c_frames.clone()),
            o_seg(vec![fiber(
                with_base(vec![exn("E")]),
                HandlerClosure::identity(),
                Some(F1),
            )]),
        ],
    )
    .fibers(1);
    c.step(Rule::ExnFwdC);
    let mut expected = c_frames;
    expected.push(exn("E"));
    c.expect(int(2), Env::empty(), vec![c_seg(0, expected)]);
}

fn eff(label: &str, k: Continuation) -> Frame {
    Frame::Fun(Value::Eff(Label::new(label), Box::new(k)))
}

fn site() -> Fiber {
    fiber(
        vec![Frame::Arith2(ArithOp::Add, 1)],
        HandlerClosure::identity(),
        None,
    )
}

#[test]
fn eff_hn() {
    let hrho = env(&[("d", Value::Int(40))]);
    let h = handler("(val x x) (eff E p k (+ p d))", hrho.clone());
    let top = vec![
        Frame::Arith2(ArithOp::Mul, 2),
        eff("E", Continuation::new(vec![site()])),
    ];
    let mut c = Case::new(int(2), Env::empty(), two_fibers(h.clone(), top)).fibers(2);
    c.step(Rule::EffHn);
    let captured = Continuation::new(vec![
        site(),
        fiber(vec![Frame::Arith2(ArithOp::Mul, 2)], h, Some(F2)),
    ]);
    let Some(Value::Kont(cell)) = c.m.config().env.lookup("k").cloned() else {
        panic!("k is not bound to a continuation");
    };
    assert_eq!(cell.fibers.borrow().as_ref(), Some(&captured));
    c.expect(
        Term::expr(e("(+ p d)")),
        hrho.extend(Rc::from("k"), Value::Kont(cell.clone()))
            .extend(Rc::from("p"), Value::Int(2)),
        in_fiber(base()),
    );
    assert_eq!(c.m.runtime().fiber_state(F2), FiberState::Captured);
}

#[test]
fn eff_fwd() {
    let h = handler("(val x x) (eff Other p k 0)", Env::empty());
    let top = vec![
        Frame::Arith2(ArithOp::Mul, 2),
        eff("E", Continuation::new(vec![site()])),
    ];
    let rho = env(&[("q", Value::Int(0))]);
    let mut c = Case::new(int(2), rho.clone(), two_fibers(h.clone(), top)).fibers(2);
    c.step(Rule::EffFwd);
    let k = Continuation::new(vec![
        site(),
        fiber(vec![Frame::Arith2(ArithOp::Mul, 2)], h, Some(F2)),
    ]);
    c.expect(int(2), rho, in_fiber(with_base(vec![eff("E", k)])));
}

#[test]
fn eff_un_hn() {
    let h = handler("(val x x) (eff Other p k 0)", Env::empty());
    let inner = fiber(vec![Frame::Arith2(ArithOp::Mul, 2)], h, Some(F2));
    let k = Continuation::new(vec![site(), inner.clone()]);
    let mut c = Case::new(
        int(2),
        env(&[("q", Value::Int(0))]),
        vec![
            c_seg(0, vec![]),
            o_seg(vec![fiber(
                with_base(vec![eff("E", k)]),
                HandlerClosure::identity(),
                Some(F1),
            )]),
        ],
    )
    .fibers(2);
    c.m.runtime_mut().mark_captured(F2);
    c.step(Rule::EffUnHn);
    c.expect(
        Term::expr(Expr::raise(UNHANDLED, Expr::int(0))),
        Env::empty(),
        vec![
            c_seg(0, vec![]),
            o_seg(vec![
                fiber(base(), HandlerClosure::identity(), Some(F1)),
                inner,
                site(),
            ]),
        ],
    );
    assert_eq!(c.m.runtime().fiber_state(F2), FiberState::Active);
}

fn resume_case(options: RunOptions) -> (Case, Value, Vec<Fiber>) {
    let h = handler("(val x x) (eff E p k 0)", Env::empty());
    let inner = fiber(vec![Frame::Arith2(ArithOp::Mul, 2)], h, Some(F2));
    let k = Continuation::new(vec![site(), inner.clone()]);
    let rrho = env(&[("s", Value::Int(1))]);
    let resumer = closure("(lambda (x) (+ x s))", rrho);
    let mut c = Case::with(int(9), Env::empty(), in_fiber(vec![]), options).fibers(2);
    let id = c.m.runtime_mut().capture(&[F2], vec![]);
    let cell = Value::Kont(KontCell::new(id, k));
    let Segment::OCaml { fibers } = c.m.config_mut().stack.top_mut() else {
        unreachable!()
    };
    fibers[0].frames = with_base(vec![Frame::Fun(resumer), Frame::Fun(cell.clone())]);
    (c, cell, vec![inner, site()])
}

#[test]
fn resume() {
    let (mut c, _, reinstated) = resume_case(RunOptions::default());
    c.step(Rule::Resume);
    let mut fibers = vec![fiber(base(), HandlerClosure::identity(), Some(F1))];
    fibers.extend(reinstated);
    c.expect(
        Term::expr(e("(+ x s)")),
        env(&[("s", Value::Int(1)), ("x", Value::Int(9))]),
        vec![c_seg(0, vec![]), o_seg(fibers)],
    );
    assert_eq!(c.m.runtime().fiber_state(F2), FiberState::Active);
}

#[test]
fn resume_of_a_used_one_shot_continuation_raises() {
    let (mut c, cell, _) = resume_case(RunOptions::default());
    let Value::Kont(k) = &cell else {
        unreachable!()
    };
    k.fibers.borrow_mut().take();
    c.step(Rule::Resume);
    c.expect(
        int(0),
        Env::empty(),
        in_fiber(with_base(vec![exn(INVALID_ARGUMENT)])),
    );
}

#[test]
fn multishot_resume_copies_fibers() {
    let mut options = RunOptions::default();
    options.runtime.mode = ContinuationMode::MultiShot;
    let (mut c, cell, mut reinstated) = resume_case(options);
    c.step(Rule::Resume);
    reinstated[0].meta = Some(F3);
    let mut fibers = vec![fiber(base(), HandlerClosure::identity(), Some(F1))];
    fibers.extend(reinstated);
    c.expect(
        Term::expr(e("(+ x s)")),
        env(&[("s", Value::Int(1)), ("x", Value::Int(9))]),
        vec![c_seg(0, vec![]), o_seg(fibers)],
    );
    let Value::Kont(k) = cell else { unreachable!() };
    assert!(!k.is_used());
    assert_eq!(c.m.runtime().fiber_state(F2), FiberState::Captured);
}

// Builtin calls and the exception fast path.

fn prim(name: &str) -> Value {
    lookup(&Env::empty(), name).unwrap()
}

#[test]
fn call_prim_in_ocaml_and_c() {
    let frames = with_base(vec![Frame::Fun(prim("print_int"))]);
    let mut c = Case::new(int(4), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::CallPrim);
    c.expect(int(0), Env::empty(), in_fiber(base()));
    assert_eq!(c.m.config().store.output.len(), 1);

    let mut c = Case::new(
        int(4),
        Env::empty(),
        vec![c_seg(0, vec![Frame::Fun(prim("pair"))])],
    );
    c.step(Rule::CallPrim);
    let Term::Value(Value::Prim(partial)) = &c.m.config().term else {
        panic!("expected a partial application");
    };
    assert_eq!(partial.args, vec![Value::Int(4)]);
}

#[test]
fn call_prim_failure_raises_its_label() {
    let frames = with_base(vec![Frame::Fun(prim("queue_pop"))]);
    let mut c = Case::new(int(4), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::CallPrim);
    c.expect(
        int(0),
        Env::empty(),
        in_fiber(with_base(vec![exn(INVALID_ARGUMENT)])),
    );
}

#[test]
fn trap_push() {
    let rho = env(&[("b", Value::Int(1))]);
    let cases = "(val x x) (exn E p 0)";
    let src = format!("(handle b {cases})");
    let mut c = Case::new(Term::expr(e(&src)), rho.clone(), in_fiber(base())).fibers(1);
    c.step(Rule::TrapPush);
    c.expect(
        Term::expr(e("b")),
        rho.clone(),
        in_fiber(with_base(vec![Frame::Trap(handler(cases, rho))])),
    );
}

#[test]
fn exception_only_handler_gets_a_fiber_without_the_fast_path() {
    let src = "(handle b (val x x) (exn E p 0))";
    let options = RunOptions {
        opt_exn: false,
        ..RunOptions::default()
    };
    let mut c = Case::with(Term::expr(e(src)), Env::empty(), in_fiber(base()), options).fibers(1);
    c.step(Rule::Handle);
}

#[test]
fn trap_ret() {
    let hrho = env(&[("d", Value::Int(1))]);
    let h = handler("(val r (+ r d)) (exn E p 0)", hrho.clone());
    let frames = with_base(vec![Frame::Trap(h)]);
    let mut c = Case::new(int(5), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::TrapRet);
    c.expect(
        Term::expr(e("(+ r d)")),
        hrho.extend(Rc::from("r"), Value::Int(5)),
        in_fiber(base()),
    );
}

#[test]
fn trap_hn() {
    let hrho = env(&[("d", Value::Int(1))]);
    let h = handler("(val r r) (exn E p (+ p d))", hrho.clone());
    let frames = with_base(vec![
        Frame::Trap(h),
        Frame::Arith2(ArithOp::Add, 3),
        Frame::Arith2(ArithOp::Add, 4),
        exn("E"),
    ]);
    let mut c = Case::new(int(5), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::TrapHn);
    c.expect(
        Term::expr(e("(+ p d)")),
        hrho.extend(Rc::from("p"), Value::Int(5)),
        in_fiber(base()),
    );
}

#[test]
fn trap_fwd() {
    let h = handler("(val r r) (exn Other p 0)", Env::empty());
    let frames = with_base(vec![
        Frame::Trap(h),
        Frame::Arith2(ArithOp::Add, 3),
        exn("E"),
    ]);
    let mut c = Case::new(int(5), Env::empty(), in_fiber(frames)).fibers(1);
    c.step(Rule::TrapFwd);
    c.expect(int(5), Env::empty(), in_fiber(with_base(vec![exn("E")])));
}

/// Every check above, keyed by the rule it exercises.
#[allow(dead_code)]
pub const CHECKS: &[(Rule, fn())] = &[
    (Rule::Var, var),
    (Rule::Arith1, arith1),
    (Rule::Arith2, arith2),
    (Rule::Arith3, arith3),
    (Rule::Arith3, arith3_division_by_zero_raises),
    (Rule::App1, app1),
    (Rule::App2, app2),
    (Rule::App3, app3),
    (Rule::Resume1, resume1),
    (Rule::Resume2, resume2),
    (Rule::Perform, perform),
    (Rule::Raise, raise),
    (Rule::Arith1, administrative_rules_also_run_on_c_frames),
    (Rule::CallC, call_c),
    (Rule::Callback, callback),
    (Rule::RetToO, ret_to_o),
    (Rule::ExnFwdO, exn_fwd_o),
    (Rule::CallO, call_o),
    (Rule::ExtCall, ext_call),
    (Rule::RetToC, ret_to_c),
    (Rule::RetFib, ret_fib),
    (Rule::Handle, handle),
    (
        Rule::Handle,
        exception_only_handler_gets_a_fiber_without_the_fast_path,
    ),
    (Rule::ExnHn, exn_hn),
    (Rule::ExnFwdFib, exn_fwd_fib),
    (Rule::ExnFwdC, exn_fwd_c),
    (Rule::EffHn, eff_hn),
    (Rule::EffFwd, eff_fwd),
    (Rule::EffUnHn, eff_un_hn),
    (Rule::Resume, resume),
    (Rule::Resume, resume_of_a_used_one_shot_continuation_raises),
    (Rule::Resume, multishot_resume_copies_fibers),
    (Rule::CallPrim, call_prim_in_ocaml_and_c),
    (Rule::CallPrim, call_prim_failure_raises_its_label),
    (Rule::TrapPush, trap_push),
    (Rule::TrapRet, trap_ret),
    (Rule::TrapHn, trap_hn),
    (Rule::TrapFwd, trap_fwd),
];

#[test]
fn every_rule_has_a_check() {
    for rule in Rule::ALL {
        assert!(
            CHECKS.iter().any(|(r, _)| *r == rule),
            "no check for {rule}"
        );
    }
}
