//! Small-step machine over alternating C and OCaml stack segments.
//!
//! A configuration is `⟨τ, ε, σ⟩`. C segments are plain frame lists; OCaml
//! segments are lists of fibers, each a frame list with a handler closure.
//! Every step applies exactly one named rule.

mod admin;
mod rules;
mod stack;
mod value;

use std::fmt;
use std::rc::Rc;

pub use admin::{admin_step, lookup, Admin, DIVISION_BY_ZERO};
pub use rules::{Rule, RuleGroup};
pub use stack::{Configuration, Context, Segment, Stack, StackShapeError, Term};
pub use value::{
    Closure, Continuation, Env, Fiber, Frame, HandlerClosure, KontCell, PrimApp, Value,
};

use crate::diagnostics::{
    backtrace, continuation_entries, BacktraceEntry, PhaseTracker, TraceEvent,
};
use crate::lang::{Expr, Label, LamKind, SourceProgram};
use crate::runtime::{ContinuationMode, FiberRuntime, FiberState, Leak, Metrics, RuntimeConfig};
use crate::stdlib::{OutputEntry, INVALID_ARGUMENT};

pub const UNHANDLED: &str = "Unhandled";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub runtime: RuntimeConfig,
    /// Exception-only handlers push a trap frame instead of a fiber.
    pub opt_exn: bool,
    pub trace: bool,
    pub max_steps: u64,
    pub backtrace_on_error: bool,
    /// Record the backtrace just before the first step using this rule.
    pub break_on: Option<Rule>,
    /// Check stack shape and fiber liveness after every step.
    pub check_invariants: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            runtime: RuntimeConfig::default(),
            opt_exn: true,
            trace: false,
            max_steps: 10_000_000,
            backtrace_on_error: true,
            break_on: None,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FatalKind {
    UncaughtException(Label),
    StuckInC(String),
    Stuck(String),
}

impl fmt::Display for FatalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FatalKind::UncaughtException(l) => write!(f, "uncaught exception {l}"),
            FatalKind::StuckInC(msg) => write!(f, "stuck in C: {msg}"),
            FatalKind::Stuck(msg) => write!(f, "stuck: {msg}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Next(Rule),
    Done(Value),
    Fatal(FatalKind),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done(Value),
    Fatal {
        kind: FatalKind,
        backtrace: Vec<BacktraceEntry>,
    },
    StepBudgetExceeded,
}

impl Outcome {
    /// Equal results, ignoring backtraces (which name fibers).
    pub fn same_result(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Done(a), Outcome::Done(b)) => a == b,
            (Outcome::Fatal { kind: a, .. }, Outcome::Fatal { kind: b, .. }) => a == b,
            (Outcome::StepBudgetExceeded, Outcome::StepBudgetExceeded) => true,
            _ => false,
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Done(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub output: Vec<OutputEntry>,
    pub metrics: Metrics,
    pub trace: Vec<TraceEvent>,
    pub leaks: Vec<Leak>,
    pub break_backtrace: Option<Vec<BacktraceEntry>>,
    /// Allocated fibers not freed by the end of the run.
    pub live_fibers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantError {
    #[error(transparent)]
    Shape(#[from] StackShapeError),
    #[error("fiber {0} on the live stack is {1:?}")]
    FiberState(crate::runtime::FiberId, FiberState),
}

enum Halt {
    Done(Value),
    Fatal(FatalKind),
}

type StepResult = Result<Rule, Halt>;

fn stuck(msg: String) -> StepResult {
    Err(Halt::Fatal(FatalKind::Stuck(msg)))
}

fn stuck_in_c(msg: String) -> StepResult {
    Err(Halt::Fatal(FatalKind::StuckInC(msg)))
}

fn describe(frames: &[Frame]) -> String {
    frames
        .last()
        .map(|f| f.summary())
        .unwrap_or_else(|| "no frames".to_string())
}

/// Applies a builtin to one more argument. Exceptions surface as a raise
/// of the label with payload 0 at the call site.
fn call_prim(frames: &mut Vec<Frame>, store: &mut crate::stdlib::Store, v: Value) -> Term {
    let Some(Frame::Fun(Value::Prim(p))) = frames.pop() else {
        unreachable!("caller checked the frame")
    };
    let mut args = p.args.clone();
    args.push(v);
    if args.len() < p.builtin.arity {
        return Term::Value(Value::Prim(Rc::new(PrimApp {
            builtin: p.builtin,
            args,
        })));
    }
    match (p.builtin.run)(store, &args) {
        Ok(v) => Term::Value(v),
        Err(label) => {
            frames.push(Frame::Fun(Value::Exn(label)));
            Term::Value(Value::Int(0))
        }
    }
}

fn enter(closure: &Closure, v: Value) -> (Term, Env) {
    (
        Term::expr(closure.body.clone()),
        closure.env.extend(closure.param.clone(), v),
    )
}

pub struct Machine {
    config: Configuration,
    runtime: FiberRuntime,
    options: RunOptions,
    steps: u64,
    next_c_segment: u64,
    context: Context,
    trace: Vec<TraceEvent>,
    phases: PhaseTracker,
    raise_backtrace: Option<Vec<BacktraceEntry>>,
    break_backtrace: Option<Vec<BacktraceEntry>>,
}

impl Machine {
    /// Machine at `⟨e, ∅, ([], •)⟩`.
    pub fn new(e: Rc<Expr>, options: RunOptions) -> Self {
        Machine::with_config(Configuration::initial(e), options)
    }

    pub fn with_config(config: Configuration, options: RunOptions) -> Self {
        let runtime = FiberRuntime::new(options.runtime.clone());
        let context = config.stack.context();
        let next_c_segment = config
            .stack
            .segments
            .iter()
            .filter_map(|s| match s {
                Segment::C { id, .. } => Some(*id + 1),
                _ => None,
            })
            .max()
            .unwrap_or(1);
        Machine {
            config,
            runtime,
            options,
            steps: 0,
            next_c_segment,
            context,
            trace: Vec::new(),
            phases: PhaseTracker::default(),
            raise_backtrace: None,
            break_backtrace: None,
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut Configuration {
        &mut self.config
    }

    pub fn runtime(&self) -> &FiberRuntime {
        &self.runtime
    }

    pub fn runtime_mut(&mut self) -> &mut FiberRuntime {
        &mut self.runtime
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn backtrace(&self) -> Vec<BacktraceEntry> {
        backtrace(&self.config.stack)
    }

    pub fn check_invariants(&self) -> Result<(), InvariantError> {
        self.config.stack.check_shape()?;
        for id in self.config.stack.live_fibers() {
            let state = self.runtime.fiber_state(id);
            if state != FiberState::Active {
                return Err(InvariantError::FiberState(id, state));
            }
        }
        Ok(())
    }

    /// Takes one step.
    pub fn step(&mut self) -> StepOutcome {
        let before = self.config.stack.context();
        let starts_raise =
            matches!(&self.config.term, Term::Expr(e) if matches!(**e, Expr::Raise(..)));
        let want_raise_bt = self.options.backtrace_on_error && starts_raise;
        let want_break_bt = self.options.break_on.is_some() && self.break_backtrace.is_none();
        let pre_bt = (want_raise_bt || want_break_bt).then(|| self.backtrace());

        self.runtime.set_clock(self.steps);
        let result = if self.config.stack.top().is_c() {
            self.c_step()
        } else {
            self.o_step()
        };
        let rule = match result {
            Ok(rule) => rule,
            Err(Halt::Done(v)) => return StepOutcome::Done(v),
            Err(Halt::Fatal(kind)) => return StepOutcome::Fatal(kind),
        };

        let index = self.steps;
        self.steps += 1;
        let m = &mut self.runtime.metrics;
        m.steps_total += 1;
        *m.per_rule.entry(rule.name()).or_insert(0) += 1;

        if let Some((id, frames)) = self.config.stack.top_group() {
            self.runtime.set_frames(id, frames as u64);
            if rule.is_checked_point() {
                self.runtime.overflow_check(id);
            }
        }
        let now = self.config.stack.context();
        if now != self.context {
            self.runtime.metrics.fiber_switches += 1;
            self.context = now;
        }

        if rule == Rule::Raise && want_raise_bt {
            self.raise_backtrace = pre_bt.clone();
        } else if self.options.backtrace_on_error
            && matches!(rule, Rule::CallPrim | Rule::Arith3 | Rule::Resume)
            && self.raising()
        {
            self.raise_backtrace = Some(self.backtrace());
        }
        if want_break_bt && self.options.break_on == Some(rule) {
            self.break_backtrace = pre_bt;
        }
        if self.options.trace {
            self.trace.push(TraceEvent {
                step: index,
                rule,
                context: before,
                depth: self.config.stack.depth(),
            });
        }
        self.phases.feed(index, rule);
        if self.options.check_invariants {
            if let Err(e) = self.check_invariants() {
                panic!("invariant violated after {rule} at step {index}: {e}");
            }
        } else {
            debug_assert!(self.config.stack.check_shape().is_ok());
        }
        StepOutcome::Next(rule)
    }

    fn raising(&self) -> bool {
        let top = match self.config.stack.top() {
            Segment::C { frames, .. } => frames.last(),
            Segment::OCaml { fibers } => fibers.last().and_then(|f| f.frames.last()),
        };
        matches!(top, Some(Frame::Fun(Value::Exn(_))))
    }

    fn c_step(&mut self) -> StepResult {
        let Configuration {
            term,
            env,
            stack,
            store,
        } = &mut self.config;
        let nseg = stack.segments.len();
        let Some(Segment::C { frames, .. }) = stack.segments.last_mut() else {
            unreachable!()
        };
        match admin_step(term, env, frames) {
            Admin::Stepped(rule) => return Ok(rule),
            Admin::Unbound(x) => return stuck(format!("unbound variable `{x}`")),
            Admin::NoMatch => {}
        }
        let v = match term {
            Term::Value(v) => v.clone(),
            Term::Expr(_) => return stuck_in_c("handler installed in C context".to_string()),
        };
        let Some(top) = frames.last() else {
            if nseg > 1 {
                stack.segments.pop();
                return Ok(Rule::RetToO);
            }
            return Err(Halt::Done(v));
        };
        let Frame::Fun(f) = top else {
            return stuck_in_c(format!("value {v} meets {}", top.summary()));
        };
        match f.clone() {
            Value::Closure(c) if c.kind == LamKind::C => {
                frames.pop();
                (*term, *env) = enter(&c, v);
                Ok(Rule::CallC)
            }
            Value::Closure(c) => {
                frames.pop();
                let id = self.runtime.alloc_fiber(None);
                stack.segments.push(Segment::OCaml {
                    fibers: vec![Fiber::identity(Some(id))],
                });
                (*term, *env) = enter(&c, v);
                Ok(Rule::Callback)
            }
            Value::Prim(_) => {
                *term = call_prim(frames, store, v);
                Ok(Rule::CallPrim)
            }
            Value::Exn(l) => {
                if nseg == 1 {
                    return Err(Halt::Fatal(FatalKind::UncaughtException(l)));
                }
                stack.segments.pop();
                let Some(Segment::OCaml { fibers }) = stack.segments.last_mut() else {
                    unreachable!()
                };
                let fiber = fibers.last_mut().expect("OCaml segments are never empty");
                fiber.frames.push(Frame::Fun(Value::Exn(l)));
                Ok(Rule::ExnFwdO)
            }
            Value::Eff(l, _) => stuck_in_c(format!("effect {l} performed in C context")),
            other => stuck_in_c(format!("cannot apply {}", other.kind_name())),
        }
    }

    fn o_step(&mut self) -> StepResult {
        let parent = self.config.stack.top_group().map(|(id, _)| id);
        let Configuration {
            term,
            env,
            stack,
            store,
        } = &mut self.config;
        let runtime = &mut self.runtime;
        let nseg = stack.segments.len();
        let Some(Segment::OCaml { fibers }) = stack.segments.last_mut() else {
            unreachable!()
        };
        let nfib = fibers.len();
        let fiber = fibers.last_mut().expect("OCaml segments are never empty");
        match admin_step(term, env, &mut fiber.frames) {
            Admin::Stepped(rule) => return Ok(rule),
            Admin::Unbound(x) => return stuck(format!("unbound variable `{x}`")),
            Admin::NoMatch => {}
        }

        let v = match term {
            Term::Value(v) => v.clone(),
            Term::Expr(e) => {
                let Expr::Handle(body, spec) = &**e else {
                    unreachable!("administrative rules cover every other expression")
                };
                let hc = Rc::new(HandlerClosure {
                    spec: spec.clone(),
                    env: env.clone(),
                });
                let body = body.clone();
                if self.options.opt_exn && spec.is_exception_only() {
                    fiber.frames.push(Frame::Trap(hc));
                    *term = Term::expr(body);
                    return Ok(Rule::TrapPush);
                }
                let id = runtime.alloc_fiber(parent);
                fibers.push(Fiber::new(hc, Some(id)));
                *term = Term::expr(body);
                return Ok(Rule::Handle);
            }
        };

        let Some(top) = fiber.frames.last() else {
            if nfib > 1 {
                let done = fibers.pop().expect("counted");
                if let Some(id) = done.meta {
                    runtime.free_fiber(id);
                }
                let case = &done.handler.spec.value_case;
                *term = Term::expr(case.body.clone());
                *env = done.handler.env.extend(case.param.clone(), v);
                return Ok(Rule::RetFib);
            }
            if !fiber.handler.is_identity() {
                return stuck("bottom fiber of an OCaml stack has a non-identity handler".into());
            }
            if let Some(id) = fiber.meta {
                runtime.free_fiber(id);
            }
            stack.segments.pop();
            return Ok(Rule::RetToC);
        };

        let f = match top {
            Frame::Fun(f) => f.clone(),
            Frame::Trap(_) => {
                let Some(Frame::Trap(h)) = fiber.frames.pop() else {
                    unreachable!()
                };
                let case = &h.spec.value_case;
                *term = Term::expr(case.body.clone());
                *env = h.env.extend(case.param.clone(), v);
                return Ok(Rule::TrapRet);
            }
            other => return stuck(format!("value {v} meets {}", other.summary())),
        };

        match f {
            Value::Closure(c) if c.kind == LamKind::OCaml => {
                fiber.frames.pop();
                (*term, *env) = enter(&c, v);
                Ok(Rule::CallO)
            }
            Value::Closure(c) => {
                fiber.frames.pop();
                let id = self.next_c_segment;
                self.next_c_segment += 1;
                stack.segments.push(Segment::C {
                    id,
                    frames: Vec::new(),
                });
                (*term, *env) = enter(&c, v);
                Ok(Rule::ExtCall)
            }
            Value::Prim(_) => {
                *term = call_prim(&mut fiber.frames, store, v);
                Ok(Rule::CallPrim)
            }
            Value::Exn(l) => {
                let below = fiber.frames.len() - 1;
                let trap = fiber.frames[..below]
                    .iter()
                    .rposition(|fr| matches!(fr, Frame::Trap(_)));
                if let Some(i) = trap {
                    let Frame::Trap(h) = fiber.frames[i].clone() else {
                        unreachable!()
                    };
                    fiber.frames.truncate(i);
                    if let Some(case) = h.spec.exn_case(&l) {
                        *term = Term::expr(case.body.clone());
                        *env = h.env.extend(case.param.clone(), v);
                        return Ok(Rule::TrapHn);
                    }
                    fiber.frames.push(Frame::Fun(Value::Exn(l)));
                    return Ok(Rule::TrapFwd);
                }
                let done = fibers.pop().expect("non-empty");
                if let Some(id) = done.meta {
                    runtime.free_fiber(id);
                }
                if let Some(case) = done.handler.spec.exn_case(&l) {
                    *term = Term::expr(case.body.clone());
                    *env = done.handler.env.extend(case.param.clone(), v);
                    return Ok(Rule::ExnHn);
                }
                if let Some(next) = fibers.last_mut() {
                    next.frames.push(Frame::Fun(Value::Exn(l)));
                    return Ok(Rule::ExnFwdFib);
                }
                stack.segments.pop();
                debug_assert!(nseg > 1);
                let Some(Segment::C { frames, .. }) = stack.segments.last_mut() else {
                    unreachable!()
                };
                frames.push(Frame::Fun(Value::Exn(l)));
                Ok(Rule::ExnFwdC)
            }
            Value::Eff(..) => {
                let Some(Frame::Fun(Value::Eff(l, k))) = fiber.frames.pop() else {
                    unreachable!()
                };
                let mut k = *k;
                let depth = (k.len() - 1) as u64;
                let handler = fiber.handler.clone();
                if let Some(case) = handler.spec.eff_case(&l) {
                    *runtime
                        .metrics
                        .handler_search_depths
                        .entry(depth)
                        .or_insert(0) += 1;
                    let done = fibers.pop().expect("non-empty");
                    k.append(done);
                    let id = runtime.capture(&k.real_fibers(), continuation_entries(&k));
                    let kont = Value::Kont(KontCell::new(id, k));
                    *term = Term::expr(case.body.clone());
                    *env = handler
                        .env
                        .extend(case.kont_param.clone(), kont)
                        .extend(case.param.clone(), v);
                    return Ok(Rule::EffHn);
                }
                if nfib > 1 {
                    let done = fibers.pop().expect("non-empty");
                    if let Some(id) = done.meta {
                        runtime.mark_captured(id);
                    }
                    k.append(done);
                    let next = fibers.last_mut().expect("counted");
                    next.frames.push(Frame::Fun(Value::Eff(l, Box::new(k))));
                    return Ok(Rule::EffFwd);
                }
                *runtime
                    .metrics
                    .handler_search_depths
                    .entry(depth)
                    .or_insert(0) += 1;
                let bottom = fibers.pop().expect("non-empty");
                let reinstated = k.real_fibers();
                runtime.reinstate(&reinstated, bottom.meta);
                k.append(bottom);
                fibers.extend(k.fibers.into_iter().rev());
                *term = Term::expr(Expr::raise(UNHANDLED, Expr::int(0)));
                *env = Env::empty();
                Ok(Rule::EffUnHn)
            }
            Value::Kont(cell) => {
                let n = fiber.frames.len();
                let resumer = match n.checked_sub(2).map(|i| &fiber.frames[i]) {
                    Some(Frame::Fun(Value::Closure(c))) if c.kind == LamKind::OCaml => c.clone(),
                    _ => {
                        return stuck(format!(
                            "continuation k#{} applied without a resumer",
                            cell.id.0
                        ))
                    }
                };
                fiber.frames.truncate(n - 2);
                let taken = match runtime.mode() {
                    ContinuationMode::OneShot => cell.fibers.borrow_mut().take(),
                    ContinuationMode::MultiShot => cell.fibers.borrow().clone(),
                };
                let Some(mut k) = taken else {
                    fiber
                        .frames
                        .push(Frame::Fun(Value::Exn(Label::new(INVALID_ARGUMENT))));
                    *term = Term::Value(Value::Int(0));
                    return Ok(Rule::Resume);
                };
                if runtime.resume(cell.id, &k.real_fibers(), parent).is_err() {
                    unreachable!("a continuation with fibers is fresh");
                }
                if runtime.mode() == ContinuationMode::MultiShot {
                    let mut up = parent;
                    for f in k.fibers.iter_mut().rev() {
                        if let Some(id) = f.meta {
                            let copy = runtime.copy_fiber(id, up);
                            f.meta = Some(copy);
                            up = Some(copy);
                        }
                    }
                }
                fibers.extend(k.fibers.into_iter().rev());
                (*term, *env) = enter(&resumer, v);
                Ok(Rule::Resume)
            }
            other => stuck(format!(
                "cannot apply {} (top frame {})",
                other.kind_name(),
                describe(&fiber.frames)
            )),
        }
    }

    /// Steps until the program finishes or the step budget runs out.
    pub fn run(mut self) -> RunResult {
        let outcome = loop {
            if self.steps >= self.options.max_steps {
                break Outcome::StepBudgetExceeded;
            }
            match self.step() {
                StepOutcome::Next(_) => {}
                StepOutcome::Done(v) => break Outcome::Done(v),
                StepOutcome::Fatal(kind) => {
                    let backtrace = if !self.options.backtrace_on_error {
                        Vec::new()
                    } else if let (FatalKind::UncaughtException(_), Some(bt)) =
                        (&kind, self.raise_backtrace.take())
                    {
                        bt
                    } else {
                        self.backtrace()
                    };
                    break Outcome::Fatal { kind, backtrace };
                }
            }
        };
        let mut metrics = self.runtime.metrics.clone();
        for w in self.phases.windows() {
            metrics.phase_counts.add(w);
            metrics.phase_windows += 1;
        }
        RunResult {
            outcome,
            output: self.config.store.output.clone(),
            metrics,
            trace: std::mem::take(&mut self.trace),
            leaks: self.runtime.leak_report(),
            break_backtrace: self.break_backtrace.take(),
            live_fibers: self.runtime.live_fibers(),
        }
    }
}

/// Runs an already wrapped entry expression.
pub fn run_expr(entry: Rc<Expr>, options: &RunOptions) -> RunResult {
    Machine::new(entry, options.clone()).run()
}

pub fn run(program: &SourceProgram, options: &RunOptions) -> RunResult {
    run_expr(program.entry.clone(), options)
}

/// Parses, wraps and runs program text.
pub fn run_source(
    source: &str,
    options: &RunOptions,
) -> Result<RunResult, crate::lang::ParseError> {
    let program = SourceProgram::from_source("<input>", source)?;
    Ok(run(&program, options))
}
