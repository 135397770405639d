use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::lang::{print_short, ArithOp, Expr, HandlerSpec, Ident, Label, LamKind};
use crate::runtime::{FiberId, KontId};
use crate::stdlib::{Builtin, CellId};

/// Persistent environment. Extension shares the tail, so capturing an
/// environment in a closure or frame is O(1).
#[derive(Clone, Default)]
pub struct Env(Option<Rc<EnvNode>>);

struct EnvNode {
    name: Ident,
    value: Value,
    next: Env,
}

impl Env {
    pub fn empty() -> Self {
        Env(None)
    }

    pub fn extend(&self, name: Ident, value: Value) -> Env {
        Env(Some(Rc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if &*node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    /// Bindings newest first, shadowed ones included.
    pub fn bindings(&self) -> Vec<(Ident, Value)> {
        let mut out = Vec::new();
        let mut cur = &self.0;
        while let Some(node) = cur {
            out.push((node.name.clone(), node.value.clone()));
            cur = &node.next.0;
        }
        out
    }
}

impl PartialEq for Env {
    fn eq(&self, other: &Env) -> bool {
        match (&self.0, &other.0) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                Rc::ptr_eq(a, b) || (a.name == b.name && a.value == b.value && a.next == b.next)
            }
            _ => false,
        }
    }
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.bindings().iter().map(|(k, v)| (k.to_string(), v)))
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub kind: LamKind,
    pub param: Ident,
    pub body: Rc<Expr>,
    pub env: Env,
}

impl Closure {
    pub fn source(&self) -> Rc<Expr> {
        Rc::new(Expr::Lam(self.kind, self.param.clone(), self.body.clone()))
    }
}

/// A handler together with the environment it was installed in.
#[derive(Debug, Clone, PartialEq)]
pub struct HandlerClosure {
    pub spec: Rc<HandlerSpec>,
    pub env: Env,
}

thread_local! {
    static IDENTITY: Rc<HandlerClosure> = Rc::new(HandlerClosure {
        spec: Rc::new(HandlerSpec::identity()),
        env: Env::empty(),
    });
}

impl HandlerClosure {
    /// `({val x -> x}, ∅)`, shared.
    pub fn identity() -> Rc<HandlerClosure> {
        IDENTITY.with(Rc::clone)
    }

    pub fn is_identity(&self) -> bool {
        self.spec.is_identity() && self.env.is_empty()
    }
}

/// A builtin applied to the arguments collected so far.
#[derive(Debug, Clone)]
pub struct PrimApp {
    pub builtin: &'static Builtin,
    pub args: Vec<Value>,
}

impl PartialEq for PrimApp {
    fn eq(&self, other: &PrimApp) -> bool {
        self.builtin.name == other.builtin.name && self.args == other.args
    }
}

/// A continuation value. In one-shot mode the fibers are moved out on
/// resumption, leaving the cell empty.
#[derive(Debug)]
pub struct KontCell {
    pub id: KontId,
    pub fibers: RefCell<Option<Continuation>>,
}

impl KontCell {
    pub fn new(id: KontId, k: Continuation) -> Rc<KontCell> {
        Rc::new(KontCell {
            id,
            fibers: RefCell::new(Some(k)),
        })
    }

    pub fn is_used(&self) -> bool {
        self.fibers.borrow().is_none()
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Closure(Rc<Closure>),
    Kont(Rc<KontCell>),
    /// An effect being performed, with the continuation captured so far.
    Eff(Label, Box<Continuation>),
    /// An exception being raised.
    Exn(Label),
    Prim(Rc<PrimApp>),
    CellRef(CellId),
    Pair(Rc<(Value, Value)>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::Kont(a), Value::Kont(b)) => a.id == b.id,
            (Value::Eff(la, ka), Value::Eff(lb, kb)) => la == lb && ka == kb,
            (Value::Exn(a), Value::Exn(b)) => a == b,
            (Value::Prim(a), Value::Prim(b)) => a == b,
            (Value::CellRef(a), Value::CellRef(b)) => a == b,
            (Value::Pair(a), Value::Pair(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    pub fn closure(kind: LamKind, param: Ident, body: Rc<Expr>, env: Env) -> Value {
        Value::Closure(Rc::new(Closure {
            kind,
            param,
            body,
            env,
        }))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Rc::new((a, b)))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Closure(_) => "closure",
            Value::Kont(_) => "continuation",
            Value::Eff(..) => "effect",
            Value::Exn(_) => "exception",
            Value::Prim(_) => "builtin",
            Value::CellRef(_) => "cell",
            Value::Pair(_) => "pair",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Closure(_) => f.write_str("<fun>"),
            Value::Kont(k) => write!(f, "<cont#{}>", k.id.0),
            Value::Eff(l, _) => write!(f, "<eff {l}>"),
            Value::Exn(l) => write!(f, "<exn {l}>"),
            Value::Prim(p) => write!(f, "<prim {}>", p.builtin.name),
            Value::CellRef(id) => write!(f, "<ref#{}>", id.0),
            Value::Pair(p) => write!(f, "({}, {})", p.0, p.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// Function position evaluating; the argument waits.
    Arg(Rc<Expr>, Env),
    /// Argument evaluating; the function waits.
    Fun(Value),
    Arith1(ArithOp, Rc<Expr>, Env),
    Arith2(ArithOp, i64),
    /// Linked exception handler standing in for an exception-only fiber.
    Trap(Rc<HandlerClosure>),
}

impl Frame {
    pub fn summary(&self) -> String {
        match self {
            Frame::Arg(e, _) => format!("arg {}", print_short(e, 40)),
            Frame::Fun(Value::Closure(c)) => format!("fun {}", print_short(&c.source(), 40)),
            Frame::Fun(Value::Exn(l)) => format!("raise {l}"),
            Frame::Fun(Value::Eff(l, _)) => format!("perform {l}"),
            Frame::Fun(Value::Kont(k)) => format!("resume k#{}", k.id.0),
            Frame::Fun(v) => format!("fun {v}"),
            Frame::Arith1(op, e, _) => format!("arith1 ({} _ {})", op.symbol(), print_short(e, 30)),
            Frame::Arith2(op, n) => format!("arith2 ({} {n} _)", op.symbol()),
            Frame::Trap(h) => format!("trap {}", h.spec.summary()),
        }
    }
}

/// One handler-delimited stack. `meta` is `None` for the identity fibers
/// created at perform sites, which are never allocated by the runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    /// Top of stack is the last element.
    pub frames: Vec<Frame>,
    pub handler: Rc<HandlerClosure>,
    pub meta: Option<FiberId>,
}

impl Fiber {
    pub fn new(handler: Rc<HandlerClosure>, meta: Option<FiberId>) -> Fiber {
        Fiber {
            frames: Vec::new(),
            handler,
            meta,
        }
    }

    pub fn identity(meta: Option<FiberId>) -> Fiber {
        Fiber::new(HandlerClosure::identity(), meta)
    }
}

/// Captured fibers, innermost first. `k @ [φ]` is a push.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Continuation {
    pub fibers: Vec<Fiber>,
}

impl Continuation {
    pub fn new(fibers: Vec<Fiber>) -> Self {
        Continuation { fibers }
    }

    /// The continuation of a fresh perform: one empty identity fiber.
    pub fn perform_site() -> Self {
        Continuation {
            fibers: vec![Fiber::identity(None)],
        }
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    pub fn append(&mut self, outer: Fiber) {
        self.fibers.push(outer);
    }

    pub fn real_fibers(&self) -> Vec<FiberId> {
        self.fibers.iter().filter_map(|f| f.meta).collect()
    }
}
