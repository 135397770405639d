use std::fmt;
use std::rc::Rc;

/// Variable names. Shared so that closures and frames clone cheaply.
pub type Ident = Rc<str>;

/// An exception or effect label. Labels carry no declaration; two labels are
/// the same label when their names are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Rc<str>);

impl Label {
    pub fn new(name: &str) -> Self {
        assert!(!name.is_empty(), "labels are non-empty");
        Label(Rc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Calling convention of an abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LamKind {
    /// `lambda`: runs on the current OCaml fiber.
    OCaml,
    /// `clambda`: runs on a C stack segment.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "+" => Some(ArithOp::Add),
            "-" => Some(ArithOp::Sub),
            "*" => Some(ArithOp::Mul),
            "/" => Some(ArithOp::Div),
            _ => None,
        }
    }

    /// Integer semantics of the operator. Wraps on overflow and truncates
    /// division toward zero; `None` signals division by zero.
    pub fn apply(self, lhs: i64, rhs: i64) -> Option<i64> {
        match self {
            ArithOp::Add => Some(lhs.wrapping_add(rhs)),
            ArithOp::Sub => Some(lhs.wrapping_sub(rhs)),
            ArithOp::Mul => Some(lhs.wrapping_mul(rhs)),
            ArithOp::Div => {
                if rhs == 0 {
                    None
                } else {
                    Some(lhs.wrapping_div(rhs))
                }
            }
        }
    }
}

/// Core expressions. `let`, `continue` and `discontinue` never appear here;
/// the parser expands them.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Var(Ident),
    App(Rc<Expr>, Rc<Expr>),
    Lam(LamKind, Ident, Rc<Expr>),
    Arith(ArithOp, Rc<Expr>, Rc<Expr>),
    Raise(Label, Rc<Expr>),
    Perform(Label, Rc<Expr>),
    Handle(Rc<Expr>, Rc<HandlerSpec>),
}

impl Expr {
    pub fn int(n: i64) -> Rc<Expr> {
        Rc::new(Expr::Int(n))
    }

    pub fn var(name: &str) -> Rc<Expr> {
        Rc::new(Expr::Var(Rc::from(name)))
    }

    pub fn app(f: Rc<Expr>, arg: Rc<Expr>) -> Rc<Expr> {
        Rc::new(Expr::App(f, arg))
    }

    pub fn lam(kind: LamKind, param: &str, body: Rc<Expr>) -> Rc<Expr> {
        Rc::new(Expr::Lam(kind, Rc::from(param), body))
    }

    pub fn arith(op: ArithOp, lhs: Rc<Expr>, rhs: Rc<Expr>) -> Rc<Expr> {
        Rc::new(Expr::Arith(op, lhs, rhs))
    }

    pub fn raise(label: &str, payload: Rc<Expr>) -> Rc<Expr> {
        Rc::new(Expr::Raise(Label::new(label), payload))
    }

    pub fn perform(label: &str, payload: Rc<Expr>) -> Rc<Expr> {
        Rc::new(Expr::Perform(Label::new(label), payload))
    }

    pub fn handle(body: Rc<Expr>, handler: HandlerSpec) -> Rc<Expr> {
        Rc::new(Expr::Handle(body, Rc::new(handler)))
    }

    /// Number of nodes in the tree, handler case bodies included.
    pub fn size(&self) -> usize {
        match self {
            Expr::Int(_) | Expr::Var(_) => 1,
            Expr::App(a, b) | Expr::Arith(_, a, b) => 1 + a.size() + b.size(),
            Expr::Lam(_, _, b) | Expr::Raise(_, b) | Expr::Perform(_, b) => 1 + b.size(),
            Expr::Handle(body, h) => {
                1 + body.size()
                    + h.value_case.body.size()
                    + h.exn_cases.iter().map(|c| c.body.size()).sum::<usize>()
                    + h.eff_cases.iter().map(|c| c.body.size()).sum::<usize>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueCase {
    pub param: Ident,
    pub body: Rc<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExnCase {
    pub label: Label,
    pub param: Ident,
    pub body: Rc<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffCase {
    pub label: Label,
    pub param: Ident,
    pub kont_param: Ident,
    pub body: Rc<Expr>,
}

/// A handler: one value case plus at most one exception case and at most one
/// effect case per label.
#[derive(Debug, Clone, PartialEq)]
pub struct HandlerSpec {
    pub value_case: ValueCase,
    pub exn_cases: Vec<ExnCase>,
    pub eff_cases: Vec<EffCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HandlerError {
    #[error("duplicate exception case for label {0}")]
    DuplicateExn(Label),
    #[error("duplicate effect case for label {0}")]
    DuplicateEff(Label),
}

impl HandlerSpec {
    pub fn new(
        value_case: ValueCase,
        exn_cases: Vec<ExnCase>,
        eff_cases: Vec<EffCase>,
    ) -> Result<Self, HandlerError> {
        let spec = HandlerSpec {
            value_case,
            exn_cases,
            eff_cases,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The `{val x -> x}` handler used for callback and perform-site fibers.
    pub fn identity() -> Self {
        HandlerSpec {
            value_case: ValueCase {
                param: Rc::from("x"),
                body: Expr::var("x"),
            },
            exn_cases: Vec::new(),
            eff_cases: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), HandlerError> {
        for (i, c) in self.exn_cases.iter().enumerate() {
            if self.exn_cases[..i].iter().any(|o| o.label == c.label) {
                return Err(HandlerError::DuplicateExn(c.label.clone()));
            }
        }
        for (i, c) in self.eff_cases.iter().enumerate() {
            if self.eff_cases[..i].iter().any(|o| o.label == c.label) {
                return Err(HandlerError::DuplicateEff(c.label.clone()));
            }
        }
        Ok(())
    }

    /// True for a handler of the exact shape `{val x -> x}`.
    pub fn is_identity(&self) -> bool {
        self.exn_cases.is_empty()
            && self.eff_cases.is_empty()
            && matches!(&*self.value_case.body, Expr::Var(v) if *v == self.value_case.param)
    }

    pub fn exn_case(&self, label: &Label) -> Option<&ExnCase> {
        self.exn_cases.iter().find(|c| &c.label == label)
    }

    pub fn eff_case(&self, label: &Label) -> Option<&EffCase> {
        self.eff_cases.iter().find(|c| &c.label == label)
    }

    /// Exception-only handlers qualify for the linked trap-frame fast path.
    pub fn is_exception_only(&self) -> bool {
        self.eff_cases.is_empty()
    }

    /// Short structural summary, e.g. `{val x; exn E1; eff Yield}`.
    pub fn summary(&self) -> String {
        let mut parts = vec![format!("val {}", self.value_case.param)];
        parts.extend(self.exn_cases.iter().map(|c| format!("exn {}", c.label)));
        parts.extend(self.eff_cases.iter().map(|c| format!("eff {}", c.label)));
        format!("{{{}}}", parts.join("; "))
    }
}
