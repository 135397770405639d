use std::fmt;
use std::rc::Rc;

use super::value::{Env, Fiber, Frame, Value};
use crate::lang::Expr;
use crate::runtime::FiberId;
use crate::stdlib::Store;

/// One stack segment. OCaml segments hold their fibers bottom first; the
/// executing fiber is the last one.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    C { id: u64, frames: Vec<Frame> },
    OCaml { fibers: Vec<Fiber> },
}

impl Segment {
    pub fn is_c(&self) -> bool {
        matches!(self, Segment::C { .. })
    }
}

/// Alternating chain of C and OCaml segments. `segments[0]` is the entry C
/// stack sitting on the empty OCaml stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StackShapeError {
    #[error("stack has no segments")]
    Empty,
    #[error("segment {0} breaks C/OCaml alternation")]
    Alternation(usize),
    #[error("OCaml segment {0} has no fibers")]
    EmptyOCaml(usize),
}

/// Where execution currently happens, for switch counting and traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    C(u64),
    Fiber(FiberId),
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::C(_) => f.write_str("C"),
            Context::Fiber(id) => write!(f, "{id}"),
        }
    }
}

impl Stack {
    /// `([], •)`.
    pub fn entry() -> Self {
        Stack {
            segments: vec![Segment::C {
                id: 0,
                frames: Vec::new(),
            }],
        }
    }

    pub fn top(&self) -> &Segment {
        self.segments.last().expect("stack is never empty")
    }

    pub fn top_mut(&mut self) -> &mut Segment {
        self.segments.last_mut().expect("stack is never empty")
    }

    pub fn depth(&self) -> usize {
        self.segments.len()
    }

    /// Total frames over every segment and fiber.
    pub fn frame_count(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::C { frames, .. } => frames.len(),
                Segment::OCaml { fibers } => fibers.iter().map(|f| f.frames.len()).sum(),
            })
            .sum()
    }

    pub fn check_shape(&self) -> Result<(), StackShapeError> {
        if self.segments.is_empty() {
            return Err(StackShapeError::Empty);
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.is_c() != (i % 2 == 0) {
                return Err(StackShapeError::Alternation(i));
            }
            if let Segment::OCaml { fibers } = s {
                if fibers.is_empty() {
                    return Err(StackShapeError::EmptyOCaml(i));
                }
            }
        }
        Ok(())
    }

    /// Index of the executing allocated fiber in the top OCaml segment and
    /// the number of frames charged to it (its own plus those of unallocated
    /// fibers above it).
    pub fn top_group(&self) -> Option<(FiberId, usize)> {
        let Segment::OCaml { fibers } = self.top() else {
            return None;
        };
        let mut frames = 0;
        for f in fibers.iter().rev() {
            frames += f.frames.len();
            if let Some(id) = f.meta {
                return Some((id, frames));
            }
        }
        None
    }

    pub fn context(&self) -> Context {
        match self.top() {
            Segment::C { id, .. } => Context::C(*id),
            Segment::OCaml { .. } => match self.top_group() {
                Some((id, _)) => Context::Fiber(id),
                None => Context::C(u64::MAX),
            },
        }
    }

    /// Every allocated fiber on the live stack.
    pub fn live_fibers(&self) -> Vec<FiberId> {
        let mut out = Vec::new();
        for s in &self.segments {
            if let Segment::OCaml { fibers } = s {
                out.extend(fibers.iter().filter_map(|f| f.meta));
            }
        }
        out
    }
}

/// The term under evaluation. Integer constants are values from the start.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Expr(Rc<Expr>),
    Value(Value),
}

impl Term {
    pub fn expr(e: Rc<Expr>) -> Term {
        match &*e {
            Expr::Int(n) => Term::Value(Value::Int(*n)),
            _ => Term::Expr(e),
        }
    }
}

impl From<Value> for Term {
    fn from(v: Value) -> Term {
        Term::Value(v)
    }
}

/// `⟨τ, ε, σ⟩` plus the builtin store.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub term: Term,
    pub env: Env,
    pub stack: Stack,
    pub store: Store,
}

impl Configuration {
    /// `⟨e, ∅, ([], •)⟩`.
    pub fn initial(e: Rc<Expr>) -> Self {
        Configuration {
            term: Term::expr(e),
            env: Env::empty(),
            stack: Stack::entry(),
            store: Store::default(),
        }
    }
}
