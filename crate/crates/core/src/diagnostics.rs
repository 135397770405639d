//! Rule traces, symbolic backtraces across fibers and C segments, and
//! phase step counters for a single handle/perform/continue round trip.

use std::fmt;

use crate::machine::{Context, Continuation, Fiber, KontCell, Rule, Segment, Stack};
use crate::runtime::{FiberId, PhaseCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    C,
    OCaml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    ExtCall,
    Callback,
    HandlerPush,
}

/// One line of a backtrace: a frame, or a marker where one stack region
/// ends and the next begins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktraceEntry {
    pub segment: SegmentKind,
    /// `None` in C segments and for unallocated perform-site fibers.
    pub fiber: Option<FiberId>,
    pub summary: String,
    pub boundary: Option<Boundary>,
}

impl BacktraceEntry {
    pub fn segment_label(&self) -> String {
        match (self.segment, self.fiber) {
            (SegmentKind::C, _) => "C".to_string(),
            (SegmentKind::OCaml, Some(id)) => format!("OCaml[{id}]"),
            (SegmentKind::OCaml, None) => "OCaml[*]".to_string(),
        }
    }
}

impl fmt::Display for BacktraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.segment_label(), self.summary)
    }
}

/// `#<n> <segment> <summary>` lines.
pub fn format_backtrace(entries: &[BacktraceEntry]) -> Vec<String> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| format!("#{i} {e}"))
        .collect()
}

fn push_fiber(out: &mut Vec<BacktraceEntry>, fiber: &Fiber, marker: (String, Boundary)) {
    for frame in fiber.frames.iter().rev() {
        out.push(BacktraceEntry {
            segment: SegmentKind::OCaml,
            fiber: fiber.meta,
            summary: frame.summary(),
            boundary: None,
        });
    }
    out.push(BacktraceEntry {
        segment: SegmentKind::OCaml,
        fiber: fiber.meta,
        summary: marker.0,
        boundary: Some(marker.1),
    });
}

fn handler_marker(fiber: &Fiber) -> (String, Boundary) {
    (
        format!("handler {}", fiber.handler.spec.summary()),
        Boundary::HandlerPush,
    )
}

/// Full walk of a stack, innermost first.
pub fn backtrace(stack: &Stack) -> Vec<BacktraceEntry> {
    let mut out = Vec::new();
    for (i, seg) in stack.segments.iter().enumerate().rev() {
        match seg {
            Segment::C { frames, .. } => {
                for frame in frames.iter().rev() {
                    out.push(BacktraceEntry {
                        segment: SegmentKind::C,
                        fiber: None,
                        summary: frame.summary(),
                        boundary: None,
                    });
                }
                let (summary, boundary) = if i > 0 {
                    ("extcall", Some(Boundary::ExtCall))
                } else {
                    ("entry", None)
                };
                out.push(BacktraceEntry {
                    segment: SegmentKind::C,
                    fiber: None,
                    summary: summary.to_string(),
                    boundary,
                });
            }
            Segment::OCaml { fibers } => {
                for (j, fiber) in fibers.iter().enumerate().rev() {
                    let marker = if j == 0 {
                        ("callback".to_string(), Boundary::Callback)
                    } else {
                        handler_marker(fiber)
                    };
                    push_fiber(&mut out, fiber, marker);
                }
            }
        }
    }
    out
}

/// Walk of captured fibers, innermost first.
pub fn continuation_entries(k: &Continuation) -> Vec<BacktraceEntry> {
    let mut out = Vec::new();
    for fiber in &k.fibers {
        push_fiber(&mut out, fiber, handler_marker(fiber));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("continuation k#{0} was already resumed")]
    UsedContinuation(u64),
    #[error("trace does not contain a handle/perform/continue/return round trip")]
    NoPhaseWindow,
}

/// Backtrace of a continuation value that has not been resumed yet.
pub fn continuation_backtrace(k: &KontCell) -> Result<Vec<BacktraceEntry>, DiagnosticsError> {
    match &*k.fibers.borrow() {
        Some(c) => Ok(continuation_entries(c)),
        None => Err(DiagnosticsError::UsedContinuation(k.id.0)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    pub rule: Rule,
    /// Where the rule fired.
    pub context: Context,
    /// Number of stack segments after the step.
    pub depth: usize,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.step, self.rule, self.context)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Handled { a: u64 },
    Performed { a: u64, b: u64 },
    Caught { a: u64, b: u64, c: u64 },
    Resumed { a: u64, b: u64, c: u64 },
    Returned { a: u64, b: u64, c: u64, d: u64 },
}

/// Recognises `Handle, Perform, .., EffHn, .., Resume, .., RetFib, RetFib`
/// windows in a rule stream.
///
/// The points are: a = Handle, b = Perform (first step of the body),
/// c = EffHn, d = the step after the perform site's fiber returns,
/// e = the step after the handler's fiber returns.
#[derive(Debug, Clone)]
pub struct PhaseTracker {
    phase: Phase,
    windows: Vec<PhaseCounts>,
}

impl Default for PhaseTracker {
    fn default() -> Self {
        PhaseTracker {
            phase: Phase::Idle,
            windows: Vec::new(),
        }
    }
}

impl PhaseTracker {
    pub fn feed(&mut self, step: u64, rule: Rule) {
        use Phase::*;
        self.phase = match (self.phase, rule) {
            (_, Rule::Handle) => Handled { a: step },
            (Handled { a }, Rule::Perform) if step == a + 1 => Performed { a, b: step },
            (Handled { .. }, _) => Idle,
            (Performed { a, b }, Rule::EffHn) => Caught { a, b, c: step },
            (Caught { a, b, c }, Rule::Resume) => Resumed { a, b, c },
            (Resumed { a, b, c }, Rule::RetFib) => Returned {
                a,
                b,
                c,
                d: step + 1,
            },
            (Returned { a, b, c, d }, Rule::RetFib) => {
                let e = step + 1;
                self.windows.push(PhaseCounts {
                    a_b: b - a,
                    b_c: c - b,
                    c_d: d - c,
                    d_e: e - d,
                });
                Idle
            }
            (
                Performed { .. } | Caught { .. } | Resumed { .. } | Returned { .. },
                Rule::Perform | Rule::EffHn | Rule::Resume | Rule::EffUnHn,
            ) => Idle,
            (p, _) => p,
        };
    }

    pub fn windows(&self) -> &[PhaseCounts] {
        &self.windows
    }
}

/// Phase counts of every complete window in a trace, in order.
pub fn phase_windows(trace: &[TraceEvent]) -> Vec<PhaseCounts> {
    let mut t = PhaseTracker::default();
    for ev in trace {
        t.feed(ev.step, ev.rule);
    }
    t.windows
}

/// Phase counts of the first window in a trace.
pub fn phase_counters(trace: &[TraceEvent]) -> Result<PhaseCounts, DiagnosticsError> {
    phase_windows(trace)
        .first()
        .copied()
        .ok_or(DiagnosticsError::NoPhaseWindow)
}
