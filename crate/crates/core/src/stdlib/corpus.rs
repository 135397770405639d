use crate::lang::SourceProgram;

/// A shipped example with its expected `fibervm run` output under default
/// options.
#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub expected: &'static str,
    /// Part of the regular corpus: finishes with a value and leaks nothing.
    pub regular: bool,
}

impl CorpusEntry {
    pub fn program(&self) -> SourceProgram {
        SourceProgram::from_source(format!("examples/{}.fib", self.name), self.source)
            .unwrap_or_else(|e| panic!("example {} does not parse: {e}", self.name))
    }
}

macro_rules! entry {
    ($name:literal, $regular:expr) => {
        CorpusEntry {
            name: $name,
            source: include_str!(concat!("../../examples/", $name, ".fib")),
            expected: include_str!(concat!("../../examples/", $name, ".expected")),
            regular: $regular,
        }
    };
}

static ENTRIES: &[CorpusEntry] = &[
    entry!("meander", true),
    entry!("scheduler_fifo", true),
    entry!("scheduler_lifo", true),
    entry!("sync_io", true),
    entry!("async_io", true),
    entry!("copy", true),
    entry!("cleanup", true),
    entry!("c_barrier", true),
    entry!("phases", true),
    entry!("generator", true),
    entry!("chameneos_lite", true),
    entry!("double_resume", false),
    entry!("drop_continuation", false),
];

pub fn corpus_entries() -> &'static [CorpusEntry] {
    ENTRIES
}

/// Programs that run to a value with no leaked continuations.
pub fn corpus() -> Vec<SourceProgram> {
    ENTRIES
        .iter()
        .filter(|e| e.regular)
        .map(CorpusEntry::program)
        .collect()
}

/// Programs that demonstrate failure modes: a second resumption of a
/// one-shot continuation and a dropped continuation.
pub fn demos() -> Vec<SourceProgram> {
    ENTRIES
        .iter()
        .filter(|e| !e.regular)
        .map(CorpusEntry::program)
        .collect()
}

pub fn find_example(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}
