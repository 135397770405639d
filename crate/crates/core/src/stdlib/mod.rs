//! Native builtins and the example corpus.

mod builtins;
mod corpus;
mod store;

pub use builtins::{
    builtin_table, lookup_builtin, Builtin, BuiltinResult, ASSERT_FAILURE, END_OF_FILE,
    INVALID_ARGUMENT, QUEUE_EMPTY, SYS_ERROR,
};
pub use corpus::{corpus, corpus_entries, demos, find_example, CorpusEntry};
pub use store::{Cell, CellId, Channel, OutputEntry, Store};
