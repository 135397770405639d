use std::collections::VecDeque;
use std::fmt;

use crate::machine::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub u32);

/// A simulated input channel yielding the integers `next..=last`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub next: i64,
    pub last: i64,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Ref(Value),
    Queue(VecDeque<Value>),
    Chan(Channel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputEntry {
    Int(i64),
    Text(String),
}

impl fmt::Display for OutputEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputEntry::Int(n) => write!(f, "{n}"),
            OutputEntry::Text(s) => f.write_str(s),
        }
    }
}

/// Mutable state reachable only through builtins.
#[derive(Debug, Clone, Default)]
pub struct Store {
    cells: Vec<Cell>,
    pub output: Vec<OutputEntry>,
}

impl Store {
    pub fn alloc(&mut self, cell: Cell) -> CellId {
        self.cells.push(cell);
        CellId((self.cells.len() - 1) as u32)
    }

    pub fn get(&self, id: CellId) -> Option<&Cell> {
        self.cells.get(id.0 as usize)
    }

    pub fn get_mut(&mut self, id: CellId) -> Option<&mut Cell> {
        self.cells.get_mut(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    pub fn emit(&mut self, entry: OutputEntry) {
        self.output.push(entry);
    }
}
