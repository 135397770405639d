use std::collections::VecDeque;

use super::store::{Cell, CellId, Channel, OutputEntry, Store};
use crate::lang::Label;
use crate::machine::Value;

pub const INVALID_ARGUMENT: &str = "Invalid_argument";
pub const QUEUE_EMPTY: &str = "Queue_Empty";
pub const ASSERT_FAILURE: &str = "Assert_failure";
pub const END_OF_FILE: &str = "End_of_file";
pub const SYS_ERROR: &str = "Sys_error";

/// Outcome of a builtin: a result value or the label of the exception it
/// raises (always with payload 0).
pub type BuiltinResult = Result<Value, Label>;

/// A native function executed in one step by `CallPrim`. Nullary builtins
/// take one ignored argument, so `arity` is at least 1.
pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    pub run: fn(&mut Store, &[Value]) -> BuiltinResult,
}

impl std::fmt::Debug for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

fn invalid() -> Label {
    Label::new(INVALID_ARGUMENT)
}

fn int(v: &Value) -> Result<i64, Label> {
    v.as_int().ok_or_else(invalid)
}

fn cell_id(v: &Value) -> Result<CellId, Label> {
    match v {
        Value::CellRef(id) => Ok(*id),
        _ => Err(invalid()),
    }
}

fn ref_cell<'a>(store: &'a mut Store, v: &Value) -> Result<&'a mut Value, Label> {
    match store.get_mut(cell_id(v)?) {
        Some(Cell::Ref(x)) => Ok(x),
        _ => Err(invalid()),
    }
}

fn queue<'a>(store: &'a mut Store, v: &Value) -> Result<&'a mut VecDeque<Value>, Label> {
    match store.get_mut(cell_id(v)?) {
        Some(Cell::Queue(q)) => Ok(q),
        _ => Err(invalid()),
    }
}

fn chan<'a>(store: &'a mut Store, v: &Value) -> Result<&'a mut Channel, Label> {
    match store.get_mut(cell_id(v)?) {
        Some(Cell::Chan(c)) => Ok(c),
        _ => Err(invalid()),
    }
}

fn ref_new(store: &mut Store, a: &[Value]) -> BuiltinResult {
    Ok(Value::CellRef(store.alloc(Cell::Ref(a[0].clone()))))
}

fn ref_get(store: &mut Store, a: &[Value]) -> BuiltinResult {
    Ok(ref_cell(store, &a[0])?.clone())
}

fn ref_set(store: &mut Store, a: &[Value]) -> BuiltinResult {
    *ref_cell(store, &a[0])? = a[1].clone();
    Ok(Value::Int(0))
}

fn queue_new(store: &mut Store, _: &[Value]) -> BuiltinResult {
    Ok(Value::CellRef(store.alloc(Cell::Queue(VecDeque::new()))))
}

fn queue_push(store: &mut Store, a: &[Value]) -> BuiltinResult {
    queue(store, &a[0])?.push_back(a[1].clone());
    Ok(Value::Int(0))
}

fn queue_pop(store: &mut Store, a: &[Value]) -> BuiltinResult {
    queue(store, &a[0])?
        .pop_front()
        .ok_or_else(|| Label::new(QUEUE_EMPTY))
}

fn queue_pop_last(store: &mut Store, a: &[Value]) -> BuiltinResult {
    queue(store, &a[0])?
        .pop_back()
        .ok_or_else(|| Label::new(QUEUE_EMPTY))
}

fn queue_len(store: &mut Store, a: &[Value]) -> BuiltinResult {
    Ok(Value::Int(queue(store, &a[0])?.len() as i64))
}

fn print_int(store: &mut Store, a: &[Value]) -> BuiltinResult {
    let n = int(&a[0])?;
    store.emit(OutputEntry::Int(n));
    Ok(Value::Int(0))
}

fn assert_eq(_: &mut Store, a: &[Value]) -> BuiltinResult {
    if a[0] == a[1] {
        Ok(Value::Int(0))
    } else {
        Err(Label::new(ASSERT_FAILURE))
    }
}

fn ifz(_: &mut Store, a: &[Value]) -> BuiltinResult {
    Ok(if int(&a[0])? == 0 {
        a[1].clone()
    } else {
        a[2].clone()
    })
}

fn pair(_: &mut Store, a: &[Value]) -> BuiltinResult {
    Ok(Value::pair(a[0].clone(), a[1].clone()))
}

fn fst(_: &mut Store, a: &[Value]) -> BuiltinResult {
    match &a[0] {
        Value::Pair(p) => Ok(p.0.clone()),
        _ => Err(invalid()),
    }
}

fn snd(_: &mut Store, a: &[Value]) -> BuiltinResult {
    match &a[0] {
        Value::Pair(p) => Ok(p.1.clone()),
        _ => Err(invalid()),
    }
}

fn chan_open(store: &mut Store, a: &[Value]) -> BuiltinResult {
    let base = int(&a[0])?;
    let count = int(&a[1])?;
    if count < 0 {
        return Err(invalid());
    }
    Ok(Value::CellRef(store.alloc(Cell::Chan(Channel {
        next: base + 1,
        last: base + count,
        closed: false,
    }))))
}

fn read_line(c: &mut Channel) -> BuiltinResult {
    if c.closed {
        return Err(Label::new(SYS_ERROR));
    }
    if c.next > c.last {
        return Err(Label::new(END_OF_FILE));
    }
    c.next += 1;
    Ok(Value::Int(c.next - 1))
}

fn chan_read(store: &mut Store, a: &[Value]) -> BuiltinResult {
    read_line(chan(store, &a[0])?)
}

fn chan_write(store: &mut Store, a: &[Value]) -> BuiltinResult {
    let n = int(&a[1])?;
    if chan(store, &a[0])?.closed {
        return Err(Label::new(SYS_ERROR));
    }
    store.emit(OutputEntry::Int(n));
    Ok(Value::Int(0))
}

fn chan_close(store: &mut Store, a: &[Value]) -> BuiltinResult {
    let c = chan(store, &a[0])?;
    if !c.closed {
        c.closed = true;
        store.emit(OutputEntry::Text("closed".to_string()));
    }
    Ok(Value::Int(0))
}

/// `do_reads per_call pending ready`: completes up to `per_call` pending
/// reads (all of them when 0). Each pending entry is `pair chan k`; the
/// completed read is pushed to `ready` as `pair line k`, with line -1 at end
/// of input. Returns the number completed.
fn do_reads(store: &mut Store, a: &[Value]) -> BuiltinResult {
    let per_call = int(&a[0])?;
    if per_call < 0 {
        return Err(invalid());
    }
    let pending_len = queue(store, &a[1])?.len();
    queue(store, &a[2])?;
    let n = if per_call == 0 {
        pending_len
    } else {
        pending_len.min(per_call as usize)
    };
    for _ in 0..n {
        let entry = queue(store, &a[1])?.pop_front().expect("counted above");
        let Value::Pair(p) = &entry else {
            return Err(invalid());
        };
        let line = match read_line(chan(store, &p.0)?) {
            Ok(v) => v,
            Err(l) if l.as_str() == END_OF_FILE => Value::Int(-1),
            Err(l) => return Err(l),
        };
        queue(store, &a[2])?.push_back(Value::pair(line, p.1.clone()));
    }
    Ok(Value::Int(n as i64))
}

static BUILTINS: &[Builtin] = &[
    Builtin {
        name: "ref_new",
        arity: 1,
        run: ref_new,
    },
    Builtin {
        name: "ref_get",
        arity: 1,
        run: ref_get,
    },
    Builtin {
        name: "ref_set",
        arity: 2,
        run: ref_set,
    },
    Builtin {
        name: "queue_new",
        arity: 1,
        run: queue_new,
    },
    Builtin {
        name: "queue_push",
        arity: 2,
        run: queue_push,
    },
    Builtin {
        name: "queue_pop",
        arity: 1,
        run: queue_pop,
    },
    Builtin {
        name: "queue_pop_last",
        arity: 1,
        run: queue_pop_last,
    },
    Builtin {
        name: "queue_len",
        arity: 1,
        run: queue_len,
    },
    Builtin {
        name: "print_int",
        arity: 1,
        run: print_int,
    },
    Builtin {
        name: "assert_eq",
        arity: 2,
        run: assert_eq,
    },
    Builtin {
        name: "ifz",
        arity: 3,
        run: ifz,
    },
    Builtin {
        name: "pair",
        arity: 2,
        run: pair,
    },
    Builtin {
        name: "fst",
        arity: 1,
        run: fst,
    },
    Builtin {
        name: "snd",
        arity: 1,
        run: snd,
    },
    Builtin {
        name: "chan_open",
        arity: 2,
        run: chan_open,
    },
    Builtin {
        name: "chan_read",
        arity: 1,
        run: chan_read,
    },
    Builtin {
        name: "chan_write",
        arity: 2,
        run: chan_write,
    },
    Builtin {
        name: "chan_close",
        arity: 1,
        run: chan_close,
    },
    Builtin {
        name: "do_reads",
        arity: 3,
        run: do_reads,
    },
];

pub fn builtin_table() -> &'static [Builtin] {
    BUILTINS
}

pub fn lookup_builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}
