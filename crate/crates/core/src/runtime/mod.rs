//! Word-accounted fiber runtime.
//!
//! Fibers start with a small usable area below a fixed red zone and double in
//! size when a checked point finds the stack pointer inside the red zone.
//! Freed fibers go to a bounded stack cache. Captured continuations are
//! tracked in a registry that enforces at-most-once resumption in one-shot
//! mode and feeds the end-of-run leak report.

mod metrics;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::diagnostics::BacktraceEntry;

pub use metrics::{Metrics, PhaseCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiberId(pub u64);

impl fmt::Display for FiberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KontId(pub u64);

impl fmt::Display for KontId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContinuationMode {
    /// Continuations own their fibers and may be resumed once.
    #[default]
    OneShot,
    /// Resuming copies the captured fibers and leaves the continuation intact.
    MultiShot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeConfig {
    pub initial_words: u64,
    pub red_zone_words: u64,
    pub frame_words: u64,
    pub cache_capacity: usize,
    pub mode: ContinuationMode,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            initial_words: 16,
            red_zone_words: 16,
            frame_words: 4,
            cache_capacity: 64,
            mode: ContinuationMode::OneShot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("initial_words must be at least 1")]
    InitialWords,
    #[error("frame_words must be at least 1")]
    FrameWords,
}

impl RuntimeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.initial_words < 1 {
            return Err(ConfigError::InitialWords);
        }
        if self.frame_words < 1 {
            return Err(ConfigError::FrameWords);
        }
        Ok(())
    }

    /// Capacity of a fresh fiber: the usable area sits below the red zone.
    pub fn effective_initial_words(&self) -> u64 {
        self.initial_words + self.red_zone_words
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberState {
    Active,
    Captured,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberMeta {
    pub id: FiberId,
    pub capacity_words: u64,
    pub used_words: u64,
    pub state: FiberState,
    pub parent: Option<FiberId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CachedStack {
    pub capacity_words: u64,
    pub recycled_from: FiberId,
}

/// Bounded free list of stacks, most recently freed last.
#[derive(Debug, Clone)]
pub struct StackCache {
    entries: Vec<CachedStack>,
    capacity: usize,
}

impl StackCache {
    pub fn new(capacity: usize) -> Self {
        StackCache {
            entries: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Most recently freed stack of exactly `capacity_words`.
    pub fn take(&mut self, capacity_words: u64) -> Option<CachedStack> {
        let pos = self
            .entries
            .iter()
            .rposition(|e| e.capacity_words == capacity_words)?;
        Some(self.entries.remove(pos))
    }

    /// Returns false (and drops the stack) when the cache is full.
    pub fn put(&mut self, entry: CachedStack) -> bool {
        if self.entries.len() >= self.capacity {
            return false;
        }
        self.entries.push(entry);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KontState {
    Fresh,
    Used,
}

#[derive(Debug, Clone)]
struct KontRecord {
    state: KontState,
    created_step: u64,
    backtrace: Vec<BacktraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("continuation {0} already resumed")]
pub struct ContinuationAlreadyUsed(pub KontId);

/// One continuation that was captured and never resumed.
#[derive(Debug, Clone)]
pub struct Leak {
    pub kont: KontId,
    pub created_step: u64,
    pub backtrace: Vec<BacktraceEntry>,
}

#[derive(Debug, Clone)]
pub struct FiberRuntime {
    config: RuntimeConfig,
    metas: HashMap<FiberId, FiberMeta>,
    next_fiber: u64,
    next_kont: u64,
    cache: StackCache,
    registry: BTreeMap<KontId, KontRecord>,
    clock: u64,
    pub metrics: Metrics,
}

impl FiberRuntime {
    pub fn new(config: RuntimeConfig) -> Self {
        let cache = StackCache::new(config.cache_capacity);
        FiberRuntime {
            config,
            metas: HashMap::new(),
            next_fiber: 1,
            next_kont: 1,
            cache,
            registry: BTreeMap::new(),
            clock: 0,
            metrics: Metrics::default(),
        }
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.config
    }

    pub fn mode(&self) -> ContinuationMode {
        self.config.mode
    }

    pub fn cache(&self) -> &StackCache {
        &self.cache
    }

    /// Step index used to timestamp captured continuations.
    pub fn set_clock(&mut self, step: u64) {
        self.clock = step;
    }

    pub fn meta(&self, id: FiberId) -> Option<&FiberMeta> {
        self.metas.get(&id)
    }

    pub fn fiber_state(&self, id: FiberId) -> FiberState {
        match self.metas.get(&id) {
            Some(m) => m.state,
            None => {
                assert!(id.0 < self.next_fiber, "unknown fiber {id}");
                FiberState::Dead
            }
        }
    }

    pub fn live_fibers(&self) -> usize {
        self.metas.len()
    }

    fn meta_mut(&mut self, id: FiberId) -> &mut FiberMeta {
        self.metas
            .get_mut(&id)
            .unwrap_or_else(|| panic!("fiber {id} is dead"))
    }

    pub fn alloc_fiber(&mut self, parent: Option<FiberId>) -> FiberId {
        let cap = self.config.effective_initial_words();
        self.alloc_with_capacity(cap, parent)
    }

    fn alloc_with_capacity(&mut self, capacity_words: u64, parent: Option<FiberId>) -> FiberId {
        if self.cache.take(capacity_words).is_some() {
            self.metrics.cache_hits += 1;
        } else {
            self.metrics.cache_misses += 1;
        }
        self.metrics.fiber_allocs += 1;
        let id = FiberId(self.next_fiber);
        self.next_fiber += 1;
        self.metas.insert(
            id,
            FiberMeta {
                id,
                capacity_words,
                used_words: 0,
                state: FiberState::Active,
                parent,
            },
        );
        self.metrics.max_capacity_words = self.metrics.max_capacity_words.max(capacity_words);
        id
    }

    /// Frees a fiber whose computation returned or unwound.
    ///
    /// Freeing a fiber that is not active is a machine bug and panics.
    pub fn free_fiber(&mut self, id: FiberId) {
        let meta = self
            .metas
            .remove(&id)
            .unwrap_or_else(|| panic!("double free of fiber {id}"));
        assert_eq!(
            meta.state,
            FiberState::Active,
            "freeing non-active fiber {id}"
        );
        self.metrics.fiber_frees += 1;
        self.cache.put(CachedStack {
            capacity_words: meta.capacity_words,
            recycled_from: id,
        });
    }

    fn grow_to_fit(&mut self, id: FiberId) {
        let meta = self.meta_mut(id);
        let mut grown = 0;
        while meta.used_words > meta.capacity_words {
            meta.capacity_words *= 2;
            grown += 1;
        }
        let cap = meta.capacity_words;
        self.metrics.resizes += grown;
        self.metrics.max_capacity_words = self.metrics.max_capacity_words.max(cap);
    }

    /// Pushes `n_frames` frames. Exceeding the hard capacity forces an
    /// immediate resize; the red zone is only consulted at checked points.
    pub fn charge_push(&mut self, id: FiberId, n_frames: u64) {
        let fw = self.config.frame_words;
        self.meta_mut(id).used_words += n_frames * fw;
        self.grow_to_fit(id);
    }

    pub fn charge_pop(&mut self, id: FiberId, n_frames: u64) {
        let fw = self.config.frame_words;
        let meta = self.meta_mut(id);
        meta.used_words = meta.used_words.saturating_sub(n_frames * fw);
    }

    /// Sets the fiber's usage to exactly `n_frames` frames.
    pub fn set_frames(&mut self, id: FiberId, n_frames: u64) {
        let words = n_frames * self.config.frame_words;
        let used = self.meta_mut(id).used_words;
        if words > used {
            self.charge_push(id, (words - used) / self.config.frame_words);
        } else {
            self.charge_pop(id, (used - words) / self.config.frame_words);
        }
    }

    /// Prologue check: doubles the fiber until the stack pointer sits below
    /// the red zone.
    pub fn overflow_check(&mut self, id: FiberId) {
        let red = self.config.red_zone_words;
        let meta = self.meta_mut(id);
        let mut grown = 0;
        while meta.used_words > meta.capacity_words.saturating_sub(red) {
            meta.capacity_words *= 2;
            grown += 1;
        }
        let cap = meta.capacity_words;
        self.metrics.resizes += grown;
        self.metrics.max_capacity_words = self.metrics.max_capacity_words.max(cap);
    }

    /// A fiber leaving the stack while an effect is forwarded past it.
    pub fn mark_captured(&mut self, id: FiberId) {
        let meta = self.meta_mut(id);
        assert_ne!(meta.state, FiberState::Dead);
        meta.state = FiberState::Captured;
        meta.parent = None;
    }

    /// Registers a continuation made of `fibers` (innermost first). Frames
    /// are not copied; the fibers simply change state.
    pub fn capture(&mut self, fibers: &[FiberId], backtrace: Vec<BacktraceEntry>) -> KontId {
        for &f in fibers {
            self.mark_captured(f);
        }
        let id = KontId(self.next_kont);
        self.next_kont += 1;
        self.registry.insert(
            id,
            KontRecord {
                state: KontState::Fresh,
                created_step: self.clock,
                backtrace,
            },
        );
        self.metrics.conts_captured += 1;
        id
    }

    pub fn kont_state(&self, id: KontId) -> Option<KontState> {
        self.registry.get(&id).map(|r| r.state)
    }

    /// Consumes a one-shot continuation and reattaches its fibers (innermost
    /// first) on top of `current`. In multishot mode this only records the
    /// resumption; the caller copies the fibers with [`copy_fiber`].
    ///
    /// [`copy_fiber`]: FiberRuntime::copy_fiber
    pub fn resume(
        &mut self,
        id: KontId,
        fibers: &[FiberId],
        current: Option<FiberId>,
    ) -> Result<(), ContinuationAlreadyUsed> {
        let record = self
            .registry
            .get_mut(&id)
            .unwrap_or_else(|| panic!("unknown continuation {id}"));
        if self.config.mode == ContinuationMode::OneShot {
            if record.state == KontState::Used {
                return Err(ContinuationAlreadyUsed(id));
            }
            record.state = KontState::Used;
            self.reinstate(fibers, current);
        }
        self.metrics.conts_resumed += 1;
        Ok(())
    }

    /// Puts captured fibers back on the live stack.
    pub fn reinstate(&mut self, fibers: &[FiberId], current: Option<FiberId>) {
        for (i, &f) in fibers.iter().enumerate() {
            let next = fibers.get(i + 1).copied();
            let meta = self.meta_mut(f);
            assert_eq!(meta.state, FiberState::Captured, "reinstating {f}");
            meta.state = FiberState::Active;
            meta.parent = next.or(current);
        }
    }

    /// Copies a captured fiber for a multishot resumption.
    pub fn copy_fiber(&mut self, id: FiberId, parent: Option<FiberId>) -> FiberId {
        let (cap, used) = {
            let m = self
                .meta(id)
                .unwrap_or_else(|| panic!("copying dead fiber {id}"));
            (m.capacity_words, m.used_words)
        };
        let copy = self.alloc_with_capacity(cap, parent);
        self.meta_mut(copy).used_words = used;
        self.metrics.fiber_copies += 1;
        copy
    }

    /// Every continuation captured and never resumed. Always empty in
    /// multishot mode.
    pub fn leak_report(&self) -> Vec<Leak> {
        if self.config.mode == ContinuationMode::MultiShot {
            return Vec::new();
        }
        self.registry
            .iter()
            .filter(|(_, r)| r.state == KontState::Fresh)
            .map(|(id, r)| Leak {
                kont: *id,
                created_step: r.created_step,
                backtrace: r.backtrace.clone(),
            })
            .collect()
    }
}
