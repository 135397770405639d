use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};

/// Step counts for the four phases of a handle/perform/continue/return
/// round trip. These are machine steps, not time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCounts {
    /// Installing the handler up to the first step of the handled body.
    pub a_b: u64,
    /// Performing the effect up to the matching handler case.
    pub b_c: u64,
    /// Handler case up to the perform site receiving its value.
    pub c_d: u64,
    /// Perform site returning through the handler's value case.
    pub d_e: u64,
}

impl PhaseCounts {
    pub fn add(&mut self, other: &PhaseCounts) {
        self.a_b += other.a_b;
        self.b_c += other.b_c;
        self.c_d += other.c_d;
        self.d_e += other.d_e;
    }
}

/// Counters collected over one run. All counters only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub steps_total: u64,
    pub fiber_allocs: u64,
    pub fiber_frees: u64,
    pub fiber_copies: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub resizes: u64,
    pub fiber_switches: u64,
    pub conts_captured: u64,
    pub conts_resumed: u64,
    pub max_capacity_words: u64,
    pub per_rule: BTreeMap<&'static str, u64>,
    /// Number of non-matching handlers skipped before an effect was handled
    /// (or found unhandled), bucketed by count.
    pub handler_search_depths: BTreeMap<u64, u64>,
    pub phase_counts: PhaseCounts,
    pub phase_windows: u64,
}

impl Metrics {
    pub fn rule(&self, name: &str) -> u64 {
        self.per_rule.get(name).copied().unwrap_or(0)
    }

    /// Flat `key=value` view. Keys are stable.
    pub fn to_flat(&self) -> Vec<(String, u64)> {
        let mut out = vec![
            ("steps_total".to_string(), self.steps_total),
            ("fiber_allocs".to_string(), self.fiber_allocs),
            ("fiber_frees".to_string(), self.fiber_frees),
            ("fiber_copies".to_string(), self.fiber_copies),
            ("cache_hits".to_string(), self.cache_hits),
            ("cache_misses".to_string(), self.cache_misses),
            ("resizes".to_string(), self.resizes),
            ("fiber_switches".to_string(), self.fiber_switches),
            ("conts_captured".to_string(), self.conts_captured),
            ("conts_resumed".to_string(), self.conts_resumed),
            ("max_capacity_words".to_string(), self.max_capacity_words),
            ("phase.a_b".to_string(), self.phase_counts.a_b),
            ("phase.b_c".to_string(), self.phase_counts.b_c),
            ("phase.c_d".to_string(), self.phase_counts.c_d),
            ("phase.d_e".to_string(), self.phase_counts.d_e),
            ("phase.windows".to_string(), self.phase_windows),
        ];
        for (rule, n) in &self.per_rule {
            out.push((format!("rule.{rule}"), *n));
        }
        for (depth, n) in &self.handler_search_depths {
            out.push((format!("handler_search_depth.{depth}"), *n));
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.to_flat()
            .into_iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    pub fn to_json(&self) -> Json {
        let mut obj = Map::new();
        for (k, v) in self.to_flat() {
            obj.insert(k, json!(v));
        }
        Json::Object(obj)
    }
}
