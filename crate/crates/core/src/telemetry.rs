//! Telemetry: per-point value profiles (bounded histograms) and windowed
//! performance metrics.
//!
//! Throughput is the deterministic budget-based quantity
//! `budget_ops * calls / total_ops`; wall-clock time is recorded alongside
//! for humans and never feeds tests or decisions.

use crate::ir::Value;
use std::collections::BTreeMap;

/// Histogram capacity per point; when full, the lowest-count entry is
/// evicted to admit a new value (ties evict the largest value).
pub const HISTOGRAM_CAPACITY: usize = 256;

/// Observed value statistics for one specialization point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointProfile {
    histogram: BTreeMap<Value, u64>,
    pub total_observations: u64,
    /// Mirrors the engine's guard-failure counter for variants pinning this
    /// point.
    pub guard_failures: u64,
}

impl PointProfile {
    /// Record one observed value, evicting the coldest entry at capacity.
    pub fn observe(&mut self, value: Value) {
        self.total_observations += 1;
        if let Some(count) = self.histogram.get_mut(&value) {
            *count += 1;
            return;
        }
        if self.histogram.len() >= HISTOGRAM_CAPACITY {
            let coldest = self
                .histogram
                .iter()
                .min_by(|(va, ca), (vb, cb)| ca.cmp(cb).then(vb.cmp(va)))
                .map(|(v, _)| *v)
                .expect("histogram is non-empty at capacity");
            self.histogram.remove(&coldest);
        }
        self.histogram.insert(value, 1);
    }

    pub fn count_of(&self, value: &Value) -> u64 {
        self.histogram.get(value).copied().unwrap_or(0)
    }

    pub fn histogram_len(&self) -> usize {
        self.histogram.len()
    }

    /// Fraction of all observations carrying `value` (0 when nothing was
    /// observed). Evicted values under-count by construction.
    pub fn frequency_of(&self, value: &Value) -> f64 {
        if self.total_observations == 0 {
            return 0.0;
        }
        self.count_of(value) as f64 / self.total_observations as f64
    }

    /// The `k` most frequent values: descending count, ties by ascending
    /// value.
    pub fn top_k(&self, k: usize) -> Vec<(Value, u64)> {
        let mut entries: Vec<(Value, u64)> =
            self.histogram.iter().map(|(v, c)| (*v, *c)).collect();
        entries.sort_by(|(va, ca), (vb, cb)| cb.cmp(ca).then(va.cmp(vb)));
        entries.truncate(k);
        entries
    }
}

/// One closed measurement window.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricWindow {
    pub window_id: u64,
    /// Identifier of the active configuration (pin set / variant combination).
    pub config_id: String,
    pub calls: u64,
    pub total_ops: u64,
    /// `budget_ops * calls / total_ops`; absent when the window saw no calls.
    pub throughput: Option<f64>,
    pub guard_failures: u64,
    /// Optional wall-clock milliseconds, for humans only.
    pub wall_ms: Option<f64>,
}

impl MetricWindow {
    /// The stable CSV header for metric rows.
    pub const CSV_HEADER: &'static str =
        "window_id,config_id,calls,total_ops,throughput,guard_failures";

    /// One CSV row matching [`Self::CSV_HEADER`]; wall-clock stays out of the
    /// schema so replays are byte-identical.
    pub fn csv_row(&self) -> String {
        let throughput = match self.throughput {
            Some(t) => format!("{t}"),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.window_id, self.config_id, self.calls, self.total_ops, throughput,
            self.guard_failures
        )
    }
}

/// Accumulates calls until the window closes.
#[derive(Debug, Clone, Default)]
pub struct WindowAccumulator {
    calls: u64,
    total_ops: u64,
    guard_failures: u64,
}

impl WindowAccumulator {
    pub fn record(&mut self, ops: u64, guard_failed: bool) {
        self.calls += 1;
        self.total_ops += ops;
        if guard_failed {
            self.guard_failures += 1;
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Emit the window and reset the accumulator.
    pub fn close_window(
        &mut self,
        window_id: u64,
        config_id: &str,
        budget_ops: u64,
        wall_ms: Option<f64>,
    ) -> MetricWindow {
        let throughput = if self.calls > 0 {
            Some(budget_ops as f64 * self.calls as f64 / self.total_ops as f64)
        } else {
            None
        };
        let window = MetricWindow {
            window_id,
            config_id: config_id.to_string(),
            calls: self.calls,
            total_ops: self.total_ops,
            throughput,
            guard_failures: self.guard_failures,
            wall_ms,
        };
        *self = WindowAccumulator::default();
        window
    }
}
