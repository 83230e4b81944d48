//! Edit-spike detection over a trailing window of edit timestamps.
//!
//! For every article cluster the detector keeps the timestamps of recent
//! edits. A spike is reported when at least `min_intervals` intervals fall
//! inside the window and the latest interval is shorter than
//! `threshold_factor` times the population standard deviation of all
//! in-window intervals. The exponentially smoothed interval is computed and
//! reported alongside, but does not enter the decision.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::article::ClusterKey;

pub const HOUR_MS: i64 = 60 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must be in (0, 1], got {0}")]
    Alpha(f64),
    #[error("min_intervals must be at least 2, got {0}")]
    MinIntervals(usize),
    #[error("threshold_factor must be positive, got {0}")]
    ThresholdFactor(f64),
    #[error("window must be positive, got {0} ms")]
    Window(i64),
    #[error("max_retained must be at least min_intervals + 1, got {0}")]
    MaxRetained(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Smoothing factor for the exponentially smoothed interval.
    pub alpha: f64,
    /// Fewest in-window intervals needed before a spike can be reported.
    pub min_intervals: usize,
    pub window_ms: i64,
    /// Spike when the latest interval is below this many standard deviations.
    pub threshold_factor: f64,
    /// Most recent timestamps kept per cluster.
    pub max_retained: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            min_intervals: 5,
            window_ms: 24 * HOUR_MS,
            threshold_factor: 0.5,
            max_retained: 256,
        }
    }
}

impl DetectorConfig {
    // `!(x > 0.0)` also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if self.min_intervals < 2 {
            return Err(ConfigError::MinIntervals(self.min_intervals));
        }
        if !(self.threshold_factor > 0.0) {
            return Err(ConfigError::ThresholdFactor(self.threshold_factor));
        }
        if self.window_ms <= 0 {
            return Err(ConfigError::Window(self.window_ms));
        }
        if self.max_retained <= self.min_intervals {
            return Err(ConfigError::MaxRetained(self.max_retained));
        }
        Ok(())
    }
}

/// Ascending edit timestamps (epoch ms) of one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditHistory {
    pub cluster: ClusterKey,
    timestamps: VecDeque<i64>,
}

impl EditHistory {
    pub fn new(cluster: ClusterKey) -> Self {
        Self {
            cluster,
            timestamps: VecDeque::new(),
        }
    }

    /// Builds a history from arbitrary timestamps, sorted and de-duplicated.
    pub fn from_timestamps(cluster: ClusterKey, ts: impl IntoIterator<Item = i64>) -> Self {
        let mut v: Vec<i64> = ts.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self {
            cluster,
            timestamps: v.into(),
        }
    }

    pub fn timestamps(&self) -> impl ExactSizeIterator<Item = i64> + '_ {
        self.timestamps.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn last(&self) -> Option<i64> {
        self.timestamps.back().copied()
    }

    /// Appends an edit and prunes. Timestamps not after the last recorded
    /// one are clamped to last + 1 ms to keep the sequence strictly
    /// ascending. Returns the timestamp actually recorded, or `None` when it
    /// fell outside the window.
    pub fn record_edit(&mut self, ts: i64, now: i64, cfg: &DetectorConfig) -> Option<i64> {
        self.prune_window(now, cfg);
        if ts <= now - cfg.window_ms {
            return None;
        }
        let ts = match self.last() {
            Some(last) if ts <= last => last + 1,
            _ => ts,
        };
        self.timestamps.push_back(ts);
        while self.timestamps.len() > cfg.max_retained {
            self.timestamps.pop_front();
        }
        Some(ts)
    }

    /// Drops timestamps at or before `now - window`.
    pub fn prune_window(&mut self, now: i64, cfg: &DetectorConfig) {
        let cutoff = now - cfg.window_ms;
        while self.timestamps.front().is_some_and(|&t| t <= cutoff) {
            self.timestamps.pop_front();
        }
    }

    pub fn pruned(&self, now: i64, cfg: &DetectorConfig) -> EditHistory {
        let mut h = self.clone();
        h.prune_window(now, cfg);
        h
    }

    /// Consecutive differences; empty with fewer than two timestamps.
    pub fn intervals(&self) -> Vec<i64> {
        intervals(self.timestamps.iter().copied())
    }
}

pub fn intervals(ts: impl IntoIterator<Item = i64>) -> Vec<i64> {
    let mut out = Vec::new();
    let mut prev: Option<i64> = None;
    for t in ts {
        if let Some(p) = prev {
            out.push(t - p);
        }
        prev = Some(t);
    }
    out
}

/// S₁ = d₁, Sᵢ = α·dᵢ + (1−α)·Sᵢ₋₁; returns the last S. `None` when empty.
pub fn exp_smooth(d: &[f64], alpha: f64) -> Option<f64> {
    let (first, rest) = d.split_first()?;
    Some(rest.iter().fold(*first, |s, &x| alpha * x + (1.0 - alpha) * s))
}

/// Population standard deviation (Welford's update); `None` when empty.
pub fn population_std_dev(d: &[f64]) -> Option<f64> {
    if d.is_empty() {
        return None;
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in d.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    Some((m2 / d.len() as f64).max(0.0).sqrt())
}

/// Outcome of one spike evaluation with all of its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeVerdict {
    pub spiking: bool,
    /// True when fewer than `min_intervals` intervals were in the window.
    pub insufficient_data: bool,
    /// Number of in-window intervals.
    pub n: usize,
    /// Latest interval in ms.
    pub latest_interval: Option<i64>,
    pub sigma: Option<f64>,
    pub smoothed: Option<f64>,
    pub threshold: Option<f64>,
    pub threshold_factor: f64,
    pub min_intervals: usize,
    pub evaluated_at: i64,
}

impl SpikeVerdict {
    /// The spike rule re-checked from the verdict's own fields.
    pub fn is_sound(&self) -> bool {
        if !self.spiking {
            return true;
        }
        match (self.latest_interval, self.sigma) {
            (Some(d), Some(s)) => self.n >= self.min_intervals && (d as f64) < self.threshold_factor * s,
            _ => false,
        }
    }
}

pub fn evaluate_spike(history: &EditHistory, now: i64, cfg: &DetectorConfig) -> SpikeVerdict {
    let d: Vec<f64> = history.pruned(now, cfg).intervals().into_iter().map(|x| x as f64).collect();
    verdict_from_intervals(&d, now, cfg)
}

/// The spike rule applied to a list of intervals (ms).
pub fn verdict_from_intervals(d: &[f64], now: i64, cfg: &DetectorConfig) -> SpikeVerdict {
    let n = d.len();
    let sigma = population_std_dev(d);
    let smoothed = exp_smooth(d, cfg.alpha);
    let threshold = sigma.map(|s| cfg.threshold_factor * s);
    let latest = d.last().copied();
    let insufficient_data = n < cfg.min_intervals;
    let spiking = !insufficient_data
        && matches!((latest, threshold), (Some(l), Some(t)) if l < t);
    SpikeVerdict {
        spiking,
        insufficient_data,
        n,
        latest_interval: latest.map(|x| x as i64),
        sigma,
        smoothed,
        threshold,
        threshold_factor: cfg.threshold_factor,
        min_intervals: cfg.min_intervals,
        evaluated_at: now,
    }
}

/// Per-cluster histories. Owned by a single writer.
#[derive(Debug, Clone, Default)]
pub struct Detector {
    config: DetectorConfig,
    histories: HashMap<ClusterKey, EditHistory>,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            histories: HashMap::new(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Records the edit at `ts` (also used as "now") and evaluates the
    /// cluster.
    pub fn observe(&mut self, cluster: &ClusterKey, ts: i64) -> SpikeVerdict {
        let cfg = self.config;
        let history = self
            .histories
            .entry(cluster.clone())
            .or_insert_with(|| EditHistory::new(cluster.clone()));
        let recorded = history.record_edit(ts, ts, &cfg).unwrap_or(ts);
        evaluate_spike(history, recorded.max(ts), &cfg)
    }

    pub fn history(&self, cluster: &ClusterKey) -> Option<&EditHistory> {
        self.histories.get(cluster)
    }

    pub fn cluster_count(&self) -> usize {
        self.histories.len()
    }

    /// Drops clusters with no edit inside the window.
    pub fn evict_idle(&mut self, now: i64) {
        let cfg = self.config;
        self.histories.retain(|_, h| {
            h.prune_window(now, &cfg);
            !h.is_empty()
        });
    }
}
