//! Per-topic rate statistics and sequence-gap accounting.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::frame::Topic;

const P99: f64 = 0.99;

#[derive(Debug, Clone)]
struct TopicClock {
    expected: f64,
    tolerance: f64,
    last: Option<f64>,
    periods: Vec<f64>,
    overruns: u64,
}

/// Watches publication times of selected topics against their nominal period.
///
/// An interval longer than `expected·(1 + tolerance)` counts as
/// `max(1, round(interval/expected) − 1)` overruns, i.e. the number of missed slots.
#[derive(Debug, Clone, Default)]
pub struct RateSupervisor {
    topics: BTreeMap<Topic, TopicClock>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub topic: String,
    pub expected_period: f64,
    pub samples: usize,
    pub mean_period: Option<f64>,
    pub p99_period: Option<f64>,
    pub max_period: Option<f64>,
    pub stddev_period: Option<f64>,
    pub overruns: u64,
}

impl RateSupervisor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn watch(&mut self, topic: Topic, expected_period: f64, tolerance: f64) {
        assert!(expected_period > 0.0 && tolerance >= 0.0);
        self.topics.insert(topic, TopicClock { expected: expected_period, tolerance, last: None, periods: Vec::new(), overruns: 0 });
    }

    /// Records a publication of `topic` at time `t` (s). Unwatched topics are ignored.
    pub fn observe(&mut self, topic: Topic, t: f64) {
        let Some(c) = self.topics.get_mut(&topic) else { return };
        if let Some(prev) = c.last.replace(t) {
            let period = t - prev;
            c.periods.push(period);
            if period > c.expected * (1.0 + c.tolerance) {
                c.overruns += ((period / c.expected).round() as u64).saturating_sub(1).max(1);
            }
        }
    }

    pub fn overruns(&self) -> u64 {
        self.topics.values().map(|c| c.overruns).sum()
    }

    pub fn report(&self) -> Vec<RateReport> {
        self.topics
            .iter()
            .map(|(topic, c)| {
                let s = PeriodStats::of(&c.periods);
                RateReport {
                    topic: topic.name().to_string(),
                    expected_period: c.expected,
                    samples: c.periods.len(),
                    mean_period: s.map(|s| s.mean),
                    p99_period: s.map(|s| s.p99),
                    max_period: s.map(|s| s.max),
                    stddev_period: s.map(|s| s.stddev),
                    overruns: c.overruns,
                }
            })
            .collect()
    }
}

/// Mean, 99th percentile (nearest rank), max and population std of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodStats {
    pub mean: f64,
    pub p99: f64,
    pub max: f64,
    pub stddev: f64,
}

impl PeriodStats {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((P99 * n).ceil() as usize).clamp(1, sorted.len());
        Some(Self { mean, p99: sorted[rank - 1], max: sorted[sorted.len() - 1], stddev: var.sqrt() })
    }
}

/// Receiver-side sequence bookkeeping, one expected number per topic.
#[derive(Debug, Clone, Default)]
pub struct GapTracker {
    next: BTreeMap<Topic, u64>,
    received: u64,
    dropped: u64,
    reordered: u64,
}

impl GapTracker {
    /// Returns how many frames were skipped just before this one.
    pub fn observe(&mut self, topic: Topic, seq: u64) -> u64 {
        self.received += 1;
        let gap = match self.next.get(&topic) {
            None => 0,
            Some(&n) if seq >= n => seq - n,
            Some(_) => {
                self.reordered += 1;
                return 0;
            }
        };
        self.dropped += gap;
        self.next.insert(topic, seq + 1);
        gap
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn reordered(&self) -> u64 {
        self.reordered
    }

    /// Dropped frames as a fraction of frames that should have arrived.
    pub fn gap_ratio(&self) -> f64 {
        let total = self.received + self.dropped;
        if total == 0 {
            0.0
        } else {
            self.dropped as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rate_has_no_overruns() {
        let mut s = RateSupervisor::new();
        s.watch(Topic::RwState, 0.05, 0.5);
        for k in 0..1000 {
            s.observe(Topic::RwState, k as f64 * 0.05);
        }
        let r = &s.report()[0];
        assert_eq!(r.overruns, 0);
        assert_eq!(r.samples, 999);
        assert!((r.mean_period.unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn stall_counts_missed_slots() {
        let mut s = RateSupervisor::new();
        s.watch(Topic::RwCmd, 0.1, 0.5);
        let times = [0.0, 0.1, 0.2, 0.5, 0.6];
        for t in times {
            s.observe(Topic::RwCmd, t);
        }
        assert_eq!(s.overruns(), 2);
        let r = &s.report()[0];
        assert!((r.max_period.unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn stats_of_known_sample() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = PeriodStats::of(&xs).unwrap();
        assert_eq!(s.mean, 50.5);
        assert_eq!(s.p99, 99.0);
        assert_eq!(s.max, 100.0);
        assert!((s.stddev - (9999.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(PeriodStats::of(&[]), None);
    }

    #[test]
    fn gaps_and_reordering() {
        let mut g = GapTracker::default();
        for s in [0, 1, 2, 5, 6] {
            g.observe(Topic::RwState, s);
        }
        g.observe(Topic::RwState, 4);
        g.observe(Topic::EstState, 10);
        assert_eq!(g.dropped(), 2);
        assert_eq!(g.reordered(), 1);
        assert_eq!(g.received(), 7);
    }
}
