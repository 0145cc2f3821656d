//! End-of-run metrics and the scenario's pass/fail expectations.

use rwhil_bus::{LinkStats, PeriodStats, RateReport};
use rwhil_core::dynamics::{GuidanceTimeline, Target};
use serde::Serialize;

use crate::config::{Expectations, Scenario};
use crate::runlog::RunLog;

const MS_PER_S: f64 = 1e3;

/// Controller step timing in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExecStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub stddev_ms: f64,
}

impl ExecStats {
    pub fn of(seconds: &[f64]) -> Option<Self> {
        let s = PeriodStats::of(seconds)?;
        Some(Self {
            samples: seconds.len(),
            mean_ms: s.mean * MS_PER_S,
            p99_ms: s.p99 * MS_PER_S,
            max_ms: s.max * MS_PER_S,
            stddev_ms: s.stddev * MS_PER_S,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMetrics {
    pub start: f64,
    pub end: f64,
    pub target: &'static str,
    /// Largest ‖σ_e‖ over the trailing check window of the phase.
    pub max_attitude_error: f64,
    /// ‖ω̃‖ at the last logged instant of the phase (rad/s).
    pub rate_error_at_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// `"ok"` or `"no data"`.
    pub status: String,
    pub rows: usize,
    pub duration: Option<f64>,
    pub theta_final: Option<Vec<f64>>,
    /// True effectiveness of each wheel at the end of the run.
    pub health_final: Option<Vec<f64>>,
    pub theta_error_final: Option<Vec<f64>>,
    pub lambda_final: Option<f64>,
    /// First logged time with λ ≥ λ̄.
    pub lambda_crossing: Option<f64>,
    pub phases: Vec<PhaseMetrics>,
    /// RMS of emulator wheel speed minus simulated wheel speed, per wheel (rad/s).
    pub speed_tracking_rms: Option<Vec<f64>>,
    pub speed_tracking_rms_total: Option<f64>,
    /// Angle between estimated and true attitude at the end (deg).
    pub attitude_estimate_error_final_deg: Option<f64>,
    pub controller: Option<ExecStats>,
}

impl Metrics {
    fn no_data(controller: Option<ExecStats>) -> Self {
        Self {
            status: "no data".into(),
            rows: 0,
            duration: None,
            theta_final: None,
            health_final: None,
            theta_error_final: None,
            lambda_final: None,
            lambda_crossing: None,
            phases: Vec::new(),
            speed_tracking_rms: None,
            speed_tracking_rms_total: None,
            attitude_estimate_error_final_deg: None,
            controller,
        }
    }
}

fn norm3(log: &RunLog, name: &str, r: usize) -> f64 {
    log.indexed_row(name, r).iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn target_name(t: Target) -> &'static str {
    match t {
        Target::Inertial => "inertial",
        Target::Nadir => "nadir",
    }
}

/// Per-phase tracking over the logged rows; phases with no rows are skipped.
pub fn phase_metrics(log: &RunLog, timeline: &GuidanceTimeline, window: f64) -> Vec<PhaseMetrics> {
    let t = log.column("t").unwrap_or_default();
    let last_t = t.last().copied().unwrap_or(f64::NEG_INFINITY);
    let phases = timeline.phases();
    let mut out = Vec::new();
    for (i, &(start, end, target)) in phases.iter().enumerate() {
        let is_last = i + 1 == phases.len();
        let inside = |x: f64| x >= start && (x < end || (is_last && x <= end));
        let rows: Vec<usize> = (0..t.len()).filter(|&r| inside(t[r])).collect();
        let Some(&last) = rows.last() else { continue };
        // a phase the run never finished has no end to check
        if last_t < end {
            continue;
        }
        let from = end - window;
        let max_err = rows.iter().filter(|&&r| t[r] >= from).map(|&r| norm3(log, "sigma_e", r)).fold(0.0, f64::max);
        out.push(PhaseMetrics {
            start,
            end,
            target: target_name(target),
            max_attitude_error: max_err,
            rate_error_at_end: norm3(log, "omega_err", last),
        });
    }
    out
}

fn angle_between_mrps(a: &[f64], b: &[f64]) -> f64 {
    use rwhil_core::att::{quat_from_mrp, Mrp};
    use rwhil_core::Vec3;
    let qa = quat_from_mrp(&Mrp(Vec3::new(a[0], a[1], a[2])));
    let qb = quat_from_mrp(&Mrp(Vec3::new(b[0], b[1], b[2])));
    qa.compose(&qb.conjugate()).angle()
}

pub fn compute_metrics(log: &RunLog, s: &Scenario, exec_seconds: &[f64]) -> Metrics {
    let controller = ExecStats::of(exec_seconds);
    if log.is_empty() {
        return Metrics::no_data(controller);
    }
    let t = log.column("t").unwrap_or_default();
    let last = log.len() - 1;
    let t_end = t[last];
    let n = s.wheel_count();
    let theta = log.indexed_row("theta", last);
    let health: Vec<f64> = s.faults.status_at(t_end, n).iter().map(|x| x.effective()).collect();
    let theta_err = theta.iter().zip(&health).map(|(a, b)| a - b).collect();
    let lambda = log.column("lambda").unwrap_or_default();
    let lambda_crossing = t.iter().zip(&lambda).find(|(_, l)| **l >= s.gains.lambda_bar).map(|(t, _)| *t);

    let mut rms = vec![0.0; n];
    for r in 0..log.len() {
        let emu = log.indexed_row("rw_speed_true", r);
        let sim = log.indexed_row("sim_wheel_speed", r);
        for i in 0..n {
            rms[i] += (emu[i] - sim[i]).powi(2);
        }
    }
    let rows = log.len() as f64;
    let total = (rms.iter().sum::<f64>() / (rows * n as f64)).sqrt();
    let rms = rms.into_iter().map(|x| (x / rows).sqrt()).collect();

    let window = s.config.expect.as_ref().map_or(Expectations::default().hold_window, |x| x.hold_window);
    let est_err = angle_between_mrps(&log.indexed_row("sigma", last), &log.indexed_row("sigma_hat", last));
    Metrics {
        status: "ok".into(),
        rows: log.len(),
        duration: Some(t_end - t[0]),
        theta_final: Some(theta),
        health_final: Some(health),
        theta_error_final: Some(theta_err),
        lambda_final: lambda.last().copied(),
        lambda_crossing,
        phases: phase_metrics(log, &s.config.guidance, window),
        speed_tracking_rms: Some(rms),
        speed_tracking_rms_total: Some(total),
        attitude_estimate_error_final_deg: Some(est_err.to_degrees()),
        controller,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Assertion {
    Assertion { name: name.into(), passed, detail }
}

/// Evaluates `[expect]` against the metrics. A run that ended early fails every check that needs the full run.
pub fn evaluate(x: &Expectations, m: &Metrics, s: &Scenario, complete: bool) -> Vec<Assertion> {
    let mut out = Vec::new();
    if let Some(ranges) = &x.theta_final {
        match (&m.theta_final, complete) {
            (Some(th), true) => {
                for (i, (v, r)) in th.iter().zip(ranges).enumerate() {
                    let ok = (r[0]..=r[1]).contains(v);
                    out.push(check(&format!("theta_final_{}", i + 1), ok, format!("{v:.4} in [{}, {}]", r[0], r[1])));
                }
            }
            _ => out.push(check("theta_final", false, "run did not complete".into())),
        }
    }
    if let Some(before) = x.lambda_crossing_before {
        let ok = m.lambda_crossing.is_some_and(|t| t < before);
        let d = match m.lambda_crossing {
            Some(t) => format!("crossed {:e} at {t} s (limit {before} s)", s.gains.lambda_bar),
            None => format!("never reached {:e}", s.gains.lambda_bar),
        };
        out.push(check("lambda_crossing", ok, d));
    }
    let expected_phases = s.config.guidance.phases().len();
    let phases_ok = complete && m.phases.len() == expected_phases;
    if let Some(lim) = x.attitude_error_max {
        let worst = m.phases.iter().map(|p| p.max_attitude_error).fold(0.0, f64::max);
        let d = format!("worst {worst:.3e} over the last {} s of {} phases (limit {lim})", x.hold_window, m.phases.len());
        out.push(check("attitude_error", phases_ok && worst < lim, d));
    }
    if let Some(lim) = x.rate_error_max {
        let worst = m.phases.iter().map(|p| p.rate_error_at_end).fold(0.0, f64::max);
        let d = format!("worst {worst:.3e} rad/s at phase ends (limit {lim})");
        out.push(check("rate_error", phases_ok && worst < lim, d));
    }
    if let Some(lim) = x.controller_step_mean_ms {
        let (ok, d) = match &m.controller {
            Some(c) => (c.mean_ms < lim, format!("mean {:.4} ms (limit {lim} ms)", c.mean_ms)),
            None => (false, "no controller steps".into()),
        };
        out.push(check("controller_step_mean", ok, d));
    }
    out
}

/// Bus-side statistics of a distributed run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinkSummary {
    pub rates: Vec<RateReport>,
    pub rate_overruns: u64,
    pub broker_crc_errors: u64,
    pub forwarded: u64,
    pub nodes: Vec<(String, LinkStats)>,
    /// Dropped over expected frames, all subscribers.
    pub gap_ratio: f64,
}

impl LinkSummary {
    pub fn total_crc_errors(&self) -> u64 {
        self.broker_crc_errors + self.nodes.iter().map(|(_, s)| s.crc_errors).sum::<u64>()
    }

    pub fn finish(&mut self) {
        let (got, lost) = self.nodes.iter().fold((0, 0), |(g, l), (_, s)| (g + s.received, l + s.dropped));
        self.gap_ratio = if got + lost == 0 { 0.0 } else { lost as f64 / (got + lost) as f64 };
    }
}
