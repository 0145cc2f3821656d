//! Single-process runner: the three nodes in lockstep with in-memory routing.

use std::time::Instant;

use rwhil_bus::{RateSupervisor, Role, Topic};

use crate::config::Scenario;
use crate::metrics::LinkSummary;
use crate::nodes::{acts_on, CtlNode, Msg, Node, RwNode, SimNode, PHASES};
use crate::runlog::RunLog;

/// Everything a runner hands back, complete or not.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub log: RunLog,
    /// Controller step durations (s).
    pub exec_seconds: Vec<f64>,
    pub link: LinkSummary,
    /// Last tick every node finished.
    pub last_tick: Option<u64>,
    pub complete: bool,
    pub failure: Option<String>,
    pub wall_seconds: f64,
}

/// Supervisor with the nominal wheel-telemetry and command periods watched.
pub fn rate_supervisor(s: &Scenario) -> RateSupervisor {
    let mut r = RateSupervisor::new();
    r.watch(Topic::RwState, s.timing.tick, RATE_TOLERANCE);
    r.watch(Topic::RwCmd, s.timing.control, RATE_TOLERANCE);
    r
}

/// An interval more than this fraction over nominal counts as an overrun.
pub const RATE_TOLERANCE: f64 = 0.5;

pub fn run_mil(s: &Scenario) -> RunOutput {
    let started = Instant::now();
    let mut rw = RwNode::new(s);
    let mut sim = SimNode::new(s);
    let mut ctl = CtlNode::new(s);
    let mut inbox: [Vec<Msg>; 3] = Default::default();
    let mut rates = rate_supervisor(s);
    let slot = |r: Role| PHASES.iter().position(|p| *p == r).expect("node role");
    let mut out = RunOutput::default();

    'ticks: for k in 0..=s.timing.last_tick {
        for role in PHASES {
            if !acts_on(role, k, s) {
                continue;
            }
            let node: &mut dyn Node = match role {
                Role::Rw => &mut rw,
                Role::Sim => &mut sim,
                _ => &mut ctl,
            };
            let msgs = match node.tick(k, std::mem::take(&mut inbox[slot(role)])) {
                Ok(m) => m,
                Err(e) => {
                    out.failure = Some(format!("{role} node failed at tick {k}: {e}"));
                    break 'ticks;
                }
            };
            for m in msgs {
                rates.observe(m.topic(), s.timing.time(k));
                for (i, peer) in PHASES.iter().enumerate() {
                    if *peer == role {
                        continue;
                    }
                    let subscribed = match peer {
                        Role::Rw => rw.subscriptions(),
                        Role::Sim => sim.subscriptions(),
                        _ => ctl.subscriptions(),
                    };
                    if subscribed.contains(&m.topic()) {
                        inbox[i].push(m.clone());
                    }
                }
            }
        }
        out.last_tick = Some(k);
    }
    out.complete = out.failure.is_none();
    out.log = RunLog::merge(&[sim.log(), ctl.log(), rw.log()]);
    out.exec_seconds = ctl.exec_times().to_vec();
    out.link.rates = rates.report();
    out.link.rate_overruns = rates.overruns();
    out.wall_seconds = started.elapsed().as_secs_f64();
    out
}
