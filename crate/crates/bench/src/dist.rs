//! Distributed runner: a broker in this process and one child process per node.
//!
//! The harness is the clock. For every tick and phase it sends `CLOCK(k)` to
//! the node whose turn it is and waits for that node's `DONE(k)`, so data
//! frames the node published have been forwarded before the next phase starts.
//! In real-time mode each tick is also held back until its wall-clock instant.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use rwhil_bus::topics::decode_text;
use rwhil_bus::{Broker, BrokerEvent, BusClient, BusError, LinkStats, Role, SupervisionClock, Tick, Topic};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Scenario, ScenarioConfig};
use crate::mil::{rate_supervisor, RunOutput};
use crate::nodes::{acts_on, make_node, role_subscriptions, Msg, NodeLog, PHASES};
use crate::runlog::{read_node_log, NodeLogWriter, RunLog};

/// How long the harness waits on any single node response.
pub const STEP_TIMEOUT: Duration = Duration::from_secs(10);
/// How far real-time pacing may fall behind the wall clock before the run is abandoned.
pub const MAX_LAG: Duration = Duration::from_secs(1);
const CHILD_EXIT_WAIT: Duration = Duration::from_secs(10);
/// How long a node waits for anything from the broker.
const NODE_IDLE_TIMEOUT: Duration = Duration::from_secs(60);
/// Exit status of a node that was told to crash.
pub const CRASH_EXIT: i32 = 3;

#[derive(Debug, Clone)]
pub struct DistOptions {
    /// The `rwhil` executable used for the node processes.
    pub exe: PathBuf,
    pub accelerated: bool,
    /// Where node logs and stats land.
    pub node_dir: PathBuf,
    /// Make one node exit abruptly once virtual time reaches the given instant (s).
    pub kill: Option<(Role, f64)>,
}

#[derive(Debug, Error)]
pub enum DistError {
    #[error("cannot start node processes: {0}")]
    Spawn(std::io::Error),
    #[error("bus: {0}")]
    Bus(#[from] BusError),
    #[error("{0}")]
    Setup(String),
}

/// What a node leaves behind next to its CSV.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NodeStats {
    pub role: String,
    pub received: u64,
    pub dropped: u64,
    pub reordered: u64,
    pub crc_errors: u64,
    pub exec_seconds: Vec<f64>,
}

fn node_csv(dir: &Path, role: Role) -> PathBuf {
    dir.join(format!("{role}.csv"))
}

fn node_stats(dir: &Path, role: Role) -> PathBuf {
    dir.join(format!("{role}.stats.json"))
}

struct Children(Vec<(Role, Child)>);

impl Children {
    /// Waits for every child, killing any that outstays `CHILD_EXIT_WAIT`.
    fn reap(&mut self) -> Vec<String> {
        let deadline = Instant::now() + CHILD_EXIT_WAIT;
        let mut notes = Vec::new();
        for (role, c) in &mut self.0 {
            loop {
                match c.try_wait() {
                    Ok(Some(st)) => {
                        if !st.success() {
                            notes.push(format!("{role} node exited with {st}"));
                        }
                        break;
                    }
                    Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
                    _ => {
                        let _ = c.kill();
                        let _ = c.wait();
                        notes.push(format!("{role} node did not exit and was killed"));
                        break;
                    }
                }
            }
        }
        self.0.clear();
        notes
    }
}

impl Drop for Children {
    fn drop(&mut self) {
        for (_, c) in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

/// Drives one phase: grant tick `k` to `role` and pump until it reports done.
fn run_phase(broker: &mut Broker, role: Role, k: u64, ts: u64) -> Result<(), String> {
    broker.send_to(role, Topic::Clock, ts, &Tick(k).encode()).map_err(|e| format!("cannot reach {role} node: {e}"))?;
    let deadline = Instant::now() + STEP_TIMEOUT;
    loop {
        let left = deadline.saturating_duration_since(Instant::now());
        match broker.pump(left) {
            Ok(BrokerEvent::Frame { from, env }) => match env.topic {
                Topic::Done if from == role => match Tick::decode(&env.payload) {
                    Ok(Tick(j)) if j == k => return Ok(()),
                    other => return Err(format!("{role} node acknowledged {other:?} while tick {k} was pending")),
                },
                Topic::Shutdown => {
                    let why = decode_text(&env.payload).unwrap_or_default();
                    return Err(format!("{from} node aborted: {why}"));
                }
                _ => {}
            },
            Ok(BrokerEvent::NodeDown { role: down, reason }) => {
                let why = reason.map(|r| format!(" ({r})")).unwrap_or_default();
                return Err(format!("node-down: {down} node disconnected during tick {k}{why}"));
            }
            Err(BusError::Timeout) => return Err(format!("{role} node did not finish tick {k} within {STEP_TIMEOUT:?}")),
            Err(e) => return Err(format!("broker failed: {e}")),
        }
    }
}

pub fn run_distributed(s: &Scenario, opt: &DistOptions) -> Result<RunOutput, DistError> {
    let started = Instant::now();
    fs::create_dir_all(&opt.node_dir).map_err(DistError::Spawn)?;
    for role in PHASES {
        let _ = fs::remove_file(node_csv(&opt.node_dir, role));
        let _ = fs::remove_file(node_stats(&opt.node_dir, role));
    }
    let mut broker = Broker::bind("127.0.0.1:0").map_err(BusError::from)?;
    let clock = if opt.accelerated { SupervisionClock::Timestamp } else { SupervisionClock::Arrival };
    broker.supervise(rate_supervisor(s), clock);
    let addr = broker.local_addr().map_err(BusError::from)?;

    let mut children = Children(Vec::new());
    for role in PHASES {
        let mut cmd = Command::new(&opt.exe);
        cmd.args(["node", role.name(), "--broker", &addr.to_string(), "--out"]).arg(&opt.node_dir).stdin(Stdio::null());
        if let Some((r, t)) = opt.kill {
            if r == role {
                cmd.args(["--exit-at", &t.to_string()]);
            }
        }
        children.0.push((role, cmd.spawn().map_err(DistError::Spawn)?));
    }
    let roles = broker.accept(PHASES.len(), STEP_TIMEOUT)?;
    for role in PHASES {
        if roles.iter().filter(|r| **r == role).count() != 1 {
            return Err(DistError::Setup(format!("expected exactly one {role} node, got roles {roles:?}")));
        }
    }
    let text = s.config.to_toml().map_err(|e| DistError::Setup(e.to_string()))?;
    broker.broadcast(Topic::Config, 0, text.as_bytes())?;

    let mut out = RunOutput::default();
    let tm = s.timing;
    let epoch = Instant::now();
    'ticks: for k in 0..=tm.last_tick {
        if !opt.accelerated {
            let due = epoch + Duration::from_secs_f64(tm.time(k));
            let now = Instant::now();
            if now < due {
                std::thread::sleep(due - now);
            } else if now - due > MAX_LAG {
                out.failure = Some(format!("fell {:?} behind the wall clock at t = {} s", now - due, tm.time(k)));
                break;
            }
        }
        for role in PHASES {
            if !acts_on(role, k, s) {
                continue;
            }
            if let Err(e) = run_phase(&mut broker, role, k, tm.timestamp_ns(k)) {
                out.failure = Some(e);
                break 'ticks;
            }
        }
        out.last_tick = Some(k);
    }
    out.complete = out.failure.is_none();

    let _ = broker.broadcast(Topic::Shutdown, tm.timestamp_ns(out.last_tick.unwrap_or(0)), b"run finished");
    // keep forwarding while nodes flush and say goodbye
    let drain_until = Instant::now() + Duration::from_millis(200);
    while Instant::now() < drain_until && !broker.live_roles().is_empty() {
        let _ = broker.pump(Duration::from_millis(20));
    }
    let notes = children.reap();
    if let Some(f) = &mut out.failure {
        for n in notes {
            f.push_str("; ");
            f.push_str(&n);
        }
    }

    let mut logs = Vec::new();
    for role in [Role::Sim, Role::Ctl, Role::Rw] {
        logs.push(read_node_log(&node_csv(&opt.node_dir, role)).unwrap_or_default());
        if let Ok(text) = fs::read_to_string(node_stats(&opt.node_dir, role)) {
            if let Ok(st) = serde_json::from_str::<NodeStats>(&text) {
                if role == Role::Ctl {
                    out.exec_seconds = st.exec_seconds.clone();
                }
                let ls = LinkStats { received: st.received, dropped: st.dropped, reordered: st.reordered, crc_errors: st.crc_errors };
                out.link.nodes.push((role.name().to_string(), ls));
            }
        }
    }
    out.log = RunLog::merge(&[&logs[0], &logs[1], &logs[2]]);
    let sup = broker.supervisor();
    out.link.rates = sup.report();
    out.link.rate_overruns = sup.overruns();
    out.link.broker_crc_errors = broker.crc_errors();
    out.link.forwarded = broker.forwarded();
    out.link.finish();
    out.wall_seconds = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Body of `rwhil node <role>`: connect, take the scenario from `CONFIG`, then
/// run ticks as the harness grants them.
pub fn node_main(role: Role, broker: &str, out_dir: &Path, exit_at: Option<f64>) -> Result<(), String> {
    let mut bus = BusClient::connect(broker, role, role_subscriptions(role)).map_err(|e| format!("connect: {e}"))?;
    let result = serve(&mut bus, role, out_dir, exit_at);
    if let Err(e) = &result {
        let _ = bus.publish(Topic::Shutdown, 0, e.as_bytes());
    }
    bus.close();
    result
}

fn serve(bus: &mut BusClient, role: Role, out_dir: &Path, exit_at: Option<f64>) -> Result<(), String> {
    let recv = |bus: &mut BusClient| bus.recv_timeout(NODE_IDLE_TIMEOUT).map_err(|e| format!("{role}: {e}"));
    let env = recv(bus)?;
    if env.topic != Topic::Config {
        return Err(format!("expected CONFIG first, got {}", env.topic));
    }
    let text = decode_text(&env.payload).map_err(|e| e.to_string())?;
    let scenario = ScenarioConfig::from_toml(&text).and_then(Scenario::new).map_err(|e| format!("config rejected: {e}"))?;
    let mut node = make_node(role, &scenario).ok_or("observer has no node logic")?;
    fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let mut writer = NodeLogWriter::create(&node_csv(out_dir, role), &node.log().header).map_err(|e| e.to_string())?;
    let mut inbox = Vec::new();
    loop {
        let env = recv(bus)?;
        match env.topic {
            Topic::Clock => {
                let Tick(k) = Tick::decode(&env.payload).map_err(|e| e.to_string())?;
                let t = scenario.timing.time(k);
                if exit_at.is_some_and(|x| t >= x) {
                    std::process::exit(CRASH_EXIT);
                }
                let msgs = node.tick(k, std::mem::take(&mut inbox)).map_err(|e| e.to_string())?;
                let ts = scenario.timing.timestamp_ns(k);
                for m in msgs {
                    let payload = m.encode().map_err(|e| format!("t = {t} s: {e}"))?;
                    bus.publish(m.topic(), ts, &payload).map_err(|e| e.to_string())?;
                }
                writer.append(node.take_new_rows()).map_err(|e| e.to_string())?;
                bus.publish(Topic::Done, ts, &Tick(k).encode()).map_err(|e| e.to_string())?;
            }
            Topic::Shutdown => break,
            topic => match Msg::decode(topic, &env.payload) {
                Some(Ok(m)) => inbox.push(m),
                Some(Err(e)) => return Err(e.to_string()),
                None => {}
            },
        }
    }
    writer.flush().map_err(|e| e.to_string())?;
    let ls = bus.stats();
    let stats = NodeStats {
        role: role.name().to_string(),
        received: ls.received,
        dropped: ls.dropped,
        reordered: ls.reordered,
        crc_errors: ls.crc_errors,
        exec_seconds: node.exec_times().to_vec(),
    };
    let json = serde_json::to_string(&stats).map_err(|e| e.to_string())?;
    fs::write(node_stats(out_dir, role), json).map_err(|e| e.to_string())
}

/// Node logs as written by a finished distributed run (for tests and tooling).
pub fn read_node_logs(dir: &Path) -> Vec<(Role, NodeLog)> {
    PHASES.iter().filter_map(|r| read_node_log(&node_csv(dir, *r)).ok().map(|l| (*r, l))).collect()
}
