//! Hub of the star topology. Every node connects here; the broker forwards
//! each frame, unchanged, to every other peer subscribed to its topic.
//! Ordering is preserved per publisher (one reader thread and one FIFO per
//! peer); nothing is promised across publishers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::{Duration, Instant};

use crate::client::{spawn_reader, Incoming};
use crate::frame::{encode_frame, read_frame, Envelope, Topic};
use crate::supervisor::RateSupervisor;
use crate::topics::{Hello, Role};
use crate::BusError;

const S_PER_NS: f64 = 1e-9;

struct Peer {
    role: Role,
    subscriptions: BTreeSet<u16>,
    writer: BufWriter<TcpStream>,
    alive: bool,
}

/// Which clock feeds the rate supervisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupervisionClock {
    /// Publisher timestamps (virtual time in lockstep runs).
    Timestamp,
    /// Wall-clock arrival at the broker.
    Arrival,
}

#[derive(Debug)]
pub enum BrokerEvent {
    /// A frame from `from`, already forwarded to its subscribers.
    Frame {
        from: Role,
        env: Envelope,
    },
    NodeDown {
        role: Role,
        reason: Option<String>,
    },
}

pub struct Broker {
    listener: TcpListener,
    peers: Vec<Peer>,
    tx: Sender<(usize, Incoming)>,
    rx: Receiver<(usize, Incoming)>,
    own_seq: BTreeMap<(usize, Topic), u64>,
    supervisor: RateSupervisor,
    clock: SupervisionClock,
    epoch: Instant,
    crc_errors: u64,
    forwarded: u64,
}

impl Broker {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> io::Result<Self> {
        let (tx, rx) = mpsc::channel();
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            peers: Vec::new(),
            tx,
            rx,
            own_seq: BTreeMap::new(),
            supervisor: RateSupervisor::new(),
            clock: SupervisionClock::Timestamp,
            epoch: Instant::now(),
            crc_errors: 0,
            forwarded: 0,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn supervise(&mut self, supervisor: RateSupervisor, clock: SupervisionClock) {
        self.supervisor = supervisor;
        self.clock = clock;
        self.epoch = Instant::now();
    }

    pub fn supervisor(&self) -> &RateSupervisor {
        &self.supervisor
    }

    /// Accepts connections until `count` peers have said HELLO or `timeout` passes.
    pub fn accept(&mut self, count: usize, timeout: Duration) -> Result<Vec<Role>, BusError> {
        let deadline = Instant::now() + timeout;
        self.listener.set_nonblocking(true)?;
        let mut roles = Vec::new();
        while roles.len() < count {
            match self.listener.accept() {
                Ok((stream, _)) => roles.push(self.admit(stream)?),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(BusError::Handshake(format!("{} of {count} peers connected", roles.len())));
                    }
                    std::thread::sleep(Duration::from_millis(2));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(roles)
    }

    fn admit(&mut self, stream: TcpStream) -> Result<Role, BusError> {
        stream.set_nonblocking(false)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(Duration::from_secs(5)))?;
        let mut rd = stream.try_clone()?;
        let env = read_frame(&mut rd).map_err(|e| BusError::Handshake(e.to_string()))?;
        if env.topic != Topic::Hello {
            return Err(BusError::Handshake(format!("expected HELLO, got {}", env.topic)));
        }
        let hello = Hello::decode(&env.payload)?;
        stream.set_read_timeout(None)?;
        let id = self.peers.len();
        spawn_reader(stream.try_clone()?, id, self.tx.clone());
        self.peers.push(Peer {
            role: hello.role,
            subscriptions: hello.subscriptions.into_iter().collect(),
            writer: BufWriter::new(stream),
            alive: true,
        });
        Ok(hello.role)
    }

    /// Waits for the next event, forwarding data frames on the way.
    /// Returns `Err(BusError::Timeout)` if nothing arrives in time.
    pub fn pump(&mut self, timeout: Duration) -> Result<BrokerEvent, BusError> {
        loop {
            let (id, msg) = match self.rx.recv_timeout(timeout) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => return Err(BusError::Timeout),
                Err(RecvTimeoutError::Disconnected) => return Err(BusError::Closed),
            };
            match msg {
                Incoming::Frame(env) => {
                    let t = match self.clock {
                        SupervisionClock::Timestamp => env.timestamp_ns as f64 * S_PER_NS,
                        SupervisionClock::Arrival => self.epoch.elapsed().as_secs_f64(),
                    };
                    self.supervisor.observe(env.topic, t);
                    self.forward(id, &env)?;
                    return Ok(BrokerEvent::Frame { from: self.peers[id].role, env });
                }
                Incoming::Corrupt => self.crc_errors += 1,
                Incoming::Closed(reason) => {
                    self.peers[id].alive = false;
                    return Ok(BrokerEvent::NodeDown { role: self.peers[id].role, reason });
                }
            }
        }
    }

    fn forward(&mut self, from: usize, env: &Envelope) -> Result<(), BusError> {
        let id = env.topic.id();
        let mut bytes = None;
        for (i, p) in self.peers.iter_mut().enumerate() {
            if i == from || !p.alive || !p.subscriptions.contains(&id) {
                continue;
            }
            let b = match &bytes {
                Some(b) => b,
                None => bytes.insert(encode_frame(env)?),
            };
            // a failed write surfaces as NodeDown from that peer's reader
            if p.writer.write_all(b).and_then(|_| p.writer.flush()).is_err() {
                p.alive = false;
            }
            self.forwarded += 1;
        }
        Ok(())
    }

    /// Sends a broker-originated frame to every live peer with `role`.
    pub fn send_to(&mut self, role: Role, topic: Topic, timestamp_ns: u64, payload: &[u8]) -> Result<(), BusError> {
        let targets: Vec<usize> = (0..self.peers.len()).filter(|&i| self.peers[i].role == role).collect();
        if targets.is_empty() || targets.iter().all(|&i| !self.peers[i].alive) {
            return Err(BusError::NodeDown(role));
        }
        for i in targets {
            self.send_one(i, topic, timestamp_ns, payload)?;
        }
        Ok(())
    }

    /// Sends to every live peer. Peers that are already gone are skipped.
    pub fn broadcast(&mut self, topic: Topic, timestamp_ns: u64, payload: &[u8]) -> Result<(), BusError> {
        for i in 0..self.peers.len() {
            if self.peers[i].alive {
                self.send_one(i, topic, timestamp_ns, payload)?;
            }
        }
        Ok(())
    }

    fn send_one(&mut self, i: usize, topic: Topic, timestamp_ns: u64, payload: &[u8]) -> Result<(), BusError> {
        // each peer sees its own gap-free sequence of broker frames
        let seq = self.own_seq.entry((i, topic)).or_insert(0);
        let env = Envelope { topic, seq: *seq, timestamp_ns, payload: payload.to_vec() };
        *seq += 1;
        let p = &mut self.peers[i];
        if p.writer.write_all(&encode_frame(&env)?).and_then(|_| p.writer.flush()).is_err() {
            p.alive = false;
            return Err(BusError::NodeDown(p.role));
        }
        Ok(())
    }

    pub fn crc_errors(&self) -> u64 {
        self.crc_errors
    }

    pub fn forwarded(&self) -> u64 {
        self.forwarded
    }

    pub fn live_roles(&self) -> Vec<Role> {
        self.peers.iter().filter(|p| p.alive).map(|p| p.role).collect()
    }
}
