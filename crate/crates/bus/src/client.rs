use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use crate::frame::{encode_frame, read_frame, Envelope, ReadError, Topic};
use crate::supervisor::GapTracker;
use crate::topics::{Hello, Role};
use crate::BusError;

/// What a connection's reader thread hands to its owner.
#[derive(Debug)]
pub(crate) enum Incoming {
    Frame(Envelope),
    /// Payload CRC failure; the frame was dropped and the stream is still aligned.
    Corrupt,
    /// Orderly EOF, I/O failure or a framing error that desynchronized the stream.
    Closed(Option<String>),
}

/// Reads frames until the stream ends, forwarding them tagged with `id`.
pub(crate) fn spawn_reader<T: Copy + Send + 'static>(stream: TcpStream, id: T, tx: Sender<(T, Incoming)>) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        let mut r = BufReader::new(stream);
        loop {
            let msg = match read_frame(&mut r) {
                Ok(env) => Incoming::Frame(env),
                Err(ReadError::Frame(e)) if !e.desyncs_stream() => Incoming::Corrupt,
                Err(ReadError::Closed) => Incoming::Closed(None),
                Err(e) => Incoming::Closed(Some(e.to_string())),
            };
            let last = matches!(msg, Incoming::Closed(_));
            if tx.send((id, msg)).is_err() || last {
                break;
            }
        }
    })
}

/// Counters a client keeps about what it received.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct LinkStats {
    pub received: u64,
    pub dropped: u64,
    pub reordered: u64,
    pub crc_errors: u64,
}

/// One node's connection to the broker.
pub struct BusClient {
    role: Role,
    stream: TcpStream,
    writer: BufWriter<TcpStream>,
    rx: Receiver<((), Incoming)>,
    seq: BTreeMap<Topic, u64>,
    gaps: GapTracker,
    crc_errors: u64,
    closed: bool,
}

impl BusClient {
    /// Connects and announces `role` and the topics to forward here.
    pub fn connect<A: ToSocketAddrs>(addr: A, role: Role, subscriptions: &[Topic]) -> Result<Self, BusError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let (tx, rx) = mpsc::channel();
        spawn_reader(stream.try_clone()?, (), tx);
        let mut c = Self {
            role,
            writer: BufWriter::new(stream.try_clone()?),
            stream,
            rx,
            seq: BTreeMap::new(),
            gaps: GapTracker::default(),
            crc_errors: 0,
            closed: false,
        };
        let hello = Hello { role, subscriptions: subscriptions.iter().map(|t| t.id()).collect() };
        c.publish(Topic::Hello, 0, &hello.encode())?;
        Ok(c)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Sends one frame with the next sequence number for `topic`; returns that number.
    pub fn publish(&mut self, topic: Topic, timestamp_ns: u64, payload: &[u8]) -> Result<u64, BusError> {
        let seq = self.seq.entry(topic).or_insert(0);
        let env = Envelope { topic, seq: *seq, timestamp_ns, payload: payload.to_vec() };
        *seq += 1;
        self.writer.write_all(&encode_frame(&env)?)?;
        self.writer.flush()?;
        Ok(env.seq)
    }

    /// Next intact frame. Corrupt frames are counted and skipped.
    pub fn recv_timeout(&mut self, timeout: Duration) -> Result<Envelope, BusError> {
        if self.closed {
            return Err(BusError::Closed);
        }
        loop {
            match self.rx.recv_timeout(timeout) {
                Ok((_, Incoming::Frame(env))) => {
                    self.gaps.observe(env.topic, env.seq);
                    return Ok(env);
                }
                Ok((_, Incoming::Corrupt)) => self.crc_errors += 1,
                Ok((_, Incoming::Closed(why))) => {
                    self.closed = true;
                    return Err(why.map_or(BusError::Closed, BusError::Link));
                }
                Err(RecvTimeoutError::Timeout) => return Err(BusError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    self.closed = true;
                    return Err(BusError::Closed);
                }
            }
        }
    }

    pub fn stats(&self) -> LinkStats {
        LinkStats { received: self.gaps.received(), dropped: self.gaps.dropped(), reordered: self.gaps.reordered(), crc_errors: self.crc_errors }
    }

    pub fn close(self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}
