//! Payload schemas. Every float travels as its little-endian IEEE-754 bits,
//! so values survive the wire unchanged; vectors carry a `u16` length prefix.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PayloadError {
    #[error("payload ended after {0} bytes")]
    Short(usize),
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("field `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("unknown {0} code {1}")]
    BadCode(&'static str, u8),
    #[error("vector `{0}` has {1} entries, `{2}` has {3}")]
    LengthMismatch(&'static str, usize, &'static str, usize),
    #[error("vector `{0}` too long ({1} entries)")]
    TooLong(&'static str, usize),
    #[error("text payload is not UTF-8")]
    Utf8,
}

struct Writer(Vec<u8>);

impl Writer {
    fn f64(&mut self, name: &'static str, x: f64) -> Result<(), PayloadError> {
        if !x.is_finite() {
            return Err(PayloadError::NonFinite(name));
        }
        self.0.extend_from_slice(&x.to_le_bytes());
        Ok(())
    }

    fn vec3(&mut self, name: &'static str, v: &[f64; 3]) -> Result<(), PayloadError> {
        v.iter().try_for_each(|x| self.f64(name, *x))
    }

    fn vecn(&mut self, name: &'static str, v: &[f64]) -> Result<(), PayloadError> {
        let n = u16::try_from(v.len()).map_err(|_| PayloadError::TooLong(name, v.len()))?;
        self.0.extend_from_slice(&n.to_le_bytes());
        v.iter().try_for_each(|x| self.f64(name, *x))
    }

    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }

    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }

    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(b: &'a [u8]) -> Self {
        Self { b, at: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], PayloadError> {
        let s = self.b.get(self.at..self.at + n).ok_or(PayloadError::Short(self.b.len()))?;
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PayloadError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PayloadError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, PayloadError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PayloadError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, name: &'static str) -> Result<f64, PayloadError> {
        let x = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        if !x.is_finite() {
            return Err(PayloadError::NonFinite(name));
        }
        Ok(x)
    }

    fn vec3(&mut self, name: &'static str) -> Result<[f64; 3], PayloadError> {
        Ok([self.f64(name)?, self.f64(name)?, self.f64(name)?])
    }

    fn vecn(&mut self, name: &'static str) -> Result<Vec<f64>, PayloadError> {
        let n = self.u16()? as usize;
        (0..n).map(|_| self.f64(name)).collect()
    }

    fn finish(self) -> Result<(), PayloadError> {
        match self.b.len() - self.at {
            0 => Ok(()),
            n => Err(PayloadError::Trailing(n)),
        }
    }
}

fn same_len(a: (&'static str, usize), b: (&'static str, usize)) -> Result<(), PayloadError> {
    if a.1 != b.1 {
        return Err(PayloadError::LengthMismatch(a.0, a.1, b.0, b.1));
    }
    Ok(())
}

/// Estimated state and guidance, simulator → controller.
#[derive(Debug, Clone, PartialEq)]
pub struct EstState {
    pub t: f64,
    pub sigma_hat: [f64; 3],
    pub omega_hat: [f64; 3],
    pub sigma_d: [f64; 3],
    pub omega_d: [f64; 3],
    pub omega_dot_d: [f64; 3],
}

impl EstState {
    pub fn encode(&self) -> Result<Vec<u8>, PayloadError> {
        let mut w = Writer(Vec::with_capacity(128));
        w.f64("t", self.t)?;
        w.vec3("sigma_hat", &self.sigma_hat)?;
        w.vec3("omega_hat", &self.omega_hat)?;
        w.vec3("sigma_d", &self.sigma_d)?;
        w.vec3("omega_d", &self.omega_d)?;
        w.vec3("omega_dot_d", &self.omega_dot_d)?;
        Ok(w.0)
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let v = Self {
            t: r.f64("t")?,
            sigma_hat: r.vec3("sigma_hat")?,
            omega_hat: r.vec3("omega_hat")?,
            sigma_d: r.vec3("sigma_d")?,
            omega_d: r.vec3("omega_d")?,
            omega_dot_d: r.vec3("omega_dot_d")?,
        };
        r.finish()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireMode {
    Current = 0,
    Velocity = 1,
}

/// Wheel commands, controller → wheel node (and simulator).
#[derive(Debug, Clone, PartialEq)]
pub struct RwCmd {
    pub t: f64,
    pub mode: WireMode,
    /// A or rad/s per `mode`.
    pub value: Vec<f64>,
    /// Wheel-frame motor torque the command was derived from (N·m).
    pub torque: Vec<f64>,
    /// Bit i set while wheel i's command is being artificially scaled.
    pub fault_mask: u32,
}

impl RwCmd {
    pub fn encode(&self) -> Result<Vec<u8>, PayloadError> {
        same_len(("value", self.value.len()), ("torque", self.torque.len()))?;
        let mut w = Writer(Vec::with_capacity(16 + 16 * self.value.len()));
        w.f64("t", self.t)?;
        w.u8(self.mode as u8);
        w.vecn("value", &self.value)?;
        w.vecn("torque", &self.torque)?;
        w.u32(self.fault_mask);
        Ok(w.0)
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let t = r.f64("t")?;
        let mode = match r.u8()? {
            0 => WireMode::Current,
            1 => WireMode::Velocity,
            c => return Err(PayloadError::BadCode("mode", c)),
        };
        let value = r.vecn("value")?;
        let torque = r.vecn("torque")?;
        same_len(("value", value.len()), ("torque", torque.len()))?;
        let fault_mask = r.u32()?;
        r.finish()?;
        Ok(Self { t, mode, value, torque, fault_mask })
    }
}

/// Wheel telemetry, wheel node → controller and simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RwState {
    pub t: f64,
    pub speed: Vec<f64>,
    pub current: Vec<f64>,
}

impl RwState {
    pub fn encode(&self) -> Result<Vec<u8>, PayloadError> {
        same_len(("speed", self.speed.len()), ("current", self.current.len()))?;
        let mut w = Writer(Vec::with_capacity(12 + 16 * self.speed.len()));
        w.f64("t", self.t)?;
        w.vecn("speed", &self.speed)?;
        w.vecn("current", &self.current)?;
        Ok(w.0)
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let t = r.f64("t")?;
        let speed = r.vecn("speed")?;
        let current = r.vecn("current")?;
        same_len(("speed", speed.len()), ("current", current.len()))?;
        r.finish()?;
        Ok(Self { t, speed, current })
    }
}

/// Health estimate, controller → logger.
#[derive(Debug, Clone, PartialEq)]
pub struct HealthTlm {
    pub t: f64,
    pub theta: Vec<f64>,
    pub lambda: f64,
}

impl HealthTlm {
    pub fn encode(&self) -> Result<Vec<u8>, PayloadError> {
        let mut w = Writer(Vec::with_capacity(20 + 8 * self.theta.len()));
        w.f64("t", self.t)?;
        w.vecn("theta", &self.theta)?;
        w.f64("lambda", self.lambda)?;
        Ok(w.0)
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let v = Self { t: r.f64("t")?, theta: r.vecn("theta")?, lambda: r.f64("lambda")? };
        r.finish()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Sim = 0,
    Ctl = 1,
    Rw = 2,
    /// Passive subscriber (logging, tests).
    Observer = 3,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Sim => "sim",
            Role::Ctl => "ctl",
            Role::Rw => "rw",
            Role::Observer => "observer",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        [Role::Sim, Role::Ctl, Role::Rw, Role::Observer].into_iter().find(|r| r.name() == s)
    }

    fn from_code(c: u8) -> Result<Role, PayloadError> {
        match c {
            0 => Ok(Role::Sim),
            1 => Ok(Role::Ctl),
            2 => Ok(Role::Rw),
            3 => Ok(Role::Observer),
            c => Err(PayloadError::BadCode("role", c)),
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// First frame on every connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub role: Role,
    /// Topic ids this client wants forwarded.
    pub subscriptions: Vec<u16>,
}

impl Hello {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(3 + 2 * self.subscriptions.len()));
        w.u8(self.role as u8);
        w.0.extend_from_slice(&(self.subscriptions.len() as u16).to_le_bytes());
        for s in &self.subscriptions {
            w.0.extend_from_slice(&s.to_le_bytes());
        }
        w.0
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let role = Role::from_code(r.u8()?)?;
        let n = r.u16()? as usize;
        let subscriptions = (0..n).map(|_| r.u16()).collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self { role, subscriptions })
    }
}

/// Tick grant (`CLOCK`) and its acknowledgement (`DONE`) share this layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tick(pub u64);

impl Tick {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(8));
        w.u64(self.0);
        w.0
    }

    pub fn decode(b: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(b);
        let v = Tick(r.u64()?);
        r.finish()?;
        Ok(v)
    }
}

/// UTF-8 text (`CONFIG`, `SHUTDOWN` reason).
pub fn decode_text(b: &[u8]) -> Result<String, PayloadError> {
    String::from_utf8(b.to_vec()).map_err(|_| PayloadError::Utf8)
}
