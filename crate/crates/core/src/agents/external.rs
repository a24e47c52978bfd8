//! Wire protocol for policies running outside this process.
//!
//! Every message is a JSON object preceded by its byte length as a 4-byte
//! big-endian integer. The conversation is:
//!
//! ```text
//! -> {"type":"hello","version":"yle/1","config":{..},"action_count":1068,"encoding":"graph","memory_mode":"standard","seat":0}
//! <- {"type":"hello_ack","version":"yle/1"}
//! -> {"type":"reset","episode":0}                     (no reply)
//! -> {"type":"act","id":1,"episode":0,"step":0,"seat":0,
//!     "observation":{"encoding":"graph","shape":[13,10],"data":[..],"adjacency":[..]},
//!     "mask":"<base64 bitset, LSB first>","mask_len":1068}
//! <- {"type":"action","id":1,"action":3,"probabilities":[..]}
//! -> {"type":"bye"}                                    (no reply)
//! ```
//!
//! A policy that cannot serve the requested version answers the hello with
//! `{"type":"error","message":..}`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Decision, Policy, PolicyOutput};
use crate::action::ActionMask;
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::observation::{Encoding, MemoryMode, Observation};
use crate::rng::Rng;

pub const PROTOCOL_VERSION: &str = "yle/1";
const MAX_FRAME: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObservation {
    pub encoding: Encoding,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<u8>>,
}

impl From<&Observation> for WireObservation {
    fn from(obs: &Observation) -> Self {
        Self {
            encoding: obs.encoding(),
            shape: obs.shape(),
            data: obs.data().to_vec(),
            adjacency: obs.adjacency().map(<[u8]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        version: String,
        config: GameConfig,
        action_count: usize,
        encoding: Encoding,
        memory_mode: MemoryMode,
        seat: usize,
    },
    HelloAck {
        version: String,
    },
    Reset {
        episode: u64,
    },
    Act {
        id: u64,
        episode: u64,
        step: u32,
        seat: usize,
        observation: WireObservation,
        mask: String,
        mask_len: usize,
    },
    Action {
        id: u64,
        action: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probabilities: Option<Vec<f64>>,
    },
    Error {
        message: String,
    },
    Bye,
}

pub fn write_frame(w: &mut impl Write, message: &Message) -> Result<()> {
    let body = serde_json::to_vec(message)?;
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

/// Read one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Message>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(Error::Protocol(format!("frame of {len} bytes exceeds the limit")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body).map(Some).map_err(|e| Error::Protocol(format!("undecodable message: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Shell command whose standard input and output carry the frames.
    Command(String),
    /// `host:port` of a listening policy server.
    Tcp(String),
}

/// Session parameters agreed during the handshake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub config: GameConfig,
    pub encoding: Encoding,
    pub memory_mode: MemoryMode,
    pub seat: usize,
    pub timeout_ms: u64,
    pub version: String,
}

impl Handshake {
    pub fn new(config: GameConfig) -> Self {
        Self {
            config,
            encoding: Encoding::Graph,
            memory_mode: MemoryMode::Standard,
            seat: 0,
            timeout_ms: 10_000,
            version: PROTOCOL_VERSION.to_string(),
        }
    }
}

pub struct ExternalPolicy {
    name: String,
    setup: Handshake,
    writer: Box<dyn Write + Send>,
    replies: Receiver<Result<Message>>,
    child: Option<Child>,
    next_id: u64,
}

impl ExternalPolicy {
    pub fn connect(transport: Transport, setup: &Handshake) -> Result<Self> {
        let (reader, writer, child, name): (Box<dyn Read + Send>, Box<dyn Write + Send>, _, _) = match &transport {
            Transport::Command(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Io(format!("cannot start {cmd:?}: {e}")))?;
                let stdin = child.stdin.take().expect("stdin is piped");
                let stdout = child.stdout.take().expect("stdout is piped");
                (Box::new(stdout), Box::new(stdin), Some(child), format!("external:cmd:{cmd}"))
            }
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| Error::Io(format!("cannot connect to {addr}: {e}")))?;
                stream.set_nodelay(true)?;
                let read_half = stream.try_clone()?;
                (Box::new(read_half), Box::new(stream), None, format!("external:tcp:{addr}"))
            }
        };
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let frame = read_frame(&mut reader);
                let stop = !matches!(frame, Ok(Some(_)));
                let sent = tx.send(frame.and_then(|m| m.ok_or_else(|| Error::Protocol("policy closed the stream".into()))));
                if stop || sent.is_err() {
                    return;
                }
            }
        });
        let mut policy = Self {
            name,
            setup: setup.clone(),
            writer: Box::new(BufWriter::new(writer)),
            replies,
            child,
            next_id: 1,
        };
        policy.handshake()?;
        Ok(policy)
    }

    fn handshake(&mut self) -> Result<()> {
        let hello = Message::Hello {
            version: self.setup.version.clone(),
            config: self.setup.config,
            action_count: crate::action::action_count(&self.setup.config),
            encoding: self.setup.encoding,
            memory_mode: self.setup.memory_mode,
            seat: self.setup.seat,
        };
        write_frame(&mut self.writer, &hello)?;
        match self.receive()? {
            Message::HelloAck { version } if version == PROTOCOL_VERSION && version == self.setup.version => Ok(()),
            Message::HelloAck { version } => {
                Err(Error::Protocol(format!("policy speaks {version:?}, expected {PROTOCOL_VERSION:?}")))
            }
            Message::Error { message } => Err(Error::Protocol(format!("policy refused the handshake: {message}"))),
            other => Err(Error::Protocol(format!("expected hello_ack, got {other:?}"))),
        }
    }

    fn receive(&mut self) -> Result<Message> {
        let timeout = Duration::from_millis(self.setup.timeout_ms);
        match self.replies.recv_timeout(timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(self.setup.timeout_ms)),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Protocol("policy connection closed".into())),
        }
    }

    /// Send one act request and validate the reply against the mask.
    pub fn request(&mut self, decision: &Decision<'_>, observation: &Observation) -> Result<PolicyOutput> {
        let id = self.next_id;
        self.next_id += 1;
        let message = Message::Act {
            id,
            episode: decision.episode,
            step: decision.step,
            seat: self.setup.seat,
            observation: observation.into(),
            mask: decision.mask.to_base64(),
            mask_len: decision.mask.len(),
        };
        write_frame(&mut self.writer, &message)?;
        match self.receive()? {
            Message::Action { id: got, action, probabilities } => {
                if got != id {
                    return Err(Error::Protocol(format!("reply id {got} does not match request {id}")));
                }
                validate_reply(decision.mask, action, probabilities.as_deref())?;
                Ok(PolicyOutput { action, probabilities })
            }
            Message::Error { message } => Err(Error::Protocol(format!("policy error: {message}"))),
            other => Err(Error::Protocol(format!("expected an action, got {other:?}"))),
        }
    }
}

/// Check an action and optional distribution against a legality mask.
pub fn validate_reply(mask: &ActionMask, action: usize, probabilities: Option<&[f64]>) -> Result<()> {
    if action >= mask.len() || !mask.is_set(action) {
        return Err(Error::Protocol(format!("policy chose illegal action {action}")));
    }
    if let Some(p) = probabilities {
        if p.len() != mask.len() {
            return Err(Error::Protocol(format!("{} probabilities for {} actions", p.len(), mask.len())));
        }
        let legal_mass: f64 = mask.iter_set().map(|i| p[i]).sum();
        let stray = p.iter().enumerate().any(|(i, &x)| !mask.is_set(i) && x != 0.0);
        if stray || p.iter().any(|x| !x.is_finite() || *x < 0.0) || (legal_mass - 1.0).abs() > 1e-6 {
            return Err(Error::Protocol("probabilities are not a distribution over legal actions".into()));
        }
    }
    Ok(())
}

impl Policy for ExternalPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn memory_mode(&self) -> MemoryMode {
        self.setup.memory_mode
    }

    fn encoding(&self) -> Option<Encoding> {
        Some(self.setup.encoding)
    }

    fn reset(&mut self, episode: u64) -> Result<()> {
        write_frame(&mut self.writer, &Message::Reset { episode })
    }

    fn act(&mut self, decision: &Decision<'_>, _rng: &mut Rng) -> Result<PolicyOutput> {
        let observation = decision.observation.ok_or(Error::Contract("external policies need an observation"))?;
        self.request(decision, observation)
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = write_frame(&mut self.writer, &Message::Bye);
        if let Some(child) = &mut self.child {
            let deadline = Instant::now() + Duration::from_millis(500);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// How the echo test double answers act requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoBehaviour {
    /// Lowest legal action with a one-hot distribution.
    FirstLegal,
    /// An action outside the mask.
    Illegal,
    /// A frame that is not valid JSON.
    Garbage,
    /// Never answer.
    Silent,
}

/// Serve the protocol with a trivial policy until `bye` or end of stream.
pub fn serve_echo(reader: impl Read, writer: impl Write, version: &str, behaviour: EchoBehaviour) -> Result<()> {
    let mut reader = BufReader::new(reader);
    let mut writer = BufWriter::new(writer);
    while let Some(message) = read_frame(&mut reader)? {
        match message {
            Message::Hello { version: asked, .. } => {
                if asked != version {
                    let message = format!("unsupported version {asked:?}, this policy speaks {version:?}");
                    write_frame(&mut writer, &Message::Error { message })?;
                    return Ok(());
                }
                write_frame(&mut writer, &Message::HelloAck { version: version.to_string() })?;
            }
            Message::Act { id, mask, mask_len, .. } => {
                let mask = ActionMask::from_base64(mask_len, &mask)?;
                match behaviour {
                    EchoBehaviour::FirstLegal => {
                        let action = mask.first_set().ok_or(Error::Protocol("empty mask".into()))?;
                        let out = PolicyOutput::deterministic(action, mask_len);
                        write_frame(&mut writer, &Message::Action { id, action, probabilities: out.probabilities })?;
                    }
                    EchoBehaviour::Illegal => {
                        let action = (0..mask_len).find(|&i| !mask.is_set(i)).unwrap_or(mask_len);
                        write_frame(&mut writer, &Message::Action { id, action, probabilities: None })?;
                    }
                    EchoBehaviour::Garbage => {
                        writer.write_all(&5u32.to_be_bytes())?;
                        writer.write_all(b"{oops")?;
                        writer.flush()?;
                    }
                    EchoBehaviour::Silent => {}
                }
            }
            Message::Reset { .. } => {}
            Message::Bye => return Ok(()),
            other => {
                let message = format!("unexpected message {other:?}");
                write_frame(&mut writer, &Message::Error { message })?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let messages = [
            Message::HelloAck { version: PROTOCOL_VERSION.into() },
            Message::Action { id: 3, action: 7, probabilities: None },
            Message::Reset { episode: 2 },
            Message::Bye,
        ];
        let mut buf = Vec::new();
        for m in &messages {
            write_frame(&mut buf, m).unwrap();
        }
        assert_eq!(u32::from_be_bytes(buf[..4].try_into().unwrap()) as usize, 38);
        let mut r = buf.as_slice();
        for m in &messages {
            assert_eq!(read_frame(&mut r).unwrap().as_ref(), Some(m));
        }
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }

    #[test]
    fn replies_are_checked_against_the_mask() {
        let mask = ActionMask::from_indices(5, [1, 3]);
        assert!(validate_reply(&mask, 1, None).is_ok());
        assert!(validate_reply(&mask, 2, None).is_err());
        assert!(validate_reply(&mask, 9, None).is_err());
        assert!(validate_reply(&mask, 3, Some(&[0.0, 0.25, 0.0, 0.75, 0.0])).is_ok());
        assert!(validate_reply(&mask, 3, Some(&[0.1, 0.15, 0.0, 0.75, 0.0])).is_err());
        assert!(validate_reply(&mask, 3, Some(&[0.0, 0.5])).is_err());
    }
}
