//! Wire protocol for external agents: one JSON object per line in each
//! direction, over a child process's standard streams or a TCP socket.
//!
//! The engine sends a [`Request`] before every round and waits for one
//! [`Response`] line. Agent indices are zero-based.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentError, Decision, Observation, PrivateGame};

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("transport error: {0}")]
    Io(#[from] io::Error),
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("peer closed the connection")]
    Closed,
    #[error("protocol violation: {0}")]
    Violation(String),
}

/// Where an external agent lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case", deny_unknown_fields)]
pub enum Endpoint {
    /// Spawn `command[0]` with the remaining arguments and talk over its stdio.
    Stdio { command: Vec<String> },
    Tcp { address: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub protocol_version: String,
    pub match_id: String,
    pub agent_index: usize,
    pub round: usize,
    pub horizon: usize,
    pub game: PrivateGame,
    pub observation: Observation,
}

impl Request {
    pub fn new(match_id: &str, game: &PrivateGame, observation: &Observation) -> Self {
        Request {
            protocol_version: PROTOCOL_VERSION.into(),
            match_id: match_id.into(),
            agent_index: observation.agent_index,
            round: observation.round,
            horizon: observation.horizon,
            game: game.clone(),
            observation: observation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    #[serde(default = "version")]
    pub protocol_version: String,
    pub action: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

fn version() -> String {
    PROTOCOL_VERSION.into()
}

impl Response {
    pub fn new(action: f64) -> Self {
        Response { protocol_version: version(), action, rationale: None }
    }
}

/// Validates one response line. Anything other than an object with a finite,
/// non-negative numeric `action` is a violation.
pub fn parse_response(line: &str) -> Result<Response, ProtocolError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| ProtocolError::Violation(format!("malformed response: {e}")))?;
    let obj = value.as_object().ok_or_else(|| ProtocolError::Violation("response is not an object".into()))?;
    if let Some(v) = obj.get("protocol_version") {
        if v.as_str() != Some(PROTOCOL_VERSION) {
            return Err(ProtocolError::Violation(format!("unsupported protocol_version {v}")));
        }
    }
    let action = match obj.get("action") {
        None => return Err(ProtocolError::Violation("missing action".into())),
        Some(a) => a.as_f64().ok_or_else(|| ProtocolError::Violation(format!("non-numeric action {a}")))?,
    };
    if !(action.is_finite() && action >= 0.0) {
        return Err(ProtocolError::Violation(format!("action must be finite and >= 0, got {action}")));
    }
    let rationale = match obj.get("rationale") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(other) => return Err(ProtocolError::Violation(format!("rationale must be text, got {other}"))),
    };
    Ok(Response { protocol_version: version(), action, rationale })
}

/// A line-oriented duplex channel with a per-response deadline.
pub struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    socket: Option<TcpStream>,
    timeout: Duration,
}

impl Connection {
    pub fn from_parts(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static, timeout: Duration) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Connection { writer: Box::new(writer), lines: rx, child: None, socket: None, timeout }
    }

    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, ProtocolError> {
        let (program, args) =
            command.split_first().ok_or_else(|| ProtocolError::Violation("empty agent command".into()))?;
        let mut child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut conn = Self::from_parts(stdout, stdin, timeout);
        conn.child = Some(child);
        Ok(conn)
    }

    pub fn tcp(address: &str, timeout: Duration) -> Result<Self, ProtocolError> {
        let stream = TcpStream::connect(address)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let socket = stream.try_clone()?;
        let mut conn = Self::from_parts(reader, stream, timeout);
        conn.socket = Some(socket);
        Ok(conn)
    }

    pub fn open(endpoint: &Endpoint, timeout: Duration) -> Result<Self, ProtocolError> {
        match endpoint {
            Endpoint::Stdio { command } => Self::spawn(command, timeout),
            Endpoint::Tcp { address } => Self::tcp(address, timeout),
        }
    }

    /// Sends one request and waits for the matching response line.
    pub fn exchange(&mut self, request: &Request) -> Result<Response, ProtocolError> {
        let mut line = serde_json::to_string(request).map_err(|e| ProtocolError::Violation(e.to_string()))?;
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => parse_response(&reply),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(ProtocolError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ProtocolError::Closed),
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        // Unblocks the reader thread, which holds its own handle to the socket.
        if let Some(socket) = self.socket.take() {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Engine-side adapter that forwards every decision to a remote agent.
pub struct ExternalAgent {
    connection: Connection,
    match_id: String,
}

impl ExternalAgent {
    pub fn new(connection: Connection, match_id: String) -> Self {
        ExternalAgent { connection, match_id }
    }

    pub fn connect(endpoint: &Endpoint, match_id: String, timeout: Duration) -> Result<Self, ProtocolError> {
        Ok(Self::new(Connection::open(endpoint, timeout)?, match_id))
    }
}

impl Agent for ExternalAgent {
    fn act(&mut self, game: &PrivateGame, observation: &Observation) -> Result<Decision, AgentError> {
        let reply = self.connection.exchange(&Request::new(&self.match_id, game, observation))?;
        Ok(Decision { action: reply.action, social: None, rationale: reply.rationale })
    }
}

/// Agent-side loop: answers every request line on `reader` with `policy` until
/// end of input. Returns the number of requests served.
pub fn serve<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    mut policy: impl FnMut(&Request) -> Response,
) -> Result<usize, ProtocolError> {
    let mut served = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request =
            serde_json::from_str(&line).map_err(|e| ProtocolError::Violation(format!("malformed request: {e}")))?;
        if request.protocol_version != PROTOCOL_VERSION {
            return Err(ProtocolError::Violation(format!("unsupported protocol_version {}", request.protocol_version)));
        }
        let reply = serde_json::to_string(&policy(&request)).map_err(|e| ProtocolError::Violation(e.to_string()))?;
        writeln!(writer, "{reply}")?;
        writer.flush()?;
        served += 1;
    }
    Ok(served)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_validation() {
        let ok = parse_response(r#"{"action": 3.75, "rationale": "match"}"#).unwrap();
        assert_eq!(ok.action, 3.75);
        assert_eq!(ok.rationale.as_deref(), Some("match"));
        assert_eq!(parse_response(r#"{"protocol_version":"1","action":0}"#).unwrap().action, 0.0);
        for bad in [
            r#"{"action": "five"}"#,
            r#"{"rationale": "none"}"#,
            r#"{"action": -1}"#,
            r#"{"action": 1, "protocol_version": "2"}"#,
            r#"[1]"#,
            "five",
            r#"{"action": 1, "rationale": 3}"#,
        ] {
            assert!(matches!(parse_response(bad), Err(ProtocolError::Violation(_))), "{bad}");
        }
    }
}
