//! Decoder running in a child process, spoken to over NDJSON on stdio.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use super::protocol::{AdapterMessage, EngineMessage, WireDecode, PROTOCOL_VERSION};
use super::{DecodeRequest, DecodeResponse, DecoderBackend};
use crate::error::BackendError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl Session {
    fn send(&mut self, msg: &EngineMessage) -> Result<(), BackendError> {
        let mut line = serde_json::to_vec(msg).map_err(|e| BackendError::Schema(e.to_string()))?;
        line.push(b'\n');
        self.stdin
            .write_all(&line)
            .and_then(|_| self.stdin.flush())
            .map_err(|e| self.exited(e.to_string()))
    }

    fn receive(&mut self) -> Result<AdapterMessage, BackendError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(BackendError::Io(e)),
            Err(RecvTimeoutError::Timeout) => return Err(BackendError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(self.exited("stdout closed".into())),
        };
        let msg: AdapterMessage = serde_json::from_str(&line)
            .map_err(|e| BackendError::Schema(format!("{e}: {line}")))?;
        if let AdapterMessage::Error { message } = msg {
            return Err(BackendError::Decode(message));
        }
        Ok(msg)
    }

    fn exited(&mut self, context: String) -> BackendError {
        match self.child.try_wait() {
            Ok(Some(status)) => BackendError::ProcessExited(format!("{status} ({context})")),
            _ => BackendError::ProcessExited(context),
        }
    }
}

/// Client side of the external decoder protocol. Requests are serialized
/// through one child process.
pub struct ExternalBackend {
    session: Mutex<Session>,
    concurrent: bool,
}

impl ExternalBackend {
    /// Launches `program args...` and performs the version handshake.
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, BackendError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| BackendError::Decode("empty adapter command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut session = Session { child, stdin, lines: rx, timeout };
        session.send(&EngineMessage::Hello { version: PROTOCOL_VERSION })?;
        let concurrent = match session.receive()? {
            AdapterMessage::Hello { version, concurrent } => {
                if version != u64::from(PROTOCOL_VERSION) {
                    let _ = session.child.kill();
                    return Err(BackendError::VersionMismatch { expected: PROTOCOL_VERSION, actual: version });
                }
                concurrent
            }
            other => {
                let _ = session.child.kill();
                return Err(BackendError::Schema(format!("expected hello, got {other:?}")));
            }
        };
        Ok(Self { session: Mutex::new(session), concurrent })
    }

    /// Concurrency flag the adapter declared at handshake.
    pub fn adapter_concurrent(&self) -> bool {
        self.concurrent
    }
}

impl DecoderBackend for ExternalBackend {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        let wire = WireDecode::from_request(request)?;
        let (w, h) = (wire.width, wire.height);
        let mut session = self.session.lock().expect("adapter session lock");
        session.send(&EngineMessage::Decode(wire))?;
        match session.receive()? {
            AdapterMessage::Candidates(c) => {
                let resp = c.into_response(w, h)?;
                resp.validate(Some((w, h)))?;
                Ok(resp)
            }
            other => Err(BackendError::Schema(format!("expected candidates, got {other:?}"))),
        }
    }

    // One child process handles one request at a time.
    fn supports_concurrent_decode(&self) -> bool {
        false
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        let Ok(session) = self.session.get_mut() else {
            return;
        };
        let _ = session.send(&EngineMessage::Bye);
        for _ in 0..50 {
            if let Ok(Some(_)) = session.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        let _ = session.child.kill();
        let _ = session.child.wait();
    }
}
