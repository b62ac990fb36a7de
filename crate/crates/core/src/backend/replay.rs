//! Record/replay of decode traffic as NDJSON.
//!
//! Each line holds one `(request digest, response)` pair plus a checksum of
//! the response body, so a hand-edited response is rejected on load. Lines
//! are written sorted by digest, which makes trace files byte-stable no
//! matter in which order decodes happened.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::protocol::WireCandidates;
use super::{DecodeRequest, DecodeResponse, DecoderBackend};
use crate::error::BackendError;

#[derive(Debug, Serialize, Deserialize)]
struct TraceLine {
    request: String,
    width: u32,
    height: u32,
    response: WireCandidates,
    check: String,
}

fn checksum(response: &WireCandidates) -> String {
    let body = serde_json::to_string(response).expect("wire candidates serialize");
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Recorded decode responses keyed by request digest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    entries: BTreeMap<String, (u32, u32, DecodeResponse)>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, request: &DecodeRequest, response: &DecodeResponse) {
        let (w, h) = request.canvas().unwrap_or((0, 0));
        self.entries.insert(request.digest(), (w, h, response.clone()));
    }

    /// Adds every entry of `other`; entries with equal digests are replaced.
    pub fn merge(&mut self, other: Trace) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, digest: &str) -> Option<&DecodeResponse> {
        self.entries.get(digest).map(|(_, _, r)| r)
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let mut out = Vec::new();
        for (digest, (w, h, resp)) in &self.entries {
            let response = WireCandidates::from_response(resp);
            let line = TraceLine {
                request: digest.clone(),
                width: *w,
                height: *h,
                check: checksum(&response),
                response,
            };
            serde_json::to_writer(&mut out, &line).map_err(|e| BackendError::Schema(e.to_string()))?;
            out.push(b'\n');
        }
        let tmp = path.with_extension("ndjson.tmp");
        std::fs::File::create(&tmp)?.write_all(&out)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut trace = Trace::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| BackendError::Trace {
                line: lineno,
                reason: e.to_string(),
            })?;
            if checksum(&parsed.response) != parsed.check {
                return Err(BackendError::Trace {
                    line: lineno,
                    reason: "response digest mismatch".into(),
                });
            }
            let resp = parsed
                .response
                .into_response(parsed.width, parsed.height)
                .map_err(|e| BackendError::Trace { line: lineno, reason: e.to_string() })?;
            trace.entries.insert(parsed.request, (parsed.width, parsed.height, resp));
        }
        Ok(trace)
    }
}

/// Passes decodes through to `inner` and records every response.
pub struct RecordingBackend<B> {
    inner: B,
    trace: Mutex<Trace>,
}

impl<B: DecoderBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, trace: Mutex::new(Trace::default()) }
    }

    pub fn trace(&self) -> Trace {
        self.trace.lock().expect("trace lock").clone()
    }

    pub fn into_trace(self) -> Trace {
        self.trace.into_inner().expect("trace lock")
    }
}

impl<B: DecoderBackend> DecoderBackend for RecordingBackend<B> {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        let resp = self.inner.decode(request)?;
        self.trace.lock().expect("trace lock").insert(request, &resp);
        Ok(resp)
    }

    fn supports_concurrent_decode(&self) -> bool {
        self.inner.supports_concurrent_decode()
    }
}

/// Answers decodes from a recorded trace; unknown requests are a hard error.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    trace: Trace,
}

impl ReplayBackend {
    pub fn new(trace: Trace) -> Self {
        Self { trace }
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::new(Trace::load(path)?))
    }
}

impl DecoderBackend for ReplayBackend {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        let digest = request.digest();
        self.trace
            .get(&digest)
            .cloned()
            .ok_or(BackendError::ReplayMiss(digest))
    }

    fn supports_concurrent_decode(&self) -> bool {
        true
    }
}
