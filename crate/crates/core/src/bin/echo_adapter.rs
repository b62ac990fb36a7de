//! Reference external decoder: answers every decode with echo candidates
//! built from the bank's newest mask. `--fault` makes it misbehave in one
//! specific way, for exercising the engine's protocol checks.

use std::io::{BufRead, Write};

use clap::{Parser, ValueEnum};

use treemem::backend::protocol::{AdapterMessage, EngineMessage, WireCandidates, PROTOCOL_VERSION};
use treemem::backend::echo_candidates;
use treemem::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    /// Claim protocol version 2 at handshake.
    BadVersion,
    /// Reply with two candidates instead of three.
    TwoCandidates,
    /// Reply with an IoU above 1.
    IouOutOfRange,
    /// Reply with an error message.
    Error,
    /// Exit right after the handshake.
    Crash,
    /// Never answer a decode.
    Stall,
}

#[derive(Parser)]
struct Args {
    #[arg(long, value_enum)]
    fault: Option<Fault>,
}

fn send(out: &mut impl Write, msg: &AdapterMessage) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, msg)?;
    out.write_all(b"\n")?;
    out.flush()
}

fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: EngineMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                send(&mut out, &AdapterMessage::Error { message: format!("bad message: {e}") })?;
                continue;
            }
        };
        match msg {
            EngineMessage::Hello { .. } => {
                let version = if args.fault == Some(Fault::BadVersion) { 2 } else { u64::from(PROTOCOL_VERSION) };
                send(&mut out, &AdapterMessage::Hello { version, concurrent: false })?;
                if args.fault == Some(Fault::Crash) {
                    std::process::exit(3);
                }
            }
            EngineMessage::Decode(d) => {
                let newest = d.bank.last().map(|e| Mask::from_rle(d.width, d.height, &e.mask_rle));
                let reply = match (newest, args.fault) {
                    (_, Some(Fault::Stall)) => loop {
                        std::thread::park();
                    },
                    (_, Some(Fault::Error)) => AdapterMessage::Error { message: "decoder failure".into() },
                    (Some(Ok(mask)), fault) => {
                        let mut c = WireCandidates::from_response(&echo_candidates(d.time, &mask));
                        match fault {
                            Some(Fault::TwoCandidates) => {
                                c.items.pop();
                            }
                            Some(Fault::IouOutOfRange) => c.items[0].iou = 1.5,
                            _ => {}
                        }
                        AdapterMessage::Candidates(c)
                    }
                    (Some(Err(e)), _) => AdapterMessage::Error { message: e.to_string() },
                    (None, _) => AdapterMessage::Error { message: "empty memory bank".into() },
                };
                send(&mut out, &reply)?;
            }
            EngineMessage::Bye => break,
        }
    }
    Ok(())
}
