//! Transcript files: JSON lines with a header, one line per event, and a trailer holding the
//! outcome and the event count.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ipcp::{Event, Header, Outcome, Transcript, TRANSCRIPT_VERSION};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("unsupported transcript version {0}, expected {TRANSCRIPT_VERSION}")]
    Version(u64),
    #[error("event {index}: {reason}")]
    Event { index: usize, reason: String },
    #[error("truncated at event {index}: no trailer")]
    Truncated { index: usize },
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    index: usize,
    event: Event,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    events: usize,
    outcome: Outcome,
}

fn push_line(out: &mut Vec<u8>, v: &impl Serialize) {
    serde_json::to_writer(&mut *out, v).expect("transcript lines serialize");
    out.push(b'\n');
}

pub fn transcript_to_bytes(t: &Transcript) -> Vec<u8> {
    let mut out = Vec::new();
    push_line(&mut out, &HeaderLine { header: t.header.clone() });
    for (index, event) in t.events.iter().enumerate() {
        push_line(&mut out, &EventLine { index, event: event.clone() });
    }
    push_line(&mut out, &Trailer { events: t.events.len(), outcome: t.outcome.clone() });
    out
}

pub fn parse_transcript(bytes: &[u8]) -> Result<Transcript, TranscriptError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TranscriptError::Header(e.to_string()))?;
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| TranscriptError::Header("empty file".into()))?;
    let raw: Value = serde_json::from_str(first).map_err(|e| TranscriptError::Header(e.to_string()))?;
    let version = raw.pointer("/header/version").and_then(Value::as_u64).ok_or_else(|| TranscriptError::Header("no version".into()))?;
    if version != TRANSCRIPT_VERSION as u64 {
        return Err(TranscriptError::Version(version));
    }
    let header = serde_json::from_value::<HeaderLine>(raw).map_err(|e| TranscriptError::Header(e.to_string()))?.header;
    let mut events = Vec::new();
    for line in lines {
        let index = events.len();
        let bad = |reason: String| TranscriptError::Event { index, reason };
        let v: Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if v.get("outcome").is_some() {
            let tr: Trailer = serde_json::from_value(v).map_err(|e| bad(format!("trailer: {e}")))?;
            if tr.events != index {
                return Err(bad(format!("trailer counts {} events", tr.events)));
            }
            return Ok(Transcript { header, events, outcome: tr.outcome });
        }
        let ev: EventLine = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
        if ev.index != index {
            return Err(bad(format!("line labelled {}", ev.index)));
        }
        events.push(ev.event);
    }
    Err(TranscriptError::Truncated { index: events.len() })
}

pub fn write_transcript(path: &Path, t: &Transcript) -> Result<(), TranscriptError> {
    Ok(std::fs::write(path, transcript_to_bytes(t))?)
}

pub fn read_transcript(path: &Path) -> Result<Transcript, TranscriptError> {
    parse_transcript(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Domain, Field, Subset};
    use crate::poly::MultiPoly;
    use crate::rng::RngStream;
    use crate::sumcheck::{run_sumcheck, ProverMode, SumClaim};

    fn random_transcript(seed: u64) -> Transcript {
        let mut r = RngStream::from_seed(seed);
        let f = Field::prime(31).unwrap();
        let h = Subset::first(&f, 2);
        let degs = [1 + (seed % 2) as usize, 2];
        let p = MultiPoly::random(&f, &degs, &mut r);
        let mut target = p.sum_over(&h);
        if seed % 3 == 0 {
            target = f.add(target, f.one());
        }
        let claim = SumClaim { h, degs: degs.to_vec(), target };
        run_sumcheck(&f, Box::new(p), &claim, Domain::Full, ProverMode::Honest, Box::new(r))
            .into_transcript("sumcheck", &f, serde_json::json!({ "seed": seed }), Some(seed))
    }

    #[test]
    fn round_trips() {
        for s in 0..100 {
            let t = random_transcript(s);
            let b = transcript_to_bytes(&t);
            let back = parse_transcript(&b).unwrap();
            assert_eq!(back, t);
            assert_eq!(transcript_to_bytes(&back), b);
        }
    }

    #[test]
    fn truncation_names_the_event() {
        let b = transcript_to_bytes(&random_transcript(1));
        let text = String::from_utf8(b).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // drop the trailer
        let cut = lines[..lines.len() - 1].join("\n");
        let e = parse_transcript(cut.as_bytes()).unwrap_err();
        assert!(matches!(e, TranscriptError::Truncated { index } if index == lines.len() - 2), "{e}");
        // cut in the middle of event 2
        let mid = format!("{}\n{}\n{}\n{}", lines[0], lines[1], lines[2], &lines[3][..lines[3].len() / 2]);
        let e = parse_transcript(mid.as_bytes()).unwrap_err();
        assert!(matches!(e, TranscriptError::Event { index: 2, .. }), "{e}");
        assert!(e.to_string().starts_with("event 2:"));
    }

    #[test]
    fn version_is_checked() {
        let b = transcript_to_bytes(&random_transcript(2));
        let text = String::from_utf8(b).unwrap().replacen("\"version\":1", "\"version\":7", 1);
        assert!(matches!(parse_transcript(text.as_bytes()), Err(TranscriptError::Version(7))));
    }
}
