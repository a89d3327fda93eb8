//! Interactive PCP plumbing: messages, prover/verifier interfaces, the driver that runs a
//! prover against a verifier, and the transcript it records.
//!
//! Verifiers are state machines that decide the schedule: on each step they send a message,
//! ask for the prover's next message, query the proof oracle, or stop with an [`Outcome`].
//! Provers expose their proof oracle up front and react to messages. Composed protocols hold
//! sub-protocol state machines and forward their actions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, Field, FieldDescriptor};
use crate::poly::{Oracle, OracleError, Query};

/// A protocol message: a kind tag and a flat list of field elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Msg {
    pub kind: String,
    pub body: Vec<Fe>,
}

impl Msg {
    pub fn new(kind: &str, body: Vec<Fe>) -> Msg {
        Msg { kind: kind.to_string(), body }
    }

    pub fn scalar(kind: &str, x: Fe) -> Msg {
        Msg::new(kind, vec![x])
    }

    /// The single element of a one-element message.
    pub fn as_scalar(&self) -> Option<Fe> {
        (self.body.len() == 1).then(|| self.body[0])
    }
}

/// Claim `F(point) = value`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointClaim {
    pub point: Vec<Fe>,
    pub value: Fe,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Outcome {
    Accept,
    Reject { reason: String },
    Claim { claim: PointClaim },
    Abort,
}

impl Outcome {
    pub fn reject(reason: impl Into<String>) -> Outcome {
        Outcome::Reject { reason: reason.into() }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, Outcome::Accept)
    }

    pub fn claim(&self) -> Option<&PointClaim> {
        match self {
            Outcome::Claim { claim } => Some(claim),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("protocol misuse: {0}")]
    Misuse(String),
    #[error("query bound violated: {0}")]
    QueryBound(String),
}

/// Input to a verifier step.
#[derive(Clone, Debug)]
pub enum VIn {
    Start,
    /// The previous `Send` was delivered.
    Sent,
    Message(Msg),
    Answers(Vec<Fe>),
}

/// What the verifier does next.
#[derive(Clone, Debug)]
pub enum VOut {
    Send(Msg),
    Receive,
    Query(Vec<Query>),
    Done(Outcome),
}

pub trait Verifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError>;
}

/// The prover refuses to continue; recorded as an explicit transcript event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Abort;

pub trait Prover {
    fn oracle(&mut self) -> &mut dyn Oracle;
    fn receive(&mut self, m: &Msg) -> Result<(), Abort>;
    fn send(&mut self) -> Result<Msg, Abort>;
}

impl<P: Prover + ?Sized> Prover for Box<P> {
    fn oracle(&mut self) -> &mut dyn Oracle {
        (**self).oracle()
    }
    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        (**self).receive(m)
    }
    fn send(&mut self) -> Result<Msg, Abort> {
        (**self).send()
    }
}

impl<V: Verifier + ?Sized> Verifier for Box<V> {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        (**self).step(input)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ToProver { ch: u8, msg: Msg },
    FromProver { ch: u8, msg: Msg },
    Query { ch: u8, query: Query, answer: Fe },
    Abort { ch: u8 },
}

impl Event {
    pub fn channel(&self) -> u8 {
        match self {
            Event::ToProver { ch, .. } | Event::FromProver { ch, .. } | Event::Query { ch, .. } | Event::Abort { ch } => *ch,
        }
    }
}

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub protocol: String,
    pub field: FieldDescriptor,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub header: Header,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Transcript {
    /// Rounds: a round is a verifier message (possibly empty) and the prover's reply, so the
    /// count is the number of maximal runs of prover messages. Oracle queries do not count.
    pub fn rounds(&self) -> usize {
        rounds_of(&self.events)
    }

    pub fn oracle_queries(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Query { .. })).count()
    }
}

pub fn rounds_of(events: &[Event]) -> usize {
    let mut turns = 0usize;
    let mut prover_speaking = false;
    for e in events {
        match e {
            Event::FromProver { .. } => {
                turns += usize::from(!prover_speaking);
                prover_speaking = true;
            }
            Event::ToProver { .. } => prover_speaking = false,
            _ => {}
        }
    }
    turns
}

/// Result of running a protocol.
#[derive(Clone, Debug)]
pub struct Run {
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Run {
    pub fn into_transcript(self, protocol: &str, field: &Field, params: serde_json::Value, seed: Option<u64>) -> Transcript {
        Transcript {
            header: Header { version: TRANSCRIPT_VERSION, protocol: protocol.into(), field: field.descriptor(), params, seed },
            events: self.events,
            outcome: self.outcome,
        }
    }

    /// Messages and answers only, the part of a view that depends on the prover.
    pub fn view(&self) -> Vec<Event> {
        self.events.clone()
    }

    pub fn rounds(&self) -> usize {
        rounds_of(&self.events)
    }
}

/// Counts distinct oracle queries and enforces a bound before answering.
#[derive(Clone, Debug, Default)]
pub struct QueryCounter {
    seen: std::collections::HashMap<Query, Fe>,
    pub bound: Option<usize>,
}

impl QueryCounter {
    pub fn new(bound: Option<usize>) -> QueryCounter {
        QueryCounter { seen: Default::default(), bound }
    }

    pub fn distinct(&self) -> usize {
        self.seen.len()
    }

    pub fn ask(&mut self, oracle: &mut dyn Oracle, q: &Query) -> Result<Fe, ProtocolError> {
        let q = q.clone().normalized(oracle.num_vars());
        if let Some(a) = self.seen.get(&q) {
            return Ok(*a);
        }
        if let Some(b) = self.bound {
            if self.seen.len() >= b {
                return Err(ProtocolError::QueryBound(format!("more than {b} distinct oracle queries")));
            }
        }
        let a = oracle.answer(&q)?;
        self.seen.insert(q, a);
        Ok(a)
    }
}

/// Runs `prover` against `verifier` on channel 0, enforcing an optional query bound.
pub fn run(prover: &mut dyn Prover, verifier: &mut dyn Verifier, bound: Option<usize>) -> Result<Run, ProtocolError> {
    let mut events = Vec::new();
    let mut counter = QueryCounter::new(bound);
    let mut input = VIn::Start;
    loop {
        match verifier.step(input)? {
            VOut::Send(m) => {
                events.push(Event::ToProver { ch: 0, msg: m.clone() });
                if prover.receive(&m).is_err() {
                    events.push(Event::Abort { ch: 0 });
                    return Ok(Run { events, outcome: Outcome::Abort });
                }
                input = VIn::Sent;
            }
            VOut::Receive => match prover.send() {
                Ok(m) => {
                    events.push(Event::FromProver { ch: 0, msg: m.clone() });
                    input = VIn::Message(m);
                }
                Err(Abort) => {
                    events.push(Event::Abort { ch: 0 });
                    return Ok(Run { events, outcome: Outcome::Abort });
                }
            },
            VOut::Query(qs) => {
                let mut answers = Vec::with_capacity(qs.len());
                for q in qs {
                    let a = counter.ask(prover.oracle(), &q)?;
                    events.push(Event::Query { ch: 0, query: q, answer: a });
                    answers.push(a);
                }
                input = VIn::Answers(answers);
            }
            VOut::Done(o) => return Ok(Run { events, outcome: o }),
        }
    }
}

/// A verifier that issues extra oracle queries before running `inner`.
pub struct ExtraQueries<V> {
    pub inner: V,
    pub extra: Vec<Query>,
    state: ExtraState,
}

enum ExtraState {
    Fresh,
    AwaitingAnswers,
    Running,
}

impl<V: Verifier> ExtraQueries<V> {
    pub fn new(inner: V, extra: Vec<Query>) -> ExtraQueries<V> {
        ExtraQueries { inner, extra, state: ExtraState::Fresh }
    }
}

impl<V: Verifier> Verifier for ExtraQueries<V> {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        match self.state {
            ExtraState::Fresh if !self.extra.is_empty() => {
                self.state = ExtraState::AwaitingAnswers;
                Ok(VOut::Query(self.extra.clone()))
            }
            ExtraState::Fresh => {
                self.state = ExtraState::Running;
                self.inner.step(input)
            }
            ExtraState::AwaitingAnswers => {
                self.state = ExtraState::Running;
                self.inner.step(VIn::Start)
            }
            ExtraState::Running => self.inner.step(input),
        }
    }
}

/// A check left for after interaction: `sum of coeff * answer(query) = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCheck {
    pub terms: Vec<(Fe, Query)>,
    pub rhs: Fe,
}

impl LinearCheck {
    pub fn holds(&self, field: &Field, mut answer: impl FnMut(&Query) -> Fe) -> bool {
        field.sum(self.terms.iter().map(|(c, q)| field.mul(*c, answer(q)))) == self.rhs
    }

    pub fn map_queries(self, map: impl Fn(&Query) -> Query) -> LinearCheck {
        LinearCheck { terms: self.terms.into_iter().map(|(c, q)| (c, map(&q))).collect(), rhs: self.rhs }
    }
}

/// Distinct queries of a list of checks, in first-use order.
pub fn check_queries(checks: &[LinearCheck]) -> Vec<Query> {
    let mut seen = std::collections::HashSet::new();
    checks.iter().flat_map(|c| c.terms.iter().map(|(_, q)| q.clone())).filter(|q| seen.insert(q.clone())).collect()
}

/// Outcome of forwarding an input to a sub-verifier.
pub enum Forward {
    /// The sub-verifier produced an action for the outer driver.
    Out(VOut),
    /// The sub-verifier finished.
    Done(Outcome),
}

/// Steps a sub-verifier, rewriting its queries with `map`.
pub fn forward(
    sub: &mut dyn Verifier,
    input: VIn,
    map: &dyn Fn(&Query) -> Query,
) -> Result<Forward, ProtocolError> {
    Ok(match sub.step(input)? {
        VOut::Done(o) => Forward::Done(o),
        VOut::Query(qs) => Forward::Out(VOut::Query(qs.iter().map(map).collect())),
        other => Forward::Out(other),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_counting() {
        let m = |to: bool| {
            if to {
                Event::ToProver { ch: 0, msg: Msg::new("x", vec![]) }
            } else {
                Event::FromProver { ch: 0, msg: Msg::new("x", vec![]) }
            }
        };
        // P V P V P
        let ev = vec![m(false), m(true), m(false), m(true), m(false)];
        assert_eq!(rounds_of(&ev), 3);
        let ev2 = vec![m(true), m(true), m(false)];
        assert_eq!(rounds_of(&ev2), 1);
    }
}
