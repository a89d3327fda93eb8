//! Query reduction to a single uniform query, and the two-prover lift of a low-degree IPCP.
//!
//! Query reduction: before any interaction the verifier fixes a uniform point `r` and a curve
//! parameter `t` outside the query parameters `S` (the first `q` field elements). When the
//! inner verifier asks for its queries `A`, it sends the degree-`q` curve `gamma` with
//! `gamma(S) = A` and `gamma(t) = r`. The prover answers `rho = R o gamma`; the verifier reads
//! `R(r)` alone, compares it with `rho(t)` and hands `rho(S)` to the inner verifier.
//!
//! Lift: two provers that share randomness but have no channel between them. In
//! zero-knowledge mode they first send a shared coin naming the primary prover. The verifier
//! then either runs the plane-vs-point test on the oracle, or lets the primary prover emulate
//! the query-reduced IPCP while the secondary prover is asked for the oracle at `r`; the
//! secondary prover refuses the emulation role.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Domain, Fe, Field, Subset};
use crate::ipcp::{Abort, Event, Msg, Outcome, ProtocolError, Prover, Run, VIn, VOut, Verifier};
use crate::ldtest::{Bivariate, LdtChallenge, LdtParams, SharedRandomness, LINE, PLANE, POINT, UNIVARIATE, VALUE};
use crate::nexp::{NexpProver, NexpSetup, NexpSimulator, NexpVerifier, VERIFIER_QUERIES};
use crate::poly::{uni, Curve, Logged, MultiPoly, Oracle, OracleError, PolyOracle, Query};
use crate::rng::{Coins, SharedCoins};
use crate::sampler::{LazyOracle, PolySampler};
use crate::sumcheck::{ProverMode, SumClaim};
use crate::zksumcheck::{StrongMode, WeakSimCore, WeakZkProver, WeakZkSimulator, WeakZkVerifier};

pub const CURVE: &str = "qr.curve";
pub const RHO: &str = "qr.rho";
pub const COIN: &str = "lift.coin";
pub const MAIN: &str = "lift.main";

pub const CONSISTENCY_REJECT: &str = "curve restriction disagrees with the oracle at the reduced query";

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("inner protocol: {0}")]
    Inner(String),
    #[error("simulator failure: {0}")]
    Simulator(String),
    #[error("wrapper and curve restriction may need {needed} oracle queries, the inner simulator allows {bound}")]
    QueryBound { needed: usize, bound: usize },
}

/// Simulated prover of an inner protocol.
pub trait Simulator: Prover {
    fn failure(&self) -> Option<String>;
}

/// A low-degree IPCP the lift accepts: the verifier makes point queries only, all after the
/// interaction, and the honest oracle has bounded individual degrees.
pub trait LowDegreeIpcp {
    fn name(&self) -> &str;
    fn field(&self) -> &Field;
    fn oracle_degs(&self) -> Vec<usize>;
    /// Most distinct queries the verifier makes.
    fn query_count(&self) -> usize;
    fn prover(&self, coins: &mut dyn Coins) -> Result<Box<dyn Prover>, LiftError>;
    fn verifier(&self, coins: Box<dyn Coins>) -> Box<dyn Verifier>;

    fn simulator(&self, _coins: Box<dyn Coins>) -> Result<Box<dyn Simulator>, LiftError> {
        Err(LiftError::Unsupported(format!("{} has no simulator", self.name())))
    }

    /// Distinct oracle queries the simulator supports; `None` for no limit.
    fn zk_bound(&self) -> Option<usize> {
        None
    }

    fn num_vars(&self) -> usize {
        self.oracle_degs().len()
    }

    /// Bound on the total degree, hence on the degree of `R` along a degree-1 curve.
    fn total_degree(&self) -> usize {
        self.oracle_degs().iter().sum()
    }

    fn max_degree(&self) -> usize {
        self.oracle_degs().into_iter().max().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------------------
// query reduction

/// Coefficients of `rho = R o gamma` sent by the honest prover for a degree-`q` curve.
pub fn rho_len(f: &Field, q: usize, total_degree: usize) -> usize {
    ((q * total_degree + 1) as u64).min(f.order()) as usize
}

/// Soundness loss of query reduction: `q D / (|F| - q)`.
pub fn curve_soundness_loss(f: &Field, q: usize, total_degree: usize) -> f64 {
    (rho_len(f, q, total_degree) - 1) as f64 / (f.order() - q as u64) as f64
}

pub fn curve_msg(curve: &Curve, q: usize, f: &Field) -> Msg {
    let mut body = Vec::with_capacity(curve.comps.len() * (q + 1));
    for c in &curve.comps {
        let mut c = c.clone();
        c.resize(q + 1, f.zero());
        body.extend(c);
    }
    Msg::new(CURVE, body)
}

pub fn decode_curve(m: usize, body: &[Fe]) -> Option<Curve> {
    if m == 0 || body.is_empty() || body.len() % m != 0 {
        return None;
    }
    let n = body.len() / m;
    Some(Curve { comps: body.chunks(n).map(|c| c.to_vec()).collect() })
}

/// `R o gamma` from evaluations of `oracle` at the first `rho_len` parameters.
pub fn restrict_to_curve(f: &Field, oracle: &mut dyn Oracle, curve: &Curve, total_degree: usize) -> Result<Vec<Fe>, OracleError> {
    let xs = f.first_elements(rho_len(f, curve.degree(), total_degree));
    let ys = xs.iter().map(|&x| oracle.answer(&Query::Point(curve.at(f, x)))).collect::<Result<Vec<_>, _>>()?;
    Ok(uni::interpolate(f, &xs, &ys).expect("distinct parameters"))
}

enum QrStage {
    Inner { queried: bool },
    CurveSent { asked: usize },
    AwaitRho { asked: usize },
    AwaitValue { c: Fe, answers: Vec<Fe> },
}

/// Query-reduced verifier around `inner`, which must make one batch of at most `q` point
/// queries after the interaction.
pub struct QueryReduced<V> {
    field: Field,
    inner: V,
    m: usize,
    total_degree: usize,
    q: usize,
    r: Vec<Fe>,
    t: Fe,
    stage: QrStage,
}

impl<V: Verifier> QueryReduced<V> {
    /// Draws `r` and then `t` from `coins`, before the inner verifier runs.
    pub fn new(field: &Field, inner: V, m: usize, total_degree: usize, q: usize, coins: &mut dyn Coins) -> Result<Self, LiftError> {
        if q == 0 || field.order() <= q as u64 {
            return Err(LiftError::Params(format!("need 0 < q < |F|, got q = {q}")));
        }
        let r = field.random_vec(m, coins);
        let t = Domain::Excluding(Subset::first(field, q)).sample(field, coins);
        Ok(QueryReduced { field: field.clone(), inner, m, total_degree, q, r, t, stage: QrStage::Inner { queried: false } })
    }

    /// The single oracle query.
    pub fn query_point(&self) -> &[Fe] {
        &self.r
    }

    pub fn curve_param(&self) -> Fe {
        self.t
    }

    pub fn rho_degree_bound(&self) -> usize {
        rho_len(&self.field, self.q, self.total_degree) - 1
    }

    fn intercept(&mut self, out: VOut) -> Result<VOut, ProtocolError> {
        let VOut::Query(qs) = out else { return Ok(out) };
        if qs.is_empty() || qs.len() > self.q {
            return Err(ProtocolError::Misuse(format!("inner verifier made {} queries, reduction expects 1..={}", qs.len(), self.q)));
        }
        let mut points = Vec::with_capacity(self.q);
        for query in &qs {
            match query {
                Query::Point(x) if x.len() == self.m => points.push(x.clone()),
                other => return Err(ProtocolError::Misuse(format!("query reduction needs full point queries, got {other:?}"))),
            }
        }
        while points.len() < self.q {
            points.push(points[0].clone());
        }
        let curve = Curve::through(&self.field, &points, self.t, &self.r).map_err(|e| ProtocolError::Misuse(e.to_string()))?;
        self.stage = QrStage::CurveSent { asked: qs.len() };
        Ok(VOut::Send(curve_msg(&curve, self.q, &self.field)))
    }
}

impl<V: Verifier> Verifier for QueryReduced<V> {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        let f = self.field.clone();
        match (std::mem::replace(&mut self.stage, QrStage::Inner { queried: true }), input) {
            (QrStage::Inner { queried }, input) => {
                self.stage = QrStage::Inner { queried };
                let out = self.inner.step(input)?;
                if queried && matches!(out, VOut::Query(_)) {
                    return Err(ProtocolError::Misuse("inner verifier queried twice".into()));
                }
                self.intercept(out)
            }
            (QrStage::CurveSent { asked }, VIn::Sent) => {
                self.stage = QrStage::AwaitRho { asked };
                Ok(VOut::Receive)
            }
            (QrStage::AwaitRho { asked }, VIn::Message(m)) => {
                if m.kind != RHO || m.body.is_empty() {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {RHO}"))));
                }
                if uni::degree(&f, &m.body).is_some_and(|d| d > self.rho_degree_bound()) {
                    return Ok(VOut::Done(Outcome::reject("curve restriction exceeds its degree bound")));
                }
                let s = Curve::query_params(&f, self.q);
                let answers = s[..asked].iter().map(|&x| uni::eval(&f, &m.body, x)).collect();
                let c = uni::eval(&f, &m.body, self.t);
                self.stage = QrStage::AwaitValue { c, answers };
                Ok(VOut::Query(vec![Query::Point(self.r.clone())]))
            }
            (QrStage::AwaitValue { c, answers }, VIn::Answers(a)) if a.len() == 1 => {
                if a[0] != c {
                    return Ok(VOut::Done(Outcome::reject(CONSISTENCY_REJECT)));
                }
                let out = self.inner.step(VIn::Answers(answers))?;
                if matches!(out, VOut::Query(_)) {
                    return Err(ProtocolError::Misuse("inner verifier queried twice".into()));
                }
                Ok(out)
            }
            (_, input) => Err(ProtocolError::Misuse(format!("query-reduced verifier got unexpected input {input:?}"))),
        }
    }
}

/// Honest prover of the reduced protocol: answers the curve with `R o gamma`, forwards the
/// rest to `inner`.
pub struct QueryReducedProver<P> {
    pub inner: P,
    field: Field,
    total_degree: usize,
    pending: Option<Msg>,
    error: Option<OracleError>,
}

impl<P: Prover> QueryReducedProver<P> {
    pub fn new(field: &Field, inner: P, total_degree: usize) -> Self {
        QueryReducedProver { inner, field: field.clone(), total_degree, pending: None, error: None }
    }

    pub fn oracle_error(&self) -> Option<&OracleError> {
        self.error.as_ref()
    }

    fn rho(&mut self, m: &Msg) -> Result<Vec<Fe>, Abort> {
        let f = self.field.clone();
        let oracle = self.inner.oracle();
        let curve = decode_curve(oracle.num_vars(), &m.body).ok_or(Abort)?;
        restrict_to_curve(&f, oracle, &curve, self.total_degree).map_err(|e| {
            self.error = Some(e);
            Abort
        })
    }
}

impl<P: Prover> Prover for QueryReducedProver<P> {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self.inner.oracle()
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        if m.kind != CURVE {
            return self.inner.receive(m);
        }
        let rho = self.rho(m)?;
        self.pending = Some(Msg::new(RHO, rho));
        Ok(())
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        match self.pending.take() {
            Some(m) => Ok(m),
            None => self.inner.send(),
        }
    }
}

/// Answers the curve with `R o gamma + E`, where `E` is a nonzero multiple of the product of
/// `(X - e)` over the first `rho_len - 1` parameters outside the query parameters. The answers
/// handed to the inner verifier are all wrong, and the consistency check passes exactly when
/// `t` is one of the roots of `E`.
pub struct CurveCheat<P> {
    pub inner: QueryReducedProver<P>,
    pub scale: Fe,
}

impl<P: Prover> Prover for CurveCheat<P> {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self.inner.oracle()
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        if m.kind != CURVE {
            return self.inner.receive(m);
        }
        let f = self.inner.field.clone();
        let mut rho = self.inner.rho(m)?;
        let q = decode_curve(self.inner.oracle().num_vars(), &m.body).ok_or(Abort)?.degree();
        let roots = (rho_len(&f, q, self.inner.total_degree) - 1).min(f.order() as usize - q);
        let outside = Domain::Excluding(Subset::first(&f, q));
        let mut e = vec![self.scale];
        for i in 0..roots {
            e = uni::mul(&f, &e, &[f.neg(outside.nth(i as u64)), f.one()]);
        }
        rho.resize(rho.len().max(e.len()), f.zero());
        for (a, b) in rho.iter_mut().zip(&e) {
            *a = f.add(*a, *b);
        }
        self.inner.pending = Some(Msg::new(RHO, rho));
        Ok(())
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        self.inner.send()
    }
}

pub fn reduced_prover(ipcp: &dyn LowDegreeIpcp, coins: &mut dyn Coins) -> Result<QueryReducedProver<Box<dyn Prover>>, LiftError> {
    Ok(QueryReducedProver::new(ipcp.field(), ipcp.prover(coins)?, ipcp.total_degree()))
}

/// `inner_coins` drive the inner verifier exactly as in a plain run; `reduce_coins` give `r`
/// and `t`.
pub fn reduced_verifier(
    ipcp: &dyn LowDegreeIpcp,
    inner_coins: Box<dyn Coins>,
    reduce_coins: &mut dyn Coins,
) -> Result<QueryReduced<Box<dyn Verifier>>, LiftError> {
    let f = ipcp.field();
    QueryReduced::new(f, ipcp.verifier(inner_coins), ipcp.num_vars(), ipcp.total_degree(), ipcp.query_count(), reduce_coins)
}

/// Runs `prover` against the query-reduced honest verifier.
pub fn query_reduce_run(
    ipcp: &dyn LowDegreeIpcp,
    prover: &mut dyn Prover,
    inner_coins: Box<dyn Coins>,
    reduce_coins: &mut dyn Coins,
) -> Result<Run, LiftError> {
    let mut v = reduced_verifier(ipcp, inner_coins, reduce_coins)?;
    Ok(crate::ipcp::run(prover, &mut v, None)?)
}

// ---------------------------------------------------------------------------------------
// two provers

/// Input to a two-prover verifier step.
#[derive(Clone, Debug)]
pub enum MIn {
    Start,
    Sent,
    Message(Msg),
}

#[derive(Clone, Debug)]
pub enum MOut {
    Send { ch: u8, msg: Msg },
    Receive { ch: u8 },
    Done(Outcome),
}

pub trait MipVerifier {
    fn step(&mut self, input: MIn) -> Result<MOut, ProtocolError>;
}

/// A prover sees its own channel and nothing else.
pub trait MipProver {
    fn receive(&mut self, m: &Msg) -> Result<(), Abort>;
    fn send(&mut self) -> Result<Msg, Abort>;
}

/// Runs two provers against a verifier; channel `i` connects the verifier to prover `i`.
pub fn mip_run(provers: [&mut dyn MipProver; 2], verifier: &mut dyn MipVerifier) -> Result<Run, ProtocolError> {
    let mut events = Vec::new();
    let mut input = MIn::Start;
    let prover = |ch: u8| -> Result<usize, ProtocolError> {
        (ch < 2).then_some(ch as usize).ok_or_else(|| ProtocolError::Misuse(format!("no channel {ch}")))
    };
    loop {
        match verifier.step(input)? {
            MOut::Send { ch, msg } => {
                let p = prover(ch)?;
                events.push(Event::ToProver { ch, msg: msg.clone() });
                if provers[p].receive(&msg).is_err() {
                    events.push(Event::Abort { ch });
                    return Ok(Run { events, outcome: Outcome::Abort });
                }
                input = MIn::Sent;
            }
            MOut::Receive { ch } => {
                let p = prover(ch)?;
                match provers[p].send() {
                    Ok(msg) => {
                        events.push(Event::FromProver { ch, msg: msg.clone() });
                        input = MIn::Message(msg);
                    }
                    Err(Abort) => {
                        events.push(Event::Abort { ch });
                        return Ok(Run { events, outcome: Outcome::Abort });
                    }
                }
            }
            MOut::Done(o) => return Ok(Run { events, outcome: o }),
        }
    }
}

/// Events of one channel, in order.
pub fn channel_events(run: &Run, ch: u8) -> Vec<Event> {
    run.events.iter().filter(|e| e.channel() == ch).cloned().collect()
}

// ---------------------------------------------------------------------------------------
// answering oracle questions

fn affine(f: &Field, base: &[Fe], dirs: &[&[Fe]], t: &[Fe]) -> Vec<Fe> {
    let mut p = base.to_vec();
    for (d, &ti) in dirs.iter().zip(t) {
        f.axpy(&mut p, ti, d);
    }
    p
}

fn is_unit(f: &Field, v: &[Fe]) -> bool {
    v.iter().filter(|x| **x != f.zero()).count() == 1 && v.contains(&f.one())
}

/// Degree of `R` along a line or plane direction: `d` on axis-parallel lines, `md` otherwise.
fn flat_degree(f: &Field, m: usize, d: usize, axis: bool) -> usize {
    let deg = if axis { d } else { m * d };
    deg.min(f.order() as usize - 1)
}

/// Oracle queries needed for a plane answer.
pub fn plane_cost(f: &Field, m: usize, d: usize) -> usize {
    if m == 2 {
        (d + 1) * (d + 1)
    } else {
        (flat_degree(f, m, d, false) + 1).pow(2)
    }
}

/// Most distinct oracle queries the wrapper makes in one session: each prover answers at most
/// one question, and a plane is the most expensive one.
pub fn wrapper_query_limit(f: &Field, m: usize, d: usize) -> usize {
    2 * plane_cost(f, m, d)
}

/// Answer to a point, line or plane question, computed from oracle values. Lines and planes
/// are parametrized as sent: `base + x dir`, `base + u d1 + v d2`.
pub fn answer_question(
    f: &Field,
    m: usize,
    d: usize,
    msg: &Msg,
    lookup: &mut dyn FnMut(&[Fe]) -> Result<Fe, Abort>,
) -> Result<Msg, Abort> {
    let body = &msg.body;
    match msg.kind.as_str() {
        POINT if body.len() == m => Ok(Msg::scalar(VALUE, lookup(body)?)),
        LINE if body.len() == 2 * m => {
            let (base, dir) = body.split_at(m);
            if dir.iter().all(|x| *x == f.zero()) {
                return Err(Abort);
            }
            let xs = f.first_elements(flat_degree(f, m, d, is_unit(f, dir)) + 1);
            let ys = xs.iter().map(|&x| lookup(&affine(f, base, &[dir], &[x]))).collect::<Result<Vec<_>, _>>()?;
            let mut c = uni::interpolate(f, &xs, &ys).expect("distinct points");
            c.truncate(uni::degree(f, &c).unwrap_or(0) + 1);
            Ok(Msg::new(UNIVARIATE, c))
        }
        PLANE if body.len() == 3 * m => {
            let (base, rest) = body.split_at(m);
            let (d1, d2) = rest.split_at(m);
            if crate::poly::Flat::plane(f, base, d1, d2).is_err() {
                return Err(Abort);
            }
            let g = if m == 2 {
                // the plane is all of F^2: read R on a grid and restrict
                let xs = vec![f.first_elements(d + 1); 2];
                let mut vals = Vec::with_capacity((d + 1) * (d + 1));
                for &a in &xs[0] {
                    for &b in &xs[1] {
                        vals.push(lookup(&[a, b])?);
                    }
                }
                let r = MultiPoly::interpolate_grid(f, &xs, &vals).expect("distinct points");
                let comps: Vec<MultiPoly> = (0..2)
                    .map(|i| {
                        let mut c = MultiPoly::zero(f, &[1, 1]);
                        c.set_coeff(&[0, 0], base[i]);
                        c.set_coeff(&[1, 0], d1[i]);
                        c.set_coeff(&[0, 1], d2[i]);
                        c
                    })
                    .collect();
                r.restrict_map(&comps)
            } else {
                let xs = vec![f.first_elements(flat_degree(f, m, d, false) + 1); 2];
                let mut vals = Vec::with_capacity(xs[0].len() * xs[1].len());
                for &u in &xs[0] {
                    for &v in &xs[1] {
                        vals.push(lookup(&affine(f, base, &[d1, d2], &[u, v]))?);
                    }
                }
                MultiPoly::interpolate_grid(f, &xs, &vals).expect("distinct points")
            };
            Ok(Bivariate::from_poly(&g, g.total_degree().unwrap_or(0)).to_msg())
        }
        _ => Err(Abort),
    }
}

// ---------------------------------------------------------------------------------------
// lifted provers

/// What a lifted prover needs beyond its own message handling: oracle values and the inner
/// prover for the emulation role.
pub trait LiftBackend {
    fn lookup(&mut self, point: &[Fe]) -> Result<Fe, Abort>;
    fn main_receive(&mut self, m: &Msg) -> Result<(), Abort>;
    fn main_send(&mut self) -> Result<Msg, Abort>;
}

/// A prover's own copy of the query-reduced inner prover.
pub struct OwnBackend {
    pub prover: QueryReducedProver<Box<dyn Prover>>,
}

impl LiftBackend for OwnBackend {
    fn lookup(&mut self, point: &[Fe]) -> Result<Fe, Abort> {
        self.prover.oracle().answer(&Query::Point(point.to_vec())).map_err(|_| Abort)
    }

    fn main_receive(&mut self, m: &Msg) -> Result<(), Abort> {
        self.prover.receive(m)
    }

    fn main_send(&mut self) -> Result<Msg, Abort> {
        self.prover.send()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftMode {
    /// Provers send a shared coin naming the primary prover; only it may emulate.
    Zk,
    /// The verifier names the primary prover; one round fewer, not zero knowledge.
    Fast,
}

enum Role {
    Unassigned,
    Answered(Option<Msg>),
    Main,
}

/// The honest lifted prover, parametrized by where its oracle and inner prover live.
pub struct LiftProver<B> {
    field: Field,
    m: usize,
    d: usize,
    mode: LiftMode,
    index: u8,
    coin: Option<u8>,
    coin_sent: bool,
    role: Role,
    pub backend: B,
}

impl<B: LiftBackend> LiftProver<B> {
    /// `coin` is the channel of the primary prover, drawn from shared randomness (zero-knowledge
    /// mode only).
    pub fn new(field: &Field, m: usize, d: usize, mode: LiftMode, index: u8, coin: Option<u8>, backend: B) -> Self {
        LiftProver { field: field.clone(), m, d, mode, index, coin, coin_sent: false, role: Role::Unassigned, backend }
    }

    fn may_emulate(&self) -> bool {
        match self.mode {
            LiftMode::Zk => self.coin == Some(self.index),
            LiftMode::Fast => true,
        }
    }
}

impl<B: LiftBackend> MipProver for LiftProver<B> {
    fn receive(&mut self, msg: &Msg) -> Result<(), Abort> {
        match self.role {
            Role::Main => return self.backend.main_receive(msg),
            Role::Answered(_) => return Err(Abort),
            Role::Unassigned => {}
        }
        if msg.kind == MAIN {
            if !self.may_emulate() || !msg.body.is_empty() {
                return Err(Abort);
            }
            self.role = Role::Main;
            return Ok(());
        }
        let backend = &mut self.backend;
        let answer = answer_question(&self.field, self.m, self.d, msg, &mut |p| backend.lookup(p))?;
        self.role = Role::Answered(Some(answer));
        Ok(())
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        if self.mode == LiftMode::Zk && !self.coin_sent {
            self.coin_sent = true;
            let c = self.coin.ok_or(Abort)?;
            return Ok(Msg::scalar(COIN, self.field.from_int(c as i64)));
        }
        match &mut self.role {
            Role::Main => self.backend.main_send(),
            Role::Answered(a) => a.take().ok_or(Abort),
            Role::Unassigned => Err(Abort),
        }
    }
}

// ---------------------------------------------------------------------------------------
// lifted verifier

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftBranch {
    LowDegreeTest,
    Emulation,
}

/// The lift of an inner protocol.
pub struct LiftedProtocol<'a> {
    pub inner: &'a dyn LowDegreeIpcp,
    pub mode: LiftMode,
}

impl<'a> LiftedProtocol<'a> {
    pub fn new(inner: &'a dyn LowDegreeIpcp, mode: LiftMode) -> Result<LiftedProtocol<'a>, LiftError> {
        let lp = LiftedProtocol { inner, mode };
        lp.ldt_params().validate(inner.field()).map_err(|e| LiftError::Params(e.to_string()))?;
        if inner.field().order() <= inner.query_count() as u64 {
            return Err(LiftError::Params("field must exceed the query count".into()));
        }
        Ok(lp)
    }

    pub fn field(&self) -> &Field {
        self.inner.field()
    }

    pub fn ldt_params(&self) -> LdtParams {
        LdtParams { m: self.inner.num_vars(), d: self.inner.max_degree() }
    }

    pub fn verifier(&self, coins: Box<dyn Coins>) -> LiftVerifier<'a> {
        LiftVerifier {
            inner: self.inner,
            ldt: self.ldt_params(),
            mode: self.mode,
            coins: SharedCoins::new(coins),
            stage: LvStage::Start,
            primary: None,
            branch: None,
        }
    }

    /// Both honest provers. Each receives its own replay of the shared randomness: the coin
    /// first, then the inner prover's randomness.
    pub fn provers(&self, shared: &mut dyn SharedRandomness) -> Result<[LiftProver<OwnBackend>; 2], LiftError> {
        let f = self.field();
        let make = |i: u8, shared: &mut dyn SharedRandomness| -> Result<LiftProver<OwnBackend>, LiftError> {
            let mut coins = shared.fork();
            let coin = (self.mode == LiftMode::Zk).then(|| coins.below(2) as u8);
            let backend = OwnBackend { prover: reduced_prover(self.inner, coins.as_mut())? };
            Ok(LiftProver::new(f, self.inner.num_vars(), self.inner.max_degree(), self.mode, i, coin, backend))
        };
        Ok([make(0, shared)?, make(1, shared)?])
    }
}

struct Emulation {
    qr: QueryReduced<Box<dyn Verifier>>,
    primary: u8,
    setup: u8,
    lookup: Option<Fe>,
    awaiting_lookup: bool,
    pending: Option<VOut>,
}

impl Emulation {
    fn secondary(&self) -> u8 {
        1 - self.primary
    }

    fn route(&mut self, mut out: VOut) -> Result<MOut, ProtocolError> {
        loop {
            return Ok(match out {
                VOut::Send(msg) => MOut::Send { ch: self.primary, msg },
                VOut::Done(o) => MOut::Done(o),
                VOut::Receive | VOut::Query(_) if self.lookup.is_none() => {
                    self.awaiting_lookup = true;
                    self.pending = Some(out);
                    MOut::Receive { ch: self.secondary() }
                }
                VOut::Receive => MOut::Receive { ch: self.primary },
                VOut::Query(_) => {
                    out = self.qr.step(VIn::Answers(vec![self.lookup.unwrap()]))?;
                    continue;
                }
            });
        }
    }

    fn step(&mut self, input: MIn) -> Result<MOut, ProtocolError> {
        match (self.setup, input) {
            (0, MIn::Sent) => {
                self.setup = 1;
                Ok(MOut::Send { ch: self.primary, msg: Msg::new(MAIN, vec![]) })
            }
            (1, MIn::Sent) => {
                self.setup = 2;
                let out = self.qr.step(VIn::Start)?;
                self.route(out)
            }
            (2, MIn::Message(m)) if self.awaiting_lookup => {
                self.awaiting_lookup = false;
                let Some(z) = m.as_scalar().filter(|_| m.kind == VALUE) else {
                    return Ok(MOut::Done(Outcome::reject("malformed lookup answer")));
                };
                self.lookup = Some(z);
                match self.pending.take() {
                    Some(VOut::Receive) => Ok(MOut::Receive { ch: self.primary }),
                    Some(q @ VOut::Query(_)) => self.route(q),
                    _ => Err(ProtocolError::Misuse("lookup answer without a pending action".into())),
                }
            }
            (2, MIn::Sent) => {
                let out = self.qr.step(VIn::Sent)?;
                self.route(out)
            }
            (2, MIn::Message(m)) => {
                let out = self.qr.step(VIn::Message(m))?;
                self.route(out)
            }
            (_, input) => Err(ProtocolError::Misuse(format!("emulation got unexpected input {input:?}"))),
        }
    }
}

enum LvStage {
    Start,
    Coins { first: Option<Msg> },
    Ldt { challenge: Box<LdtChallenge>, msgs: [Msg; 2], step: u8, answers: Vec<Msg> },
    Emulation(Box<Emulation>),
    Finished,
}

/// Honest verifier of the lifted protocol.
pub struct LiftVerifier<'a> {
    inner: &'a dyn LowDegreeIpcp,
    ldt: LdtParams,
    mode: LiftMode,
    coins: SharedCoins,
    stage: LvStage,
    primary: Option<u8>,
    branch: Option<LiftBranch>,
}

impl LiftVerifier<'_> {
    pub fn primary(&self) -> Option<u8> {
        self.primary
    }

    pub fn branch(&self) -> Option<LiftBranch> {
        self.branch
    }

    fn begin(&mut self, primary: u8) -> Result<MOut, ProtocolError> {
        let f = self.inner.field().clone();
        self.primary = Some(primary);
        if !self.coins.bit() {
            self.branch = Some(LiftBranch::LowDegreeTest);
            let challenge = LdtChallenge::sample(&f, &self.ldt, &mut self.coins);
            let [qp, qs] = challenge.questions(&f).map(|q| q.to_msg(&f));
            let msgs = if primary == 0 { [qp, qs] } else { [qs, qp] };
            let first = msgs[0].clone();
            self.stage = LvStage::Ldt { challenge: Box::new(challenge), msgs, step: 1, answers: vec![] };
            return Ok(MOut::Send { ch: 0, msg: first });
        }
        self.branch = Some(LiftBranch::Emulation);
        let inner = self.inner.verifier(Box::new(self.coins.clone()));
        let ipcp = self.inner;
        let qr = QueryReduced::new(&f, inner, ipcp.num_vars(), ipcp.total_degree(), ipcp.query_count(), &mut self.coins)
            .map_err(|e| ProtocolError::Misuse(e.to_string()))?;
        let beta = qr.query_point().to_vec();
        self.stage = LvStage::Emulation(Box::new(Emulation { qr, primary, setup: 0, lookup: None, awaiting_lookup: false, pending: None }));
        Ok(MOut::Send { ch: 1 - primary, msg: Msg::new(POINT, beta) })
    }
}

impl MipVerifier for LiftVerifier<'_> {
    fn step(&mut self, input: MIn) -> Result<MOut, ProtocolError> {
        let f = self.inner.field().clone();
        match (std::mem::replace(&mut self.stage, LvStage::Finished), input) {
            (LvStage::Start, MIn::Start) => match self.mode {
                LiftMode::Zk => {
                    self.stage = LvStage::Coins { first: None };
                    Ok(MOut::Receive { ch: 0 })
                }
                LiftMode::Fast => {
                    let p = self.coins.below(2) as u8;
                    self.begin(p)
                }
            },
            (LvStage::Coins { first: None }, MIn::Message(m)) => {
                self.stage = LvStage::Coins { first: Some(m) };
                Ok(MOut::Receive { ch: 1 })
            }
            (LvStage::Coins { first: Some(a) }, MIn::Message(b)) => {
                let coin = |m: &Msg| {
                    m.as_scalar().filter(|c| m.kind == COIN && (*c == f.zero() || *c == f.one()))
                };
                match (coin(&a), coin(&b)) {
                    (Some(x), Some(y)) if x == y => self.begin(u8::from(x == f.one())),
                    (Some(_), Some(_)) => Ok(MOut::Done(Outcome::reject("provers disagree on the coin"))),
                    _ => Ok(MOut::Done(Outcome::reject("malformed coin"))),
                }
            }
            (LvStage::Ldt { challenge, msgs, step, mut answers }, input) => {
                let out = match (step, input) {
                    (1, MIn::Sent) => MOut::Send { ch: 1, msg: msgs[1].clone() },
                    (2, MIn::Sent) => MOut::Receive { ch: 0 },
                    (3, MIn::Message(m)) => {
                        answers.push(m);
                        MOut::Receive { ch: 1 }
                    }
                    (4, MIn::Message(m)) => {
                        answers.push(m);
                        let p = self.primary.unwrap() as usize;
                        return Ok(MOut::Done(challenge.decide(&f, &self.ldt, [&answers[p], &answers[1 - p]])));
                    }
                    (_, input) => return Err(ProtocolError::Misuse(format!("lifted verifier got unexpected input {input:?}"))),
                };
                self.stage = LvStage::Ldt { challenge, msgs, step: step + 1, answers };
                Ok(out)
            }
            (LvStage::Emulation(mut em), input) => {
                let out = em.step(input)?;
                self.stage = LvStage::Emulation(em);
                Ok(out)
            }
            (_, input) => Err(ProtocolError::Misuse(format!("lifted verifier got unexpected input {input:?}"))),
        }
    }
}

/// A run of the honest lifted verifier.
#[derive(Clone, Debug)]
pub struct LiftRun {
    pub run: Run,
    pub branch: Option<LiftBranch>,
    pub primary: Option<u8>,
}

pub fn lift_run(lp: &LiftedProtocol, shared: &mut dyn SharedRandomness, verifier_coins: Box<dyn Coins>) -> Result<LiftRun, LiftError> {
    let [mut p0, mut p1] = lp.provers(shared)?;
    let mut v = lp.verifier(verifier_coins);
    let run = mip_run([&mut p0, &mut p1], &mut v)?;
    Ok(LiftRun { run, branch: v.branch(), primary: v.primary() })
}

/// Honest provers against an arbitrary verifier.
pub fn lift_execute(lp: &LiftedProtocol, verifier: &mut dyn MipVerifier, shared: &mut dyn SharedRandomness) -> Result<Run, LiftError> {
    let [mut p0, mut p1] = lp.provers(shared)?;
    Ok(mip_run([&mut p0, &mut p1], verifier)?)
}

// ---------------------------------------------------------------------------------------
// simulation

struct SimCore {
    prover: QueryReducedProver<Box<dyn Simulator>>,
    seen: HashMap<Vec<Fe>, Fe>,
    error: Option<String>,
}

/// Both simulated provers share one simulated inner prover; the wrapper's oracle reads go
/// through here and are counted.
pub struct SimBackend(Rc<RefCell<SimCore>>);

impl LiftBackend for SimBackend {
    fn lookup(&mut self, point: &[Fe]) -> Result<Fe, Abort> {
        let mut core = self.0.borrow_mut();
        if let Some(v) = core.seen.get(point) {
            return Ok(*v);
        }
        match core.prover.oracle().answer(&Query::Point(point.to_vec())) {
            Ok(v) => {
                core.seen.insert(point.to_vec(), v);
                Ok(v)
            }
            Err(e) => {
                core.error.get_or_insert_with(|| e.to_string());
                Err(Abort)
            }
        }
    }

    fn main_receive(&mut self, m: &Msg) -> Result<(), Abort> {
        let mut core = self.0.borrow_mut();
        let r = core.prover.receive(m);
        if let Some(e) = core.prover.oracle_error().map(|e| e.to_string()) {
            core.error.get_or_insert(e);
        }
        r
    }

    fn main_send(&mut self) -> Result<Msg, Abort> {
        self.0.borrow_mut().prover.send()
    }
}

#[derive(Clone, Debug)]
pub struct LiftSimRun {
    pub run: Run,
    /// Distinct oracle points the wrapper read for lookup, line and plane answers.
    pub wrapper_queries: usize,
    pub wrapper_limit: usize,
}

/// Simulates the view of `verifier` against the honest lifted provers using only the inner
/// simulator: traffic for the emulating prover goes to the query-reduced simulator, and point,
/// line and plane questions are answered from its oracle.
pub fn lift_simulate(lp: &LiftedProtocol, verifier: &mut dyn MipVerifier, coins: Box<dyn Coins>) -> Result<LiftSimRun, LiftError> {
    let ipcp = lp.inner;
    let f = ipcp.field();
    let (m, d) = (ipcp.num_vars(), ipcp.max_degree());
    let limit = wrapper_query_limit(f, m, d);
    if let Some(b) = ipcp.zk_bound() {
        let needed = limit + rho_len(f, ipcp.query_count(), ipcp.total_degree());
        if b < needed {
            return Err(LiftError::QueryBound { needed, bound: b });
        }
    }
    let mut coins = SharedCoins::new(coins);
    let coin = (lp.mode == LiftMode::Zk).then(|| coins.below(2) as u8);
    let sim = ipcp.simulator(Box::new(coins.clone()))?;
    let core = Rc::new(RefCell::new(SimCore {
        prover: QueryReducedProver::new(f, sim, ipcp.total_degree()),
        seen: HashMap::new(),
        error: None,
    }));
    let mut p0 = LiftProver::new(f, m, d, lp.mode, 0, coin, SimBackend(core.clone()));
    let mut p1 = LiftProver::new(f, m, d, lp.mode, 1, coin, SimBackend(core.clone()));
    let run = mip_run([&mut p0, &mut p1], verifier)?;
    let core = core.borrow();
    if let Some(e) = core.error.clone().or_else(|| core.prover.inner.failure()) {
        return Err(LiftError::Simulator(e));
    }
    let wrapper_queries = core.seen.len();
    assert!(wrapper_queries <= limit, "wrapper made {wrapper_queries} oracle queries, limit {limit}");
    Ok(LiftSimRun { run, wrapper_queries, wrapper_limit: limit })
}

// ---------------------------------------------------------------------------------------
// inner protocols

/// Weak-ZK sumcheck for `sum over H^m of F = claimed` with `F` known to the verifier, which
/// finishes by evaluating `F` at the output point. The oracle is the prover's mask.
#[derive(Clone, Debug)]
pub struct PublicSumcheck {
    pub field: Field,
    pub h: Subset,
    pub summand: MultiPoly,
    pub claimed: Fe,
    pub mode: ProverMode,
}

impl PublicSumcheck {
    pub fn honest(summand: MultiPoly, h: &Subset) -> PublicSumcheck {
        let claimed = summand.sum_over(h);
        PublicSumcheck { field: summand.field().clone(), h: h.clone(), summand, claimed, mode: ProverMode::Honest }
    }

    pub fn claim(&self) -> SumClaim {
        SumClaim { h: self.h.clone(), degs: self.summand.deg_bounds().to_vec(), target: self.claimed }
    }
}

/// Accepts a weak-ZK claim `F(c) = v` iff the public summand agrees.
struct CheckSummand {
    inner: WeakZkVerifier,
    summand: MultiPoly,
}

impl Verifier for CheckSummand {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        Ok(match self.inner.step(input)? {
            VOut::Done(Outcome::Claim { claim }) if self.summand.eval(&claim.point) == claim.value => VOut::Done(Outcome::Accept),
            VOut::Done(Outcome::Claim { .. }) => VOut::Done(Outcome::reject("summand does not match the claim")),
            other => other,
        })
    }
}

impl Simulator for WeakZkSimulator {
    fn failure(&self) -> Option<String> {
        self.core.failure().map(str::to_string)
    }
}

impl LowDegreeIpcp for PublicSumcheck {
    fn name(&self) -> &str {
        "public-sumcheck"
    }

    fn field(&self) -> &Field {
        &self.field
    }

    fn oracle_degs(&self) -> Vec<usize> {
        self.summand.deg_bounds().to_vec()
    }

    fn query_count(&self) -> usize {
        1
    }

    fn prover(&self, coins: &mut dyn Coins) -> Result<Box<dyn Prover>, LiftError> {
        let p = WeakZkProver::honest(&self.field, Box::new(self.summand.clone()), &self.h, self.claimed, coins).with_mode(self.mode);
        Ok(Box::new(p))
    }

    fn verifier(&self, coins: Box<dyn Coins>) -> Box<dyn Verifier> {
        Box::new(CheckSummand { inner: WeakZkVerifier::new(&self.field, self.claim(), coins), summand: self.summand.clone() })
    }

    fn simulator(&self, coins: Box<dyn Coins>) -> Result<Box<dyn Simulator>, LiftError> {
        let core = WeakSimCore::new(&self.field, &self.h, self.summand.deg_bounds(), self.claimed, coins)
            .map_err(|e| LiftError::Inner(e.to_string()))?;
        let summand: Box<dyn Oracle> = Box::new(PolyOracle::points_only(self.summand.clone()));
        Ok(Box::new(WeakZkSimulator { core, summand: Logged::new(summand, None) }))
    }
}

/// Zero-round fixture: the oracle is a uniformly random polynomial with the given degrees, and
/// the verifier reads it at `q` uniform points and accepts.
#[derive(Clone, Debug)]
pub struct SpotQueries {
    pub field: Field,
    pub degs: Vec<usize>,
    pub q: usize,
}

pub struct OracleOnly<O>(pub O);

impl<O: Oracle> Prover for OracleOnly<O> {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.0
    }

    fn receive(&mut self, _m: &Msg) -> Result<(), Abort> {
        Err(Abort)
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        Err(Abort)
    }
}

impl<O: Oracle> Simulator for OracleOnly<O> {
    fn failure(&self) -> Option<String> {
        None
    }
}

struct SpotVerifier {
    field: Field,
    m: usize,
    q: usize,
    coins: Box<dyn Coins>,
}

impl Verifier for SpotVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        match input {
            VIn::Start => {
                let qs = (0..self.q).map(|_| Query::Point(self.field.random_vec(self.m, self.coins.as_mut()))).collect();
                Ok(VOut::Query(qs))
            }
            VIn::Answers(_) => Ok(VOut::Done(Outcome::Accept)),
            other => Err(ProtocolError::Misuse(format!("spot verifier got {other:?}"))),
        }
    }
}

impl LowDegreeIpcp for SpotQueries {
    fn name(&self) -> &str {
        "spot-queries"
    }

    fn field(&self) -> &Field {
        &self.field
    }

    fn oracle_degs(&self) -> Vec<usize> {
        self.degs.clone()
    }

    fn query_count(&self) -> usize {
        self.q
    }

    fn prover(&self, coins: &mut dyn Coins) -> Result<Box<dyn Prover>, LiftError> {
        Ok(Box::new(OracleOnly(PolyOracle::points_only(MultiPoly::random(&self.field, &self.degs, coins)))))
    }

    fn verifier(&self, coins: Box<dyn Coins>) -> Box<dyn Verifier> {
        Box::new(SpotVerifier { field: self.field.clone(), m: self.degs.len(), q: self.q, coins })
    }

    fn simulator(&self, coins: Box<dyn Coins>) -> Result<Box<dyn Simulator>, LiftError> {
        let sampler = PolySampler::new(&self.field, &self.degs).map_err(|e| LiftError::Inner(e.to_string()))?;
        Ok(Box::new(OracleOnly(LazyOracle::new(sampler, None, coins))))
    }
}

/// Caps the distinct queries to a simulator's oracle.
struct Bounded<S> {
    inner: S,
    arity: usize,
    seen: HashSet<Query>,
    bound: usize,
}

impl<S: Simulator> Prover for Bounded<S> {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        self.inner.receive(m)
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        self.inner.send()
    }
}

impl<S: Simulator> Oracle for Bounded<S> {
    fn num_vars(&self) -> usize {
        self.arity
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let o = self.inner.oracle();
        let q = q.clone().normalized(o.num_vars());
        if !self.seen.contains(&q) {
            if self.seen.len() >= self.bound {
                return Err(OracleError::QueryBound(self.bound));
            }
            self.seen.insert(q.clone());
        }
        self.inner.oracle().answer(&q)
    }
}

impl<S: Simulator> Simulator for Bounded<S> {
    fn failure(&self) -> Option<String> {
        self.inner.failure()
    }
}

impl Simulator for NexpSimulator {
    fn failure(&self) -> Option<String> {
        NexpSimulator::failure(self).map(str::to_string)
    }
}

/// The NEXP protocol on a fixed witness table; the oracle is the bundle.
#[derive(Clone, Debug)]
pub struct NexpIpcp {
    pub setup: NexpSetup,
    pub table: Vec<Fe>,
    pub mode: StrongMode,
}

impl LowDegreeIpcp for NexpIpcp {
    fn name(&self) -> &str {
        "nexp"
    }

    fn field(&self) -> &Field {
        self.setup.field()
    }

    fn oracle_degs(&self) -> Vec<usize> {
        self.setup.bundle_degs()
    }

    fn query_count(&self) -> usize {
        VERIFIER_QUERIES
    }

    fn prover(&self, coins: &mut dyn Coins) -> Result<Box<dyn Prover>, LiftError> {
        let p = NexpProver::new(&self.setup, &self.table, self.mode, coins).map_err(|e| LiftError::Inner(e.to_string()))?;
        Ok(Box::new(p))
    }

    fn verifier(&self, coins: Box<dyn Coins>) -> Box<dyn Verifier> {
        Box::new(NexpVerifier::new(&self.setup, coins))
    }

    fn simulator(&self, coins: Box<dyn Coins>) -> Result<Box<dyn Simulator>, LiftError> {
        let sim = NexpSimulator::new(&self.setup, coins).map_err(|e| LiftError::Inner(e.to_string()))?;
        Ok(Box::new(Bounded { inner: sim, arity: self.setup.bundle_arity(), seen: HashSet::new(), bound: self.setup.params.b }))
    }

    fn zk_bound(&self) -> Option<usize> {
        Some(self.setup.params.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipcp::{rounds_of, run};
    use crate::ldtest::SeededShared;
    use crate::nexp::{Formula, NexpParams, O3SatInstance, O3SatWitness};
    use crate::rng::RngStream;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn f97_sumcheck(seed: u64) -> PublicSumcheck {
        let f = Field::prime(97).unwrap();
        let summand = MultiPoly::random(&f, &[2, 2], &mut RngStream::from_seed(seed));
        PublicSumcheck::honest(summand, &Subset::first(&f, 2))
    }

    fn cheating(mut p: PublicSumcheck) -> PublicSumcheck {
        p.claimed = p.field.add(p.claimed, p.field.one());
        p.mode = ProverMode::Cheat;
        p
    }

    fn chi2_p(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let e = n as f64 / counts.len() as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
    }

    fn within(hits: u64, n: u64, p: f64) -> bool {
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (hits as f64 - n as f64 * p).abs() <= 5.0 * sd + 1.0
    }

    #[test]
    fn reduction_keeps_inner_decisions() {
        let honest = f97_sumcheck(1);
        let cheat = cheating(honest.clone());
        for ipcp in [&honest, &cheat] {
            for i in 0..200 {
                let root = RngStream::from_seed(i);
                let mut p = ipcp.prover(&mut root.child("p")).unwrap();
                let plain = run(p.as_mut(), ipcp.verifier(Box::new(root.child("v"))).as_mut(), None).unwrap();
                let mut p = reduced_prover(ipcp, &mut root.child("p")).unwrap();
                let reduced = query_reduce_run(ipcp, &mut p, Box::new(root.child("v")), &mut root.child("r")).unwrap();
                assert_eq!(plain.outcome.is_accept(), reduced.outcome.is_accept(), "seed {i}");
                assert_eq!(reduced.events.iter().filter(|e| matches!(e, Event::Query { .. })).count(), 1);
            }
        }
    }

    #[test]
    fn curve_cheat_passes_at_exact_rate() {
        let f = Field::prime(97).unwrap();
        let ipcp = SpotQueries { field: f.clone(), degs: vec![2], q: 3 };
        // rho has degree 6; the error polynomial vanishes on 6 of the 94 admissible t
        assert_eq!(rho_len(&f, 3, 2), 7);
        let n = 4000;
        let mut passed = 0;
        for i in 0..n {
            let root = RngStream::from_seed(i);
            let mut p = CurveCheat { inner: reduced_prover(&ipcp, &mut root.child("p")).unwrap(), scale: f.elem(5).unwrap() };
            let r = query_reduce_run(&ipcp, &mut p, Box::new(root.child("v")), &mut root.child("r")).unwrap();
            match r.outcome {
                Outcome::Accept => passed += 1,
                Outcome::Reject { reason } => assert_eq!(reason, CONSISTENCY_REJECT),
                o => panic!("{o:?}"),
            }
        }
        assert!(within(passed, n, 6.0 / 94.0), "{passed}/{n}");
        assert!(6.0 / 94.0 <= curve_soundness_loss(&f, 3, 2));
    }

    #[test]
    fn reduced_query_is_uniform() {
        let f = Field::prime(5).unwrap();
        let ipcp = SpotQueries { field: f.clone(), degs: vec![1, 1], q: 2 };
        let mut counts = vec![0u64; 25];
        for i in 0..10_000 {
            let root = RngStream::from_seed(i);
            let v = reduced_verifier(&ipcp, Box::new(root.child("v")), &mut root.child("r")).unwrap();
            let r = v.query_point();
            counts[(r[0].0 * 5 + r[1].0) as usize] += 1;
        }
        assert!(chi2_p(&counts) >= 1e-3, "{counts:?}");
    }

    #[test]
    fn reduced_query_ignores_the_prover() {
        let ipcp = f97_sumcheck(2);
        let query = |prover_seed: u64| {
            let mut p = reduced_prover(&ipcp, &mut RngStream::from_seed(prover_seed)).unwrap();
            let r = query_reduce_run(&ipcp, &mut p, Box::new(RngStream::from_seed(7)), &mut RngStream::from_seed(8)).unwrap();
            r.events.into_iter().find_map(|e| match e {
                Event::Query { query, .. } => Some(query),
                _ => None,
            })
        };
        let q0 = query(0);
        assert!(q0.is_some());
        for s in 1..20 {
            assert_eq!(query(s), q0);
        }
    }

    fn lifted_runs(ipcp: &dyn LowDegreeIpcp, mode: LiftMode, n: u64) -> Vec<LiftRun> {
        let lp = LiftedProtocol::new(ipcp, mode).unwrap();
        (0..n)
            .map(|i| {
                let root = RngStream::from_seed(i);
                lift_run(&lp, &mut SeededShared(root.child("shared")), Box::new(root.child("v"))).unwrap()
            })
            .collect()
    }

    #[test]
    fn lift_completeness_and_round_counts() {
        let ipcp = f97_sumcheck(3);
        let mut p = ipcp.prover(&mut RngStream::from_seed(0)).unwrap();
        let inner_rounds = run(p.as_mut(), ipcp.verifier(Box::new(RngStream::from_seed(1))).as_mut(), None).unwrap().rounds();
        assert!(inner_rounds >= 1);
        for mode in [LiftMode::Zk, LiftMode::Fast] {
            let mut seen = HashSet::new();
            for r in lifted_runs(&ipcp, mode, 300) {
                assert_eq!(r.run.outcome, Outcome::Accept, "{mode:?} {:?}", r.branch);
                let branch = r.branch.unwrap();
                seen.insert((branch, r.primary.unwrap()));
                let expect = match (branch, mode) {
                    (LiftBranch::Emulation, LiftMode::Zk) => inner_rounds + 2,
                    (LiftBranch::Emulation, LiftMode::Fast) => inner_rounds + 1,
                    (LiftBranch::LowDegreeTest, LiftMode::Zk) => 2,
                    (LiftBranch::LowDegreeTest, LiftMode::Fast) => 1,
                };
                assert_eq!(rounds_of(&r.run.events), expect, "{mode:?} {branch:?}");
            }
            assert_eq!(seen.len(), 4, "{mode:?}");
        }
    }

    #[test]
    fn lifted_soundness_tracks_the_reduced_protocol() {
        let ipcp = cheating(f97_sumcheck(4));
        let n = 2000;
        let mut reduced = 0;
        for i in 0..n {
            let root = RngStream::from_seed(i);
            let mut p = reduced_prover(&ipcp, &mut root.child("p")).unwrap();
            reduced += query_reduce_run(&ipcp, &mut p, Box::new(root.child("v")), &mut root.child("r")).unwrap().outcome.is_accept() as u64;
        }
        let lifted = lifted_runs(&ipcp, LiftMode::Zk, n).iter().filter(|r| r.run.outcome.is_accept()).count() as u64;
        // the low-degree branch accepts the honest mask, emulation behaves like the reduced protocol
        let p = 0.5 + 0.5 * reduced as f64 / n as f64;
        assert!(within(lifted, n, p), "lifted {lifted}, reduced {reduced}");
        assert!(lifted < n * 6 / 10);
    }

    struct BothMain {
        step: u8,
    }

    impl MipVerifier for BothMain {
        fn step(&mut self, input: MIn) -> Result<MOut, ProtocolError> {
            self.step += 1;
            Ok(match (self.step, input) {
                (1, _) => MOut::Receive { ch: 0 },
                (2, _) => MOut::Receive { ch: 1 },
                (3, _) => MOut::Send { ch: 0, msg: Msg::new(MAIN, vec![]) },
                (4, _) => MOut::Send { ch: 1, msg: Msg::new(MAIN, vec![]) },
                _ => MOut::Done(Outcome::Accept),
            })
        }
    }

    #[test]
    fn secondary_refuses_emulation() {
        let ipcp = f97_sumcheck(5);
        let lp = LiftedProtocol::new(&ipcp, LiftMode::Zk).unwrap();
        for i in 0..20 {
            let root = RngStream::from_seed(i);
            let real = lift_execute(&lp, &mut BothMain { step: 0 }, &mut SeededShared(root.clone())).unwrap();
            assert_eq!(real.outcome, Outcome::Abort);
            let sim = lift_simulate(&lp, &mut BothMain { step: 0 }, Box::new(root)).unwrap();
            assert_eq!(sim.run.outcome, Outcome::Abort);
            assert!(matches!(real.events.last(), Some(Event::Abort { .. })));
        }
    }

    #[test]
    fn simulated_lift_accepts_within_query_limit() {
        let ipcp = f97_sumcheck(6);
        let lp = LiftedProtocol::new(&ipcp, LiftMode::Zk).unwrap();
        let d = 2;
        let mut max = 0;
        for i in 0..200 {
            let root = RngStream::from_seed(i);
            let mut v = lp.verifier(Box::new(root.child("v")));
            let s = lift_simulate(&lp, &mut v, Box::new(root.child("s"))).unwrap();
            assert_eq!(s.run.outcome, Outcome::Accept);
            max = max.max(s.wrapper_queries);
        }
        assert!(max <= (d + 1) * (d + 1) + d + 1, "{max}");
        assert_eq!(wrapper_query_limit(ipcp.field(), 2, d), 2 * (d + 1) * (d + 1));
    }

    #[test]
    fn simulated_views_match_real_ones_on_coin_and_branch() {
        // coarse check on tiny data: the first message and branch frequencies agree
        let ipcp = f97_sumcheck(7);
        let lp = LiftedProtocol::new(&ipcp, LiftMode::Zk).unwrap();
        let key = |run: &Run| match &run.events[..2] {
            [Event::FromProver { msg: a, .. }, Event::FromProver { msg: b, .. }] => (a.body[0].0, b.body[0].0, run.events.len()),
            _ => panic!(),
        };
        let mut real = HashMap::new();
        let mut sim = HashMap::new();
        for i in 0..400 {
            let root = RngStream::from_seed(i);
            let r = lift_run(&lp, &mut SeededShared(root.child("p")), Box::new(root.child("v"))).unwrap();
            *real.entry(key(&r.run)).or_insert(0u64) += 1;
            let mut v = lp.verifier(Box::new(root.child("v")));
            let s = lift_simulate(&lp, &mut v, Box::new(root.child("s"))).unwrap();
            *sim.entry(key(&s.run)).or_insert(0u64) += 1;
        }
        let mut keys: Vec<_> = real.keys().chain(sim.keys()).cloned().collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let (a, b) = (real.get(&k).copied().unwrap_or(0), sim.get(&k).copied().unwrap_or(0));
            assert!(a.abs_diff(b) as f64 <= 5.0 * ((a + b) as f64).sqrt() + 2.0, "{k:?}: {a} vs {b}");
        }
    }

    #[test]
    fn answers_on_lines_and_planes_are_restrictions() {
        let f = Field::prime(11).unwrap();
        for m in [2, 3] {
            let r = MultiPoly::random(&f, &vec![2; m], &mut RngStream::from_seed(m as u64));
            let mut lookup = |p: &[Fe]| Ok(r.eval(p));
            let base = f.random_vec(m, &mut RngStream::from_seed(9));
            let d1 = f.random_vec(m, &mut RngStream::from_seed(10));
            let d2 = f.random_vec(m, &mut RngStream::from_seed(11));
            let line = answer_question(&f, m, 2, &Msg::new(LINE, [base.clone(), d1.clone()].concat()), &mut lookup).unwrap();
            for x in f.first_elements(11) {
                assert_eq!(uni::eval(&f, &line.body, x), r.eval(&affine(&f, &base, &[&d1], &[x])));
            }
            let plane = answer_question(&f, m, 2, &Msg::new(PLANE, [base.clone(), d1.clone(), d2.clone()].concat()), &mut lookup).unwrap();
            let g = Bivariate::decode(&plane).unwrap();
            for u in f.first_elements(11) {
                for v in f.first_elements(11) {
                    assert_eq!(g.eval(&f, u, v), r.eval(&affine(&f, &base, &[&d1, &d2], &[u, v])));
                }
            }
        }
    }

    fn nexp16() -> NexpIpcp {
        let f = Field::gf2(16).unwrap();
        let h = f.subfield_of_degree(1).unwrap();
        let inst = O3SatInstance::new(1, 1, Formula::parse("not and var_0 not var_4").unwrap()).unwrap();
        let setup = NexpSetup::new(&inst, &f, &h, &NexpParams { b: 8, slack: 2, lambda0: 3, k0: 2 }).unwrap();
        let table = setup.arith.witness_table(&O3SatWitness::parse("11").unwrap());
        NexpIpcp { setup, table, mode: StrongMode::Honest }
    }

    #[test]
    fn lifted_nexp_is_complete() {
        let ipcp = nexp16();
        for mode in [LiftMode::Zk, LiftMode::Fast] {
            for r in lifted_runs(&ipcp, mode, 6) {
                assert_eq!(r.run.outcome, Outcome::Accept, "{mode:?} {:?}", r.branch);
            }
        }
    }

    #[test]
    fn lifted_nexp_simulation_reports_query_bound() {
        let ipcp = nexp16();
        let lp = LiftedProtocol::new(&ipcp, LiftMode::Zk).unwrap();
        let mut v = lp.verifier(Box::new(RngStream::from_seed(0)));
        match lift_simulate(&lp, &mut v, Box::new(RngStream::from_seed(1))) {
            Err(LiftError::QueryBound { needed, bound }) => assert!(needed > bound && bound == 8),
            other => panic!("{:?}", other.map(|s| s.run.outcome)),
        }
    }
}
