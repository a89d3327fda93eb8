//! Zero-knowledge sumcheck.
//!
//! Weak variant: the prover publishes a uniformly random mask `R` as its oracle, sends
//! `z = sum R`, receives a nonzero `rho` and runs plain sumcheck on `rho F + R`. The verifier
//! reads `R(c)` and outputs a claim about `F(c)`. A simulator answers each mask query with one
//! query to `F`.
//!
//! Strong variant: the mask is `R(X) = sum over G^k of Z(X, .)` for a random `Z` of degree
//! `2 lambda` in the extra variables, so fewer than `lambda^k` queries to `Z` say nothing about
//! `R`. The oracle is `O(W, X, Y) = W Z(X, Y) + (1 - W) A(Y)`, where `A` masks a weak-ZK opening
//! of `R(c)`. The simulator needs `F` at the single point `c`, which lies in `I^m`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Domain, Fe, Field, Subset};
use crate::ipcp::{self, Abort, LinearCheck, Msg, Outcome, PointClaim, ProtocolError, Prover, Run, VIn, VOut, Verifier};
use crate::poly::{AxisOp, Logged, MultiPoly, Oracle, OracleError, PolyOracle, Query};
use crate::rng::{Coins, SharedCoins};
use crate::sampler::{self, Axis, Functional, PolySampler, SamplerError};
use crate::sumcheck::{LinComb, ProverMode, RoundSource, SumClaim, SumcheckProver, SumcheckVerifier, ROUND_POLY};

pub const WEAK_SUM: &str = "wzk.z";
pub const WEAK_CHALLENGE: &str = "wzk.rho";
pub const STRONG_SUM: &str = "szk.z";
pub const STRONG_CHALLENGE: &str = "szk.rho";
pub const STRONG_OPENING: &str = "szk.w";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZkError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("simulator failure: {0}")]
    Simulator(String),
}

fn nonzero_scalar(m: &Msg, kind: &str, f: &Field) -> Result<Fe, Abort> {
    if m.kind != kind {
        return Err(Abort);
    }
    match m.as_scalar() {
        Some(x) if x != f.zero() => Ok(x),
        _ => Err(Abort),
    }
}

fn query_functional(q: &Query, m: usize, h: &Subset) -> Result<Functional, OracleError> {
    let x = q.coords();
    match q {
        Query::Point(_) if x.len() == m => Ok(sampler::point(x)),
        Query::Prefix(_) if x.len() <= m => Ok(sampler::prefix(x, m, h)),
        _ => Err(OracleError::Dimension { expected: m, got: x.len() }),
    }
}

/// Functional for coefficient `e` of the round polynomial after fixing `fixed`.
fn round_functional(fixed: &[Fe], e: usize, m: usize, h: &Subset) -> Functional {
    let mut v = sampler::point(fixed);
    v.push(Axis::Coeff(e));
    v.extend((fixed.len() + 1..m).map(|_| Axis::SumOver(h.clone())));
    v
}

// ---------------------------------------------------------------------------------------
// weak ZK

enum WeakProverStage {
    SendSum,
    AwaitChallenge { z: Fe },
    Rounds(SumcheckProver),
}

/// Weak-ZK prover: mask oracle with prefix sums over `H`, then sumcheck on `rho F + R`.
pub struct WeakZkProver {
    field: Field,
    h: Subset,
    claimed: Fe,
    mode: ProverMode,
    mask: PolyOracle,
    summand: Option<Box<dyn RoundSource>>,
    stage: WeakProverStage,
}

impl WeakZkProver {
    pub fn new(
        field: &Field,
        summand: Box<dyn RoundSource>,
        h: &Subset,
        claimed: Fe,
        mask: MultiPoly,
        mode: ProverMode,
    ) -> WeakZkProver {
        assert_eq!(mask.num_vars(), summand.num_vars(), "mask arity");
        WeakZkProver {
            field: field.clone(),
            h: h.clone(),
            claimed,
            mode,
            mask: PolyOracle::with_sums(mask, h.clone()),
            summand: Some(summand),
            stage: WeakProverStage::SendSum,
        }
    }

    /// Draws the mask uniformly with the summand's degree bounds.
    pub fn honest(field: &Field, summand: Box<dyn RoundSource>, h: &Subset, claimed: Fe, coins: &mut dyn Coins) -> WeakZkProver {
        let mask = MultiPoly::random(field, &summand.deg_bounds(), coins);
        WeakZkProver::new(field, summand, h, claimed, mask, ProverMode::Honest)
    }

    pub fn with_mode(mut self, mode: ProverMode) -> WeakZkProver {
        self.mode = mode;
        self
    }

    pub fn mask(&self) -> &MultiPoly {
        &self.mask.poly
    }
}

impl Prover for WeakZkProver {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.mask
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        let mvars = self.mask.poly.num_vars();
        match &mut self.stage {
            WeakProverStage::AwaitChallenge { z } => {
                let f = &self.field;
                let rho = nonzero_scalar(m, WEAK_CHALLENGE, f)?;
                let target = f.add(f.mul(rho, self.claimed), *z);
                let summand = self.summand.take().expect("summand consumed once");
                let src = LinComb { field: f.clone(), terms: vec![(rho, summand), (f.one(), Box::new(self.mask.poly.clone()))] };
                self.stage = WeakProverStage::Rounds(SumcheckProver::new(f, Box::new(src), &self.h, target, self.mode));
                Ok(())
            }
            WeakProverStage::Rounds(sc) if sc.challenges().len() < mvars => sc.receive(m),
            _ => Err(Abort),
        }
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        let mvars = self.mask.poly.num_vars();
        match &mut self.stage {
            WeakProverStage::SendSum => {
                let z = self.mask.poly.sum_over(&self.h);
                self.stage = WeakProverStage::AwaitChallenge { z };
                Ok(Msg::scalar(WEAK_SUM, z))
            }
            WeakProverStage::Rounds(sc) if sc.challenges().len() < mvars => sc.send(),
            _ => Err(Abort),
        }
    }
}

enum WeakVerifierStage {
    Start,
    AwaitSum,
    ChallengeSent { rho: Fe, z: Fe },
    Rounds { rho: Fe, sc: SumcheckVerifier },
    AwaitMask { rho: Fe, claim: PointClaim },
    Finished,
}

/// Weak-ZK verifier. Its single oracle query is the mask at the final sumcheck point.
pub struct WeakZkVerifier {
    field: Field,
    claim: SumClaim,
    coins: Option<Box<dyn Coins>>,
    defer: bool,
    rho: Option<Fe>,
    stage: WeakVerifierStage,
}

impl WeakZkVerifier {
    pub fn new(field: &Field, claim: SumClaim, coins: Box<dyn Coins>) -> WeakZkVerifier {
        WeakZkVerifier { field: field.clone(), claim, coins: Some(coins), defer: false, rho: None, stage: WeakVerifierStage::Start }
    }

    /// Skips the mask query: the verifier finishes with the sumcheck claim `(c, b)`, and the
    /// caller checks `rho F(c) + R(c) = b` itself.
    pub fn deferred(mut self) -> WeakZkVerifier {
        self.defer = true;
        self
    }

    /// The challenge `rho`, once sent.
    pub fn rho(&self) -> Option<Fe> {
        self.rho
    }

    fn after_rounds(&mut self, rho: Fe, out: VOut, sc: SumcheckVerifier) -> VOut {
        match out {
            VOut::Done(Outcome::Claim { claim }) if self.defer => VOut::Done(Outcome::Claim { claim }),
            VOut::Done(Outcome::Claim { claim }) => {
                let q = Query::Point(claim.point.clone());
                self.stage = WeakVerifierStage::AwaitMask { rho, claim };
                VOut::Query(vec![q])
            }
            VOut::Done(o) => VOut::Done(o),
            other => {
                self.stage = WeakVerifierStage::Rounds { rho, sc };
                other
            }
        }
    }
}

impl Verifier for WeakZkVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        let f = self.field.clone();
        match (std::mem::replace(&mut self.stage, WeakVerifierStage::Finished), input) {
            (WeakVerifierStage::Start, VIn::Start) => {
                self.stage = WeakVerifierStage::AwaitSum;
                Ok(VOut::Receive)
            }
            (WeakVerifierStage::AwaitSum, VIn::Message(m)) => {
                let Some(z) = m.as_scalar().filter(|_| m.kind == WEAK_SUM) else {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {WEAK_SUM}, got {}", m.kind))));
                };
                let coins = self.coins.as_mut().expect("coins held until sumcheck");
                let rho = f.random_nonzero(coins.as_mut());
                self.rho = Some(rho);
                self.stage = WeakVerifierStage::ChallengeSent { rho, z };
                Ok(VOut::Send(Msg::scalar(WEAK_CHALLENGE, rho)))
            }
            (WeakVerifierStage::ChallengeSent { rho, z }, VIn::Sent) => {
                let target = f.add(f.mul(rho, self.claim.target), z);
                let claim = SumClaim { target, ..self.claim.clone() };
                let mut sc = SumcheckVerifier::new(&f, claim, Domain::Full, self.coins.take().expect("coins"));
                let out = sc.step(VIn::Start)?;
                Ok(self.after_rounds(rho, out, sc))
            }
            (WeakVerifierStage::Rounds { rho, mut sc }, input) => {
                let out = sc.step(input)?;
                Ok(self.after_rounds(rho, out, sc))
            }
            (WeakVerifierStage::AwaitMask { rho, claim }, VIn::Answers(a)) if a.len() == 1 => {
                let value = f.div(f.sub(claim.value, a[0]), rho).expect("rho nonzero");
                Ok(VOut::Done(Outcome::Claim { claim: PointClaim { point: claim.point, value } }))
            }
            (_, input) => Err(ProtocolError::Misuse(format!("weak-ZK verifier got unexpected input {input:?}"))),
        }
    }
}

/// Honest verifier against the weak-ZK prover on `summand`.
pub fn weak_zk_run(
    field: &Field,
    summand: Box<dyn RoundSource>,
    claim: &SumClaim,
    mode: ProverMode,
    prover_coins: &mut dyn Coins,
    verifier_coins: Box<dyn Coins>,
) -> Result<Run, ZkError> {
    let mut p = WeakZkProver::honest(field, summand, &claim.h, claim.target, prover_coins).with_mode(mode);
    let mut v = WeakZkVerifier::new(field, claim.clone(), verifier_coins);
    Ok(ipcp::run(&mut p, &mut v, None)?)
}

enum WeakSimStage {
    SendSum,
    AwaitChallenge { z: Fe },
    Rounds { rho: Fe, q: PolySampler, fixed: Vec<Fe> },
}

/// State of the weak-ZK simulator. Access to the summand is passed in per call, so a
/// composed simulator can back it with its own lazily sampled polynomial.
///
/// Before `rho` the mask is a lazily sampled uniform `R`. At `rho` the simulator switches to a
/// lazily sampled `Q = rho F + R` with the forced total sum, constrained by every earlier mask
/// answer (one summand query each); later mask answers are `Q(q) - rho F(q)`.
pub struct WeakSimCore {
    field: Field,
    h: Subset,
    degs: Vec<usize>,
    claimed: Fe,
    mask: PolySampler,
    coins: Box<dyn Coins>,
    before: Vec<(Query, Functional, Fe)>,
    cache: HashMap<Query, Fe>,
    stage: WeakSimStage,
    f_queries: usize,
    failure: Option<String>,
}

impl WeakSimCore {
    pub fn new(field: &Field, h: &Subset, degs: &[usize], claimed: Fe, coins: Box<dyn Coins>) -> Result<WeakSimCore, ZkError> {
        Ok(WeakSimCore {
            field: field.clone(),
            h: h.clone(),
            degs: degs.to_vec(),
            claimed,
            mask: PolySampler::new(field, degs)?,
            coins,
            before: vec![],
            cache: HashMap::new(),
            stage: WeakSimStage::SendSum,
            f_queries: 0,
            failure: None,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.degs.len()
    }

    /// Sets the claimed sum; must happen before `rho` arrives.
    pub fn set_claimed(&mut self, a: Fe) {
        self.claimed = a;
    }

    /// Summand queries made so far.
    pub fn f_queries(&self) -> usize {
        self.f_queries
    }

    /// Distinct mask queries answered so far.
    pub fn mask_queries(&self) -> usize {
        self.cache.len()
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    fn fail(&mut self, e: impl std::fmt::Display) -> Abort {
        self.failure.get_or_insert_with(|| e.to_string());
        Abort
    }

    pub fn answer_mask(&mut self, q: &Query, f: &mut dyn Oracle) -> Result<Fe, OracleError> {
        let m = self.degs.len();
        let q = q.clone().normalized(m);
        if let Some(a) = self.cache.get(&q) {
            return Ok(*a);
        }
        let fun = query_functional(&q, m, &self.h)?;
        let sim_err = |e: SamplerError| OracleError::Simulator(e.to_string());
        let a = match &mut self.stage {
            WeakSimStage::Rounds { rho, q: qs, .. } => {
                let qv = qs.answer(&fun, self.coins.as_mut()).map_err(sim_err)?;
                let fv = f.answer(&q)?;
                self.f_queries += 1;
                self.field.sub(qv, self.field.mul(*rho, fv))
            }
            _ => {
                let r = self.mask.answer(&fun, self.coins.as_mut()).map_err(sim_err)?;
                self.before.push((q.clone(), fun, r));
                r
            }
        };
        self.cache.insert(q, a);
        Ok(a)
    }

    pub fn receive(&mut self, msg: &Msg, f: &mut dyn Oracle) -> Result<(), Abort> {
        let m = self.degs.len();
        match &mut self.stage {
            WeakSimStage::AwaitChallenge { z } => {
                let fld = self.field.clone();
                let rho = nonzero_scalar(msg, WEAK_CHALLENGE, &fld)?;
                let z = *z;
                let mut q = PolySampler::new(&fld, &self.degs).map_err(|e| self.fail(e))?;
                let total = sampler::prefix(&[], m, &self.h);
                q.constrain(&total, fld.add(fld.mul(rho, self.claimed), z)).map_err(|e| self.fail(e))?;
                for (query, fun, r) in std::mem::take(&mut self.before) {
                    let fv = f.answer(&query).map_err(|e| self.fail(e))?;
                    self.f_queries += 1;
                    q.constrain(&fun, fld.add(r, fld.mul(rho, fv))).map_err(|e| self.fail(e))?;
                }
                self.stage = WeakSimStage::Rounds { rho, q, fixed: vec![] };
                Ok(())
            }
            WeakSimStage::Rounds { fixed, .. } if fixed.len() < m => {
                fixed.push(msg.as_scalar().ok_or(Abort)?);
                Ok(())
            }
            _ => Err(Abort),
        }
    }

    pub fn send(&mut self) -> Result<Msg, Abort> {
        let m = self.degs.len();
        match &mut self.stage {
            WeakSimStage::SendSum => {
                let total = sampler::prefix(&[], m, &self.h);
                let z = self.mask.answer(&total, self.coins.as_mut()).map_err(|e| self.fail(e))?;
                self.stage = WeakSimStage::AwaitChallenge { z };
                Ok(Msg::scalar(WEAK_SUM, z))
            }
            WeakSimStage::Rounds { q, fixed, .. } if fixed.len() < m => {
                let i = fixed.len();
                let mut g = Vec::with_capacity(self.degs[i] + 1);
                for e in 0..=self.degs[i] {
                    let fun = round_functional(fixed, e, m, &self.h);
                    match q.answer(&fun, self.coins.as_mut()) {
                        Ok(x) => g.push(x),
                        Err(err) => {
                            self.failure.get_or_insert_with(|| err.to_string());
                            return Err(Abort);
                        }
                    }
                }
                Ok(Msg::new(ROUND_POLY, g))
            }
            _ => Err(Abort),
        }
    }
}

/// Weak-ZK simulator with its own summand oracle.
pub struct WeakZkSimulator {
    pub core: WeakSimCore,
    pub summand: Logged<Box<dyn Oracle>>,
}

impl Prover for WeakZkSimulator {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        self.core.receive(m, &mut self.summand)
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        self.core.send()
    }
}

impl Oracle for WeakZkSimulator {
    fn num_vars(&self) -> usize {
        self.core.num_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        self.core.answer_mask(q, &mut self.summand)
    }
}

/// A simulated view together with the simulator's accounting.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub run: Run,
    /// Distinct summand queries the simulator made, with answers.
    pub f_log: Vec<(Query, Fe)>,
    /// Distinct oracle queries the verifier made.
    pub oracle_queries: usize,
}

/// Simulates the view of `verifier` against the weak-ZK prover, reading the summand only
/// through `summand` (which must answer prefix queries if the verifier makes them).
pub fn weak_zk_simulate(
    field: &Field,
    claim: &SumClaim,
    summand: Box<dyn Oracle>,
    verifier: &mut dyn Verifier,
    coins: Box<dyn Coins>,
    bound: Option<usize>,
) -> Result<SimRun, ZkError> {
    let core = WeakSimCore::new(field, &claim.h, &claim.degs, claim.target, coins)?;
    let mut sim = WeakZkSimulator { core, summand: Logged::new(summand, None) };
    let run = ipcp::run(&mut sim, verifier, bound)?;
    if let Some(e) = sim.core.failure() {
        return Err(ZkError::Simulator(e.to_string()));
    }
    let oracle_queries = sim.core.mask_queries();
    assert!(
        sim.core.f_queries() <= oracle_queries,
        "weak-ZK simulator made {} summand queries for {} mask queries",
        sim.core.f_queries(),
        oracle_queries
    );
    Ok(SimRun { run, f_log: sim.summand.log().to_vec(), oracle_queries })
}

// ---------------------------------------------------------------------------------------
// strong ZK

/// Query budget against which strong zero knowledge is claimed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryBudget {
    /// Fewer than `lambda^k` distinct queries.
    BelowLambdaPowK,
    Explicit(usize),
}

/// Public parameters of the strong-ZK sumcheck.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongZkParams {
    pub h: Subset,
    /// Degree bounds of the summand.
    pub degs: Vec<usize>,
    pub k: usize,
    pub lambda: usize,
    /// Summation set of the commitment, `|G| = lambda`.
    pub g: Subset,
    /// Challenge set `I`.
    pub challenges: Domain,
    pub budget: QueryBudget,
}

impl StrongZkParams {
    /// Defaults: `G` the first `lambda` field elements, `I = F \ H`, budget below `lambda^k`.
    pub fn new(field: &Field, h: &Subset, degs: &[usize], k: usize, lambda: usize) -> Result<StrongZkParams, ZkError> {
        let p = StrongZkParams {
            h: h.clone(),
            degs: degs.to_vec(),
            k,
            lambda,
            g: Subset::first(field, lambda),
            challenges: Domain::Excluding(h.clone()),
            budget: QueryBudget::BelowLambdaPowK,
        };
        p.validate(field)?;
        Ok(p)
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> StrongZkParams {
        self.budget = budget;
        self
    }

    pub fn validate(&self, field: &Field) -> Result<(), ZkError> {
        let err = |s: String| Err(ZkError::Params(s));
        if self.degs.is_empty() {
            return err("summand needs at least one variable".into());
        }
        if self.k == 0 || self.lambda == 0 {
            return err(format!("k = {} and lambda = {} must be positive", self.k, self.lambda));
        }
        if 2 * self.lambda > self.max_degree() {
            return err(format!("2 lambda = {} exceeds the degree bound {}", 2 * self.lambda, self.max_degree()));
        }
        if self.g.len() != self.lambda {
            return err(format!("|G| = {} but lambda = {}", self.g.len(), self.lambda));
        }
        if self.g.elems().iter().chain(self.h.elems()).any(|x| (x.0 as u64) >= field.order()) {
            return err("G or H not inside the field".into());
        }
        if self.challenges.size(field) == 0 {
            return err("empty challenge set".into());
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.degs.len()
    }

    pub fn max_degree(&self) -> usize {
        self.degs.iter().copied().max().unwrap_or(0)
    }

    /// Degree bounds of `Z(X, Y)`.
    pub fn z_degs(&self) -> Vec<usize> {
        let mut d = self.degs.clone();
        d.extend(std::iter::repeat(2 * self.lambda).take(self.k));
        d
    }

    /// Degree bounds of the opening mask `A(Y)`.
    pub fn a_degs(&self) -> Vec<usize> {
        vec![2 * self.lambda; self.k]
    }

    /// Degree bounds of the bundled oracle `O(W, X, Y)`.
    pub fn oracle_degs(&self) -> Vec<usize> {
        let mut d = vec![1];
        d.extend(self.z_degs());
        d
    }

    pub fn oracle_vars(&self) -> usize {
        1 + self.m() + self.k
    }

    /// Largest number of distinct oracle queries a verifier may make.
    pub fn query_limit(&self) -> usize {
        match self.budget {
            QueryBudget::BelowLambdaPowK => {
                (self.lambda as u128).checked_pow(self.k as u32).map_or(usize::MAX, |x| (x - 1).min(usize::MAX as u128) as usize)
            }
            QueryBudget::Explicit(n) => n,
        }
    }

    /// Acceptance bound for a false claim: `md/|I| + (kd + 2)/(|F| - 1)`.
    pub fn soundness_bound(&self, field: &Field) -> f64 {
        let d = self.max_degree() as f64;
        let i = self.challenges.size(field) as f64;
        (self.m() as f64) * d / i + (self.k as f64 * d + 2.0) / (field.order() as f64 - 1.0)
    }
}

/// `R(X) = sum over G^k of Z(X, .)`.
pub fn committed_mask(z: &MultiPoly, m: usize, g: &Subset) -> MultiPoly {
    let ops: Vec<AxisOp> = (0..z.num_vars()).map(|i| if i < m { AxisOp::Keep } else { AxisOp::SumOver(g) }).collect();
    z.contract(&ops)
}

/// `O(W, X, Y) = W Z(X, Y) + (1 - W) A(Y)`.
pub fn strong_oracle(field: &Field, z: &MultiPoly, a: &MultiPoly, m: usize) -> MultiPoly {
    let lifted = a.insert_vars(0, m).pad_to(z.deg_bounds());
    // constant-in-W block is A, linear block is Z - A
    let mut coeffs = lifted.coeffs().to_vec();
    coeffs.extend(z.coeffs().iter().zip(lifted.coeffs()).map(|(x, y)| field.sub(*x, *y)));
    let mut degs = vec![1];
    degs.extend(z.deg_bounds());
    MultiPoly::from_coeffs(field, &degs, coeffs).expect("dimension matches")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongMode {
    Honest,
    /// Cheats in the main sumcheck and opens the mask honestly.
    CheatSum,
    /// Cheats in the main sumcheck, then opens the mask to whatever value makes the output
    /// claim true and cheats in the opening.
    CheatSumAndOpening,
}

enum StrongProverStage {
    SendSum,
    AwaitChallenge,
    Rounds(SumcheckProver),
    Opening(WeakZkProver),
    Finished,
}

/// Strong-ZK prover.
pub struct StrongZkProver {
    field: Field,
    params: StrongZkParams,
    claimed: Fe,
    mode: StrongMode,
    z: MultiPoly,
    a: MultiPoly,
    r: MultiPoly,
    oracle: PolyOracle,
    summand: Option<Box<dyn RoundSource>>,
    stage: StrongProverStage,
}

impl StrongZkProver {
    pub fn new(
        field: &Field,
        params: &StrongZkParams,
        summand: Box<dyn RoundSource>,
        claimed: Fe,
        z: MultiPoly,
        a: MultiPoly,
        mode: StrongMode,
    ) -> StrongZkProver {
        assert_eq!(summand.num_vars(), params.m(), "summand arity");
        let r = committed_mask(&z, params.m(), &params.g);
        let oracle = PolyOracle::points_only(strong_oracle(field, &z, &a, params.m()));
        StrongZkProver {
            field: field.clone(),
            params: params.clone(),
            claimed,
            mode,
            z,
            a,
            r,
            oracle,
            summand: Some(summand),
            stage: StrongProverStage::SendSum,
        }
    }

    /// Draws `Z` and then `A` uniformly.
    pub fn honest(
        field: &Field,
        params: &StrongZkParams,
        summand: Box<dyn RoundSource>,
        claimed: Fe,
        mode: StrongMode,
        coins: &mut dyn Coins,
    ) -> StrongZkProver {
        let z = MultiPoly::random(field, &params.z_degs(), coins);
        let a = MultiPoly::random(field, &params.a_degs(), coins);
        StrongZkProver::new(field, params, summand, claimed, z, a, mode)
    }

    pub fn commitment(&self) -> &MultiPoly {
        &self.z
    }

    pub fn opening_mask(&self) -> &MultiPoly {
        &self.a
    }

    pub fn oracle_poly(&self) -> &MultiPoly {
        &self.oracle.poly
    }

    fn open(&mut self, sc: SumcheckProver) -> Msg {
        let f = self.field.clone();
        let c = sc.challenges().to_vec();
        let honest_w = self.r.eval(&c);
        let (w, weak_mode) = match self.mode {
            StrongMode::Honest | StrongMode::CheatSum => (honest_w, ProverMode::Honest),
            StrongMode::CheatSumAndOpening => {
                // g_m(c_m) - rho F(c) = g_m(c_m) - Q(c) + R(c)
                let q_at_c = sc.source().eval_at(&c);
                (f.add(f.sub(sc.running(), q_at_c), honest_w), ProverMode::Cheat)
            }
        };
        let slice = self.z.partial_eval(&c);
        let weak = WeakZkProver::new(&f, Box::new(slice), &self.params.g, w, self.a.clone(), weak_mode);
        self.stage = StrongProverStage::Opening(weak);
        Msg::scalar(STRONG_OPENING, w)
    }
}

impl Prover for StrongZkProver {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.oracle
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        let mvars = self.params.m();
        match &mut self.stage {
            StrongProverStage::AwaitChallenge => {
                let f = self.field.clone();
                let rho = nonzero_scalar(m, STRONG_CHALLENGE, &f)?;
                let total = self.r.sum_over(&self.params.h);
                let target = f.add(f.mul(rho, self.claimed), total);
                let summand = self.summand.take().expect("summand consumed once");
                let src = LinComb { field: f.clone(), terms: vec![(rho, summand), (f.one(), Box::new(self.r.clone()))] };
                let mode = if self.mode == StrongMode::Honest { ProverMode::Honest } else { ProverMode::Cheat };
                let sc = SumcheckProver::new(&f, Box::new(src), &self.params.h, target, mode)
                    .abort_outside(self.params.challenges.clone());
                self.stage = StrongProverStage::Rounds(sc);
                Ok(())
            }
            StrongProverStage::Rounds(sc) if sc.challenges().len() < mvars => {
                let res = sc.receive(m);
                if res.is_err() {
                    self.stage = StrongProverStage::Finished;
                }
                res
            }
            StrongProverStage::Opening(w) => w.receive(m),
            _ => Err(Abort),
        }
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        let mvars = self.params.m();
        match std::mem::replace(&mut self.stage, StrongProverStage::Finished) {
            StrongProverStage::SendSum => {
                self.stage = StrongProverStage::AwaitChallenge;
                Ok(Msg::scalar(STRONG_SUM, self.r.sum_over(&self.params.h)))
            }
            StrongProverStage::Rounds(mut sc) => {
                if sc.challenges().len() == mvars {
                    Ok(self.open(sc))
                } else {
                    let out = sc.send();
                    self.stage = StrongProverStage::Rounds(sc);
                    out
                }
            }
            StrongProverStage::Opening(mut w) => {
                let out = w.send();
                self.stage = StrongProverStage::Opening(w);
                out
            }
            other => {
                self.stage = other;
                Err(Abort)
            }
        }
    }
}

enum StrongVerifierStage {
    Start,
    AwaitSum,
    ChallengeSent { rho: Fe, z: Fe },
    Rounds { rho: Fe, sc: SumcheckVerifier },
    AwaitOpening { rho: Fe, c: Vec<Fe>, b: Fe },
    Opening { rho: Fe, c: Vec<Fe>, b: Fe, w: Fe, weak: WeakZkVerifier },
    CheckSlice { rho: Fe, c: Vec<Fe>, b: Fe, w: Fe, expect: Fe },
    Finished,
}

/// Strong-ZK verifier. Outputs the claim `F(c) = (g_m(c_m) - w) / rho` after checking the
/// opening of `w` against the committed polynomial.
pub struct StrongZkVerifier {
    field: Field,
    params: StrongZkParams,
    claimed: Fe,
    coins: SharedCoins,
    defer: bool,
    checks: Vec<LinearCheck>,
    stage: StrongVerifierStage,
}

impl StrongZkVerifier {
    pub fn new(field: &Field, params: &StrongZkParams, claimed: Fe, coins: Box<dyn Coins>) -> StrongZkVerifier {
        StrongZkVerifier {
            field: field.clone(),
            params: params.clone(),
            claimed,
            coins: SharedCoins::new(coins),
            defer: false,
            checks: vec![],
            stage: StrongVerifierStage::Start,
        }
    }

    /// Makes no queries: the output claim does not depend on oracle answers, and the opening
    /// check is left in [`StrongZkVerifier::checks`].
    pub fn deferred(mut self) -> StrongZkVerifier {
        self.defer = true;
        self
    }

    /// Checks on the oracle `O(W, X, Y)` left by a deferred run.
    pub fn checks(&self) -> &[LinearCheck] {
        &self.checks
    }

    fn after_rounds(&mut self, rho: Fe, out: VOut, sc: SumcheckVerifier) -> VOut {
        match out {
            VOut::Done(Outcome::Claim { claim }) => {
                self.stage = StrongVerifierStage::AwaitOpening { rho, c: claim.point, b: claim.value };
                VOut::Receive
            }
            VOut::Done(o) => VOut::Done(o),
            other => {
                self.stage = StrongVerifierStage::Rounds { rho, sc };
                other
            }
        }
    }

    fn after_opening(&mut self, rho: Fe, c: Vec<Fe>, b: Fe, w: Fe, out: VOut, weak: WeakZkVerifier) -> VOut {
        let zeros = self.params.m() + 1;
        let f = &self.field;
        match out {
            VOut::Done(Outcome::Claim { claim }) if self.defer => {
                // rho' O(1, c, c') + O(0, 0, c') = b'
                let mut slice = vec![f.one()];
                slice.extend(&c);
                slice.extend(&claim.point);
                let mut mask = vec![f.zero(); zeros];
                mask.extend(&claim.point);
                let rho_open = weak.rho().expect("challenge sent");
                self.checks.push(LinearCheck {
                    terms: vec![(rho_open, Query::Point(slice)), (f.one(), Query::Point(mask))],
                    rhs: claim.value,
                });
                let value = f.div(f.sub(b, w), rho).expect("rho nonzero");
                VOut::Done(Outcome::Claim { claim: PointClaim { point: c, value } })
            }
            VOut::Done(Outcome::Claim { claim }) => {
                let mut pt = vec![f.one()];
                pt.extend(&c);
                pt.extend(&claim.point);
                self.stage = StrongVerifierStage::CheckSlice { rho, c, b, w, expect: claim.value };
                VOut::Query(vec![Query::Point(pt)])
            }
            VOut::Done(o) => VOut::Done(o),
            VOut::Query(qs) => {
                // opening-mask queries go to O(0, 0, y)
                let mapped = qs
                    .into_iter()
                    .map(|q| {
                        let mut pt = vec![f.zero(); zeros];
                        pt.extend(q.coords());
                        match q {
                            Query::Point(_) => Query::Point(pt),
                            Query::Prefix(_) => Query::Prefix(pt),
                        }
                    })
                    .collect();
                self.stage = StrongVerifierStage::Opening { rho, c, b, w, weak };
                VOut::Query(mapped)
            }
            other => {
                self.stage = StrongVerifierStage::Opening { rho, c, b, w, weak };
                other
            }
        }
    }
}

impl Verifier for StrongZkVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        let f = self.field.clone();
        match (std::mem::replace(&mut self.stage, StrongVerifierStage::Finished), input) {
            (StrongVerifierStage::Start, VIn::Start) => {
                self.stage = StrongVerifierStage::AwaitSum;
                Ok(VOut::Receive)
            }
            (StrongVerifierStage::AwaitSum, VIn::Message(m)) => {
                let Some(z) = m.as_scalar().filter(|_| m.kind == STRONG_SUM) else {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {STRONG_SUM}, got {}", m.kind))));
                };
                let rho = f.random_nonzero(&mut self.coins);
                self.stage = StrongVerifierStage::ChallengeSent { rho, z };
                Ok(VOut::Send(Msg::scalar(STRONG_CHALLENGE, rho)))
            }
            (StrongVerifierStage::ChallengeSent { rho, z }, VIn::Sent) => {
                let target = f.add(f.mul(rho, self.claimed), z);
                let claim = SumClaim { h: self.params.h.clone(), degs: self.params.degs.clone(), target };
                let mut sc =
                    SumcheckVerifier::new(&f, claim, self.params.challenges.clone(), Box::new(self.coins.clone()));
                let out = sc.step(VIn::Start)?;
                Ok(self.after_rounds(rho, out, sc))
            }
            (StrongVerifierStage::Rounds { rho, mut sc }, input) => {
                let out = sc.step(input)?;
                Ok(self.after_rounds(rho, out, sc))
            }
            (StrongVerifierStage::AwaitOpening { rho, c, b }, VIn::Message(m)) => {
                let Some(w) = m.as_scalar().filter(|_| m.kind == STRONG_OPENING) else {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {STRONG_OPENING}, got {}", m.kind))));
                };
                let claim = SumClaim { h: self.params.g.clone(), degs: self.params.a_degs(), target: w };
                let mut weak = WeakZkVerifier::new(&f, claim, Box::new(self.coins.clone()));
                if self.defer {
                    weak = weak.deferred();
                }
                let out = weak.step(VIn::Start)?;
                Ok(self.after_opening(rho, c, b, w, out, weak))
            }
            (StrongVerifierStage::Opening { rho, c, b, w, mut weak }, input) => {
                let out = weak.step(input)?;
                Ok(self.after_opening(rho, c, b, w, out, weak))
            }
            (StrongVerifierStage::CheckSlice { rho, c, b, w, expect }, VIn::Answers(a)) if a.len() == 1 => {
                if a[0] != expect {
                    return Ok(VOut::Done(Outcome::reject("opening does not match the committed polynomial")));
                }
                let value = f.div(f.sub(b, w), rho).expect("rho nonzero");
                Ok(VOut::Done(Outcome::Claim { claim: PointClaim { point: c, value } }))
            }
            (_, input) => Err(ProtocolError::Misuse(format!("strong-ZK verifier got unexpected input {input:?}"))),
        }
    }
}

/// Honest verifier against the strong-ZK prover. The prover draws from `prover_coins` before
/// the verifier draws anything.
pub fn strong_zk_run(
    field: &Field,
    params: &StrongZkParams,
    summand: Box<dyn RoundSource>,
    claimed: Fe,
    mode: StrongMode,
    prover_coins: &mut dyn Coins,
    verifier_coins: Box<dyn Coins>,
) -> Result<Run, ZkError> {
    params.validate(field)?;
    let mut p = StrongZkProver::honest(field, params, summand, claimed, mode, prover_coins);
    let mut v = StrongZkVerifier::new(field, params, claimed, verifier_coins);
    Ok(ipcp::run(&mut p, &mut v, None)?)
}

/// Summand of the opening, `Z(c, .)`, read from the simulator's lazily sampled `Z`.
pub(crate) struct SliceOracle<'a> {
    pub(crate) zs: &'a mut PolySampler,
    pub(crate) coins: &'a mut dyn Coins,
    pub(crate) c: Option<&'a [Fe]>,
    pub(crate) g: &'a Subset,
}

impl Oracle for SliceOracle<'_> {
    fn num_vars(&self) -> usize {
        self.zs.num_vars() - self.c.map_or(0, |c| c.len())
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let c = self.c.ok_or_else(|| OracleError::Simulator("opening point not fixed yet".into()))?;
        let k = self.zs.num_vars() - c.len();
        let mut fun = sampler::point(c);
        fun.extend(query_functional(q, k, self.g)?);
        self.zs.answer(&fun, self.coins).map_err(|e| OracleError::Simulator(e.to_string()))
    }
}

enum StrongSimStage {
    SendSum,
    AwaitChallenge { z: Fe },
    Rounds { rho: Fe, q: PolySampler, fixed: Vec<Fe> },
    Opening,
    Stopped,
}

/// Straightline strong-ZK simulator.
///
/// `Z` is sampled lazily throughout. After `rho`, the round polynomials come from a lazily
/// sampled `Q` with the forced sum. At the opening the simulator reads `F(c)` once, sends
/// `w = Q(c) - rho F(c)` and conditions `Z` on `sum over G^k of Z(c, .) = w`; the opening itself
/// is simulated by a weak-ZK simulator whose summand is `Z(c, .)`.
pub struct StrongZkSimulator {
    field: Field,
    params: StrongZkParams,
    claimed: Fe,
    zs: PolySampler,
    coins: SharedCoins,
    weak: WeakSimCore,
    f: Logged<Box<dyn Oracle>>,
    seen: HashMap<Query, Fe>,
    limit: usize,
    opened_at: Option<Vec<Fe>>,
    stage: StrongSimStage,
    failure: Option<String>,
}

impl StrongZkSimulator {
    pub fn new(
        field: &Field,
        params: &StrongZkParams,
        claimed: Fe,
        summand: Box<dyn Oracle>,
        coins: Box<dyn Coins>,
    ) -> Result<StrongZkSimulator, ZkError> {
        params.validate(field)?;
        let coins = SharedCoins::new(coins);
        let weak = WeakSimCore::new(field, &params.g, &params.a_degs(), field.zero(), Box::new(coins.clone()))?;
        Ok(StrongZkSimulator {
            field: field.clone(),
            params: params.clone(),
            claimed,
            zs: PolySampler::new(field, &params.z_degs())?,
            coins,
            weak,
            f: Logged::new(summand, None),
            seen: HashMap::new(),
            limit: params.query_limit(),
            opened_at: None,
            stage: StrongSimStage::SendSum,
            failure: None,
        })
    }

    pub fn f_log(&self) -> &[(Query, Fe)] {
        self.f.log()
    }

    pub fn opened_at(&self) -> Option<&[Fe]> {
        self.opened_at.as_deref()
    }

    /// The lazily sampled commitment's constraints.
    pub fn commitment_sampler(&self) -> &PolySampler {
        &self.zs
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref().or(self.weak.failure())
    }

    fn fail(&mut self, e: impl std::fmt::Display) -> Abort {
        self.failure.get_or_insert_with(|| e.to_string());
        self.stage = StrongSimStage::Stopped;
        Abort
    }

    fn open(&mut self, rho: Fe, mut q: PolySampler, c: Vec<Fe>) -> Result<Msg, Abort> {
        let f = self.field.clone();
        let qc = q.answer(&sampler::point(&c), &mut self.coins).map_err(|e| self.fail(e))?;
        let fc = self.f.answer(&Query::Point(c.clone())).map_err(|e| self.fail(e))?;
        let w = f.sub(qc, f.mul(rho, fc));
        let mut fun = sampler::point(&c);
        fun.extend((0..self.params.k).map(|_| Axis::SumOver(self.params.g.clone())));
        self.zs.constrain(&fun, w).map_err(|e| self.fail(e))?;
        self.weak.set_claimed(w);
        self.opened_at = Some(c);
        self.stage = StrongSimStage::Opening;
        Ok(Msg::scalar(STRONG_OPENING, w))
    }
}

impl Prover for StrongZkSimulator {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self
    }

    fn receive(&mut self, msg: &Msg) -> Result<(), Abort> {
        let m = self.params.m();
        match &mut self.stage {
            StrongSimStage::AwaitChallenge { z } => {
                let f = self.field.clone();
                let rho = nonzero_scalar(msg, STRONG_CHALLENGE, &f)?;
                let z = *z;
                let mut q = PolySampler::new(&f, &self.params.degs).map_err(|e| self.fail(e))?;
                let total = sampler::prefix(&[], m, &self.params.h);
                q.constrain(&total, f.add(f.mul(rho, self.claimed), z)).map_err(|e| self.fail(e))?;
                self.stage = StrongSimStage::Rounds { rho, q, fixed: vec![] };
                Ok(())
            }
            StrongSimStage::Rounds { fixed, .. } if fixed.len() < m => {
                let c = msg.as_scalar().ok_or(Abort)?;
                if !self.params.challenges.contains(c) {
                    self.stage = StrongSimStage::Stopped;
                    return Err(Abort);
                }
                fixed.push(c);
                Ok(())
            }
            StrongSimStage::Opening => {
                let mut slice = SliceOracle {
                    zs: &mut self.zs,
                    coins: &mut self.coins,
                    c: self.opened_at.as_deref(),
                    g: &self.params.g,
                };
                self.weak.receive(msg, &mut slice)
            }
            _ => Err(Abort),
        }
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        let m = self.params.m();
        match std::mem::replace(&mut self.stage, StrongSimStage::Stopped) {
            StrongSimStage::SendSum => {
                let mut fun = sampler::prefix(&[], m, &self.params.h);
                fun.extend((0..self.params.k).map(|_| Axis::SumOver(self.params.g.clone())));
                let z = self.zs.answer(&fun, &mut self.coins).map_err(|e| self.fail(e))?;
                self.stage = StrongSimStage::AwaitChallenge { z };
                Ok(Msg::scalar(STRONG_SUM, z))
            }
            StrongSimStage::Rounds { rho, q, fixed } if fixed.len() == m => self.open(rho, q, fixed),
            StrongSimStage::Rounds { rho, mut q, fixed } => {
                let i = fixed.len();
                let mut g = Vec::with_capacity(self.params.degs[i] + 1);
                for e in 0..=self.params.degs[i] {
                    let fun = round_functional(&fixed, e, m, &self.params.h);
                    g.push(q.answer(&fun, &mut self.coins).map_err(|err| self.fail(err))?);
                }
                self.stage = StrongSimStage::Rounds { rho, q, fixed };
                Ok(Msg::new(ROUND_POLY, g))
            }
            StrongSimStage::Opening => {
                self.stage = StrongSimStage::Opening;
                self.weak.send()
            }
            other => {
                self.stage = other;
                Err(Abort)
            }
        }
    }
}

impl Oracle for StrongZkSimulator {
    fn num_vars(&self) -> usize {
        self.params.oracle_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let n = self.params.oracle_vars();
        let q = q.clone().normalized(n);
        if let Some(a) = self.seen.get(&q) {
            return Ok(*a);
        }
        let x = match &q {
            Query::Point(x) if x.len() == n => x.clone(),
            Query::Point(x) => return Err(OracleError::Dimension { expected: n, got: x.len() }),
            Query::Prefix(_) => return Err(OracleError::PrefixUnsupported),
        };
        if self.seen.len() >= self.limit {
            return Err(OracleError::QueryBound(self.limit));
        }
        let f = self.field.clone();
        let m = self.params.m();
        let w = x[0];
        let a_val = if w != f.one() {
            let mut slice = SliceOracle {
                zs: &mut self.zs,
                coins: &mut self.coins,
                c: self.opened_at.as_deref(),
                g: &self.params.g,
            };
            self.weak.answer_mask(&Query::Point(x[1 + m..].to_vec()), &mut slice)?
        } else {
            f.zero()
        };
        let z_val = if w != f.zero() {
            self.zs.answer(&sampler::point(&x[1..]), &mut self.coins).map_err(|e| OracleError::Simulator(e.to_string()))?
        } else {
            f.zero()
        };
        let ans = f.add(f.mul(w, z_val), f.mul(f.sub(f.one(), w), a_val));
        self.seen.insert(q, ans);
        Ok(ans)
    }
}

/// Simulates the view of `verifier` against the strong-ZK prover with a single query to the
/// summand. The verifier is held to the parameters' query budget; exceeding it is an error.
pub fn strong_zk_simulate(
    field: &Field,
    params: &StrongZkParams,
    claimed: Fe,
    summand: Box<dyn Oracle>,
    verifier: &mut dyn Verifier,
    coins: Box<dyn Coins>,
) -> Result<SimRun, ZkError> {
    let mut sim = StrongZkSimulator::new(field, params, claimed, summand, coins)?;
    let run = ipcp::run(&mut sim, verifier, Some(params.query_limit()))?;
    if let Some(e) = sim.failure() {
        return Err(ZkError::Simulator(e.to_string()));
    }
    let f_log = sim.f_log().to_vec();
    assert!(f_log.len() <= 1, "strong-ZK simulator queried the summand {} times", f_log.len());
    if let Some(c) = sim.opened_at() {
        assert_eq!(f_log.len(), 1, "opening sent without a summand query");
        assert!(c.iter().all(|&x| params.challenges.contains(x)), "summand query outside I^m");
    }
    Ok(SimRun { run, f_log, oracle_queries: sim.seen.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipcp::{Event, ExtraQueries};
    use crate::rng::{exact_distribution, RngStream};

    fn claim_for(p: &MultiPoly, h: &Subset) -> SumClaim {
        SumClaim { h: h.clone(), degs: p.deg_bounds().to_vec(), target: p.sum_over(h) }
    }

    #[test]
    fn weak_honest_claim_is_true() {
        let f = Field::prime(97).unwrap();
        let mut c = RngStream::from_seed(11);
        let p = MultiPoly::random(&f, &[2, 3], &mut c);
        let h = Subset::first(&f, 3);
        let claim = claim_for(&p, &h);
        for t in 0..20 {
            let run = weak_zk_run(&f, Box::new(p.clone()), &claim, ProverMode::Honest, &mut c.child_idx("p", t), Box::new(c.child_idx("v", t))).unwrap();
            let out = run.outcome.claim().expect("claim");
            assert_eq!(p.eval(&out.point), out.value);
            assert_eq!(run.rounds(), 3);
        }
    }

    fn view_dist_weak(f: &Field, p: &MultiPoly, h: &Subset, extra: Vec<Query>, simulate: bool) -> std::collections::BTreeMap<Vec<Event>, num_rational::Ratio<u128>> {
        let claim = claim_for(p, h);
        exact_distribution(
            |t| {
                let mut v = ExtraQueries::new(WeakZkVerifier::new(f, claim.clone(), Box::new(t.clone())), extra.clone());
                if simulate {
                    let o: Box<dyn Oracle> = Box::new(PolyOracle::with_sums(p.clone(), h.clone()));
                    let s = weak_zk_simulate(f, &claim, o, &mut v, Box::new(t.clone()), None).unwrap();
                    assert!(s.f_log.len() <= s.oracle_queries);
                    s.run.events
                } else {
                    let mut pr = WeakZkProver::honest(f, Box::new(p.clone()), h, claim.target, t);
                    ipcp::run(&mut pr, &mut v, None).unwrap().events
                }
            },
            1_000_000,
        )
        .unwrap()
    }

    #[test]
    fn weak_simulation_is_exact_on_f3() {
        let f = Field::prime(3).unwrap();
        let h = Subset::first(&f, 2);
        let p = MultiPoly::univariate(&f, &[Fe(1), Fe(2), Fe(1)]);
        for extra in [vec![], vec![Query::Point(vec![Fe(2)])], vec![Query::Prefix(vec![])], vec![Query::Point(vec![Fe(0)]), Query::Prefix(vec![])]] {
            let real = view_dist_weak(&f, &p, &h, extra.clone(), false);
            let sim = view_dist_weak(&f, &p, &h, extra.clone(), true);
            assert_eq!(real, sim, "extra queries {extra:?}");
        }
    }

    fn small_strong() -> (Field, StrongZkParams, MultiPoly) {
        let f = Field::prime(97).unwrap();
        let h = Subset::first(&f, 2);
        let params = StrongZkParams::new(&f, &h, &[2, 2], 2, 1).unwrap().with_budget(QueryBudget::Explicit(8));
        let p = MultiPoly::random(&f, &[2, 2], &mut RngStream::from_seed(5));
        (f, params, p)
    }

    #[test]
    fn strong_honest_claim_is_true() {
        let (f, params, p) = small_strong();
        let a = p.sum_over(&params.h);
        let root = RngStream::from_seed(2);
        for t in 0..20 {
            let run = strong_zk_run(&f, &params, Box::new(p.clone()), a, StrongMode::Honest, &mut root.child_idx("p", t), Box::new(root.child_idx("v", t))).unwrap();
            let out = run.outcome.claim().expect("claim");
            assert_eq!(p.eval(&out.point), out.value);
            assert!(out.point.iter().all(|x| params.challenges.contains(*x)));
            assert_eq!(run.rounds(), params.m() + params.k + 2);
        }
    }

    #[test]
    fn oracle_recovers_commitment_and_mask() {
        let (f, params, p) = small_strong();
        let pr = StrongZkProver::honest(&f, &params, Box::new(p), Fe(0), StrongMode::Honest, &mut RngStream::from_seed(1));
        let o = pr.oracle_poly();
        assert!(o.within_bounds(&params.oracle_degs()));
        let y = [Fe(7), Fe(9)];
        let mut at_one = vec![Fe(1), Fe(3), Fe(4)];
        at_one.extend(y);
        assert_eq!(o.eval(&at_one), pr.commitment().eval(&at_one[1..]));
        let mut at_zero = vec![Fe(0), Fe(0), Fe(0)];
        at_zero.extend(y);
        assert_eq!(o.eval(&at_zero), pr.opening_mask().eval(&y));
        let bundled = crate::poly::bundle(&[pr.opening_mask().insert_vars(0, 2), pr.commitment().clone()], &[Fe(0), Fe(1)]).unwrap();
        assert_eq!(&bundled, o);
        let r = committed_mask(pr.commitment(), 2, &params.g);
        assert!(r.within_bounds(&params.degs));
    }

    #[test]
    fn strong_simulator_single_summand_query() {
        let (f, params, p) = small_strong();
        let a = p.sum_over(&params.h);
        let root = RngStream::from_seed(9);
        for t in 0..10 {
            let mut v = StrongZkVerifier::new(&f, &params, a, Box::new(root.child_idx("v", t)));
            let s = strong_zk_simulate(&f, &params, a, Box::new(PolyOracle::points_only(p.clone())), &mut v, Box::new(root.child_idx("s", t))).unwrap();
            assert_eq!(s.f_log.len(), 1);
            let out = s.run.outcome.claim().expect("claim");
            assert_eq!(p.eval(&out.point), out.value);
        }
    }

    #[test]
    fn challenge_outside_i_aborts() {
        let (f, params, p) = small_strong();
        let a = p.sum_over(&params.h);
        // a verifier drawing challenges from H
        let mut bad = params.clone();
        let outside: Vec<Fe> = (2..97).map(Fe).collect();
        bad.challenges = Domain::Excluding(Subset::explicit(&f, &outside).unwrap());
        let mut pr = StrongZkProver::honest(&f, &params, Box::new(p.clone()), a, StrongMode::Honest, &mut RngStream::from_seed(1));
        let mut v = StrongZkVerifier::new(&f, &bad, a, Box::new(RngStream::from_seed(2)));
        let run = ipcp::run(&mut pr, &mut v, None).unwrap();
        assert_eq!(run.outcome, Outcome::Abort);
        assert!(matches!(run.events.last(), Some(Event::Abort { .. })));
        let mut v = StrongZkVerifier::new(&f, &bad, a, Box::new(RngStream::from_seed(2)));
        let s = strong_zk_simulate(&f, &params, a, Box::new(PolyOracle::points_only(p)), &mut v, Box::new(RngStream::from_seed(3))).unwrap();
        assert_eq!(s.run.outcome, Outcome::Abort);
        assert!(s.f_log.is_empty());
    }

    #[test]
    fn query_bound_is_enforced() {
        let (f, params, p) = small_strong();
        let params = params.with_budget(QueryBudget::Explicit(1));
        let a = p.sum_over(&params.h);
        let qs = vec![Query::Point(vec![Fe(1); 5]), Query::Point(vec![Fe(2); 5])];
        let mut v = ExtraQueries::new(StrongZkVerifier::new(&f, &params, a, Box::new(RngStream::from_seed(2))), qs);
        let r = strong_zk_simulate(&f, &params, a, Box::new(PolyOracle::points_only(p)), &mut v, Box::new(RngStream::from_seed(3)));
        assert!(matches!(r, Err(ZkError::Protocol(ProtocolError::QueryBound(_)))));
    }

    #[test]
    fn params_validation() {
        let f = Field::prime(97).unwrap();
        let h = Subset::first(&f, 2);
        assert!(StrongZkParams::new(&f, &h, &[2, 2], 2, 2).is_err());
        assert!(StrongZkParams::new(&f, &h, &[4, 2], 2, 2).is_ok());
        let p = StrongZkParams::new(&f, &h, &[4], 3, 2).unwrap();
        assert_eq!(p.query_limit(), 7);
    }
}
