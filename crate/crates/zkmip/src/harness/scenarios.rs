//! Protocol instances built from configuration, and reproducible transcripts.
//!
//! A scenario names a protocol and its parameters. Its transcript is a function of the
//! scenario and a seed only: the instance, the prover and the verifier each draw from a
//! labelled child of the seed's stream. The header stores both, so a transcript file can be
//! replayed.

use serde::{Deserialize, Serialize};

use super::{transcript_io::transcript_to_bytes, HarnessError};
use crate::commit::{decommit, Commitment};
use crate::field::{Domain, Fe, Field, Subset};
use crate::ipcp::{Run, Transcript};
use crate::ldtest::{ldt_round, make_honest_strategy, LdtParams, SeededShared};
use crate::lift::{lift_run, LiftMode, LiftedProtocol, LowDegreeIpcp, NexpIpcp, PublicSumcheck};
use crate::nexp::{nexp_run, Formula, NexpParams, NexpSetup, O3SatInstance, O3SatWitness};
use crate::poly::MultiPoly;
use crate::rng::RngStream;
use crate::sumcheck::{run_sumcheck, ProverMode, SumClaim};
use crate::zksumcheck::{strong_zk_run, weak_zk_run, QueryBudget, StrongMode, StrongZkParams};

pub(crate) fn proto(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Protocol(e.to_string())
}

pub fn parse_field(s: &str) -> Result<Field, HarnessError> {
    Field::parse(s).map_err(|e| HarnessError::Config(format!("field {s:?}: {e}")))
}

/// Streams for the instance, the prover and the verifier of one seeded run.
pub struct Streams {
    pub instance: RngStream,
    pub prover: RngStream,
    pub verifier: RngStream,
}

impl Streams {
    pub fn new(seed: u64) -> Streams {
        let root = RngStream::from_seed(seed);
        Streams { instance: root.child("instance"), prover: root.child("prover"), verifier: root.child("verifier") }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumcheckParams {
    pub field: String,
    pub m: usize,
    /// Individual degree of the summand.
    pub d: usize,
    /// Size of the summation set.
    pub h: usize,
}

impl Default for SumcheckParams {
    fn default() -> Self {
        SumcheckParams { field: "F97".into(), m: 3, d: 2, h: 2 }
    }
}

impl SumcheckParams {
    pub fn field(&self) -> Result<Field, HarnessError> {
        parse_field(&self.field)
    }

    pub fn claim(&self, f: &Field, instance: &mut RngStream) -> (MultiPoly, SumClaim) {
        let h = Subset::first(f, self.h);
        let p = MultiPoly::random(f, &vec![self.d; self.m], instance);
        let claim = SumClaim { h: h.clone(), degs: vec![self.d; self.m], target: p.sum_over(&h) };
        (p, claim)
    }

    pub fn soundness_bound(&self, f: &Field) -> f64 {
        (self.m * self.d) as f64 / f.order() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZkSumcheckParams {
    pub field: String,
    pub h: usize,
    pub degs: Vec<usize>,
    /// Commitment arity and summation set size of the strong variant.
    pub k: usize,
    pub lambda: usize,
    /// Distinct oracle queries the strong simulator supports.
    pub budget: usize,
}

impl Default for ZkSumcheckParams {
    fn default() -> Self {
        ZkSumcheckParams { field: "F97".into(), h: 2, degs: vec![2, 2], k: 2, lambda: 1, budget: 8 }
    }
}

impl ZkSumcheckParams {
    pub fn field(&self) -> Result<Field, HarnessError> {
        parse_field(&self.field)
    }

    pub fn claim(&self, f: &Field, instance: &mut RngStream) -> (MultiPoly, SumClaim) {
        let h = Subset::first(f, self.h);
        let p = MultiPoly::random(f, &self.degs, instance);
        let claim = SumClaim { h: h.clone(), degs: self.degs.clone(), target: p.sum_over(&h) };
        (p, claim)
    }

    pub fn strong(&self, f: &Field) -> Result<StrongZkParams, HarnessError> {
        Ok(StrongZkParams::new(f, &Subset::first(f, self.h), &self.degs, self.k, self.lambda)
            .map_err(proto)?
            .with_budget(QueryBudget::Explicit(self.budget)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitParams {
    pub field: String,
    /// Degree bounds of the committed polynomial.
    pub degs: Vec<usize>,
    pub k: usize,
    /// Size of the summation set `G`.
    pub g: usize,
    /// Degree of the randomizer in the extra variables.
    pub d: usize,
    /// Randomizer evaluations per view in the hiding test.
    pub queries: usize,
}

impl Default for CommitParams {
    fn default() -> Self {
        CommitParams { field: "F97".into(), degs: vec![2, 2], k: 2, g: 2, d: 2, queries: 3 }
    }
}

impl CommitParams {
    pub fn field(&self) -> Result<Field, HarnessError> {
        parse_field(&self.field)
    }

    pub fn commit(&self, f: &Field, q: &MultiPoly, coins: &mut RngStream) -> Result<Commitment, HarnessError> {
        Commitment::commit(f, q, self.k, &Subset::first(f, self.g), self.d, coins, false).map_err(proto)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdtScenario {
    pub field: String,
    pub m: usize,
    pub d: usize,
}

impl Default for LdtScenario {
    fn default() -> Self {
        LdtScenario { field: "F97".into(), m: 2, d: 2 }
    }
}

impl LdtScenario {
    pub fn field(&self) -> Result<Field, HarnessError> {
        parse_field(&self.field)
    }

    pub fn params(&self) -> LdtParams {
        LdtParams { m: self.m, d: self.d }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NexpScenario {
    /// A field of characteristic 2.
    pub field: String,
    /// `H` is the subfield of this degree.
    pub h_degree: u32,
    pub r: usize,
    pub s: usize,
    pub formula: String,
    /// Witness bits; empty means the witness with the fewest violations.
    pub witness: String,
    pub b: usize,
    pub slack: usize,
    pub lambda0: usize,
    pub k0: usize,
}

impl Default for NexpScenario {
    fn default() -> Self {
        NexpScenario {
            field: "GF2^4".into(),
            h_degree: 1,
            r: 1,
            s: 1,
            formula: "not and var_0 not var_4".into(),
            witness: "11".into(),
            b: 8,
            slack: 2,
            lambda0: 3,
            k0: 2,
        }
    }
}

impl NexpScenario {
    /// Setup and witness table; `field` overrides the configured field.
    pub fn setup(&self, field: Option<&str>) -> Result<(NexpSetup, Vec<Fe>), HarnessError> {
        let f = parse_field(field.unwrap_or(&self.field))?;
        let h = f.subfield_of_degree(self.h_degree).map_err(proto)?;
        let inst = O3SatInstance::new(self.r, self.s, Formula::parse(&self.formula).map_err(proto)?).map_err(proto)?;
        let params = NexpParams { b: self.b, slack: self.slack, lambda0: self.lambda0, k0: self.k0 };
        let setup = NexpSetup::new(&inst, &f, &h, &params).map_err(proto)?;
        let w = if self.witness.is_empty() {
            setup.arith.inst.best_witness().map_err(proto)?.0
        } else {
            O3SatWitness::parse(&self.witness).map_err(proto)?
        };
        let table = setup.arith.witness_table(&w);
        Ok((setup, table))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftInner {
    Sumcheck,
    Nexp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftScenario {
    pub inner: LiftInner,
    pub mode: LiftMode,
    /// Field, arity, degree and summation set of the sumcheck inner protocol.
    pub field: String,
    pub m: usize,
    pub d: usize,
    pub h: usize,
    /// Field of the NEXP inner protocol; the lift needs it larger than the plain protocol does.
    pub nexp_field: String,
    pub trials: usize,
}

impl Default for LiftScenario {
    fn default() -> Self {
        LiftScenario {
            inner: LiftInner::Sumcheck,
            mode: LiftMode::Zk,
            field: "F97".into(),
            m: 2,
            d: 2,
            h: 2,
            nexp_field: "GF2^16".into(),
            trials: 1000,
        }
    }
}

impl LiftScenario {
    pub fn inner_protocol(&self, nexp: &NexpScenario, instance: &mut RngStream) -> Result<Box<dyn LowDegreeIpcp>, HarnessError> {
        Ok(match self.inner {
            LiftInner::Sumcheck => {
                let f = parse_field(&self.field)?;
                let summand = MultiPoly::random(&f, &vec![self.d; self.m], instance);
                Box::new(PublicSumcheck::honest(summand, &Subset::first(&f, self.h)))
            }
            LiftInner::Nexp => {
                let (setup, table) = nexp.setup(Some(&self.nexp_field))?;
                Box::new(NexpIpcp { setup, table, mode: StrongMode::Honest })
            }
        })
    }
}

/// A protocol with its parameters: everything needed to rerun it from a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum Scenario {
    Sumcheck { params: SumcheckParams, cheat: bool },
    WeakZkSumcheck { params: ZkSumcheckParams },
    StrongZkSumcheck { params: ZkSumcheckParams, mode: StrongMode },
    Decommit { params: CommitParams, cheat: bool },
    Ldt { params: LdtScenario },
    Nexp { params: NexpScenario, mode: StrongMode },
    Lift { params: LiftScenario, nexp: NexpScenario },
}

impl Scenario {
    pub fn name(&self) -> String {
        serde_json::to_value(self).expect("scenarios serialize")["protocol"].as_str().unwrap_or_default().to_string()
    }

    /// Runs the scenario: the field it ran over and the run.
    pub fn execute(&self, seed: u64) -> Result<(Field, Run), HarnessError> {
        let Streams { mut instance, mut prover, verifier } = Streams::new(seed);
        match self {
            Scenario::Sumcheck { params, cheat } => {
                let f = params.field()?;
                let (p, mut claim) = params.claim(&f, &mut instance);
                let mode = if *cheat {
                    claim.target = f.add(claim.target, f.one());
                    ProverMode::Cheat
                } else {
                    ProverMode::Honest
                };
                let run = run_sumcheck(&f, Box::new(p), &claim, Domain::Full, mode, Box::new(verifier));
                Ok((f, run))
            }
            Scenario::WeakZkSumcheck { params } => {
                let f = params.field()?;
                let (p, claim) = params.claim(&f, &mut instance);
                let run = weak_zk_run(&f, Box::new(p), &claim, ProverMode::Honest, &mut prover, Box::new(verifier)).map_err(proto)?;
                Ok((f, run))
            }
            Scenario::StrongZkSumcheck { params, mode } => {
                let f = params.field()?;
                let sp = params.strong(&f)?;
                let (p, claim) = params.claim(&f, &mut instance);
                let claimed = if *mode == StrongMode::Honest { claim.target } else { f.add(claim.target, f.one()) };
                let run = strong_zk_run(&f, &sp, Box::new(p), claimed, *mode, &mut prover, Box::new(verifier)).map_err(proto)?;
                Ok((f, run))
            }
            Scenario::Decommit { params, cheat } => {
                let f = params.field()?;
                let q = MultiPoly::random(&f, &params.degs, &mut instance);
                let c = params.commit(&f, &q, &mut instance)?;
                let alpha = f.random_vec(params.degs.len(), &mut instance);
                let claim = cheat.then(|| f.add(q.eval(&alpha), f.one()));
                let run = decommit(&c, &alpha, claim, &mut prover, Box::new(verifier)).map_err(proto)?;
                Ok((f, run))
            }
            Scenario::Ldt { params } => {
                let f = params.field()?;
                let q = MultiPoly::random(&f, &vec![params.d; params.m], &mut instance);
                let s = make_honest_strategy(q);
                let mut v = verifier;
                let r = ldt_round(&f, &params.params(), [&s, &s], &mut SeededShared(prover), &mut v).map_err(proto)?;
                Ok((f, r.run))
            }
            Scenario::Nexp { params, mode } => {
                let (setup, table) = params.setup(None)?;
                let run = nexp_run(&setup, &table, *mode, &mut prover, Box::new(verifier)).map_err(proto)?;
                Ok((setup.field().clone(), run))
            }
            Scenario::Lift { params, nexp } => {
                let inner = params.inner_protocol(nexp, &mut instance)?;
                let lp = LiftedProtocol::new(inner.as_ref(), params.mode).map_err(proto)?;
                let r = lift_run(&lp, &mut SeededShared(prover), Box::new(verifier)).map_err(proto)?;
                Ok((inner.field().clone(), r.run))
            }
        }
    }

    pub fn transcript(&self, seed: u64) -> Result<Transcript, HarnessError> {
        let (f, run) = self.execute(seed)?;
        let params = serde_json::to_value(self).expect("scenarios serialize");
        Ok(run.into_transcript(&self.name(), &f, params, Some(seed)))
    }

    pub fn from_transcript(t: &Transcript) -> Result<(Scenario, u64), HarnessError> {
        let s: Scenario = serde_json::from_value(t.header.params.clone()).map_err(|e| HarnessError::Config(format!("header params: {e}")))?;
        let seed = t.header.seed.ok_or_else(|| HarnessError::Config("transcript has no seed".into()))?;
        Ok((s, seed))
    }
}

/// Reruns the scenario recorded in `t` and reports whether the bytes match.
pub fn replay_matches(t: &Transcript) -> Result<bool, HarnessError> {
    let (s, seed) = Scenario::from_transcript(t)?;
    Ok(transcript_to_bytes(&s.transcript(seed)?) == transcript_to_bytes(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::transcript_io::parse_transcript;

    fn all() -> Vec<Scenario> {
        let mut lift_fast = LiftScenario::default();
        lift_fast.mode = LiftMode::Fast;
        vec![
            Scenario::Sumcheck { params: SumcheckParams::default(), cheat: false },
            Scenario::Sumcheck { params: SumcheckParams::default(), cheat: true },
            Scenario::WeakZkSumcheck { params: ZkSumcheckParams::default() },
            Scenario::StrongZkSumcheck { params: ZkSumcheckParams::default(), mode: StrongMode::CheatSumAndOpening },
            Scenario::Decommit { params: CommitParams::default(), cheat: false },
            Scenario::Ldt { params: LdtScenario::default() },
            Scenario::Nexp { params: NexpScenario::default(), mode: StrongMode::Honest },
            Scenario::Lift { params: LiftScenario::default(), nexp: NexpScenario::default() },
            Scenario::Lift { params: lift_fast, nexp: NexpScenario::default() },
        ]
    }

    #[test]
    fn transcripts_replay_byte_for_byte() {
        for s in all() {
            for seed in [0, 17] {
                let t = s.transcript(seed).unwrap();
                let bytes = transcript_to_bytes(&t);
                let back = parse_transcript(&bytes).unwrap();
                assert!(replay_matches(&back).unwrap(), "{}", s.name());
                assert_eq!(back.header.protocol, s.name());
            }
            assert_ne!(transcript_to_bytes(&s.transcript(0).unwrap()), transcript_to_bytes(&s.transcript(1).unwrap()), "{}", s.name());
        }
    }

    #[test]
    fn honest_scenarios_accept() {
        for s in all() {
            let cheat = matches!(s, Scenario::Sumcheck { cheat: true, .. } | Scenario::StrongZkSumcheck { .. });
            let (_, run) = s.execute(3).unwrap();
            if !cheat {
                assert!(run.outcome.is_accept() || run.outcome.claim().is_some(), "{}: {:?}", s.name(), run.outcome);
            }
        }
    }
}
