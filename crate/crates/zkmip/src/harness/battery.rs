//! Check batteries behind the command line tool. Each returns named pass/fail checks.

use crate::commit::{decommit, opening_soundness_bound, Commitment};
use crate::field::Field;
use crate::ipcp::{rounds_of, Event, ExtraQueries, Outcome, ProtocolError};
use crate::ldtest::{ldt_round, make_honest_strategy, RecordedShared, SeededShared};
use crate::lift::{lift_run, lift_simulate, wrapper_query_limit, LiftBranch, LiftError, LiftMode, LiftedProtocol, LowDegreeIpcp};
use crate::nexp::{nexp_run, nexp_simulate, NexpVerifier, VERIFIER_QUERIES};
use crate::poly::{uni, MultiPoly, Oracle, OracleError, PolyOracle, Query};
use crate::report::Check;
use crate::rng::{Coins, RngStream, SharedCoins};
use crate::sumcheck::{run_sumcheck, ProverMode};
use crate::zksumcheck::{strong_zk_run, strong_zk_simulate, weak_zk_run, weak_zk_simulate, StrongMode, StrongZkVerifier, WeakZkVerifier, ZkError};
use crate::{field::Domain, ipcp};

use super::scenarios::{proto, CommitParams, LdtScenario, LiftScenario, NexpScenario, SumcheckParams, ZkSumcheckParams};
use super::soundness::soundness_mc;
use super::zk::{compare_histograms, zk_chi2_with_control, zk_exhaustive, View, ZkMode};
use super::{HarnessError, StatsConfig};

fn lift_check(name: &str, r: Result<Check, HarnessError>) -> Check {
    r.unwrap_or_else(|e| Check::error(name, e))
}

/// Runs `trial` `n` times on independent streams and checks every run accepts.
fn completeness(name: &str, n: usize, seed: u64, mut trial: impl FnMut(RngStream) -> Result<bool, HarnessError>) -> Check {
    let root = RngStream::from_seed(seed).child(name);
    let mut ok = 0;
    for i in 0..n as u64 {
        match trial(root.child_idx("trial", i)) {
            Ok(a) => ok += a as usize,
            Err(e) => return Check::error(name, e),
        }
    }
    Check::new(name, ok == n, format!("{ok}/{n} accepted"))
}

/// The verifier's final decision, checking an output claim against the summand.
pub fn decided(o: &Outcome, summand: &MultiPoly) -> bool {
    match o {
        Outcome::Accept => true,
        Outcome::Claim { claim } => summand.eval(&claim.point) == claim.value,
        _ => false,
    }
}

fn soundness(name: &str, stats: &StatsConfig, bound: f64, seed: u64, trial: impl FnMut(RngStream) -> Result<bool, String>) -> Check {
    match soundness_mc(stats.soundness_trials as u64, bound, stats, seed, trial) {
        Ok(r) => Check::new(name, r.passed, r.detail()),
        Err(e) => Check::error(name, e),
    }
}

// ---------------------------------------------------------------------------------------
// field

pub fn field_checks(f: &Field, seed: u64) -> Vec<Check> {
    let mut c = RngStream::from_seed(seed).child("field");
    let (mut ring, mut inv, mut frob) = (true, true, true);
    for _ in 0..500 {
        let [a, b, x] = [f.random(&mut c), f.random(&mut c), f.random(&mut c)];
        ring &= f.mul(a, f.add(b, x)) == f.add(f.mul(a, b), f.mul(a, x));
        ring &= f.mul(f.mul(a, b), x) == f.mul(a, f.mul(b, x));
        ring &= f.add(a, f.neg(a)) == f.zero() && f.mul(a, f.one()) == a;
        if a != f.zero() {
            inv &= f.inv(a).map(|i| f.mul(a, i) == f.one()).unwrap_or(false);
        }
        frob &= f.pow(a, f.order()) == a;
    }
    let p = f.characteristic();
    let char_ok = f.from_int(p as i64) == f.zero() && (1..p.min(1 << 16)).all(|k| f.from_int(k as i64) != f.zero());
    let round = Field::parse(&serde_json::to_string(&f.descriptor()).unwrap()).map(|g| g == *f).unwrap_or(false);
    vec![
        Check::new("field ring axioms", ring, format!("{} on 500 random triples", f.name())),
        Check::new("field inverses", inv, "a * a^-1 = 1 for nonzero samples"),
        Check::new("field frobenius", frob, format!("a^{} = a", f.order())),
        Check::new("field characteristic", char_ok, format!("characteristic {p}")),
        Check::new("field descriptor round trip", round, f.name()),
    ]
}

// ---------------------------------------------------------------------------------------
// sumcheck

pub fn sumcheck_checks(p: &SumcheckParams, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let f = match p.field() {
        Ok(f) => f,
        Err(e) => return vec![Check::error("sumcheck field", e)],
    };
    let (poly, claim) = p.claim(&f, &mut RngStream::from_seed(seed).child("instance"));
    let mut out = vec![completeness("sumcheck completeness", stats.completeness_trials, seed, |s| {
        let run = run_sumcheck(&f, Box::new(poly.clone()), &claim, Domain::Full, ProverMode::Honest, Box::new(s));
        Ok(decided(&run.outcome, &poly) && run.rounds() == p.m)
    })];
    let mut false_claim = claim.clone();
    false_claim.target = f.add(claim.target, f.one());
    out.push(soundness("sumcheck soundness", stats, p.soundness_bound(&f), seed, |s| {
        Ok(decided(&run_sumcheck(&f, Box::new(poly.clone()), &false_claim, Domain::Full, ProverMode::Cheat, Box::new(s)).outcome, &poly))
    }));
    out
}

// ---------------------------------------------------------------------------------------
// zero-knowledge sumcheck

pub fn zksumcheck_checks(p: &ZkSumcheckParams, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let setup = p.field().and_then(|f| Ok((p.strong(&f)?, f)));
    let (sp, f) = match setup {
        Ok(x) => x,
        Err(e) => return vec![Check::error("zksumcheck parameters", e)],
    };
    let (poly, claim) = p.claim(&f, &mut RngStream::from_seed(seed).child("instance"));
    let mut out = vec![completeness("weak-zk completeness", stats.completeness_trials, seed, |s| {
        let run = weak_zk_run(&f, Box::new(poly.clone()), &claim, ProverMode::Honest, &mut s.child("p"), Box::new(s.child("v"))).map_err(proto)?;
        Ok(decided(&run.outcome, &poly))
    })];
    out.push(completeness("strong-zk completeness", stats.completeness_trials, seed, |s| {
        let run = strong_zk_run(&f, &sp, Box::new(poly.clone()), claim.target, StrongMode::Honest, &mut s.child("p"), Box::new(s.child("v")))
            .map_err(proto)?;
        Ok(decided(&run.outcome, &poly))
    }));
    let wrong = f.add(claim.target, f.one());
    for (mode, name) in [(StrongMode::CheatSum, "strong-zk soundness (false sum)"), (StrongMode::CheatSumAndOpening, "strong-zk soundness (false sum and opening)")] {
        out.push(soundness(name, stats, sp.soundness_bound(&f), seed, |s| {
            let run = strong_zk_run(&f, &sp, Box::new(poly.clone()), wrong, mode, &mut s.child("p"), Box::new(s.child("v"))).map_err(|e| e.to_string())?;
            Ok(decided(&run.outcome, &poly))
        }));
    }
    out.push(lift_check("strong-zk simulator summand queries", strong_single_query(&f, &sp, &poly, claim.target, seed)));
    out.push(lift_check("strong-zk query bound enforced", strong_bound_enforced(&f, &sp, &poly, claim.target, seed)));
    out
}

pub fn strong_single_query(
    f: &Field,
    sp: &crate::zksumcheck::StrongZkParams,
    poly: &MultiPoly,
    claimed: crate::Fe,
    seed: u64,
) -> Result<Check, HarnessError> {
    let root = RngStream::from_seed(seed).child("single-query");
    let mut counts = std::collections::BTreeMap::new();
    for i in 0..200 {
        let mut v = StrongZkVerifier::new(f, sp, claimed, Box::new(root.child_idx("v", i)));
        let o = Box::new(PolyOracle::points_only(poly.clone()));
        let s = strong_zk_simulate(f, sp, claimed, o, &mut v, Box::new(root.child_idx("s", i))).map_err(proto)?;
        if !decided(&s.run.outcome, poly) {
            return Ok(Check::new("strong-zk simulator summand queries", false, format!("simulated run {i} rejected")));
        }
        *counts.entry(s.f_log.len()).or_insert(0) += 1;
    }
    Ok(Check::new("strong-zk simulator summand queries", counts.keys().eq([1].iter()), format!("summand query counts over 200 runs: {counts:?}")))
}

pub fn strong_bound_enforced(
    f: &Field,
    sp: &crate::zksumcheck::StrongZkParams,
    poly: &MultiPoly,
    claimed: crate::Fe,
    seed: u64,
) -> Result<Check, HarnessError> {
    let mut c = RngStream::from_seed(seed).child("bound");
    let extra: Vec<Query> = (0..sp.query_limit() + 1).map(|_| Query::Point(f.random_vec(sp.oracle_vars(), &mut c))).collect();
    let mut v = ExtraQueries::new(StrongZkVerifier::new(f, sp, claimed, Box::new(c.child("v"))), extra);
    let o = Box::new(PolyOracle::points_only(poly.clone()));
    let r = strong_zk_simulate(f, sp, claimed, o, &mut v, Box::new(c.child("s")));
    let raised = matches!(r, Err(ZkError::Protocol(ProtocolError::QueryBound(_))));
    let detail = match &r {
        Err(e) => format!("{} extra queries: {e}", sp.query_limit() + 1),
        Ok(_) => "simulation ran past the budget".into(),
    };
    Ok(Check::new("strong-zk query bound enforced", raised, detail))
}

/// Reads `oracle` along random axis-parallel lines and checks each restriction has degree at
/// most the bound for its axis. Bounds of `|F| - 1` or more hold for every function and are
/// skipped.
pub fn axis_degrees_within(f: &Field, oracle: &mut dyn Oracle, degs: &[usize], lines: usize, coins: &mut dyn Coins) -> Result<bool, OracleError> {
    for (axis, &d) in degs.iter().enumerate() {
        if d as u64 + 1 >= f.order() {
            continue;
        }
        let xs = f.first_elements(d + 2);
        for _ in 0..lines {
            let mut p = f.random_vec(degs.len(), coins);
            let mut ys = Vec::with_capacity(xs.len());
            for &x in &xs {
                p[axis] = x;
                ys.push(oracle.answer(&Query::Point(p.clone()))?);
            }
            let c = uni::interpolate(f, &xs, &ys).expect("distinct points");
            if uni::degree(f, &c).is_some_and(|k| k > d) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------------------
// commitment

pub fn commit_checks(p: &CommitParams, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let f = match p.field() {
        Ok(f) => f,
        Err(e) => return vec![Check::error("commit field", e)],
    };
    let mut inst = RngStream::from_seed(seed).child("instance");
    let q = MultiPoly::random(&f, &p.degs, &mut inst);
    let c = match p.commit(&f, &q, &mut inst) {
        Ok(c) => c,
        Err(e) => return vec![Check::error("commit", e)],
    };
    let mut out = vec![Check::new("commit recovers the polynomial", c.recover() == q, "sum of the randomizer over G^k")];
    out.push(completeness("decommit completeness", stats.completeness_trials, seed, |mut s| {
        let alpha = f.random_vec(p.degs.len(), &mut s);
        let run = decommit(&c, &alpha, None, &mut s.child("p"), Box::new(s.child("v"))).map_err(proto)?;
        Ok(run.outcome.claim().is_some_and(|cl| cl.value == q.eval(&alpha) && cl.point == alpha))
    }));
    let alpha = f.random_vec(p.degs.len(), &mut inst);
    let wrong = f.add(q.eval(&alpha), f.one());
    out.push(soundness("decommit soundness", stats, opening_soundness_bound(&f, p.k, p.d), seed, |s| {
        let run = decommit(&c, &alpha, Some(wrong), &mut s.child("p"), Box::new(s.child("v"))).map_err(|e| e.to_string())?;
        Ok(run.outcome.claim().is_some())
    }));
    if p.g >= 2 {
        let g = crate::Subset::first(&f, p.g);
        let refused = Commitment::commit(&f, &q, p.k, &g, 2 * (p.g - 1) - 1, &mut inst, false).is_err();
        out.push(Check::new("commit refuses degree below the hiding threshold", refused, format!("d = {}", 2 * (p.g - 1) - 1)));
    }
    out
}

// ---------------------------------------------------------------------------------------
// low-degree test

pub fn ldt_checks(p: &LdtScenario, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let f = match p.field() {
        Ok(f) => f,
        Err(e) => return vec![Check::error("ldt field", e)],
    };
    let params = p.params();
    let mut inst = RngStream::from_seed(seed).child("instance");
    let honest = make_honest_strategy(MultiPoly::random(&f, &vec![p.d; p.m], &mut inst));
    let mut out = vec![completeness("ldt completeness", stats.completeness_trials, seed, |s| {
        let r = ldt_round(&f, &params, [&honest, &honest], &mut SeededShared(s.child("shared")), &mut s.child("v")).map_err(proto)?;
        Ok(r.run.outcome.is_accept())
    })];
    // one degree too many in the first variable
    let mut degs = vec![p.d; p.m];
    degs[0] += 1;
    let mut high = MultiPoly::random(&f, &degs, &mut inst);
    let mut top = vec![0; p.m];
    top[0] = p.d + 1;
    high.set_coeff(&top, f.one());
    let cheat = make_honest_strategy(high);
    let root = RngStream::from_seed(seed).child("ldt-excess");
    let n = stats.completeness_trials as u64;
    let mut rejected = 0;
    for i in 0..n {
        let s = root.child_idx("trial", i);
        match ldt_round(&f, &params, [&cheat, &cheat], &mut SeededShared(s.child("shared")), &mut s.child("v")) {
            Ok(r) => rejected += !r.run.outcome.is_accept() as u64,
            Err(e) => {
                out.push(Check::error("ldt rejects excess degree", e));
                return out;
            }
        }
    }
    let (lo, _) = crate::stats::wilson(rejected, n, stats.ci_z);
    out.push(Check::new("ldt rejects excess degree", lo > 0.0, format!("{rejected}/{n} rejected")));
    out
}

// ---------------------------------------------------------------------------------------
// NEXP

pub fn nexp_checks(p: &NexpScenario, field: Option<&str>, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let (setup, table) = match p.setup(field) {
        Ok(x) => x,
        Err(e) => return vec![Check::error("nexp setup", e)],
    };
    let satisfied = setup.arith.constraints_hold(&table);
    let mut out = Vec::new();
    if satisfied {
        out.push(completeness("nexp completeness", stats.completeness_trials, seed, |s| {
            let run = nexp_run(&setup, &table, StrongMode::Honest, &mut s.child("p"), Box::new(s.child("v"))).map_err(proto)?;
            let queries = run.events.iter().filter(|e| matches!(e, Event::Query { .. })).count();
            Ok(run.outcome.is_accept() && queries == VERIFIER_QUERIES)
        }));
        let root = RngStream::from_seed(seed).child("nexp-sim");
        let mut bad = None;
        for i in 0..100 {
            let mut v = NexpVerifier::new(&setup, Box::new(root.child_idx("v", i)));
            match nexp_simulate(&setup, &mut v, Box::new(root.child_idx("s", i))) {
                Ok(s) if s.run.outcome.is_accept() && s.summand_queries == 1 => {}
                Ok(s) => bad = Some(format!("run {i}: {:?} with {} summand queries", s.run.outcome, s.summand_queries)),
                Err(e) => bad = Some(format!("run {i}: {e}")),
            }
        }
        out.push(Check::new("nexp simulator serves the honest verifier", bad.is_none(), bad.unwrap_or_else(|| "100 runs, one summand query each".into())));
    } else {
        let bound = setup.structured_soundness_bound();
        for mode in [StrongMode::Honest, StrongMode::CheatSum, StrongMode::CheatSumAndOpening] {
            out.push(soundness(&format!("nexp soundness ({mode:?})"), stats, bound, seed, |s| {
                let run = nexp_run(&setup, &table, mode, &mut s.child("p"), Box::new(s.child("v"))).map_err(|e| e.to_string())?;
                Ok(run.outcome.is_accept())
            }));
        }
    }
    out
}

// ---------------------------------------------------------------------------------------
// lift

pub fn lift_checks(p: &LiftScenario, nexp: &NexpScenario, seed: u64) -> Vec<Check> {
    let inner = match p.inner_protocol(nexp, &mut RngStream::from_seed(seed).child("instance")) {
        Ok(i) => i,
        Err(e) => return vec![Check::error("lift inner protocol", e)],
    };
    let lp = match LiftedProtocol::new(inner.as_ref(), p.mode) {
        Ok(lp) => lp,
        Err(e) => return vec![Check::error("lift parameters", e)],
    };
    let inner_rounds = {
        let c = RngStream::from_seed(seed).child("inner");
        match inner.prover(&mut c.child("p")) {
            Ok(mut pr) => ipcp::run(pr.as_mut(), inner.verifier(Box::new(c.child("v"))).as_mut(), None).map(|r| r.rounds()),
            Err(e) => Err(ProtocolError::Misuse(e.to_string())),
        }
    };
    let inner_rounds = match inner_rounds {
        Ok(r) => r,
        Err(e) => return vec![Check::error("lift inner run", e)],
    };
    let root = RngStream::from_seed(seed).child("lift");
    let (mut ok, mut rounds_ok, mut branches) = (0, true, std::collections::BTreeSet::new());
    let mut emulation_rounds = None;
    for i in 0..p.trials as u64 {
        let s = root.child_idx("trial", i);
        let r = match lift_run(&lp, &mut SeededShared(s.child("shared")), Box::new(s.child("v"))) {
            Ok(r) => r,
            Err(e) => return vec![Check::error("lift completeness", e)],
        };
        ok += r.run.outcome.is_accept() as usize;
        let branch = r.branch;
        let expect = match (branch, p.mode) {
            (Some(LiftBranch::Emulation), LiftMode::Zk) => inner_rounds.max(1) + 2,
            (Some(LiftBranch::Emulation), LiftMode::Fast) => inner_rounds.max(1) + 1,
            (Some(LiftBranch::LowDegreeTest), LiftMode::Zk) => 2,
            (Some(LiftBranch::LowDegreeTest), LiftMode::Fast) => 1,
            (None, _) => usize::MAX,
        };
        let got = rounds_of(&r.run.events);
        if branch == Some(LiftBranch::Emulation) {
            emulation_rounds = Some(got);
        }
        rounds_ok &= got == expect;
        branches.insert(format!("{branch:?}"));
    }
    let mut out = vec![
        Check::new("lift completeness", ok == p.trials, format!("{ok}/{} accepted ({:?}, inner {})", p.trials, p.mode, inner.name())),
        Check::new(
            "lift round count",
            rounds_ok,
            format!("inner rounds {inner_rounds}, emulation branch {emulation_rounds:?}, branches seen {branches:?}"),
        ),
    ];
    if p.mode == LiftMode::Zk {
        out.push(lift_sim_check(&lp, inner.as_ref(), p.trials.min(200), seed));
    }
    out
}

fn lift_sim_check(lp: &LiftedProtocol, inner: &dyn LowDegreeIpcp, n: usize, seed: u64) -> Check {
    let name = "lift simulation query limit";
    let f = inner.field();
    let limit = wrapper_query_limit(f, inner.num_vars(), inner.max_degree());
    let root = RngStream::from_seed(seed).child("lift-sim");
    let mut most = 0;
    for i in 0..n as u64 {
        let mut v = lp.verifier(Box::new(root.child_idx("v", i)));
        match lift_simulate(lp, &mut v, Box::new(root.child_idx("s", i))) {
            Ok(s) => {
                if !s.run.outcome.is_accept() {
                    return Check::new(name, false, format!("simulated run {i} rejected"));
                }
                most = most.max(s.wrapper_queries);
            }
            Err(LiftError::QueryBound { needed, bound }) => {
                return Check::new(name, needed > bound, format!("inner simulator bound {bound} below the {needed} queries needed; refused"));
            }
            Err(e) => return Check::error(name, e),
        }
    }
    let d = inner.max_degree();
    Check::new(name, most <= limit && limit <= 2 * (d + 1) * (d + 1), format!("at most {most} wrapper queries over {n} runs, limit {limit}"))
}

// ---------------------------------------------------------------------------------------
// zero-knowledge distribution tests

/// A protocol and the simulator it is compared against.
#[derive(Clone, Debug)]
pub enum ZkTarget {
    Weak(ZkSumcheckParams),
    Strong(ZkSumcheckParams),
    Nexp(NexpScenario),
    Lift(LiftScenario),
    /// Hiding: randomizer values for one committed polynomial against another.
    Commit(CommitParams),
}

impl ZkTarget {
    pub fn name(&self) -> &'static str {
        match self {
            ZkTarget::Weak(_) => "weak-zk",
            ZkTarget::Strong(_) => "strong-zk",
            ZkTarget::Nexp(_) => "nexp",
            ZkTarget::Lift(_) => "lift",
            ZkTarget::Commit(_) => "commit",
        }
    }
}

fn views_checks(name: &str, real: impl FnMut(SharedCoins) -> Result<View, String>, sim: impl FnMut(SharedCoins) -> Result<View, String>, mode: &ZkMode, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    match *mode {
        ZkMode::Exhaustive { max_views, max_paths } => vec![match zk_exhaustive(real, sim, max_views, max_paths) {
            Ok(r) => Check::new(format!("{name} exact simulation"), r.passed, r.detail),
            Err(e) => Check::error(format!("{name} exact simulation"), e),
        }],
        ZkMode::Chi2 { samples, p_floor } => match zk_chi2_with_control(real, sim, samples, stats.defect_epsilon, seed) {
            Ok((ha, hb, hd)) => {
                let mut out = Vec::new();
                match compare_histograms(&ha, &hb, p_floor) {
                    Ok(r) => out.push(Check::new(format!("{name} simulation"), r.passed, r.detail)),
                    Err(e) => out.push(Check::error(format!("{name} simulation"), e)),
                }
                match compare_histograms(&ha, &hd, p_floor) {
                    Ok(r) => out.push(Check::new(format!("{name} planted defect detected"), !r.passed, r.detail)),
                    Err(e) => out.push(Check::error(format!("{name} planted defect detected"), e)),
                }
                out
            }
            Err(e) => vec![Check::error(format!("{name} simulation"), e)],
        },
    }
}

pub fn zk_checks(target: &ZkTarget, mode: &ZkMode, stats: &StatsConfig, seed: u64) -> Vec<Check> {
    let name = target.name();
    let fail = |e: HarnessError| vec![Check::error(format!("{name} setup"), e)];
    let inst = &mut RngStream::from_seed(seed).child("instance");
    match target {
        ZkTarget::Weak(p) => {
            let f = match p.field() {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let (poly, claim) = p.claim(&f, inst);
            let real = |c: SharedCoins| {
                let run = weak_zk_run(&f, Box::new(poly.clone()), &claim, ProverMode::Honest, &mut c.clone(), Box::new(c)).map_err(|e| e.to_string())?;
                Ok(run.events)
            };
            let sim = |c: SharedCoins| {
                let mut v = WeakZkVerifier::new(&f, claim.clone(), Box::new(c.clone()));
                let o = Box::new(PolyOracle::with_sums(poly.clone(), claim.h.clone()));
                Ok(weak_zk_simulate(&f, &claim, o, &mut v, Box::new(c), None).map_err(|e| e.to_string())?.run.events)
            };
            views_checks(name, real, sim, mode, stats, seed)
        }
        ZkTarget::Strong(p) => {
            let (f, sp) = match p.field().and_then(|f| Ok((p.strong(&f)?, f))) {
                Ok((sp, f)) => (f, sp),
                Err(e) => return fail(e),
            };
            let (poly, claim) = p.claim(&f, inst);
            let a = claim.target;
            let real = |c: SharedCoins| {
                let run = strong_zk_run(&f, &sp, Box::new(poly.clone()), a, StrongMode::Honest, &mut c.clone(), Box::new(c)).map_err(|e| e.to_string())?;
                Ok(run.events)
            };
            let sim = |c: SharedCoins| {
                let mut v = StrongZkVerifier::new(&f, &sp, a, Box::new(c.clone()));
                let o = Box::new(PolyOracle::points_only(poly.clone()));
                Ok(strong_zk_simulate(&f, &sp, a, o, &mut v, Box::new(c)).map_err(|e| e.to_string())?.run.events)
            };
            views_checks(name, real, sim, mode, stats, seed)
        }
        ZkTarget::Nexp(p) => {
            let (setup, table) = match p.setup(None) {
                Ok(x) => x,
                Err(e) => return fail(e),
            };
            let real = |c: SharedCoins| {
                Ok(nexp_run(&setup, &table, StrongMode::Honest, &mut c.clone(), Box::new(c)).map_err(|e| e.to_string())?.events)
            };
            let sim = |c: SharedCoins| {
                let mut v = NexpVerifier::new(&setup, Box::new(c.clone()));
                Ok(nexp_simulate(&setup, &mut v, Box::new(c)).map_err(|e| e.to_string())?.run.events)
            };
            views_checks(name, real, sim, mode, stats, seed)
        }
        ZkTarget::Lift(p) => {
            let inner = match p.inner_protocol(&NexpScenario::default(), inst) {
                Ok(i) => i,
                Err(e) => return fail(e),
            };
            let lp = match LiftedProtocol::new(inner.as_ref(), p.mode) {
                Ok(lp) => lp,
                Err(e) => return fail(proto(e)),
            };
            let real = |c: SharedCoins| {
                let v = Box::new(c.clone());
                Ok(lift_run(&lp, &mut RecordedShared::new(c), v).map_err(|e| e.to_string())?.run.events)
            };
            let sim = |c: SharedCoins| {
                let mut v = lp.verifier(Box::new(c.clone()));
                Ok(lift_simulate(&lp, &mut v, Box::new(c)).map_err(|e| e.to_string())?.run.events)
            };
            views_checks(name, real, sim, mode, stats, seed)
        }
        ZkTarget::Commit(p) => {
            let f = match p.field() {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let (q1, q2) = (MultiPoly::random(&f, &p.degs, inst), MultiPoly::random(&f, &p.degs, inst));
            let arity = p.degs.len() + p.k;
            let view = |q: &MultiPoly, mut c: SharedCoins| -> Result<View, String> {
                let points: Vec<Vec<crate::Fe>> = (0..p.queries).map(|_| f.random_vec(arity, &mut c)).collect();
                let mut s = RngStream::from_seed(c.below(u64::MAX));
                let com = p.commit(&f, q, &mut s).map_err(|e| e.to_string())?;
                let values = points.iter().map(|x| com.randomizer().eval(x)).collect();
                let mut v: View = points.into_iter().map(|x| Event::ToProver { ch: 0, msg: ipcp::Msg::new("commit.point", x) }).collect();
                v.push(Event::FromProver { ch: 0, msg: ipcp::Msg::new("commit.values", values) });
                Ok(v)
            };
            views_checks(name, |c| view(&q1, c), |c| view(&q2, c), mode, stats, seed)
        }
    }
}
