//! Acceptance run: one PASS/FAIL line per criterion, with the individual checks indented
//! below it. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use zkmip::aqc::{run_suite, Suite};
use zkmip::field::Domain;
use zkmip::harness::battery::{
    axis_degrees_within, decided, lift_checks, nexp_checks, strong_bound_enforced, strong_single_query, zk_checks, ZkTarget,
};
use zkmip::harness::scenarios::{replay_matches, CommitParams, LdtScenario, LiftInner, LiftScenario, NexpScenario, Scenario, SumcheckParams, ZkSumcheckParams};
use zkmip::harness::soundness::soundness_mc;
use zkmip::harness::transcript_io::{parse_transcript, transcript_to_bytes, TranscriptError};
use zkmip::harness::zk::ZkMode;
use zkmip::harness::StatsConfig;
use zkmip::ipcp::{self, ExtraQueries, Prover};
use zkmip::ldtest::{ldt_round, make_honest_strategy, LdtParams, RecordedShared, SeededShared};
use zkmip::lift::{
    curve_soundness_loss, lift_run, query_reduce_run, reduced_prover, CurveCheat, LiftMode, LiftedProtocol, LowDegreeIpcp, PublicSumcheck, SpotQueries,
};
use zkmip::nexp::{nexp_simulate, NexpProver, NexpVerifier};
use zkmip::poly::Query;
use zkmip::report::{all_passed, Check};
use zkmip::rng::{exact_distribution, RngStream, Tape};
use zkmip::sumcheck::{run_sumcheck, ProverMode};
use zkmip::zksumcheck::{strong_zk_run, weak_zk_run, StrongMode, StrongZkProver, WeakZkProver};
use zkmip::{Field, MultiPoly, Subset};

const SEED: u64 = 2024;

fn stats() -> StatsConfig {
    StatsConfig::default()
}

fn tiny_zk() -> ZkSumcheckParams {
    ZkSumcheckParams { field: "F3".into(), h: 2, degs: vec![2], k: 1, lambda: 1, budget: 2 }
}

/// `n` seeded runs of `trial`, all of which must accept.
fn all_accept(name: &str, n: u64, mut trial: impl FnMut(RngStream) -> bool) -> Check {
    let root = RngStream::from_seed(SEED).child(name);
    let ok = (0..n).filter(|&i| trial(root.child_idx("trial", i))).count() as u64;
    Check::new(name, ok == n, format!("{ok}/{n} accepted"))
}

/// Acceptance probability over every coin path of `f` must be exactly 1.
fn exactly_one(name: &str, cap: u64, f: impl FnMut(&mut Tape) -> bool) -> Check {
    match exact_distribution(f, cap) {
        Ok(d) => {
            let p = d.get(&true).copied().unwrap_or(Ratio::new(0, 1));
            Check::new(name, p == Ratio::new(1, 1), format!("exact acceptance probability {p}"))
        }
        Err(e) => Check::error(name, e),
    }
}

fn within(name: &str, limit: Duration, start: Instant) -> Check {
    let t = start.elapsed();
    Check::new(name, t <= limit, format!("{:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn f(s: &str) -> Field {
    Field::parse(s).unwrap()
}

fn completeness() -> Vec<Check> {
    let start = Instant::now();
    let mut out = Vec::new();
    let n = 1000;

    let sc = SumcheckParams::default();
    let f97 = f("F97");
    let (p, claim) = sc.claim(&f97, &mut RngStream::from_seed(SEED));
    out.push(all_accept("sumcheck", n, |s| {
        decided(&run_sumcheck(&f97, Box::new(p.clone()), &claim, Domain::Full, ProverMode::Honest, Box::new(s)).outcome, &p)
    }));

    let zp = ZkSumcheckParams::default();
    let sp = zp.strong(&f97).unwrap();
    let (zpoly, zclaim) = zp.claim(&f97, &mut RngStream::from_seed(SEED));
    out.push(all_accept("weak-zk sumcheck", n, |s| {
        let r = weak_zk_run(&f97, Box::new(zpoly.clone()), &zclaim, ProverMode::Honest, &mut s.child("p"), Box::new(s.child("v"))).unwrap();
        decided(&r.outcome, &zpoly)
    }));
    out.push(all_accept("strong-zk sumcheck", n, |s| {
        let r = strong_zk_run(&f97, &sp, Box::new(zpoly.clone()), zclaim.target, StrongMode::Honest, &mut s.child("p"), Box::new(s.child("v"))).unwrap();
        decided(&r.outcome, &zpoly)
    }));

    let small = StatsConfig { completeness_trials: n as usize, ..stats() };
    out.extend(nexp_checks(&NexpScenario::default(), None, &small, SEED).into_iter().filter(|c| c.name.contains("completeness")));

    let ps = PublicSumcheck::honest(MultiPoly::random(&f97, &[2, 2], &mut RngStream::from_seed(SEED)), &Subset::first(&f97, 2));
    out.push(all_accept("query reduction", n, |s| {
        let mut pr = reduced_prover(&ps, &mut s.child("p")).unwrap();
        query_reduce_run(&ps, &mut pr, Box::new(s.child("v")), &mut s.child("r")).unwrap().outcome.is_accept()
    }));

    let lp = LdtScenario::default();
    let q = make_honest_strategy(MultiPoly::random(&f97, &[2, 2], &mut RngStream::from_seed(SEED)));
    out.push(all_accept("low-degree test", n, |s| {
        ldt_round(&f97, &lp.params(), [&q, &q], &mut SeededShared(s.child("shared")), &mut s.child("v")).unwrap().run.outcome.is_accept()
    }));

    for mode in [LiftMode::Zk, LiftMode::Fast] {
        let scn = LiftScenario { mode, trials: n as usize, ..LiftScenario::default() };
        out.extend(lift_checks(&scn, &NexpScenario::default(), SEED).into_iter().filter(|c| c.name == "lift completeness"));
    }

    // exhaustive over tiny fields
    let f5 = f("F5");
    let h5 = Subset::first(&f5, 2);
    let p5 = MultiPoly::random(&f5, &[2, 2], &mut RngStream::from_seed(SEED));
    let c5 = zkmip::sumcheck::SumClaim { h: h5.clone(), degs: vec![2, 2], target: p5.sum_over(&h5) };
    out.push(exactly_one("sumcheck over F_5, all verifier coins", 1 << 20, |t| {
        decided(&run_sumcheck(&f5, Box::new(p5.clone()), &c5, Domain::Full, ProverMode::Honest, Box::new(t.clone())).outcome, &p5)
    }));

    let f3 = f("F3");
    let tz = tiny_zk();
    let (p3, c3) = tz.claim(&f3, &mut RngStream::from_seed(SEED));
    out.push(exactly_one("weak-zk sumcheck over F_3, all prover and verifier coins", 1 << 20, |t| {
        let mut pr = WeakZkProver::honest(&f3, Box::new(p3.clone()), &c3.h, c3.target, t);
        let mut v = zkmip::zksumcheck::WeakZkVerifier::new(&f3, c3.clone(), Box::new(t.clone()));
        decided(&ipcp::run(&mut pr, &mut v, None).unwrap().outcome, &p3)
    }));

    let sp3 = tz.strong(&f3).unwrap();
    let mut strong_ok = Check::new("strong-zk sumcheck over F_3, all verifier coins for 20 prover seeds", true, "exact acceptance probability 1 for every seed");
    for seed in 0..20 {
        let c = exactly_one("", 1 << 20, |t| {
            let r = strong_zk_run(&f3, &sp3, Box::new(p3.clone()), c3.target, StrongMode::Honest, &mut RngStream::from_seed(seed), Box::new(t.clone())).unwrap();
            decided(&r.outcome, &p3)
        });
        if !c.passed {
            strong_ok = Check::new(&strong_ok.name, false, format!("prover seed {seed}: {}", c.detail));
            break;
        }
    }
    out.push(strong_ok);

    let ps5 = PublicSumcheck::honest(MultiPoly::random(&f5, &[1, 1], &mut RngStream::from_seed(SEED)), &h5);
    let mut reduce_ok = Check::new("query reduction over F_5, all verifier coins for 10 prover seeds", true, "exact acceptance probability 1 for every seed");
    for seed in 0..10 {
        let c = exactly_one("", 1 << 22, |t| {
            let mut pr = reduced_prover(&ps5, &mut RngStream::from_seed(seed)).unwrap();
            query_reduce_run(&ps5, &mut pr, Box::new(t.clone()), &mut t.clone()).unwrap().outcome.is_accept()
        });
        if !c.passed {
            reduce_ok = Check::new(&reduce_ok.name, false, format!("prover seed {seed}: {}", c.detail));
            break;
        }
    }
    out.push(reduce_ok);

    let lq = make_honest_strategy(MultiPoly::random(&f5, &[1, 1], &mut RngStream::from_seed(SEED)));
    out.push(exactly_one("low-degree test over F_5, all coins", 1 << 20, |t| {
        let mut shared = RecordedShared::new(t.clone());
        ldt_round(&f5, &LdtParams { m: 2, d: 1 }, [&lq, &lq], &mut shared, t).unwrap().run.outcome.is_accept()
    }));

    for mode in [LiftMode::Zk, LiftMode::Fast] {
        let lp5 = LiftedProtocol::new(&ps5, mode).unwrap();
        let mut ok = Check::new(format!("lift ({mode:?}) over F_5, all verifier coins for 3 prover seeds"), true, "exact acceptance probability 1 for every seed");
        for seed in 0..3 {
            let c = exactly_one("", 1 << 22, |t| lift_run(&lp5, &mut SeededShared(RngStream::from_seed(seed)), Box::new(t.clone())).unwrap().run.outcome.is_accept());
            if !c.passed {
                ok = Check::new(&ok.name, false, format!("prover seed {seed}: {}", c.detail));
                break;
            }
        }
        out.push(ok);
    }
    out.push(within("completeness runtime", Duration::from_secs(120), start));
    out
}

fn soundness() -> Vec<Check> {
    let start = Instant::now();
    let cfg = stats();
    let n = 10_000;
    let mut out = Vec::new();
    let f97 = f("F97");

    let sc = SumcheckParams::default();
    let (p, mut claim) = sc.claim(&f97, &mut RngStream::from_seed(SEED));
    claim.target = f97.add(claim.target, f97.one());
    let r = soundness_mc(n, sc.soundness_bound(&f97), &cfg, SEED, |s| {
        Ok(decided(&run_sumcheck(&f97, Box::new(p.clone()), &claim, Domain::Full, ProverMode::Cheat, Box::new(s)).outcome, &p))
    })
    .unwrap();
    out.push(Check::new("sumcheck <= md/|F|", r.passed, r.detail()));

    let zp = ZkSumcheckParams::default();
    let sp = zp.strong(&f97).unwrap();
    let (zpoly, zclaim) = zp.claim(&f97, &mut RngStream::from_seed(SEED));
    let wrong = f97.add(zclaim.target, f97.one());
    for mode in [StrongMode::CheatSum, StrongMode::CheatSumAndOpening] {
        let r = soundness_mc(n, sp.soundness_bound(&f97), &cfg, SEED, |s| {
            let run = strong_zk_run(&f97, &sp, Box::new(zpoly.clone()), wrong, mode, &mut s.child("p"), Box::new(s.child("v"))).map_err(|e| e.to_string())?;
            Ok(decided(&run.outcome, &zpoly))
        })
        .unwrap();
        out.push(Check::new(format!("strong-zk ({mode:?}) <= md/|I| + (kd+2)/(|F|-1)"), r.passed, r.detail()));
    }

    let spot = SpotQueries { field: f97.clone(), degs: vec![2], q: 3 };
    let bound = curve_soundness_loss(&f97, spot.q, spot.total_degree());
    let r = soundness_mc(n, bound, &cfg, SEED, |s| {
        let mut pr = CurveCheat { inner: reduced_prover(&spot, &mut s.child("p")).map_err(|e| e.to_string())?, scale: f97.from_int(5) };
        let run = query_reduce_run(&spot, &mut pr, Box::new(s.child("v")), &mut s.child("r")).map_err(|e| e.to_string())?;
        Ok(run.outcome.is_accept())
    })
    .unwrap();
    out.push(Check::new("curve reduction <= dq/(|F|-q)", r.passed, r.detail()));
    out.push(within("soundness runtime", Duration::from_secs(600), start));
    out
}

fn exhaustive_zk() -> Vec<Check> {
    let mode = ZkMode::exhaustive();
    let mut out = zk_checks(&ZkTarget::Weak(tiny_zk()), &mode, &stats(), SEED);
    out.extend(zk_checks(&ZkTarget::Strong(tiny_zk()), &mode, &stats(), SEED));
    out
}

fn chi2_zk() -> Vec<Check> {
    let cfg = stats();
    let mode = ZkMode::Chi2 { samples: cfg.samples, p_floor: cfg.p_floor };
    let mut out = zk_checks(&ZkTarget::Nexp(NexpScenario::default()), &mode, &cfg, SEED);
    out.extend(zk_checks(&ZkTarget::Lift(LiftScenario::default()), &mode, &cfg, SEED));
    out
}

fn aqc() -> Vec<Check> {
    [Suite::ClosedForms, Suite::LowerBound, Suite::Independence].into_iter().flat_map(|s| run_suite(s, SEED)).collect()
}

fn structural() -> Vec<Check> {
    let mut out = Vec::new();
    let f97 = f("F97");
    let mut c = RngStream::from_seed(SEED).child("structural");

    // honest oracles within their declared degrees
    let zp = ZkSumcheckParams::default();
    let sp = zp.strong(&f97).unwrap();
    let (zpoly, zclaim) = zp.claim(&f97, &mut c);
    let mut strong = StrongZkProver::honest(&f97, &sp, Box::new(zpoly.clone()), zclaim.target, StrongMode::Honest, &mut c);
    let ok = axis_degrees_within(&f97, strong.oracle(), &sp.oracle_degs(), 5, &mut c).unwrap();
    out.push(Check::new("strong-zk oracle degrees", ok, format!("{:?} on 5 lines per axis", sp.oracle_degs())));
    let mut weak = WeakZkProver::honest(&f97, Box::new(zpoly.clone()), &zclaim.h, zclaim.target, &mut c);
    let ok = axis_degrees_within(&f97, weak.oracle(), &zp.degs, 5, &mut c).unwrap();
    out.push(Check::new("weak-zk mask degrees", ok, format!("{:?}", zp.degs)));
    let cp = CommitParams::default();
    let q = MultiPoly::random(&f97, &cp.degs, &mut c);
    let com = cp.commit(&f97, &q, &mut c).unwrap();
    let mut degs = cp.degs.clone();
    degs.extend(std::iter::repeat(cp.d).take(cp.k));
    out.push(Check::new("commitment randomizer degrees", com.randomizer().within_bounds(&degs), format!("{degs:?}")));
    let (setup, table) = NexpScenario::default().setup(None).unwrap();
    let mut np = NexpProver::new(&setup, &table, StrongMode::Honest, &mut c).unwrap();
    let ok = axis_degrees_within(setup.field(), np.oracle(), &setup.bundle_degs(), 3, &mut c).unwrap();
    out.push(Check::new("nexp bundle degrees", ok, format!("{:?}", setup.bundle_degs())));

    // lifted round counts, wrapper query limit, and the NEXP lift refusing simulation
    out.extend(lift_checks(&LiftScenario { trials: 300, ..LiftScenario::default() }, &NexpScenario::default(), SEED));
    out.extend(
        lift_checks(&LiftScenario { inner: LiftInner::Nexp, trials: 6, ..LiftScenario::default() }, &NexpScenario::default(), SEED)
            .into_iter()
            .map(|mut ch| {
                ch.name = format!("{} (nexp inner)", ch.name);
                ch
            }),
    );

    // one summand query, and budgets enforced
    let a = zclaim.target;
    out.push(strong_single_query(&f97, &sp, &zpoly, a, SEED).unwrap_or_else(|e| Check::error("strong-zk simulator summand queries", e)));
    out.push(strong_bound_enforced(&f97, &sp, &zpoly, a, SEED).unwrap_or_else(|e| Check::error("strong-zk query bound enforced", e)));
    let extra: Vec<Query> = (0..setup.params.b + 1).map(|_| Query::Point(setup.field().random_vec(setup.bundle_degs().len(), &mut c))).collect();
    let mut v = ExtraQueries::new(NexpVerifier::new(&setup, Box::new(c.child("v"))), extra);
    let r = nexp_simulate(&setup, &mut v, Box::new(c.child("s")));
    let detail = match &r {
        Err(e) => e.to_string(),
        Ok(_) => "simulation ran past the budget".into(),
    };
    out.push(Check::new("nexp query bound enforced", r.is_err() && detail.contains("query bound"), detail));
    out
}

fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario::Sumcheck { params: SumcheckParams::default(), cheat: false },
        Scenario::Sumcheck { params: SumcheckParams::default(), cheat: true },
        Scenario::WeakZkSumcheck { params: ZkSumcheckParams::default() },
        Scenario::StrongZkSumcheck { params: ZkSumcheckParams::default(), mode: StrongMode::Honest },
        Scenario::StrongZkSumcheck { params: ZkSumcheckParams::default(), mode: StrongMode::CheatSumAndOpening },
        Scenario::Decommit { params: CommitParams::default(), cheat: true },
        Scenario::Ldt { params: LdtScenario::default() },
        Scenario::Nexp { params: NexpScenario::default(), mode: StrongMode::Honest },
        Scenario::Lift { params: LiftScenario::default(), nexp: NexpScenario::default() },
        Scenario::Lift { params: LiftScenario { mode: LiftMode::Fast, ..LiftScenario::default() }, nexp: NexpScenario::default() },
    ]
}

fn determinism() -> Vec<Check> {
    let all = scenarios();
    let (mut same, mut replayed, mut round_trip) = (0, 0, 0);
    let total = 100;
    for i in 0..total {
        let s = &all[i % all.len()];
        let seed = 1000 + i as u64;
        let a = transcript_to_bytes(&s.transcript(seed).unwrap());
        let b = transcript_to_bytes(&s.transcript(seed).unwrap());
        same += (a == b) as usize;
        let parsed = parse_transcript(&a).unwrap();
        round_trip += (transcript_to_bytes(&parsed) == a) as usize;
        replayed += replay_matches(&parsed).unwrap() as usize;
    }
    let t = transcript_to_bytes(&all[0].transcript(7).unwrap());
    let text = String::from_utf8(t).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..3].join("\n") + "\n" + &lines[3][..lines[3].len() / 2];
    let err = parse_transcript(cut.as_bytes()).unwrap_err();
    vec![
        Check::new("same parameters and seed give the same bytes", same == total, format!("{same}/{total} transcripts")),
        Check::new("transcripts round-trip through the file format", round_trip == total, format!("{round_trip}/{total}")),
        Check::new("replay from the header is byte-identical", replayed == total, format!("{replayed}/{total}")),
        Check::new("truncated file names the event", matches!(err, TranscriptError::Event { index: 2, .. }), err.to_string()),
    ]
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Vec<Check>); 7] = [
        ("completeness", completeness),
        ("soundness", soundness),
        ("exhaustive zero knowledge", exhaustive_zk),
        ("chi-square zero knowledge", chi2_zk),
        ("algebraic query complexity", aqc),
        ("structural", structural),
        ("determinism", determinism),
    ];
    let mut ok = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let pass = all_passed(&checks);
        ok &= pass;
        println!(
            "{} criterion {} {name}: {}/{} checks passed in {:.1}s",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            checks.iter().filter(|c| c.passed).count(),
            checks.len(),
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("    {}", c.line());
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
