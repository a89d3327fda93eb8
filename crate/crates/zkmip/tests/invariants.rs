//! Property tests for algebraic and bookkeeping invariants.

use proptest::prelude::*;
use zkmip::field::Domain;
use zkmip::harness::battery::decided;
use zkmip::harness::scenarios::{replay_matches, Scenario, SumcheckParams, ZkSumcheckParams};
use zkmip::harness::transcript_io::{parse_transcript, transcript_to_bytes};
use zkmip::rng::{Coins, RngStream};
use zkmip::stats::wilson;
use zkmip::sumcheck::{run_sumcheck, ProverMode, SumClaim};
use zkmip::zksumcheck::StrongMode;
use zkmip::{Fe, Field, MultiPoly, Subset};

fn fields() -> impl Strategy<Value = Field> {
    prop_oneof![Just("F2"), Just("F3"), Just("F97"), Just("F65521"), Just("GF2^4"), Just("GF2^16")].prop_map(|s| Field::parse(s).unwrap())
}

fn elems(f: &Field, n: usize, seed: u64) -> Vec<Fe> {
    f.random_vec(n, &mut RngStream::from_seed(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_ring_laws(f in fields(), seed in any::<u64>()) {
        let v = elems(&f, 3, seed);
        let (a, b, c) = (v[0], v[1], v[2]);
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        prop_assert_eq!(f.add(a, f.neg(a)), f.zero());
        if a != f.zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
        }
        prop_assert_eq!(f.pow(a, f.order()), a);
    }

    #[test]
    fn poly_eval_is_a_ring_map(f in fields(), seed in any::<u64>(), d0 in 0usize..4, d1 in 0usize..4) {
        let mut c = RngStream::from_seed(seed);
        let p = MultiPoly::random(&f, &[d0, d1], &mut c);
        let q = MultiPoly::random(&f, &[d1, d0], &mut c);
        let x = f.random_vec(2, &mut c);
        prop_assert_eq!(p.add(&q).eval(&x), f.add(p.eval(&x), q.eval(&x)));
        prop_assert_eq!(p.mul(&q).eval(&x), f.mul(p.eval(&x), q.eval(&x)));
        prop_assert_eq!(p.partial_eval(&x[..1]).eval(&x[1..]), p.eval(&x));
    }

    #[test]
    fn honest_sumcheck_is_decided(seed in any::<u64>(), m in 1usize..4, d in 1usize..4, h in 1usize..4) {
        let f = Field::parse("F97").unwrap();
        let mut c = RngStream::from_seed(seed);
        let hs = Subset::first(&f, h);
        let p = MultiPoly::random(&f, &vec![d; m], &mut c);
        let claim = SumClaim { h: hs.clone(), degs: vec![d; m], target: p.sum_over(&hs) };
        let run = run_sumcheck(&f, Box::new(p.clone()), &claim, Domain::Full, ProverMode::Honest, Box::new(c.child("v")));
        prop_assert!(decided(&run.outcome, &p));
    }

    #[test]
    fn transcripts_round_trip_and_replay(seed in any::<u64>(), which in 0usize..3) {
        let s = match which {
            0 => Scenario::Sumcheck { params: SumcheckParams::default(), cheat: seed % 2 == 0 },
            1 => Scenario::WeakZkSumcheck { params: ZkSumcheckParams::default() },
            _ => Scenario::StrongZkSumcheck { params: ZkSumcheckParams::default(), mode: StrongMode::Honest },
        };
        let t = s.transcript(seed).unwrap();
        let bytes = transcript_to_bytes(&t);
        let back = parse_transcript(&bytes).unwrap();
        prop_assert_eq!(transcript_to_bytes(&back), bytes);
        prop_assert!(replay_matches(&back).unwrap());
    }

    #[test]
    fn streams_are_reproducible_and_bounded(seed in any::<u64>(), n in 1u64..1000) {
        let mut a = RngStream::from_seed(seed).child("x");
        let mut b = RngStream::from_seed(seed).child("x");
        for _ in 0..16 {
            let v = a.below(n);
            prop_assert!(v < n);
            prop_assert_eq!(v, b.below(n));
        }
    }

    #[test]
    fn wilson_interval_contains_the_estimate(k in 0u64..1000, extra in 0u64..1000) {
        let n = k + extra + 1;
        let (lo, hi) = wilson(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }
}
