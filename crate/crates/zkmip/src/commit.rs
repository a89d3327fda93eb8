//! Algebraic commitments.
//!
//! `Q(X)` is committed to by a random `Z(X, Y)` with `sum over G^k of Z(X, .) = Q(X)`. With
//! `Y`-degree `d >= 2(|G| - 1)`, fewer than `|G|^k` queries to `Z` are independent of `Q`.
//! An evaluation `Q(alpha)` is opened by a weak-ZK sumcheck over `Z(alpha, .)` whose mask `A`
//! shares one oracle with `Z`: `O(W, X, Y) = W Z(X, Y) + (1 - W) A(Y)`.

use thiserror::Error;

use crate::field::{Fe, Field, Subset};
use crate::ipcp::{self, Abort, Msg, Outcome, PointClaim, ProtocolError, Prover, Run, VIn, VOut, Verifier};
use crate::poly::{lagrange_basis, MultiPoly, Oracle, PolyOracle, Query};
use crate::rng::Coins;
use crate::sumcheck::{ProverMode, SumClaim};
use crate::zksumcheck::{committed_mask, strong_oracle, WeakZkProver, WeakZkVerifier};

pub const OPEN_VALUE: &str = "open.value";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommitError {
    #[error("degree {d} is below the hiding threshold 2(|G| - 1) = {threshold}")]
    BelowHidingThreshold { d: usize, threshold: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("the multilinear attack needs odd characteristic")]
    CharacteristicTwo,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// `prod_j L_{g_0}(Y_j)`: sums to 1 over `G^k`, degree `|G| - 1` per variable.
pub fn unit_sum_poly(field: &Field, g: &Subset, k: usize) -> MultiPoly {
    let l0 = lagrange_basis(field, g.elems()).expect("distinct elements")[0].clone();
    let uni = MultiPoly::univariate(field, &l0);
    (1..k).fold(uni.clone(), |acc, _| acc.tensor(&uni))
}

/// A commitment: the committed polynomial and its randomizer `Z`.
#[derive(Clone, Debug)]
pub struct Commitment {
    field: Field,
    q: MultiPoly,
    k: usize,
    g: Subset,
    d: usize,
    z: MultiPoly,
}

impl Commitment {
    /// Commits to `q` with `k` extra variables of degree `d` summed over `g`. `insecure` skips
    /// the hiding threshold check.
    pub fn commit(
        field: &Field,
        q: &MultiPoly,
        k: usize,
        g: &Subset,
        d: usize,
        coins: &mut dyn Coins,
        insecure: bool,
    ) -> Result<Commitment, CommitError> {
        if k == 0 || g.is_empty() {
            return Err(CommitError::Params("need k >= 1 and nonempty G".into()));
        }
        let threshold = 2 * (g.len() - 1);
        if d < threshold && !insecure {
            return Err(CommitError::BelowHidingThreshold { d, threshold });
        }
        if d + 1 < g.len() {
            return Err(CommitError::Params(format!("degree {d} cannot interpolate over |G| = {}", g.len())));
        }
        let m = q.num_vars();
        let mut degs = q.deg_bounds().to_vec();
        degs.extend(std::iter::repeat(d).take(k));
        // uniform Z0, projected onto the sum-zero subspace, plus Q(X) e(Y): uniform among the
        // valid randomizers
        let z0 = MultiPoly::random(field, &degs, coins);
        let r0 = committed_mask(&z0, m, g);
        let e = unit_sum_poly(field, g, k);
        let fix = q.sub(&r0).pad_to(q.deg_bounds()).tensor(&e).pad_to(&degs);
        let z = z0.add(&fix);
        Ok(Commitment { field: field.clone(), q: q.clone(), k, g: g.clone(), d, z })
    }

    /// Wraps an existing randomizer; `z` must sum to the committed polynomial.
    pub fn from_parts(field: &Field, z: MultiPoly, m: usize, k: usize, g: &Subset, d: usize) -> Commitment {
        let q = committed_mask(&z, m, g);
        Commitment { field: field.clone(), q, k, g: g.clone(), d, z }
    }

    pub fn committed(&self) -> &MultiPoly {
        &self.q
    }

    pub fn randomizer(&self) -> &MultiPoly {
        &self.z
    }

    pub fn num_vars(&self) -> usize {
        self.q.num_vars()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sum_set(&self) -> &Subset {
        &self.g
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// `sum over G^k of Z(X, .)`, recomputed from `Z`.
    pub fn recover(&self) -> MultiPoly {
        committed_mask(&self.z, self.num_vars(), &self.g)
    }

    /// Degree bounds of an opening mask.
    pub fn mask_degs(&self) -> Vec<usize> {
        vec![self.d; self.k]
    }

    /// Decommitment oracle with a fresh opening mask.
    pub fn opening_oracle(&self, mask: &MultiPoly) -> MultiPoly {
        strong_oracle(&self.field, &self.z, mask, self.num_vars())
    }
}

/// Prover side of an opening of `sum over G^k of Z(alpha, .)`: sends the value, then runs
/// weak-ZK sumcheck on `Z(alpha, .)` with mask `A`.
pub struct OpeningProver {
    value: Fe,
    sent: bool,
    weak: WeakZkProver,
}

impl OpeningProver {
    pub fn new(field: &Field, z: &MultiPoly, alpha: &[Fe], g: &Subset, value: Fe, mask: MultiPoly, mode: ProverMode) -> OpeningProver {
        let slice = z.partial_eval(alpha);
        OpeningProver { value, sent: false, weak: WeakZkProver::new(field, Box::new(slice), g, value, mask, mode) }
    }

    pub fn value(&self) -> Fe {
        self.value
    }

    pub fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        if !self.sent {
            return Err(Abort);
        }
        self.weak.receive(m)
    }

    pub fn send(&mut self) -> Result<Msg, Abort> {
        if !self.sent {
            self.sent = true;
            return Ok(Msg::scalar(OPEN_VALUE, self.value));
        }
        self.weak.send()
    }
}

enum OpeningStage {
    Start,
    AwaitValue,
    Weak { value: Fe, weak: WeakZkVerifier },
    Check { value: Fe, expect: Fe },
    Finished,
}

/// Verifier side of an opening. Queries go to `O(W, X, Y)`; on success the outcome is the
/// claim `Q(alpha) = value`.
pub struct OpeningVerifier {
    field: Field,
    alpha: Vec<Fe>,
    g: Subset,
    mask_degs: Vec<usize>,
    coins: Option<Box<dyn Coins>>,
    stage: OpeningStage,
}

impl OpeningVerifier {
    pub fn new(field: &Field, alpha: &[Fe], g: &Subset, mask_degs: &[usize], coins: Box<dyn Coins>) -> OpeningVerifier {
        OpeningVerifier {
            field: field.clone(),
            alpha: alpha.to_vec(),
            g: g.clone(),
            mask_degs: mask_degs.to_vec(),
            coins: Some(coins),
            stage: OpeningStage::Start,
        }
    }

    fn after_weak(&mut self, value: Fe, out: VOut, weak: WeakZkVerifier) -> VOut {
        let f = &self.field;
        match out {
            VOut::Done(Outcome::Claim { claim }) => {
                let mut pt = vec![f.one()];
                pt.extend(&self.alpha);
                pt.extend(&claim.point);
                self.stage = OpeningStage::Check { value, expect: claim.value };
                VOut::Query(vec![Query::Point(pt)])
            }
            VOut::Done(o) => VOut::Done(o),
            VOut::Query(qs) => {
                // mask queries go to O(0, 0, y)
                let lead = 1 + self.alpha.len();
                let mapped = qs
                    .into_iter()
                    .map(|q| {
                        let mut pt = vec![f.zero(); lead];
                        pt.extend(q.coords());
                        match q {
                            Query::Point(_) => Query::Point(pt),
                            Query::Prefix(_) => Query::Prefix(pt),
                        }
                    })
                    .collect();
                self.stage = OpeningStage::Weak { value, weak };
                VOut::Query(mapped)
            }
            other => {
                self.stage = OpeningStage::Weak { value, weak };
                other
            }
        }
    }
}

impl Verifier for OpeningVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        match (std::mem::replace(&mut self.stage, OpeningStage::Finished), input) {
            (OpeningStage::Start, VIn::Start) => {
                self.stage = OpeningStage::AwaitValue;
                Ok(VOut::Receive)
            }
            (OpeningStage::AwaitValue, VIn::Message(m)) => {
                let Some(value) = m.as_scalar().filter(|_| m.kind == OPEN_VALUE) else {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {OPEN_VALUE}, got {}", m.kind))));
                };
                let claim = SumClaim { h: self.g.clone(), degs: self.mask_degs.clone(), target: value };
                let mut weak = WeakZkVerifier::new(&self.field, claim, self.coins.take().expect("coins"));
                let out = weak.step(VIn::Start)?;
                Ok(self.after_weak(value, out, weak))
            }
            (OpeningStage::Weak { value, mut weak }, input) => {
                let out = weak.step(input)?;
                Ok(self.after_weak(value, out, weak))
            }
            (OpeningStage::Check { value, expect }, VIn::Answers(a)) if a.len() == 1 => {
                if a[0] != expect {
                    return Ok(VOut::Done(Outcome::reject("opening does not match the commitment")));
                }
                Ok(VOut::Done(Outcome::Claim { claim: PointClaim { point: self.alpha.clone(), value } }))
            }
            (_, input) => Err(ProtocolError::Misuse(format!("opening verifier got unexpected input {input:?}"))),
        }
    }
}

/// Decommitment prover holding the opening oracle.
pub struct DecommitProver {
    oracle: PolyOracle,
    opening: OpeningProver,
}

impl Prover for DecommitProver {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.oracle
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        self.opening.receive(m)
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        self.opening.send()
    }
}

impl DecommitProver {
    /// Opens `Q(alpha)`; with `claim = Some(v)` the prover claims `v` instead and cheats in
    /// the sumcheck.
    pub fn new(c: &Commitment, alpha: &[Fe], claim: Option<Fe>, coins: &mut dyn Coins) -> DecommitProver {
        let mask = MultiPoly::random(&c.field, &c.mask_degs(), coins);
        let oracle = PolyOracle::points_only(c.opening_oracle(&mask));
        let (value, mode) = match claim {
            None => (c.q.eval(alpha), ProverMode::Honest),
            Some(v) => (v, ProverMode::Cheat),
        };
        DecommitProver { oracle, opening: OpeningProver::new(&c.field, &c.z, alpha, &c.g, value, mask, mode) }
    }
}

/// Runs an opening of `Q(alpha)`; `claim` as in [`DecommitProver::new`].
pub fn decommit(
    c: &Commitment,
    alpha: &[Fe],
    claim: Option<Fe>,
    prover_coins: &mut dyn Coins,
    verifier_coins: Box<dyn Coins>,
) -> Result<Run, CommitError> {
    if alpha.len() != c.num_vars() {
        return Err(CommitError::Params(format!("point has {} coordinates, expected {}", alpha.len(), c.num_vars())));
    }
    let mut p = DecommitProver::new(c, alpha, claim, prover_coins);
    let mut v = OpeningVerifier::new(&c.field, alpha, &c.g, &c.mask_degs(), verifier_coins);
    Ok(ipcp::run(&mut p, &mut v, None)?)
}

/// Acceptance bound for a false opening: `(kd + 1)/(|F| - 1) + kd/|F|`.
pub fn opening_soundness_bound(field: &Field, k: usize, d: usize) -> f64 {
    let q = field.order() as f64;
    let kd = (k * d) as f64;
    (kd + 1.0) / (q - 1.0) + kd / q
}

/// The point `(1/2, ..., 1/2)` and the value `a / 2^k` that the multilinear extension of any
/// `B: {0,1}^k -> F` summing to `a` takes there.
pub fn counterexample_multilinear(field: &Field, a: Fe, k: usize) -> Result<(Vec<Fe>, Fe), CommitError> {
    if field.characteristic() == 2 {
        return Err(CommitError::CharacteristicTwo);
    }
    let half = field.inv(field.from_int(2)).expect("odd characteristic");
    Ok((vec![half; k], field.mul(a, field.pow(half, k as u64))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{exact_distribution, RngStream};
    use crate::sampler::{point, Axis, PolySampler};

    #[test]
    fn recovery_is_the_committed_polynomial() {
        let f = Field::prime(97).unwrap();
        let mut c = RngStream::from_seed(4);
        let q = MultiPoly::random(&f, &[2, 1], &mut c);
        let g = Subset::first(&f, 3);
        let com = Commitment::commit(&f, &q, 2, &g, 4, &mut c, false).unwrap();
        assert_eq!(com.recover(), q);
        assert!(com.randomizer().within_bounds(&[2, 1, 4, 4]));
    }

    #[test]
    fn threshold_enforced() {
        let f = Field::prime(17).unwrap();
        let q = MultiPoly::constant(&f, Fe(3)).insert_vars(0, 1);
        let g = Subset::first(&f, 2);
        let mut c = RngStream::from_seed(1);
        assert_eq!(
            Commitment::commit(&f, &q, 1, &g, 1, &mut c, false).unwrap_err(),
            CommitError::BelowHidingThreshold { d: 1, threshold: 2 }
        );
        assert!(Commitment::commit(&f, &q, 1, &g, 1, &mut c, true).is_ok());
    }

    #[test]
    fn honest_opening_accepted() {
        let f = Field::prime(97).unwrap();
        let mut c = RngStream::from_seed(8);
        let q = MultiPoly::random(&f, &[2, 2], &mut c);
        let g = Subset::first(&f, 2);
        let com = Commitment::commit(&f, &q, 2, &g, 2, &mut c, false).unwrap();
        for t in 0..20 {
            let alpha = f.random_vec(2, &mut c);
            let run = decommit(&com, &alpha, None, &mut c.child_idx("p", t), Box::new(c.child_idx("v", t))).unwrap();
            let claim = run.outcome.claim().expect("accepted");
            assert_eq!(claim.value, q.eval(&alpha));
            assert_eq!(claim.point, alpha);
        }
    }

    #[test]
    fn false_opening_mostly_rejected() {
        let f = Field::prime(97).unwrap();
        let mut c = RngStream::from_seed(8);
        let q = MultiPoly::random(&f, &[1], &mut c);
        let g = Subset::first(&f, 2);
        let com = Commitment::commit(&f, &q, 2, &g, 2, &mut c, false).unwrap();
        let alpha = [Fe(5)];
        let wrong = f.add(q.eval(&alpha), Fe(1));
        let accepted = (0..200)
            .filter(|&t| {
                let run = decommit(&com, &alpha, Some(wrong), &mut c.child_idx("p", t), Box::new(c.child_idx("v", t))).unwrap();
                run.outcome.claim().is_some()
            })
            .count();
        assert!(accepted < 40, "{accepted} of 200 false openings accepted");
    }

    /// Same distribution through the constraint sampler: condition on the sums at every
    /// point of `K^m` and draw.
    fn commit_via_sampler(f: &Field, q: &MultiPoly, k: usize, g: &Subset, d: usize, coins: &mut dyn Coins) -> MultiPoly {
        let mut degs = q.deg_bounds().to_vec();
        degs.extend(std::iter::repeat(d).take(k));
        let mut s = PolySampler::new(f, &degs).unwrap();
        let grid: Vec<Vec<Fe>> = q.deg_bounds().iter().map(|&dq| f.first_elements(dq + 1)).collect();
        let mut idx = vec![0usize; grid.len()];
        loop {
            let alpha: Vec<Fe> = idx.iter().zip(&grid).map(|(&i, g)| g[i]).collect();
            let mut fun = point(&alpha);
            fun.extend((0..k).map(|_| Axis::SumOver(g.clone())));
            s.constrain(&fun, q.eval(&alpha)).unwrap();
            let Some(j) = (0..idx.len()).rev().find(|&j| idx[j] + 1 < grid[j].len()) else { break };
            idx[j] += 1;
            idx[j + 1..].iter_mut().for_each(|x| *x = 0);
        }
        s.sample(coins)
    }

    #[test]
    fn projection_matches_sampler_exactly() {
        let f = Field::prime(3).unwrap();
        let g = Subset::first(&f, 2);
        let q = MultiPoly::univariate(&f, &[Fe(1), Fe(2)]);
        let proj = exact_distribution(
            |t| Commitment::commit(&f, &q, 1, &g, 2, t, false).unwrap().randomizer().coeffs().to_vec(),
            1 << 20,
        )
        .unwrap();
        let samp = exact_distribution(|t| commit_via_sampler(&f, &q, 1, &g, 2, t).coeffs().to_vec(), 1 << 20).unwrap();
        // 6 coefficients, 2 constraints
        assert_eq!(proj.len(), 81);
        assert_eq!(proj, samp);
    }

    #[test]
    fn multilinear_counterexample() {
        let f = Field::prime(17).unwrap();
        let (pt, v) = counterexample_multilinear(&f, Fe(5), 2).unwrap();
        assert_eq!(pt, vec![Fe(9), Fe(9)]);
        // multilinear extension of any B on {0,1}^2 with sum 5, evaluated by its defining sum
        let b = [Fe(3), Fe(11), Fe(0), Fe(8)];
        let mle = |x: &[Fe]| {
            (0..4).fold(f.zero(), |acc, i| {
                let w = (0..2).fold(f.one(), |w, j| {
                    let bit = (i >> (1 - j)) & 1 == 1;
                    f.mul(w, if bit { x[j] } else { f.sub(f.one(), x[j]) })
                });
                f.add(acc, f.mul(w, b[i]))
            })
        };
        assert_eq!(mle(&pt), v);
        assert_eq!(v, Fe(14));
        assert_eq!(counterexample_multilinear(&f, Fe(0), 3).unwrap().1, Fe(0));
        assert_eq!(counterexample_multilinear(&Field::gf2(3).unwrap(), Fe(1), 2), Err(CommitError::CharacteristicTwo));
    }

    #[test]
    fn special_point_reveals_only_when_multilinear() {
        let f = Field::prime(17).unwrap();
        let g = Subset::first(&f, 2);
        let q = MultiPoly::univariate(&f, &[Fe(5)]);
        let (pt, v) = counterexample_multilinear(&f, Fe(5), 2).unwrap();
        let mut x = vec![Fe(0)];
        x.extend(&pt);
        let mut c = RngStream::from_seed(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..50 {
            let lin = Commitment::commit(&f, &q, 2, &g, 1, &mut c, true).unwrap();
            assert_eq!(lin.randomizer().eval(&x), v);
            seen.insert(Commitment::commit(&f, &q, 2, &g, 2, &mut c, false).unwrap().randomizer().eval(&x));
        }
        assert!(seen.len() > 5);
    }

    #[test]
    fn unit_sum_poly_sums_to_one() {
        let f = Field::prime(17).unwrap();
        let g = Subset::first(&f, 3);
        let e = unit_sum_poly(&f, &g, 2);
        assert_eq!(e.sum_over(&g), f.one());
        assert!(e.within_bounds(&[2, 2]));
    }
}
