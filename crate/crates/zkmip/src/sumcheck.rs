//! The sumcheck protocol: reduces `sum over H^m of F = a` to a claim `F(c) = b`.

use serde::{Deserialize, Serialize};

use crate::field::{Domain, Fe, Field, Subset};
use crate::ipcp::{Abort, Msg, Outcome, PointClaim, ProtocolError, Prover, VIn, VOut, Verifier};
use crate::poly::{uni, AxisOp, Evaluator, MultiPoly, Oracle, OracleError, Query};
use crate::rng::Coins;

pub const ROUND_POLY: &str = "sumcheck.g";
pub const CHALLENGE: &str = "sumcheck.c";

/// Claim `sum over H^m of F = target`, with per-variable degree bounds on F.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumClaim {
    pub h: Subset,
    pub degs: Vec<usize>,
    pub target: Fe,
}

impl SumClaim {
    pub fn num_vars(&self) -> usize {
        self.degs.len()
    }
}

/// Something the honest prover can compute round polynomials for.
pub trait RoundSource {
    fn num_vars(&self) -> usize;
    fn deg_bounds(&self) -> Vec<usize>;
    /// `g(X) = sum over alpha in H^(m-i-1) of F(fixed, X, alpha)` with `i = fixed.len()`,
    /// as `deg_bounds()[i] + 1` coefficients.
    fn round_poly(&self, fixed: &[Fe], h: &Subset) -> Vec<Fe>;
    fn eval_at(&self, x: &[Fe]) -> Fe;
}

impl RoundSource for MultiPoly {
    fn num_vars(&self) -> usize {
        MultiPoly::num_vars(self)
    }

    fn deg_bounds(&self) -> Vec<usize> {
        MultiPoly::deg_bounds(self).to_vec()
    }

    fn round_poly(&self, fixed: &[Fe], h: &Subset) -> Vec<Fe> {
        let i = fixed.len();
        let ops: Vec<AxisOp> = (0..MultiPoly::num_vars(self))
            .map(|j| match j.cmp(&i) {
                std::cmp::Ordering::Less => AxisOp::At(fixed[j]),
                std::cmp::Ordering::Equal => AxisOp::Keep,
                std::cmp::Ordering::Greater => AxisOp::SumOver(h),
            })
            .collect();
        self.contract(&ops).into_coeffs()
    }

    fn eval_at(&self, x: &[Fe]) -> Fe {
        self.eval(x)
    }
}

/// Round polynomials of a summand known only through evaluation: evaluate at `d + 1`
/// points, summing over the remaining variables, and interpolate.
pub struct ByEvaluation<E> {
    pub field: Field,
    pub inner: E,
}

impl<E: Evaluator> RoundSource for ByEvaluation<E> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    fn deg_bounds(&self) -> Vec<usize> {
        self.inner.deg_bounds()
    }

    fn round_poly(&self, fixed: &[Fe], h: &Subset) -> Vec<Fe> {
        let f = &self.field;
        let m = self.inner.num_vars();
        let i = fixed.len();
        let d = self.inner.deg_bounds()[i];
        assert!((d as u64) < f.order(), "field too small to interpolate degree {d}");
        let xs = f.first_elements(d + 1);
        let tail = m - i - 1;
        let hs = h.elems();
        let mut ys = Vec::with_capacity(d + 1);
        let mut pt = fixed.to_vec();
        pt.push(f.zero());
        pt.extend(std::iter::repeat(f.zero()).take(tail));
        let total = hs.len().pow(tail as u32);
        for &x in &xs {
            pt[i] = x;
            let mut acc = f.zero();
            for n in 0..total {
                let mut r = n;
                for k in (0..tail).rev() {
                    pt[i + 1 + k] = hs[r % hs.len()];
                    r /= hs.len();
                }
                acc = f.add(acc, self.inner.eval_at(&pt));
            }
            ys.push(acc);
        }
        uni::interpolate(f, &xs, &ys).expect("distinct points")
    }

    fn eval_at(&self, x: &[Fe]) -> Fe {
        self.inner.eval_at(x)
    }
}

/// `sum_j c_j F_j`.
pub struct LinComb {
    pub field: Field,
    pub terms: Vec<(Fe, Box<dyn RoundSource>)>,
}

impl RoundSource for LinComb {
    fn num_vars(&self) -> usize {
        self.terms[0].1.num_vars()
    }

    fn deg_bounds(&self) -> Vec<usize> {
        let m = self.num_vars();
        (0..m).map(|i| self.terms.iter().map(|(_, t)| t.deg_bounds()[i]).max().unwrap()).collect()
    }

    fn round_poly(&self, fixed: &[Fe], h: &Subset) -> Vec<Fe> {
        let f = &self.field;
        let d = self.deg_bounds()[fixed.len()];
        let mut out = vec![f.zero(); d + 1];
        for (c, t) in &self.terms {
            let g = t.round_poly(fixed, h);
            f.axpy(&mut out[..g.len()], *c, &g);
        }
        out
    }

    fn eval_at(&self, x: &[Fe]) -> Fe {
        let f = &self.field;
        f.sum(self.terms.iter().map(|(c, t)| f.mul(*c, t.eval_at(x))))
    }
}

/// Oracle stand-in for protocols without a proof oracle.
pub struct NoOracle;

impl Oracle for NoOracle {
    fn num_vars(&self) -> usize {
        0
    }
    fn answer(&mut self, _q: &Query) -> Result<Fe, OracleError> {
        Err(OracleError::Simulator("this protocol has no proof oracle".into()))
    }
}

/// Degree-`d` polynomial with `H`-sum `target` agreeing with `honest` on `d` points.
pub fn cheat_poly(f: &Field, honest: &[Fe], target: Fe, h: &Subset) -> Vec<Fe> {
    let d = honest.len() - 1;
    let delta_needed = f.sub(target, uni::sum_over(f, honest, h));
    if delta_needed == f.zero() {
        return honest.to_vec();
    }
    // L(X) = prod_{p in P}(X - p) for a d-set P with nonzero H-sum; try consecutive windows
    let q = f.order();
    for start in 0..q {
        let pts: Vec<Fe> = (0..d as u64).map(|j| Fe(((start + j) % q) as u32)).collect();
        let mut l = vec![f.one()];
        for &p in &pts {
            l = uni::mul(f, &l, &[f.neg(p), f.one()]);
        }
        let s = uni::sum_over(f, &l, h);
        if s != f.zero() {
            let delta = f.div(delta_needed, s).expect("nonzero");
            let mut g = honest.to_vec();
            f.axpy(&mut g, delta, &l);
            return g;
        }
    }
    // every degree-d vanishing polynomial sums to zero over H: fall back to the constant shift
    let mut g = honest.to_vec();
    let hs = f.from_int(h.len() as i64);
    g[0] = f.add(g[0], f.div(delta_needed, hs).expect("|H| nonzero in the field"));
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProverMode {
    Honest,
    /// Keeps every round consistent with a (possibly false) claimed sum while matching the
    /// honest polynomial on `d` points.
    Cheat,
}

/// Sumcheck prover.
pub struct SumcheckProver {
    field: Field,
    src: Box<dyn RoundSource>,
    h: Subset,
    fixed: Vec<Fe>,
    abort_outside: Option<Domain>,
    mode: ProverMode,
    running: Fe,
    last_sent: Vec<Fe>,
    no_oracle: NoOracle,
}

impl SumcheckProver {
    pub fn new(field: &Field, src: Box<dyn RoundSource>, h: &Subset, claimed: Fe, mode: ProverMode) -> SumcheckProver {
        SumcheckProver {
            field: field.clone(),
            src,
            h: h.clone(),
            fixed: vec![],
            abort_outside: None,
            mode,
            running: claimed,
            last_sent: vec![],
            no_oracle: NoOracle,
        }
    }

    /// Abort if any challenge falls outside `dom`.
    pub fn abort_outside(mut self, dom: Domain) -> SumcheckProver {
        self.abort_outside = Some(dom);
        self
    }

    pub fn challenges(&self) -> &[Fe] {
        &self.fixed
    }

    /// Value the last round polynomial takes at the last challenge (the claim before any
    /// challenge).
    pub fn running(&self) -> Fe {
        self.running
    }

    pub fn source(&self) -> &dyn RoundSource {
        self.src.as_ref()
    }

    pub fn next_poly(&mut self) -> Vec<Fe> {
        let honest = self.src.round_poly(&self.fixed, &self.h);
        let g = match self.mode {
            ProverMode::Honest => honest,
            ProverMode::Cheat => cheat_poly(&self.field, &honest, self.running, &self.h),
        };
        self.last_sent = g.clone();
        g
    }

    pub fn take_challenge(&mut self, c: Fe) -> Result<(), Abort> {
        if let Some(dom) = &self.abort_outside {
            if !dom.contains(c) {
                return Err(Abort);
            }
        }
        self.running = uni::eval(&self.field, &self.last_sent, c);
        self.fixed.push(c);
        Ok(())
    }
}

impl Prover for SumcheckProver {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.no_oracle
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        let c = m.as_scalar().ok_or(Abort)?;
        self.take_challenge(c)
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        Ok(Msg::new(ROUND_POLY, self.next_poly()))
    }
}

/// Sumcheck verifier.
pub struct SumcheckVerifier {
    field: Field,
    claim: SumClaim,
    domain: Domain,
    coins: Box<dyn Coins>,
    point: Vec<Fe>,
    running: Fe,
}

impl SumcheckVerifier {
    pub fn new(field: &Field, claim: SumClaim, domain: Domain, coins: Box<dyn Coins>) -> SumcheckVerifier {
        let running = claim.target;
        SumcheckVerifier { field: field.clone(), claim, domain, coins, point: vec![], running }
    }

    pub fn point(&self) -> &[Fe] {
        &self.point
    }

    pub fn running_target(&self) -> Fe {
        self.running
    }

    fn finished(&self) -> bool {
        self.point.len() == self.claim.num_vars()
    }

    fn claim_out(&self) -> VOut {
        VOut::Done(Outcome::Claim { claim: PointClaim { point: self.point.clone(), value: self.running } })
    }

    /// Checks a round polynomial; on success draws and returns the challenge.
    pub fn check_round(&mut self, g: &[Fe]) -> Result<Fe, String> {
        let f = &self.field;
        let i = self.point.len();
        let d = self.claim.degs[i];
        if g.len() != d + 1 {
            return Err(format!("round {i}: expected {} coefficients, got {}", d + 1, g.len()));
        }
        if uni::sum_over(f, g, &self.claim.h) != self.running {
            return Err(format!("round {i}: sum over H does not match the running claim"));
        }
        let c = self.domain.sample(f, self.coins.as_mut());
        self.running = uni::eval(f, g, c);
        self.point.push(c);
        Ok(c)
    }
}

impl Verifier for SumcheckVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        match input {
            VIn::Start => Ok(if self.finished() { self.claim_out() } else { VOut::Receive }),
            VIn::Message(m) => {
                if m.kind != ROUND_POLY {
                    return Ok(VOut::Done(Outcome::reject(format!("unexpected message {}", m.kind))));
                }
                match self.check_round(&m.body) {
                    Ok(c) => Ok(VOut::Send(Msg::scalar(CHALLENGE, c))),
                    Err(e) => Ok(VOut::Done(Outcome::reject(e))),
                }
            }
            VIn::Sent => Ok(if self.finished() { self.claim_out() } else { VOut::Receive }),
            VIn::Answers(_) => Err(ProtocolError::Misuse("sumcheck verifier makes no queries".into())),
        }
    }
}

/// Runs the sumcheck protocol on `src` for `claim`.
pub fn run_sumcheck(
    field: &Field,
    src: Box<dyn RoundSource>,
    claim: &SumClaim,
    domain: Domain,
    mode: ProverMode,
    verifier_coins: Box<dyn Coins>,
) -> crate::ipcp::Run {
    let mut p = SumcheckProver::new(field, src, &claim.h, claim.target, mode);
    let mut v = SumcheckVerifier::new(field, claim.clone(), domain, verifier_coins);
    crate::ipcp::run(&mut p, &mut v, None).expect("sumcheck has no oracle queries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn round_poly_of_product() {
        let f = Field::prime(17).unwrap();
        let mut p = MultiPoly::zero(&f, &[1, 1]);
        p.set_coeff(&[1, 1], f.one());
        let h = Subset::first(&f, 2);
        assert_eq!(RoundSource::round_poly(&p, &[], &h), vec![Fe(0), Fe(1)]);
        let by_eval = ByEvaluation { field: f.clone(), inner: p.clone() };
        assert_eq!(by_eval.round_poly(&[], &h), vec![Fe(0), Fe(1)]);
        assert_eq!(by_eval.round_poly(&[Fe(3)], &h), RoundSource::round_poly(&p, &[Fe(3)], &h));
    }

    #[test]
    fn honest_run_gives_true_claim() {
        let f = Field::prime(97).unwrap();
        let mut c = RngStream::from_seed(3);
        let p = MultiPoly::random(&f, &[2, 2, 2], &mut c);
        let h = Subset::first(&f, 3);
        let claim = SumClaim { h: h.clone(), degs: vec![2, 2, 2], target: p.sum_over(&h) };
        let run = run_sumcheck(&f, Box::new(p.clone()), &claim, Domain::Full, ProverMode::Honest, Box::new(c.child("v")));
        let out = run.outcome.claim().unwrap().clone();
        assert_eq!(p.eval(&out.point), out.value);
    }

    #[test]
    fn wrong_sum_rejected() {
        let f = Field::prime(97).unwrap();
        let p = MultiPoly::constant(&f, Fe(1)).insert_vars(0, 2);
        let h = Subset::first(&f, 2);
        let claim = SumClaim { h, degs: vec![0, 0], target: Fe(5) };
        let run = run_sumcheck(&f, Box::new(p), &claim, Domain::Full, ProverMode::Honest, Box::new(RngStream::from_seed(1)));
        assert!(matches!(run.outcome, Outcome::Reject { .. }));
    }

    #[test]
    fn cheat_poly_hits_target() {
        let f = Field::prime(97).unwrap();
        let h = Subset::first(&f, 3);
        let honest = vec![Fe(4), Fe(5), Fe(6)];
        let g = cheat_poly(&f, &honest, Fe(50), &h);
        assert_eq!(uni::sum_over(&f, &g, &h), Fe(50));
        let agree = (0..97).filter(|&x| uni::eval(&f, &g, Fe(x)) == uni::eval(&f, &honest, Fe(x))).count();
        assert_eq!(agree, 2);
    }
}
