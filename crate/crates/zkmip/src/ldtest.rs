//! Plane-vs-point low individual degree test: a 2-prover, 1-round protocol with classical
//! strategies driven by shared randomness.
//!
//! With probability 1/2 the verifier runs the total-degree test (plane to one prover, a point
//! on it to the other, check `g(alpha) = z` and `deg g <= md`), otherwise the axis-parallel
//! test (plane to one prover, an axis-parallel line through a point of the plane to the other,
//! check `deg h <= d` and `g(alpha) = h(alpha)`). Which prover gets the plane is a fair coin.

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, Field};
use crate::ipcp::{Event, Msg, Outcome, Run};
use crate::poly::{uni, Flat, MultiPoly};
use crate::rng::Coins;

pub const PLANE: &str = "ldt.plane";
pub const POINT: &str = "ldt.point";
pub const LINE: &str = "ldt.line";
pub const BIVARIATE: &str = "ldt.bivariate";
pub const VALUE: &str = "ldt.value";
pub const UNIVARIATE: &str = "ldt.univariate";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LdtError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("empty mixture")]
    EmptyMixture,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdtParams {
    pub m: usize,
    /// Individual degree claimed for `Q`.
    pub d: usize,
}

impl LdtParams {
    pub fn validate(&self, field: &Field) -> Result<(), LdtError> {
        if self.m < 2 {
            return Err(LdtError::Params("planes need m >= 2".into()));
        }
        if field.order() <= (self.m * self.d) as u64 {
            return Err(LdtError::Params(format!("|F| = {} must exceed md = {}", field.order(), self.m * self.d)));
        }
        Ok(())
    }

    /// Total degree allowed on planes.
    pub fn total_degree(&self) -> usize {
        self.m * self.d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    TotalDegree,
    AxisParallel,
}

/// What a prover is asked.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LdtQuestion {
    Plane(Flat),
    Point(Vec<Fe>),
    Line(Flat),
}

impl LdtQuestion {
    pub fn to_msg(&self, f: &Field) -> Msg {
        match self {
            LdtQuestion::Plane(s) => {
                let mut body = s.base().to_vec();
                for d in s.directions(f) {
                    body.extend(d);
                }
                Msg::new(PLANE, body)
            }
            LdtQuestion::Point(a) => Msg::new(POINT, a.clone()),
            LdtQuestion::Line(l) => {
                let mut body = l.base().to_vec();
                body.extend(l.directions(f).concat());
                Msg::new(LINE, body)
            }
        }
    }
}

/// The verifier's randomness for one round. Prover 0 is the first prover (in the lift, the
/// primary one).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdtChallenge {
    /// `false`: prover 0 gets the plane; `true`: prover 1 does.
    pub swap: bool,
    pub branch: Branch,
    pub plane: Flat,
    pub point: Vec<Fe>,
    /// Axis of the line through `point` (axis-parallel branch only).
    pub axis: Option<usize>,
}

/// Uniform plane of `F^m` with a uniform point on it.
///
/// The point is drawn first, then a uniform 2-dimensional direction space. For `m = 2` the
/// only plane is the whole space and no directions are drawn.
pub fn sample_plane_and_point(f: &Field, m: usize, coins: &mut dyn Coins) -> (Flat, Vec<Fe>) {
    let point = f.random_vec(m, coins);
    let plane = if m == 2 {
        Flat::plane(f, &point, &[f.one(), f.zero()], &[f.zero(), f.one()]).expect("independent")
    } else {
        Flat::random_plane_through(f, &point, coins)
    };
    (plane, point)
}

impl LdtChallenge {
    /// Draws, in order: the role coin, the branch coin, the point and plane, the axis.
    pub fn sample(f: &Field, params: &LdtParams, coins: &mut dyn Coins) -> LdtChallenge {
        let swap = coins.bit();
        let branch = if coins.bit() { Branch::AxisParallel } else { Branch::TotalDegree };
        let (plane, point) = sample_plane_and_point(f, params.m, coins);
        let axis = (branch == Branch::AxisParallel).then(|| coins.below(params.m as u64) as usize);
        LdtChallenge { swap, branch, plane, point, axis }
    }

    /// Index of the prover asked about the plane.
    pub fn plane_prover(&self) -> usize {
        usize::from(self.swap)
    }

    pub fn line(&self, f: &Field) -> Option<Flat> {
        self.axis.map(|a| Flat::axis_line(f, &self.point, a))
    }

    /// Questions for provers 0 and 1.
    pub fn questions(&self, f: &Field) -> [LdtQuestion; 2] {
        let plane = LdtQuestion::Plane(self.plane.clone());
        let other = match self.branch {
            Branch::TotalDegree => LdtQuestion::Point(self.point.clone()),
            Branch::AxisParallel => LdtQuestion::Line(self.line(f).unwrap()),
        };
        if self.swap {
            [other, plane]
        } else {
            [plane, other]
        }
    }

    /// Verdict on the answers of provers 0 and 1.
    pub fn decide(&self, f: &Field, params: &LdtParams, answers: [&Msg; 2]) -> Outcome {
        let pp = self.plane_prover();
        let (gmsg, omsg) = (answers[pp], answers[1 - pp]);
        let Some(g) = Bivariate::decode(gmsg) else {
            return Outcome::reject("malformed plane answer");
        };
        let t = self.plane.local_coords(f, &self.point).expect("point lies on the plane");
        let g_at = g.eval(f, t[0], t[1]);
        match self.branch {
            Branch::TotalDegree => {
                if g.total_degree(f) > Some(params.total_degree()) {
                    return Outcome::reject("plane answer exceeds total degree md");
                }
                match (omsg.kind == VALUE).then(|| omsg.as_scalar()).flatten() {
                    None => Outcome::reject("malformed point answer"),
                    Some(z) if z == g_at => Outcome::Accept,
                    Some(_) => Outcome::reject("plane and point disagree"),
                }
            }
            Branch::AxisParallel => {
                if omsg.kind != UNIVARIATE || omsg.body.is_empty() {
                    return Outcome::reject("malformed line answer");
                }
                if uni::degree(f, &omsg.body).unwrap_or(0) > params.d {
                    return Outcome::reject("line answer exceeds degree d");
                }
                let a = self.point[self.axis.unwrap()];
                if uni::eval(f, &omsg.body, a) == g_at {
                    Outcome::Accept
                } else {
                    Outcome::reject("plane and line disagree")
                }
            }
        }
    }
}

/// Bivariate polynomial as a list of coefficients of `u^i v^j` graded by total degree:
/// `1, u, v, u^2, uv, v^2, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bivariate {
    pub degree: usize,
    pub coeffs: Vec<Fe>,
}

fn triangular(t: usize) -> usize {
    (t + 1) * (t + 2) / 2
}

impl Bivariate {
    /// From a dense polynomial in two variables; coefficients above `degree` are dropped.
    pub fn from_poly(p: &MultiPoly, degree: usize) -> Bivariate {
        assert_eq!(p.num_vars(), 2);
        let mut coeffs = Vec::with_capacity(triangular(degree));
        for t in 0..=degree {
            for j in 0..=t {
                coeffs.push(p.coeff(&[t - j, j]));
            }
        }
        Bivariate { degree, coeffs }
    }

    pub fn decode(m: &Msg) -> Option<Bivariate> {
        if m.kind != BIVARIATE {
            return None;
        }
        let degree = (0..=m.body.len()).find(|&t| triangular(t) >= m.body.len())?;
        (triangular(degree) == m.body.len()).then(|| Bivariate { degree, coeffs: m.body.clone() })
    }

    pub fn to_msg(&self) -> Msg {
        Msg::new(BIVARIATE, self.coeffs.clone())
    }

    pub fn eval(&self, f: &Field, u: Fe, v: Fe) -> Fe {
        let pu = f.powers(u, self.degree);
        let pv = f.powers(v, self.degree);
        let mut acc = f.zero();
        let mut idx = 0;
        for t in 0..=self.degree {
            for j in 0..=t {
                acc = f.add(acc, f.mul(self.coeffs[idx], f.mul(pu[t - j], pv[j])));
                idx += 1;
            }
        }
        acc
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn total_degree(&self, f: &Field) -> Option<usize> {
        let last = self.coeffs.iter().rposition(|c| *c != f.zero())?;
        (0..=self.degree).find(|&t| triangular(t) > last)
    }
}

/// A classical prover: its answer depends only on the question and the shared randomness.
///
/// The interface is deliberately narrow: a strategy never sees the other prover's question
/// or answer.
pub trait LdtStrategy {
    fn respond(&self, f: &Field, q: &LdtQuestion, shared: &mut dyn Coins) -> Msg;
}

/// Answers according to `Q` (exact restrictions, whatever their degree).
pub fn honest_answer(q: &MultiPoly, question: &LdtQuestion) -> Msg {
    let f = q.field();
    match question {
        LdtQuestion::Plane(s) => {
            let g = q.restrict_flat(s);
            let t = g.total_degree().unwrap_or(0);
            Bivariate::from_poly(&g, t).to_msg()
        }
        LdtQuestion::Point(a) => Msg::scalar(VALUE, q.eval(a)),
        LdtQuestion::Line(l) => {
            let h = q.restrict_flat(l);
            let mut c = h.coeffs().to_vec();
            let deg = uni::degree(f, &c).unwrap_or(0);
            c.truncate(deg + 1);
            Msg::new(UNIVARIATE, c)
        }
    }
}

#[derive(Clone, Debug)]
pub struct HonestStrategy {
    pub q: MultiPoly,
}

impl LdtStrategy for HonestStrategy {
    fn respond(&self, _f: &Field, question: &LdtQuestion, _shared: &mut dyn Coins) -> Msg {
        honest_answer(&self.q, question)
    }
}

pub fn make_honest_strategy(q: MultiPoly) -> HonestStrategy {
    HonestStrategy { q }
}

/// Picks one `Q` per round from the shared randomness, with integer weights.
#[derive(Clone, Debug)]
pub struct MixtureStrategy {
    dist: Vec<(u64, MultiPoly)>,
    total: u64,
}

impl MixtureStrategy {
    pub fn pick(&self, shared: &mut dyn Coins) -> &MultiPoly {
        let mut r = shared.below(self.total);
        for (w, q) in &self.dist {
            if r < *w {
                return q;
            }
            r -= w;
        }
        unreachable!("weights sum to total")
    }
}

impl LdtStrategy for MixtureStrategy {
    fn respond(&self, _f: &Field, question: &LdtQuestion, shared: &mut dyn Coins) -> Msg {
        honest_answer(self.pick(shared), question)
    }
}

/// The same mixture for both provers.
pub fn make_mixture_strategy(dist: Vec<(u64, MultiPoly)>) -> Result<(MixtureStrategy, MixtureStrategy), LdtError> {
    let dist: Vec<(u64, MultiPoly)> = dist.into_iter().filter(|(w, _)| *w > 0).collect();
    if dist.is_empty() {
        return Err(LdtError::EmptyMixture);
    }
    let total = dist.iter().map(|(w, _)| w).sum();
    let s = MixtureStrategy { dist, total };
    Ok((s.clone(), s))
}

/// Summary of a round beyond its transcript.
#[derive(Clone, Debug)]
pub struct LdtRound {
    pub challenge: LdtChallenge,
    pub run: Run,
}

/// Shared randomness handed to both provers: each gets an identical copy of the stream.
pub trait SharedRandomness {
    fn fork(&mut self) -> Box<dyn Coins>;
}

/// Runs one round. Each prover is given its own replay of the same shared randomness.
pub fn ldt_round(
    f: &Field,
    params: &LdtParams,
    strategies: [&dyn LdtStrategy; 2],
    shared: &mut dyn SharedRandomness,
    coins: &mut dyn Coins,
) -> Result<LdtRound, LdtError> {
    params.validate(f)?;
    let challenge = LdtChallenge::sample(f, params, coins);
    let questions = challenge.questions(f);
    let mut events = Vec::new();
    let mut answers = Vec::with_capacity(2);
    for (i, (s, q)) in strategies.iter().zip(&questions).enumerate() {
        events.push(Event::ToProver { ch: i as u8, msg: q.to_msg(f) });
        let mut sh = shared.fork();
        let a = s.respond(f, q, sh.as_mut());
        events.push(Event::FromProver { ch: i as u8, msg: a.clone() });
        answers.push(a);
    }
    let outcome = challenge.decide(f, params, [&answers[0], &answers[1]]);
    Ok(LdtRound { challenge, run: Run { events, outcome } })
}

/// Shared randomness from a fixed seed: every fork replays the same stream.
pub struct SeededShared(pub crate::rng::RngStream);

impl SharedRandomness for SeededShared {
    fn fork(&mut self) -> Box<dyn Coins> {
        Box::new(self.0.clone())
    }
}

/// Shared randomness drawn from a cloneable source such as an enumerating tape: the first
/// fork draws, later forks replay the recorded values. Used to include the provers' coins in
/// exact distributions.
pub struct RecordedShared<C> {
    src: C,
    log: Rc<RefCell<Vec<(u64, u64)>>>,
    forks: usize,
}

impl<C: Coins + Clone + 'static> RecordedShared<C> {
    pub fn new(src: C) -> RecordedShared<C> {
        RecordedShared { src, log: Default::default(), forks: 0 }
    }
}

struct Recording<C> {
    src: Option<C>,
    log: Rc<RefCell<Vec<(u64, u64)>>>,
    pos: usize,
}

impl<C: Coins> Coins for Recording<C> {
    fn below(&mut self, n: u64) -> u64 {
        match &mut self.src {
            Some(src) => {
                let v = src.below(n);
                self.log.borrow_mut().push((n, v));
                v
            }
            None => {
                let (rn, v) = self.log.borrow()[self.pos];
                assert_eq!(rn, n, "replayed shared randomness with a different radix");
                self.pos += 1;
                v
            }
        }
    }
}

impl<C: Coins + Clone + 'static> SharedRandomness for RecordedShared<C> {
    fn fork(&mut self) -> Box<dyn Coins> {
        self.forks += 1;
        let src = (self.forks == 1).then(|| self.src.clone());
        Box::new(Recording { src, log: self.log.clone(), pos: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{exact_distribution, RngStream, Tape};
    use num_rational::Ratio;

    fn f(p: u64) -> Field {
        Field::prime(p).unwrap()
    }

    fn poly(field: &Field, degs: &[usize], terms: &[(&[usize], i64)]) -> MultiPoly {
        let mut q = MultiPoly::zero(field, degs);
        for (e, c) in terms {
            q.set_coeff(e, field.from_int(*c));
        }
        q
    }

    fn exact_accept(field: &Field, params: &LdtParams, s: [&dyn LdtStrategy; 2]) -> Ratio<u128> {
        let dist = exact_distribution(
            |t: &mut Tape| {
                let mut shared = RecordedShared::new(t.clone());
                ldt_round(field, params, s, &mut shared, t).unwrap().run.outcome.is_accept()
            },
            1_000_000,
        )
        .unwrap();
        dist.get(&true).copied().unwrap_or(Ratio::new(0, 1))
    }

    fn mc_accept(field: &Field, params: &LdtParams, s: [&dyn LdtStrategy; 2], n: u64, seed: u64) -> u64 {
        let root = RngStream::from_seed(seed);
        (0..n)
            .filter(|&i| {
                let mut shared = SeededShared(root.child_idx("shared", i));
                let mut v = root.child_idx("verifier", i);
                ldt_round(field, params, s, &mut shared, &mut v).unwrap().run.outcome.is_accept()
            })
            .count() as u64
    }

    fn within_5_sigma(count: u64, n: u64, p: f64) -> bool {
        let mean = p * n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 5.0 * sd + 1e-9
    }

    fn to_f64(r: Ratio<u128>) -> f64 {
        *r.numer() as f64 / *r.denom() as f64
    }

    #[test]
    fn bivariate_encoding() {
        let field = f(17);
        let p = poly(&field, &[2, 2], &[(&[0, 0], 1), (&[1, 1], 3), (&[0, 2], 5)]);
        let b = Bivariate::from_poly(&p, 2);
        assert_eq!(b.coeffs.len(), 6);
        assert_eq!(b.total_degree(&field), Some(2));
        let back = Bivariate::decode(&b.to_msg()).unwrap();
        for (u, v) in [(0, 0), (3, 7), (16, 2)] {
            let (u, v) = (field.from_int(u), field.from_int(v));
            assert_eq!(back.eval(&field, u, v), p.eval(&[u, v]));
        }
        assert!(Bivariate::decode(&Msg::new(BIVARIATE, vec![Fe(0); 4])).is_none());
    }

    #[test]
    fn honest_accepted_exhaustively_f5() {
        let field = f(5);
        let params = LdtParams { m: 2, d: 1 };
        let q = MultiPoly::random(&field, &[1, 1], &mut RngStream::from_seed(1));
        let s = make_honest_strategy(q);
        let dist = exact_distribution(
            |t: &mut Tape| {
                let mut shared = RecordedShared::new(t.clone());
                let r = ldt_round(&field, &params, [&s, &s], &mut shared, t).unwrap();
                (r.challenge.swap, r.challenge.branch, r.run.outcome.is_accept())
            },
            10_000,
        )
        .unwrap();
        let quarter = Ratio::new(1, 4);
        for swap in [false, true] {
            for branch in [Branch::TotalDegree, Branch::AxisParallel] {
                assert_eq!(dist[&(swap, branch, true)], quarter);
            }
        }
        assert_eq!(dist.len(), 4);
    }

    #[test]
    fn honest_accepted_m3() {
        let field = f(17);
        let params = LdtParams { m: 3, d: 2 };
        let q = MultiPoly::random(&field, &[2, 2, 2], &mut RngStream::from_seed(2));
        let s = make_honest_strategy(q);
        assert_eq!(mc_accept(&field, &params, [&s, &s], 1000, 3), 1000);
    }

    #[test]
    fn excess_degree_caught_on_axis_lines() {
        let field = f(17);
        let params = LdtParams { m: 2, d: 2 };
        // X1^3 (X2 - 3) + X1 X2^2 + 4: degree 3 in X1, total degree 4 = md
        let q = poly(&field, &[3, 2], &[(&[3, 1], 1), (&[3, 0], 14), (&[1, 2], 1), (&[0, 0], 4)]);
        assert_eq!(q.total_degree(), Some(4));
        // lines along axis 0 through (., x2) have degree 3 unless the X1^3 coefficient vanishes
        let catching = (0..17)
            .filter(|&x2| {
                let l = Flat::axis_line(&field, &[field.zero(), field.from_int(x2)], 0);
                uni::degree(&field, q.restrict_flat(&l).coeffs()) == Some(3)
            })
            .count() as u128;
        assert_eq!(catching, 16);
        let want_reject = Ratio::new(catching, 2 * 2 * 17);
        let s = make_honest_strategy(q);
        let exact = exact_accept(&field, &params, [&s, &s]);
        assert_eq!(Ratio::new(1, 1) - exact, want_reject);
        let n = 4000;
        let rejected = n - mc_accept(&field, &params, [&s, &s], n, 9);
        assert!(rejected > 0);
        assert!(within_5_sigma(rejected, n, to_f64(want_reject)), "{rejected}");
    }

    #[test]
    fn different_polynomials_rejected_at_disagreement_rate() {
        let field = f(7);
        let params = LdtParams { m: 2, d: 1 };
        let q1 = poly(&field, &[1, 1], &[(&[1, 1], 1), (&[0, 0], 2)]);
        let q2 = poly(&field, &[1, 1], &[(&[1, 1], 1), (&[1, 0], 1)]);
        let mut disagree = 0u128;
        for a in 0..7 {
            for b in 0..7 {
                let x = [field.from_int(a), field.from_int(b)];
                disagree += u128::from(q1.eval(&x) != q2.eval(&x));
            }
        }
        let (s1, s2) = (make_honest_strategy(q1), make_honest_strategy(q2));
        let exact = exact_accept(&field, &params, [&s1, &s2]);
        assert_eq!(Ratio::new(1, 1) - exact, Ratio::new(disagree, 49));
        let n = 3000;
        let rejected = n - mc_accept(&field, &params, [&s1, &s2], n, 4);
        assert!(within_5_sigma(rejected, n, disagree as f64 / 49.0));
    }

    /// Flips the first coin, mirroring the role assignment.
    struct MirrorFirst<C> {
        inner: C,
        first: bool,
    }

    impl<C: Coins> Coins for MirrorFirst<C> {
        fn below(&mut self, n: u64) -> u64 {
            let v = self.inner.below(n);
            if std::mem::take(&mut self.first) {
                assert_eq!(n, 2);
                1 - v
            } else {
                v
            }
        }
    }

    #[test]
    fn swapping_strategies_mirrors_verdicts() {
        let field = f(13);
        let params = LdtParams { m: 3, d: 1 };
        let mut c = RngStream::from_seed(8);
        let q1 = MultiPoly::random(&field, &[1, 1, 1], &mut c);
        let q2 = MultiPoly::random(&field, &[2, 1, 1], &mut c);
        let (s1, s2) = (make_honest_strategy(q1), make_honest_strategy(q2));
        let root = RngStream::from_seed(10);
        for i in 0..300 {
            let mut sh = SeededShared(root.child_idx("shared", i));
            let a = ldt_round(&field, &params, [&s1, &s2], &mut sh, &mut root.child_idx("v", i)).unwrap();
            let mut mirrored = MirrorFirst { inner: root.child_idx("v", i), first: true };
            let b = ldt_round(&field, &params, [&s2, &s1], &mut sh, &mut mirrored).unwrap();
            assert_eq!(a.run.outcome, b.run.outcome);
            assert_ne!(a.challenge.swap, b.challenge.swap);
        }
    }

    #[test]
    fn singleton_mixture_is_honest() {
        let field = f(17);
        let params = LdtParams { m: 3, d: 2 };
        let q = MultiPoly::random(&field, &[2, 2, 2], &mut RngStream::from_seed(5));
        let h = make_honest_strategy(q.clone());
        let (m1, m2) = make_mixture_strategy(vec![(3, q)]).unwrap();
        let root = RngStream::from_seed(6);
        for i in 0..50 {
            let a = ldt_round(&field, &params, [&h, &h], &mut SeededShared(root.child_idx("s", i)), &mut root.child_idx("v", i)).unwrap();
            let b = ldt_round(&field, &params, [&m1, &m2], &mut SeededShared(root.child_idx("s", i)), &mut root.child_idx("v", i)).unwrap();
            assert_eq!(a.run.events, b.run.events);
        }
        assert_eq!(make_mixture_strategy(vec![]).unwrap_err(), LdtError::EmptyMixture);
    }

    #[test]
    fn mixture_acceptance_is_weighted_average() {
        let field = f(5);
        let params = LdtParams { m: 2, d: 1 };
        let good = poly(&field, &[1, 1], &[(&[1, 1], 2), (&[0, 1], 1)]);
        let bad = poly(&field, &[2, 1], &[(&[2, 0], 1), (&[0, 1], 3)]);
        let (hg, hb) = (make_honest_strategy(good.clone()), make_honest_strategy(bad.clone()));
        let pg = exact_accept(&field, &params, [&hg, &hg]);
        let pb = exact_accept(&field, &params, [&hb, &hb]);
        assert_eq!(pg, Ratio::new(1, 1));
        assert!(pb < Ratio::new(1, 1));
        let (m1, m2) = make_mixture_strategy(vec![(1, good), (2, bad.clone())]).unwrap();
        let pm = exact_accept(&field, &params, [&m1, &m2]);
        assert_eq!(pm, (pg + pb * 2) / 3);
        let n = 3000;
        let acc = mc_accept(&field, &params, [&m1, &m2], n, 12);
        assert!(within_5_sigma(acc, n, to_f64(pm)));
        // all weight on high-degree polynomials: the per-polynomial rate
        let (b1, b2) = make_mixture_strategy(vec![(5, bad)]).unwrap();
        assert_eq!(exact_accept(&field, &params, [&b1, &b2]), pb);
    }

    #[test]
    fn field_must_exceed_md() {
        let field = f(5);
        let q = MultiPoly::zero(&field, &[1, 1, 1]);
        let s = make_honest_strategy(q);
        let params = LdtParams { m: 3, d: 2 };
        let r = ldt_round(&field, &params, [&s, &s], &mut SeededShared(RngStream::from_seed(0)), &mut RngStream::from_seed(0));
        assert!(matches!(r, Err(LdtError::Params(_))));
    }
}
