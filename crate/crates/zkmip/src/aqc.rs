//! Algebraic query complexity of polynomial summation, checked by linear algebra.
//!
//! `Z` ranges over polynomials in `m + k` variables with individual degree `d` in the first
//! `m` and `d'` in the last `k`. Both point values `Z(q)` and partial sums
//! `sum over y in G^k of Z(a, y)` are linear functionals of the coefficient vector of `Z`,
//! so "a query set determines a combination of partial sums" and "query answers are
//! independent of the partial sums" become rank statements about matrices of those rows.
//!
//! Also here: closed forms for sums over `H^m` when `P` is multilinear or `H` is a group.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, Field, GroupKind, Subset};
use crate::linalg::{kernel, mat_mul, rank, solve, transpose, Matrix};
use crate::poly::{lagrange_at, uni, MultiPoly};
use crate::report::Check;
use crate::rng::{Coins, RngStream};
use crate::stats::chi2_contingency;

/// Above this many coefficients identities are checked on random `Z` instead of a basis.
pub const EXHAUSTIVE_DIM: usize = 6561;
/// Random `Z` used above [`EXHAUSTIVE_DIM`]; a false identity survives each with probability
/// at most `1/|F|`.
pub const RANDOM_IDENTITY_TRIALS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AqcError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
}

/// The space of `Z` with individual degrees `d` (first `m` variables) and `d'` (last `k`).
#[derive(Clone, Debug)]
pub struct ZSpace {
    pub field: Field,
    pub m: usize,
    pub k: usize,
    pub d: usize,
    pub d_prime: usize,
}

impl ZSpace {
    pub fn new(field: &Field, m: usize, k: usize, d: usize, d_prime: usize) -> ZSpace {
        ZSpace { field: field.clone(), m, k, d, d_prime }
    }

    pub fn degs(&self) -> Vec<usize> {
        let mut v = vec![self.d; self.m];
        v.extend(vec![self.d_prime; self.k]);
        v
    }

    pub fn dim(&self) -> usize {
        (self.d + 1).pow(self.m as u32) * (self.d_prime + 1).pow(self.k as u32)
    }

    /// The functional `Z -> Z(q)` in the coefficient order of [`MultiPoly`].
    pub fn eval_row(&self, q: &[Fe]) -> Vec<Fe> {
        assert_eq!(q.len(), self.m + self.k);
        let f = &self.field;
        let mut row = vec![f.one()];
        for (&x, deg) in q.iter().zip(self.degs()) {
            let p = f.powers(x, deg);
            row = row.iter().flat_map(|&a| p.iter().map(move |&b| f.mul(a, b))).collect();
        }
        row
    }

    /// The functional `Z -> sum over y in G^k of Z(a, y)`.
    pub fn partial_sum_row(&self, a: &[Fe], g: &Subset) -> Vec<Fe> {
        let f = &self.field;
        let mut acc = vec![f.zero(); self.dim()];
        for y in grid(g.elems(), self.k) {
            let q = [a, &y[..]].concat();
            f.axpy(&mut acc, f.one(), &self.eval_row(&q));
        }
        acc
    }

    pub fn random(&self, coins: &mut dyn Coins) -> MultiPoly {
        MultiPoly::random(&self.field, &self.degs(), coins)
    }
}

/// `set^n` in lexicographic order, first coordinate most significant.
pub fn grid(set: &[Fe], n: usize) -> Vec<Vec<Fe>> {
    (0..n).map(|_| set.iter().copied()).multi_cartesian_product().collect::<Vec<_>>().into_iter().pad_using(1, |_| vec![]).collect()
}

/// Inputs of the rank lower bound: combinations `C` of partial sums over `L^m` and a query set
/// `S` with decoding matrix `D` such that `C^T (partial sums) = D^T (values on S)` for all `Z`.
#[derive(Clone, Debug)]
pub struct RankInstance {
    pub space: ZSpace,
    pub g: Subset,
    pub k_set: Vec<Fe>,
    pub l_set: Vec<Fe>,
    pub s: Vec<Vec<Fe>>,
    /// `|L|^m` rows, one column per combination.
    pub c: Matrix,
    /// `|S|` rows, one column per combination.
    pub dmat: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LowerBound {
    pub size: usize,
    pub rank_bc: usize,
    /// `min{d' - |G| + 2, |G|}`.
    pub width: usize,
    pub floor: usize,
    pub holds: bool,
}

fn rows_for(space: &ZSpace, points: &[Vec<Fe>]) -> Matrix {
    points.iter().map(|q| space.eval_row(q)).collect()
}

fn sum_rows(space: &ZSpace, g: &Subset, alphas: &[Vec<Fe>]) -> Matrix {
    alphas.iter().map(|a| space.partial_sum_row(a, g)).collect()
}

fn columns(m: &Matrix, rows: usize) -> usize {
    m.first().map_or(if rows == 0 { usize::MAX } else { 0 }, |r| r.len())
}

/// Expresses each column of `Z` on `L^m` in the Lagrange basis of `K^m`.
fn lagrange_matrix(f: &Field, k_set: &[Fe], l_set: &[Fe], m: usize) -> Result<Matrix, AqcError> {
    let per: Vec<Vec<Fe>> = l_set
        .iter()
        .map(|&x| lagrange_at(f, k_set, x))
        .collect::<Result<_, _>>()
        .map_err(|e| AqcError::Invalid(e.to_string()))?;
    let idx: Vec<usize> = (0..k_set.len()).collect();
    let lidx: Vec<usize> = (0..l_set.len()).collect();
    let ks = (0..m).map(|_| idx.iter().copied()).multi_cartesian_product().pad_using(1, |_| vec![]);
    Ok(ks
        .map(|beta| {
            (0..m)
                .map(|_| lidx.iter().copied())
                .multi_cartesian_product()
                .pad_using(1, |_| vec![])
                .map(|alpha| beta.iter().zip(&alpha).fold(f.one(), |acc, (&b, &a)| f.mul(acc, per[a][b])))
                .collect()
        })
        .collect())
}

impl RankInstance {
    fn validate(&self) -> Result<(), AqcError> {
        let sp = &self.space;
        let bad = |s: String| Err(AqcError::Invalid(s));
        if self.k_set.len() != sp.d + 1 {
            return bad(format!("|K| = {} but d + 1 = {}", self.k_set.len(), sp.d + 1));
        }
        if !self.k_set.iter().all(|x| self.l_set.contains(x)) || !self.l_set.iter().all_unique() || !self.k_set.iter().all_unique() {
            return bad("K must be a subset of L, both without repeats".into());
        }
        if sp.d_prime + 2 < self.g.len() {
            return bad(format!("d' = {} below |G| - 2", sp.d_prime));
        }
        let lm = self.l_set.len().pow(sp.m as u32);
        let ell = columns(&self.c, lm);
        if self.c.len() != lm || self.dmat.len() != self.s.len() || self.c.iter().chain(&self.dmat).any(|r| r.len() != ell) {
            return bad("C must be |L|^m by l and D must be |S| by l".into());
        }
        if self.s.iter().any(|q| q.len() != sp.m + sp.k) {
            return bad("query points must have m + k coordinates".into());
        }
        Ok(())
    }

    /// Whether `C^T (partial sums) = D^T (values on S)` holds for every `Z`: exactly on the
    /// monomial basis up to [`EXHAUSTIVE_DIM`], on random `Z` above.
    pub fn identity_holds(&self, coins: &mut dyn Coins) -> bool {
        let sp = &self.space;
        let f = &sp.field;
        let alphas = grid(&self.l_set, sp.m);
        let ell = columns(&self.c, alphas.len());
        if ell == 0 || ell == usize::MAX {
            return true;
        }
        let p = sum_rows(sp, &self.g, &alphas);
        let e = rows_for(sp, &self.s);
        if sp.dim() <= EXHAUSTIVE_DIM {
            let lhs = mat_mul(f, &transpose(&self.c), &p);
            let rhs = if e.is_empty() { vec![vec![f.zero(); sp.dim()]; ell] } else { mat_mul(f, &transpose(&self.dmat), &e) };
            return lhs == rhs;
        }
        (0..RANDOM_IDENTITY_TRIALS).all(|_| {
            let z = f.random_vec(sp.dim(), coins);
            let ps: Vec<Fe> = p.iter().map(|r| f.dot(r, &z)).collect();
            let es: Vec<Fe> = e.iter().map(|r| f.dot(r, &z)).collect();
            (0..ell).all(|i| {
                let l = f.sum(self.c.iter().zip(&ps).map(|(r, &v)| f.mul(r[i], v)));
                let r = f.sum(self.dmat.iter().zip(&es).map(|(r, &v)| f.mul(r[i], v)));
                l == r
            })
        })
    }
}

/// Computes `rank(BC)` and the floor `rank(BC) min{d' - |G| + 2, |G|}^k`, and reports whether
/// `|S|` reaches it. Errors if `(C, D)` fails the summation identity.
pub fn check_lower_bound(inst: &RankInstance) -> Result<LowerBound, AqcError> {
    inst.validate()?;
    let sp = &inst.space;
    if !inst.identity_holds(&mut RngStream::from_seed(0).child("aqc.identity")) {
        return Err(AqcError::Invalid("C and D do not satisfy the summation identity".into()));
    }
    let b = lagrange_matrix(&sp.field, &inst.k_set, &inst.l_set, sp.m)?;
    let ell = columns(&inst.c, inst.c.len());
    let rank_bc = if ell == 0 || ell == usize::MAX { 0 } else { rank(&sp.field, &mat_mul(&sp.field, &b, &inst.c)) };
    let width = (sp.d_prime + 2 - inst.g.len()).min(inst.g.len());
    let floor = rank_bc * width.pow(sp.k as u32);
    Ok(LowerBound { size: inst.s.len(), rank_bc, width, floor, holds: inst.s.len() >= floor })
}

/// Every combination of partial sums over `L^m` that `S` determines: a basis of pairs
/// `(C, D)` read off the kernel of `[partial sums; -values]^T`.
pub fn maximal_decoders(space: &ZSpace, g: &Subset, l_set: &[Fe], s: &[Vec<Fe>]) -> (Matrix, Matrix) {
    let f = &space.field;
    let alphas = grid(l_set, space.m);
    let mut stacked = sum_rows(space, g, &alphas);
    stacked.extend(rows_for(space, s).into_iter().map(|r| r.into_iter().map(|x| f.neg(x)).collect::<Vec<_>>()));
    let ker = kernel(f, &transpose(&stacked), stacked.len());
    let c: Matrix = (0..alphas.len()).map(|i| ker.iter().map(|v| v[i]).collect()).collect();
    let d: Matrix = (0..s.len()).map(|i| ker.iter().map(|v| v[alphas.len() + i]).collect()).collect();
    (c, d)
}

/// Decoding coefficients `D` with `sum_a c_a (partial sum at a) = sum_q D_q Z(q)` for all `Z`.
pub fn find_decoder(space: &ZSpace, g: &Subset, l_set: &[Fe], c: &[Fe], s: &[Vec<Fe>]) -> Option<Vec<Fe>> {
    let f = &space.field;
    let alphas = grid(l_set, space.m);
    assert_eq!(c.len(), alphas.len());
    let p = sum_rows(space, g, &alphas);
    let mut target = vec![f.zero(); space.dim()];
    for (row, &ci) in p.iter().zip(c) {
        f.axpy(&mut target, ci, row);
    }
    if s.is_empty() {
        return target.iter().all(|x| *x == f.zero()).then(Vec::new);
    }
    solve(f, &transpose(&rows_for(space, s)), &target)
}

/// Smallest subset of `candidates` (up to `max_size` points) that determines the combination
/// `c`, by exhaustive search in order of size.
pub fn min_query_set(
    space: &ZSpace,
    g: &Subset,
    l_set: &[Fe],
    c: &[Fe],
    candidates: &[Vec<Fe>],
    max_size: usize,
) -> Option<Vec<Vec<Fe>>> {
    (0..=max_size.min(candidates.len())).find_map(|size| {
        candidates.iter().cloned().combinations(size).find(|s| find_decoder(space, g, l_set, c, s).is_some())
    })
}

/// The point `(gamma/|G|, ..., gamma/|G|)` in `k` coordinates and the scale `|G|^k`: for `Z`
/// multilinear in the last `k` variables, `sum over G^k of Z(a, y) = |G|^k Z(a, point)`.
pub fn multilinear_attack_point(f: &Field, g: &Subset, k: usize) -> Result<(Vec<Fe>, Fe), AqcError> {
    let size = f.from_int(g.len() as i64);
    let inv = f.inv(size).map_err(|_| AqcError::Hypothesis(format!("characteristic divides |G| = {}", g.len())))?;
    let mean = f.mul(f.sum(g.elems().iter().copied()), inv);
    Ok((vec![mean; k], f.pow(size, k as u64)))
}

/// Whether the single query `(a, attack point)` determines the partial sum at `a = 0^m` for
/// the given `d'`, and with which coefficient.
pub fn single_query_decoder(field: &Field, g: &Subset, k: usize, d_prime: usize) -> Result<Option<Fe>, AqcError> {
    let space = ZSpace::new(field, 1, k, 1, d_prime);
    let (pt, _) = multilinear_attack_point(field, g, k)?;
    let l_set = field.first_elements(2);
    let c = vec![field.one(), field.zero()];
    let q = [vec![field.zero()], pt].concat();
    Ok(find_decoder(&space, g, &l_set, &c, &[q]).map(|d| d[0]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndependenceVerdict {
    /// `d' >= 2(|G| - 1)` and `|Q| < |G|^k`.
    pub hypothesis_met: bool,
    pub rank_queries: usize,
    pub rank_sums: usize,
    pub rank_joint: usize,
    pub independent: bool,
}

/// Points `a` whose partial sums span all partial-sum functionals: `K^m` for `K` the first
/// `d + 1` field elements (every other `a` is a Lagrange combination of these).
pub fn sum_points(space: &ZSpace) -> Vec<Vec<Fe>> {
    grid(&space.field.first_elements((space.d + 1).min(space.field.order() as usize)), space.m)
}

/// Rank criterion: the values on `q` are independent of all partial sums iff
/// `rank(joint) = rank(values) + rank(sums)`.
pub fn check_independence(space: &ZSpace, g: &Subset, q: &[Vec<Fe>]) -> IndependenceVerdict {
    let f = &space.field;
    let bq = rows_for(space, q);
    let bs = sum_rows(space, g, &sum_points(space));
    let joint: Matrix = bq.iter().chain(&bs).cloned().collect();
    let (rq, rs, rj) = (rank(f, &bq), rank(f, &bs), rank(f, &joint));
    let hypothesis_met = space.d_prime + 2 >= 2 * g.len() && q.len() < g.len().pow(space.k as u32);
    IndependenceVerdict { hypothesis_met, rank_queries: rq, rank_sums: rs, rank_joint: rj, independent: rj == rq + rs }
}

/// Empirical independence: samples uniform `Z`, tabulates (values on `q`) against (partial
/// sums on [`sum_points`]) and returns the chi-square p-value.
pub fn chi2_independence(space: &ZSpace, g: &Subset, q: &[Vec<Fe>], samples: usize, coins: &mut dyn Coins) -> f64 {
    let points = sum_points(space);
    let rows_q = rows_for(space, q);
    let rows_s = sum_rows(space, g, &points);
    let f = &space.field;
    let mut xs: HashMap<Vec<Fe>, usize> = HashMap::new();
    let mut ys: HashMap<Vec<Fe>, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for _ in 0..samples {
        let z = f.random_vec(space.dim(), coins);
        let x: Vec<Fe> = rows_q.iter().map(|r| f.dot(r, &z)).collect();
        let y: Vec<Fe> = rows_s.iter().map(|r| f.dot(r, &z)).collect();
        let n = xs.len();
        let i = *xs.entry(x).or_insert(n);
        let n = ys.len();
        let j = *ys.entry(y).or_insert(n);
        *cells.entry((i, j)).or_default() += 1;
    }
    let mut table = vec![vec![0u64; ys.len()]; xs.len()];
    for ((i, j), c) in cells {
        table[i][j] = c;
    }
    chi2_contingency(&table)
}

// ---------------------------------------------------------------------------------------
// closed forms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    /// Multilinear `P`, characteristic not dividing `|H|`: `P(gamma/|H| + v) |H|^m`.
    MultilinearMean,
    /// Multilinear `P`, characteristic dividing `|H|`: `kappa gamma^m`, `kappa` the coefficient
    /// of `X_1 ... X_m`.
    MultilinearTop,
    /// `H` a multiplicative group, degrees below `|H|`, no shift: `P(0) |H|^m`.
    MultiplicativeGroup,
    /// `H` an additive group, degrees below `|H|`: `kappa a0^m`, `kappa` the coefficient of
    /// `(X_1 ... X_m)^(|H|-1)` and `a0` the linear coefficient of `prod (X - h)`.
    AdditiveGroup,
}

impl ClosedFormKind {
    pub const ALL: [ClosedFormKind; 4] =
        [ClosedFormKind::MultilinearMean, ClosedFormKind::MultilinearTop, ClosedFormKind::MultiplicativeGroup, ClosedFormKind::AdditiveGroup];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedForm {
    pub kind: ClosedFormKind,
    pub formula: Fe,
    pub brute: Fe,
}

impl ClosedForm {
    pub fn agrees(&self) -> bool {
        self.formula == self.brute
    }
}

/// `sum over a in H^m of P(a + v)` by enumeration.
pub fn brute_force_sum(p: &MultiPoly, h: &Subset, v: &[Fe]) -> Fe {
    let f = p.field();
    f.sum(grid(h.elems(), p.num_vars()).into_iter().map(|a| {
        let x: Vec<Fe> = a.iter().zip(v).map(|(&ai, &vi)| f.add(ai, vi)).collect();
        p.eval(&x)
    }))
}

pub fn is_multiplicative_group(f: &Field, h: &Subset) -> bool {
    let e = h.elems();
    !e.is_empty() && e.contains(&f.one()) && e.iter().all(|&a| a != f.zero() && e.iter().all(|&b| h.contains(f.mul(a, b))))
}

pub fn is_additive_group(f: &Field, h: &Subset) -> bool {
    let e = h.elems();
    e.contains(&f.zero()) && e.iter().all(|&a| h.contains(f.neg(a)) && e.iter().all(|&b| h.contains(f.add(a, b))))
}

fn max_degree(p: &MultiPoly) -> usize {
    (0..p.num_vars()).filter_map(|i| p.individual_degree(i)).max().unwrap_or(0)
}

/// Linear coefficient of `prod over h in H of (X - h)`.
pub fn subspace_linear_term(f: &Field, h: &Subset) -> Fe {
    let mut poly = vec![f.one()];
    for &x in h.elems() {
        poly = uni::mul(f, &poly, &[f.neg(x), f.one()]);
    }
    poly.get(1).copied().unwrap_or(f.zero())
}

fn hypotheses(kind: ClosedFormKind, p: &MultiPoly, h: &Subset, v: &[Fe]) -> Result<(), AqcError> {
    let f = p.field();
    let size_in_field = f.from_int(h.len() as i64);
    let fail = |s: &str| Err(AqcError::Hypothesis(format!("{kind:?}: {s}")));
    if v.len() != p.num_vars() {
        return Err(AqcError::Invalid(format!("shift has {} coordinates, P has {} variables", v.len(), p.num_vars())));
    }
    if h.is_empty() {
        return fail("H is empty");
    }
    match kind {
        ClosedFormKind::MultilinearMean | ClosedFormKind::MultilinearTop => {
            if max_degree(p) > 1 {
                return fail("P is not multilinear");
            }
            let divides = size_in_field == f.zero();
            if divides != (kind == ClosedFormKind::MultilinearTop) {
                return fail(if divides { "characteristic divides |H|" } else { "characteristic does not divide |H|" });
            }
        }
        ClosedFormKind::MultiplicativeGroup => {
            if !is_multiplicative_group(f, h) {
                return fail("H is not a multiplicative group");
            }
            if max_degree(p) >= h.len() {
                return fail("an individual degree reaches |H|");
            }
            if v.iter().any(|x| *x != f.zero()) {
                return fail("shifted sums over a multiplicative group have no closed form here");
            }
        }
        ClosedFormKind::AdditiveGroup => {
            if !is_additive_group(f, h) {
                return fail("H is not an additive group");
            }
            if max_degree(p) >= h.len() {
                return fail("an individual degree reaches |H|");
            }
        }
    }
    Ok(())
}

/// The closed form of `kind` without checking its hypotheses.
pub fn closed_form_unchecked(kind: ClosedFormKind, p: &MultiPoly, h: &Subset, v: &[Fe]) -> Fe {
    let f = p.field();
    let m = p.num_vars();
    let size = f.from_int(h.len() as i64);
    let gamma = f.sum(h.elems().iter().copied());
    match kind {
        ClosedFormKind::MultilinearMean => {
            let mean = f.mul(gamma, f.inv(size).unwrap_or(f.zero()));
            let x: Vec<Fe> = v.iter().map(|&vi| f.add(mean, vi)).collect();
            f.mul(p.eval(&x), f.pow(size, m as u64))
        }
        ClosedFormKind::MultilinearTop => f.mul(p.coeff(&vec![1; m]), f.pow(gamma, m as u64)),
        ClosedFormKind::MultiplicativeGroup => f.mul(p.eval(&vec![f.zero(); m]), f.pow(size, m as u64)),
        ClosedFormKind::AdditiveGroup => {
            let kappa = p.coeff(&vec![h.len() - 1; m]);
            f.mul(kappa, f.pow(subspace_linear_term(f, h), m as u64))
        }
    }
}

/// The closed form of `kind` next to the brute-force sum; errors if `kind`'s hypotheses fail.
pub fn closed_form_for(kind: ClosedFormKind, p: &MultiPoly, h: &Subset, v: &[Fe]) -> Result<ClosedForm, AqcError> {
    hypotheses(kind, p, h, v)?;
    Ok(ClosedForm { kind, formula: closed_form_unchecked(kind, p, h, v), brute: brute_force_sum(p, h, v) })
}

/// The first applicable closed form (group structure first, then multilinearity).
pub fn closed_form_sum(p: &MultiPoly, h: &Subset, v: &[Fe]) -> Result<ClosedForm, AqcError> {
    let order = [
        ClosedFormKind::MultiplicativeGroup,
        ClosedFormKind::AdditiveGroup,
        ClosedFormKind::MultilinearMean,
        ClosedFormKind::MultilinearTop,
    ];
    let mut reasons = Vec::new();
    for kind in order {
        match closed_form_for(kind, p, h, v) {
            Ok(c) => return Ok(c),
            Err(AqcError::Hypothesis(r)) => reasons.push(r),
            Err(e) => return Err(e),
        }
    }
    Err(AqcError::Hypothesis(reasons.join("; ")))
}

/// `X^|H|` over `H` the nonzero elements of a proper subfield: equal to 1 on `H`, so its sum is
/// `|H|`, while the multiplicative-group formula would give `P(0) |H| = 0`.
pub fn degree_bound_counterexample(f: &Field, subfield_degree: u32) -> Result<(MultiPoly, Subset), AqcError> {
    let order = f.subfield_of_degree(subfield_degree).map_err(|e| AqcError::Invalid(e.to_string()))?.len() as u64 - 1;
    let h = f.subgroup_of_order(order, GroupKind::Multiplicative).map_err(|e| AqcError::Invalid(e.to_string()))?;
    let mut coeffs = vec![f.zero(); h.len() + 1];
    coeffs[h.len()] = f.one();
    Ok((MultiPoly::univariate(f, &coeffs), h))
}

// ---------------------------------------------------------------------------------------
// suites

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LowerBound,
    Independence,
    ClosedForms,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Suite, String> {
        match s {
            "lower-bound" => Ok(Suite::LowerBound),
            "independence" => Ok(Suite::Independence),
            "closed-forms" => Ok(Suite::ClosedForms),
            other => Err(format!("unknown suite {other}; expected lower-bound, independence or closed-forms")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::LowerBound => "lower-bound",
            Suite::Independence => "independence",
            Suite::ClosedForms => "closed-forms",
        })
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    let root = RngStream::from_seed(seed).child(&suite.to_string());
    match suite {
        Suite::LowerBound => lower_bound_suite(&root),
        Suite::Independence => independence_suite(&root, 3000),
        Suite::ClosedForms => closed_form_suite(&root, 100),
    }
}

fn random_subset(f: &Field, size: usize, coins: &mut dyn Coins) -> Subset {
    let mut elems = Vec::with_capacity(size);
    while elems.len() < size {
        let x = f.random(coins);
        if !elems.contains(&x) {
            elems.push(x);
        }
    }
    Subset::explicit(f, &elems).expect("distinct elements")
}

fn pick<T: Clone>(items: &[T], coins: &mut dyn Coins) -> T {
    items[coins.below(items.len() as u64) as usize].clone()
}

/// A random instance satisfying the hypotheses of `kind`.
pub fn random_closed_form_instance(kind: ClosedFormKind, coins: &mut dyn Coins) -> (MultiPoly, Subset, Vec<Fe>) {
    let gf16 = Field::gf2(4).unwrap();
    let f17 = Field::prime(17).unwrap();
    let f5 = Field::prime(5).unwrap();
    let m = 1 + coins.below(if kind == ClosedFormKind::MultilinearMean || kind == ClosedFormKind::MultilinearTop { 3 } else { 2 }) as usize;
    let (f, h, degs) = match kind {
        ClosedFormKind::MultilinearMean => {
            // F_17 never divides |H|; odd-size subsets of GF(16)
            if coins.bit() {
                let size = 1 + coins.below(16) as usize;
                (f17.clone(), random_subset(&f17, size, coins), vec![1; m])
            } else {
                let size = 1 + 2 * coins.below(8) as usize;
                (gf16.clone(), random_subset(&gf16, size, coins), vec![1; m])
            }
        }
        ClosedFormKind::MultilinearTop => {
            if coins.bit() {
                let size = 2 + 2 * coins.below(7) as usize;
                (gf16.clone(), random_subset(&gf16, size, coins), vec![1; m])
            } else {
                (f5.clone(), Subset::first(&f5, 5), vec![1; m])
            }
        }
        ClosedFormKind::MultiplicativeGroup => {
            let (f, order) = if coins.bit() { (f17.clone(), pick(&[2u64, 4, 8, 16], coins)) } else { (gf16.clone(), pick(&[3u64, 5, 15], coins)) };
            let h = f.subgroup_of_order(order, GroupKind::Multiplicative).unwrap();
            let degs = (0..m).map(|_| coins.below(order) as usize).collect();
            (f, h, degs)
        }
        ClosedFormKind::AdditiveGroup => {
            let (f, order) = if coins.bit() { (gf16.clone(), pick(&[1u64, 2, 4, 8, 16], coins)) } else { (f5.clone(), pick(&[1u64, 5], coins)) };
            let h = f.subgroup_of_order(order, GroupKind::Additive).unwrap();
            let degs = (0..m).map(|_| coins.below(order) as usize).collect();
            (f, h, degs)
        }
    };
    let p = MultiPoly::random(&f, &degs, coins);
    let v = if kind == ClosedFormKind::MultiplicativeGroup { vec![f.zero(); m] } else { f.random_vec(m, coins) };
    (p, h, v)
}

fn closed_form_suite(root: &RngStream, per_branch: usize) -> Vec<Check> {
    let mut checks = Vec::new();
    for kind in ClosedFormKind::ALL {
        let mut coins = root.child(&format!("{kind:?}"));
        let mut bad = Vec::new();
        for i in 0..per_branch {
            let (p, h, v) = random_closed_form_instance(kind, &mut coins);
            match closed_form_for(kind, &p, &h, &v) {
                Ok(c) if c.agrees() => {}
                Ok(c) => bad.push(format!("#{i}: formula {} brute {}", c.formula.0, c.brute.0)),
                Err(e) => bad.push(format!("#{i}: {e}")),
            }
        }
        checks.push(Check::new(
            format!("closed form {kind:?} equals brute force"),
            bad.is_empty(),
            if bad.is_empty() { format!("{per_branch} random instances") } else { bad.join(", ") },
        ));
    }

    // H = {1, 4, 13, 16} in F_17, P = X + 3
    let f17 = Field::prime(17).unwrap();
    let h = f17.subgroup_of_order(4, GroupKind::Multiplicative).unwrap();
    let p = MultiPoly::univariate(&f17, &[Fe(3), Fe(1)]);
    let c = closed_form_sum(&p, &h, &[Fe(0)]);
    checks.push(Check::new(
        "multiplicative subgroup of F_17 of order 4, P = X + 3",
        matches!(&c, Ok(c) if c.kind == ClosedFormKind::MultiplicativeGroup && c.agrees() && c.brute == Fe(12)) && h.elems() == [Fe(1), Fe(4), Fe(13), Fe(16)],
        format!("{c:?}"),
    ));

    let gf16 = Field::gf2(4).unwrap();
    let checked = degree_bound_counterexample(&gf16, 2).map(|(p, h)| {
        let refused = matches!(closed_form_sum(&p, &h, &[Fe(0)]), Err(AqcError::Hypothesis(_)));
        let naive = closed_form_unchecked(ClosedFormKind::MultiplicativeGroup, &p, &h, &[Fe(0)]);
        (refused, naive, brute_force_sum(&p, &h, &[Fe(0)]), h.len())
    });
    checks.push(Check::new(
        "X^|H| over the nonzero elements of GF(4) is refused",
        matches!(checked, Ok((true, naive, brute, 3)) if naive == Fe(0) && brute == Fe(1)),
        format!("(refused, naive formula, brute sum, |H|) = {checked:?}"),
    ));

    let gf4 = Field::gf2(2).unwrap();
    let h = gf4.subfield_of_degree(1).unwrap();
    let mut coins = root.child("additive-low-degree");
    let mut ok = true;
    for _ in 0..per_branch {
        // total degree below m(|H| - 1) = 2 with m = 2
        let mut p = MultiPoly::zero(&gf4, &[1, 1]);
        p.set_coeff(&[0, 0], gf4.random(&mut coins));
        p.set_coeff(&[1, 0], gf4.random(&mut coins));
        p.set_coeff(&[0, 1], gf4.random(&mut coins));
        let v = gf4.random_vec(2, &mut coins);
        ok &= brute_force_sum(&p, &h, &v) == Fe(0) && matches!(closed_form_sum(&p, &h, &v), Ok(c) if c.agrees());
    }
    checks.push(Check::new("additive GF(2) in GF(4), total degree below m(|H|-1), sums to 0", ok, format!("{per_branch} instances")));
    checks
}

/// A random instance whose `(C, D)` is every combination `S` determines.
pub fn random_rank_instance(coins: &mut dyn Coins) -> RankInstance {
    let f = Field::prime(pick(&[5u64, 7], coins)).unwrap();
    let m = 1 + coins.below(2) as usize;
    let k = 1 + coins.below(2) as usize;
    let d = coins.below(2) as usize;
    let gsize = 2 + coins.below(2) as usize;
    let d_prime = gsize - 2 + coins.below(gsize as u64 + 1) as usize;
    let space = ZSpace::new(&f, m, k, d, d_prime);
    let g = Subset::first(&f, gsize);
    let k_set = f.first_elements(d + 1);
    let l_set = f.first_elements(d + 2);
    let mut s = Vec::new();
    for _ in 0..coins.below(3) {
        let a = pick(&grid(&l_set, m), coins);
        s.extend(grid(g.elems(), k).into_iter().map(|y| [a.clone(), y].concat()));
    }
    for _ in 0..coins.below(4) {
        s.push(f.random_vec(m + k, coins));
    }
    s = s.into_iter().unique().collect();
    let (c, dmat) = maximal_decoders(&space, &g, &l_set, &s);
    RankInstance { space, g, k_set, l_set, s, c, dmat }
}

fn lower_bound_suite(root: &RngStream) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut coins = root.child("random");
    let mut bad = Vec::new();
    let mut nontrivial = 0;
    for i in 0..100 {
        let inst = random_rank_instance(&mut coins);
        match check_lower_bound(&inst) {
            Ok(lb) if lb.holds => nontrivial += (lb.rank_bc > 0) as usize,
            other => bad.push(format!("#{i}: {other:?}")),
        }
    }
    checks.push(Check::new(
        "random query sets never beat the rank floor",
        bad.is_empty() && nontrivial > 0,
        if bad.is_empty() { format!("100 instances, {nontrivial} with rank(BC) > 0") } else { bad.join(", ") },
    ));

    // a corrupted decoder must be rejected
    let mut corrupted = None;
    while corrupted.is_none() {
        let mut inst = random_rank_instance(&mut coins);
        if let Some(row) = inst.dmat.iter_mut().find(|r| !r.is_empty()) {
            let f = inst.space.field.clone();
            row[0] = f.add(row[0], f.one());
            corrupted = Some(check_lower_bound(&inst));
        }
    }
    let corrupted = corrupted.unwrap();
    checks.push(Check::new("corrupted decoder is reported invalid", matches!(corrupted, Err(AqcError::Invalid(_))), format!("{corrupted:?}")));

    // m = k = 1, d = 1, d' = 2, G = {0, 1}: no single query determines a partial sum
    let f5 = Field::prime(5).unwrap();
    let space = ZSpace::new(&f5, 1, 1, 1, 2);
    let g = Subset::first(&f5, 2);
    let l_set = f5.first_elements(2);
    let all = grid(&f5.first_elements(5), 2);
    let found = min_query_set(&space, &g, &l_set, &[Fe(1), Fe(0)], &all, 2);
    checks.push(Check::new(
        "one query never suffices at d' = 2, |G| = 2 (exhaustive over F_5^2)",
        found.as_ref().is_some_and(|s| s.len() == 2),
        format!("smallest determining set {found:?}"),
    ));

    // d' = |G| - 2 gives width 0: the floor is vacuous and a single query suffices
    let g3 = Subset::first(&f5, 3);
    let space = ZSpace::new(&f5, 1, 1, 1, 1);
    let one = min_query_set(&space, &g3, &l_set, &[Fe(1), Fe(0)], &all, 1);
    let lb = one.as_ref().map(|s| {
        let (c, dmat) = maximal_decoders(&space, &g3, &l_set, s);
        check_lower_bound(&RankInstance { space: space.clone(), g: g3.clone(), k_set: l_set.clone(), l_set: l_set.clone(), s: s.clone(), c, dmat })
    });
    checks.push(Check::new(
        "d' = |G| - 2 makes the floor trivial",
        matches!(&lb, Some(Ok(b)) if b.width == 0 && b.floor == 0 && b.holds && b.rank_bc > 0),
        format!("{lb:?}"),
    ));

    // multilinear in Y with G = {0, 1}: (1/2, ..., 1/2) decodes with coefficient 2^k
    let g2 = Subset::first(&f5, 2);
    let ml = single_query_decoder(&f5, &g2, 2, 1);
    let quad = single_query_decoder(&f5, &g2, 2, 2);
    checks.push(Check::new(
        "single query at (1/2, 1/2) decodes when d' = 1 and fails when d' = 2",
        ml == Ok(Some(Fe(4))) && quad == Ok(None),
        format!("d' = 1: {ml:?}, d' = 2: {quad:?}"),
    ));
    checks
}

/// All query sets of size 1 and 2 in `F_3^2`, for `d` in {0, 1} and `d'` in {1, 2}.
pub fn enumerable_independence_instances() -> Vec<(ZSpace, Subset, Vec<Vec<Fe>>)> {
    let f = Field::prime(3).unwrap();
    let g = Subset::first(&f, 2);
    let points = grid(&f.first_elements(3), 2);
    let mut out = Vec::new();
    for d in 0..2 {
        for d_prime in 1..3 {
            let space = ZSpace::new(&f, 1, 1, d, d_prime);
            for size in 1..3 {
                for q in points.iter().cloned().combinations(size) {
                    out.push((space.clone(), g.clone(), q));
                }
            }
        }
    }
    out
}

fn independence_suite(root: &RngStream, samples: usize) -> Vec<Check> {
    let mut checks = Vec::new();
    let f3 = Field::prime(3).unwrap();
    let g = Subset::first(&f3, 2);
    let space = ZSpace::new(&f3, 1, 1, 1, 2);
    let empty = check_independence(&space, &g, &[]);
    checks.push(Check::new("no queries are independent", empty.independent, format!("{empty:?}")));

    let q = vec![vec![Fe(1), Fe(2)]];
    let v = check_independence(&space, &g, &q);
    let p = chi2_independence(&space, &g, &q, samples, &mut root.child("example"));
    checks.push(Check::new("F_3, d' = 2, one query: independent", v.independent && v.hypothesis_met && p >= 1e-3, format!("{v:?}, p = {p:.3e}")));

    // 2^{-1} = 2 in F_3
    let lin = ZSpace::new(&f3, 1, 1, 1, 1);
    let q = vec![vec![Fe(0), Fe(2)]];
    let v = check_independence(&lin, &g, &q);
    let p = chi2_independence(&lin, &g, &q, samples, &mut root.child("control"));
    checks.push(Check::new("F_3, d' = 1, query at 1/2: dependent", !v.independent && p < 1e-3, format!("{v:?}, p = {p:.3e}")));

    let instances = enumerable_independence_instances();
    // Bonferroni over all instances
    let floor = 1e-3 / instances.len() as f64;
    let mut disagree = Vec::new();
    let mut dependent = 0;
    for (i, (space, g, q)) in instances.iter().enumerate() {
        let v = check_independence(space, g, q);
        let p = chi2_independence(space, g, q, samples, &mut root.child_idx("enum", i as u64));
        dependent += !v.independent as usize;
        if v.independent != (p >= floor) || (v.hypothesis_met && !v.independent) {
            disagree.push(format!("#{i} d={} d'={} Q={q:?}: rank {} p {p:.2e}", space.d, space.d_prime, v.independent));
        }
    }
    checks.push(Check::new(
        "rank and chi-square verdicts agree on every enumerable instance",
        disagree.is_empty(),
        if disagree.is_empty() { format!("{} instances, {dependent} dependent", instances.len()) } else { disagree.join("; ") },
    ));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_passed;

    #[test]
    fn rows_match_polynomial_evaluation() {
        let f = Field::prime(7).unwrap();
        let space = ZSpace::new(&f, 2, 1, 1, 3);
        let mut c = RngStream::from_seed(1);
        let z = space.random(&mut c);
        let g = Subset::first(&f, 3);
        for _ in 0..10 {
            let q = f.random_vec(3, &mut c);
            assert_eq!(f.dot(&space.eval_row(&q), z.coeffs()), z.eval(&q));
            let a = &q[..2];
            let direct = f.sum(g.elems().iter().map(|&y| z.eval(&[a[0], a[1], y])));
            assert_eq!(f.dot(&space.partial_sum_row(a, &g), z.coeffs()), direct);
        }
        assert_eq!(grid(&[Fe(0), Fe(1)], 0), vec![Vec::<Fe>::new()]);
        assert_eq!(grid(&[Fe(0), Fe(1)], 2)[1], vec![Fe(0), Fe(1)]);
    }

    #[test]
    fn lagrange_matrix_expresses_values_on_l() {
        let f = Field::prime(7).unwrap();
        let (k, l) = (f.first_elements(2), f.first_elements(4));
        let b = lagrange_matrix(&f, &k, &l, 2).unwrap();
        let p = MultiPoly::random(&f, &[1, 1], &mut RngStream::from_seed(2));
        let on_k: Vec<Fe> = grid(&k, 2).iter().map(|x| p.eval(x)).collect();
        for (j, a) in grid(&l, 2).iter().enumerate() {
            let col: Vec<Fe> = b.iter().map(|r| r[j]).collect();
            assert_eq!(f.dot(&col, &on_k), p.eval(a));
        }
    }

    #[test]
    fn full_fibers_reach_the_floor_exactly() {
        // S = {a} x G^k for a in K: rank(BC) = number of fibers, width = |G| when d' >= 2(|G|-1)
        let f = Field::prime(7).unwrap();
        let space = ZSpace::new(&f, 1, 2, 1, 2);
        let g = Subset::first(&f, 2);
        let k_set = f.first_elements(2);
        let s: Vec<Vec<Fe>> = k_set.iter().flat_map(|&a| grid(g.elems(), 2).into_iter().map(move |y| [vec![a], y].concat())).collect();
        let (c, dmat) = maximal_decoders(&space, &g, &k_set, &s);
        let lb = check_lower_bound(&RankInstance { space, g, k_set: k_set.clone(), l_set: k_set, s, c, dmat }).unwrap();
        assert_eq!(lb, LowerBound { size: 8, rank_bc: 2, width: 2, floor: 8, holds: true });
    }

    #[test]
    fn validation_rejects_malformed_instances() {
        let f = Field::prime(5).unwrap();
        let space = ZSpace::new(&f, 1, 1, 1, 0);
        let g = Subset::first(&f, 3);
        let inst = RankInstance { space, g, k_set: f.first_elements(2), l_set: f.first_elements(2), s: vec![], c: vec![vec![]; 2], dmat: vec![] };
        assert!(matches!(check_lower_bound(&inst), Err(AqcError::Invalid(_))));
        let mut inst2 = inst.clone();
        inst2.space.d_prime = 1;
        inst2.k_set = f.first_elements(1);
        assert!(matches!(check_lower_bound(&inst2), Err(AqcError::Invalid(_))));
    }

    #[test]
    fn multilinear_attack_needs_odd_characteristic() {
        let gf8 = Field::gf2(3).unwrap();
        assert!(matches!(single_query_decoder(&gf8, &Subset::first(&gf8, 2), 1, 1), Err(AqcError::Hypothesis(_))));
        // random Z multilinear in Y: the attack recovers every partial sum
        let f = Field::prime(11).unwrap();
        let g = Subset::first(&f, 2);
        let (pt, scale) = multilinear_attack_point(&f, &g, 3).unwrap();
        assert_eq!(pt, vec![f.inv(Fe(2)).unwrap(); 3]);
        let space = ZSpace::new(&f, 1, 3, 2, 1);
        let mut c = RngStream::from_seed(4);
        for _ in 0..20 {
            let z = space.random(&mut c);
            let a = f.random(&mut c);
            let sum = f.dot(&space.partial_sum_row(&[a], &g), z.coeffs());
            assert_eq!(f.mul(scale, z.eval(&[vec![a], pt.clone()].concat())), sum);
        }
    }

    #[test]
    fn closed_forms_refuse_unmet_hypotheses() {
        let f = Field::prime(7).unwrap();
        let h = Subset::first(&f, 3);
        let p = MultiPoly::random(&f, &[2], &mut RngStream::from_seed(1));
        assert!(matches!(closed_form_sum(&p, &h, &[Fe(0)]), Err(AqcError::Hypothesis(_))));
        assert!(matches!(closed_form_for(ClosedFormKind::MultilinearTop, &MultiPoly::random(&f, &[1], &mut RngStream::from_seed(2)), &h, &[Fe(1)]), Err(AqcError::Hypothesis(_))));
        let hm = f.subgroup_of_order(3, GroupKind::Multiplicative).unwrap();
        let q = MultiPoly::random(&f, &[2], &mut RngStream::from_seed(3));
        assert!(closed_form_for(ClosedFormKind::MultiplicativeGroup, &q, &hm, &[Fe(1)]).is_err());
        assert!(closed_form_for(ClosedFormKind::MultiplicativeGroup, &q, &hm, &[Fe(0)]).unwrap().agrees());
    }

    #[test]
    fn prime_field_multilinear_over_whole_field_is_zero() {
        let f = Field::prime(7).unwrap();
        let h = Subset::first(&f, 7);
        let mut c = RngStream::from_seed(5);
        for m in 1..3 {
            let p = MultiPoly::random(&f, &vec![1; m], &mut c);
            assert_eq!(brute_force_sum(&p, &h, &vec![Fe(0); m]), Fe(0));
        }
        assert_eq!(subspace_linear_term(&f, &h), f.neg(f.one()));
    }

    #[test]
    fn suites_pass() {
        for suite in [Suite::ClosedForms, Suite::LowerBound] {
            let checks = run_suite(suite, 7);
            assert!(all_passed(&checks), "{:#?}", checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn independence_suite_passes() {
        let checks = independence_suite(&RngStream::from_seed(8), 3000);
        assert!(all_passed(&checks), "{:#?}", checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::LowerBound, Suite::Independence, Suite::ClosedForms] {
            assert_eq!(s.to_string().parse::<Suite>(), Ok(s));
        }
        assert!("rank".parse::<Suite>().is_err());
    }
}
