//! Dense multivariate polynomials with individual degree bounds, plus the geometric objects
//! (lines, planes, curves) they are restricted to, and the queryable [`Oracle`] interface.
//!
//! Coefficients are stored densely in lexicographic order of exponent tuples, the first
//! variable being the most significant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, Field, FieldDescriptor, FieldError, Subset};
use crate::linalg;
use crate::rng::Coins;

/// Coefficient count above which dense operations refuse to run.
pub const DENSE_CAP: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("interpolation points are not distinct")]
    RepeatedPoints,
    #[error("field too small: need {need} distinct elements, have {have}")]
    FieldTooSmall { need: u64, have: u64 },
    #[error("dense size {0} exceeds the cap")]
    TooLarge(usize),
    #[error("degenerate flat: {0}")]
    Degenerate(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("bad polynomial file: {0}")]
    Format(String),
}

/// How one variable is treated by [`MultiPoly::contract`].
#[derive(Clone, Copy, Debug)]
pub enum AxisOp<'a> {
    Keep,
    At(Fe),
    SumOver(&'a Subset),
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    field: Field,
    degs: Vec<usize>,
    coeffs: Vec<Fe>,
}

impl std::fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MultiPoly({:?}, degs={:?}, coeffs={:?})", self.field, self.degs, self.coeffs)
    }
}

fn dense_len(degs: &[usize]) -> usize {
    degs.iter().fold(1usize, |acc, d| acc.saturating_mul(d + 1))
}

/// Applies `mat` (rows x dims[axis]) along one axis of a dense tensor.
fn apply_axis(f: &Field, data: &[Fe], dims: &[usize], axis: usize, mat: &[Vec<Fe>]) -> Vec<Fe> {
    let outer: usize = dims[..axis].iter().product();
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let rows = mat.len();
    let mut out = vec![f.zero(); outer * rows * inner];
    for o in 0..outer {
        for (ri, row) in mat.iter().enumerate() {
            let dst = &mut out[(o * rows + ri) * inner..(o * rows + ri + 1) * inner];
            for (j, &c) in row.iter().enumerate().take(n) {
                if c == f.zero() {
                    continue;
                }
                let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
                f.axpy(dst, c, src);
            }
        }
    }
    out
}

/// Coefficient matrix of Lagrange interpolation through `xs`: column j holds the
/// coefficients of the basis polynomial that is 1 at `xs[j]` and 0 at the others.
/// Returned row-major as `m[e][j]`.
pub fn interpolation_matrix(f: &Field, xs: &[Fe]) -> Result<Vec<Vec<Fe>>, PolyError> {
    let n = xs.len();
    // master = prod (X - x_k)
    let mut master = vec![f.one()];
    for &x in xs {
        master = uni::mul(f, &master, &[f.neg(x), f.one()]);
    }
    let mut m = vec![vec![f.zero(); n]; n];
    for (j, &xj) in xs.iter().enumerate() {
        // quotient master / (X - xj) by synthetic division
        let mut q = vec![f.zero(); n];
        let mut carry = f.zero();
        for e in (0..n).rev() {
            carry = f.add(master[e + 1], f.mul(carry, xj));
            q[e] = carry;
        }
        let denom = uni::eval(f, &q, xj);
        let inv = f.inv(denom).map_err(|_| PolyError::RepeatedPoints)?;
        for e in 0..n {
            m[e][j] = f.mul(q[e], inv);
        }
    }
    Ok(m)
}

impl MultiPoly {
    pub fn zero(field: &Field, degs: &[usize]) -> MultiPoly {
        MultiPoly { field: field.clone(), degs: degs.to_vec(), coeffs: vec![field.zero(); dense_len(degs)] }
    }

    pub fn constant(field: &Field, c: Fe) -> MultiPoly {
        MultiPoly { field: field.clone(), degs: vec![], coeffs: vec![c] }
    }

    pub fn from_coeffs(field: &Field, degs: &[usize], coeffs: Vec<Fe>) -> Result<MultiPoly, PolyError> {
        let n = dense_len(degs);
        if coeffs.len() != n {
            return Err(PolyError::Length { expected: n, got: coeffs.len() });
        }
        Ok(MultiPoly { field: field.clone(), degs: degs.to_vec(), coeffs })
    }

    /// Univariate polynomial from its coefficient list (constant term first).
    pub fn univariate(field: &Field, coeffs: &[Fe]) -> MultiPoly {
        let c = if coeffs.is_empty() { vec![field.zero()] } else { coeffs.to_vec() };
        MultiPoly { field: field.clone(), degs: vec![c.len() - 1], coeffs: c }
    }

    /// The polynomial `X_i` in `m` variables with degree bound 1 in `X_i`.
    pub fn variable(field: &Field, m: usize, i: usize) -> MultiPoly {
        let mut degs = vec![0; m];
        degs[i] = 1;
        let mut p = MultiPoly::zero(field, &degs);
        p.coeffs[1] = field.one();
        p
    }

    /// Uniformly random polynomial in the space with the given degree bounds.
    pub fn random(field: &Field, degs: &[usize], coins: &mut dyn Coins) -> MultiPoly {
        let n = dense_len(degs);
        MultiPoly { field: field.clone(), degs: degs.to_vec(), coeffs: field.random_vec(n, coins) }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn num_vars(&self) -> usize {
        self.degs.len()
    }

    pub fn deg_bounds(&self) -> &[usize] {
        &self.degs
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Fe> {
        self.coeffs
    }

    /// Number of coefficients, `prod (d_i + 1)`.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn index_of(&self, exps: &[usize]) -> usize {
        debug_assert_eq!(exps.len(), self.degs.len());
        exps.iter().zip(&self.degs).fold(0, |acc, (&e, &d)| {
            debug_assert!(e <= d);
            acc * (d + 1) + e
        })
    }

    pub fn exps_of(&self, mut idx: usize) -> Vec<usize> {
        let mut e = vec![0; self.degs.len()];
        for i in (0..self.degs.len()).rev() {
            e[i] = idx % (self.degs[i] + 1);
            idx /= self.degs[i] + 1;
        }
        e
    }

    pub fn coeff(&self, exps: &[usize]) -> Fe {
        if exps.iter().zip(&self.degs).any(|(e, d)| e > d) {
            return self.field.zero();
        }
        self.coeffs[self.index_of(exps)]
    }

    pub fn set_coeff(&mut self, exps: &[usize], c: Fe) {
        let i = self.index_of(exps);
        self.coeffs[i] = c;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == self.field.zero())
    }

    /// Actual degree in variable `i` (`None` for the zero polynomial).
    pub fn individual_degree(&self, i: usize) -> Option<usize> {
        let mut best = None;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c != self.field.zero() {
                let e = self.exps_of(idx)[i];
                best = Some(best.map_or(e, |b: usize| b.max(e)));
            }
        }
        best
    }

    /// Actual total degree (`None` for the zero polynomial).
    pub fn total_degree(&self) -> Option<usize> {
        let mut best = None;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c != self.field.zero() {
                let e: usize = self.exps_of(idx).iter().sum();
                best = Some(best.map_or(e, |b: usize| b.max(e)));
            }
        }
        best
    }

    /// Whether every individual degree is within `bounds`.
    pub fn within_bounds(&self, bounds: &[usize]) -> bool {
        if bounds.len() != self.degs.len() {
            return false;
        }
        if self.degs.iter().zip(bounds).all(|(d, b)| d <= b) {
            return true;
        }
        // odometer over exponents, last variable fastest
        let mut e = vec![0usize; self.degs.len()];
        for c in &self.coeffs {
            if *c != self.field.zero() && e.iter().zip(bounds).any(|(x, b)| x > b) {
                return false;
            }
            for j in (0..e.len()).rev() {
                e[j] += 1;
                if e[j] <= self.degs[j] {
                    break;
                }
                e[j] = 0;
            }
        }
        true
    }

    /// Same polynomial in a space with larger degree bounds.
    pub fn pad_to(&self, degs: &[usize]) -> MultiPoly {
        assert_eq!(degs.len(), self.degs.len());
        assert!(degs.iter().zip(&self.degs).all(|(a, b)| a >= b), "pad_to cannot shrink");
        if degs == self.degs.as_slice() {
            return self.clone();
        }
        let mut out = MultiPoly::zero(&self.field, degs);
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c != self.field.zero() {
                let e = self.exps_of(idx);
                out.set_coeff(&e, *c);
            }
        }
        out
    }

    /// Shrinks degree bounds to the actual degrees.
    pub fn trim(&self) -> MultiPoly {
        let degs: Vec<usize> = (0..self.num_vars()).map(|i| self.individual_degree(i).unwrap_or(0)).collect();
        let mut out = MultiPoly::zero(&self.field, &degs);
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c != self.field.zero() {
                let e = self.exps_of(idx);
                out.set_coeff(&e, *c);
            }
        }
        out
    }

    /// Inserts `count` new variables of degree bound 0 before position `at`.
    pub fn insert_vars(&self, at: usize, count: usize) -> MultiPoly {
        let mut degs = self.degs.clone();
        for _ in 0..count {
            degs.insert(at, 0);
        }
        MultiPoly { field: self.field.clone(), degs, coeffs: self.coeffs.clone() }
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars(), other.num_vars(), "variable count");
        let degs: Vec<usize> = self.degs.iter().zip(&other.degs).map(|(a, b)| *a.max(b)).collect();
        let mut a = self.pad_to(&degs);
        let b = other.pad_to(&degs);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x = self.field.add(*x, *y);
        }
        a
    }

    pub fn scale(&self, c: Fe) -> MultiPoly {
        let f = &self.field;
        MultiPoly { field: f.clone(), degs: self.degs.clone(), coeffs: self.coeffs.iter().map(|x| f.mul(*x, c)).collect() }
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.scale(self.field.neg(self.field.one())))
    }

    /// `self + c * other`, with `other` inside `self`'s degree bounds.
    pub fn add_scaled_in_place(&mut self, c: Fe, other: &MultiPoly) {
        if other.degs == self.degs {
            self.field.clone().axpy(&mut self.coeffs, c, &other.coeffs);
        } else {
            let padded = other.pad_to(&self.degs);
            self.field.clone().axpy(&mut self.coeffs, c, &padded.coeffs);
        }
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars(), other.num_vars(), "variable count");
        let f = &self.field;
        let degs: Vec<usize> = self.degs.iter().zip(&other.degs).map(|(a, b)| a + b).collect();
        let mut out = MultiPoly::zero(f, &degs);
        let b_terms: Vec<(Vec<usize>, Fe)> = other
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != f.zero())
            .map(|(i, c)| (other.exps_of(i), *c))
            .collect();
        for (ia, ca) in self.coeffs.iter().enumerate() {
            if *ca == f.zero() {
                continue;
            }
            let ea = self.exps_of(ia);
            for (eb, cb) in &b_terms {
                let e: Vec<usize> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let idx = out.index_of(&e);
                out.coeffs[idx] = f.add(out.coeffs[idx], f.mul(*ca, *cb));
            }
        }
        out
    }

    /// `P(X) Q(Y)` over the concatenated variables `(X, Y)`.
    pub fn tensor(&self, other: &MultiPoly) -> MultiPoly {
        let f = &self.field;
        let mut degs = self.degs.clone();
        degs.extend(&other.degs);
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for &a in &self.coeffs {
            coeffs.extend(other.coeffs.iter().map(|&b| f.mul(a, b)));
        }
        MultiPoly { field: f.clone(), degs, coeffs }
    }

    /// Contracts each variable according to `ops`; the kept variables remain, in order.
    pub fn contract(&self, ops: &[AxisOp]) -> MultiPoly {
        assert_eq!(ops.len(), self.num_vars(), "one op per variable");
        let f = &self.field;
        let mut data = self.coeffs.clone();
        let mut dims: Vec<usize> = self.degs.iter().map(|d| d + 1).collect();
        let mut kept = Vec::new();
        // process from the last axis so earlier axis indices stay valid
        for i in (0..ops.len()).rev() {
            let d = self.degs[i];
            let v = match ops[i] {
                AxisOp::Keep => {
                    kept.push(d);
                    continue;
                }
                AxisOp::At(x) => f.powers(x, d),
                AxisOp::SumOver(h) => h.power_sums(f, d),
            };
            data = apply_axis(f, &data, &dims, i, &[v]);
            dims.remove(i);
        }
        kept.reverse();
        MultiPoly { field: f.clone(), degs: kept, coeffs: data }
    }

    pub fn eval(&self, x: &[Fe]) -> Fe {
        assert_eq!(x.len(), self.num_vars(), "point dimension");
        let f = &self.field;
        // Horner on the flattened layout: contract the last axis repeatedly
        let mut data: Vec<Fe> = self.coeffs.clone();
        for i in (0..x.len()).rev() {
            let n = self.degs[i] + 1;
            let outer = data.len() / n;
            let mut next = Vec::with_capacity(outer);
            for o in 0..outer {
                let chunk = &data[o * n..(o + 1) * n];
                let mut acc = f.zero();
                for &c in chunk.iter().rev() {
                    acc = f.add(f.mul(acc, x[i]), c);
                }
                next.push(acc);
            }
            data = next;
        }
        data[0]
    }

    pub fn try_eval(&self, x: &[Fe]) -> Result<Fe, PolyError> {
        if x.len() != self.num_vars() {
            return Err(PolyError::Dimension { expected: self.num_vars(), got: x.len() });
        }
        Ok(self.eval(x))
    }

    /// Fixes the first `prefix.len()` variables.
    pub fn partial_eval(&self, prefix: &[Fe]) -> MultiPoly {
        assert!(prefix.len() <= self.num_vars(), "prefix longer than the variable count");
        let ops: Vec<AxisOp> = (0..self.num_vars())
            .map(|i| if i < prefix.len() { AxisOp::At(prefix[i]) } else { AxisOp::Keep })
            .collect();
        self.contract(&ops)
    }

    /// `sum over gamma in H^(m-j)` of `P(prefix, gamma)`.
    pub fn partial_sum(&self, prefix: &[Fe], h: &Subset) -> Result<Fe, PolyError> {
        if prefix.len() > self.num_vars() {
            return Err(PolyError::Dimension { expected: self.num_vars(), got: prefix.len() });
        }
        let ops: Vec<AxisOp> = (0..self.num_vars())
            .map(|i| if i < prefix.len() { AxisOp::At(prefix[i]) } else { AxisOp::SumOver(h) })
            .collect();
        Ok(self.contract(&ops).coeffs[0])
    }

    /// Sum over all of `H^m`.
    pub fn sum_over(&self, h: &Subset) -> Fe {
        self.partial_sum(&[], h).expect("empty prefix")
    }

    /// Interpolates values on the grid `xs[0] x xs[1] x ...` (lexicographic order, first
    /// axis most significant); degree bound in axis i is `xs[i].len() - 1`.
    pub fn interpolate_grid(field: &Field, xs: &[Vec<Fe>], values: &[Fe]) -> Result<MultiPoly, PolyError> {
        let n: usize = xs.iter().map(|v| v.len()).product();
        if values.len() != n {
            return Err(PolyError::Length { expected: n, got: values.len() });
        }
        let mut dims: Vec<usize> = xs.iter().map(|v| v.len()).collect();
        let mut data = values.to_vec();
        for (i, pts) in xs.iter().enumerate() {
            let m = interpolation_matrix(field, pts)?;
            data = apply_axis(field, &data, &dims, i, &m);
            dims[i] = pts.len();
        }
        let degs: Vec<usize> = xs.iter().map(|v| v.len() - 1).collect();
        Ok(MultiPoly { field: field.clone(), degs, coeffs: data })
    }

    /// Low-degree extension of a table over `H^m` (lexicographic in the elements of H).
    pub fn lde(field: &Field, h: &Subset, m: usize, table: &[Fe]) -> Result<MultiPoly, PolyError> {
        let xs = vec![h.elems().to_vec(); m];
        MultiPoly::interpolate_grid(field, &xs, table)
    }

    /// Substitutes polynomials (all over the same `k` variables) for the variables.
    pub fn compose(&self, comps: &[MultiPoly]) -> MultiPoly {
        assert_eq!(comps.len(), self.num_vars(), "one component per variable");
        let f = &self.field;
        let k = comps.first().map_or(0, |c| c.num_vars());
        let comp_deg: Vec<Vec<usize>> = comps.iter().map(|c| c.deg_bounds().to_vec()).collect();
        let out_degs: Vec<usize> = (0..k)
            .map(|j| self.degs.iter().zip(&comp_deg).map(|(d, cd)| d * cd[j]).sum())
            .collect();
        // powers of each component
        let comp_pows: Vec<Vec<MultiPoly>> = comps
            .iter()
            .zip(&self.degs)
            .map(|(c, &d)| {
                let mut v = vec![MultiPoly::constant(f, f.one()).insert_vars(0, k)];
                for _ in 0..d {
                    let next = v.last().unwrap().mul(c);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = MultiPoly::zero(f, &out_degs);
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c == f.zero() {
                continue;
            }
            let e = self.exps_of(idx);
            let mut term = MultiPoly::constant(f, *c).insert_vars(0, k);
            for (i, &ei) in e.iter().enumerate() {
                if ei > 0 {
                    term = term.mul(&comp_pows[i][ei]);
                }
            }
            out.add_scaled_in_place(f.one(), &term);
        }
        out
    }

    /// Restriction to an affine-polynomial map `t -> comps(t)`, by evaluation and
    /// interpolation when the field is large enough, otherwise by formal substitution.
    pub fn restrict_map(&self, comps: &[MultiPoly]) -> MultiPoly {
        let f = &self.field;
        let k = comps.first().map_or(0, |c| c.num_vars());
        let out_degs: Vec<usize> = (0..k)
            .map(|j| self.degs.iter().zip(comps).map(|(d, c)| d * c.deg_bounds()[j]).sum())
            .collect();
        let max_deg = out_degs.iter().copied().max().unwrap_or(0) as u64;
        if max_deg >= f.order() {
            return self.compose(comps);
        }
        let xs: Vec<Vec<Fe>> = out_degs.iter().map(|&d| f.first_elements(d + 1)).collect();
        let total: usize = xs.iter().map(|v| v.len()).product();
        let mut values = Vec::with_capacity(total);
        let mut local = vec![0usize; k];
        for _ in 0..total {
            let t: Vec<Fe> = local.iter().zip(&xs).map(|(&i, v)| v[i]).collect();
            let pt: Vec<Fe> = comps.iter().map(|c| c.eval(&t)).collect();
            values.push(self.eval(&pt));
            for j in (0..k).rev() {
                local[j] += 1;
                if local[j] < xs[j].len() {
                    break;
                }
                local[j] = 0;
            }
        }
        MultiPoly::interpolate_grid(f, &xs, &values).expect("distinct grid points")
    }

    pub fn restrict_flat(&self, flat: &Flat) -> MultiPoly {
        self.restrict_map(&flat.components(&self.field))
    }

    pub fn restrict_curve(&self, curve: &Curve) -> MultiPoly {
        self.restrict_map(&curve.components(&self.field))
    }

    pub fn to_file(&self) -> PolyFile {
        PolyFile {
            field: self.field.descriptor(),
            m: self.num_vars(),
            deg_bounds: self.degs.clone(),
            coeffs: self.coeffs.iter().map(|c| c.0).collect(),
        }
    }

    pub fn from_file(file: &PolyFile) -> Result<MultiPoly, PolyError> {
        let field = Field::from_descriptor(&file.field)?;
        if file.m != file.deg_bounds.len() {
            return Err(PolyError::Format("m does not match deg_bounds".into()));
        }
        let coeffs = file.coeffs.iter().map(|&c| field.elem(c as u64)).collect::<Result<Vec<_>, _>>()?;
        MultiPoly::from_coeffs(&field, &file.deg_bounds, coeffs)
    }
}

/// Structured record for storing a polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyFile {
    pub field: FieldDescriptor,
    pub m: usize,
    pub deg_bounds: Vec<usize>,
    pub coeffs: Vec<u32>,
}

/// Evaluation access shared by explicit polynomials and virtual compositions.
pub trait Evaluator {
    fn num_vars(&self) -> usize;
    fn deg_bounds(&self) -> Vec<usize>;
    fn eval_at(&self, x: &[Fe]) -> Fe;
}

impl Evaluator for MultiPoly {
    fn num_vars(&self) -> usize {
        MultiPoly::num_vars(self)
    }
    fn deg_bounds(&self) -> Vec<usize> {
        self.degs.clone()
    }
    fn eval_at(&self, x: &[Fe]) -> Fe {
        self.eval(x)
    }
}

/// Univariate helpers on plain coefficient vectors (constant term first).
pub mod uni {
    use super::*;

    pub fn eval(f: &Field, c: &[Fe], x: Fe) -> Fe {
        c.iter().rev().fold(f.zero(), |acc, &a| f.add(f.mul(acc, x), a))
    }

    pub fn mul(f: &Field, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![f.zero(); a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == f.zero() {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        out
    }

    /// Degree of the polynomial, `None` for zero.
    pub fn degree(f: &Field, c: &[Fe]) -> Option<usize> {
        c.iter().rposition(|x| *x != f.zero())
    }

    /// Interpolating polynomial of degree < xs.len() through the points.
    pub fn interpolate(f: &Field, xs: &[Fe], ys: &[Fe]) -> Result<Vec<Fe>, PolyError> {
        if xs.len() != ys.len() {
            return Err(PolyError::Length { expected: xs.len(), got: ys.len() });
        }
        let m = interpolation_matrix(f, xs)?;
        Ok(m.iter().map(|row| f.dot(row, ys)).collect())
    }

    /// `sum over h in H of c(h)`.
    pub fn sum_over(f: &Field, c: &[Fe], h: &Subset) -> Fe {
        if c.is_empty() {
            return f.zero();
        }
        f.dot(c, &h.power_sums(f, c.len() - 1))
    }
}

/// Coefficients of the Lagrange basis polynomials of `S`, one vector per element.
pub fn lagrange_basis(f: &Field, s: &[Fe]) -> Result<Vec<Vec<Fe>>, PolyError> {
    let m = interpolation_matrix(f, s)?;
    Ok((0..s.len()).map(|j| m.iter().map(|row| row[j]).collect()).collect())
}

/// Values `L_S(w, s_j)` of the Lagrange basis of `S` at `w`.
pub fn lagrange_at(f: &Field, s: &[Fe], w: Fe) -> Result<Vec<Fe>, PolyError> {
    Ok(lagrange_basis(f, s)?.iter().map(|c| uni::eval(f, c, w)).collect())
}

/// `P(W, X) = sum_j L_S(W, s_j) P_j(X)`: a single polynomial with `P(s_j, .) = P_j`.
pub fn bundle(polys: &[MultiPoly], s: &[Fe]) -> Result<MultiPoly, PolyError> {
    if polys.len() != s.len() || polys.is_empty() {
        return Err(PolyError::Length { expected: s.len(), got: polys.len() });
    }
    let f = polys[0].field().clone();
    let m = polys[0].num_vars();
    if polys.iter().any(|p| p.num_vars() != m) {
        return Err(PolyError::Dimension { expected: m, got: polys.iter().map(|p| p.num_vars()).max().unwrap() });
    }
    let degs: Vec<usize> = (0..m).map(|i| polys.iter().map(|p| p.deg_bounds()[i]).max().unwrap()).collect();
    let basis = lagrange_basis(&f, s)?;
    let mut all_degs = vec![s.len() - 1];
    all_degs.extend(&degs);
    let mut out = MultiPoly::zero(&f, &all_degs);
    let block = dense_len(&degs);
    for (p, lb) in polys.iter().zip(&basis) {
        let padded = p.pad_to(&degs);
        for (e, &c) in lb.iter().enumerate() {
            f.axpy(&mut out.coeffs[e * block..(e + 1) * block], c, padded.coeffs());
        }
    }
    Ok(out)
}

/// A line, axis-parallel line, or plane in `F^m`, in canonical form: directions in reduced
/// row echelon form and the base zero on every pivot coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flat {
    Line { base: Vec<Fe>, dir: Vec<Fe> },
    AxisLine { base: Vec<Fe>, axis: usize },
    Plane { base: Vec<Fe>, dirs: [Vec<Fe>; 2] },
}

impl Flat {
    fn canonical(f: &Field, base: &[Fe], dirs: &[Vec<Fe>]) -> Result<(Vec<Fe>, Vec<Vec<Fe>>), PolyError> {
        let mut d = dirs.to_vec();
        let pivots = linalg::rref(f, &mut d);
        if pivots.len() != dirs.len() {
            return Err(PolyError::Degenerate("directions are linearly dependent"));
        }
        let mut b = base.to_vec();
        for (row, &p) in d.iter().zip(&pivots) {
            let c = f.neg(b[p]);
            f.axpy(&mut b, c, row);
        }
        Ok((b, d))
    }

    pub fn line(f: &Field, base: &[Fe], dir: &[Fe]) -> Result<Flat, PolyError> {
        let (b, d) = Flat::canonical(f, base, &[dir.to_vec()])?;
        Ok(Flat::Line { base: b, dir: d.into_iter().next().unwrap() })
    }

    pub fn axis_line(f: &Field, through: &[Fe], axis: usize) -> Flat {
        let mut b = through.to_vec();
        b[axis] = f.zero();
        Flat::AxisLine { base: b, axis }
    }

    pub fn plane(f: &Field, base: &[Fe], d1: &[Fe], d2: &[Fe]) -> Result<Flat, PolyError> {
        let (b, d) = Flat::canonical(f, base, &[d1.to_vec(), d2.to_vec()])?;
        let mut it = d.into_iter();
        Ok(Flat::Plane { base: b, dirs: [it.next().unwrap(), it.next().unwrap()] })
    }

    /// Uniformly random plane through `point` (`m >= 2`).
    pub fn random_plane_through(f: &Field, point: &[Fe], coins: &mut dyn Coins) -> Flat {
        let m = point.len();
        assert!(m >= 2, "planes need at least two dimensions");
        loop {
            let d1 = f.random_vec(m, coins);
            let d2 = f.random_vec(m, coins);
            if let Ok(p) = Flat::plane(f, point, &d1, &d2) {
                return p;
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.base().len()
    }

    pub fn base(&self) -> &[Fe] {
        match self {
            Flat::Line { base, .. } | Flat::AxisLine { base, .. } | Flat::Plane { base, .. } => base,
        }
    }

    pub fn directions(&self, f: &Field) -> Vec<Vec<Fe>> {
        match self {
            Flat::Line { dir, .. } => vec![dir.clone()],
            Flat::AxisLine { base, axis } => {
                let mut e = vec![f.zero(); base.len()];
                e[*axis] = f.one();
                vec![e]
            }
            Flat::Plane { dirs, .. } => dirs.to_vec(),
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            Flat::Plane { .. } => 2,
            _ => 1,
        }
    }

    /// Point at local coordinates `t`.
    pub fn at(&self, f: &Field, t: &[Fe]) -> Vec<Fe> {
        let mut p = self.base().to_vec();
        for (d, &ti) in self.directions(f).iter().zip(t) {
            f.axpy(&mut p, ti, d);
        }
        p
    }

    /// Local coordinates of `point`, or `None` if it is not on the flat.
    pub fn local_coords(&self, f: &Field, point: &[Fe]) -> Option<Vec<Fe>> {
        let diff: Vec<Fe> = point.iter().zip(self.base()).map(|(a, b)| f.sub(*a, *b)).collect();
        let dirs = self.directions(f);
        // directions are in reduced echelon form, so coordinates are read off the pivots
        let t: Vec<Fe> = dirs
            .iter()
            .map(|d| {
                let p = d.iter().position(|x| *x != f.zero()).unwrap();
                diff[p]
            })
            .collect();
        (self.at(f, &t) == point).then_some(t)
    }

    pub fn contains(&self, f: &Field, point: &[Fe]) -> bool {
        self.local_coords(f, point).is_some()
    }

    /// Coordinate maps as degree-1 polynomials in the local variables.
    pub fn components(&self, f: &Field) -> Vec<MultiPoly> {
        let k = self.local_dim();
        let dirs = self.directions(f);
        (0..self.ambient_dim())
            .map(|i| {
                let mut c = MultiPoly::zero(f, &vec![1; k]);
                c.set_coeff(&vec![0; k], self.base()[i]);
                for (j, d) in dirs.iter().enumerate() {
                    let mut e = vec![0; k];
                    e[j] = 1;
                    c.set_coeff(&e, d[i]);
                }
                c
            })
            .collect()
    }
}

/// A curve `t -> (c_1(t), ..., c_m(t))` with univariate coordinate polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curve {
    pub comps: Vec<Vec<Fe>>,
}

impl Curve {
    /// Parameters used for the query points: the first `q` field elements.
    pub fn query_params(f: &Field, q: usize) -> Vec<Fe> {
        f.first_elements(q)
    }

    /// Degree-`q` curve with `gamma(s_j) = points[j]` for the first `q` field elements `s_j`
    /// and `gamma(t) = r`. `t` must differ from every `s_j`.
    pub fn through(f: &Field, points: &[Vec<Fe>], t: Fe, r: &[Fe]) -> Result<Curve, PolyError> {
        let q = points.len();
        let m = r.len();
        if points.iter().any(|p| p.len() != m) {
            return Err(PolyError::Dimension { expected: m, got: points.iter().map(|p| p.len()).find(|&l| l != m).unwrap() });
        }
        let mut xs = Curve::query_params(f, q);
        xs.push(t);
        let im = interpolation_matrix(f, &xs)?;
        let comps = (0..m)
            .map(|i| {
                let mut ys: Vec<Fe> = points.iter().map(|p| p[i]).collect();
                ys.push(r[i]);
                im.iter().map(|row| f.dot(row, &ys)).collect()
            })
            .collect();
        Ok(Curve { comps })
    }

    /// The constant curve at `p`.
    pub fn constant(p: &[Fe]) -> Curve {
        Curve { comps: p.iter().map(|&x| vec![x]).collect() }
    }

    pub fn degree(&self) -> usize {
        self.comps.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn at(&self, f: &Field, t: Fe) -> Vec<Fe> {
        self.comps.iter().map(|c| uni::eval(f, c, t)).collect()
    }

    pub fn components(&self, f: &Field) -> Vec<MultiPoly> {
        let q = self.degree();
        self.comps
            .iter()
            .map(|c| {
                let mut v = c.clone();
                v.resize(q + 1, f.zero());
                MultiPoly::univariate(f, &v)
            })
            .collect()
    }
}

/// An oracle query: a full point, or a prefix whose answer is the sum over the remaining
/// variables ranging over the oracle's summation set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Query {
    Point(Vec<Fe>),
    Prefix(Vec<Fe>),
}

impl Query {
    pub fn coords(&self) -> &[Fe] {
        match self {
            Query::Point(v) | Query::Prefix(v) => v,
        }
    }

    /// Prefix queries of full length are point queries.
    pub fn normalized(self, m: usize) -> Query {
        match self {
            Query::Prefix(v) if v.len() == m => Query::Point(v),
            q => q,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle answers point queries only")]
    PrefixUnsupported,
    #[error("query has {got} coordinates, oracle has {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("query bound {0} exceeded")]
    QueryBound(usize),
    #[error("simulator failure: {0}")]
    Simulator(String),
}

/// A queryable proof oracle.
pub trait Oracle {
    fn num_vars(&self) -> usize;
    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }
    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        (**self).answer(q)
    }
}

/// Oracle backed by an explicit polynomial; prefix sums only if a summation set is given.
#[derive(Clone, Debug)]
pub struct PolyOracle {
    pub poly: MultiPoly,
    pub sum_set: Option<Subset>,
}

impl PolyOracle {
    pub fn points_only(poly: MultiPoly) -> PolyOracle {
        PolyOracle { poly, sum_set: None }
    }

    pub fn with_sums(poly: MultiPoly, h: Subset) -> PolyOracle {
        PolyOracle { poly, sum_set: Some(h) }
    }
}

impl Oracle for PolyOracle {
    fn num_vars(&self) -> usize {
        self.poly.num_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let m = self.poly.num_vars();
        match q.clone().normalized(m) {
            Query::Point(x) => {
                if x.len() != m {
                    return Err(OracleError::Dimension { expected: m, got: x.len() });
                }
                Ok(self.poly.eval(&x))
            }
            Query::Prefix(x) => {
                let h = self.sum_set.as_ref().ok_or(OracleError::PrefixUnsupported)?;
                if x.len() > m {
                    return Err(OracleError::Dimension { expected: m, got: x.len() });
                }
                Ok(self.poly.partial_sum(&x, h).expect("checked length"))
            }
        }
    }
}

/// Wraps an oracle with a log of distinct queries and an optional query bound, enforced
/// before the inner oracle is consulted.
pub struct Logged<O> {
    pub inner: O,
    log: Vec<(Query, Fe)>,
    seen: HashMap<Query, Fe>,
    bound: Option<usize>,
}

impl<O: Oracle> Logged<O> {
    pub fn new(inner: O, bound: Option<usize>) -> Logged<O> {
        Logged { inner, log: vec![], seen: HashMap::new(), bound }
    }

    pub fn log(&self) -> &[(Query, Fe)] {
        &self.log
    }

    pub fn count(&self) -> usize {
        self.log.len()
    }

    pub fn bound(&self) -> Option<usize> {
        self.bound
    }
}

impl<O: Oracle> Oracle for Logged<O> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let q = q.clone().normalized(self.inner.num_vars());
        if let Some(a) = self.seen.get(&q) {
            return Ok(*a);
        }
        if let Some(b) = self.bound {
            if self.log.len() >= b {
                return Err(OracleError::QueryBound(b));
            }
        }
        let a = self.inner.answer(&q)?;
        self.seen.insert(q.clone(), a);
        self.log.push((q, a));
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f17() -> Field {
        Field::prime(17).unwrap()
    }

    #[test]
    fn eval_and_contract_agree() {
        let f = f17();
        let mut p = MultiPoly::zero(&f, &[1, 1]);
        p.set_coeff(&[1, 1], f.one()); // X1 X2
        assert_eq!(p.eval(&[Fe(2), Fe(3)]), Fe(6));
        let g = p.contract(&[AxisOp::At(Fe(2)), AxisOp::Keep]);
        assert_eq!(g.coeffs(), &[Fe(0), Fe(2)]);
    }

    #[test]
    fn lde_of_and_gate() {
        let f = f17();
        let h = Subset::first(&f, 2);
        let p = MultiPoly::lde(&f, &h, 2, &[Fe(0), Fe(0), Fe(0), Fe(1)]).unwrap();
        assert_eq!(p.eval(&[Fe(2), Fe(3)]), Fe(6));
    }

    #[test]
    fn partial_sum_prefix() {
        let f = f17();
        let mut p = MultiPoly::zero(&f, &[1, 1]);
        p.set_coeff(&[1, 1], f.one());
        let h = Subset::first(&f, 2);
        assert_eq!(p.partial_sum(&[Fe(1)], &h).unwrap(), Fe(1));
        assert_eq!(p.partial_sum(&[Fe(1), Fe(1), Fe(0)], &h), Err(PolyError::Dimension { expected: 2, got: 3 }));
    }

    #[test]
    fn axis_line_restriction() {
        let f = f17();
        let p = MultiPoly::variable(&f, 2, 0).add(&MultiPoly::variable(&f, 2, 1));
        let l = Flat::axis_line(&f, &[Fe(0), Fe(5)], 0);
        let r = p.restrict_flat(&l);
        assert_eq!(uni::degree(&f, r.coeffs()), Some(1));
        assert_eq!(&r.coeffs()[..2], &[Fe(5), Fe(1)]);
    }

    #[test]
    fn small_field_restriction_uses_substitution() {
        // degree 4 restriction over F_3 cannot be interpolated
        let f = Field::prime(3).unwrap();
        let mut c = crate::rng::RngStream::from_seed(1);
        let p = MultiPoly::random(&f, &[2, 2], &mut c);
        let l = Flat::line(&f, &[Fe(1), Fe(2)], &[Fe(1), Fe(1)]).unwrap();
        let r = p.restrict_flat(&l);
        assert_eq!(r.deg_bounds(), &[4]);
        for t in 0..3 {
            let x = l.at(&f, &[Fe(t)]);
            assert_eq!(r.eval(&[Fe(t)]), p.eval(&x));
        }
    }

    #[test]
    fn logged_oracle_bound_raises_before_answer() {
        let f = f17();
        let p = MultiPoly::variable(&f, 1, 0);
        let mut o = Logged::new(PolyOracle::points_only(p), Some(1));
        assert_eq!(o.answer(&Query::Point(vec![Fe(3)])), Ok(Fe(3)));
        assert_eq!(o.answer(&Query::Point(vec![Fe(3)])), Ok(Fe(3)));
        assert_eq!(o.answer(&Query::Point(vec![Fe(4)])), Err(OracleError::QueryBound(1)));
        assert_eq!(o.count(), 1);
        assert_eq!(o.answer(&Query::Prefix(vec![])), Err(OracleError::QueryBound(1)));
    }

    #[test]
    fn point_only_rejects_prefix() {
        let f = f17();
        let mut o = PolyOracle::points_only(MultiPoly::variable(&f, 2, 0));
        assert_eq!(o.answer(&Query::Prefix(vec![Fe(1)])), Err(OracleError::PrefixUnsupported));
    }

    #[test]
    fn curve_passes_through_points() {
        let f = Field::prime(97).unwrap();
        let pts = vec![vec![Fe(5), Fe(6)], vec![Fe(7), Fe(8)], vec![Fe(1), Fe(1)]];
        let c = Curve::through(&f, &pts, Fe(50), &[Fe(9), Fe(10)]).unwrap();
        for (j, p) in pts.iter().enumerate() {
            assert_eq!(&c.at(&f, Fe(j as u32)), p);
        }
        assert_eq!(c.at(&f, Fe(50)), vec![Fe(9), Fe(10)]);
    }
}
