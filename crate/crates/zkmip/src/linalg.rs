//! Dense linear algebra over a [`Field`]: echelon forms, rank, solving, kernels, and an
//! incremental reduced echelon basis for streaming affine constraints.

use crate::field::{Fe, Field};

/// Row-major dense matrix.
pub type Matrix = Vec<Vec<Fe>>;

/// Reduces `m` in place to reduced row echelon form and returns the pivot columns.
/// Zero rows are moved to the bottom.
pub fn rref(f: &Field, m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m[i][c] != f.zero()) else { continue };
        m.swap(r, p);
        let inv = f.inv(m[r][c]).expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != f.zero() {
                let factor = f.neg(row[c]);
                f.axpy(row, factor, &pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(f: &Field, m: &Matrix) -> usize {
    let mut a = m.clone();
    rref(f, &mut a).len()
}

pub fn transpose(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

pub fn mat_mul(f: &Field, a: &Matrix, b: &Matrix) -> Matrix {
    let bt = transpose(b);
    a.iter().map(|row| bt.iter().map(|col| f.dot(row, col)).collect()).collect()
}

pub fn mat_vec(f: &Field, a: &Matrix, v: &[Fe]) -> Vec<Fe> {
    a.iter().map(|row| f.dot(row, v)).collect()
}

/// Some solution of `a x = b`, or `None` if the system is inconsistent.
pub fn solve(f: &Field, a: &Matrix, b: &[Fe]) -> Option<Vec<Fe>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let pivots = rref(f, &mut aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![f.zero(); cols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = aug[i][cols];
    }
    Some(x)
}

/// Basis of the right kernel `{x : a x = 0}`.
pub fn kernel(f: &Field, a: &Matrix, cols: usize) -> Matrix {
    let mut m = a.clone();
    let pivots = rref(f, &mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&j| {
            let mut v = vec![f.zero(); cols];
            v[j] = f.one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = f.neg(m[i][j]);
            }
            v
        })
        .collect()
}

/// Outcome of reducing a linear functional against an [`Echelon`] basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduced {
    /// The functional lies in the row span; its value on every solution is this.
    Determined(Fe),
    /// The functional is independent of the rows.
    Free,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("constraint contradicts the existing system")]
pub struct Inconsistent;

/// Incrementally maintained reduced row echelon basis of affine constraints `row . x = rhs`.
#[derive(Clone, Debug)]
pub struct Echelon {
    field: Field,
    dim: usize,
    rows: Vec<Vec<Fe>>,
    rhs: Vec<Fe>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(field: &Field, dim: usize) -> Echelon {
        Echelon { field: field.clone(), dim, rows: vec![], rhs: vec![], pivots: vec![] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of `v` after eliminating all pivots, and the value accumulated from the rhs.
    fn residual(&self, v: &[Fe]) -> (Vec<Fe>, Fe) {
        let f = &self.field;
        let mut r = v.to_vec();
        let mut acc = f.zero();
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = r[p];
            if c != f.zero() {
                f.axpy(&mut r, f.neg(c), &self.rows[i]);
                acc = f.add(acc, f.mul(c, self.rhs[i]));
            }
        }
        (r, acc)
    }

    /// Whether the value of functional `v` is fixed by the constraints.
    pub fn classify(&self, v: &[Fe]) -> Reduced {
        assert_eq!(v.len(), self.dim, "functional dimension");
        let (r, acc) = self.residual(v);
        if r.iter().all(|x| *x == self.field.zero()) {
            Reduced::Determined(acc)
        } else {
            Reduced::Free
        }
    }

    /// Adds `v . x = value`. Returns true if the rank grew.
    pub fn insert(&mut self, v: &[Fe], value: Fe) -> Result<bool, Inconsistent> {
        assert_eq!(v.len(), self.dim, "functional dimension");
        let f = self.field.clone();
        let (mut r, acc) = self.residual(v);
        let mut val = f.sub(value, acc);
        let Some(p) = r.iter().position(|x| *x != f.zero()) else {
            return if val == f.zero() { Ok(false) } else { Err(Inconsistent) };
        };
        let inv = f.inv(r[p]).expect("nonzero");
        for x in r.iter_mut() {
            *x = f.mul(*x, inv);
        }
        val = f.mul(val, inv);
        // keep the basis fully reduced
        for i in 0..self.rows.len() {
            let c = self.rows[i][p];
            if c != f.zero() {
                let neg = f.neg(c);
                f.axpy(&mut self.rows[i], neg, &r);
                self.rhs[i] = f.add(self.rhs[i], f.mul(neg, val));
            }
        }
        self.rows.push(r);
        self.rhs.push(val);
        self.pivots.push(p);
        Ok(true)
    }

    /// A solution with the non-pivot coordinates set to `free(j)`.
    pub fn solution_with(&self, mut free: impl FnMut(usize) -> Fe) -> Vec<Fe> {
        let f = &self.field;
        let mut is_pivot = vec![false; self.dim];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        let mut x = vec![f.zero(); self.dim];
        for j in 0..self.dim {
            if !is_pivot[j] {
                x[j] = free(j);
            }
        }
        for (i, &p) in self.pivots.iter().enumerate() {
            // row i: x_p + sum_{non-pivot j} row[j] x_j = rhs
            let mut s = self.rhs[i];
            for (j, &c) in self.rows[i].iter().enumerate() {
                if j != p && c != f.zero() {
                    s = f.sub(s, f.mul(c, x[j]));
                }
            }
            x[p] = s;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: &[u32]) -> Vec<Fe> {
        v.iter().map(|&x| Fe(x)).collect()
    }

    #[test]
    fn rank_and_kernel() {
        let f = Field::prime(7).unwrap();
        let a = vec![fe(&[1, 2, 3]), fe(&[2, 4, 6]), fe(&[0, 1, 1])];
        assert_eq!(rank(&f, &a), 2);
        let k = kernel(&f, &a, 3);
        assert_eq!(k.len(), 1);
        for row in &a {
            assert_eq!(f.dot(row, &k[0]), f.zero());
        }
    }

    #[test]
    fn echelon_detects_inconsistency_and_determination() {
        let f = Field::prime(5).unwrap();
        let mut e = Echelon::new(&f, 2);
        assert!(e.insert(&fe(&[1, 1]), Fe(3)).unwrap());
        assert_eq!(e.classify(&fe(&[2, 2])), Reduced::Determined(Fe(1)));
        assert_eq!(e.classify(&fe(&[1, 0])), Reduced::Free);
        assert_eq!(e.insert(&fe(&[3, 3]), Fe(1)), Err(Inconsistent));
        assert_eq!(e.insert(&fe(&[3, 3]), Fe(4)), Ok(false));
        e.insert(&fe(&[1, 4]), Fe(0)).unwrap();
        let x = e.solution_with(|_| Fe(0));
        assert_eq!(f.add(x[0], x[1]), Fe(3));
        assert_eq!(f.add(x[0], f.mul(Fe(4), x[1])), Fe(0));
    }
}
