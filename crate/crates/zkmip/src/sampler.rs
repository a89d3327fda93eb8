//! Exact conditional sampling of uniformly random degree-bounded polynomials.
//!
//! A polynomial is a coefficient vector; every query we care about (a point evaluation, a
//! sum over a product set, or a mix per variable) is a linear functional on that vector.
//! The sampler keeps the answered functionals in reduced echelon form. A new query is either
//! determined by earlier answers, in which case the forced value is returned, or independent
//! of them, in which case its value is uniform and independent of everything answered so far.
//! Answering lazily this way gives the same joint distribution as drawing the polynomial
//! first and reading it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, Field, Subset};
use crate::linalg::{Echelon, Reduced};
use crate::poly::{MultiPoly, Oracle, OracleError, Query};
use crate::rng::Coins;

/// Largest coefficient dimension the sampler accepts.
pub const SAMPLER_DIM_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplerError {
    #[error("coefficient dimension {0} exceeds the cap of {SAMPLER_DIM_CAP}")]
    TooLarge(usize),
    #[error("constraint contradicts earlier answers")]
    Inconsistent,
    #[error("functional has {got} axes, polynomial has {expected} variables")]
    Arity { expected: usize, got: usize },
}

/// Per-variable part of a tensor functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    At(Fe),
    SumOver(Subset),
    /// Coefficient of `X^e` in this variable.
    Coeff(usize),
}

/// Tensor functional `P -> sum_{x in prod S_i} P(x)` with each `S_i` a point or a set.
pub type Functional = Vec<Axis>;

/// Point-evaluation functional.
pub fn point(x: &[Fe]) -> Functional {
    x.iter().map(|&v| Axis::At(v)).collect()
}

/// Prefix functional: fixed prefix, remaining variables summed over `h`.
pub fn prefix(x: &[Fe], m: usize, h: &Subset) -> Functional {
    let mut v = point(x);
    v.extend((x.len()..m).map(|_| Axis::SumOver(h.clone())));
    v
}

/// Uniform polynomial in a degree-bounded space, revealed through linear functionals.
#[derive(Clone, Debug)]
pub struct PolySampler {
    field: Field,
    degs: Vec<usize>,
    basis: Echelon,
    answered: Vec<(Functional, Fe)>,
}

impl PolySampler {
    pub fn new(field: &Field, degs: &[usize]) -> Result<PolySampler, SamplerError> {
        let dim = degs.iter().try_fold(1usize, |acc, d| acc.checked_mul(d + 1)).unwrap_or(usize::MAX);
        if dim > SAMPLER_DIM_CAP {
            return Err(SamplerError::TooLarge(dim));
        }
        Ok(PolySampler { field: field.clone(), degs: degs.to_vec(), basis: Echelon::new(field, dim), answered: vec![] })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn deg_bounds(&self) -> &[usize] {
        &self.degs
    }

    pub fn num_vars(&self) -> usize {
        self.degs.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Rank of the answered constraints (number of free answers drawn so far).
    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn answered(&self) -> &[(Functional, Fe)] {
        &self.answered
    }

    /// Dense coefficient-space vector of a tensor functional.
    pub fn densify(&self, q: &[Axis]) -> Result<Vec<Fe>, SamplerError> {
        if q.len() != self.degs.len() {
            return Err(SamplerError::Arity { expected: self.degs.len(), got: q.len() });
        }
        let f = &self.field;
        let mut v = vec![f.one()];
        for (ax, &d) in q.iter().zip(&self.degs) {
            let w = match ax {
                Axis::At(x) => f.powers(*x, d),
                Axis::SumOver(h) => h.power_sums(f, d),
                Axis::Coeff(e) => (0..=d).map(|j| if j == *e { f.one() } else { f.zero() }).collect(),
            };
            let mut next = Vec::with_capacity(v.len() * w.len());
            for &a in &v {
                for &b in &w {
                    next.push(f.mul(a, b));
                }
            }
            v = next;
        }
        Ok(v)
    }

    /// Forced value of the functional, if the answers so far determine it.
    pub fn forced(&self, q: &[Axis]) -> Result<Option<Fe>, SamplerError> {
        let v = self.densify(q)?;
        Ok(match self.basis.classify(&v) {
            Reduced::Determined(x) => Some(x),
            Reduced::Free => None,
        })
    }

    /// Conditionally distributed answer to `q`; the answer is recorded.
    pub fn answer(&mut self, q: &[Axis], coins: &mut dyn Coins) -> Result<Fe, SamplerError> {
        let v = self.densify(q)?;
        let a = match self.basis.classify(&v) {
            Reduced::Determined(x) => x,
            Reduced::Free => {
                let x = self.field.random(coins);
                self.basis.insert(&v, x).map_err(|_| SamplerError::Inconsistent)?;
                x
            }
        };
        self.answered.push((q.to_vec(), a));
        Ok(a)
    }

    /// Imposes `q(P) = value`.
    pub fn constrain(&mut self, q: &[Axis], value: Fe) -> Result<(), SamplerError> {
        let v = self.densify(q)?;
        self.basis.insert(&v, value).map_err(|_| SamplerError::Inconsistent)?;
        self.answered.push((q.to_vec(), value));
        Ok(())
    }

    /// A polynomial drawn uniformly among those consistent with all answers.
    pub fn sample(&self, coins: &mut dyn Coins) -> MultiPoly {
        let f = &self.field;
        let x = self.basis.solution_with(|_| f.random(coins));
        MultiPoly::from_coeffs(f, &self.degs, x).expect("dimension matches")
    }

    /// Whether `p` satisfies every recorded answer.
    pub fn consistent_with(&self, p: &MultiPoly) -> bool {
        self.answered.iter().all(|(q, a)| {
            let v = self.densify(q).expect("recorded functional");
            self.field.dot(&v, p.coeffs()) == *a
        })
    }
}

/// Oracle whose answers come from a lazily sampled uniform polynomial.
pub struct LazyOracle<C: Coins> {
    pub sampler: PolySampler,
    pub sum_set: Option<Subset>,
    pub coins: C,
}

impl<C: Coins> LazyOracle<C> {
    pub fn new(sampler: PolySampler, sum_set: Option<Subset>, coins: C) -> LazyOracle<C> {
        LazyOracle { sampler, sum_set, coins }
    }

    fn functional(&self, q: &Query) -> Result<Functional, OracleError> {
        let m = self.sampler.num_vars();
        match q.clone().normalized(m) {
            Query::Point(x) => {
                if x.len() != m {
                    return Err(OracleError::Dimension { expected: m, got: x.len() });
                }
                Ok(point(&x))
            }
            Query::Prefix(x) => {
                let h = self.sum_set.as_ref().ok_or(OracleError::PrefixUnsupported)?;
                if x.len() > m {
                    return Err(OracleError::Dimension { expected: m, got: x.len() });
                }
                Ok(prefix(&x, m, h))
            }
        }
    }
}

impl<C: Coins> Oracle for LazyOracle<C> {
    fn num_vars(&self) -> usize {
        self.sampler.num_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let fun = self.functional(q)?;
        self.sampler.answer(&fun, &mut self.coins).map_err(|e| OracleError::Simulator(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::exact_distribution;
    use num_rational::Ratio;

    #[test]
    fn full_interpolation_forces_everything() {
        let f = Field::prime(5).unwrap();
        let mut s = PolySampler::new(&f, &[1]).unwrap();
        s.constrain(&point(&[Fe(0)]), Fe(2)).unwrap();
        s.constrain(&point(&[Fe(1)]), Fe(4)).unwrap();
        // R = 2 + 2X
        assert_eq!(s.forced(&point(&[Fe(3)])).unwrap(), Some(Fe(3)));
        assert_eq!(s.constrain(&point(&[Fe(3)]), Fe(1)), Err(SamplerError::Inconsistent));
    }

    #[test]
    fn conditional_answer_matches_enumeration() {
        // m=1, d=1 over F_3 conditioned on R(0)+R(1)=2: R(0) is uniform over F_3
        let f = Field::prime(3).unwrap();
        let h = Subset::first(&f, 2);
        let dist = exact_distribution(
            |t| {
                let mut s = PolySampler::new(&f, &[1]).unwrap();
                s.constrain(&prefix(&[], 1, &h), Fe(2)).unwrap();
                s.answer(&point(&[Fe(0)]), t).unwrap()
            },
            100,
        )
        .unwrap();
        // brute force over the 9 linear polynomials
        let mut counts = [0u32; 3];
        for c0 in 0..3u32 {
            for c1 in 0..3u32 {
                if (2 * c0 + c1) % 3 == 2 {
                    counts[c0 as usize] += 1;
                }
            }
        }
        let total: u32 = counts.iter().sum();
        for v in 0..3 {
            assert_eq!(dist[&Fe(v)], Ratio::new(counts[v as usize] as u128, total as u128));
        }
    }

    #[test]
    fn dimension_cap() {
        let f = Field::prime(5).unwrap();
        assert!(matches!(PolySampler::new(&f, &[999, 999, 1]), Err(SamplerError::TooLarge(_))));
    }
}
