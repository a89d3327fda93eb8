//! Statistical tests used by the harness: chi-square goodness of fit and independence, and
//! Wilson score intervals for Monte Carlo acceptance rates.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper tail `P(X >= stat)` of a chi-square distribution with `df` degrees of freedom.
pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("positive df").sf(stat)
}

/// p-value of counts against expected probabilities. Cells with zero probability must be empty.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            if c > 0 {
                return 0.0;
            }
            continue;
        }
        let e = n as f64 * p;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    chi2_sf(stat, cells.saturating_sub(1))
}

pub fn chi2_uniform(counts: &[u64]) -> f64 {
    let p = 1.0 / counts.len() as f64;
    chi2_gof(counts, &vec![p; counts.len()])
}

/// Pearson test of independence on a contingency table. Empty rows and columns are dropped; a
/// table with a single nonempty row or column gives p = 1.
pub fn chi2_contingency(table: &[Vec<u64>]) -> f64 {
    let cols = table.first().map_or(0, |r| r.len());
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&c| c > 0)).collect();
    let col_sums: Vec<u64> = (0..cols).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let live: Vec<usize> = (0..cols).filter(|&j| col_sums[j] > 0).collect();
    if rows.len() < 2 || live.len() < 2 {
        return 1.0;
    }
    let n: u64 = col_sums.iter().sum();
    let mut stat = 0.0;
    for r in &rows {
        let rs: u64 = r.iter().sum();
        for &j in &live {
            let e = rs as f64 * col_sums[j] as f64 / n as f64;
            stat += (r[j] as f64 - e).powi(2) / e;
        }
    }
    chi2_sf(stat, (rows.len() - 1) * (live.len() - 1))
}

/// Two-sample test that `a` and `b` are draws from the same distribution over the same bins.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> f64 {
    chi2_contingency(&[a.to_vec(), b.to_vec()])
}

/// Wilson score interval for `successes` out of `n` at `z` standard deviations.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // DERIVED: closed-form Wilson interval computed by hand for 0/100 and 50/100 at z = 2
        let (lo, hi) = wilson(0, 100, 2.0);
        assert_eq!(lo, 0.0);
        assert!((hi - 4.0 / 104.0).abs() < 1e-12);
        let (lo, hi) = wilson(50, 100, 2.0);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((hi - (0.5 + 2.0 * (0.0025 + 0.0001f64).sqrt() / 1.04)).abs() < 1e-12);
    }

    #[test]
    fn chi2_tail_matches_exponential_at_two_df() {
        // chi-square with 2 df is exponential with mean 2
        for x in [0.5, 1.0, 4.0, 10.0] {
            assert!((chi2_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn contingency_detects_dependence() {
        assert!(chi2_contingency(&[vec![50, 50], vec![50, 50]]) > 0.99);
        assert!(chi2_contingency(&[vec![100, 0], vec![0, 100]]) < 1e-10);
        assert_eq!(chi2_contingency(&[vec![3, 4], vec![0, 0]]), 1.0);
        assert!(chi2_two_sample(&[10, 20, 30], &[10, 20, 30]) > 0.99);
    }
}
