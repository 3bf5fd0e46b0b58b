//! Small statistical helpers: Hoeffding intervals, quantiles and a χ²
//! goodness-of-fit test.

use serde::Serialize;

use crate::error::{param, Result};

/// Two-sided Hoeffding half-width for the mean of `trials` i.i.d. draws with
/// values in an interval of length `range`, at failure probability `fail`.
pub fn hoeffding_half_width(range: f64, trials: u64, fail: f64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    range * ((2.0 / fail).ln() / (2.0 * trials as f64)).sqrt()
}

/// One-sided Hoeffding deviation for a `[0, 1]` mean at failure probability `fail`.
pub fn hoeffding_one_sided(trials: u64, fail: f64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    ((1.0 / fail).ln() / (2.0 * trials as f64)).sqrt()
}

/// Standard deviation of a Binomial(n, p) count.
pub fn binomial_sd(n: u64, p: f64) -> f64 {
    (n as f64 * p * (1.0 - p)).sqrt()
}

/// Running sum, minimum and maximum of a stream of values.
#[derive(Debug, Clone, Copy)]
pub struct RangeSum {
    pub sum: f64,
    pub min: f64,
    pub max: f64,
    pub count: u64,
}

impl Default for RangeSum {
    fn default() -> Self {
        Self {
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
        }
    }
}

impl RangeSum {
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.count += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.count += other.count;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Length of the realized value range (zero for a constant stream).
    pub fn range(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.max - self.min
        }
    }
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Regularized upper incomplete gamma function `Q(s, x)`.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = -x + s * x.ln() - libm::lgamma(s);
    if x < s + 1.0 {
        // series for P(s, x)
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..10_000 {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        1.0 - sum * log_prefix.exp()
    } else {
        // Lentz continued fraction for Q(s, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        log_prefix.exp() * h
    }
}

/// Survival function of the χ² distribution with `dof` degrees of freedom.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    gamma_q(dof as f64 / 2.0, statistic / 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after pooling sparse ones.
    pub cells: usize,
}

/// Pearson goodness-of-fit test of `observed` counts against `probs`.
///
/// Cells whose expected count is below 5 are pooled, smallest first, until
/// every pooled cell reaches 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.is_empty() {
        return param("observed counts and probabilities must be non-empty and of equal length");
    }
    let total: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o as f64, p * total as f64))
        .collect();
    cells.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    if pooled.len() < 2 {
        return param("too few cells with expected count >= 5 for a chi-square test");
    }
    let statistic = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len() - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: pooled.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_sf_known_values() {
        // dof 2 has the closed form exp(-x/2)
        for x in [0.5, 2.0, 7.3, 30.0] {
            assert!((chi_square_sf(x, 2) - (-x / 2.0_f64).exp()).abs() < 1e-12);
        }
        // dof 1: P(Z^2 > 3.841458820694124) = 0.05
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-9);
        // dof 10 critical value at 0.001
        assert!((chi_square_sf(29.58829844507442, 10) - 0.001).abs() < 1e-9);
    }

    #[test]
    fn gof_pools_sparse_cells() {
        let obs = [50, 48, 1, 1];
        let probs = [0.5, 0.48, 0.01, 0.01];
        let t = chi_square_gof(&obs, &probs).unwrap();
        assert_eq!(t.cells, 2);
        assert!(t.p_value > 0.5);
    }

    #[test]
    fn gof_rejects_gross_mismatch() {
        let t = chi_square_gof(&[900, 100], &[0.5, 0.5]).unwrap();
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&v, 0.5), 1.5);
        assert_eq!(quantile_sorted(&v, 1.0), 3.0);
    }

    #[test]
    fn hoeffding_matches_formula() {
        let h = hoeffding_half_width(2.0, 100_000, 0.01);
        assert!((h - 2.0 * (200f64.ln() / 200_000.0).sqrt()).abs() < 1e-15);
    }
}
