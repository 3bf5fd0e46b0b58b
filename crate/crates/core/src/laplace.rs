//! Laplace noise by inverse CDF on a 64-bit uniform draw.

use rand::RngCore;

use crate::error::{param, Result};

/// Laplace distribution centred at zero with density `exp(-|x|/scale) / (2 scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return param(format!("Laplace scale must be positive and finite, got {scale}"));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        // u is uniform on the open interval (0, 1): 53 significant bits plus a half-ulp offset
        let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        if u < 0.5 {
            self.scale * (2.0 * u).ln()
        } else {
            -self.scale * (2.0 * (1.0 - u)).ln()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.scale).exp()
        } else {
            1.0 - 0.5 * (-x / self.scale).exp()
        }
    }

    /// `P(a <= X <= b)`, computed without cancellation in either tail.
    pub fn interval_probability(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let l = self.scale;
        if a >= 0.0 {
            // (e^{-a/l} - e^{-b/l}) / 2
            -0.5 * (-a / l).exp() * (-(b - a) / l).exp_m1()
        } else if b <= 0.0 {
            -0.5 * (b / l).exp() * (-(b - a) / l).exp_m1()
        } else {
            1.0 - 0.5 * ((a / l).exp() + (-b / l).exp())
        }
    }
}

/// One draw from `Lap(scale)`.
pub fn laplace_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    Ok(Laplace::new(scale)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    const DRAWS: usize = 100_000;

    fn draws(scale: f64, stream: u64) -> Vec<f64> {
        let lap = Laplace::new(scale).unwrap();
        let mut rng = RandomSource::new(11, stream).rng();
        (0..DRAWS).map(|_| lap.sample(&mut rng)).collect()
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(Laplace::new(0.0).is_err());
        assert!(Laplace::new(-1.0).is_err());
        assert!(Laplace::new(f64::NAN).is_err());
        let mut rng = RandomSource::new(0, 0).rng();
        assert!(laplace_sample(0.0, &mut rng).is_err());
    }

    #[test]
    fn median_is_zero() {
        let mut v = draws(1.0, 1);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = v[DRAWS / 2];
        assert!(median.abs() < 0.02, "median {median}");
    }

    #[test]
    fn tails_match_exponential_law() {
        for (stream, &scale) in [0.1, 1.0, 10.0].iter().enumerate() {
            let v = draws(scale, 10 + stream as u64);
            for z in [scale, 2.0 * scale] {
                let p = (-z / scale).exp();
                let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
                let freq = v.iter().filter(|x| x.abs() > z).count() as f64 / DRAWS as f64;
                assert!((freq - p).abs() <= 3.0 * sigma, "scale {scale} z {z}: {freq} vs {p}");
            }
        }
    }

    #[test]
    fn mean_absolute_value_is_scale() {
        for (stream, &scale) in [0.5, 3.0].iter().enumerate() {
            let v = draws(scale, 20 + stream as u64);
            let mean = v.iter().map(|x| x.abs()).sum::<f64>() / DRAWS as f64;
            // |X| is exponential with mean and standard deviation `scale`
            let sigma = scale / (DRAWS as f64).sqrt();
            assert!((mean - scale).abs() <= 3.0 * sigma, "{mean} vs {scale}");
        }
    }

    #[test]
    fn interval_probability_agrees_with_cdf() {
        let lap = Laplace::new(1.5).unwrap();
        for &(a, b) in &[(-3.0, -1.0), (-1.0, 2.0), (0.5, 4.0), (0.0, 0.0), (-2.0, 0.0)] {
            let direct = lap.cdf(b) - lap.cdf(a);
            assert!((lap.interval_probability(a, b) - direct).abs() < 1e-14);
        }
        assert_eq!(lap.interval_probability(1.0, 0.0), 0.0);
    }
}
