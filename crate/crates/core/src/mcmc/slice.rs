//! Univariate slice sampling with stepping out and shrinkage.

use rand::distr::Open01;
use rand::Rng;

use super::McmcError;

/// Shrinkage is geometric, so this is only reached when the slice collapses
/// onto the current point in floating point.
const MAX_SHRINK: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceSampler {
    /// Initial bracket width on the working scale.
    pub width: f64,
    /// Cap on stepping-out expansions per transition.
    pub max_steps: usize,
}

impl Default for SliceSampler {
    fn default() -> Self {
        SliceSampler {
            width: 1.0,
            max_steps: 50,
        }
    }
}

impl SliceSampler {
    pub fn new(width: f64, max_steps: usize) -> Result<Self, McmcError> {
        if !(width > 0.0) || !width.is_finite() || max_steps == 0 {
            return Err(McmcError::Config(
                "slice width must be positive and max_steps at least 1",
            ));
        }
        Ok(SliceSampler { width, max_steps })
    }

    /// One transition from `x0` that leaves `exp(log_target)` invariant.
    ///
    /// `log_target` may return `-inf` (or NaN) outside the support; it must be
    /// finite at `x0`.
    pub fn sample<R, F>(&self, x0: f64, mut log_target: F, rng: &mut R) -> Result<f64, McmcError>
    where
        R: Rng + ?Sized,
        F: FnMut(f64) -> f64,
    {
        let f0 = log_target(x0);
        if !f0.is_finite() || !x0.is_finite() {
            return Err(McmcError::NonFiniteTarget { at: x0, value: f0 });
        }
        let level = f0 + libm::log(rng.sample::<f64, _>(Open01));

        let offset: f64 = rng.sample(Open01);
        let mut left = x0 - self.width * offset;
        let mut right = left + self.width;
        let split: f64 = rng.sample(Open01);
        let mut left_steps = (split * self.max_steps as f64) as usize;
        let mut right_steps = self.max_steps - 1 - left_steps.min(self.max_steps - 1);
        while left_steps > 0 && log_target(left) > level {
            left -= self.width;
            left_steps -= 1;
        }
        while right_steps > 0 && log_target(right) > level {
            right += self.width;
            right_steps -= 1;
        }

        for _ in 0..MAX_SHRINK {
            let x1 = left + rng.sample::<f64, _>(Open01) * (right - left);
            if log_target(x1) > level {
                return Ok(x1);
            }
            if x1 < x0 {
                left = x1;
            } else {
                right = x1;
            }
        }
        Ok(x0)
    }

    /// Transition for a positive parameter, run on `u = ln x` with the
    /// Jacobian `+u` added to the target.
    pub fn sample_positive<R, F>(
        &self,
        x0: f64,
        mut log_target: F,
        rng: &mut R,
    ) -> Result<f64, McmcError>
    where
        R: Rng + ?Sized,
        F: FnMut(f64) -> f64,
    {
        if !(x0 > 0.0) {
            return Err(McmcError::NonFiniteTarget {
                at: x0,
                value: f64::NAN,
            });
        }
        let u = self.sample(
            libm::log(x0),
            |u| {
                let x = libm::exp(u);
                if x > 0.0 && x.is_finite() {
                    log_target(x) + u
                } else {
                    f64::NEG_INFINITY
                }
            },
            rng,
        )?;
        Ok(libm::exp(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn standard_normal_is_invariant() {
        let s = SliceSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = 0.0;
        let draws: alloc::vec::Vec<f64> = (0..100_000)
            .map(|_| {
                x = s.sample(x, |v| -0.5 * v * v, &mut rng).unwrap();
                x
            })
            .collect();
        let (mean, var) = moments(&draws);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn gamma_on_log_scale() {
        // Gamma(shape 3, rate 2): mean 1.5, variance 0.75
        let s = SliceSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = 1.0;
        let draws: alloc::vec::Vec<f64> = (0..100_000)
            .map(|_| {
                x = s
                    .sample_positive(x, |v| 2.0 * libm::log(v) - 2.0 * v, &mut rng)
                    .unwrap();
                x
            })
            .collect();
        let (mean, var) = moments(&draws);
        assert!((mean / 1.5 - 1.0).abs() < 0.03, "mean {mean}");
        assert!((var / 0.75 - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn flat_target_stays_in_support() {
        let s = SliceSampler::new(5.0, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = 0.5;
        let inside = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        };
        for _ in 0..10_000 {
            x = s.sample(x, inside, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let s = SliceSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            s.sample(0.0, |_| f64::NEG_INFINITY, &mut rng),
            Err(McmcError::NonFiniteTarget { .. })
        ));
        assert!(s.sample_positive(-1.0, |_| 0.0, &mut rng).is_err());
        assert!(SliceSampler::new(0.0, 3).is_err());
        assert!(SliceSampler::new(1.0, 0).is_err());
    }
}
