//! Standard (unit-parameter) probability distributions.
//!
//! These are the location-scale prototypes fitted against on a Q-Q plot,
//! plus the alternatives simulated in the power studies. Each family is
//! kept in its standard form only; location and scale enter through the
//! regression, never through the distribution itself.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// A distribution family in standard parameterization. All four have a
/// continuous, strictly increasing CDF on their support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// N(0, 1).
    Normal,
    /// Unit-rate exponential, F(x) = 1 - e^{-x} on x >= 0.
    Exponential,
    /// Gumbel (maximum type), F(x) = exp(-e^{-x}).
    Gumbel,
    /// Unit logistic, F(x) = 1/(1 + e^{-x}).
    Logistic,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Exponential => "exponential",
            Family::Gumbel => "gumbel",
            Family::Logistic => "logistic",
        }
    }

    /// Density at `x`. Zero off-support; non-finite `x` is a domain error.
    pub fn pdf(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::domain(format!("pdf: x must be finite, got {x}")));
        }
        Ok(match self {
            Family::Normal => normal::pdf(x),
            Family::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x).exp()
                }
            }
            Family::Gumbel => {
                let e = (-x).exp();
                e * (-e).exp()
            }
            Family::Logistic => {
                // e^{-|x|}/(1+e^{-|x|})^2, symmetric form avoids overflow.
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
        })
    }

    /// CDF at `x`. Tails saturate to 0/1; +-infinity map to 1/0.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Family::Normal => normal::cdf(x),
            Family::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Family::Gumbel => (-(-x).exp()).exp(),
            Family::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Quantile function Q = F^{-1} on (0, 1).
    pub fn quantile(self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!(
                "quantile: u must lie in (0,1), got {u}"
            )));
        }
        Ok(self.quantile_open01(u))
    }

    /// Quantile without the domain check, for callers that guarantee
    /// u in (0,1) (the inversion sampler draws from an open interval).
    #[inline]
    pub(crate) fn quantile_open01(self, u: f64) -> f64 {
        match self {
            Family::Normal => normal::quantile(u),
            Family::Exponential => -(-u).ln_1p(),
            Family::Gumbel => -(-u.ln()).ln(),
            Family::Logistic => (u / (1.0 - u)).ln(),
        }
    }

    /// Draws `n` values by inversion: Q(U) with U uniform on (0, 1).
    ///
    /// Inversion is chosen over ziggurat-style samplers so that a given
    /// generator stream always produces the same values, one uniform per
    /// draw, on every platform.
    pub fn sample<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.sample_fill(&mut out, rng);
        out
    }

    /// Inversion sampling into a caller-provided buffer (hot path of the
    /// Monte Carlo engine; avoids one allocation per replication).
    pub fn sample_fill<R: Rng + ?Sized>(self, out: &mut [f64], rng: &mut R) {
        for slot in out.iter_mut() {
            let u: f64 = rng.sample(rand::distr::Open01);
            *slot = self.quantile_open01(u);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FAMILIES: [Family; 4] = [
        Family::Normal,
        Family::Exponential,
        Family::Gumbel,
        Family::Logistic,
    ];

    #[test]
    fn pdf_reference_points() {
        assert!((Family::Normal.pdf(0.0).unwrap() - 0.3989422804014327).abs() < 1e-12);
        assert!((Family::Exponential.pdf(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((Family::Logistic.pdf(0.0).unwrap() - 0.25).abs() < 1e-15);
        // Gumbel mode at 0: f(0) = e^{-1}.
        assert!((Family::Gumbel.pdf(0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(Family::Exponential.pdf(-1.0).unwrap(), 0.0);
        assert!(Family::Normal.pdf(f64::NAN).is_err());
        assert!(Family::Normal.pdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(Family::Normal.cdf(0.0), 0.5);
        assert!((Family::Exponential.cdf(2.0f64.ln()) - 0.5).abs() < 1e-15);
        assert!((Family::Logistic.cdf(0.0) - 0.5).abs() < 1e-15);
        // Gumbel: F(0) = e^{-1}.
        assert!((Family::Gumbel.cdf(0.0) - (-1.0f64).exp()).abs() < 1e-15);
        // saturation
        assert_eq!(Family::Exponential.cdf(-3.0), 0.0);
        assert_eq!(Family::Normal.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(Family::Normal.cdf(f64::INFINITY), 1.0);
    }

    /// Independent oracle for the normal CDF: composite Simpson integration
    /// of the density from 0 to x, entirely separate from the erfc path.
    fn phi_by_simpson(x: f64) -> f64 {
        let steps = 20_000;
        let h = x / steps as f64;
        let f = |t: f64| (-0.5 * t * t).exp();
        let mut acc = f(0.0) + f(x);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        0.5 + acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn normal_cdf_agrees_with_quadrature_oracle() {
        // 1.959963985 should map to 0.975 within 1e-10.
        let x = 1.959963985;
        assert!((Family::Normal.cdf(x) - 0.975).abs() < 1e-10);
        assert!((phi_by_simpson(x) - Family::Normal.cdf(x)).abs() < 1e-12);
        for x in [-2.5, -1.0, -0.3, 0.7, 1.5, 3.0] {
            assert!(
                (phi_by_simpson(x) - Family::Normal.cdf(x)).abs() < 1e-12,
                "quadrature disagrees at {x}"
            );
        }
    }

    /// Independent oracle for the normal quantile: bisection on the CDF.
    fn normal_quantile_by_bisection(u: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Family::Normal.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_reference_points() {
        assert!((Family::Normal.quantile(0.5).unwrap()).abs() < 1e-15);
        assert!(
            (Family::Normal.quantile(0.95).unwrap() - 1.644853627).abs() < 1e-9,
            "got {}",
            Family::Normal.quantile(0.95).unwrap()
        );
        assert!(
            (Family::Normal.quantile(0.95).unwrap() - normal_quantile_by_bisection(0.95)).abs()
                < 1e-12
        );
        // Gumbel: F(0) = e^{-1}, so Q(e^{-1}) = 0.
        assert!((Family::Gumbel.quantile((-1.0f64).exp()).unwrap()).abs() < 1e-15);
        assert!(Family::Normal.quantile(0.0).is_err());
        assert!(Family::Normal.quantile(1.0).is_err());
        assert!(Family::Normal.quantile(-0.2).is_err());
        assert!(Family::Normal.quantile(f64::NAN).is_err());
    }

    #[test]
    fn inversion_round_trip_all_families() {
        for fam in FAMILIES {
            let mut u = 0.001;
            while u < 1.0 {
                let x = fam.quantile(u).unwrap();
                assert!(
                    (fam.cdf(x) - u).abs() <= 1e-9,
                    "{:?} round trip at u={u}: got {}",
                    fam,
                    fam.cdf(x)
                );
                u += 0.001;
            }
        }
    }

    #[test]
    fn normal_quantile_symmetry() {
        let mut u = 0.001;
        while u < 0.5 {
            let a = Family::Normal.quantile(u).unwrap();
            let b = Family::Normal.quantile(1.0 - u).unwrap();
            assert!((a + b).abs() <= 1e-9, "asymmetry at u={u}: {a} vs {b}");
            u += 0.001;
        }
    }

    #[test]
    fn sampling_is_deterministic_for_fixed_seed() {
        for fam in FAMILIES {
            let mut r1 = ChaCha8Rng::seed_from_u64(7);
            let mut r2 = ChaCha8Rng::seed_from_u64(7);
            let a = fam.sample(100, &mut r1);
            let b = fam.sample(100, &mut r2);
            assert_eq!(a, b, "{fam:?} not reproducible");
            assert!(a.iter().all(|v| v.is_finite()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(Family::Normal.sample(1, &mut rng).len(), 1);
        assert!(Family::Normal.sample(0, &mut rng).is_empty());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(20_20);
        let xs = Family::Normal.sample(100_000, &mut rng);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // 4/sqrt(n) bound from the examples' contract.
        assert!(mean.abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn sampling_ks_regression_vs_theoretical_cdf() {
        for fam in FAMILIES {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut xs = fam.sample(100_000, &mut rng);
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let mut d = 0.0f64;
            for (i, &x) in xs.iter().enumerate() {
                let f = fam.cdf(x);
                d = d
                    .max((((i + 1) as f64) / n - f).abs())
                    .max((f - i as f64 / n).abs());
            }
            assert!(d < 0.01, "{fam:?}: Kolmogorov distance {d}");
        }
    }
}
