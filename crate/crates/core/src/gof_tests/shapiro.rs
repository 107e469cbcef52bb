//! Shapiro-Wilk W statistic with Royston's weight construction
//! (Applied Statistics algorithms AS 181 / R94).
//!
//! The weights start from normalized Blom scores m_i = Φ^{-1}((i - 3/8)/(n + 1/4))
//! and receive polynomial end-corrections for the one (n <= 5) or two
//! (n > 5) outermost coefficients, followed by renormalization of the
//! interior. W is then the squared correlation between the ordered data
//! and the weight vector. P-values are obtained by Monte Carlo simulation
//! elsewhere; no p-value approximation is used here.

use crate::error::{Error, Result};
use crate::normal;
use crate::numeric::KahanSum;

/// Precomputed antisymmetric weight vector for a fixed sample size.
/// Building it costs n/2 normal quantiles, so the Monte Carlo engine
/// constructs it once per run instead of once per replication.
#[derive(Debug, Clone)]
pub struct SwWeights {
    /// Full-length coefficients c_1..c_n with c_i = -c_{n+1-i}.
    coeffs: Vec<f64>,
}

fn poly(c: &[f64], x: f64) -> f64 {
    // c[0] + c[1] x + c[2] x^2 + ...
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

impl SwWeights {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("Shapiro-Wilk needs n >= 3, got {n}")));
        }
        if n > 5000 {
            return Err(Error::domain(format!(
                "Shapiro-Wilk weights are validated for n <= 5000, got {n}"
            )));
        }
        let half = n / 2;
        // upper-tail magnitudes, 1-based a[1..=half]
        let mut a = vec![0.0; half + 1];

        if n == 3 {
            a[1] = std::f64::consts::FRAC_1_SQRT_2;
        } else {
            let an = n as f64;
            let mut summ2 = 0.0;
            for (i, slot) in a.iter_mut().enumerate().skip(1) {
                // Blom score for the i-th smallest; negative in this range.
                let m = normal::quantile((i as f64 - 0.375) / (an + 0.25));
                *slot = m;
                summ2 += m * m;
            }
            summ2 *= 2.0;
            let ssumm2 = summ2.sqrt();
            let rsn = 1.0 / an.sqrt();

            const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
            const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];

            let a1 = poly(&C1, rsn) - a[1] / ssumm2;
            let (start, fac) = if n > 5 {
                let a2 = poly(&C2, rsn) - a[2] / ssumm2;
                let fac = ((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2])
                    / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                    .sqrt();
                a[2] = a2;
                (3, fac)
            } else {
                let fac = ((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1)).sqrt();
                (2, fac)
            };
            a[1] = a1;
            for slot in a.iter_mut().skip(start).take(half + 1 - start) {
                // raw Blom scores are negative; -m/fac flips them positive
                *slot /= -fac;
            }
        }

        // expand to the full antisymmetric vector; a[1] is the outermost
        // (largest-magnitude) weight
        let mut coeffs = vec![0.0; n];
        for i in 0..half {
            coeffs[i] = -a[i + 1];
            coeffs[n - 1 - i] = a[i + 1];
        }
        Ok(SwWeights { coeffs })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// The antisymmetric coefficient vector c_1..c_n (ascending index).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// W for an ascending sample. Returns NaN for zero sample variance;
    /// public callers translate that into a degenerate-input error.
    pub fn w_statistic(&self, sorted: &[f64]) -> f64 {
        debug_assert_eq!(sorted.len(), self.coeffs.len());
        let n = sorted.len() as f64;

        let mut sx = KahanSum::new();
        for &x in sorted {
            sx.add(x);
        }
        let xbar = sx.value() / n;
        // coefficient mean is 0 by antisymmetry

        let mut ssx = KahanSum::new();
        let mut ssa = KahanSum::new();
        let mut sax = KahanSum::new();
        for (&x, &c) in sorted.iter().zip(&self.coeffs) {
            let dx = x - xbar;
            ssx.add(dx * dx);
            ssa.add(c * c);
            sax.add(c * dx);
        }
        let (ssx, ssa, sax) = (ssx.value(), ssa.value(), sax.value());
        if ssx <= 0.0 {
            return f64::NAN;
        }
        // W = sax^2/(ssa ssx), evaluated as 1 - w1 to keep precision near 1
        let norm = (ssa * ssx).sqrt();
        let w1 = (norm - sax) * (norm + sax) / (ssa * ssx);
        (1.0 - w1).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w_of_range(n: usize) -> f64 {
        let data: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        SwWeights::new(n).unwrap().w_statistic(&data)
    }

    #[test]
    fn w_matches_published_reference_values() {
        // scipy.stats.shapiro on 1..n
        for (n, want) in [(3, 1.0), (5, 0.9868), (10, 0.9702), (20, 0.9604)] {
            let w = w_of_range(n);
            assert!((w - want).abs() < 0.001, "n={n}: W={w}, want {want}");
        }
    }

    #[test]
    fn coefficients_are_antisymmetric_and_normalized() {
        for n in [4usize, 7, 12, 20, 50] {
            let w = SwWeights::new(n).unwrap();
            for i in 0..n {
                assert!(
                    (w.coeffs[i] + w.coeffs[n - 1 - i]).abs() < 1e-12,
                    "n={n}, i={i}"
                );
            }
            let ss: f64 = w.coeffs.iter().map(|c| c * c).sum();
            assert!((ss - 1.0).abs() < 0.01, "n={n}: sum of squares {ss}");
        }
    }

    #[test]
    fn w_in_unit_interval_and_affine_invariant() {
        let data = [0.3, -1.2, 0.8, 2.1, -0.4, 0.0, 1.5, -2.3, 0.9, 0.2];
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let weights = SwWeights::new(sorted.len()).unwrap();
        let w = weights.w_statistic(&sorted);
        assert!(w > 0.0 && w <= 1.0);

        let mapped: Vec<f64> = sorted.iter().map(|x| -3.0 + 11.0 * x).collect();
        let w2 = weights.w_statistic(&mapped);
        assert!((w - w2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sample_yields_nan() {
        let weights = SwWeights::new(5).unwrap();
        assert!(weights.w_statistic(&[2.0; 5]).is_nan());
    }

    #[test]
    fn size_bounds() {
        assert!(SwWeights::new(2).is_err());
        assert!(SwWeights::new(3).is_ok());
        assert!(SwWeights::new(5001).is_err());
    }
}
