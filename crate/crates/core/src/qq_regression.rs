//! Least-squares fitting of the Q-Q plot: location/scale estimation,
//! scale-only estimation, and the plot correlation that drives the
//! goodness-of-fit test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::order_stats::PlottingPositions;

/// Transformation applied to raw observations before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    /// Natural log; requires strictly positive data. This is the route for
    /// testing lognormality: the logs are analyzed against the normal.
    Log,
}

/// An observation batch together with its transform metadata. The sorted
/// (transformed) values are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    transform: Transform,
    sorted: Vec<f64>,
}

impl Sample {
    /// Validates and transforms a batch of raw observations.
    ///
    /// Requires n >= 3 finite values; the log transform additionally
    /// requires every value to be positive and reports the offenders.
    pub fn new(values: Vec<f64>, transform: Transform) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::domain(format!(
                "sample needs at least 3 observations, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::domain(format!(
                "sample contains non-finite value {v} at index {i}"
            )));
        }
        if transform == Transform::Log {
            let offenders: Vec<String> = values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v <= 0.0)
                .map(|(i, v)| format!("index {i}: {v}"))
                .collect();
            if !offenders.is_empty() {
                return Err(Error::domain(format!(
                    "log transform requires positive values; offending entries: {}",
                    offenders.join(", ")
                )));
            }
        }
        let mut sorted: Vec<f64> = match transform {
            Transform::Identity => values.clone(),
            Transform::Log => values.iter().map(|v| v.ln()).collect(),
        };
        // stable sort: ties keep input order
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            transform,
            sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Raw (untransformed) observations in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    /// Transformed observations, ascending.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Result of regressing sorted observations on theoretical quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QQFit {
    /// Intercept: location estimate.
    pub mu_hat: f64,
    /// Slope: scale estimate.
    pub sigma_hat: f64,
    /// Pearson correlation of the (q_k, x_(k)) pairs; NaN when degenerate.
    pub rho: f64,
    pub positions: PlottingPositions,
    pub n: usize,
    /// The ordinate side of the plot (sorted observations).
    pub sorted: Vec<f64>,
    /// Set when the sample or the positions have zero variance. Degenerate
    /// fits carry sigma_hat = 0 resp. rho = NaN instead of silently
    /// propagating NaN through downstream statistics.
    pub degenerate: bool,
}

/// Value-at-risk estimate read from the fitted line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub value: f64,
    /// True when the estimate was exponentiated back to the original scale
    /// (the lognormal route). By Jensen's inequality the exponentiated
    /// estimator overshoots on average; the bias is reported, not
    /// corrected.
    pub upward_biased: bool,
}

/// Compensated sums used by both estimators. Everything downstream (MC
/// calibration included) goes through this one kernel so that observed and
/// simulated statistics are computed by the identical formula.
struct PlotSums {
    n: f64,
    sum_q: f64,
    sum_x: f64,
    sum_qq: f64,
    sum_xx: f64,
    sum_qx: f64,
}

fn plot_sums(q: &[f64], x: &[f64]) -> PlotSums {
    let mut sq = KahanSum::new();
    let mut sx = KahanSum::new();
    let mut sqq = KahanSum::new();
    let mut sxx = KahanSum::new();
    let mut sqx = KahanSum::new();
    for (&qi, &xi) in q.iter().zip(x) {
        sq.add(qi);
        sx.add(xi);
        sqq.add(qi * qi);
        sxx.add(xi * xi);
        sqx.add(qi * xi);
    }
    PlotSums {
        n: q.len() as f64,
        sum_q: sq.value(),
        sum_x: sx.value(),
        sum_qq: sqq.value(),
        sum_xx: sxx.value(),
        sum_qx: sqx.value(),
    }
}

/// (mu_hat, sigma_hat, rho, degenerate) from paired slices.
pub(crate) fn fit_pairs(q: &[f64], x: &[f64]) -> (f64, f64, f64, bool) {
    let s = plot_sums(q, x);
    let n = s.n;
    let cov = s.sum_qx / n - (s.sum_q / n) * (s.sum_x / n);
    let var_q = s.sum_qq / n - (s.sum_q / n) * (s.sum_q / n);
    let var_x = s.sum_xx / n - (s.sum_x / n) * (s.sum_x / n);

    if var_q <= 0.0 || var_x <= 0.0 {
        // Flat plot in one direction: slope 0 through the mean, rho
        // undefined.
        return (s.sum_x / n, 0.0, f64::NAN, true);
    }

    let sigma = cov / var_q;
    let mu = s.sum_x / n - sigma * (s.sum_q / n);
    let rho = (cov / (var_q * var_x).sqrt()).clamp(-1.0, 1.0);
    (mu, sigma, rho, false)
}

/// Correlation of the plot alone (used by the simulation engine).
#[inline]
pub(crate) fn rho_pairs(q: &[f64], x: &[f64]) -> f64 {
    fit_pairs(q, x).2
}

/// Fits the regression line x_(k) = mu + sigma q_k by least squares.
///
/// The estimators are the textbook slope/intercept of the Q-Q scatter;
/// with exact-expectation positions they are unbiased for the location and
/// scale of the underlying family.
pub fn fit(sample: &Sample, positions: &PlottingPositions) -> Result<QQFit> {
    fit_sorted(sample.sorted(), positions)
}

/// As [`fit`], taking the already-sorted ordinates directly.
pub fn fit_sorted(sorted: &[f64], positions: &PlottingPositions) -> Result<QQFit> {
    let n = sorted.len();
    if n != positions.q.len() {
        return Err(Error::domain(format!(
            "sample size {n} does not match positions length {}",
            positions.q.len()
        )));
    }
    if n < 3 {
        return Err(Error::domain("fit needs n >= 3"));
    }
    let (mu_hat, sigma_hat, rho, degenerate) = fit_pairs(&positions.q, sorted);
    Ok(QQFit {
        mu_hat,
        sigma_hat,
        rho,
        positions: positions.clone(),
        n,
        sorted: sorted.to_vec(),
        degenerate,
    })
}

/// Scale-only fit through the origin (pure scale families, e.g. the
/// exponential): sigma_hat = Σ x_(k) q_k / Σ q_k², mu_hat fixed at 0.
pub fn fit_scale_only(sample: &Sample, positions: &PlottingPositions) -> Result<QQFit> {
    let n = sample.n();
    if n != positions.q.len() {
        return Err(Error::domain(format!(
            "sample size {n} does not match positions length {}",
            positions.q.len()
        )));
    }
    let s = plot_sums(&positions.q, sample.sorted());
    if s.sum_qq <= 0.0 {
        return Err(Error::domain(
            "scale-only fit undefined: all positions q_k are zero",
        ));
    }
    let sigma_hat = s.sum_qx / s.sum_qq;
    let (_, _, rho, degenerate) = fit_pairs(&positions.q, sample.sorted());
    Ok(QQFit {
        mu_hat: 0.0,
        sigma_hat,
        rho,
        positions: positions.clone(),
        n,
        sorted: sample.sorted().to_vec(),
        degenerate,
    })
}

impl QQFit {
    /// VaR at level alpha read off the regression line:
    /// mu_hat + sigma_hat · Q_Z(1 - alpha).
    ///
    /// With `exponentiate` the estimate is mapped back to the original
    /// scale of log-transformed data; see [`VarEstimate::upward_biased`].
    pub fn var_estimate(&self, alpha: f64, exponentiate: bool) -> Result<VarEstimate> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "var_estimate: alpha must lie in (0,1), got {alpha}"
            )));
        }
        if self.degenerate {
            return Err(Error::degenerate(
                "var_estimate: fit is degenerate (zero variance)",
            ));
        }
        let q = self.positions.family.quantile(1.0 - alpha)?;
        let x = self.mu_hat + self.sigma_hat * q;
        Ok(VarEstimate {
            value: if exponentiate { x.exp() } else { x },
            upward_biased: exponentiate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use crate::order_stats::{plotting_positions, PositionMethod};

    fn weibull_positions(n: usize) -> PlottingPositions {
        plotting_positions(Family::Normal, n, PositionMethod::Weibull).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![1.0, 2.0], Transform::Identity).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN, 2.0], Transform::Identity).is_err());
        let err = Sample::new(vec![1.0, 0.0, -2.0, 3.0], Transform::Log).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("index 1") && msg.contains("index 2"), "{msg}");

        let s = Sample::new(vec![3.0, 1.0, 2.0], Transform::Identity).unwrap();
        assert_eq!(s.sorted(), &[1.0, 2.0, 3.0]);
        let s = Sample::new(vec![1.0, std::f64::consts::E], Transform::Log);
        assert!(s.is_err()); // still too short
    }

    #[test]
    fn log_transform_sorts_transformed_values() {
        let s = Sample::new(vec![10.0, 1.0, 100.0], Transform::Log).unwrap();
        let want = [0.0, 10f64.ln(), 100f64.ln()];
        for (got, want) in s.sorted().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn exactly_linear_plot_recovers_line() {
        let pos = weibull_positions(7);
        let xs: Vec<f64> = pos.q.iter().map(|q| 2.0 + 3.0 * q).collect();
        let sample = Sample::new(xs, Transform::Identity).unwrap();
        let fit = fit(&sample, &pos).unwrap();
        assert!((fit.mu_hat - 2.0).abs() < 1e-12);
        assert!((fit.sigma_hat - 3.0).abs() < 1e-12);
        assert!((fit.rho - 1.0).abs() < 1e-12);
        assert!(!fit.degenerate);
    }

    #[test]
    fn line_passes_through_centroid_and_slope_recomputes() {
        let pos = weibull_positions(9);
        let xs = vec![0.3, -1.2, 0.7, 2.4, -0.5, 1.1, 0.0, -2.2, 0.9];
        let sample = Sample::new(xs, Transform::Identity).unwrap();
        let f = fit(&sample, &pos).unwrap();

        let qm = f.positions.q.iter().sum::<f64>() / 9.0;
        let xm = f.sorted.iter().sum::<f64>() / 9.0;
        assert!((f.mu_hat + f.sigma_hat * qm - xm).abs() < 1e-12 * xm.abs().max(1.0));

        // recompute the slope from the stored pairs
        let (mu2, sigma2, rho2, _) = fit_pairs(&f.positions.q, &f.sorted);
        assert!((f.sigma_hat - sigma2).abs() <= 1e-12 * sigma2.abs());
        assert!((f.mu_hat - mu2).abs() <= 1e-12 * mu2.abs().max(1.0));
        assert!((f.rho - rho2).abs() <= 1e-15);
    }

    #[test]
    fn affine_equivariance() {
        let pos = weibull_positions(8);
        let xs = vec![0.4, -0.9, 1.3, 0.2, -1.7, 2.2, 0.8, -0.1];
        let base = fit(&Sample::new(xs.clone(), Transform::Identity).unwrap(), &pos).unwrap();

        let (a, b) = (5.25, 3.5);
        let mapped: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let shifted = fit(&Sample::new(mapped, Transform::Identity).unwrap(), &pos).unwrap();

        assert!(((shifted.mu_hat - (a + b * base.mu_hat)) / shifted.mu_hat).abs() < 1e-12);
        assert!(((shifted.sigma_hat - b * base.sigma_hat) / shifted.sigma_hat).abs() < 1e-12);
        assert!((shifted.rho - base.rho).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sample_is_flagged_not_nan_silent() {
        let pos = weibull_positions(5);
        let sample = Sample::new(vec![4.0; 5], Transform::Identity).unwrap();
        let f = fit(&sample, &pos).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.sigma_hat, 0.0);
        assert!((f.mu_hat - 4.0).abs() < 1e-12);
        assert!(f.rho.is_nan());
        assert!(f.var_estimate(0.5, false).is_err());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let pos = weibull_positions(5);
        let sample = Sample::new(vec![1.0, 2.0, 3.0], Transform::Identity).unwrap();
        assert!(fit(&sample, &pos).is_err());
        assert!(fit_scale_only(&sample, &pos).is_err());
    }

    #[test]
    fn scale_only_fit_recovers_slope() {
        let pos =
            plotting_positions(Family::Exponential, 6, PositionMethod::ExactExpectation).unwrap();
        let xs: Vec<f64> = pos.q.iter().map(|q| 3.0 * q).collect();
        let sample = Sample::new(xs, Transform::Identity).unwrap();
        let f = fit_scale_only(&sample, &pos).unwrap();
        assert!((f.sigma_hat - 3.0).abs() < 1e-12);
        assert_eq!(f.mu_hat, 0.0);
    }

    #[test]
    fn scale_only_fit_is_homogeneous() {
        let pos =
            plotting_positions(Family::Exponential, 5, PositionMethod::ExactExpectation).unwrap();
        let xs = vec![0.1, 0.5, 0.9, 1.7, 3.2];
        let f1 =
            fit_scale_only(&Sample::new(xs.clone(), Transform::Identity).unwrap(), &pos).unwrap();
        let f2 = fit_scale_only(
            &Sample::new(xs.iter().map(|x| 7.0 * x).collect(), Transform::Identity).unwrap(),
            &pos,
        )
        .unwrap();
        assert!(((f2.sigma_hat - 7.0 * f1.sigma_hat) / f2.sigma_hat).abs() < 1e-14);
    }

    #[test]
    fn var_estimate_reference_points() {
        let pos = weibull_positions(5);
        let xs: Vec<f64> = pos.q.clone(); // mu = 0, sigma = 1 exactly
        let f = fit(&Sample::new(xs, Transform::Identity).unwrap(), &pos).unwrap();

        let median = f.var_estimate(0.5, false).unwrap();
        assert!(median.value.abs() < 1e-12);
        assert!(!median.upward_biased);

        // Solvency II level: Q(0.995) = 2.575829...
        let solvency = f.var_estimate(0.005, false).unwrap();
        assert!((solvency.value - 2.5758293035489004).abs() < 1e-9);

        let exp = f.var_estimate(0.005, true).unwrap();
        assert!(exp.upward_biased);
        assert!((exp.value - solvency.value.exp()).abs() < 1e-12);

        assert!(f.var_estimate(0.0, false).is_err());
        assert!(f.var_estimate(1.0, false).is_err());
    }
}
