//! Goodness-of-fit statistics and p-values: the Q-Q correlation test,
//! plus Lilliefors and Shapiro-Wilk for comparison.
//!
//! The correlation statistic is T_n = -ln(1 - rho_n), where rho_n is the
//! Pearson correlation of a Q-Q plot drawn with the fitted plotting
//! positions ([`PositionMethod::FittedAB`]). Under normality the null
//! distribution of T_n is itself close to normal for n >= 10, so p-values
//! come from a plain normal approximation with tabulated (mu_n, sigma_n);
//! outside the tabulated range they come from Monte Carlo simulation.
//! All three statistics are invariant under positive affine maps of the
//! data, which is what makes a single null calibration per n sufficient.

mod shapiro;

pub use shapiro::SwWeights;

use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::mc_calibration::McNull;
use crate::normal;
use crate::numeric;
use crate::order_stats::{plotting_positions, PositionMethod};
use crate::qq_regression::{fit, QQFit, Sample};

/// Replications used when a null distribution has to be simulated and the
/// caller did not specify a budget.
pub const DEFAULT_CALIBRATION_REPS: u64 = 100_000;
/// Seed for the same situation.
pub const DEFAULT_CALIBRATION_SEED: u64 = 42;

/// The three tests of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// T_n = -ln(1 - rho_n); small values indicate a poor fit, so the
    /// p-value is the left tail of the null distribution.
    CorrelationT,
    /// Kolmogorov-Smirnov distance against a normal with mean and standard
    /// deviation estimated from the same sample; rejects for large values.
    Lilliefors,
    /// Royston's W; rejects for small values.
    ShapiroWilk,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::CorrelationT => "correlation_t",
            TestKind::Lilliefors => "lilliefors",
            TestKind::ShapiroWilk => "shapiro_wilk",
        }
    }

    /// True when small statistic values are the extreme (rejecting) ones.
    pub fn rejects_left(self) -> bool {
        matches!(self, TestKind::CorrelationT | TestKind::ShapiroWilk)
    }

    /// Smallest sample size the statistic is defined for.
    pub fn min_n(self) -> usize {
        match self {
            TestKind::CorrelationT => 3,
            TestKind::Lilliefors => 4,
            TestKind::ShapiroWilk => 3,
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "correlation" | "correlation-t" | "correlation_t" => TestKind::CorrelationT,
            "lilliefors" => TestKind::Lilliefors,
            "shapiro-wilk" | "shapiro_wilk" | "shapiro" => TestKind::ShapiroWilk,
            other => return Err(Error::domain(format!("unknown test '{other}'"))),
        })
    }
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PMethod {
    NormalApprox,
    MonteCarlo,
}

impl PMethod {
    pub fn name(self) -> &'static str {
        match self {
            PMethod::NormalApprox => "normal-approx",
            PMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Outcome of one test on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub p_method: PMethod,
    pub n: usize,
}

impl GofResult {
    /// Reject the null at level alpha iff p < alpha.
    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Where null-distribution parameters (mu_n, sigma_n) for T_n come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSource {
    /// Bundled reference values from a large calibration run
    /// (10^6 replications per n); available for
    /// n in {10..=20, 26, 50}.
    ReferenceTable,
    /// Rational interpolation of the reference values, valid for
    /// 10 <= n <= 50.
    Interpolation,
    /// Fresh Monte Carlo calibration (any n >= 5).
    MonteCarlo,
}

/// Normal approximation N(mu, sigma^2) of the null distribution of T_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullParams {
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub source: NullSource,
}

/// Reference (mu_n, sigma_n) of the T_n null distribution, from a
/// 10^6-replication calibration run per n. `calibrate_null` regenerates
/// these to Monte Carlo accuracy.
const REFERENCE_NULL_PARAMS: [(usize, f64, f64); 13] = [
    (10, 3.5221, 0.6323),
    (11, 3.5727, 0.6201),
    (12, 3.6219, 0.6103),
    (13, 3.6696, 0.6005),
    (14, 3.7152, 0.5935),
    (15, 3.7584, 0.5873),
    (16, 3.7998, 0.5813),
    (17, 3.8385, 0.5767),
    (18, 3.8773, 0.5730),
    (19, 3.9119, 0.5679),
    (20, 3.9475, 0.5645),
    (26, 4.1328, 0.5473),
    (50, 4.6259, 0.5138),
];

/// Rational interpolation of the reference parameters in n, calibrated on
/// 10 <= n <= 50:
///
///   mu_n    = (5.87383 n + 101.011)/(n + 35.3404)
///   sigma_n = (0.477812 n + 3.25495)/(n + 2.72721)
pub fn interpolated_null_params(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (
        (5.87383 * nf + 101.011) / (nf + 35.3404),
        (0.477812 * nf + 3.25495) / (nf + 2.72721),
    )
}

/// Null parameters for T_n from the requested source.
pub fn null_params(n: usize, source: NullSource) -> Result<NullParams> {
    match source {
        NullSource::ReferenceTable => REFERENCE_NULL_PARAMS
            .iter()
            .find(|(m, _, _)| *m == n)
            .map(|&(_, mu, sigma)| NullParams {
                n,
                mu,
                sigma,
                source,
            })
            .ok_or_else(|| {
                Error::domain(format!(
                    "n = {n} is not in the reference table (10..=20, 26, 50)"
                ))
            }),
        NullSource::Interpolation => {
            if !(10..=50).contains(&n) {
                return Err(Error::domain(format!(
                    "interpolated null parameters are calibrated for 10 <= n <= 50, got {n}"
                )));
            }
            let (mu, sigma) = interpolated_null_params(n);
            Ok(NullParams {
                n,
                mu,
                sigma,
                source,
            })
        }
        NullSource::MonteCarlo => {
            null_params_mc(n, DEFAULT_CALIBRATION_REPS, DEFAULT_CALIBRATION_SEED)
        }
    }
}

/// Null parameters from a fresh (deterministic, seeded) calibration run.
pub fn null_params_mc(n: usize, reps: u64, seed: u64) -> Result<NullParams> {
    let table = crate::mc_calibration::calibrate_null(n, reps, seed)?;
    Ok(table.null_params())
}

/// Best available (mu_n, sigma_n) for the normal approximation: the
/// reference table where tabulated, the interpolation in its gaps.
fn normal_approx_params(n: usize) -> Result<NullParams> {
    if REFERENCE_NULL_PARAMS.iter().any(|(m, _, _)| *m == n) {
        null_params(n, NullSource::ReferenceTable)
    } else if (10..=50).contains(&n) {
        null_params(n, NullSource::Interpolation)
    } else {
        Err(Error::domain(format!(
            "no normal approximation of the T null distribution for n = {n} \
             (calibrated range is 10..=50); use Monte Carlo p-values"
        )))
    }
}

/// T_n = -ln(1 - rho) from a fitted Q-Q plot.
///
/// The null calibration assumes the plot was drawn with
/// [`PositionMethod::FittedAB`] positions. A perfectly linear plot
/// (rho = 1 up to machine epsilon) saturates to +infinity, the explicit
/// "perfect fit" representation; its p-value is 1 under any null.
pub fn t_statistic(fit: &QQFit) -> Result<f64> {
    if fit.degenerate || fit.rho.is_nan() {
        return Err(Error::degenerate(
            "t_statistic: degenerate fit has no defined correlation",
        ));
    }
    if fit.rho >= 1.0 - f64::EPSILON {
        return Ok(f64::INFINITY);
    }
    Ok(-(1.0 - fit.rho).ln())
}

/// Left-tail p-value of T under the normal approximation of the null:
/// p = Phi((t - mu_n)/sigma_n). Small correlation means small T means
/// small p.
pub fn normal_approx_p_value(t: f64, n: usize) -> Result<f64> {
    let params = normal_approx_params(n)?;
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(normal::cdf((t - params.mu) / params.sigma))
}

/// Runs the correlation test with normal-approximation p-values.
///
/// Needs n >= 10 (the approximation is only good from there); for smaller
/// samples use [`correlation_test_mc`].
pub fn correlation_test(sample: &Sample) -> Result<GofResult> {
    let n = sample.n();
    if n < 10 {
        return Err(Error::domain(format!(
            "normal-approximation p-values need n >= 10 (got {n}); use Monte Carlo"
        )));
    }
    let t = correlation_statistic(sample)?;
    let p_value = normal_approx_p_value(t, n)?;
    Ok(GofResult {
        test: TestKind::CorrelationT,
        statistic: t,
        p_value,
        p_method: PMethod::NormalApprox,
        n,
    })
}

/// Correlation test with a simulated null distribution (any n >= 3).
pub fn correlation_test_mc(sample: &Sample, reps: u64, seed: u64) -> Result<GofResult> {
    let n = sample.n();
    let t = correlation_statistic(sample)?;
    let p_value = mc_p_value(TestKind::CorrelationT, t, n, reps, seed)?;
    Ok(GofResult {
        test: TestKind::CorrelationT,
        statistic: t,
        p_value,
        p_method: PMethod::MonteCarlo,
        n,
    })
}

/// T_n for a sample (fitted positions, location-scale fit, -ln(1 - rho)).
pub fn correlation_statistic(sample: &Sample) -> Result<f64> {
    let positions = plotting_positions(Family::Normal, sample.n(), PositionMethod::FittedAB)?;
    let fitted = fit(sample, &positions)?;
    t_statistic(&fitted)
}

/// Lilliefors statistic: the Kolmogorov-Smirnov distance between the
/// empirical CDF and the normal fitted by x-bar and s (divisor n-1),
///
///   d_n = max_k max(|k/n - Phi(z_(k))|, |Phi(z_(k)) - (k-1)/n|).
pub fn lilliefors_statistic(sample: &Sample) -> Result<f64> {
    if sample.n() < 4 {
        return Err(Error::domain(format!(
            "Lilliefors needs n >= 4, got {}",
            sample.n()
        )));
    }
    lilliefors_sorted(sample.sorted())
}

pub(crate) fn lilliefors_sorted(sorted: &[f64]) -> Result<f64> {
    let (mean, sd) = numeric::mean_and_sd(sorted);
    if sd <= 0.0 || sd.is_nan() {
        return Err(Error::degenerate(
            "Lilliefors undefined for zero sample variance",
        ));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal::cdf((x - mean) / sd);
        let above = ((i + 1) as f64 / n - f).abs();
        let below = (f - i as f64 / n).abs();
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Shapiro-Wilk W with Royston's weights; see [`shapiro`](self) internals.
pub fn shapiro_wilk_statistic(sample: &Sample) -> Result<f64> {
    let weights = SwWeights::new(sample.n())?;
    let w = weights.w_statistic(sample.sorted());
    if w.is_nan() {
        return Err(Error::degenerate(
            "Shapiro-Wilk undefined for zero sample variance",
        ));
    }
    Ok(w)
}

/// Shapiro-Francia variant: the squared Q-Q correlation against the exact
/// expected normal order statistics. The natural companion of the
/// correlation test (identical plot, squared instead of log-transformed).
pub fn shapiro_francia_statistic(sample: &Sample) -> Result<f64> {
    let positions =
        plotting_positions(Family::Normal, sample.n(), PositionMethod::ExactExpectation)?;
    let fitted = fit(sample, &positions)?;
    if fitted.degenerate {
        return Err(Error::degenerate(
            "Shapiro-Francia undefined for zero sample variance",
        ));
    }
    Ok(fitted.rho * fitted.rho)
}

/// Monte Carlo p-value: the fraction of simulated null statistics at least
/// as extreme as the observed one (left tail for the correlation and
/// Shapiro-Wilk tests, right tail for Lilliefors), with the add-one
/// continuity correction (r + 1)/(reps + 1).
///
/// Replications run in fixed blocks whose generators derive from
/// (seed, block index), so the result is independent of thread count.
pub fn mc_p_value(test: TestKind, statistic: f64, n: usize, reps: u64, seed: u64) -> Result<f64> {
    let null = McNull::simulate(test, n, reps, seed)?;
    Ok(null.p_value(statistic))
}
