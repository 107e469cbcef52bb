//! Seeded, parallel Monte Carlo engine: null-distribution calibration of
//! the test statistics, empirical critical values, and type-II error
//! (power) studies against Gumbel and logistic alternatives.
//!
//! Replications are processed in fixed blocks of 4096; block b of a run
//! draws from a ChaCha stream derived from (seed, phase, b). Blocks are
//! then merged in index order, so every result is bit-identical for a
//! given (n, reps, seed) no matter how many worker threads rayon uses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::gof_tests::{NullParams, NullSource, SwWeights, TestKind};
use crate::numeric;
use crate::order_stats::{plotting_positions, PositionMethod};
use crate::qq_regression;

const BLOCK_SIZE: u64 = 4096;
const PHASE_NULL: u32 = 0;
const PHASE_ALTERNATIVE: u32 = 1;

/// Smallest replication budget accepted anywhere in the engine.
pub const MIN_REPS: u64 = 10_000;

fn block_rng(seed: u64, phase: u32, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 2^48 blocks per phase is more than any run can reach
    rng.set_stream(((phase as u64) << 48) | block);
    rng
}

/// Per-test state needed to evaluate a statistic on one sorted sample.
enum StatKernel {
    Correlation { q: Vec<f64> },
    Lilliefors,
    ShapiroWilk { weights: SwWeights },
}

impl StatKernel {
    fn new(test: TestKind, n: usize) -> Result<Self> {
        if n < test.min_n() {
            return Err(Error::domain(format!(
                "{} needs n >= {}, got {n}",
                test.name(),
                test.min_n()
            )));
        }
        Ok(match test {
            TestKind::CorrelationT => StatKernel::Correlation {
                q: plotting_positions(Family::Normal, n, PositionMethod::FittedAB)?.q,
            },
            TestKind::Lilliefors => StatKernel::Lilliefors,
            TestKind::ShapiroWilk => StatKernel::ShapiroWilk {
                weights: SwWeights::new(n)?,
            },
        })
    }

    /// Statistic of one ascending sample. Samples drawn from a continuous
    /// family are non-degenerate with probability one, so this path keeps
    /// the raw f64 without a Result.
    fn eval_sorted(&self, sorted: &[f64]) -> f64 {
        match self {
            StatKernel::Correlation { q } => {
                let rho = qq_regression::rho_pairs(q, sorted);
                if rho >= 1.0 {
                    f64::INFINITY
                } else {
                    -(1.0 - rho).ln()
                }
            }
            StatKernel::Lilliefors => {
                crate::gof_tests::lilliefors_sorted(sorted).unwrap_or(f64::NAN)
            }
            StatKernel::ShapiroWilk { weights } => weights.w_statistic(sorted),
        }
    }
}

/// Simulates `reps` statistics under samples of size n from `family`,
/// in replication order.
fn simulate_statistics(
    test: TestKind,
    family: Family,
    n: usize,
    reps: u64,
    seed: u64,
    phase: u32,
) -> Result<Vec<f64>> {
    if reps < MIN_REPS {
        return Err(Error::domain(format!(
            "need at least {MIN_REPS} replications, got {reps}"
        )));
    }
    let kernel = StatKernel::new(test, n)?;
    let blocks = reps.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, phase, b);
            let lo = b * BLOCK_SIZE;
            let hi = ((b + 1) * BLOCK_SIZE).min(reps);
            let mut buf = vec![0.0; n];
            let mut out = Vec::with_capacity((hi - lo) as usize);
            for _ in lo..hi {
                family.sample_fill(&mut buf, &mut rng);
                buf.sort_by(f64::total_cmp);
                out.push(kernel.eval_sorted(&buf));
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// A simulated null distribution of one statistic, held as the sorted
/// sample of statistic values. Backs Monte Carlo p-values and empirical
/// critical values.
#[derive(Debug, Clone)]
pub struct McNull {
    pub test: TestKind,
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    sorted: Vec<f64>,
}

impl McNull {
    /// Simulates the null (standard normal samples of size n).
    pub fn simulate(test: TestKind, n: usize, reps: u64, seed: u64) -> Result<Self> {
        let mut sorted = simulate_statistics(test, Family::Normal, n, reps, seed, PHASE_NULL)?;
        sorted.sort_by(f64::total_cmp);
        Ok(McNull {
            test,
            n,
            reps,
            seed,
            sorted,
        })
    }

    /// The simulated statistic values, ascending.
    pub fn sorted_statistics(&self) -> &[f64] {
        &self.sorted
    }

    /// (r + 1)/(reps + 1) where r counts simulated values at least as
    /// extreme as `statistic` in the test's rejection direction.
    pub fn p_value(&self, statistic: f64) -> f64 {
        let r = if self.test.rejects_left() {
            self.sorted.partition_point(|v| *v <= statistic)
        } else {
            self.reps as usize - self.sorted.partition_point(|v| *v < statistic)
        };
        (r as f64 + 1.0) / (self.reps as f64 + 1.0)
    }

    /// Empirical critical value at level alpha: the order statistic at
    /// ceil(alpha*reps) from the rejection side. The rejection regions are
    /// statistic < c for left-tailed tests and statistic > c otherwise.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "critical_value: alpha must lie in (0,1), got {alpha}"
            )));
        }
        let p = if self.test.rejects_left() {
            alpha
        } else {
            1.0 - alpha
        };
        Ok(empirical_quantile(&self.sorted, p))
    }
}

/// Order statistic at rank ceil(p*len) of an ascending slice.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let len = sorted.len();
    let rank = ((p * len as f64).ceil() as usize).clamp(1, len);
    sorted[rank - 1]
}

/// Probability/value pair of an empirical quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub p: f64,
    pub value: f64,
}

/// Equi-width binned counts, for rendering calibration histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn from_sorted(sorted: &[f64], bins: usize) -> Histogram {
        let lo = sorted[0];
        let hi = *sorted.last().unwrap();
        let mut counts = vec![0u64; bins];
        if hi > lo {
            let scale = bins as f64 / (hi - lo);
            for &v in sorted {
                let idx = (((v - lo) * scale) as usize).min(bins - 1);
                counts[idx] += 1;
            }
        } else {
            counts[0] = sorted.len() as u64;
        }
        Histogram { lo, hi, counts }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Null calibration of T_n for one sample size: fitted normal parameters,
/// empirical quantiles, and a histogram of the simulated statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    /// Sample mean of the simulated T values.
    pub mu: f64,
    /// Sample standard deviation (divisor reps - 1).
    pub sigma: f64,
    pub quantiles: Vec<QuantilePoint>,
    pub histogram: Histogram,
}

impl CalibrationTable {
    pub fn null_params(&self) -> NullParams {
        NullParams {
            n: self.n,
            mu: self.mu,
            sigma: self.sigma,
            source: NullSource::MonteCarlo,
        }
    }

    /// Tabulated quantile at probability p, if present.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|q| (q.p - p).abs() < 1e-12)
            .map(|q| q.value)
    }
}

/// Probabilities tabulated by [`calibrate_null`]. The three left-tail
/// levels drive the test; the upper ones document the right tail.
const CALIBRATION_PROBS: [f64; 7] = [0.01, 0.05, 0.10, 0.50, 0.90, 0.95, 0.99];
const HISTOGRAM_BINS: usize = 60;

/// Simulates the null distribution of T_n and summarizes it.
///
/// Deterministic for fixed (n, reps, seed) regardless of thread count.
/// n >= 5 and reps >= 10^4 are required; 10^5 replications pin mu and
/// sigma to about +-0.005 (three standard errors).
pub fn calibrate_null(n: usize, reps: u64, seed: u64) -> Result<CalibrationTable> {
    if n < 5 {
        return Err(Error::domain(format!(
            "calibrate_null needs n >= 5, got {n}"
        )));
    }
    let stats = simulate_statistics(
        TestKind::CorrelationT,
        Family::Normal,
        n,
        reps,
        seed,
        PHASE_NULL,
    )?;
    let (mu, sigma) = numeric::mean_and_sd(&stats);
    let mut sorted = stats;
    sorted.sort_by(f64::total_cmp);
    let quantiles = CALIBRATION_PROBS
        .iter()
        .map(|&p| QuantilePoint {
            p,
            value: empirical_quantile(&sorted, p),
        })
        .collect();
    let histogram = Histogram::from_sorted(&sorted, HISTOGRAM_BINS);
    Ok(CalibrationTable {
        n,
        reps,
        seed,
        mu,
        sigma,
        quantiles,
        histogram,
    })
}

/// A rational curve (p n + q)/(n + r) fitted to calibration summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalFit {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl RationalFit {
    pub fn eval(&self, n: f64) -> f64 {
        (self.p * n + self.q) / (n + self.r)
    }
}

/// Least-squares fit of (p n + q)/(n + r) through (n_i, y_i) points.
///
/// Starts from the linearized system p n + q - r y = y n and polishes with
/// Gauss-Newton on the true residuals. Three points inside the model class
/// are reproduced exactly.
pub fn fit_rational(points: &[(f64, f64)]) -> Result<RationalFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "rational fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    // linearized normal equations
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for &(n, y) in points {
        let row = [n, 1.0, -y];
        let rhs = y * n;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            v[i] += row[i] * rhs;
        }
    }
    let sol = solve3(m, v)?;
    let mut fitted = RationalFit {
        p: sol[0],
        q: sol[1],
        r: sol[2],
    };

    // Gauss-Newton polish of the unweighted residuals
    for _ in 0..60 {
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for &(n, y) in points {
            let den = n + fitted.r;
            if den.abs() < 1e-9 {
                return Err(Error::numeric(
                    "rational fit degenerate: pole at a data abscissa",
                ));
            }
            let res = fitted.eval(n) - y;
            let jac = [n / den, 1.0 / den, -(fitted.p * n + fitted.q) / (den * den)];
            for i in 0..3 {
                for j in 0..3 {
                    jtj[i][j] += jac[i] * jac[j];
                }
                jtr[i] += jac[i] * res;
            }
        }
        let Ok(step) = solve3(jtj, jtr) else {
            break; // keep the current iterate; the linearized fit stands
        };
        fitted.p -= step[0];
        fitted.q -= step[1];
        fitted.r -= step[2];
        let scale = fitted.p.abs() + fitted.q.abs() + fitted.r.abs() + 1.0;
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-13 * scale {
            break;
        }
    }
    Ok(fitted)
}

/// Gaussian elimination with partial pivoting for a 3x3 system.
#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Result<[f64; 3]> {
    let scale = m
        .iter()
        .flatten()
        .map(|x| x.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 * scale {
            return Err(Error::numeric("rank-deficient system in rational fit"));
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for j in col..3 {
                m[row][j] -= f * m[col][j];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = v[i];
        for j in (i + 1)..3 {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Ok(x)
}

/// Fits the rational interpolation curves for mu_n and sigma_n to a set of
/// calibration tables (at least 4, ideally spanning n = 10..50).
pub fn fit_interpolation(tables: &[CalibrationTable]) -> Result<(RationalFit, RationalFit)> {
    if tables.len() < 4 {
        return Err(Error::domain(format!(
            "interpolation fit needs at least 4 calibration tables, got {}",
            tables.len()
        )));
    }
    let mu_pts: Vec<(f64, f64)> = tables.iter().map(|t| (t.n as f64, t.mu)).collect();
    let sigma_pts: Vec<(f64, f64)> = tables.iter().map(|t| (t.n as f64, t.sigma)).collect();
    Ok((fit_rational(&mu_pts)?, fit_rational(&sigma_pts)?))
}

/// One line of a power study: type-II error rate beta at type-I level
/// alpha against a fixed alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub test: TestKind,
    pub alternative: Family,
    pub n: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub beta: f64,
    pub reps: u64,
    pub seed: u64,
}

/// Estimates type-II error rates for one test against one alternative.
///
/// Critical values come from a fresh null simulation (empirical quantiles,
/// left tail for the correlation and Shapiro-Wilk tests, right tail for
/// Lilliefors); beta is the fraction of alternative-sampled statistics
/// landing in the acceptance region. Alternatives are simulated in their
/// standard form only; all three statistics are location-scale invariant,
/// so nothing is lost.
pub fn power_study(
    test: TestKind,
    alternative: Family,
    n: usize,
    alphas: &[f64],
    reps: u64,
    seed: u64,
) -> Result<Vec<PowerRow>> {
    if !matches!(alternative, Family::Gumbel | Family::Logistic) {
        return Err(Error::domain(format!(
            "power study alternatives are Gumbel and logistic, got {}",
            alternative.name()
        )));
    }
    if alphas.is_empty() {
        return Err(Error::domain("power study needs at least one alpha"));
    }
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(format!("alpha {a} outside (0,1)")));
        }
    }

    let null = McNull::simulate(test, n, reps, seed)?;
    let mut alt = simulate_statistics(test, alternative, n, reps, seed, PHASE_ALTERNATIVE)?;
    alt.sort_by(f64::total_cmp);

    let rows = alphas
        .iter()
        .map(|&alpha| {
            let critical_value = null.critical_value(alpha).expect("alpha validated");
            let accepted = if test.rejects_left() {
                // acceptance region: statistic >= c
                alt.len() - alt.partition_point(|v| *v < critical_value)
            } else {
                // acceptance region: statistic <= c
                alt.partition_point(|v| *v <= critical_value)
            };
            PowerRow {
                test,
                alternative,
                n,
                alpha,
                critical_value,
                beta: accepted as f64 / reps as f64,
                reps,
                seed,
            }
        })
        .collect();
    Ok(rows)
}
