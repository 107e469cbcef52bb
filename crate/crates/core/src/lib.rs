//! Location-scale estimation and goodness-of-fit testing from
//! quantile-quantile plots.
//!
//! The library fits the regression line of a Q-Q plot to obtain unbiased
//! location/scale estimates, turns the plot correlation into the test
//! statistic T = -ln(1 - rho) with calibrated p-values, carries Lilliefors
//! and Shapiro-Wilk alongside for comparison, and regenerates all
//! calibration and power tables with a seeded, thread-count-independent
//! Monte Carlo engine. The main application is checking lognormality of
//! insurance combined ratios: take logs, test the logs for normality, and
//! read mean, standard deviation, and value-at-risk off the fitted line.
//!
//! ```
//! use qqfit::{correlation_test, plotting_positions, fit, Family, PositionMethod, Sample, Transform};
//!
//! let ratios = vec![
//!     0.915, 0.927, 0.878, 0.876, 0.990, 0.987, 0.932, 0.947, 0.976,
//!     0.879, 0.862, 0.917, 0.861, 0.849, 0.965, 0.949, 0.951, 0.998,
//! ];
//! let sample = Sample::new(ratios, Transform::Log).unwrap();
//! let positions = plotting_positions(Family::Normal, sample.n(), PositionMethod::FittedAB).unwrap();
//! let line = fit(&sample, &positions).unwrap();
//! let result = correlation_test(&sample).unwrap();
//! assert!(result.p_value > 0.05); // lognormality not rejected
//! assert!(line.sigma_hat > 0.0);
//! ```

pub mod distributions;
pub mod error;
pub mod gof_tests;
pub mod mc_calibration;
pub mod order_stats;
pub mod qq_regression;
pub mod report;

mod normal;
mod numeric;
mod quad;

pub use distributions::Family;
pub use error::{Error, Result};
pub use gof_tests::{
    correlation_statistic, correlation_test, correlation_test_mc, lilliefors_statistic, mc_p_value,
    normal_approx_p_value, null_params, null_params_mc, shapiro_francia_statistic,
    shapiro_wilk_statistic, t_statistic, GofResult, NullParams, NullSource, PMethod, TestKind,
};
pub use mc_calibration::{
    calibrate_null, fit_interpolation, fit_rational, power_study, CalibrationTable, McNull,
    PowerRow, QuantilePoint, RationalFit,
};
pub use order_stats::{
    expected_exponential_order_stat, expected_normal_order_stat, exponential_positions, fitted_ab,
    plotting_positions, PlottingPositions, PositionMethod,
};
pub use qq_regression::{fit, fit_scale_only, fit_sorted, QQFit, Sample, Transform, VarEstimate};
pub use report::{
    render_histogram_svg, render_qq_svg, render_scatter_svg, render_table, PlotOverrides, PlotSpec,
    TableFormat, TableRow,
};
