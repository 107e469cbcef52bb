//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator. The regression estimators and the
/// Monte Carlo aggregates are sums of up to 10^6 terms; plain summation
/// would eat into the test tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated mean.
pub(crate) fn mean(values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Mean and standard deviation (divisor n-1) in one pass over the data.
pub(crate) fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    let ss = kahan_sum(values.iter().map(|&v| (v - m) * (v - m)));
    (m, (ss / (n as f64 - 1.0)).sqrt())
}

/// ln(n!) by direct summation. Exact enough for n <= a few thousand and
/// avoids pulling in a full log-gamma implementation.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    kahan_sum((2..=n).map(|i| (i as f64).ln()))
}

/// ln C(n, k) without overflow; C(400, 200) itself is far past f64 range.
pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}
