//! Compensated floating-point accumulation.
//!
//! Every moment and total in this crate is accumulated through the
//! Neumaier variant of Kahan summation so that identities asserted at
//! 1e-12 relative tolerance survive tapes with millions of ticks.

/// Running compensated sum (Kahan-Neumaier).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of values.
pub fn sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Arithmetic mean with compensated accumulation.
pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Mean of squares, (1/N) sum x_i^2.
pub fn mean_sq(values: &[f64]) -> f64 {
    sum(values.iter().map(|x| x * x)) / values.len() as f64
}

/// Population second central moment, (1/N) sum (x_i - m)^2.
pub fn central_sq(values: &[f64], m: f64) -> f64 {
    sum(values.iter().map(|x| {
        let d = x - m;
        d * d
    })) / values.len() as f64
}

/// Population cross moment, (1/N) sum (x_i - mx)(y_i - my).
pub fn central_cross(xs: &[f64], ys: &[f64], mx: f64, my: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my))) / xs.len() as f64
}
