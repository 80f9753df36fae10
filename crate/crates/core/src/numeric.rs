//! Small numeric helpers shared across modules.

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of reals.
pub fn stable_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ceil(x)` that ignores relative float noise below 1e-9, so that
/// `(1 + 1/0.2) * 500` yields 3000 and not 3001.
pub fn robust_ceil(x: f64) -> f64 {
    let slack = 1e-9 * x.abs().max(1.0);
    let down = x.floor();
    if x - down <= slack {
        down
    } else {
        x.ceil()
    }
}
