use serde::{Deserialize, Serialize};

/// 95% normal-approximation multiplier.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
}

/// Running sums for one metric. Folding in a fixed order gives a fixed result.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean and standard error using the plug-in variance, which for
    /// 0/1 samples is exactly `p(1-p)`.
    pub fn finish(&self) -> Option<MetricStats> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        let std_error = (var / n).sqrt();
        Some(MetricStats {
            mean,
            std_error,
            ci_low: mean - Z_95 * std_error,
            ci_high: mean + Z_95 * std_error,
            count: self.count,
        })
    }
}
