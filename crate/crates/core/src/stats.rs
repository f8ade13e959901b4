//! Summary statistics for reports and statistical self-tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile of already sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Box-plot statistics of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let v = sorted(xs);
        Self {
            n: v.len(),
            mean: mean(xs),
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
            min: v.first().copied().unwrap_or(f64::NAN),
            max: v.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Whisker ends: the most extreme points within 1.5 IQR of the quartiles.
    pub fn fences(&self) -> (f64, f64) {
        (self.q1 - 1.5 * self.iqr(), self.q3 + 1.5 * self.iqr())
    }

    /// Indices of points beyond the fences.
    pub fn outliers(&self, xs: &[f64]) -> Vec<usize> {
        let (lo, hi) = self.fences();
        xs.iter()
            .enumerate()
            .filter(|(_, &x)| x < lo || x > hi)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Learning-curve band over several runs at one evaluation point.
///
/// The inner band averages the 2nd and 3rd worst (lo) and the 2nd and 3rd
/// best (hi) runs; the outer band is min/max. With fewer than three runs the
/// inner band falls back to the extremes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub median: f64,
    pub inner_lo: f64,
    pub inner_hi: f64,
    pub outer_lo: f64,
    pub outer_hi: f64,
}

impl Band {
    pub fn of(xs: &[f64]) -> Self {
        let v = sorted(xs);
        let n = v.len();
        if n == 0 {
            return Self {
                median: f64::NAN,
                inner_lo: f64::NAN,
                inner_hi: f64::NAN,
                outer_lo: f64::NAN,
                outer_hi: f64::NAN,
            };
        }
        let (inner_lo, inner_hi) = if n >= 3 {
            ((v[1] + v[2]) / 2.0, (v[n - 2] + v[n - 3]) / 2.0)
        } else {
            (v[0], v[n - 1])
        };
        Self {
            median: quantile_sorted(&v, 0.5),
            inner_lo,
            inner_hi,
            outer_lo: v[0],
            outer_hi: v[n - 1],
        }
    }
}

/// Pearson chi-square statistic and its upper-tail p-value against the
/// expected counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len().max(2) - 1) as f64;
    let p = ChiSquared::new(dof).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    (stat, p)
}
