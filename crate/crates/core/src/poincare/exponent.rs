//! Critical-exponent estimation from orbit counting.

use serde::Serialize;

use super::sample::PhiSample;
use crate::error::{LabError, Result};
use crate::stats::linear_fit;

/// Threshold on log-sum slopes separating divergent from convergent tails.
pub const SLOPE_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub sample_count: usize,
    pub method: String,
}

/// How the regression window is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowPolicy {
    /// Fraction of the usable φ-range, taken from the top.
    pub upper_fraction: f64,
    /// Minimum number of sample values inside the window.
    pub min_points: usize,
    /// `N_{R−1}(T) ≥ completeness · N_R(T)` marks `T` as complete.
    pub completeness: f64,
    /// Regression grid size.
    pub grid: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            upper_fraction: 0.4,
            min_points: 200,
            completeness: 0.95,
            grid: 100,
        }
    }
}

/// Largest `T` up to which the counting function is not visibly truncated
/// by the word radius: the ball of radius `R − 1` still holds a
/// `completeness` fraction of the elements with `φ ≤ T`.
pub fn completeness_cutoff(sample: &PhiSample, completeness: f64) -> f64 {
    let sorted = sample.sorted_values();
    let t_max = *sorted.last().unwrap_or(&0.0);
    let r = sample.max_length();
    if !sample.has_lengths || r < 2 {
        return t_max;
    }
    let mut inner: Vec<f64> = (0..sample.len())
        .filter(|&i| sample.lengths[i] < r)
        .map(|i| sample.values[i])
        .collect();
    inner.sort_by(f64::total_cmp);
    let t_min = sorted[0];
    let steps = 1000;
    let mut cutoff = t_min;
    for k in 1..=steps {
        let t = t_min + (t_max - t_min) * k as f64 / steps as f64;
        let n_all = sorted.partition_point(|&x| x <= t) as f64;
        let n_inner = inner.partition_point(|&x| x <= t) as f64;
        if n_inner < completeness * n_all {
            break;
        }
        cutoff = t;
    }
    cutoff
}

/// Least-squares slope of `log N(T)` against `T` over the upper part of the
/// complete range. The error bar is the larger of the regression standard
/// error and half the gap between the slopes of the two half-windows.
pub fn counting_exponent(sample: &PhiSample, policy: WindowPolicy) -> Result<ExponentEstimate> {
    if sample.is_empty() {
        return Err(LabError::InsufficientData("empty sample".into()));
    }
    let sorted = sample.sorted_values();
    let t_lo = sorted[0];
    let t_c = completeness_cutoff(sample, policy.completeness);
    let w_lo = t_c - policy.upper_fraction * (t_c - t_lo);
    let inside = sorted.partition_point(|&x| x <= t_c) - sorted.partition_point(|&x| x < w_lo);
    if !(t_c > t_lo) || inside < policy.min_points {
        return Err(LabError::InsufficientData(format!(
            "{inside} values in window [{w_lo:.3}, {t_c:.3}], need {}",
            policy.min_points
        )));
    }
    window_estimate(&sorted, (w_lo, t_c), policy.grid)
}

/// Counting slope on a fixed window of an already sorted sample.
fn window_estimate(sorted: &[f64], window: (f64, f64), grid: usize) -> Result<ExponentEstimate> {
    let (w_lo, w_hi) = window;
    let fit_on = |a: f64, b: f64| {
        let ts: Vec<f64> = (0..grid).map(|k| a + (b - a) * k as f64 / (grid - 1) as f64).collect();
        let logs: Vec<f64> = ts
            .iter()
            .map(|&t| (sorted.partition_point(|&x| x <= t).max(1) as f64).ln())
            .collect();
        linear_fit(&ts, &logs)
    };
    let fit = fit_on(w_lo, w_hi).ok_or_else(|| LabError::InsufficientData("degenerate window".into()))?;
    let mid = 0.5 * (w_lo + w_hi);
    let halves = fit_on(w_lo, mid).zip(fit_on(mid, w_hi));
    let spread = halves.map_or(0.0, |(a, b)| 0.5 * (a.slope - b.slope).abs());
    Ok(ExponentEstimate {
        value: fit.slope,
        stderr: fit.slope_stderr.max(spread),
        window,
        sample_count: sorted.partition_point(|&x| x <= w_hi) - sorted.partition_point(|&x| x < w_lo),
        method: "counting".into(),
    })
}

/// Counting slopes of the radius-`r` truncations, all on the window the
/// policy picks for the full sample. Each `N_r(T)` undercounts `N(T)`, more
/// so at larger `T`, so the slopes approach the full-sample value from
/// below as `r` grows.
pub fn radius_sweep(sample: &PhiSample, radii: &[u32], policy: WindowPolicy) -> Result<Vec<(u32, ExponentEstimate)>> {
    let full = counting_exponent(sample, policy)?;
    radii
        .iter()
        .map(|&r| {
            let sorted = sample.truncate(r).sorted_values();
            let mut e = window_estimate(&sorted, full.window, policy.grid)?;
            e.method = "counting, fixed window".into();
            Ok((r, e))
        })
        .collect()
}

/// Slope of `log Σ_{bin} e^{−sφ}` against bin centre, over `bins` equal
/// φ-bins of the window. Positive slope means the tail still grows.
pub fn shell_slope(sorted: &[f64], window: (f64, f64), bins: usize, s: f64) -> Option<f64> {
    let (a, b) = window;
    let width = (b - a) / bins as f64;
    let mut centers = Vec::with_capacity(bins);
    let mut logs = Vec::with_capacity(bins);
    for k in 0..bins {
        let lo = a + width * k as f64;
        let hi = lo + width;
        let i0 = sorted.partition_point(|&x| x < lo);
        let i1 = if k + 1 == bins {
            sorted.partition_point(|&x| x <= hi)
        } else {
            sorted.partition_point(|&x| x < hi)
        };
        if i1 > i0 {
            // factor out e^{−s·lo} to keep the sum in range
            let sum: f64 = sorted[i0..i1].iter().map(|&v| (-s * (v - lo)).exp()).sum();
            centers.push(lo + 0.5 * width);
            logs.push(sum.ln() - s * lo);
        }
    }
    linear_fit(&centers, &logs).map(|f| f.slope)
}

/// Exponent from the divergence classifier. An exponent `s` is divergent
/// when the shell slope exceeds `+SLOPE_THRESHOLD` and convergent when it is
/// below `−SLOPE_THRESHOLD`; the estimate is the midpoint of the ambiguous
/// band between the two, located by bisection.
pub fn classifier_exponent(sorted: &[f64], window: (f64, f64), bins: usize) -> Result<f64> {
    let slope = |s: f64| -> Result<f64> {
        shell_slope(sorted, window, bins, s).ok_or_else(|| LabError::InsufficientData("too few nonempty bins".into()))
    };
    // smallest s ≥ 0 with slope(s) ≤ target
    let crossing = |target: f64| -> Result<f64> {
        if slope(0.0)? <= target {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while slope(hi)? > target {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(LabError::ClassifierAmbiguous("no convergent exponent found".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let divergent_below = crossing(SLOPE_THRESHOLD)?;
    let convergent_above = crossing(-SLOPE_THRESHOLD)?;
    Ok(0.5 * (divergent_below + convergent_above))
}

/// Number of φ-bins used by the classifier.
pub const CLASSIFIER_BINS: usize = 20;

/// Counting estimate cross-checked by the shell classifier. The two must
/// agree within `2·stderr + SLOPE_THRESHOLD`, the last term being the
/// half-width of the classifier's ambiguous band.
pub fn critical_exponent(sample: &PhiSample, policy: WindowPolicy) -> Result<ExponentEstimate> {
    let est = counting_exponent(sample, policy)?;
    let sorted = sample.sorted_values();
    let cls = classifier_exponent(&sorted, est.window, CLASSIFIER_BINS)?;
    let tolerance = 2.0 * est.stderr + SLOPE_THRESHOLD;
    if (cls - est.value).abs() > tolerance {
        return Err(LabError::Inconsistent {
            counting: est.value,
            classifier: cls,
            tolerance,
        });
    }
    Ok(ExponentEstimate {
        method: "counting+classifier".into(),
        ..est
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(delta: f64, count: usize) -> PhiSample {
        // N(T) = ⌊e^{δT}⌋: the k-th value is log(k)/δ
        PhiSample::from_values((1..=count).map(|k| (k as f64).ln() / delta).collect()).unwrap()
    }

    #[test]
    fn planted_half() {
        let e = counting_exponent(&planted(0.5, 100_000), WindowPolicy::default()).unwrap();
        assert!((e.value - 0.5).abs() < 0.01, "{e:?}");
    }

    #[test]
    fn planted_recovered_within_three_stderr() {
        for delta in [0.3, 0.7, 1.0, 1.6] {
            let e = counting_exponent(&planted(delta, 50_000), WindowPolicy::default()).unwrap();
            assert!((e.value - delta).abs() <= 3.0 * e.stderr + 1e-3, "{delta}: {e:?}");
        }
    }

    #[test]
    fn planted_seven_tenths_passes_cross_check() {
        let e = critical_exponent(&planted(0.7, 100_000), WindowPolicy::default()).unwrap();
        assert!((e.value - 0.7).abs() < 0.02, "{e:?}");
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            counting_exponent(&planted(0.5, 50), WindowPolicy::default()),
            Err(LabError::InsufficientData(_))
        ));
    }

    #[test]
    fn linear_growth_has_zero_exponent() {
        let s = PhiSample::from_values((0..20_000).map(|k| k as f64 * 2.77).collect()).unwrap();
        let e = counting_exponent(&s, WindowPolicy::default()).unwrap();
        assert!(e.value.abs() < 0.02);
    }
}
