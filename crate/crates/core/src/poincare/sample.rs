//! φ-values of group elements and truncated Poincaré series.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::group::{cartan_power_sequence, BallEnumeration};
use crate::lie::{attracting_flag, cartan_projection, Flag, Functional, GroupElement, RootSubset};

/// One φ-value per element, with its word length (or power).
#[derive(Clone, Debug, Default, Serialize)]
pub struct PhiSample {
    pub lengths: Vec<u32>,
    pub values: Vec<f64>,
    /// `U_θ(γ)` when requested and defined.
    #[serde(skip)]
    pub flags: Option<Vec<Option<Flag>>>,
    /// False for samples without a meaningful word length (planted data).
    pub has_lengths: bool,
}

impl PhiSample {
    /// Sample without word lengths; the completeness cutoff is skipped.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidElement("non-finite φ-value".into()));
        }
        Ok(Self {
            lengths: vec![0; values.len()],
            values,
            flags: None,
            has_lengths: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_length(&self) -> u32 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// Values in nondecreasing order.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Restriction to elements of word length at most `r`.
    pub fn truncate(&self, r: u32) -> PhiSample {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.lengths[i] <= r).collect();
        PhiSample {
            lengths: keep.iter().map(|&i| self.lengths[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            flags: self
                .flags
                .as_ref()
                .map(|f| keep.iter().map(|&i| f[i].clone()).collect()),
            has_lengths: self.has_lengths,
        }
    }

    /// `N(T) = #{values ≤ T}` on a sorted copy.
    pub fn counting_table(&self, grid: &[f64]) -> Vec<(f64, usize)> {
        let v = self.sorted_values();
        grid.iter()
            .map(|&t| (t, v.partition_point(|&x| x <= t)))
            .collect()
    }
}

/// `φ(κ_θ(γ))` for every element of the ball (identity gives 0).
pub fn phi_counts(ball: &BallEnumeration, phi: &Functional, theta: &RootSubset) -> Result<PhiSample> {
    phi.require_support(theta)?;
    let values = ball.map_elements(|_, g| cartan_projection(g).map(|k| phi.eval(&k)))?;
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(PhiSample {
        lengths: ball.lengths().into_iter().map(|l| l as u32).collect(),
        values,
        flags: None,
        has_lengths: true,
    })
}

/// As [`phi_counts`], also recording `U_θ(γ)` where the gap allows.
pub fn phi_counts_with_flags(
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
    gap_tolerance: f64,
) -> Result<PhiSample> {
    phi.require_support(theta)?;
    let rows = ball.map_elements(|_, g| -> Result<(f64, Option<Flag>)> {
        let v = phi.eval(&cartan_projection(g)?);
        let f = match attracting_flag(g, theta, gap_tolerance) {
            Ok(f) => Some(f),
            Err(LabError::GapTooSmall(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((v, f))
    })?;
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (values, flags): (Vec<f64>, Vec<Option<Flag>>) = rows.into_iter().unzip();
    Ok(PhiSample {
        lengths: ball.lengths().into_iter().map(|l| l as u32).collect(),
        values,
        flags: Some(flags),
        has_lengths: true,
    })
}

/// Sample of the cyclic group `⟨g⟩`: identity and `g^{±n}`, `n ≤ N`, with
/// `|n|` as length. Uses the overflow-free Cartan iteration.
pub fn phi_counts_cyclic(g: &GroupElement, n: usize, phi: &Functional, theta: &RootSubset) -> Result<PhiSample> {
    phi.require_support(theta)?;
    let plus = cartan_power_sequence(g, n)?;
    let minus = cartan_power_sequence(&g.inverse(), n)?;
    let mut lengths = vec![0u32];
    let mut values = vec![0.0];
    for k in 0..n {
        lengths.push(k as u32 + 1);
        values.push(phi.eval(&plus[k]));
        lengths.push(k as u32 + 1);
        values.push(phi.eval(&minus[k]));
    }
    Ok(PhiSample {
        lengths,
        values,
        flags: None,
        has_lengths: true,
    })
}

/// `Σ e^{−s·φ}` over the sample.
pub fn truncated_poincare(sample: &PhiSample, s: f64) -> f64 {
    // sum in sorted order for reproducible rounding
    sample.sorted_values().iter().rev().map(|v| (-s * v).exp()).sum()
}

/// Partial sums of the series over the balls of radius `0..=max_length`.
pub fn poincare_by_radius(sample: &PhiSample, s: f64) -> Vec<(u32, f64)> {
    let r = sample.max_length();
    let mut per = vec![0.0; r as usize + 1];
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| sample.values[b].total_cmp(&sample.values[a]));
    for i in order {
        per[sample.lengths[i] as usize] += (-s * sample.values[i]).exp();
    }
    let mut acc = 0.0;
    per.iter()
        .enumerate()
        .map(|(k, x)| {
            acc += x;
            (k as u32, acc)
        })
        .collect()
}
