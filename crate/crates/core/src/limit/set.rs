//! Limit-set samples, transversality audits and north–south dynamics.
//!
//! A finite ball only ever sees attracting flags of its elements, so every
//! audit here is evidence about the limit set, never a certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::group::BallEnumeration;
use crate::lie::{attracting_flag, flag_distance, flag_transversality_margin, kak_frames, Flag, GroupElement, RootSubset};
use crate::linalg::Mat;
use crate::stats::median;

/// Flags closer than this are the same accumulation target.
pub const MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct LimitPoint {
    /// Ball index of the element.
    pub index: usize,
    pub length: usize,
    pub flag: Flag,
    /// `min_{j∈θ} log(σ_j/σ_{j+1})`.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSetSample {
    #[serde(skip)]
    pub theta: RootSubset,
    pub points: Vec<LimitPoint>,
    pub excluded_identity: usize,
    pub excluded_low_gap: usize,
}

impl LimitSetSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Greedy clustering at `tol`: number of distinct flags.
    pub fn distinct_targets(&self, tol: f64) -> Result<Vec<Flag>> {
        let mut reps: Vec<Flag> = Vec::new();
        for p in &self.points {
            let mut found = false;
            for r in &reps {
                if flag_distance(r, &p.flag, &self.theta)? <= tol {
                    found = true;
                    break;
                }
            }
            if !found {
                reps.push(p.flag.clone());
            }
        }
        Ok(reps)
    }

    /// Per word length, the median distance from a flag to its nearest
    /// neighbour of the same length. At most `cap` flags per length, taken
    /// with a fixed stride.
    pub fn nearest_neighbor_profile(&self, cap: usize) -> Result<Vec<(usize, f64)>> {
        let max_len = self.points.iter().map(|p| p.length).max().unwrap_or(0);
        let mut out = Vec::new();
        for len in 1..=max_len {
            let all: Vec<&Flag> = self.points.iter().filter(|p| p.length == len).map(|p| &p.flag).collect();
            if all.len() < 2 {
                continue;
            }
            let stride = all.len().div_ceil(cap.max(2));
            let flags: Vec<&Flag> = all.into_iter().step_by(stride).collect();
            let nn: Vec<f64> = flags
                .par_iter()
                .enumerate()
                .map(|(i, f)| -> Result<f64> {
                    let mut best = f64::INFINITY;
                    for (k, g) in flags.iter().enumerate() {
                        if k != i {
                            best = best.min(flag_distance(f, g, &self.theta)?);
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<_>>()?;
            out.push((len, median(&nn).expect("at least two flags")));
        }
        Ok(out)
    }
}

/// Attracting flags `U_θ(γ)` of every ball element whose gap exceeds
/// `log(1 + gap_tolerance)`.
pub fn limit_set_sample(ball: &BallEnumeration, theta: &RootSubset, gap_tolerance: f64) -> Result<LimitSetSample> {
    let threshold = (1.0 + gap_tolerance).ln();
    let raw = ball.map_elements(|i, g| -> Result<Option<(f64, Flag)>> {
        if i == 0 {
            return Ok(None);
        }
        let kak = kak_frames(g)?;
        let gap = theta
            .pairs()
            .map(|(f, j)| kak.kappa.factor(f)[j - 1] - kak.kappa.factor(f)[j])
            .fold(f64::INFINITY, f64::min);
        if gap <= threshold {
            return Ok(None);
        }
        Ok(Some((gap, Flag::new(kak.m, theta.clone())?)))
    })?;
    let mut points = Vec::new();
    let mut excluded_low_gap = 0;
    for (i, r) in raw.into_iter().enumerate() {
        match r? {
            Some((gap, flag)) => points.push(LimitPoint {
                index: i,
                length: ball.length(i),
                flag,
                gap,
            }),
            None if i > 0 => excluded_low_gap += 1,
            None => {}
        }
    }
    Ok(LimitSetSample {
        theta: theta.clone(),
        points,
        excluded_identity: 1,
        excluded_low_gap,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    /// Exhaustive below this many pairs, uniform random pairs otherwise.
    pub pair_budget: usize,
    pub seed: u64,
    pub merge_tolerance: f64,
    /// Pairs closer than this in flag distance are counted but not audited.
    pub min_separation: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            pair_budget: 200_000,
            seed: 0,
            merge_tolerance: MERGE_TOLERANCE,
            min_separation: 0.0,
        }
    }
}

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct TransversalityReport {
    /// `None` when no pair was audited.
    pub min_margin: Option<f64>,
    /// Sample indices of the pair attaining the minimum.
    pub witness: Option<(usize, usize)>,
    /// Smallest `margin / distance` over audited pairs.
    pub min_ratio: Option<f64>,
    /// Margins binned on `[0, 1]`.
    pub histogram: Vec<usize>,
    pub audited: usize,
    pub merged: usize,
    pub near: usize,
}

/// Transversality margins between sampled limit flags with distinct
/// targets.
pub fn transversality_audit(sample: &LimitSetSample, opts: &AuditOptions) -> Result<TransversalityReport> {
    let n = sample.points.len();
    let total = n * n.saturating_sub(1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= opts.pair_budget {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.pair_budget)
            .map(|_| loop {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    break (i.min(j), i.max(j));
                }
            })
            .collect()
    };
    let theta = &sample.theta;
    let results: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let (a, b) = (&sample.points[i].flag, &sample.points[j].flag);
            Ok((flag_distance(a, b, theta)?, flag_transversality_margin(a, b, theta)?))
        })
        .collect::<Result<_>>()?;
    let mut report = TransversalityReport {
        min_margin: None,
        witness: None,
        min_ratio: None,
        histogram: vec![0; HISTOGRAM_BINS],
        audited: 0,
        merged: 0,
        near: 0,
    };
    for (&(i, j), &(dist, margin)) in pairs.iter().zip(&results) {
        if dist <= opts.merge_tolerance {
            report.merged += 1;
            continue;
        }
        if dist < opts.min_separation {
            report.near += 1;
            continue;
        }
        report.audited += 1;
        let bin = ((margin * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        report.histogram[bin] += 1;
        if report.min_margin.is_none_or(|m| margin < m) {
            report.min_margin = Some(margin);
            report.witness = Some((i, j));
        }
        let ratio = margin / dist;
        if report.min_ratio.is_none_or(|r| ratio < r) {
            report.min_ratio = Some(ratio);
        }
    }
    Ok(report)
}

/// Orthonormalized Gaussian frames: generic flags for dynamics tests.
pub fn random_flags(theta: &RootSubset, count: usize, seed: u64) -> Result<Vec<Flag>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let frames = theta
                .dims()
                .iter()
                .map(|&d| Mat::from_fn(d, d, |_, _| rng.sample(StandardNormal)))
                .collect();
            Flag::new(frames, theta.clone())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NorthSouthRow {
    /// Position in the sequence.
    pub n: usize,
    /// `max_F d(g_n F, U_θ(g_N))` over admitted test flags.
    pub max_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NorthSouthReport {
    pub attracting: Flag,
    pub repelling: Flag,
    pub admitted: usize,
    pub excluded: usize,
    pub rows: Vec<NorthSouthRow>,
}

/// Test flags with margin `> ε` to the repelling limit `U_θ(g_N⁻¹)` are
/// pushed by each `g_n`; the distance to the attracting limit `U_θ(g_N)`
/// should go to zero. Limits are read off the last element.
pub fn north_south_probe(
    sequence: &[GroupElement],
    theta: &RootSubset,
    test_flags: &[Flag],
    epsilon: f64,
    gap_tolerance: f64,
) -> Result<NorthSouthReport> {
    let last = sequence
        .last()
        .ok_or_else(|| crate::error::LabError::InsufficientData("empty sequence".into()))?;
    let attracting = attracting_flag(last, theta, gap_tolerance)?;
    let repelling = attracting_flag(&last.inverse(), theta, gap_tolerance)?;
    let mut admitted_flags = Vec::new();
    for f in test_flags {
        if flag_transversality_margin(f, &repelling, theta)? > epsilon {
            admitted_flags.push(f);
        }
    }
    let rows = sequence
        .par_iter()
        .enumerate()
        .map(|(n, g)| -> Result<NorthSouthRow> {
            let mut max_distance: f64 = 0.0;
            for f in &admitted_flags {
                max_distance = max_distance.max(flag_distance(&f.act(g), &attracting, theta)?);
            }
            Ok(NorthSouthRow { n, max_distance })
        })
        .collect::<Result<_>>()?;
    Ok(NorthSouthReport {
        attracting,
        repelling,
        admitted: admitted_flags.len(),
        excluded: test_flags.len() - admitted_flags.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, power_sequence, Generator, Presentation};
    use crate::lie::DEFAULT_GAP_TOLERANCE;

    fn cyclic(rows: &[f64], d: usize) -> Presentation {
        Presentation::free(vec![Generator {
            name: "g".into(),
            element: GroupElement::from_rows(d, rows).unwrap(),
        }])
        .unwrap()
    }

    fn full(d: usize) -> RootSubset {
        RootSubset::full(&[d])
    }

    #[test]
    fn diagonal_powers_have_two_targets() {
        let b = enumerate_ball(&cyclic(&[4.0, 0.0, 0.0, 0.25], 2), 6).unwrap();
        let s = limit_set_sample(&b, &full(2), DEFAULT_GAP_TOLERANCE).unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(s.distinct_targets(MERGE_TOLERANCE).unwrap().len(), 2);
        let r = transversality_audit(&s, &AuditOptions::default()).unwrap();
        assert!((r.min_margin.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.audited, 36);
    }

    #[test]
    fn rotations_have_no_limit_points() {
        let (c, s) = (0.6f64, 0.8f64);
        let b = enumerate_ball(&cyclic(&[c, -s, s, c], 2), 5).unwrap();
        let sample = limit_set_sample(&b, &full(2), DEFAULT_GAP_TOLERANCE).unwrap();
        assert!(sample.is_empty());
        assert_eq!(sample.excluded_low_gap, b.len() - 1);
        assert_eq!(transversality_audit(&sample, &AuditOptions::default()).unwrap().min_margin, None);
    }

    #[test]
    fn planted_non_transverse_pair() {
        let theta = full(2);
        let e1 = Flag::standard(theta.clone());
        // ⟨e₁⟩ against the line ⟨e₁ + 10⁻⁹ e₂⟩
        let t = 1e-9;
        let near = Flag::new(vec![Mat::from_row_slice(2, 2, &[1.0, -t, t, 1.0])], theta.clone()).unwrap();
        let other = Flag::new(vec![Mat::from_row_slice(2, 2, &[t, 1.0, 1.0, -t])], theta.clone()).unwrap();
        let sample = LimitSetSample {
            theta: theta.clone(),
            points: [e1, near, other]
                .into_iter()
                .enumerate()
                .map(|(i, flag)| LimitPoint { index: i, length: 1, flag, gap: 1.0 })
                .collect(),
            excluded_identity: 1,
            excluded_low_gap: 0,
        };
        let r = transversality_audit(&sample, &AuditOptions { merge_tolerance: 0.0, ..Default::default() }).unwrap();
        assert!(r.min_margin.unwrap() < 1e-8);
    }

    #[test]
    fn diagonal_north_south() {
        let theta = full(3);
        let g = GroupElement::from_rows(3, &[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        let seq = power_sequence(&g, 12).unwrap();
        let mut flags = random_flags(&theta, 20, 7).unwrap();
        flags.push(Flag::reversed(theta.clone()));
        let r = north_south_probe(&seq, &theta, &flags, 0.1, DEFAULT_GAP_TOLERANCE).unwrap();
        assert_eq!(r.excluded + r.admitted, 21);
        assert!(r.excluded >= 1);
        assert!(flag_distance(&r.attracting, &Flag::standard(theta.clone()), &theta).unwrap() < 1e-12);
        // contraction rate 1/4 per step
        for w in r.rows.windows(2).skip(2) {
            let ratio = w[1].max_distance / w[0].max_distance;
            assert!(ratio < 0.3, "{ratio}");
        }
    }

    #[test]
    fn unipotent_north_south() {
        let theta = full(2);
        let u = GroupElement::from_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let seq = power_sequence(&u, 400).unwrap();
        let flags = random_flags(&theta, 10, 3).unwrap();
        let r = north_south_probe(&seq, &theta, &flags, 0.1, DEFAULT_GAP_TOLERANCE).unwrap();
        assert!(r.admitted > 0);
        let d: Vec<f64> = r.rows.iter().map(|x| x.max_distance).collect();
        assert!(d[d.len() - 1] < d[9] && d[9] < d[0]);
        assert!(d[d.len() - 1] < 0.05);
    }
}
