//! Multiplicative estimates for products of transverse elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::group::{evaluate_letters, reduce, BallEnumeration, Word};
use crate::lie::{attracting_flag, flag_transversality_margin, partial_cartan, GroupElement, RootSubset};
use crate::linalg::{exterior_power, sorted_svd, Mat};
use crate::stats::median;

/// Slack allowed in the two-sided singular value bound.
pub const SINE_BOUND_TOLERANCE: f64 = 1e-8;

/// `log σ₁(ab) − log σ₁(a) − log σ₁(b)` and `log sin θ̂`, where
/// `sin θ̂ = |⟨u₁(b), v₁(a)⟩|` pairs the top output direction of `b` with
/// the top input direction of `a`. Always
/// `log sin θ̂ ≤ excess ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SineBound {
    pub excess: f64,
    pub log_sin: f64,
}

impl SineBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.excess <= tol && self.excess >= self.log_sin - tol
    }
}

pub fn sine_bound(a: &Mat, b: &Mat) -> Result<SineBound> {
    let (_, sa, va) = sorted_svd(a)?;
    let (ub, sb, _) = sorted_svd(b)?;
    let (_, sab, _) = sorted_svd(&(a * b))?;
    let cos = ub.column(0).dot(&va.column(0)).abs();
    Ok(SineBound {
        excess: sab[0].ln() - sa[0].ln() - sb[0].ln(),
        log_sin: cos.ln(),
    })
}

/// Sine bound on every exterior power `∧ʲ`, `1 ≤ j < d`, of every factor.
pub fn sine_bounds(g: &GroupElement, h: &GroupElement) -> Result<Vec<SineBound>> {
    let mut out = Vec::new();
    for (a, b) in g.blocks().iter().zip(h.blocks()) {
        for j in 1..a.nrows() {
            out.push(sine_bound(&exterior_power(a, j), &exterior_power(b, j))?);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct MultiplicativeOptions {
    pub epsilon: f64,
    /// Pairs sampled per band; exhaustive when the band has fewer.
    pub pairs_per_band: usize,
    pub seed: u64,
    pub gap_tolerance: f64,
}

impl Default for MultiplicativeOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            pairs_per_band: 4000,
            seed: 0,
            gap_tolerance: crate::lie::DEFAULT_GAP_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicativeBand {
    /// Both factors have this word length.
    pub length: usize,
    /// Pairs whose product is a reduced word of length `2·length`.
    pub sampled: usize,
    pub selected: usize,
    pub sup_residual: Option<f64>,
    pub median_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicativeReport {
    pub bands: Vec<MultiplicativeBand>,
    pub sine_checks: usize,
    pub sine_violations: usize,
    /// Largest violation of either side of the sine bound (≤ 0 when none).
    pub worst_sine_excess: f64,
}

struct PairOutcome {
    residual: Option<f64>,
    bounds: Vec<SineBound>,
}

fn pair_outcome(
    g: &GroupElement,
    h: &GroupElement,
    theta: &RootSubset,
    opts: &MultiplicativeOptions,
) -> Result<PairOutcome> {
    let bounds = sine_bounds(g, h)?;
    let repelling = attracting_flag(&g.inverse(), theta, opts.gap_tolerance);
    let attracting = attracting_flag(h, theta, opts.gap_tolerance);
    let residual = match (repelling, attracting) {
        (Ok(r), Ok(a)) if flag_transversality_margin(&r, &a, theta)? > opts.epsilon => {
            let gh = g * h;
            let d = partial_cartan(&gh, theta)?
                .sub(&partial_cartan(g, theta)?)
                .sub(&partial_cartan(h, theta)?);
            Some(d.norm())
        }
        (Err(LabError::GapTooSmall(_)), _) | (_, Err(LabError::GapTooSmall(_))) | (Ok(_), Ok(_)) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(PairOutcome { residual, bounds })
}

/// `‖κ_θ(γη) − κ_θ(γ) − κ_θ(η)‖` over pairs of equal word length `k`,
/// `lengths` inclusive, keeping pairs whose repelling flag `U_θ(γ⁻¹)` and
/// attracting flag `U_θ(η)` have margin above `ε`. Every sampled pair also
/// runs the exact sine bound.
///
/// Pairs are drawn once as words `(w, v)` of the top length; band `k` uses
/// the last `k` letters of `w` and the first `k` letters of `v`, so the
/// flags of a pair settle as `k` grows and bands differ by the pairs'
/// convergence rather than by resampling.
pub fn multiplicative_probe(
    ball: &BallEnumeration,
    theta: &RootSubset,
    lengths: (usize, usize),
    opts: &MultiplicativeOptions,
) -> Result<MultiplicativeReport> {
    let (lo, hi) = (lengths.0.max(1), lengths.1.min(ball.radius()));
    let mut bands = Vec::new();
    let mut sine_checks = 0;
    let mut sine_violations = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut any_selected = false;
    let top: Vec<usize> = if hi >= lo { ball.sphere(hi).collect() } else { Vec::new() };
    let words: Vec<(Vec<u8>, Vec<u8>)> = if top.len() * top.len() <= opts.pairs_per_band {
        top.iter()
            .flat_map(|&a| top.iter().map(move |&b| (a, b)))
            .map(|(a, b)| (ball.letters(a), ball.letters(b)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.pairs_per_band)
            .map(|_| {
                let a = top[rng.random_range(0..top.len())];
                let b = top[rng.random_range(0..top.len())];
                (ball.letters(a), ball.letters(b))
            })
            .collect()
    };
    let p = ball.presentation();
    for k in lo..=hi {
        // products that cancel in the group lose all precision in floating point
        let outcomes: Vec<PairOutcome> = words
            .par_iter()
            .filter_map(|(w, v)| {
                let (a, b) = (&w[w.len() - k..], &v[..k]);
                let joined = Word::from_letters(a).concat(&Word::from_letters(b));
                match reduce(&joined, p) {
                    Ok(r) if r.length() == 2 * k => {}
                    Ok(_) => return None,
                    Err(e) => return Some(Err(e)),
                }
                Some(evaluate_letters(p, a).and_then(|g| pair_outcome(&g, &evaluate_letters(p, b)?, theta, opts)))
            })
            .collect::<Result<_>>()?;
        let residuals: Vec<f64> = outcomes.iter().filter_map(|o| o.residual).collect();
        for o in &outcomes {
            for b in &o.bounds {
                sine_checks += 1;
                if !b.holds(SINE_BOUND_TOLERANCE) {
                    sine_violations += 1;
                }
                worst = worst.max(b.excess).max(b.log_sin - b.excess);
            }
        }
        any_selected |= !residuals.is_empty();
        bands.push(MultiplicativeBand {
            length: k,
            sampled: outcomes.len(),
            selected: residuals.len(),
            sup_residual: residuals.iter().copied().reduce(f64::max),
            median_residual: median(&residuals),
        });
    }
    if !any_selected {
        return Err(LabError::EmptySelection);
    }
    Ok(MultiplicativeReport {
        bands,
        sine_checks,
        sine_violations,
        worst_sine_excess: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, Generator, Presentation};
    use rand_distr::StandardNormal;

    fn random_sl3(rng: &mut ChaCha8Rng) -> GroupElement {
        let mut m = Mat::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
        if m.determinant() < 0.0 {
            m.row_mut(0).neg_mut();
        }
        GroupElement::normalized(vec![m], vec![false]).unwrap()
    }

    #[test]
    fn sine_bound_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (g, h) = (random_sl3(&mut rng), random_sl3(&mut rng));
            for b in sine_bounds(&g, &h).unwrap() {
                assert!(b.holds(SINE_BOUND_TOLERANCE), "{b:?}");
            }
        }
    }

    #[test]
    fn commuting_diagonal_pair_is_additive() {
        let diag = |a: f64| GroupElement::from_rows(3, &[a, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0 / a]).unwrap();
        let p = Presentation::free(vec![
            Generator { name: "a".into(), element: diag(3.0) },
            Generator { name: "b".into(), element: diag(5.0) },
        ])
        .unwrap();
        let ball = enumerate_ball(&p, 2).unwrap();
        let theta = RootSubset::full(&[3]);
        let r = multiplicative_probe(&ball, &theta, (1, 2), &MultiplicativeOptions::default()).unwrap();
        for band in &r.bands {
            if let Some(s) = band.sup_residual {
                assert!(s < 1e-10, "{band:?}");
            }
        }
        assert!(r.bands[0].selected > 0);
        assert_eq!(r.sine_violations, 0);
    }

    #[test]
    fn rotations_give_empty_selection() {
        let p = Presentation::free(vec![Generator {
            name: "r".into(),
            element: GroupElement::from_rows(2, &[0.6, -0.8, 0.8, 0.6]).unwrap(),
        }])
        .unwrap();
        let ball = enumerate_ball(&p, 3).unwrap();
        let theta = RootSubset::full(&[2]);
        assert!(matches!(
            multiplicative_probe(&ball, &theta, (1, 3), &MultiplicativeOptions::default()),
            Err(LabError::EmptySelection)
        ));
    }
}
