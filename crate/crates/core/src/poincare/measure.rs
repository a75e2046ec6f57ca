//! Finite-scale Patterson–Sullivan measures and the cocycle residual.

use std::collections::BTreeMap;

use serde::Serialize;

use super::sample::{phi_counts_with_flags, PhiSample};
use crate::error::{LabError, Result};
use crate::group::BallEnumeration;
use crate::lie::{
    attracting_flag, cartan_projection, flag_transversality_margin, partial_iwasawa, Flag, Functional, GroupElement,
    RootSubset,
};
use crate::stats::median;

#[derive(Clone, Debug, Serialize)]
pub struct Atom {
    /// Ball index of the element carrying the atom.
    pub element: usize,
    pub flag: Flag,
    pub weight: f64,
}

/// Normalized atomic measure on `F_θ`.
#[derive(Clone, Debug, Serialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    /// Sum of the retained weights after normalization.
    pub total_mass: f64,
    /// Fraction of the raw weight carried by elements without a flag.
    pub dropped_mass: f64,
    pub dropped_count: usize,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Weights `e^{−s₀·φ}` on the flags of a sample. Elements whose flag is
/// undefined are dropped and their weight is reported separately.
pub fn measure_from_sample(sample: &PhiSample, s0: f64) -> Result<AtomicMeasure> {
    let flags = sample
        .flags
        .as_ref()
        .ok_or_else(|| LabError::Config("sample carries no flags".into()))?;
    if sample.is_empty() {
        return Err(LabError::EmptySelection);
    }
    // shift by the smallest value so the largest weight is 1
    let base = sample.values.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = sample.values.iter().map(|v| (-s0 * (v - base)).exp()).collect();
    let kept: Vec<usize> = (0..sample.len()).filter(|&i| flags[i].is_some()).collect();
    let total = compensated_sum(raw.iter().copied());
    let retained = compensated_sum(kept.iter().map(|&i| raw[i]));
    if kept.is_empty() || retained <= 0.0 {
        return Err(LabError::EmptySelection);
    }
    let atoms: Vec<Atom> = kept
        .iter()
        .map(|&i| Atom {
            element: i,
            flag: flags[i].clone().expect("kept atoms have flags"),
            weight: raw[i] / retained,
        })
        .collect();
    let total_mass = compensated_sum(atoms.iter().map(|a| a.weight));
    Ok(AtomicMeasure {
        dropped_count: sample.len() - kept.len(),
        dropped_mass: (total - retained) / total,
        total_mass,
        atoms,
    })
}

/// `μ_{s₀} ∝ Σ_γ e^{−s₀·φ(κ_θ(γ))} δ_{U_θ(γ)}` over the ball.
pub fn patterson_measure(
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
    s0: f64,
    gap_tolerance: f64,
) -> Result<AtomicMeasure> {
    measure_from_sample(&phi_counts_with_flags(ball, phi, theta, gap_tolerance)?, s0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualBand {
    pub length: usize,
    pub count: usize,
    pub median: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub selected: usize,
    pub rejected: usize,
    /// One row per word length.
    pub bands: Vec<ResidualBand>,
}

/// Median of `|r|` over word lengths `lo..=hi`.
pub fn band_median(residuals: &[(usize, f64)], lo: usize, hi: usize) -> Option<f64> {
    let v: Vec<f64> = residuals
        .iter()
        .filter(|(l, _)| (lo..=hi).contains(l))
        .map(|(_, r)| r.abs())
        .collect();
    median(&v)
}

/// Residuals `r(γ, η) = φ(κ(γη)) − φ(κ(η)) − φ(B_θ(γ, U_θ(η)))` over `η`
/// in the ball with `U_θ(η)` at margin at least `ε` from `U_θ(γ⁻¹)`.
/// Returns `(word length of η, r)` pairs in ball order.
pub fn ps_residuals(
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
    gamma: &GroupElement,
    epsilon: f64,
    gap_tolerance: f64,
) -> Result<Vec<(usize, f64)>> {
    phi.require_support(theta)?;
    if !(epsilon > 0.0) {
        return Err(LabError::Config("margin ε must be positive".into()));
    }
    // no repelling flag when γ has no gap; then every η is admissible
    let repelling = match attracting_flag(&gamma.inverse(), theta, gap_tolerance) {
        Ok(f) => Some(f),
        Err(LabError::GapTooSmall(_)) => None,
        Err(e) => return Err(e),
    };
    let rows = ball.map_elements(|i, eta| -> Result<Option<(usize, f64)>> {
        let f = match attracting_flag(eta, theta, gap_tolerance) {
            Ok(f) => f,
            Err(LabError::GapTooSmall(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if let Some(rep) = &repelling {
            if flag_transversality_margin(&f, rep, theta)? < epsilon {
                return Ok(None);
            }
        }
        let ge = gamma.compose(eta)?;
        let r = phi.eval(&cartan_projection(&ge)?)
            - phi.eval(&cartan_projection(eta)?)
            - phi.eval(&partial_iwasawa(gamma, &f, theta));
        Ok(Some((ball.length(i), r)))
    })?;
    let mut out = Vec::new();
    for r in rows {
        if let Some(x) = r? {
            out.push(x);
        }
    }
    if out.is_empty() {
        return Err(LabError::EmptySelection);
    }
    Ok(out)
}

/// Per-length summary of [`ps_residuals`].
pub fn ps_residual(
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
    gamma: &GroupElement,
    epsilon: f64,
    gap_tolerance: f64,
) -> Result<(ResidualReport, Vec<(usize, f64)>)> {
    let residuals = ps_residuals(ball, phi, theta, gamma, epsilon, gap_tolerance)?;
    let mut by_len: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(l, r) in &residuals {
        by_len.entry(l).or_default().push(r.abs());
    }
    let bands = by_len
        .into_iter()
        .map(|(length, v)| ResidualBand {
            length,
            count: v.len(),
            median: median(&v).unwrap_or(0.0),
            max: v.iter().copied().fold(0.0, f64::max),
        })
        .collect();
    Ok((
        ResidualReport {
            selected: residuals.len(),
            rejected: ball.len() - residuals.len(),
            bands,
        },
        residuals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, Generator, Presentation};
    use crate::linalg::Mat;

    fn schottky() -> Presentation {
        Presentation::free(vec![
            Generator {
                name: "a".into(),
                element: GroupElement::from_rows(2, &[3.0, 0.0, 0.0, 1.0 / 3.0]).unwrap(),
            },
            Generator {
                name: "b".into(),
                element: GroupElement::from_rows(2, &[5.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0]).unwrap(),
            },
        ])
        .unwrap()
    }

    fn alpha() -> (Functional, RootSubset) {
        (Functional::root(&[2], 0, 1).unwrap(), RootSubset::full(&[2]))
    }

    #[test]
    fn dirac_and_equal_weights() {
        let theta = RootSubset::full(&[2]);
        let f = Flag::standard(theta.clone());
        let one = PhiSample {
            lengths: vec![1],
            values: vec![2.0],
            flags: Some(vec![Some(f.clone())]),
            has_lengths: true,
        };
        let m = measure_from_sample(&one, 1.0).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert_eq!(m.atoms[0].weight, 1.0);
        let two = PhiSample {
            lengths: vec![0, 1, 1],
            values: vec![0.0, 1.5, 1.5],
            flags: Some(vec![None, Some(f.clone()), Some(Flag::reversed(theta))]),
            has_lengths: true,
        };
        let m = measure_from_sample(&two, 1.0).unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert!((m.atoms[0].weight - 0.5).abs() < 1e-15 && (m.atoms[1].weight - 0.5).abs() < 1e-15);
        assert_eq!(m.dropped_count, 1);
        // dropped fraction: 1 / (1 + 2e^{−1.5})
        assert!((m.dropped_mass - 1.0 / (1.0 + 2.0 * (-1.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn schottky_measure_is_normalized() {
        let (phi, theta) = alpha();
        let b = enumerate_ball(&schottky(), 6).unwrap();
        let m = patterson_measure(&b, &phi, &theta, 1.0, 1e-6).unwrap();
        assert!((m.total_mass - 1.0).abs() < 1e-12);
        assert_eq!(m.dropped_count, 1);
        assert_eq!(m.atoms.len() + m.dropped_count, b.len());
    }

    #[test]
    fn identity_residual_vanishes() {
        let (phi, theta) = alpha();
        let b = enumerate_ball(&schottky(), 4).unwrap();
        let id = GroupElement::identity(&[2], &[true]);
        let (rep, raw) = ps_residual(&b, &phi, &theta, &id, 0.1, 1e-6).unwrap();
        assert!(raw.iter().all(|(_, r)| r.abs() < 1e-12));
        assert_eq!(rep.selected + rep.rejected, b.len());
    }

    #[test]
    fn diagonal_residual_vanishes() {
        let (phi, theta) = alpha();
        let p = Presentation::free(vec![Generator {
            name: "h".into(),
            element: GroupElement::new(vec![Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])], vec![true]).unwrap(),
        }])
        .unwrap();
        let b = enumerate_ball(&p, 5).unwrap();
        let g = GroupElement::from_rows(2, &[3.0, 0.0, 0.0, 1.0 / 3.0]).unwrap();
        let (_, raw) = ps_residual(&b, &phi, &theta, &g, 0.1, 1e-6).unwrap();
        assert!(!raw.is_empty());
        assert!(raw.iter().all(|(_, r)| r.abs() < 1e-12), "{raw:?}");
    }

    #[test]
    fn residual_matches_brute_force() {
        let (phi, theta) = alpha();
        let b = enumerate_ball(&schottky(), 3).unwrap();
        let g = b.element(b.find(&crate::group::Word::parse("a b", b.presentation()).unwrap()).unwrap()).unwrap();
        let raw = ps_residuals(&b, &phi, &theta, &g, 0.05, 1e-6).unwrap();
        // in SL(2), α = 2ω₁ and ω₁(B(g, F)) = log |g v| for the unit line v of F
        let mut k = 0;
        for i in 0..b.len() {
            let eta = b.element(i).unwrap();
            let Ok(f) = attracting_flag(&eta, &theta, 1e-6) else { continue };
            let rep = attracting_flag(&g.inverse(), &theta, 1e-6).unwrap();
            if flag_transversality_margin(&f, &rep, &theta).unwrap() < 0.05 {
                continue;
            }
            let v = f.frames()[0].column(0).into_owned();
            let gv = &g.blocks()[0] * v;
            let oracle = phi.eval(&cartan_projection(&(&g * &eta)).unwrap())
                - phi.eval(&cartan_projection(&eta).unwrap())
                - 2.0 * gv.norm().ln();
            assert!((raw[k].1 - oracle).abs() < 1e-10);
            k += 1;
        }
        assert_eq!(k, raw.len());
    }
}
