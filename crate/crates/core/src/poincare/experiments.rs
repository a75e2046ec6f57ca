//! φ-lengths, entropy gaps, concavity and finiteness experiments.

use serde::Serialize;

use super::exponent::{counting_exponent, ExponentEstimate, WindowPolicy};
use super::sample::{phi_counts, phi_counts_cyclic, PhiSample};
use crate::error::{LabError, Result};
use crate::group::{cartan_power_sequence, enumerate_ball, BallEnumeration};
use crate::lie::{cartan_projection, jordan_vector, CartanVector, Functional, GroupElement, RootSubset};
use crate::stats::lower_envelope;

/// `ℓ^φ(g) = φ(λ(g))`.
pub fn length_phi(g: &GroupElement, phi: &Functional, theta: &RootSubset) -> Result<f64> {
    phi.require_support(theta)?;
    Ok(phi.eval(&jordan_vector(g)?))
}

/// `φ(κ(gⁿ))/n` for `n = 1..=N`; tends to [`length_phi`].
pub fn length_phi_limit(g: &GroupElement, phi: &Functional, theta: &RootSubset, n: usize) -> Result<Vec<f64>> {
    phi.require_support(theta)?;
    Ok(cartan_power_sequence(g, n)?
        .iter()
        .enumerate()
        .map(|(k, c)| phi.eval(c) / (k + 1) as f64)
        .collect())
}

/// Cartan projections of every ball element, in ball order.
pub fn cartan_table(ball: &BallEnumeration) -> Result<Vec<CartanVector>> {
    ball.map_elements(|_, g| cartan_projection(g))?.into_iter().collect()
}

/// Sample of `ψ(κ(γ))` from a precomputed Cartan table.
pub fn sample_from_table(ball: &BallEnumeration, table: &[CartanVector], psi: &Functional) -> PhiSample {
    PhiSample {
        lengths: ball.lengths().into_iter().map(|l| l as u32).collect(),
        values: table.iter().map(|k| psi.eval(k)).collect(),
        flags: None,
        has_lengths: true,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EntropyGapOptions {
    /// Powers sampled when the peripheral subgroup is cyclic.
    pub peripheral_powers: usize,
    /// Ball radius otherwise.
    pub peripheral_radius: usize,
    pub policy: WindowPolicy,
}

impl Default for EntropyGapOptions {
    fn default() -> Self {
        Self {
            peripheral_powers: 100_000,
            peripheral_radius: 40,
            policy: WindowPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyGapReport {
    pub peripheral: String,
    pub gamma: ExponentEstimate,
    pub subgroup: ExponentEstimate,
    pub gap: f64,
    pub gap_stderr: f64,
}

/// Counting exponents of `Γ` (from the ball) and of a peripheral subgroup
/// `P` (from its own sample), and their difference.
pub fn entropy_gap_report(
    ball: &BallEnumeration,
    peripheral: &str,
    phi: &Functional,
    theta: &RootSubset,
    opts: EntropyGapOptions,
) -> Result<EntropyGapReport> {
    let gamma = counting_exponent(&phi_counts(ball, phi, theta)?, opts.policy)?;
    let sub = ball.presentation().peripheral_presentation(peripheral)?;
    let sample = if sub.generator_count() == 1 && sub.orders()[0].is_none() {
        phi_counts_cyclic(&sub.generators()[0].element, opts.peripheral_powers, phi, theta)?
    } else {
        phi_counts(&enumerate_ball(&sub, opts.peripheral_radius)?, phi, theta)?
    };
    let subgroup = counting_exponent(&sample, opts.policy)?;
    Ok(EntropyGapReport {
        peripheral: peripheral.to_string(),
        gap: gamma.value - subgroup.value,
        gap_stderr: gamma.stderr.hypot(subgroup.stderr),
        gamma,
        subgroup,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityRow {
    pub lambda: f64,
    pub estimate: ExponentEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityTable {
    pub delta1: ExponentEstimate,
    pub delta2: ExponentEstimate,
    pub rows: Vec<ConcavityRow>,
    /// `max |ℓ^{φ₁}(γ) − ℓ^{φ₂}(γ)|` over the sampled elements, after
    /// normalization.
    pub max_length_discrepancy: f64,
    pub length_samples: usize,
}

/// Elements used for length comparisons: the whole ball up to this size,
/// an evenly strided subset beyond.
pub const LENGTH_SAMPLE_LIMIT: usize = 2000;

/// Exponents of `λφ₁ + (1−λ)φ₂` after rescaling each `φᵢ` to exponent 1.
pub fn concavity_probe(
    phi1: &Functional,
    phi2: &Functional,
    lambdas: &[f64],
    ball: &BallEnumeration,
    theta: &RootSubset,
    policy: WindowPolicy,
) -> Result<ConcavityTable> {
    phi1.require_support(theta)?;
    phi2.require_support(theta)?;
    let table = cartan_table(ball)?;
    let delta1 = counting_exponent(&sample_from_table(ball, &table, phi1), policy)?;
    let delta2 = counting_exponent(&sample_from_table(ball, &table, phi2), policy)?;
    for d in [&delta1, &delta2] {
        if !(d.value > 0.0 && d.value.is_finite()) {
            return Err(LabError::InsufficientData(format!("exponent {} is not positive", d.value)));
        }
    }
    // δ^{cφ} = δ^φ / c, so δ·φ has exponent 1
    let n1 = phi1.scale(delta1.value);
    let n2 = phi2.scale(delta2.value);
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let psi = n1.scale(lambda).add(&n2.scale(1.0 - lambda));
            counting_exponent(&sample_from_table(ball, &table, &psi), policy).map(|estimate| ConcavityRow { lambda, estimate })
        })
        .collect::<Result<Vec<_>>>()?;
    let stride = ball.len().div_ceil(LENGTH_SAMPLE_LIMIT).max(1);
    let mut discrepancy: f64 = 0.0;
    let mut count = 0;
    for i in (1..ball.len()).step_by(stride) {
        let lam = jordan_vector(&ball.element(i)?)?;
        discrepancy = discrepancy.max((n1.eval(&lam) - n2.eval(&lam)).abs());
        count += 1;
    }
    Ok(ConcavityTable {
        delta1,
        delta2,
        rows,
        max_length_discrepancy: discrepancy,
        length_samples: count,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub id: u8,
    pub name: String,
    /// `None` when the condition was not evaluated.
    pub holds: Option<bool>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeFit {
    /// `y ≥ c·x − C` on every sample.
    pub c: f64,
    pub big_c: f64,
    /// Lower-envelope slope on the last third of the `x`-range.
    pub tail_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinitenessReport {
    pub sphere_minima: Vec<f64>,
    pub exponent: Option<ExponentEstimate>,
    pub min_direction_value: f64,
    pub symmetric_fit: Option<EnvelopeFit>,
    pub graph_fit: Option<EnvelopeFit>,
    /// Words with `ℓ^φ ≈ 0` but positive translation length.
    pub null_length_witnesses: Vec<String>,
    pub conditions: Vec<Condition>,
}

impl FinitenessReport {
    pub fn condition(&self, id: u8) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

/// Bins for envelope fits.
const ENVELOPE_BINS: usize = 20;
/// Words up to this length are checked for null φ-length.
const WITNESS_LENGTH: usize = 2;
const NULL_LENGTH: f64 = 1e-6;
const POSITIVE_TRANSLATION: f64 = 0.1;

fn envelope(x: &[f64], y: &[f64]) -> Option<EnvelopeFit> {
    let (c, big_c) = lower_envelope(x, y, ENVELOPE_BINS)?;
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = hi - (hi - lo) / 3.0;
    let (tx, ty): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter(|(a, _)| **a >= cut).map(|(a, b)| (*a, *b)).unzip();
    let tail_slope = lower_envelope(&tx, &ty, ENVELOPE_BINS / 2).map_or(c, |(s, _)| s);
    Some(EnvelopeFit { c, big_c, tail_slope })
}

fn linear_lower_bound(fit: &Option<EnvelopeFit>) -> bool {
    fit.as_ref().is_some_and(|f| f.c > 0.0 && f.tail_slope >= 0.5 * f.c)
}

/// Finite-scale evidence for the equivalent finiteness conditions:
/// (1) sphere minima of `φ∘κ` grow, (2) the exponent is finite,
/// (3) `φ∘κ` is bounded below by a positive multiple of `d_M`,
/// (4) `φ` is positive on the sampled limit-cone directions,
/// (5) as (3) with the cusped-space distance `d_X` when provided.
pub fn finiteness_audit(
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
    graph_distance: Option<&[f64]>,
    policy: WindowPolicy,
) -> Result<FinitenessReport> {
    phi.require_support(theta)?;
    if let Some(dx) = graph_distance {
        if dx.len() != ball.len() {
            return Err(LabError::DimensionMismatch(format!("{} distances for {} elements", dx.len(), ball.len())));
        }
    }
    let table = cartan_table(ball)?;
    let sample = sample_from_table(ball, &table, phi);
    let mut conditions = Vec::new();

    let sphere_minima: Vec<f64> = (1..=ball.radius())
        .map(|k| ball.sphere(k).map(|i| sample.values[i]).fold(f64::INFINITY, f64::min))
        .filter(|m| m.is_finite())
        .collect();
    let grows = sphere_minima.windows(2).all(|w| w[1] >= w[0] - 1e-9)
        && sphere_minima.len() >= 2
        && sphere_minima[sphere_minima.len() - 1] > sphere_minima[0] + 1e-6;
    conditions.push(Condition {
        id: 1,
        name: "sphere minima increase".into(),
        holds: Some(grows),
        detail: format!(
            "minima {:.4} → {:.4} over radii 1..{}",
            sphere_minima.first().copied().unwrap_or(0.0),
            sphere_minima.last().copied().unwrap_or(0.0),
            sphere_minima.len()
        ),
    });

    let exponent = counting_exponent(&sample, policy);
    conditions.push(Condition {
        id: 2,
        name: "finite critical exponent".into(),
        holds: match &exponent {
            Ok(e) => Some(e.value.is_finite()),
            Err(LabError::InsufficientData(_)) => None,
            Err(_) => Some(false),
        },
        detail: match &exponent {
            Ok(e) => format!("δ̂ = {:.4} ± {:.4}", e.value, e.stderr),
            Err(e) => e.to_string(),
        },
    });

    // null φ-length with positive translation length rules out (3) and (4)
    let mut witnesses = Vec::new();
    let mut min_direction = f64::INFINITY;
    let short_end = ball.sphere(WITNESS_LENGTH.min(ball.radius())).end;
    for i in 1..short_end {
        let lam = jordan_vector(&ball.element(i)?)?;
        let lm = std::f64::consts::SQRT_2 * lam.norm();
        if lm > POSITIVE_TRANSLATION {
            let l_phi = phi.eval(&lam);
            min_direction = min_direction.min(l_phi / lam.norm());
            if l_phi.abs() <= NULL_LENGTH {
                witnesses.push(ball.word(i).display(ball.presentation()));
            }
        }
    }
    for i in ball.sphere(ball.radius()) {
        let n = table[i].norm();
        if n > 0.0 {
            min_direction = min_direction.min(sample.values[i] / n);
        }
    }

    let dm: Vec<f64> = table.iter().map(|k| std::f64::consts::SQRT_2 * k.norm()).collect();
    let symmetric_fit = envelope(&dm, &sample.values);
    let lower = linear_lower_bound(&symmetric_fit) && witnesses.is_empty();
    conditions.push(Condition {
        id: 3,
        name: "linear lower bound in d_M".into(),
        holds: Some(lower),
        detail: match &symmetric_fit {
            Some(f) => format!(
                "c = {:.4}, C = {:.4}, tail slope {:.4}, {} null-length witnesses",
                f.c,
                f.big_c,
                f.tail_slope,
                witnesses.len()
            ),
            None => "degenerate d_M range".into(),
        },
    });

    conditions.push(Condition {
        id: 4,
        name: "positive on limit-cone directions".into(),
        holds: Some(min_direction > NULL_LENGTH),
        detail: format!("min φ(Y)/|Y| = {min_direction:.4e}"),
    });

    let graph_fit = graph_distance.and_then(|dx| envelope(dx, &sample.values));
    conditions.push(Condition {
        id: 5,
        name: "linear lower bound in d_X".into(),
        holds: graph_distance.map(|_| linear_lower_bound(&graph_fit)),
        detail: match (&graph_fit, graph_distance) {
            (Some(f), _) => format!("c = {:.4}, C = {:.4}, tail slope {:.4}", f.c, f.big_c, f.tail_slope),
            (None, Some(_)) => "degenerate d_X range".into(),
            (None, None) => "no cusped-space distances supplied".into(),
        },
    });

    Ok(FinitenessReport {
        sphere_minima,
        exponent: exponent.ok(),
        min_direction_value: min_direction,
        symmetric_fit,
        graph_fit,
        null_length_witnesses: witnesses,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Generator, Peripheral, Presentation};
    use crate::linalg::Mat;

    fn el(rows: &[f64]) -> GroupElement {
        GroupElement::new(vec![Mat::from_row_slice(2, 2, rows)], vec![true]).unwrap()
    }

    fn alpha() -> (Functional, RootSubset) {
        (Functional::root(&[2], 0, 1).unwrap(), RootSubset::full(&[2]))
    }

    #[test]
    fn lengths() {
        let theta3 = RootSubset::full(&[3]);
        let g = GroupElement::from_rows(3, &[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        let w1 = Functional::weight(&[3], 0, 1).unwrap();
        assert!((length_phi(&g, &w1, &theta3).unwrap() - 4f64.ln()).abs() < 1e-12);
        let (a, theta) = alpha();
        assert!(length_phi(&el(&[1.0, 1.0, 0.0, 1.0]), &a, &theta).unwrap().abs() < 1e-12);
        assert!((length_phi(&el(&[2.0, 0.0, 0.0, 0.5]), &a, &theta).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn length_limit_converges() {
        let (a, theta) = alpha();
        let g = el(&[2.0, 3.0, 0.0, 0.5]);
        let seq = length_phi_limit(&g, &a, &theta, 200).unwrap();
        let l = length_phi(&g, &a, &theta).unwrap();
        assert!((seq[199] - l).abs() < (seq[9] - l).abs());
        assert!((seq[199] - l).abs() < 0.01);
    }

    #[test]
    fn parabolic_exponent_is_one_half() {
        let (a, theta) = alpha();
        let s = phi_counts_cyclic(&el(&[1.0, 1.0, 0.0, 1.0]), 100_000, &a, &theta).unwrap();
        let e = counting_exponent(&s, WindowPolicy::default()).unwrap();
        assert!((e.value - 0.5).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn degenerate_gap_is_zero() {
        let (a, theta) = alpha();
        let p = Presentation::free(vec![Generator {
            name: "u".into(),
            element: el(&[1.0, 1.0, 0.0, 1.0]),
        }])
        .unwrap()
        .with_peripherals(vec![Peripheral {
            name: "P".into(),
            generators: vec![0],
        }])
        .unwrap();
        let b = enumerate_ball(&p, 20_000).unwrap();
        let r = entropy_gap_report(&b, "P", &a, &theta, EntropyGapOptions::default()).unwrap();
        assert!(r.gap.abs() < 0.05, "{r:?}");
    }

    #[test]
    fn equal_functionals_are_flat() {
        let (a, theta) = alpha();
        let p = Presentation::free(vec![
            Generator { name: "a".into(), element: el(&[3.0, 0.0, 0.0, 1.0 / 3.0]) },
            Generator { name: "b".into(), element: el(&[5.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0]) },
        ])
        .unwrap();
        let b = enumerate_ball(&p, 9).unwrap();
        let t = concavity_probe(&a, &a, &[0.0, 0.5, 1.0], &b, &theta, WindowPolicy::default()).unwrap();
        for row in &t.rows {
            assert!((row.estimate.value - 1.0).abs() < 1e-9 + 2.0 * row.estimate.stderr, "{row:?}");
        }
        assert!(t.max_length_discrepancy < 1e-9);
    }

    #[test]
    fn zero_functional_fails_growth() {
        let theta = RootSubset::full(&[2]);
        let p = Presentation::free(vec![Generator { name: "a".into(), element: el(&[2.0, 1.0, 1.0, 1.0]) }]).unwrap();
        let b = enumerate_ball(&p, 10).unwrap();
        let r = finiteness_audit(&b, &Functional::zero(&[2]), &theta, None, WindowPolicy::default()).unwrap();
        assert_eq!(r.condition(1).unwrap().holds, Some(false));
        assert_eq!(r.condition(5).unwrap().holds, None);
    }
}
