//! Limit-cone directions and positivity of functionals on them.

use serde::Serialize;

use crate::error::Result;
use crate::group::{power_sequence, BallEnumeration};
use crate::lie::{jordan_vector, partial_cartan, partial_projection, CartanVector, Functional, GroupElement, RootSubset};

#[derive(Clone, Debug, Serialize)]
pub struct ConeSample {
    /// `κ_θ(γ)/‖κ_θ(γ)‖`.
    pub directions: Vec<CartanVector>,
    pub lengths: Vec<usize>,
    pub cutoff: usize,
}

impl ConeSample {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Word-length cutoff used when none is given: `max(4, radius/2)`.
pub fn default_cone_cutoff(radius: usize) -> usize {
    (radius / 2).max(4)
}

/// Normalized `κ_θ` of ball elements with word length at least `cutoff`;
/// elements with `κ_θ = 0` are skipped.
pub fn limit_cone_sample(ball: &BallEnumeration, theta: &RootSubset, cutoff: Option<usize>) -> Result<ConeSample> {
    let cutoff = cutoff.unwrap_or_else(|| default_cone_cutoff(ball.radius()));
    let raw = ball.map_elements(|i, g| -> Result<Option<CartanVector>> {
        if ball.length(i) < cutoff {
            return Ok(None);
        }
        let k = partial_cartan(g, theta)?;
        let n = k.norm();
        Ok((n > 1e-12).then(|| k.scale(1.0 / n)))
    })?;
    let mut directions = Vec::new();
    let mut lengths = Vec::new();
    for (i, r) in raw.into_iter().enumerate() {
        if let Some(d) = r? {
            directions.push(d);
            lengths.push(ball.length(i));
        }
    }
    Ok(ConeSample {
        directions,
        lengths,
        cutoff,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    /// `None` for an empty cone sample.
    pub min: Option<f64>,
    pub argmin_length: Option<usize>,
    /// Minimum of `φ` over directions of each word length.
    pub per_length: Vec<(usize, f64)>,
    /// The per-length minimum decreases strictly along the sample.
    pub decreasing: bool,
}

/// Minimum of `φ` over the cone sample. A clearly positive minimum is
/// evidence for a finite critical exponent; one near zero or negative
/// flags a degenerate direction.
pub fn functional_positivity_check(cone: &ConeSample, phi: &Functional) -> PositivityReport {
    let mut min: Option<f64> = None;
    let mut argmin_length = None;
    let mut per_length: Vec<(usize, f64)> = Vec::new();
    for (d, &len) in cone.directions.iter().zip(&cone.lengths) {
        let v = phi.eval(d);
        if min.is_none_or(|m| v < m) {
            min = Some(v);
            argmin_length = Some(len);
        }
        match per_length.iter_mut().find(|(l, _)| *l == len) {
            Some(entry) => entry.1 = entry.1.min(v),
            None => per_length.push((len, v)),
        }
    }
    per_length.sort_by_key(|&(l, _)| l);
    let decreasing = per_length.len() >= 2 && per_length.windows(2).all(|w| w[1].1 < w[0].1);
    PositivityReport {
        min,
        argmin_length,
        per_length,
        decreasing,
    }
}

fn unit(v: &CartanVector) -> Option<CartanVector> {
    let n = v.norm();
    (n > 1e-12).then(|| v.scale(1.0 / n))
}

/// Angle between `κ_θ(gⁿ)/‖·‖` and the normalized `θ`-Jordan projection,
/// for `n = 1..=count`. `None` where either vector vanishes.
pub fn jordan_direction_angles(g: &GroupElement, count: usize, theta: &RootSubset) -> Result<Vec<Option<f64>>> {
    let jordan = unit(&partial_projection(&jordan_vector(g)?, theta));
    let powers = power_sequence(g, count)?;
    powers
        .iter()
        .map(|p| {
            let d = unit(&partial_cartan(p, theta)?);
            Ok(match (&d, &jordan) {
                (Some(a), Some(b)) => {
                    let dot: f64 = a.coords().iter().zip(b.coords()).map(|(x, y)| x * y).sum();
                    Some(dot.clamp(-1.0, 1.0).acos())
                }
                _ => None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, Generator, Presentation};

    fn diag_group() -> BallEnumeration {
        let p = Presentation::free(vec![Generator {
            name: "g".into(),
            element: GroupElement::from_rows(3, &[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25]).unwrap(),
        }])
        .unwrap();
        enumerate_ball(&p, 8).unwrap()
    }

    #[test]
    fn diagonal_cone_is_one_direction() {
        let theta = RootSubset::full(&[3]);
        let b = diag_group();
        let cone = limit_cone_sample(&b, &theta, None).unwrap();
        assert_eq!(cone.cutoff, 4);
        assert_eq!(cone.len(), 10);
        let s = 0.5f64.sqrt();
        for d in &cone.directions {
            assert!((d.norm() - 1.0).abs() < 1e-9);
            let c = d.coords();
            assert!((c[0] - s).abs() < 1e-12 && c[1].abs() < 1e-12 && (c[2] + s).abs() < 1e-12);
        }
        let w1 = Functional::weight(&[3], 0, 1).unwrap();
        let r = functional_positivity_check(&cone, &w1);
        assert!((r.min.unwrap() - s).abs() < 1e-12);
        let r0 = functional_positivity_check(&cone, &Functional::zero(&[3]));
        assert_eq!(r0.min, Some(0.0));
    }

    #[test]
    fn powers_approach_the_jordan_direction() {
        let theta = RootSubset::full(&[3]);
        let m = crate::linalg::Mat::from_row_slice(3, 3, &[3.0, 5.0, 1.0, 0.0, 1.0, 4.0, 0.0, 0.0, 0.5]);
        let g = GroupElement::normalized(vec![m], vec![false]).unwrap();
        let angles: Vec<f64> = jordan_direction_angles(&g, 40, &theta).unwrap().into_iter().map(Option::unwrap).collect();
        // κ(gⁿ) = nλ + O(1), so the angle decays like 1/n
        assert!(angles[39] < 0.1 * angles[0], "{angles:?}");
        assert!(angles.iter().enumerate().all(|(n, a)| a * (n + 1) as f64 <= 2.0));
        assert!(angles[5..].windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
