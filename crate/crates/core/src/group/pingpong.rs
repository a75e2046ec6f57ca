//! Ping-pong certificates with caps in projective space.

use serde::{Deserialize, Serialize};

use super::presentation::Presentation;
use crate::error::{LabError, Result};
use crate::linalg::{Mat, Vector};

/// Closed cap `{[x] : ∠([x], [center]) ≤ radius}` in `ℝP^{d−1}`, with the
/// projective angle `arccos |⟨x, c⟩|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Cap {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&radius) {
            return Err(LabError::Config("cap needs a nonzero center and radius in [0, π/2]".into()));
        }
        Ok(Self {
            center: center.iter().map(|x| x / n).collect(),
            radius,
        })
    }

    /// Interval `[a, b]` of `ℝ ∪ {∞}` (through `∞` when `a > b`); the
    /// point `x` is the line through `(x, 1)`, `±∞` the line through `(1, 0)`.
    pub fn from_interval(a: f64, b: f64) -> Result<Self> {
        let psi = |x: f64| {
            if x == f64::INFINITY {
                0.0
            } else if x == f64::NEG_INFINITY {
                std::f64::consts::PI
            } else {
                1f64.atan2(x)
            }
        };
        if a.is_nan() || b.is_nan() {
            return Err(LabError::Config("interval endpoint is NaN".into()));
        }
        let (hi, lo) = if a <= b { (psi(a), psi(b)) } else { (psi(a), psi(b) - std::f64::consts::PI) };
        let mid = 0.5 * (hi + lo);
        Self::new(vec![mid.cos(), mid.sin()], 0.5 * (hi - lo))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn center_vec(&self) -> Vector {
        Vector::from_column_slice(&self.center)
    }

    /// Projective angle from the center.
    pub fn angle_to(&self, x: &Vector) -> f64 {
        projective_angle(&self.center_vec(), x)
    }

    /// Boundary and interior sample points.
    pub fn samples(&self, boundary: usize, rings: usize) -> Vec<Vector> {
        let d = self.dim();
        let c = self.center_vec();
        // orthonormal basis of c⊥
        let mut basis = Mat::identity(d, d);
        basis.set_column(0, &c);
        let q = crate::lie::cartan::gram_schmidt(&basis);
        let mut out = vec![c.clone()];
        for r in 1..=rings {
            let t = self.radius * r as f64 / rings as f64;
            let dirs = sphere_directions(d - 1, boundary);
            for dir in dirs {
                let mut tangent = Vector::zeros(d);
                for (k, x) in dir.iter().enumerate() {
                    tangent += q.column(k + 1) * *x;
                }
                out.push(&c * t.cos() + tangent * t.sin());
            }
        }
        out
    }
}

/// Unit vectors in `ℝ^m` (`m ≤ 2` exactly spaced; higher `m` on a
/// latitude-longitude grid).
fn sphere_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    match m {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            let lat = (count as f64).sqrt().ceil() as usize;
            for i in 0..=lat {
                let phi = std::f64::consts::PI * i as f64 / lat as f64;
                for j in 0..lat {
                    let t = 2.0 * std::f64::consts::PI * j as f64 / lat as f64;
                    let mut v = vec![0.0; m];
                    v[0] = phi.cos();
                    v[1] = phi.sin() * t.cos();
                    v[2] = phi.sin() * t.sin();
                    out.push(v);
                }
            }
            out
        }
    }
}

pub fn projective_angle(a: &Vector, b: &Vector) -> f64 {
    let c = (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0);
    c.acos()
}

/// Caps for one generator: attracting cap of `g` and of `g⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDomains {
    pub plus: Cap,
    pub minus: Cap,
}

/// Ping-pong data on one direct factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongDomains {
    pub factor: usize,
    pub generators: Vec<GeneratorDomains>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PingPongReport {
    pub certified: bool,
    /// Largest angular excess of an image point outside its target cap.
    pub worst_excess: f64,
    pub failures: Vec<String>,
    pub checked_points: usize,
}

const CONTAINMENT_SLACK: f64 = 1e-9;

/// Check the ping-pong configuration.
///
/// Caps of different generators must be disjoint; the two caps of one
/// generator may touch (parabolic case). For `d = 2` each letter `s` must
/// map the closed complement of the cap of `s⁻¹` into the cap of `s`; for
/// `d ≥ 3` it must map every cap other than that of `s⁻¹` into the cap of
/// `s`. Both are checked on boundary and interior samples.
pub fn ping_pong_certificate(p: &Presentation, domains: &PingPongDomains) -> Result<PingPongReport> {
    let n = p.generator_count();
    if domains.generators.len() != n {
        return Err(LabError::Config(format!(
            "{} domain pairs for {} generators",
            domains.generators.len(),
            n
        )));
    }
    let f = domains.factor;
    let dims = p.dims();
    let d = *dims
        .get(f)
        .ok_or_else(|| LabError::Config(format!("factor {f} out of range")))?;
    let caps: Vec<&Cap> = domains.generators.iter().flat_map(|g| [&g.plus, &g.minus]).collect();
    if caps.iter().any(|c| c.dim() != d) {
        return Err(LabError::DimensionMismatch(format!("caps must live in ℝP^{}", d - 1)));
    }
    for i in 0..caps.len() {
        for j in (i + 1)..caps.len() {
            let gap = projective_angle(&caps[i].center_vec(), &caps[j].center_vec()) - caps[i].radius - caps[j].radius;
            let same_generator = i / 2 == j / 2;
            if gap < -1e-12 || (!same_generator && gap <= 1e-12) {
                return Err(LabError::DomainOverlap(format!(
                    "caps {i} and {j} (letters {}{} and {}{})",
                    p.generators()[i / 2].name,
                    if i % 2 == 0 { "" } else { "^-1" },
                    p.generators()[j / 2].name,
                    if j % 2 == 0 { "" } else { "^-1" },
                )));
            }
        }
    }
    let mut failures = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0;
    let (boundary, rings) = if d == 2 { (2, 200) } else { (48, 6) };
    for letter in 0..caps.len() {
        let g = p.letter_element(letter as u8);
        let m = &g.blocks()[f];
        let target = caps[letter];
        let inverse_cap = caps[letter ^ 1];
        let sources: Vec<Cap> = if d == 2 {
            let c = &inverse_cap.center;
            vec![Cap::new(vec![-c[1], c[0]], std::f64::consts::FRAC_PI_2 - inverse_cap.radius)?]
        } else {
            (0..caps.len())
                .filter(|&k| k != (letter ^ 1))
                .map(|k| caps[k].clone())
                .collect()
        };
        for src in &sources {
            for x in src.samples(boundary, rings) {
                let y = m * x;
                let excess = target.angle_to(&y) - target.radius;
                checked += 1;
                worst = worst.max(excess);
                if excess > CONTAINMENT_SLACK {
                    failures.push(format!(
                        "letter {}{} maps a point {:.3e} rad outside its cap",
                        p.generators()[letter / 2].name,
                        if letter % 2 == 0 { "" } else { "^-1" },
                        excess
                    ));
                    break;
                }
            }
        }
    }
    Ok(PingPongReport {
        certified: failures.is_empty(),
        worst_excess: worst,
        failures,
        checked_points: checked,
    })
}
