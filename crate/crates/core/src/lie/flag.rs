//! Partial flags as orthonormal frames, attracting flags, and the
//! principal-angle geometry used for transversality.

use serde::Serialize;

use super::cartan::{kak_frames, RootSubset};
use super::element::GroupElement;
use crate::error::{LabError, Result};
use crate::linalg::{canonicalize_column_signs, orthonormalize, qr_positive, singular_values, Mat};

/// Default relative gap `σ_j/σ_{j+1} − 1` below which `U_θ(g)` is refused.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-6;

/// A point of `F_θ`: one orthonormal frame per factor, read through the
/// leading `j`-spans for `j ∈ θ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flag {
    #[serde(serialize_with = "serialize_frames")]
    frames: Vec<Mat>,
    #[serde(skip)]
    theta: RootSubset,
}

fn serialize_frames<S: serde::Serializer>(frames: &[Mat], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(frames.len()))?;
    for f in frames {
        seq.serialize_element(&crate::linalg::to_row_major(f))?;
    }
    seq.end()
}

impl Flag {
    /// Frames are re-orthonormalized (leading spans kept) and sign-canonicalized.
    pub fn new(frames: Vec<Mat>, theta: RootSubset) -> Result<Self> {
        if frames.len() != theta.dims().len() {
            return Err(LabError::DimensionMismatch(format!(
                "{} frames for {} factors",
                frames.len(),
                theta.dims().len()
            )));
        }
        for (f, &d) in frames.iter().zip(theta.dims()) {
            if f.nrows() != d || f.ncols() != d {
                return Err(LabError::DimensionMismatch(format!(
                    "frame is {}x{}, factor dimension {d}",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(Self {
            frames: frames.iter().map(orthonormalize).collect(),
            theta,
        })
    }

    /// The standard flag `⟨e₁⟩ ⊂ ⟨e₁,e₂⟩ ⊂ …` in every factor.
    pub fn standard(theta: RootSubset) -> Self {
        let frames = theta.dims().iter().map(|&d| Mat::identity(d, d)).collect();
        Self { frames, theta }
    }

    /// The flag `⟨e_d⟩ ⊂ ⟨e_d, e_{d−1}⟩ ⊂ …`, transverse to the standard one.
    pub fn reversed(theta: RootSubset) -> Self {
        let frames = theta
            .dims()
            .iter()
            .map(|&d| Mat::from_fn(d, d, |i, j| if i + j == d - 1 { 1.0 } else { 0.0 }))
            .collect();
        Self { frames, theta }
    }

    pub fn frames(&self) -> &[Mat] {
        &self.frames
    }

    pub fn theta(&self) -> &RootSubset {
        &self.theta
    }

    /// Orthonormal basis of the `j`-dimensional subspace in factor `i`.
    pub fn subspace(&self, i: usize, j: usize) -> Mat {
        self.frames[i].columns(0, j).into_owned()
    }

    /// `g · F`.
    pub fn act(&self, g: &GroupElement) -> Self {
        let frames = g
            .blocks()
            .iter()
            .zip(&self.frames)
            .map(|(b, f)| {
                let (mut q, _) = qr_positive(&(b * f));
                canonicalize_column_signs(&mut q);
                q
            })
            .collect();
        Self {
            frames,
            theta: self.theta.clone(),
        }
    }

    /// All frame coordinates, factor by factor, row-major.
    pub fn coordinates(&self) -> Vec<f64> {
        self.frames
            .iter()
            .flat_map(crate::linalg::to_row_major)
            .collect()
    }
}

/// `U_θ(g)`: leading spans of the left `KAK` frame.
pub fn attracting_flag(g: &GroupElement, theta: &RootSubset, gap_tolerance: f64) -> Result<Flag> {
    let kak = kak_frames(g)?;
    let threshold = (1.0 + gap_tolerance).ln();
    for (i, j) in theta.pairs() {
        let k = kak.kappa.factor(i);
        if k[j - 1] - k[j] <= threshold {
            return Err(LabError::GapTooSmall(j));
        }
    }
    Flag::new(kak.m, theta.clone())
}

/// `min_{j∈θ} log(σ_j/σ_{j+1})` over factors; `+∞` for empty `θ`.
pub fn gap_margin(g: &GroupElement, theta: &RootSubset) -> Result<f64> {
    let kappa = super::cartan::cartan_projection(g)?;
    Ok(theta
        .pairs()
        .map(|(i, j)| kappa.factor(i)[j - 1] - kappa.factor(i)[j])
        .fold(f64::INFINITY, f64::min))
}

/// Minimum over `j ∈ θ` of the smallest singular value of
/// `F₁^jᵀ · (F₂^{d−j})^⊥`, that is the sine of the smallest angle between
/// `F₁^j` and `F₂^{d−j}`. Zero exactly when the pair is not transverse;
/// 1 for an empty `θ`.
pub fn flag_transversality_margin(f1: &Flag, f2: &Flag, theta: &RootSubset) -> Result<f64> {
    check_same_shape(f1, f2)?;
    let mut margin: f64 = 1.0;
    for (i, j) in theta.pairs() {
        let d = f1.frames[i].nrows();
        let a = f1.frames[i].columns(0, j);
        let comp = f2.frames[i].columns(d - j, j);
        let m = a.transpose() * comp;
        let s = singular_values(&m)?;
        margin = margin.min(*s.last().unwrap_or(&0.0));
    }
    Ok(margin.clamp(0.0, 1.0))
}

/// Principal-angle distance on `F_θ`: the largest over `j ∈ θ` of the sine
/// of the largest principal angle between `F₁^j` and `F₂^j`.
pub fn flag_distance(f1: &Flag, f2: &Flag, theta: &RootSubset) -> Result<f64> {
    check_same_shape(f1, f2)?;
    let mut dist: f64 = 0.0;
    for (i, j) in theta.pairs() {
        let a = f1.frames[i].columns(0, j);
        let d = f1.frames[i].nrows();
        let comp = f2.frames[i].columns(j, d - j);
        let s = singular_values(&(a.transpose() * comp))?;
        dist = dist.max(s.first().copied().unwrap_or(0.0));
    }
    Ok(dist.clamp(0.0, 1.0))
}

fn check_same_shape(f1: &Flag, f2: &Flag) -> Result<()> {
    if f1.theta.dims() != f2.theta.dims() {
        return Err(LabError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            f1.theta.dims(),
            f2.theta.dims()
        )));
    }
    Ok(())
}
