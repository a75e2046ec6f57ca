use std::ops::Mul;

use crate::error::{LabError, Result};
use crate::linalg::{max_abs_entry, Mat};

/// Tolerance on `|det| = 1` for each block.
pub const DET_TOLERANCE: f64 = 1e-10;

/// An element of a product of `SL(d_i, ℝ)` (or `PSL` when the block is
/// marked projective).
///
/// Each block carries its exact inverse alongside it. Products update both
/// sides, so the inverse of a long word is the product of the letter
/// inverses rather than a numerically inverted ill-conditioned matrix. The
/// Cartan projection uses it to recover the small singular values.
#[derive(Clone, Debug)]
pub struct GroupElement {
    blocks: Vec<Mat>,
    inverses: Vec<Mat>,
    projective: Vec<bool>,
}

impl GroupElement {
    pub fn new(blocks: Vec<Mat>, projective: Vec<bool>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(LabError::InvalidElement("no blocks".into()));
        }
        if blocks.len() != projective.len() {
            return Err(LabError::InvalidElement(format!(
                "{} blocks but {} projective flags",
                blocks.len(),
                projective.len()
            )));
        }
        let mut inverses = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if !b.is_square() || b.nrows() == 0 {
                return Err(LabError::InvalidElement(format!("block {i} is not square")));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(LabError::InvalidElement(format!("block {i} has non-finite entries")));
            }
            let det = b.determinant();
            if (det.abs() - 1.0).abs() > DET_TOLERANCE {
                return Err(LabError::InvalidElement(format!(
                    "block {i} has |det| = {} (expected 1)",
                    det.abs()
                )));
            }
            let inv = b
                .clone()
                .try_inverse()
                .ok_or_else(|| LabError::InvalidElement(format!("block {i} is singular")))?;
            inverses.push(inv);
        }
        Ok(Self {
            blocks,
            inverses,
            projective,
        })
    }

    /// Rescale every block to `|det| = 1` before validating.
    pub fn normalized(blocks: Vec<Mat>, projective: Vec<bool>) -> Result<Self> {
        let blocks = blocks
            .into_iter()
            .map(|b| {
                let d = b.nrows() as f64;
                let det = b.determinant().abs();
                if det > 0.0 && det.is_finite() {
                    b / det.powf(1.0 / d)
                } else {
                    b
                }
            })
            .collect();
        Self::new(blocks, projective)
    }

    /// Single `SL(d)` block, not projective.
    pub fn single(m: Mat) -> Result<Self> {
        Self::new(vec![m], vec![false])
    }

    pub fn from_rows(d: usize, rows: &[f64]) -> Result<Self> {
        Self::single(Mat::from_row_slice(d, d, rows))
    }

    pub fn identity(dims: &[usize], projective: &[bool]) -> Self {
        let blocks: Vec<Mat> = dims.iter().map(|&d| Mat::identity(d, d)).collect();
        Self {
            inverses: blocks.clone(),
            blocks,
            projective: projective.to_vec(),
        }
    }

    /// Assemble from blocks whose inverses are already known. The caller
    /// guarantees `blocks[i] * inverses[i] = id` to working precision.
    pub(crate) fn from_parts(blocks: Vec<Mat>, inverses: Vec<Mat>, projective: Vec<bool>) -> Self {
        debug_assert_eq!(blocks.len(), inverses.len());
        Self {
            blocks,
            inverses,
            projective,
        }
    }

    pub fn blocks(&self) -> &[Mat] {
        &self.blocks
    }

    pub fn inverse_blocks(&self) -> &[Mat] {
        &self.inverses
    }

    pub fn projective(&self) -> &[bool] {
        &self.projective
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn factor_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            blocks: self.inverses.clone(),
            inverses: self.blocks.clone(),
            projective: self.projective.clone(),
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(LabError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self * other)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.blocks.iter().map(max_abs_entry).fold(0.0, f64::max)
    }

    /// Entrywise comparison within `tol`, identifying `±` on projective blocks.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dims() != other.dims() {
            return false;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .zip(&self.projective)
            .all(|((a, b), &proj)| {
                let plus = (a - b).amax() <= tol;
                plus || (proj && (a + b).amax() <= tol)
            })
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let id = Self::identity(&self.dims(), &self.projective);
        self.approx_eq(&id, tol)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "factor count mismatch");
        let blocks = self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect();
        let inverses = rhs
            .inverses
            .iter()
            .zip(&self.inverses)
            .map(|(a, b)| a * b)
            .collect();
        GroupElement {
            blocks,
            inverses,
            projective: self.projective.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unimodular() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(GroupElement::single(m), Err(LabError::InvalidElement(_))));
    }

    #[test]
    fn normalized_rescales() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let g = GroupElement::normalized(vec![m], vec![false]).unwrap();
        assert!(g.is_identity(1e-12));
    }

    #[test]
    fn product_tracks_inverse() {
        let a = GroupElement::from_rows(2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        let b = GroupElement::from_rows(2, &[1.0, 0.0, 3.0, 1.0]).unwrap();
        let ab = &a * &b;
        let back = &ab * &ab.inverse();
        assert!(back.is_identity(1e-12));
    }

    #[test]
    fn projective_sign_identification() {
        let a = GroupElement::new(vec![Mat::identity(2, 2)], vec![true]).unwrap();
        let b = GroupElement::new(vec![-Mat::identity(2, 2)], vec![true]).unwrap();
        assert!(a.approx_eq(&b, 1e-12));
        let c = GroupElement::new(vec![-Mat::identity(2, 2)], vec![false]).unwrap();
        let d = GroupElement::new(vec![Mat::identity(2, 2)], vec![false]).unwrap();
        assert!(!c.approx_eq(&d, 1e-12));
    }
}
