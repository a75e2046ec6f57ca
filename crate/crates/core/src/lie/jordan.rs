//! Jordan projection: sorted logs of eigenvalue moduli.

use nalgebra::linalg::Schur;

use super::cartan::CartanVector;
use super::element::GroupElement;
use crate::error::{LabError, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// `λ(g)`: per factor, the logs of the eigenvalue moduli in nonincreasing order.
pub fn jordan_vector(g: &GroupElement) -> Result<CartanVector> {
    let mut factors = Vec::with_capacity(g.factor_count());
    for b in g.blocks() {
        let schur = Schur::try_new(b.clone(), SCHUR_EPS, SCHUR_MAX_ITER).ok_or(LabError::EigenFailure)?;
        let mut logs: Vec<f64> = schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm().ln())
            .collect();
        if logs.iter().any(|x| !x.is_finite()) {
            return Err(LabError::EigenFailure);
        }
        logs.sort_by(|a, b| b.total_cmp(a));
        factors.push(logs);
    }
    Ok(CartanVector::new(factors))
}
