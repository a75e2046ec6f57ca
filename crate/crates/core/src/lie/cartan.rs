//! Cartan projection, root and weight coordinates, and functionals on the
//! Cartan subspace of a product of `SL(d_i, ℝ)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::element::GroupElement;
use crate::error::{LabError, Result};
use crate::linalg::{sigma1_unimodular_2x2, sorted_svd, Mat, Vector};

/// Tolerance for the dominance (sorted, zero-sum) invariant.
pub const DOMINANCE_TOLERANCE: f64 = 1e-9;

/// Vector in the Cartan subspace, one coordinate block per direct factor,
/// natural-log scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CartanVector {
    factors: Vec<Vec<f64>>,
}

impl CartanVector {
    pub fn new(factors: Vec<Vec<f64>>) -> Self {
        Self { factors }
    }

    /// Build and check the closed-Weyl-chamber invariant.
    pub fn dominant(factors: Vec<Vec<f64>>) -> Result<Self> {
        let v = Self { factors };
        if !v.is_dominant(DOMINANCE_TOLERANCE) {
            return Err(LabError::InvalidElement(format!(
                "not a dominant Cartan vector: {:?}",
                v.factors
            )));
        }
        Ok(v)
    }

    pub fn zero(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &[f64] {
        &self.factors[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    /// All coordinates, factor by factor.
    pub fn coords(&self) -> Vec<f64> {
        self.factors.iter().flatten().copied().collect()
    }

    pub fn is_dominant(&self, tol: f64) -> bool {
        self.factors.iter().all(|f| {
            let sum: f64 = f.iter().sum();
            sum.abs() <= tol * (1.0 + f.iter().map(|x| x.abs()).sum::<f64>())
                && f.windows(2).all(|w| w[0] >= w[1] - tol)
        })
    }

    /// Euclidean norm on log-singular-value coordinates.
    pub fn norm(&self) -> f64 {
        self.factors.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .map(|f| f.iter().map(|x| x * c).collect())
                .collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dims(), other.dims(), "Cartan vector shape mismatch");
        Self {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect())
                .collect(),
        }
    }
}

/// Per-factor set of simple-root indices `j ∈ {1, …, d_i − 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootSubset {
    dims: Vec<usize>,
    sets: Vec<BTreeSet<usize>>,
}

impl RootSubset {
    /// Range-checked subset; symmetry is checked separately where required.
    pub fn new(dims: &[usize], sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        if dims.len() != sets.len() {
            return Err(LabError::DimensionMismatch(format!(
                "{} factors but {} root sets",
                dims.len(),
                sets.len()
            )));
        }
        for (d, s) in dims.iter().zip(&sets) {
            if let Some(&j) = s.iter().find(|&&j| j == 0 || j >= *d) {
                return Err(LabError::IndexOutOfRange {
                    index: j,
                    max: d.saturating_sub(1),
                });
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            sets,
        })
    }

    /// Range-checked and symmetric under `j ↦ d − j`.
    pub fn symmetric(dims: &[usize], sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        let s = Self::new(dims, sets)?;
        s.require_symmetric()?;
        Ok(s)
    }

    pub fn from_lists(dims: &[usize], lists: &[Vec<usize>]) -> Result<Self> {
        Self::new(dims, lists.iter().map(|l| l.iter().copied().collect()).collect())
    }

    /// All simple roots of every factor.
    pub fn full(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            sets: dims.iter().map(|&d| (1..d).collect()).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn indices(&self, factor: usize) -> &BTreeSet<usize> {
        &self.sets[factor]
    }

    pub fn contains(&self, factor: usize, j: usize) -> bool {
        self.sets.get(factor).is_some_and(|s| s.contains(&j))
    }

    pub fn is_symmetric(&self) -> bool {
        self.dims
            .iter()
            .zip(&self.sets)
            .all(|(d, s)| s.iter().all(|j| s.contains(&(d - j))))
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(LabError::NotSymmetric(format!("{:?}", self.sets)))
        }
    }

    /// `(factor, j)` pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sets
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }
}

/// Linear functional on the Cartan subspace, stored in the basis of
/// fundamental weights `ω_{i,j}` (factor `i`, index `j`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Functional {
    dims: Vec<usize>,
    coeffs: BTreeMap<(usize, usize), f64>,
}

impl Functional {
    pub fn zero(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_weights(dims: &[usize], terms: impl IntoIterator<Item = ((usize, usize), f64)>) -> Result<Self> {
        let mut f = Self::zero(dims);
        for ((i, j), c) in terms {
            check_index(dims, i, j)?;
            *f.coeffs.entry((i, j)).or_insert(0.0) += c;
        }
        f.coeffs.retain(|_, c| *c != 0.0);
        Ok(f)
    }

    /// The fundamental weight `ω_j` on factor `i`.
    pub fn weight(dims: &[usize], i: usize, j: usize) -> Result<Self> {
        Self::from_weights(dims, [((i, j), 1.0)])
    }

    /// The simple root `α_j = 2ω_j − ω_{j−1} − ω_{j+1}` on factor `i`.
    pub fn root(dims: &[usize], i: usize, j: usize) -> Result<Self> {
        check_index(dims, i, j)?;
        let d = dims[i];
        let mut terms = vec![((i, j), 2.0)];
        if j > 1 {
            terms.push(((i, j - 1), -1.0));
        }
        if j + 1 < d {
            terms.push(((i, j + 1), -1.0));
        }
        Self::from_weights(dims, terms)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_supported_on(&self, theta: &RootSubset) -> bool {
        self.coeffs.keys().all(|&(i, j)| theta.contains(i, j))
    }

    pub fn require_support(&self, theta: &RootSubset) -> Result<()> {
        if self.is_supported_on(theta) {
            Ok(())
        } else {
            Err(LabError::SupportMismatch)
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(*k).or_insert(0.0) += v;
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        out
    }

    /// `Σ c_{i,j} · ω_j(v^{(i)})`.
    pub fn eval(&self, v: &CartanVector) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(i, j), c)| c * v.factor(i)[..j].iter().sum::<f64>())
            .sum()
    }

    /// The functional `φ̄` with `φ̄(κ(g)) = φ(κ(g⁻¹))`: coefficient of
    /// `ω_j` moves to `ω_{d−j}`.
    pub fn bar(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(i, j), &c)| ((i, self.dims[i] - j), c))
                .collect(),
        }
    }
}

fn check_index(dims: &[usize], i: usize, j: usize) -> Result<()> {
    let d = *dims.get(i).ok_or(LabError::IndexOutOfRange {
        index: i,
        max: dims.len().saturating_sub(1),
    })?;
    if j == 0 || j >= d {
        return Err(LabError::IndexOutOfRange {
            index: j,
            max: d.saturating_sub(1),
        });
    }
    Ok(())
}

/// `κ(g)`: per factor, the nonincreasing logs of the singular values.
///
/// The upper half of the spectrum is read from `g` and the lower half from
/// the tracked inverse, so that tiny singular values of long products keep
/// full relative accuracy; the middle coordinate (odd `d`) closes the
/// zero-sum constraint.
pub fn cartan_projection(g: &GroupElement) -> Result<CartanVector> {
    let mut factors = Vec::with_capacity(g.factor_count());
    for (b, inv) in g.blocks().iter().zip(g.inverse_blocks()) {
        factors.push(block_log_singular_values(b, inv)?);
    }
    Ok(CartanVector::new(factors))
}

fn block_log_singular_values(b: &Mat, inv: &Mat) -> Result<Vec<f64>> {
    let d = b.nrows();
    match d {
        1 => Ok(vec![0.0]),
        2 => {
            let s1 = sigma1_unimodular_2x2(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
            if !s1.is_finite() || s1 <= 0.0 {
                return Err(LabError::SingularDecompositionFailure);
            }
            let l = s1.ln();
            Ok(vec![l, -l])
        }
        _ => {
            let (_, top, _) = sorted_svd(b)?;
            let (_, bottom, _) = sorted_svd(inv)?;
            let half = d / 2;
            let mut out = vec![0.0; d];
            for i in 0..half {
                out[i] = top[i].ln();
                out[d - 1 - i] = -bottom[i].ln();
            }
            if d % 2 == 1 {
                let others: f64 = out.iter().sum();
                out[half] = -others;
            }
            if out.iter().any(|x| !x.is_finite()) {
                return Err(LabError::SingularDecompositionFailure);
            }
            Ok(out)
        }
    }
}

/// Frames of a `KAK` decomposition `g = m · exp(κ) · ℓ`, per factor.
#[derive(Clone, Debug)]
pub struct KakFrames {
    pub m: Vec<Mat>,
    pub kappa: CartanVector,
    pub l: Vec<Mat>,
}

impl KakFrames {
    /// `m · exp(κ) · ℓ` per block.
    pub fn reconstruct(&self) -> Vec<Mat> {
        self.m
            .iter()
            .zip(self.kappa.factors())
            .zip(&self.l)
            .map(|((m, k), l)| {
                let a = Mat::from_diagonal(&Vector::from_iterator(k.len(), k.iter().map(|x| x.exp())));
                m * a * l
            })
            .collect()
    }
}

/// `KAK` decomposition with orthogonal `m`, `ℓ`.
///
/// Singular vectors of the lower half of the spectrum come from `g⁻ᵀ`, where
/// they are the dominant ones.
pub fn kak_frames(g: &GroupElement) -> Result<KakFrames> {
    let kappa = cartan_projection(g)?;
    let mut ms = Vec::new();
    let mut ls = Vec::new();
    for (idx, (b, inv)) in g.blocks().iter().zip(g.inverse_blocks()).enumerate() {
        let d = b.nrows();
        let (u, _, _) = sorted_svd(b)?;
        let (u_inv_t, _, _) = sorted_svd(&inv.transpose())?;
        let half = d / 2;
        // Orthonormalization order: top columns, then bottom ones from the
        // inverse transpose, then the middle column for odd d.
        let mut order: Vec<usize> = (0..half).collect();
        order.extend((d - half..d).rev());
        if d % 2 == 1 {
            order.push(half);
        }
        let mut cols = Mat::zeros(d, d);
        for (k, &pos) in order.iter().enumerate() {
            if pos < half || (d % 2 == 1 && pos == half) {
                cols.set_column(k, &u.column(pos));
            } else {
                cols.set_column(k, &u_inv_t.column(d - 1 - pos));
            }
        }
        let cols = gram_schmidt_with_fallback(&cols, &u);
        let mut m = Mat::zeros(d, d);
        for (k, &pos) in order.iter().enumerate() {
            m.set_column(pos, &cols.column(k));
        }
        // ℓ_i = σ_i⁻¹ m_iᵀ g on the upper half, σ_i m_iᵀ g⁻ᵀ on the lower.
        let sig = kappa.factor(idx);
        let mut rows = Mat::zeros(d, d);
        for (k, &pos) in order.iter().enumerate() {
            let mi = m.column(pos);
            let row = if pos >= d - half {
                (inv * mi) * sig[pos].exp()
            } else {
                (b.transpose() * mi) * (-sig[pos]).exp()
            };
            rows.set_column(k, &row);
        }
        let rows = gram_schmidt(&rows);
        let mut l = Mat::zeros(d, d);
        for (k, &pos) in order.iter().enumerate() {
            l.set_row(pos, &rows.column(k).transpose());
        }
        ms.push(m);
        ls.push(l);
    }
    Ok(KakFrames { m: ms, kappa, l: ls })
}

/// Gram–Schmidt on `cols`; a column that is (nearly) dependent on the
/// previous ones, which happens when singular values coincide, is replaced
/// by the column of `spare` with the largest residual.
fn gram_schmidt_with_fallback(cols: &Mat, spare: &Mat) -> Mat {
    let d = cols.nrows();
    let mut q = Mat::zeros(d, cols.ncols());
    let residual = |q: &Mat, k: usize, v: Vector| -> Vector {
        let mut r = v;
        for _ in 0..2 {
            for i in 0..k {
                let proj = q.column(i).dot(&r);
                r.axpy(-proj, &q.column(i), 1.0);
            }
        }
        r
    };
    for k in 0..cols.ncols() {
        let mut r = residual(&q, k, cols.column(k).into_owned());
        if r.norm() < 1e-3 {
            r = spare
                .column_iter()
                .map(|c| residual(&q, k, c.into_owned()))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("nonempty frame");
        }
        let n = r.norm();
        q.set_column(k, &(r / n));
    }
    q
}

/// Column Gram–Schmidt without sign changes.
pub(crate) fn gram_schmidt(m: &Mat) -> Mat {
    let mut q = m.clone();
    for k in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..k {
                let proj = q.column(i).dot(&q.column(k));
                let qi = q.column(i).into_owned();
                q.column_mut(k).axpy(-proj, &qi, 1.0);
            }
        }
        let n = q.column(k).norm();
        if n > 0.0 {
            q.column_mut(k).unscale_mut(n);
        }
    }
    q
}

/// Opposition involution: per factor, reverse and negate.
pub fn opposition_involution(v: &CartanVector) -> CartanVector {
    CartanVector::new(
        v.factors()
            .iter()
            .map(|f| f.iter().rev().map(|x| -x).collect())
            .collect(),
    )
}

/// `α_j(v) = a_j − a_{j+1}` on factor `i`.
pub fn simple_root(v: &CartanVector, i: usize, j: usize) -> Result<f64> {
    check_index(&v.dims(), i, j)?;
    let f = v.factor(i);
    Ok(f[j - 1] - f[j])
}

/// `ω_j(v) = a_1 + … + a_j` on factor `i`.
pub fn fundamental_weight(v: &CartanVector, i: usize, j: usize) -> Result<f64> {
    check_index(&v.dims(), i, j)?;
    Ok(v.factor(i)[..j].iter().sum())
}

/// `p_θ`: the unique vector with `α_j = 0` for `j ∉ θ`, zero trace, and the
/// same `ω_j` as `v` for `j ∈ θ`. Per factor this averages `v` over the
/// blocks cut out by `θ`.
pub fn partial_projection(v: &CartanVector, theta: &RootSubset) -> CartanVector {
    let mut out = Vec::with_capacity(v.factors().len());
    for (i, f) in v.factors().iter().enumerate() {
        let d = f.len();
        let mut cuts: Vec<usize> = vec![0];
        cuts.extend(theta.indices(i).iter().copied());
        cuts.push(d);
        let mut proj = vec![0.0; d];
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // ω at the block ends; ω_d is taken as 0 so the result is traceless.
            let w_lo: f64 = f[..lo].iter().sum();
            let w_hi: f64 = if hi == d { 0.0 } else { f[..hi].iter().sum() };
            let mean = (w_hi - w_lo) / (hi - lo) as f64;
            for x in &mut proj[lo..hi] {
                *x = mean;
            }
        }
        out.push(proj);
    }
    CartanVector::new(out)
}

/// `κ_θ(g) = p_θ(κ(g))`.
pub fn partial_cartan(g: &GroupElement, theta: &RootSubset) -> Result<CartanVector> {
    Ok(partial_projection(&cartan_projection(g)?, theta))
}

pub fn eval_functional(phi: &Functional, v: &CartanVector) -> f64 {
    phi.eval(v)
}

pub fn bar_functional(phi: &Functional) -> Functional {
    phi.bar()
}

/// Riemannian distance `d_M(g·x₀, h·x₀)` on the symmetric space, normalized
/// so each `SL(2,ℝ)` factor is the hyperbolic plane of curvature −1:
/// `√2 · ‖κ(g⁻¹h)‖`.
pub fn symmetric_distance(g: &GroupElement, h: &GroupElement) -> Result<f64> {
    symmetric_displacement(&(&g.inverse() * h))
}

/// `d_M(g·x₀, x₀)`.
pub fn symmetric_displacement(g: &GroupElement) -> Result<f64> {
    Ok(std::f64::consts::SQRT_2 * cartan_projection(g)?.norm())
}
