//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on `DMatrix<f64>`; the matrices in this crate are
//! tiny (d ≤ 6 in practice) so clarity wins over blocking or SIMD.

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Singular value decomposition `m = u · diag(sigma) · vᵀ` with `sigma`
/// sorted in nonincreasing order.
///
/// Computed with `faer`: nalgebra 0.35's SVD loses up to 1e-4 relative
/// accuracy on long products once singular vectors are requested.
pub fn sorted_svd(m: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let (r, c) = m.shape();
    let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = f.thin_svd().map_err(|_| LabError::SingularDecompositionFailure)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let n = s.nrows();
    let sigma: Vec<f64> = (0..n).map(|i| s[i]).collect();
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(LabError::SingularDecompositionFailure);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let u_sorted = Mat::from_fn(r, n, |i, k| u[(i, order[k])]);
    let v_sorted = Mat::from_fn(c, n, |i, k| v[(i, order[k])]);
    Ok((u_sorted, order.iter().map(|&i| sigma[i]).collect(), v_sorted))
}

/// Largest singular value with its left and right singular vectors.
pub fn top_singular(m: &Mat) -> Result<(f64, Vector, Vector)> {
    let (u, s, v) = sorted_svd(m)?;
    Ok((s[0], u.column(0).into_owned(), v.column(0).into_owned()))
}

/// Largest singular value of a 2×2 matrix with unit determinant modulus,
/// in closed form. Accurate for arbitrarily ill-conditioned input since it
/// never forms the small singular value.
pub fn sigma1_unimodular_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let f = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (f * f - 4.0 * det * det).max(0.0);
    ((f + disc.sqrt()) / 2.0).sqrt()
}

/// Largest absolute entry; `+∞` if any entry is not finite.
pub fn max_abs_entry(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| if x.is_finite() { acc.max(x.abs()) } else { f64::INFINITY })
}

/// Flip column signs so the first entry above `1e-12` in absolute value is
/// positive. Subspaces spanned by leading columns are unchanged.
pub fn canonicalize_column_signs(m: &mut Mat) {
    for mut col in m.column_iter_mut() {
        if let Some(x) = col.iter().find(|x| x.abs() > 1e-12) {
            if *x < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Gram–Schmidt (twice, for stability) on the columns of `m`, preserving
/// the flag of leading spans, followed by sign canonicalization.
pub fn orthonormalize(m: &Mat) -> Mat {
    let mut q = m.clone();
    let n = q.ncols();
    for k in 0..n {
        for _ in 0..2 {
            for i in 0..k {
                let proj = q.column(i).dot(&q.column(k));
                let qi = q.column(i).into_owned();
                q.column_mut(k).axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(k).norm();
        if norm > 0.0 {
            q.column_mut(k).unscale_mut(norm);
        }
    }
    canonicalize_column_signs(&mut q);
    q
}

/// QR factorization with nonnegative diagonal on `R`; returns `(Q, diag R)`.
pub fn qr_positive(m: &Mat) -> (Mat, Vec<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let n = r.nrows().min(r.ncols());
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let rii = r[(i, i)];
        if rii < 0.0 {
            q.column_mut(i).neg_mut();
        }
        diag.push(rii.abs());
    }
    (q, diag)
}

/// All `j`-element subsets of `0..d` in lexicographic order.
pub fn subsets(d: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, j, &mut Vec::with_capacity(j), &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `j`-th exterior power in the lexicographic basis `e_I`, `|I| = j`.
pub fn exterior_power(m: &Mat, j: usize) -> Mat {
    let d = m.nrows();
    let idx = subsets(d, j);
    let n = idx.len();
    let mut out = Mat::zeros(n, n);
    for (r, rows) in idx.iter().enumerate() {
        for (c, cols) in idx.iter().enumerate() {
            let sub = Mat::from_fn(j, j, |a, b| m[(rows[a], cols[b])]);
            out[(r, c)] = if j == 0 { 1.0 } else { sub.determinant() };
        }
    }
    out
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    let (_, s, _) = sorted_svd(m)?;
    Ok(s)
}

/// Matrix exponential of a nilpotent matrix (finite series).
pub fn nilpotent_exp(y: &Mat) -> Mat {
    let d = y.nrows();
    let mut result = Mat::identity(d, d);
    let mut term = Mat::identity(d, d);
    for k in 1..=d {
        term = &term * y / k as f64;
        result += &term;
    }
    result
}

/// Double-double scalar (Dekker / Knuth error-free transforms).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = Self::quick_two_sum(s, e);
        Self { hi, lo }
    }

    pub fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = Self::quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Product of square matrices carried in double-double.
pub fn matmul_dd(a: &[DoubleDouble], b: &[DoubleDouble], n: usize) -> Vec<DoubleDouble> {
    let mut out = vec![DoubleDouble::default(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] = out[i * n + j].add(aik.mul(b[k * n + j]));
            }
        }
    }
    out
}

/// Row-major copy of a matrix.
pub fn to_row_major(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(n: usize, data: &[f64]) -> Mat {
    Mat::from_row_slice(n, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = Mat::from_row_slice(3, 3, &[0.1, 2.0, 0.0, 3.0, 0.2, 1.0, 0.0, 0.5, 0.7]);
        let (u, s, v) = sorted_svd(&m).unwrap();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let rec = &u * Mat::from_diagonal(&Vector::from_vec(s)) * v.transpose();
        assert!((rec - m).norm() < 1e-12);
    }

    #[test]
    fn closed_form_sigma1_matches_svd() {
        let (a, b, c, d) = (2.0, 3.0, 1.0, 2.0);
        let s = sigma1_unimodular_2x2(a, b, c, d);
        let m = Mat::from_row_slice(2, 2, &[a, b, c, d]);
        let (_, sv, _) = sorted_svd(&m).unwrap();
        assert!((s - sv[0]).abs() < 1e-12);
    }

    #[test]
    fn exterior_square_of_diagonal() {
        let m = Mat::from_diagonal(&Vector::from_vec(vec![4.0, 1.0, 0.25]));
        let w = exterior_power(&m, 2);
        // basis e12, e13, e23
        assert_eq!(w[(0, 0)], 4.0);
        assert_eq!(w[(1, 1)], 1.0);
        assert_eq!(w[(2, 2)], 0.25);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(subsets(4, 2).len(), 6);
    }

    #[test]
    fn exterior_power_is_multiplicative() {
        let a = Mat::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0]);
        let b = Mat::from_row_slice(3, 3, &[0.3, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 0.5, 1.5]);
        let lhs = exterior_power(&(&a * &b), 2);
        let rhs = exterior_power(&a, 2) * exterior_power(&b, 2);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn qr_positive_diagonal() {
        let m = Mat::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let (q, d) = qr_positive(&m);
        assert!(d.iter().all(|x| *x >= 0.0));
        assert!((q.transpose() * &q - Mat::identity(2, 2)).norm() < 1e-12);
        assert!((d[0] * d[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn double_double_recovers_cancellation() {
        // (1e16 + 1) - 1e16 is lost in f64 but kept in double-double.
        let big = DoubleDouble::new(1e16);
        let x = big.add(DoubleDouble::new(1.0)).add(DoubleDouble::new(-1e16));
        assert_eq!(x.to_f64(), 1.0);
        let p = DoubleDouble::new(1.0 + f64::EPSILON).mul(DoubleDouble::new(1.0 - f64::EPSILON));
        assert!(p.lo != 0.0);
    }

    #[test]
    fn nilpotent_exponential_terminates() {
        let y = Mat::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let e = nilpotent_exp(&y);
        assert_eq!(e[(0, 2)], 1.5);
        assert_eq!(e[(0, 1)], 1.0);
    }
}
