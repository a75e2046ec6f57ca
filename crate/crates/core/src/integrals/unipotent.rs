//! Weight polynomials of unipotent subgroups and the comparison between
//! lattice series and integrals over the Lie algebra.

use serde::Serialize;

use super::poly::{MultiPoly, RationalFactor, RationalProduct};
use super::quadrature::{shell_integrals, ShellOptions};
use crate::error::{LabError, Result};
use crate::lie::{cartan_projection, GroupElement};
use crate::linalg::{binomial, nilpotent_exp, singular_values, subsets, Mat};
use crate::stats::linear_fit;

/// `P_j(y) = ‖∧^j exp(Σ yᵢ Yᵢ)‖²_F` and the constant `C` with
/// `C⁻¹ P_j^{1/2} ≤ σ₁(∧^j e^Y) ≤ P_j^{1/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightPolynomial {
    pub j: usize,
    pub polynomial: MultiPoly,
    pub constant: f64,
}

/// Every product of `d` basis elements vanishes, so every element of the
/// span satisfies `Y^d = 0`.
fn check_nilpotent(d: usize, basis: &[Mat]) -> Result<()> {
    let tol = 1e-12 * basis.iter().map(|b| b.amax()).fold(1.0, f64::max).powi(d as i32);
    let mut products: Vec<Mat> = basis.to_vec();
    for _ in 1..d {
        let mut next = Vec::new();
        for p in &products {
            for b in basis {
                let q = p * b;
                if q.amax() > tol {
                    next.push(q);
                }
            }
        }
        if next.is_empty() {
            return Ok(());
        }
        products = next;
    }
    if products.iter().all(|p| p.amax() <= tol) {
        Ok(())
    } else {
        Err(LabError::NotNilpotent)
    }
}

type PolyMatrix = Vec<Vec<MultiPoly>>;

fn poly_matmul(a: &PolyMatrix, b: &PolyMatrix, k: usize) -> PolyMatrix {
    let d = a.len();
    (0..d)
        .map(|r| {
            (0..d)
                .map(|c| {
                    (0..d).fold(MultiPoly::constant(k, 0.0), |acc, m| acc.add(&a[r][m].mul(&b[m][c])))
                })
                .collect()
        })
        .collect()
}

fn poly_det(m: &[Vec<MultiPoly>], k: usize) -> MultiPoly {
    let j = m.len();
    if j == 1 {
        return m[0][0].clone();
    }
    let mut acc = MultiPoly::constant(k, 0.0);
    for c in 0..j {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MultiPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(i, _)| i != c).map(|(_, p)| p.clone()).collect())
            .collect();
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc.add(&m[0][c].mul(&poly_det(&minor, k)).scale(sign));
    }
    acc
}

/// Exponential of the generic element `Σ yᵢ Yᵢ` as a polynomial matrix.
fn generic_exp(d: usize, basis: &[Mat]) -> PolyMatrix {
    let k = basis.len();
    let y: PolyMatrix = (0..d)
        .map(|r| {
            (0..d)
                .map(|c| {
                    MultiPoly::new(
                        k,
                        basis.iter().enumerate().map(|(i, b)| {
                            let mut e = vec![0; k];
                            e[i] = 1;
                            (e, b[(r, c)])
                        }),
                    )
                    .expect("well-formed terms")
                })
                .collect()
        })
        .collect();
    let identity: PolyMatrix = (0..d)
        .map(|r| (0..d).map(|c| MultiPoly::constant(k, if r == c { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut result = identity.clone();
    let mut term = identity;
    for m in 1..d {
        term = poly_matmul(&term, &y, k)
            .into_iter()
            .map(|row| row.into_iter().map(|p| p.scale(1.0 / m as f64)).collect())
            .collect();
        for r in 0..d {
            for c in 0..d {
                result[r][c] = result[r][c].add(&term[r][c]);
            }
        }
    }
    result
}

/// Squared Frobenius norm of `∧^j exp(Σ yᵢ Yᵢ)` as a polynomial in the
/// coordinates `y`, i.e. the sum of squared `j × j` minors.
pub fn unipotent_weight_polynomials(d: usize, basis: &[Mat], j: usize) -> Result<WeightPolynomial> {
    if j == 0 || j >= d {
        return Err(LabError::IndexOutOfRange { index: j, max: d.saturating_sub(1) });
    }
    if basis.is_empty() {
        return Err(LabError::Config("unipotent basis is empty".into()));
    }
    for b in basis {
        if b.nrows() != d || b.ncols() != d {
            return Err(LabError::DimensionMismatch(format!(
                "basis matrix is {}×{}, expected {d}×{d}",
                b.nrows(),
                b.ncols()
            )));
        }
    }
    check_nilpotent(d, basis)?;
    let k = basis.len();
    let e = generic_exp(d, basis);
    let idx = subsets(d, j);
    let mut p = MultiPoly::constant(k, 0.0);
    for rows in &idx {
        for cols in &idx {
            let sub: Vec<Vec<MultiPoly>> =
                rows.iter().map(|&r| cols.iter().map(|&c| e[r][c].clone()).collect()).collect();
            let minor = poly_det(&sub, k);
            p = p.add(&minor.mul(&minor));
        }
    }
    Ok(WeightPolynomial {
        j,
        polynomial: p.pruned(1e-13),
        constant: (binomial(d, j) as f64).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichRow {
    pub s: f64,
    pub series: f64,
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichTable {
    pub lattice_radius: u32,
    pub rows: Vec<SandwichRow>,
    /// `max_s max(ratio, 1/ratio)`.
    pub a_hat: f64,
}

/// `φ(κ(g))` for `φ = Σ c_j ω_j`: `Σ_j c_j Σ_{i≤j} log σ_i(g)`.
fn phi_of_kappa(g: &Mat, coefficients: &[f64]) -> Result<f64> {
    let sigma = singular_values(g)?;
    let mut acc = 0.0;
    let mut partial = 0.0;
    for (j, c) in coefficients.iter().enumerate() {
        partial += sigma[j].ln();
        acc += c * partial;
    }
    Ok(acc)
}

/// Truncated series `Σ_{y ∈ ℤᵏ, |y|_∞ ≤ N} e^{−sφ(κ(exp Σ yᵢYᵢ))}` next to
/// the integral of `R^{−s}` with `R = ∏ P_j^{c_j/2}` over the matching
/// cube, for each `s`. `coefficients[j−1]` is the weight of `ω_j`.
pub fn series_integral_sandwich(
    basis: &[Mat],
    coefficients: &[f64],
    lattice_radius: u32,
    s_grid: &[f64],
    opts: &ShellOptions,
) -> Result<SandwichTable> {
    let d = basis
        .first()
        .map(|b| b.nrows())
        .ok_or_else(|| LabError::Config("unipotent basis is empty".into()))?;
    if coefficients.is_empty() || coefficients.len() >= d {
        return Err(LabError::DimensionMismatch(format!(
            "{} functional coefficients for rank {}",
            coefficients.len(),
            d - 1
        )));
    }
    let k = basis.len();
    let mut factors = Vec::new();
    for (i, &c) in coefficients.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let w = unipotent_weight_polynomials(d, basis, i + 1)?;
        factors.push(RationalFactor {
            numerator: w.polynomial,
            denominator: MultiPoly::constant(k, 1.0),
            exponent: 0.5 * c,
        });
    }
    if factors.is_empty() {
        return Err(LabError::Config("functional is zero".into()));
    }
    let r = RationalProduct::new(factors)?;

    let n = lattice_radius as i64;
    let side = (2 * n + 1) as usize;
    let mut phis = Vec::with_capacity(side.pow(k as u32));
    let mut y = vec![-n; k];
    loop {
        let mut m = Mat::zeros(d, d);
        for (b, &yi) in basis.iter().zip(&y) {
            m += b * yi as f64;
        }
        phis.push(phi_of_kappa(&nilpotent_exp(&m), coefficients)?);
        let mut i = 0;
        loop {
            if i == k {
                break;
            }
            y[i] += 1;
            if y[i] <= n {
                break;
            }
            y[i] = -n;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let integral_opts = ShellOptions {
        r_max: lattice_radius as f64 + 0.5,
        ..*opts
    };
    let mut rows = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let series: f64 = phis.iter().map(|p| (-s * p).exp()).sum();
        let est = shell_integrals(&r, s, &integral_opts)?;
        let integral = *est.values.last().expect("nonempty shells");
        rows.push(SandwichRow {
            s,
            series,
            integral,
            ratio: series / integral,
        });
    }
    let a_hat = rows.iter().map(|r| r.ratio.max(1.0 / r.ratio)).fold(1.0, f64::max);
    Ok(SandwichTable {
        lattice_radius,
        rows,
        a_hat,
    })
}

/// Strictly upper triangular elementary matrix `E_{rc}`.
pub fn elementary(d: usize, r: usize, c: usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    m[(r, c)] = 1.0;
    m
}

#[derive(Clone, Copy, Debug)]
pub struct LogBoundOptions {
    pub fit_radius: f64,
    pub test_radius: f64,
    /// Log-spaced radii per decade, starting at 0.1.
    pub radii_per_decade: usize,
    /// Seeded Gaussian directions on top of the coordinate axes.
    pub random_directions: usize,
    pub seed: u64,
}

impl Default for LogBoundOptions {
    fn default() -> Self {
        Self {
            fit_radius: 10.0,
            test_radius: 1e4,
            radii_per_decade: 10,
            random_directions: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LogBoundReport {
    /// `C` in `‖κ(e^Y)‖ ≤ C + C log(1 + ‖Y‖)`.
    pub constant: f64,
    /// Envelope `intercept + slope · log(1 + ‖Y‖)` fitted on the small radii.
    pub slope: f64,
    pub intercept: f64,
    pub fit_samples: usize,
    pub tested: usize,
    /// `(‖Y‖, ‖κ(e^Y)‖)` of samples above the bound.
    pub violations: Vec<(f64, f64)>,
    /// Largest `‖κ‖ − bound` over the test samples.
    pub worst_excess: f64,
    /// Per radius: `(‖Y‖, max ‖κ(e^Y)‖)`.
    pub shell_maxima: Vec<(f64, f64)>,
}

/// Fit `C` with `‖κ(exp Y)‖ ≤ C + C log(1 + ‖Y‖)` on `‖Y‖_F ≤ fit_radius`
/// and test it up to `test_radius`, for `Y` in the span of a nilpotent
/// basis.
///
/// The fit is an envelope in `L = log(1 + ‖Y‖)`: the slope is the OLS slope
/// of the shell maxima over the upper half (in `L`) of the fit range, the
/// intercept is the smallest that puts every fit sample below the line,
/// and `C = max(slope, intercept)`.
pub fn unipotent_log_bound(basis: &[Mat], opts: &LogBoundOptions) -> Result<LogBoundReport> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    let d = basis.first().ok_or(LabError::EmptySelection)?.nrows();
    check_nilpotent(d, basis)?;
    if !(opts.fit_radius > 0.1 && opts.test_radius >= opts.fit_radius) {
        return Err(LabError::Config("need 0.1 < fit_radius ≤ test_radius".into()));
    }
    let k = basis.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; k];
            v[i] = sign;
            dirs.push(v);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_directions {
        dirs.push((0..k).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    let unit: Vec<Mat> = dirs
        .iter()
        .filter_map(|c| {
            let y = basis.iter().zip(c).fold(Mat::zeros(d, d), |acc, (b, x)| acc + b * *x);
            let n = y.norm();
            (n > 0.0).then(|| y / n)
        })
        .collect();
    let per = opts.radii_per_decade.max(1) as f64;
    let steps = ((opts.test_radius.log10() + 1.0) * per).round() as i64;
    let radii: Vec<f64> = (0..=steps).map(|i| 10f64.powf(i as f64 / per - 1.0)).collect();
    let shell_maxima: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let m = unit
                .iter()
                .map(|u| {
                    let y = u * r;
                    let g = GroupElement::from_parts(vec![nilpotent_exp(&y)], vec![nilpotent_exp(&-y)], vec![false]);
                    cartan_projection(&g).map(|c| c.norm())
                })
                .try_fold(0.0f64, |acc, x| x.map(|x| acc.max(x)))?;
            Ok((r, m))
        })
        .collect::<Result<_>>()?;
    let fit: Vec<(f64, f64)> = shell_maxima
        .iter()
        .filter(|(r, _)| *r <= opts.fit_radius * (1.0 + 1e-12))
        .map(|&(r, m)| ((1.0 + r).ln(), m))
        .collect();
    let l_hi = (1.0 + opts.fit_radius).ln();
    let upper: Vec<(f64, f64)> = fit.iter().copied().filter(|(l, _)| *l >= 0.5 * l_hi).collect();
    let xs: Vec<f64> = upper.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = upper.iter().map(|p| p.1).collect();
    let slope = linear_fit(&xs, &ys)
        .ok_or_else(|| LabError::InsufficientData("too few radii in the fit range".into()))?
        .slope
        .max(0.0);
    let intercept = fit.iter().map(|(l, m)| m - slope * l).fold(f64::NEG_INFINITY, f64::max);
    let constant = slope.max(intercept).max(0.0);
    let mut violations = Vec::new();
    let mut worst_excess = f64::NEG_INFINITY;
    for &(r, m) in &shell_maxima {
        let excess = m - constant * (1.0 + (1.0 + r).ln());
        worst_excess = worst_excess.max(excess);
        if excess > 0.0 {
            violations.push((r, m));
        }
    }
    Ok(LogBoundReport {
        constant,
        slope,
        intercept,
        fit_samples: fit.len() * unit.len(),
        tested: shell_maxima.len() * unit.len(),
        violations,
        worst_excess,
        shell_maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::exterior_power;

    fn heisenberg() -> Vec<Mat> {
        vec![elementary(3, 0, 1), elementary(3, 1, 2), elementary(3, 0, 2)]
    }

    #[test]
    fn two_by_two_weight() {
        let w = unipotent_weight_polynomials(2, &[elementary(2, 0, 1)], 1).unwrap();
        for t in [-3.0, 0.0, 0.5, 7.0] {
            assert!((w.polynomial.eval(&[t]) - (2.0 + t * t)).abs() < 1e-12);
        }
        assert!((w.constant - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.polynomial.eval(&[0.0]), 2.0);
    }

    #[test]
    fn heisenberg_against_matrix_exponential() {
        for j in 1..=2 {
            let w = unipotent_weight_polynomials(3, &heisenberg(), j).unwrap();
            assert_eq!(w.polynomial.degree(), 4);
            assert_eq!(w.polynomial.eval(&[0.0, 0.0, 0.0]), 3.0);
            for y in [[1.0, 1.0, 1.0], [0.3, -2.0, 1.5]] {
                let m = heisenberg().iter().zip(&y).fold(Mat::zeros(3, 3), |acc, (b, c)| acc + b * *c);
                let g = exterior_power(&nilpotent_exp(&m), j);
                let direct = g.norm_squared();
                assert!((w.polynomial.eval(&y) - direct).abs() < 1e-10 * direct);
                let sigma1 = singular_values(&g).unwrap()[0];
                let root = direct.sqrt();
                assert!(root / w.constant <= sigma1 + 1e-12 && sigma1 <= root + 1e-12);
            }
        }
    }

    #[test]
    fn non_nilpotent_basis() {
        let mut m = elementary(2, 0, 1);
        m[(1, 0)] = 1.0;
        assert!(matches!(unipotent_weight_polynomials(2, &[m], 1), Err(LabError::NotNilpotent)));
    }

    #[test]
    fn one_dimensional_sandwich() {
        let s_grid = [0.6, 0.8, 1.0, 1.2, 1.5];
        let t = series_integral_sandwich(&[elementary(2, 0, 1)], &[1.0], 200, &s_grid, &ShellOptions::default()).unwrap();
        assert!(t.a_hat < 3.0, "{t:?}");
        // large s: the identity term dominates the series
        let t = series_integral_sandwich(&[elementary(2, 0, 1)], &[1.0], 20, &[60.0], &ShellOptions::default()).unwrap();
        assert!((t.rows[0].series - 1.0).abs() < 1e-6);
    }
    #[test]
    fn heisenberg_log_bound() {
        let basis = vec![elementary(3, 0, 1), elementary(3, 1, 2), elementary(3, 0, 2)];
        let r = unipotent_log_bound(&basis, &LogBoundOptions::default()).unwrap();
        assert!(r.violations.is_empty(), "{r:?}");
        // ‖κ‖ ≈ 2√2 log‖Y‖ at large ‖Y‖
        let (l1, m1) = r.shell_maxima[r.shell_maxima.len() - 11];
        let (l2, m2) = *r.shell_maxima.last().unwrap();
        let tail = (m2 - m1) / (l2.ln() - l1.ln());
        assert!((tail - 2.0 * 2f64.sqrt()).abs() < 0.05, "{tail}");
    }
}
