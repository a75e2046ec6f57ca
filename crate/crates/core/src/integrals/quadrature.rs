//! Shell integrals of `R^{−s}`, convergence classification and exponent
//! bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::poly::RationalProduct;
use crate::error::{LabError, Result};
use crate::poincare::{ExponentEstimate, SLOPE_THRESHOLD};
use crate::stats::linear_fit;

/// Largest supported integration dimension.
pub const MAX_DIMENSION: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Classification {
    Convergent,
    Divergent,
    AtCritical,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Convergent => "CONVERGENT",
            Classification::Divergent => "DIVERGENT",
            Classification::AtCritical => "AT_CRITICAL",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellOptions {
    /// Outer radius (sup-norm) of the last shell.
    pub r_max: f64,
    pub shells_per_decade: usize,
    /// Shells used for the tail slopes.
    pub tail_shells: usize,
    pub seed: u64,
    /// Monte Carlo points per shell for `n ≥ 4`.
    pub samples_per_shell: usize,
}

impl Default for ShellOptions {
    fn default() -> Self {
        Self {
            r_max: 1e4,
            shells_per_decade: 10,
            tail_shells: 10,
            seed: 0,
            samples_per_shell: 1 << 15,
        }
    }
}

impl ShellOptions {
    /// Outer radii `r_0 = 1 < r_1 < … < r_K = r_max`, log-spaced.
    pub fn radii(&self) -> Vec<f64> {
        let k = ((self.r_max.log10() * self.shells_per_decade as f64).ceil() as usize).max(1);
        (0..=k).map(|i| self.r_max.powf(i as f64 / k as f64)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralEstimate {
    pub s: f64,
    /// Outer sup-norm radius of each cube `[−r_k, r_k]ⁿ`.
    pub radii: Vec<f64>,
    /// `I_k = ∫_{[−r_k, r_k]ⁿ} R^{−s}`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub increment_slope: f64,
    pub cumulative_slope: f64,
    pub classification: Classification,
    pub method: &'static str,
}

/// One-dimensional graded cells `(midpoint, width, shell)` on `[−r_max, r_max]`:
/// `per_unit` uniform cells on `[0, 1]`, `per_shell` geometric cells in each
/// shell, mirrored.
fn graded_cells(radii: &[f64], per_unit: usize, per_shell: usize) -> Vec<(f64, f64, usize)> {
    let mut half = Vec::new();
    for i in 0..per_unit {
        let a = i as f64 / per_unit as f64;
        let b = (i + 1) as f64 / per_unit as f64;
        half.push((0.5 * (a + b), b - a, 0));
    }
    for k in 1..radii.len() {
        let ratio = (radii[k] / radii[k - 1]).powf(1.0 / per_shell as f64);
        let mut a = radii[k - 1];
        for j in 0..per_shell {
            let b = if j + 1 == per_shell { radii[k] } else { a * ratio };
            half.push((0.5 * (a + b), b - a, k));
            a = b;
        }
    }
    let mut cells: Vec<_> = half.iter().rev().map(|&(m, w, k)| (-m, w, k)).collect();
    cells.extend(half);
    cells
}

fn grid_resolution(n: usize) -> (usize, usize) {
    match n {
        1 => (200, 24),
        2 => (40, 6),
        _ => (10, 2),
    }
}

fn integrand(r: &RationalProduct, x: &[f64], s: f64) -> Result<f64> {
    Ok((-s * r.log_eval(x)?).exp())
}

/// Per-shell increments by the midpoint rule on a graded product grid.
fn quadrature_increments(r: &RationalProduct, s: f64, radii: &[f64], per_unit: usize, per_shell: usize) -> Result<Vec<f64>> {
    let n = r.dimension();
    let cells = graded_cells(radii, per_unit, per_shell);
    let shells = radii.len();
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(m0, w0, k0)| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; shells];
            let mut idx = vec![0usize; n - 1];
            let mut x = vec![0.0; n];
            x[0] = m0;
            loop {
                let mut vol = w0;
                let mut k = k0;
                for (d, &i) in idx.iter().enumerate() {
                    let (m, w, ki) = cells[i];
                    x[d + 1] = m;
                    vol *= w;
                    k = k.max(ki);
                }
                acc[k] += vol * integrand(r, &x, s)?;
                // odometer over the remaining coordinates
                let mut d = 0;
                loop {
                    if d == idx.len() {
                        return Ok(acc);
                    }
                    idx[d] += 1;
                    if idx[d] < cells.len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; shells];
    for row in rows {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    Ok(total)
}

/// Points of `[−b, b]ⁿ` outside `[−a, a]ⁿ`, uniformly.
fn sample_shell(rng: &mut ChaCha8Rng, a: f64, b: f64, x: &mut [f64]) {
    loop {
        for xi in x.iter_mut() {
            *xi = rng.random_range(-b..b);
        }
        if x.iter().any(|v| v.abs() > a) {
            return;
        }
    }
}

const SHARD: usize = 1024;

/// Per-shell increments and standard errors by Monte Carlo. Every shard
/// has its own stream keyed by `(seed, shell, shard)`.
fn monte_carlo_increments(r: &RationalProduct, s: f64, radii: &[f64], opts: &ShellOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = r.dimension();
    let shards = opts.samples_per_shell.div_ceil(SHARD).max(1);
    let jobs: Vec<(usize, usize)> = (0..radii.len()).flat_map(|k| (0..shards).map(move |j| (k, j))).collect();
    let sums: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(k, j)| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(((k as u64) << 32) | j as u64);
            let inner = if k == 0 { 0.0 } else { radii[k - 1] };
            let mut x = vec![0.0; n];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..SHARD {
                sample_shell(&mut rng, inner, radii[k], &mut x);
                let v = integrand(r, &x, s)?;
                s1 += v;
                s2 += v * v;
            }
            Ok((s1, s2))
        })
        .collect::<Result<_>>()?;
    let m = (shards * SHARD) as f64;
    let mut inc = Vec::with_capacity(radii.len());
    let mut err = Vec::with_capacity(radii.len());
    for k in 0..radii.len() {
        let (s1, s2) = sums[k * shards..(k + 1) * shards]
            .iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let inner = if k == 0 { 0.0 } else { radii[k - 1] };
        let vol = (2.0 * radii[k]).powi(n as i32) - (2.0 * inner).powi(n as i32);
        let mean = s1 / m;
        let var = (s2 / m - mean * mean).max(0.0);
        inc.push(vol * mean);
        err.push(vol * (var / m).sqrt());
    }
    Ok((inc, err))
}

fn tail_slope(radii: &[f64], y: &[f64], tail: usize) -> f64 {
    let start = radii.len().saturating_sub(tail.max(2));
    let (x, v): (Vec<f64>, Vec<f64>) = (start..radii.len())
        .filter(|&k| y[k] > 0.0)
        .map(|k| (radii[k].ln(), y[k].ln()))
        .unzip();
    linear_fit(&x, &v).map_or(0.0, |f| f.slope)
}

/// `I_k` on nested cubes `[−r_k, r_k]ⁿ` with the convergence verdict read
/// from the tail: increments decaying faster than `r^{−0.02}` give
/// CONVERGENT, otherwise cumulative growth faster than `r^{0.02}` gives
/// DIVERGENT, and anything in between is AT_CRITICAL.
pub fn shell_integrals(r: &RationalProduct, s: f64, opts: &ShellOptions) -> Result<IntegralEstimate> {
    let n = r.dimension();
    if n > MAX_DIMENSION {
        return Err(LabError::DimensionTooLarge(n));
    }
    if !(s >= 0.0) {
        return Err(LabError::Config("exponent s must be nonnegative".into()));
    }
    let radii = opts.radii();
    let (inc, inc_err, method) = if n <= 3 {
        let (pu, ps) = grid_resolution(n);
        let fine = quadrature_increments(r, s, &radii, pu, ps)?;
        let coarse = quadrature_increments(r, s, &radii, pu.div_ceil(2), ps.div_ceil(2))?;
        // midpoint rule is second order: fine error ≈ (coarse − fine)/3
        let err = fine.iter().zip(&coarse).map(|(f, c)| (c - f).abs() / 3.0).collect();
        (fine, err, "graded midpoint")
    } else {
        let (i, e) = monte_carlo_increments(r, s, &radii, opts)?;
        (i, e, "stratified Monte Carlo")
    };
    let mut values = Vec::with_capacity(inc.len());
    let mut errors = Vec::with_capacity(inc.len());
    let (mut acc, mut acc_err2) = (0.0, 0.0);
    for (v, e) in inc.iter().zip(&inc_err) {
        acc += v;
        acc_err2 += e * e;
        values.push(acc);
        errors.push(acc_err2.sqrt());
    }
    let increment_slope = tail_slope(&radii, &inc, opts.tail_shells);
    let cumulative_slope = tail_slope(&radii, &values, opts.tail_shells);
    let classification = if increment_slope < -SLOPE_THRESHOLD {
        Classification::Convergent
    } else if cumulative_slope > SLOPE_THRESHOLD {
        Classification::Divergent
    } else {
        Classification::AtCritical
    };
    Ok(IntegralEstimate {
        s,
        radii,
        values,
        errors,
        increment_slope,
        cumulative_slope,
        classification,
        method,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PropernessReport {
    pub radii: Vec<f64>,
    pub sphere_minima: Vec<f64>,
    pub proper: bool,
    /// Sample points where `R` is not positive or not defined.
    pub violations: Vec<(Vec<f64>, String)>,
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    pub r_max: f64,
    pub radii: usize,
    /// Random directions added to the axes and diagonals.
    pub random_directions: usize,
    /// Required ratio between the last and first sphere minimum.
    pub growth_factor: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            r_max: 1e4,
            radii: 25,
            random_directions: 256,
            growth_factor: 10.0,
            seed: 0,
        }
    }
}

const MAX_VIOLATIONS: usize = 20;

/// Axis, diagonal and seeded random unit directions.
fn directions(n: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = sign;
            out.push(v);
        }
    }
    if n >= 2 {
        for mask in 0..(1u32 << n) {
            let v: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 } / (n as f64).sqrt())
                .collect();
            out.push(v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

fn probe_radii(opts: &ProbeOptions) -> Vec<f64> {
    (0..opts.radii)
        .map(|i| opts.r_max.powf(i as f64 / (opts.radii - 1) as f64))
        .collect()
}

/// Minimum of `R` over sampled Euclidean spheres. PROPER when no sample is
/// nonpositive, the minima are nondecreasing over the outer half of the
/// radii, and the last minimum exceeds the first by `growth_factor`.
pub fn positivity_properness_probe(r: &RationalProduct, opts: &ProbeOptions) -> PropernessReport {
    let n = r.dimension();
    let radii = probe_radii(opts);
    let dirs = directions(n, opts.random_directions, opts.seed);
    let mut violations = Vec::new();
    let mut minima = Vec::with_capacity(radii.len());
    for &rad in &radii {
        let mut m = f64::INFINITY;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * rad).collect();
            match r.eval(&x) {
                Ok(v) if v > 0.0 && v.is_finite() => m = m.min(v),
                Ok(v) => {
                    if violations.len() < MAX_VIOLATIONS {
                        violations.push((x, format!("R = {v}")));
                    }
                }
                Err(e) => {
                    if violations.len() < MAX_VIOLATIONS {
                        violations.push((x, e.to_string()));
                    }
                }
            }
        }
        minima.push(m);
    }
    let half = minima.len() / 2;
    let monotone = minima[half..].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    let first = minima[0];
    let last = minima[minima.len() - 1];
    let proper = violations.is_empty() && monotone && first > 0.0 && last >= opts.growth_factor * first;
    PropernessReport {
        radii,
        sphere_minima: minima,
        proper,
        violations,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub epsilon: f64,
    pub c: f64,
    /// Points of an independent sample with `R(x) < c(1+‖x‖)^ε`.
    pub violations: usize,
    pub checked: usize,
}

/// `R(x) ≥ c(1+‖x‖)^ε`: `ε` is the smallest slope of `log min_{|x|=r} R`
/// against `log(1+r)` between consecutive outer radii, `c` the largest
/// constant valid on the fitting sample. A second sample checks the bound.
pub fn growth_exponent_fit(r: &RationalProduct, opts: &ProbeOptions) -> Result<GrowthFit> {
    let report = positivity_properness_probe(r, opts);
    if !report.proper {
        return Err(LabError::NotProper);
    }
    let n = r.dimension();
    let half = report.radii.len() / 2;
    let epsilon = (half..report.radii.len() - 1)
        .map(|k| {
            (report.sphere_minima[k + 1].ln() - report.sphere_minima[k].ln())
                / ((1.0 + report.radii[k + 1]).ln() - (1.0 + report.radii[k]).ln())
        })
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let bound = |x: &[f64]| (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()).powf(epsilon);
    let mut c = f64::INFINITY;
    let mut points = vec![vec![0.0; n]];
    for d in directions(n, opts.random_directions, opts.seed) {
        for &rad in &report.radii {
            points.push(d.iter().map(|v| v * rad).collect());
        }
    }
    for x in &points {
        c = c.min(r.eval(x)? / bound(x));
    }
    let check_opts = ProbeOptions {
        seed: opts.seed.wrapping_add(1),
        radii: 2 * opts.radii + 1,
        ..*opts
    };
    let mut violations = 0;
    let mut checked = 0;
    for d in directions(n, opts.random_directions, check_opts.seed) {
        for rad in probe_radii(&check_opts) {
            let x: Vec<f64> = d.iter().map(|v| v * rad).collect();
            checked += 1;
            if r.eval(&x)? < c * bound(&x) * (1.0 - 1e-9) {
                violations += 1;
            }
        }
    }
    Ok(GrowthFit {
        epsilon,
        c,
        violations,
        checked,
    })
}

/// Default bisection steps.
pub const BISECTION_STEPS: usize = 12;

/// Bisection on the shell classifier: CONVERGENT moves the upper end
/// down, anything else moves the lower end up. Returns `(estimate,
/// bracket half-width + classifier resolution)`; the resolution is
/// `0.02/p` with `p = −d(increment slope)/ds` measured at the estimate.
fn bisect_exponent(r: &RationalProduct, opts: &ShellOptions, steps: usize) -> Result<(f64, f64)> {
    let converges = |s: f64| -> Result<bool> {
        Ok(shell_integrals(r, s, opts)?.classification == Classification::Convergent)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !converges(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1024.0 {
            return Err(LabError::ClassifierAmbiguous("no convergent exponent below 1024".into()));
        }
    }
    let initial = hi - lo;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if steps > 0 && !(hi - lo < initial) {
        return Err(LabError::ClassifierAmbiguous("bracket did not shrink".into()));
    }
    let mid = 0.5 * (lo + hi);
    let h = 0.05;
    let a = shell_integrals(r, (mid - h).max(0.0), opts)?.increment_slope;
    let b = shell_integrals(r, mid + h, opts)?.increment_slope;
    let p = (a - b) / (mid + h - (mid - h).max(0.0));
    let resolution = if p > 0.0 { SLOPE_THRESHOLD / p } else { SLOPE_THRESHOLD };
    Ok((mid, 0.5 * (hi - lo) + resolution))
}

/// Below this `r_max` no truncation correction is attempted.
const EXTRAPOLATION_MIN_RADIUS: f64 = 1e2;

/// Abscissa of convergence of `∫ R^{−s}`.
///
/// Slowly converging factors make the finite-cube estimate too large by
/// roughly `c/log r_max`, e.g. for `(1+x²)(1+y²)`. The bisection is run
/// at `√r_max` and `r_max` and extrapolated linearly in `1/log r`; the
/// error bar adds the gap between the two runs.
pub fn integral_critical_exponent(r: &RationalProduct, opts: &ShellOptions, steps: usize) -> Result<ExponentEstimate> {
    if r.dimension() > MAX_DIMENSION {
        return Err(LabError::DimensionTooLarge(r.dimension()));
    }
    let probe = positivity_properness_probe(r, &ProbeOptions { seed: opts.seed, ..Default::default() });
    if !probe.proper {
        return Err(LabError::NotProper);
    }
    let (fine, fine_err) = bisect_exponent(r, opts, steps)?;
    let (value, stderr, method) = if opts.r_max >= EXTRAPOLATION_MIN_RADIUS {
        let half = ShellOptions { r_max: opts.r_max.sqrt(), ..*opts };
        let (coarse, _) = bisect_exponent(r, &half, steps)?;
        (2.0 * fine - coarse, fine_err + (fine - coarse).abs(), "shell bisection, extrapolated in 1/log r")
    } else {
        (fine, fine_err, "shell bisection")
    };
    let radii = opts.radii();
    Ok(ExponentEstimate {
        value,
        stderr,
        window: (radii[0], *radii.last().expect("nonempty radii")),
        sample_count: radii.len(),
        method: method.into(),
    })
}
