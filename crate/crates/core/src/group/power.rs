//! Powers of a single element, exact and overflow-safe.

use super::ball::{DD_THRESHOLD, OVERFLOW_THRESHOLD};
use crate::error::{LabError, Result};
use crate::lie::{CartanVector, GroupElement};
use crate::linalg::{exterior_power, from_row_major, matmul_dd, to_row_major, top_singular, DoubleDouble, Mat};

/// `g¹, …, g^N` by iterated right multiplication; once entries pass
/// [`DD_THRESHOLD`] the iteration continues in double-double.
pub fn power_sequence(g: &GroupElement, n: usize) -> Result<Vec<GroupElement>> {
    if n == 0 {
        return Err(LabError::Config("power_sequence needs N ≥ 1".into()));
    }
    let dims = g.dims();
    let mut out = Vec::with_capacity(n);
    let mut cur = g.clone();
    let mut dd: Option<(Vec<Vec<DoubleDouble>>, Vec<Vec<DoubleDouble>>)> = None;
    for k in 1..=n {
        if k > 1 {
            if dd.is_none() && cur.max_abs_entry() > DD_THRESHOLD {
                dd = Some((
                    cur.blocks().iter().map(to_dd).collect(),
                    cur.inverse_blocks().iter().map(to_dd).collect(),
                ));
            }
            cur = match dd.as_mut() {
                Some((fwd, inv)) => {
                    for (b, &d) in dims.iter().enumerate() {
                        fwd[b] = matmul_dd(&fwd[b], &to_dd(&g.blocks()[b]), d);
                        inv[b] = matmul_dd(&to_dd(&g.inverse_blocks()[b]), &inv[b], d);
                    }
                    GroupElement::from_parts(
                        fwd.iter().zip(&dims).map(|(m, &d)| from_dd(m, d)).collect(),
                        inv.iter().zip(&dims).map(|(m, &d)| from_dd(m, d)).collect(),
                        g.projective().to_vec(),
                    )
                }
                None => &cur * g,
            };
        }
        let m = cur
            .max_abs_entry()
            .max(cur.inverse().max_abs_entry());
        if !m.is_finite() || m > OVERFLOW_THRESHOLD {
            return Err(LabError::OverflowRisk(k));
        }
        out.push(cur.clone());
    }
    Ok(out)
}

fn to_dd(m: &Mat) -> Vec<DoubleDouble> {
    to_row_major(m).into_iter().map(DoubleDouble::new).collect()
}

fn from_dd(m: &[DoubleDouble], d: usize) -> Mat {
    let v: Vec<f64> = m.iter().map(|x| x.to_f64()).collect();
    from_row_major(d, &v)
}

/// `κ(gⁿ)` for `n = 1..=N` without forming `gⁿ`.
///
/// `ω_j(κ(gⁿ)) = log σ₁((∧ʲg)ⁿ)`, so each exterior power is iterated with
/// renormalization and an accumulated log scale. No overflow for any `N`.
pub fn cartan_power_sequence(g: &GroupElement, n: usize) -> Result<Vec<CartanVector>> {
    let dims = g.dims();
    // weights[factor][j-1][k] = ω_j(κ(g^{k+1}))
    let mut weights: Vec<Vec<Vec<f64>>> = Vec::with_capacity(dims.len());
    for (b, &d) in dims.iter().enumerate() {
        let mut per_j = Vec::with_capacity(d.saturating_sub(1));
        for j in 1..d {
            let w = exterior_power(&g.blocks()[b], j);
            let mut cur = w.clone();
            let mut log_scale = 0.0;
            let mut seq = Vec::with_capacity(n);
            for k in 1..=n {
                if k > 1 {
                    cur = &cur * &w;
                }
                let s = cur.amax();
                if !s.is_finite() || s == 0.0 {
                    return Err(LabError::OverflowRisk(k));
                }
                if !(1e-100..=1e100).contains(&s) {
                    cur /= s;
                    log_scale += s.ln();
                }
                let (sigma, _, _) = top_singular(&cur)?;
                seq.push(log_scale + sigma.ln());
            }
            per_j.push(seq);
        }
        weights.push(per_j);
    }
    Ok((0..n)
        .map(|k| {
            CartanVector::new(
                dims.iter()
                    .enumerate()
                    .map(|(b, &d)| {
                        // a_j = ω_j − ω_{j−1}, with ω_0 = ω_d = 0
                        (1..=d)
                            .map(|j| {
                                let wj = if j < d { weights[b][j - 1][k] } else { 0.0 };
                                let wprev = if j > 1 { weights[b][j - 2][k] } else { 0.0 };
                                wj - wprev
                            })
                            .collect()
                    })
                    .collect(),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::cartan_projection;

    #[test]
    fn unipotent_and_diagonal_powers() {
        let u = GroupElement::from_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let p = power_sequence(&u, 5).unwrap();
        assert_eq!(p[4].blocks()[0], Mat::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 1.0]));
        let h = GroupElement::from_rows(2, &[2.0, 0.0, 0.0, 0.5]).unwrap();
        let p = power_sequence(&h, 10).unwrap();
        assert_eq!(p[9].blocks()[0], Mat::from_row_slice(2, 2, &[1024.0, 0.0, 0.0, 1.0 / 1024.0]));
    }

    #[test]
    fn powers_times_inverses_are_identity() {
        let g = GroupElement::normalized(
            vec![Mat::from_row_slice(3, 3, &[1.2, 0.4, 0.1, 0.3, 0.9, 0.2, 0.0, 0.5, 1.1])],
            vec![false],
        )
        .unwrap();
        for gn in power_sequence(&g, 30).unwrap() {
            let b = &gn.blocks()[0];
            let cond = b.norm() * gn.inverse_blocks()[0].norm();
            assert!((b * &gn.inverse_blocks()[0] - Mat::identity(3, 3)).amax() < 1e-6 * cond);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let g = GroupElement::from_rows(2, &[1e10, 0.0, 0.0, 1e-10]).unwrap();
        assert!(matches!(power_sequence(&g, 40), Err(LabError::OverflowRisk(_))));
        // the scaled iteration has no such limit
        let k = cartan_power_sequence(&g, 40).unwrap();
        assert!((k[39].factor(0)[0] - 40.0 * 1e10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn scaled_iteration_matches_direct_cartan() {
        let g = GroupElement::normalized(
            vec![Mat::from_row_slice(3, 3, &[1.2, 0.4, 0.1, 0.3, 0.9, 0.2, 0.0, 0.5, 1.1])],
            vec![false],
        )
        .unwrap();
        let direct = power_sequence(&g, 20).unwrap();
        let scaled = cartan_power_sequence(&g, 20).unwrap();
        for (a, b) in direct.iter().zip(&scaled) {
            assert!(cartan_projection(a).unwrap().sub(b).norm() < 1e-9);
        }
    }
}
