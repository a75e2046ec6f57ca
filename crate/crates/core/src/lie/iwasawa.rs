//! Iwasawa cocycle `B(g, F)` from a positive-diagonal QR factorization.

use super::cartan::{partial_projection, CartanVector, RootSubset};
use super::element::GroupElement;
use super::flag::Flag;
use crate::linalg::qr_positive;

/// `B(g, F)`: per factor, the logs of the diagonal of `R` in `g·k = Q·R`,
/// where `k` is the frame of `F`.
pub fn iwasawa_cocycle(g: &GroupElement, f: &Flag) -> CartanVector {
    CartanVector::new(
        g.blocks()
            .iter()
            .zip(f.frames())
            .map(|(b, k)| {
                let (_, diag) = qr_positive(&(b * k));
                diag.iter().map(|x| x.ln()).collect()
            })
            .collect(),
    )
}

/// `B_θ(g, F) = p_θ(B(g, F))`.
pub fn partial_iwasawa(g: &GroupElement, f: &Flag, theta: &RootSubset) -> CartanVector {
    partial_projection(&iwasawa_cocycle(g, f), theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::lie::cartan::fundamental_weight;

    fn sample() -> (GroupElement, GroupElement, Flag) {
        let g = GroupElement::normalized(
            vec![Mat::from_row_slice(3, 3, &[2.0, 1.0, 0.3, -0.5, 1.2, 0.7, 0.1, 0.4, 1.5])],
            vec![false],
        )
        .unwrap();
        let h = GroupElement::normalized(
            vec![Mat::from_row_slice(3, 3, &[0.9, -1.1, 0.2, 0.3, 0.8, -0.6, 1.4, 0.2, 1.0])],
            vec![false],
        )
        .unwrap();
        let f = Flag::new(
            vec![Mat::from_row_slice(3, 3, &[0.3, 1.0, 0.2, 1.0, -0.4, 0.5, 0.1, 0.6, 1.0])],
            RootSubset::full(&[3]),
        )
        .unwrap();
        (g, h, f)
    }

    #[test]
    fn diagonal_on_standard_flag() {
        let g = GroupElement::from_rows(3, &[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        let b = iwasawa_cocycle(&g, &Flag::standard(RootSubset::full(&[3])));
        let l4 = 4f64.ln();
        for (x, y) in b.coords().iter().zip([l4, 0.0, -l4]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_elements_have_zero_cocycle() {
        let t: f64 = 0.7;
        let k = GroupElement::from_rows(3, &[t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0]).unwrap();
        let (_, _, f) = sample();
        assert!(iwasawa_cocycle(&k, &f).norm() < 1e-12);
    }

    #[test]
    fn cocycle_identity() {
        let (g, h, f) = sample();
        let lhs = iwasawa_cocycle(&(&g * &h), &f);
        let rhs = iwasawa_cocycle(&g, &f.act(&h)).add(&iwasawa_cocycle(&h, &f));
        assert!(lhs.sub(&rhs).norm() < 1e-10);
    }

    #[test]
    fn first_weight_is_log_norm_of_image_line() {
        let (g, _, f) = sample();
        let v = f.frames()[0].column(0).into_owned();
        let direct = (&g.blocks()[0] * v).norm().ln();
        let b = iwasawa_cocycle(&g, &f);
        assert!((fundamental_weight(&b, 0, 1).unwrap() - direct).abs() < 1e-12);
    }
}
