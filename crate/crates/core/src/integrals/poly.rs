//! Sparse real polynomials and products of powers of rational functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Polynomial in `n` variables, stored as sorted `(exponents, coefficient)`
/// terms with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoly", into = "RawPoly")]
pub struct MultiPoly {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTerm {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPoly {
    pub dimension: usize,
    pub terms: Vec<RawTerm>,
}

impl TryFrom<RawPoly> for MultiPoly {
    type Error = LabError;

    fn try_from(r: RawPoly) -> Result<Self> {
        MultiPoly::new(r.dimension, r.terms.into_iter().map(|t| (t.exponents, t.coefficient)))
    }
}

impl From<MultiPoly> for RawPoly {
    fn from(p: MultiPoly) -> Self {
        RawPoly {
            dimension: p.n,
            terms: p
                .terms
                .into_iter()
                .map(|(exponents, coefficient)| RawTerm { exponents, coefficient })
                .collect(),
        }
    }
}

impl MultiPoly {
    /// Sums repeated exponent vectors and drops zero coefficients.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(LabError::DimensionMismatch(format!(
                    "exponent vector of length {} in {n} variables",
                    e.len()
                )));
            }
            if !c.is_finite() {
                return Err(LabError::Config("non-finite coefficient".into()));
            }
            *map.entry(e).or_insert(0.0) += c;
        }
        Ok(Self::from_map(n, map))
    }

    fn from_map(n: usize, map: BTreeMap<Vec<u32>, f64>) -> Self {
        Self {
            n,
            terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_map(n, BTreeMap::from([(vec![0; n], c)]))
    }

    /// The coordinate `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::from_map(n, BTreeMap::from([(e, 1.0)]))
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = self.terms.iter().cloned().collect();
        for (e, c) in &other.terms {
            *map.entry(e.clone()).or_insert(0.0) += c;
        }
        Self::from_map(self.n, map)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_map(self.n, self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *map.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        Self::from_map(self.n, map)
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn pruned(&self, tol: f64) -> Self {
        let m = self.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(_, c)| c.abs() > tol * m).cloned().collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k as i32) })
            })
            .sum()
    }
}

/// `f_j^{ℓ_j}/g_j^{ℓ_j}` factor of a [`RationalProduct`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFactor {
    pub numerator: MultiPoly,
    pub denominator: MultiPoly,
    pub exponent: f64,
}

/// `R = ∏ (f_j/g_j)^{ℓ_j}` on `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProduct", into = "RawProduct")]
pub struct RationalProduct {
    n: usize,
    factors: Vec<RationalFactor>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProduct {
    pub factors: Vec<RationalFactor>,
}

impl TryFrom<RawProduct> for RationalProduct {
    type Error = LabError;

    fn try_from(r: RawProduct) -> Result<Self> {
        RationalProduct::new(r.factors)
    }
}

impl From<RationalProduct> for RawProduct {
    fn from(p: RationalProduct) -> Self {
        RawProduct { factors: p.factors }
    }
}

impl RationalProduct {
    /// Factors must share a dimension and have denominators positive at
    /// the origin.
    pub fn new(factors: Vec<RationalFactor>) -> Result<Self> {
        let n = factors
            .first()
            .map(|f| f.numerator.dimension())
            .ok_or_else(|| LabError::Config("rational product needs a factor".into()))?;
        for f in &factors {
            if f.numerator.dimension() != n || f.denominator.dimension() != n {
                return Err(LabError::DimensionMismatch("factors of different dimensions".into()));
            }
            if !f.exponent.is_finite() {
                return Err(LabError::Config("non-finite exponent".into()));
            }
            if !(f.denominator.eval(&vec![0.0; n]) > 0.0) {
                return Err(LabError::Config("denominator must be positive at the origin".into()));
            }
        }
        Ok(Self { n, factors })
    }

    /// Single polynomial `f^ℓ`.
    pub fn polynomial(f: MultiPoly, exponent: f64) -> Result<Self> {
        let n = f.dimension();
        Self::new(vec![RationalFactor {
            numerator: f,
            denominator: MultiPoly::constant(n, 1.0),
            exponent,
        }])
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &[RationalFactor] {
        &self.factors
    }

    /// Factor list concatenation, i.e. the pointwise product.
    pub fn times(&self, other: &Self) -> Result<Self> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        Self::new(f)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut v = 1.0;
        for f in &self.factors {
            let d = f.denominator.eval(x);
            if d == 0.0 {
                return Err(LabError::DenominatorZero);
            }
            let base = f.numerator.eval(x) / d;
            if base < 0.0 && f.exponent.fract() != 0.0 {
                return Err(LabError::NegativeBase);
            }
            v *= if f.exponent.fract() == 0.0 && f.exponent.abs() < i32::MAX as f64 {
                base.powi(f.exponent as i32)
            } else {
                base.powf(f.exponent)
            };
        }
        Ok(v)
    }

    /// `log R(x)`, requiring `R(x) > 0`.
    pub fn log_eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        let mut negative = false;
        for f in &self.factors {
            let d = f.denominator.eval(x);
            if d == 0.0 {
                return Err(LabError::DenominatorZero);
            }
            let base = f.numerator.eval(x) / d;
            if f.exponent == 0.0 {
                continue;
            }
            if base < 0.0 {
                if f.exponent.fract() != 0.0 {
                    return Err(LabError::NegativeBase);
                }
                negative ^= (f.exponent as i64) % 2 != 0;
            }
            if base == 0.0 {
                return Err(LabError::DenominatorZero);
            }
            acc += f.exponent * base.abs().ln();
        }
        if negative {
            return Err(LabError::NegativeBase);
        }
        Ok(acc)
    }
}

/// Builds a polynomial from `(coefficient, exponents)` shorthand.
pub fn poly(n: usize, terms: &[(f64, &[u32])]) -> MultiPoly {
    MultiPoly::new(n, terms.iter().map(|(c, e)| (e.to_vec(), *c))).expect("well-formed terms")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_plus_sq(n: usize, i: usize) -> MultiPoly {
        MultiPoly::constant(n, 1.0).add(&MultiPoly::var(n, i).mul(&MultiPoly::var(n, i)))
    }

    #[test]
    fn evaluation() {
        let r = RationalProduct::polynomial(one_plus_sq(1, 0), 1.0).unwrap();
        assert_eq!(r.eval(&[2.0]).unwrap(), 5.0);
        let r = RationalProduct::new(vec![
            RationalFactor { numerator: one_plus_sq(2, 0), denominator: MultiPoly::constant(2, 1.0), exponent: 1.0 },
            RationalFactor { numerator: one_plus_sq(2, 1), denominator: MultiPoly::constant(2, 1.0), exponent: -1.0 },
        ])
        .unwrap();
        assert_eq!(r.eval(&[1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn errors() {
        let x = MultiPoly::var(1, 0);
        let r = RationalProduct::new(vec![RationalFactor {
            numerator: MultiPoly::constant(1, 1.0),
            denominator: MultiPoly::constant(1, 1.0).add(&x.scale(-1.0)),
            exponent: 1.0,
        }])
        .unwrap();
        assert_eq!(r.eval(&[1.0]), Err(LabError::DenominatorZero));
        let r = RationalProduct::polynomial(x.clone(), 0.5).unwrap();
        assert_eq!(r.eval(&[-1.0]), Err(LabError::NegativeBase));
        assert_eq!(RationalProduct::polynomial(x, 2.0).unwrap().eval(&[-3.0]).unwrap(), 9.0);
    }

    #[test]
    fn canonical_terms() {
        let p = MultiPoly::new(2, vec![(vec![1, 0], 1.0), (vec![1, 0], -1.0), (vec![0, 2], 3.0)]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.degree(), 2);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<MultiPoly>(&json).unwrap(), p);
    }
}
