//! Faithfulness audit: coincidences among the matrices of a word ball.

use serde::Serialize;

use super::ball::BallEnumeration;
use super::presentation::Word;
use crate::error::Result;
use crate::lie::GroupElement;
use crate::linalg::to_row_major;

/// Default entrywise tolerance for matrix coincidence.
pub const DEFAULT_COLLISION_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct Collision {
    pub first: usize,
    pub second: usize,
    pub first_word: String,
    pub second_word: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FaithfulnessReport {
    pub words: usize,
    /// Number of distinct matrices (words minus merged duplicates).
    pub distinct_elements: usize,
    pub tolerance: f64,
    pub collisions: Vec<Collision>,
}

impl FaithfulnessReport {
    pub fn is_faithful(&self) -> bool {
        self.collisions.is_empty()
    }
}

/// Sign-normalized flat coordinates: each projective block is flipped so
/// its first entry above `1e-3 · ‖block‖_∞` is positive. Returns a second
/// variant when that choice is borderline.
fn canonical_forms(g: &GroupElement) -> Vec<Vec<f64>> {
    let mut forms = vec![Vec::new()];
    for (b, &proj) in g.blocks().iter().zip(g.projective()) {
        let flat = to_row_major(b);
        if !proj {
            for f in &mut forms {
                f.extend_from_slice(&flat);
            }
            continue;
        }
        let scale = flat.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let pivot = flat.iter().position(|x| x.abs() > 1e-3 * scale);
        let sign = pivot.map_or(1.0, |k| flat[k].signum());
        let borderline = flat
            .iter()
            .any(|x| (x.abs() - 1e-3 * scale).abs() < 1e-6 * scale.max(1.0));
        let pos: Vec<f64> = flat.iter().map(|x| x * sign).collect();
        if borderline {
            let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
            let mut extra = forms.clone();
            for f in &mut forms {
                f.extend_from_slice(&pos);
            }
            for f in &mut extra {
                f.extend_from_slice(&neg);
            }
            forms.extend(extra);
        } else {
            for f in &mut forms {
                f.extend_from_slice(&pos);
            }
        }
    }
    forms
}

/// Report all pairs of words whose matrices agree within `tol` (relative to
/// `max(1, ‖g‖_∞)`), identifying `±` on projective blocks.
///
/// Candidate pairs come from buckets of the rounded first coordinate with
/// neighbour probing; each candidate is confirmed by a full comparison.
pub fn faithfulness_audit(ball: &BallEnumeration, tol: f64) -> Result<FaithfulnessReport> {
    use std::collections::{BTreeSet, HashMap};
    let entries = ball.map_elements(|i, g| {
        let scale = g.max_abs_entry().max(1.0);
        (i, scale, canonical_forms(g))
    })?;
    let cell = 1e3 * tol;
    let key = |x: f64, scale: f64| (x / (cell * scale)).floor() as i64;
    // Bucket by (scale exponent, rounded first coordinate).
    let mut buckets: HashMap<(i32, i64), Vec<(usize, usize)>> = HashMap::new();
    for (i, scale, forms) in &entries {
        let e = scale.log2().floor() as i32;
        for (f, form) in forms.iter().enumerate() {
            let s = 2f64.powi(e);
            buckets.entry((e, key(form[0], s))).or_default().push((*i, f));
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, scale, forms) in &entries {
        let e0 = scale.log2().floor() as i32;
        for form in forms {
            for e in [e0 - 1, e0, e0 + 1] {
                let s = 2f64.powi(e);
                let k = key(form[0], s);
                for kk in [k - 1, k, k + 1] {
                    let Some(list) = buckets.get(&(e, kk)) else { continue };
                    for &(j, fj) in list {
                        if j <= *i {
                            continue;
                        }
                        let other = &entries[j].2[fj];
                        let sc = scale.max(entries[j].1);
                        if form.iter().zip(other).all(|(a, b)| (a - b).abs() <= tol * sc) {
                            pairs.insert((*i, j));
                        }
                    }
                }
            }
        }
    }
    let presentation = ball.presentation();
    let collisions: Vec<Collision> = pairs
        .iter()
        .map(|&(a, b)| Collision {
            first: a,
            second: b,
            first_word: ball.word(a).display(presentation),
            second_word: ball.word(b).display(presentation),
        })
        .collect();
    // distinct elements: union-find over collision pairs
    let mut parent: Vec<usize> = (0..ball.len()).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in &pairs {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let distinct = (0..ball.len()).filter(|&x| root(&mut parent, x) == x).count();
    Ok(FaithfulnessReport {
        words: ball.len(),
        distinct_elements: distinct,
        tolerance: tol,
        collisions,
    })
}

/// Words of a collision, for reporting.
pub fn collision_words(ball: &BallEnumeration, c: &Collision) -> (Word, Word) {
    (ball.word(c.first), ball.word(c.second))
}
