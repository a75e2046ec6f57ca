//! Word-ball enumeration over normal forms.
//!
//! Normal forms are prefix closed, so the ball is a trie built sphere by
//! sphere. Node ids follow shortlex order. Matrix values are produced on
//! demand by depth-first traversal, in parallel over disjoint subtrees.

use rayon::prelude::*;

use super::presentation::{Presentation, Word};
use crate::error::{LabError, Result};
use crate::lie::GroupElement;
use crate::linalg::{from_row_major, matmul_dd, max_abs_entry, to_row_major, DoubleDouble, Mat};

/// Default cap on the number of ball elements.
pub const DEFAULT_BUDGET: u64 = 30_000_000;
/// Environment variable overriding the enumeration budget.
pub const BUDGET_ENV: &str = "ANOSOVLAB_BUDGET";
/// Entries above this switch products to double-double arithmetic.
pub const DD_THRESHOLD: f64 = 1e12;
/// Entries above this are reported as overflow.
pub const OVERFLOW_THRESHOLD: f64 = 1e300;

const ROOT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    letter: u8,
    run: u16,
    len: u16,
}

/// All normal forms of length at most `radius`.
#[derive(Clone, Debug)]
pub struct BallEnumeration {
    presentation: Presentation,
    radius: usize,
    nodes: Vec<Node>,
    /// `first_child[i]..first_child[i + 1]` are the children of node `i`
    /// (children are contiguous); one extra sentinel entry.
    first_child: Vec<u32>,
    sphere_start: Vec<usize>,
}

/// Budget from the environment, else the default.
pub fn configured_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Exact sphere sizes `|S(0)|, …, |S(n)|` of the normal-form language,
/// without building anything.
pub fn sphere_sizes(p: &Presentation, n: usize) -> Vec<u64> {
    use std::collections::BTreeMap;
    let letters = (2 * p.generator_count()) as u8;
    let mut states: BTreeMap<Option<(u8, u16)>, u64> = BTreeMap::new();
    states.insert(None, 1);
    let mut out = vec![1u64];
    for _ in 0..n {
        let mut next: BTreeMap<Option<(u8, u16)>, u64> = BTreeMap::new();
        for (&state, &count) in &states {
            for l in 0..letters {
                if p.accepts(state, l) {
                    let run = match state {
                        Some((prev, r)) if prev == l => r + 1,
                        _ => 1,
                    };
                    *next.entry(Some((l, run))).or_insert(0) += count;
                }
            }
        }
        out.push(next.values().fold(0u64, |a, b| a.saturating_add(*b)));
        states = next;
    }
    out
}

/// `enumerate_ball` with the budget from [`configured_budget`].
pub fn enumerate_ball(p: &Presentation, radius: usize) -> Result<BallEnumeration> {
    enumerate_ball_with_budget(p, radius, configured_budget())
}

pub fn enumerate_ball_with_budget(p: &Presentation, radius: usize, budget: u64) -> Result<BallEnumeration> {
    if radius > u16::MAX as usize {
        return Err(LabError::BallTooLarge {
            projected: u64::MAX,
            budget,
        });
    }
    let projected = sphere_sizes(p, radius)
        .iter()
        .fold(0u64, |a, b| a.saturating_add(*b));
    if projected > budget || projected > u32::MAX as u64 - 1 {
        return Err(LabError::BallTooLarge { projected, budget });
    }
    let letters = (2 * p.generator_count()) as u8;
    let mut nodes = Vec::with_capacity(projected as usize);
    let mut first_child = Vec::with_capacity(projected as usize + 1);
    nodes.push(Node {
        parent: ROOT,
        letter: 0,
        run: 0,
        len: 0,
    });
    let mut sphere_start = vec![0usize, 1];
    for k in 0..radius {
        let (lo, hi) = (sphere_start[k], sphere_start[k + 1]);
        for i in lo..hi {
            first_child.push(nodes.len() as u32);
            let node = nodes[i];
            let state = (i != 0).then_some((node.letter, node.run));
            for l in 0..letters {
                if p.accepts(state, l) {
                    let run = match state {
                        Some((prev, r)) if prev == l => r + 1,
                        _ => 1,
                    };
                    nodes.push(Node {
                        parent: i as u32,
                        letter: l,
                        run,
                        len: (k + 1) as u16,
                    });
                }
            }
        }
        sphere_start.push(nodes.len());
    }
    // leaves of the last sphere, plus the sentinel
    let n = nodes.len() as u32;
    while first_child.len() < nodes.len() + 1 {
        first_child.push(n);
    }
    Ok(BallEnumeration {
        presentation: p.clone(),
        radius,
        nodes,
        first_child,
        sphere_start,
    })
}

impl BallEnumeration {
    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Word length of element `i`.
    pub fn length(&self, i: usize) -> usize {
        self.nodes[i].len as usize
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.len as usize).collect()
    }

    /// `|S(k)|` for `k = 0..=radius`.
    pub fn sphere_counts(&self) -> Vec<usize> {
        self.sphere_start.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index range of the sphere of radius `k`.
    pub fn sphere(&self, k: usize) -> std::ops::Range<usize> {
        self.sphere_start[k]..self.sphere_start[k + 1]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        let p = self.nodes[i].parent;
        (p != ROOT).then_some(p as usize)
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        self.first_child[i] as usize..self.first_child[i + 1] as usize
    }

    /// Last letter of element `i` (`2k` / `2k+1` encoding).
    pub fn last_letter(&self, i: usize) -> Option<u8> {
        (i != 0).then(|| self.nodes[i].letter)
    }

    pub fn letters(&self, i: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.nodes[i].len as usize);
        let mut cur = i;
        while cur != 0 {
            out.push(self.nodes[cur].letter);
            cur = self.nodes[cur].parent as usize;
        }
        out.reverse();
        out
    }

    pub fn word(&self, i: usize) -> Word {
        Word::from_letters(&self.letters(i))
    }

    /// Index of a normal-form word, if it lies in the ball.
    pub fn find(&self, w: &Word) -> Option<usize> {
        let mut cur = 0usize;
        for l in w.letters() {
            cur = self.children(cur).find(|&c| self.nodes[c].letter == l)?;
        }
        Some(cur)
    }

    /// Freshly evaluated value of element `i`.
    pub fn element(&self, i: usize) -> Result<GroupElement> {
        evaluate_letters(&self.presentation, &self.letters(i))
    }

    /// Apply `f` to every `(index, value)` pair; results in index order.
    ///
    /// Values are computed along the trie: a child is its parent times a
    /// letter, which is the same arithmetic as left-to-right evaluation of
    /// the word. Once an entry exceeds [`DD_THRESHOLD`] the child is
    /// recomputed from scratch in double-double.
    pub fn map_elements<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &GroupElement) -> T + Sync,
    {
        let letters: Vec<GroupElement> = (0..2 * self.presentation.generator_count())
            .map(|l| self.presentation.letter_element(l as u8))
            .collect();
        // Subtree roots: first depth with enough nodes to keep workers busy.
        let mut split = 0;
        while split < self.radius && self.sphere(split).len() < 256 {
            split += 1;
        }
        let mut out: Vec<Option<T>> = (0..self.len()).map(|_| None).collect();
        // Shallow nodes: evaluated sequentially, values kept for the roots.
        let mut shallow: Vec<GroupElement> = Vec::with_capacity(self.sphere_start[split + 1]);
        for i in 0..self.sphere_start[split + 1] {
            let v = if i == 0 {
                self.presentation.identity()
            } else {
                self.child_value(&shallow[self.nodes[i].parent as usize], i, &letters)?
            };
            if self.nodes[i].len as usize != split {
                out[i] = Some(f(i, &v));
            }
            shallow.push(v);
        }
        let roots: Vec<usize> = self.sphere(split).collect();
        let chunks: Vec<Result<Vec<(usize, T)>>> = roots
            .par_iter()
            .map(|&r| {
                let mut acc = Vec::new();
                let mut stack: Vec<(usize, GroupElement)> = vec![(r, shallow[r].clone())];
                while let Some((i, v)) = stack.pop() {
                    for c in self.children(i).rev() {
                        let cv = self.child_value(&v, c, &letters)?;
                        stack.push((c, cv));
                    }
                    acc.push((i, f(i, &v)));
                }
                Ok(acc)
            })
            .collect();
        for chunk in chunks {
            for (i, t) in chunk? {
                out[i] = Some(t);
            }
        }
        Ok(out.into_iter().map(|t| t.expect("every node visited")).collect())
    }

    fn child_value(&self, parent: &GroupElement, c: usize, letters: &[GroupElement]) -> Result<GroupElement> {
        let v = if parent.max_abs_entry() > DD_THRESHOLD {
            evaluate_letters_dd(&self.presentation, &self.letters(c))
        } else {
            parent * &letters[self.nodes[c].letter as usize]
        };
        check_overflow(&v, self.nodes[c].len as usize)?;
        Ok(v)
    }
}

fn check_overflow(v: &GroupElement, at: usize) -> Result<()> {
    let m = v.max_abs_entry().max(v.inverse_blocks().iter().map(max_abs_entry).fold(0.0, f64::max));
    if !m.is_finite() || m > OVERFLOW_THRESHOLD {
        return Err(LabError::OverflowRisk(at));
    }
    Ok(())
}

/// Left-to-right evaluation of a word given as letters, switching to
/// double-double once the running product exceeds [`DD_THRESHOLD`].
pub fn evaluate_letters(p: &Presentation, letters: &[u8]) -> Result<GroupElement> {
    let mut cur = p.identity();
    for k in 0..letters.len() {
        cur = if cur.max_abs_entry() > DD_THRESHOLD {
            evaluate_letters_dd(p, &letters[..=k])
        } else {
            &cur * &p.letter_element(letters[k])
        };
        check_overflow(&cur, k + 1)?;
    }
    Ok(cur)
}

/// Evaluate an arbitrary (not necessarily reduced) word.
pub fn evaluate(p: &Presentation, w: &Word) -> Result<GroupElement> {
    if let Some(&(g, _)) = w.syllables.iter().find(|(g, _)| *g >= p.generator_count()) {
        return Err(LabError::UnknownGenerator(format!("index {g}")));
    }
    evaluate_letters(p, &w.letters())
}

fn to_dd(m: &Mat) -> Vec<DoubleDouble> {
    to_row_major(m).into_iter().map(DoubleDouble::new).collect()
}

/// Whole-word product in double-double, both for the element and its inverse.
fn evaluate_letters_dd(p: &Presentation, letters: &[u8]) -> GroupElement {
    let dims = p.dims();
    let mut blocks = Vec::with_capacity(dims.len());
    let mut inverses = Vec::with_capacity(dims.len());
    for (b, &d) in dims.iter().enumerate() {
        let id = to_dd(&Mat::identity(d, d));
        let mut fwd = id.clone();
        let mut inv = id;
        for &l in letters {
            let e = p.letter_element(l);
            fwd = matmul_dd(&fwd, &to_dd(&e.blocks()[b]), d);
            inv = matmul_dd(&to_dd(&e.inverse_blocks()[b]), &inv, d);
        }
        let f: Vec<f64> = fwd.iter().map(|x| x.to_f64()).collect();
        let i: Vec<f64> = inv.iter().map(|x| x.to_f64()).collect();
        blocks.push(from_row_major(d, &f));
        inverses.push(from_row_major(d, &i));
    }
    GroupElement::from_parts(blocks, inverses, p.projective())
}
