//! Presentations with normal forms: free groups, free products of cyclic
//! groups, and direct pairs of those.

use std::fmt;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::lie::GroupElement;

/// Order of a cyclic free factor; `None` is infinite.
pub type CyclicOrder = Option<u32>;

#[derive(Clone, Debug, PartialEq)]
pub enum PresentationKind {
    Free,
    FreeProductCyclic(Vec<CyclicOrder>),
    /// The first `left` generators form one factor, the rest the other;
    /// elements of different factors commute.
    DirectPair {
        left: usize,
        left_orders: Vec<CyclicOrder>,
        right_orders: Vec<CyclicOrder>,
    },
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub element: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Peripheral {
    pub name: String,
    pub generators: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Presentation {
    generators: Vec<Generator>,
    orders: Vec<CyclicOrder>,
    kind: PresentationKind,
    peripherals: Vec<Peripheral>,
}

impl Presentation {
    pub fn new(generators: Vec<Generator>, kind: PresentationKind, peripherals: Vec<Peripheral>) -> Result<Self> {
        if generators.is_empty() {
            return Err(LabError::Config("presentation needs at least one generator".into()));
        }
        if generators.len() > 127 {
            return Err(LabError::Config("at most 127 generators are supported".into()));
        }
        let dims = generators[0].element.dims();
        for g in &generators {
            if g.element.dims() != dims {
                return Err(LabError::DimensionMismatch(format!(
                    "generator {} has block sizes {:?}, expected {:?}",
                    g.name,
                    g.element.dims(),
                    dims
                )));
            }
        }
        let n = generators.len();
        let orders = match &kind {
            PresentationKind::Free => vec![None; n],
            PresentationKind::FreeProductCyclic(o) => o.clone(),
            PresentationKind::DirectPair {
                left,
                left_orders,
                right_orders,
            } => {
                if left_orders.len() != *left {
                    return Err(LabError::Config("direct pair: left order count mismatch".into()));
                }
                let mut o = left_orders.clone();
                o.extend(right_orders.iter().copied());
                o
            }
        };
        if orders.len() != n {
            return Err(LabError::Config(format!(
                "{} cyclic orders for {} generators",
                orders.len(),
                n
            )));
        }
        if let Some(k) = orders.iter().position(|o| matches!(o, Some(m) if *m < 2)) {
            return Err(LabError::Config(format!("generator {} has order < 2", generators[k].name)));
        }
        for (g, order) in generators.iter().zip(&orders) {
            if let Some(m) = order {
                let mut p = g.element.clone();
                for _ in 1..*m {
                    p = &p * &g.element;
                }
                if !p.is_identity(1e-8 * (1.0 + g.element.max_abs_entry().powi(*m as i32))) {
                    return Err(LabError::Config(format!(
                        "generator {} does not have declared order {m}",
                        g.name
                    )));
                }
            }
        }
        for p in &peripherals {
            if let Some(&k) = p.generators.iter().find(|&&k| k >= n) {
                return Err(LabError::UnknownGenerator(format!("index {k} in peripheral {}", p.name)));
            }
        }
        Ok(Self {
            generators,
            orders,
            kind,
            peripherals,
        })
    }

    pub fn free(generators: Vec<Generator>) -> Result<Self> {
        Self::new(generators, PresentationKind::Free, Vec::new())
    }

    pub fn with_peripherals(mut self, peripherals: Vec<Peripheral>) -> Result<Self> {
        if let Some(k) = peripherals
            .iter()
            .flat_map(|p| p.generators.iter())
            .find(|&&k| k >= self.generators.len())
        {
            return Err(LabError::UnknownGenerator(format!("index {k}")));
        }
        self.peripherals = peripherals;
        Ok(self)
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn kind(&self) -> &PresentationKind {
        &self.kind
    }

    pub fn orders(&self) -> &[CyclicOrder] {
        &self.orders
    }

    pub fn peripherals(&self) -> &[Peripheral] {
        &self.peripherals
    }

    pub fn dims(&self) -> Vec<usize> {
        self.generators[0].element.dims()
    }

    pub fn projective(&self) -> Vec<bool> {
        self.generators[0].element.projective().to_vec()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(&self.dims(), &self.projective())
    }

    pub fn generator_index(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| LabError::UnknownGenerator(name.to_string()))
    }

    /// Sub-presentation on a subset of generators (kept in the given order).
    pub fn restrict(&self, gens: &[usize]) -> Result<Self> {
        if gens.is_empty() {
            return Err(LabError::Config("empty generator subset".into()));
        }
        let mut sub = Vec::new();
        for &k in gens {
            let g = self
                .generators
                .get(k)
                .ok_or_else(|| LabError::UnknownGenerator(format!("index {k}")))?;
            sub.push(g.clone());
        }
        let kind = match &self.kind {
            PresentationKind::Free => PresentationKind::Free,
            PresentationKind::FreeProductCyclic(_) => {
                PresentationKind::FreeProductCyclic(gens.iter().map(|&k| self.orders[k]).collect())
            }
            PresentationKind::DirectPair { left, .. } => {
                let l: Vec<usize> = gens.iter().copied().filter(|k| k < left).collect();
                let r: Vec<usize> = gens.iter().copied().filter(|k| k >= left).collect();
                if l.is_empty() || r.is_empty() {
                    PresentationKind::FreeProductCyclic(gens.iter().map(|&k| self.orders[k]).collect())
                } else {
                    // keep left generators first
                    let mut ordered = l.clone();
                    ordered.extend(&r);
                    if ordered != gens {
                        return Err(LabError::Config(
                            "direct-pair restriction must list left generators first".into(),
                        ));
                    }
                    PresentationKind::DirectPair {
                        left: l.len(),
                        left_orders: l.iter().map(|&k| self.orders[k]).collect(),
                        right_orders: r.iter().map(|&k| self.orders[k]).collect(),
                    }
                }
            }
        };
        Self::new(sub, kind, Vec::new())
    }

    /// Sub-presentation generated by a peripheral subgroup.
    pub fn peripheral_presentation(&self, name: &str) -> Result<Self> {
        let p = self
            .peripherals
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| LabError::Config(format!("unknown peripheral `{name}`")))?;
        self.restrict(&p.generators)
    }

    /// `(lo, hi)` such that syllable exponents lie in `lo..=hi`.
    pub(crate) fn exponent_range(&self, gen: usize) -> (i64, i64) {
        match self.orders[gen] {
            None => (i64::MIN, i64::MAX),
            Some(m) => {
                let m = m as i64;
                (-((m - 1) / 2), m / 2)
            }
        }
    }

    pub(crate) fn left_count(&self) -> Option<usize> {
        match self.kind {
            PresentationKind::DirectPair { left, .. } => Some(left),
            _ => None,
        }
    }

    /// Letter `2k` is generator `k`, letter `2k+1` its inverse.
    pub(crate) fn letter_element(&self, letter: u8) -> GroupElement {
        let g = &self.generators[(letter / 2) as usize].element;
        if letter % 2 == 0 {
            g.clone()
        } else {
            g.inverse()
        }
    }

    /// Whether the normal-form automaton accepts `next` after a word whose
    /// last letter is `last` with a run of `run` equal letters.
    pub(crate) fn accepts(&self, last: Option<(u8, u16)>, next: u8) -> bool {
        let gen = (next / 2) as usize;
        let sign: i64 = if next % 2 == 0 { 1 } else { -1 };
        let (lo, hi) = self.exponent_range(gen);
        let within = |e: i64| e >= lo && e <= hi;
        let Some((prev, run)) = last else {
            return within(sign);
        };
        let prev_gen = (prev / 2) as usize;
        if let Some(left) = self.left_count() {
            // B-part letters never precede A-part letters.
            if prev_gen >= left && gen < left {
                return false;
            }
        }
        if prev_gen != gen {
            return within(sign);
        }
        prev == next && within(sign * (run as i64 + 1))
    }
}

/// A word as a list of syllables `(generator, exponent)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Word {
    pub syllables: Vec<(usize, i64)>,
}

impl Word {
    pub fn empty() -> Self {
        Self { syllables: Vec::new() }
    }

    pub fn new(syllables: Vec<(usize, i64)>) -> Self {
        Self { syllables }
    }

    pub fn letter(gen: usize, exponent: i64) -> Self {
        Self {
            syllables: vec![(gen, exponent)],
        }
    }

    /// Word length with respect to the generators and their inverses.
    pub fn length(&self) -> usize {
        self.syllables.iter().map(|(_, e)| e.unsigned_abs() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.syllables.clone();
        s.extend(other.syllables.iter().copied());
        Word { syllables: s }
    }

    pub fn inverse(&self) -> Word {
        Word {
            syllables: self.syllables.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// Expand into single letters (`2k` / `2k+1` encoding).
    pub(crate) fn letters(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.length());
        for &(g, e) in &self.syllables {
            let l = (2 * g + usize::from(e < 0)) as u8;
            out.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
        }
        out
    }

    pub(crate) fn from_letters(letters: &[u8]) -> Word {
        let mut syllables: Vec<(usize, i64)> = Vec::new();
        for &l in letters {
            let g = (l / 2) as usize;
            let s = if l % 2 == 0 { 1 } else { -1 };
            match syllables.last_mut() {
                Some((pg, e)) if *pg == g => *e += s,
                _ => syllables.push((g, s)),
            }
        }
        syllables.retain(|&(_, e)| e != 0);
        Word { syllables }
    }

    /// Render with generator names, e.g. `a b^-1 a^2`.
    pub fn display(&self, p: &Presentation) -> String {
        if self.syllables.is_empty() {
            return "id".to_string();
        }
        self.syllables
            .iter()
            .map(|&(g, e)| {
                let name = p.generators.get(g).map_or("?", |x| x.name.as_str());
                if e == 1 {
                    name.to_string()
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parse `a b^-1 a^2` (`id` or empty for the identity).
    pub fn parse(s: &str, p: &Presentation) -> Result<Word> {
        let mut syllables = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "id" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (
                    n,
                    e.parse::<i64>()
                        .map_err(|_| LabError::Config(format!("bad exponent in `{tok}`")))?,
                ),
                None => (tok, 1),
            };
            syllables.push((p.generator_index(name)?, exp));
        }
        Ok(Word { syllables })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self
            .syllables
            .iter()
            .map(|&(g, e)| if e == 1 { format!("g{g}") } else { format!("g{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Normal form: free reduction, cyclic exponents in the symmetric range
/// `−⌊(m−1)/2⌋ ..= ⌊m/2⌋`, and for direct pairs the left factor first.
pub fn reduce(w: &Word, p: &Presentation) -> Result<Word> {
    let n = p.generator_count();
    if let Some(&(g, _)) = w.syllables.iter().find(|(g, _)| *g >= n) {
        return Err(LabError::UnknownGenerator(format!("index {g}")));
    }
    match p.left_count() {
        Some(left) => {
            let a: Vec<_> = w.syllables.iter().copied().filter(|(g, _)| *g < left).collect();
            let b: Vec<_> = w.syllables.iter().copied().filter(|(g, _)| *g >= left).collect();
            let mut out = reduce_free_product(&a, p);
            out.extend(reduce_free_product(&b, p));
            Ok(Word { syllables: out })
        }
        None => Ok(Word {
            syllables: reduce_free_product(&w.syllables, p),
        }),
    }
}

fn canonical_exponent(p: &Presentation, g: usize, e: i64) -> i64 {
    match p.orders()[g] {
        None => e,
        Some(m) => {
            let m = m as i64;
            let (_, hi) = p.exponent_range(g);
            let r = e.rem_euclid(m);
            if r > hi {
                r - m
            } else {
                r
            }
        }
    }
}

fn reduce_free_product(s: &[(usize, i64)], p: &Presentation) -> Vec<(usize, i64)> {
    let mut stack: Vec<(usize, i64)> = Vec::with_capacity(s.len());
    for &(g, e) in s {
        let e = canonical_exponent(p, g, e);
        if e == 0 {
            continue;
        }
        match stack.last_mut() {
            Some((pg, pe)) if *pg == g => {
                let merged = canonical_exponent(p, g, *pe + e);
                if merged == 0 {
                    stack.pop();
                } else {
                    *pe = merged;
                }
            }
            _ => stack.push((g, e)),
        }
    }
    stack
}
