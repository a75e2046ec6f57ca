//! Truncated cusped Cayley graph: a Cayley ball with a combinatorial
//! horoball glued along every peripheral coset it meets.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::graph::{bfs, level_reach, Graph};
use crate::error::{LabError, Result};
use crate::group::{reduce, BallEnumeration, Peripheral, Presentation, Word};

/// Largest coset slice with a dense `d_Y` table.
const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
enum CosetMetric {
    /// Infinite cyclic peripheral: `d_Y` is the exponent difference.
    Line(Vec<i64>),
    /// Row-major table.
    Dense(Vec<u32>),
}

/// One peripheral coset `γP` met by the ball.
#[derive(Clone, Debug, Serialize)]
pub struct Coset {
    pub peripheral: usize,
    /// Shortest representative (normal form with trailing `P`-syllables removed).
    pub representative: Word,
    /// Ball indices of the members, ordered by position in `P`.
    pub members: Vec<usize>,
    #[serde(skip)]
    metric: CosetMetric,
    /// Id of `(member 0, level 2)`.
    offset: usize,
}

impl Coset {
    pub fn base_distance(&self, a: usize, b: usize) -> u64 {
        match &self.metric {
            CosetMetric::Line(c) => c[a].abs_diff(c[b]),
            CosetMetric::Dense(t) => t[a * self.members.len() + b] as u64,
        }
    }

    /// Positions at base distance in `1..=reach` from `a`, increasing.
    fn horizontal(&self, a: usize, reach: u64, out: &mut Vec<usize>) {
        match &self.metric {
            CosetMetric::Line(c) => {
                let x = c[a];
                let lo = c.partition_point(|&y| y < x.saturating_sub(reach as i64));
                let hi = c.partition_point(|&y| y <= x.saturating_add(reach as i64));
                out.extend((lo..hi).filter(|&b| b != a));
            }
            CosetMetric::Dense(t) => {
                let k = self.members.len();
                out.extend((0..k).filter(|&b| {
                    let d = t[a * k + b] as u64;
                    d > 0 && d <= reach
                }));
            }
        }
    }
}

/// What a vertex id stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspVertex {
    /// Ball element (level 1 of every horoball through it).
    Element(usize),
    /// `(coset, member position, level ≥ 2)`.
    Horoball(usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct CuspGraph {
    ball_size: usize,
    radius: usize,
    max_level: usize,
    cayley_offsets: Vec<usize>,
    cayley_targets: Vec<usize>,
    cosets: Vec<Coset>,
    /// `(coset, position)` pairs per ball element, CSR.
    member_offsets: Vec<usize>,
    memberships: Vec<(usize, usize)>,
    vertex_total: usize,
}

/// Default truncation: `⌈log₂(2R)⌉ + 2`.
pub fn default_max_level(radius: usize) -> usize {
    let diameter = (2 * radius).max(1) as f64;
    diameter.log2().ceil() as usize + 2
}

/// Peripheral marking from generator words; each word must be a single
/// generator for the generating set to be adapted.
pub fn peripheral_from_words(p: &Presentation, name: &str, words: &[String]) -> Result<Peripheral> {
    let mut gens = Vec::new();
    for w in words {
        let parsed = Word::parse(w, p)?;
        match parsed.syllables.as_slice() {
            [(g, e)] if e.abs() == 1 => gens.push(*g),
            _ => {
                return Err(LabError::NotAdapted(format!(
                    "peripheral `{name}` generator `{w}` is not in the generating set"
                )))
            }
        }
    }
    if gens.is_empty() {
        return Err(LabError::NotAdapted(format!("peripheral `{name}` has no generators")));
    }
    gens.sort_unstable();
    gens.dedup();
    Ok(Peripheral {
        name: name.to_string(),
        generators: gens,
    })
}

/// `(representative, P-part)` with `w = representative · P-part`.
fn split_coset(w: &Word, gens: &BTreeSet<usize>, left: Option<usize>) -> (Word, Word) {
    let strip = |s: &[(usize, i64)]| -> (Vec<(usize, i64)>, Vec<(usize, i64)>) {
        let cut = s.len() - s.iter().rev().take_while(|(g, _)| gens.contains(g)).count();
        (s[..cut].to_vec(), s[cut..].to_vec())
    };
    match left {
        None => {
            let (r, p) = strip(&w.syllables);
            (Word::new(r), Word::new(p))
        }
        Some(l) => {
            let split = w.syllables.iter().take_while(|(g, _)| *g < l).count();
            let (mut r, mut p) = strip(&w.syllables[..split]);
            let (r2, p2) = strip(&w.syllables[split..]);
            r.extend(r2);
            p.extend(p2);
            (Word::new(r), Word::new(p))
        }
    }
}

/// Builds the truncated cusp graph over the ball. Every peripheral of the
/// presentation contributes one horoball per coset meeting the ball.
pub fn cusp_graph(ball: &BallEnumeration, max_level: usize) -> Result<CuspGraph> {
    let p = ball.presentation();
    if max_level == 0 {
        return Err(LabError::Config("max_level must be at least 1".into()));
    }
    let left = match p.kind() {
        crate::group::PresentationKind::DirectPair { left, .. } => Some(*left),
        _ => None,
    };
    let n = ball.len();
    let letters = 2 * p.generator_count();
    let words: Vec<Word> = (0..n).map(|i| ball.word(i)).collect();

    let adjacency: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<usize>> {
            let mut out = Vec::new();
            for l in 0..letters {
                let step = Word::from_letters(&[l as u8]);
                if let Some(j) = ball.find(&reduce(&words[i].concat(&step), p)?) {
                    if j != i {
                        out.push(j);
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cayley_offsets = vec![0];
    let mut cayley_targets = Vec::new();
    for a in adjacency {
        cayley_targets.extend(a);
        cayley_offsets.push(cayley_targets.len());
    }

    let mut cosets: Vec<Coset> = Vec::new();
    let mut per_element: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, per) in p.peripherals().iter().enumerate() {
        if per.generators.is_empty() {
            return Err(LabError::NotAdapted(format!("peripheral `{}` has no generators", per.name)));
        }
        let gens: BTreeSet<usize> = per.generators.iter().copied().collect();
        let cyclic = gens.len() == 1 && p.orders()[per.generators[0]].is_none();
        let mut by_rep: BTreeMap<Word, Vec<(usize, Word)>> = BTreeMap::new();
        let mut order: Vec<Word> = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let (rep, part) = split_coset(w, &gens, left);
            let e = by_rep.entry(rep.clone()).or_default();
            if e.is_empty() {
                order.push(rep);
            }
            e.push((i, part));
        }
        for rep in order {
            let mut members = by_rep.remove(&rep).expect("representative recorded");
            let metric = if cyclic {
                let coord = |w: &Word| w.syllables.first().map_or(0, |s| s.1);
                members.sort_by_key(|(_, w)| coord(w));
                CosetMetric::Line(members.iter().map(|(_, w)| coord(w)).collect())
            } else {
                if members.len() > DENSE_LIMIT {
                    return Err(LabError::Config(format!(
                        "coset of `{}` meets the ball in {} elements (limit {DENSE_LIMIT})",
                        per.name,
                        members.len()
                    )));
                }
                let m = members.len();
                let mut t = vec![0u32; m * m];
                for a in 0..m {
                    for b in (a + 1)..m {
                        let d = reduce(&members[a].1.inverse().concat(&members[b].1), p)?.length() as u32;
                        t[a * m + b] = d;
                        t[b * m + a] = d;
                    }
                }
                CosetMetric::Dense(t)
            };
            let c = cosets.len();
            for (pos, (i, _)) in members.iter().enumerate() {
                per_element[*i].push((c, pos));
            }
            cosets.push(Coset {
                peripheral: k,
                representative: rep,
                members: members.into_iter().map(|(i, _)| i).collect(),
                metric,
                offset: 0,
            });
        }
    }
    let mut next = n;
    for c in &mut cosets {
        c.offset = next;
        next += c.members.len() * (max_level - 1);
    }
    let mut member_offsets = vec![0];
    let mut memberships = Vec::new();
    for m in per_element {
        memberships.extend(m);
        member_offsets.push(memberships.len());
    }
    Ok(CuspGraph {
        ball_size: n,
        radius: ball.radius(),
        max_level,
        cayley_offsets,
        cayley_targets,
        cosets,
        member_offsets,
        memberships,
        vertex_total: next,
    })
}

impl CuspGraph {
    pub fn ball_size(&self) -> usize {
        self.ball_size
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn cosets(&self) -> &[Coset] {
        &self.cosets
    }

    pub fn cayley_neighbors(&self, i: usize) -> &[usize] {
        &self.cayley_targets[self.cayley_offsets[i]..self.cayley_offsets[i + 1]]
    }

    pub fn horoball_vertex(&self, coset: usize, pos: usize, level: usize) -> usize {
        if level == 1 {
            self.cosets[coset].members[pos]
        } else {
            self.cosets[coset].offset + pos * (self.max_level - 1) + (level - 2)
        }
    }

    pub fn classify(&self, v: usize) -> CuspVertex {
        if v < self.ball_size {
            return CuspVertex::Element(v);
        }
        let c = self.cosets.partition_point(|c| c.offset <= v) - 1;
        let rel = v - self.cosets[c].offset;
        CuspVertex::Horoball(c, rel / (self.max_level - 1), rel % (self.max_level - 1) + 2)
    }

    pub fn edge_count(&self) -> usize {
        let total: usize = (0..self.vertex_total)
            .into_par_iter()
            .map(|v| {
                let mut nb = Vec::new();
                self.neighbors(v, &mut nb);
                nb.len()
            })
            .sum();
        total / 2
    }

    /// `d_X(γ, id)` for every ball element.
    pub fn distances_to_identity(&self) -> Vec<u32> {
        let (d, _) = bfs(self, 0);
        d[..self.ball_size].to_vec()
    }

    /// Full distance tables from several sources, computed concurrently.
    pub fn distances_from(&self, sources: &[usize]) -> Vec<Vec<u32>> {
        sources.par_iter().map(|&s| bfs(self, s).0).collect()
    }

    /// Adjacency text: `v <id> <type> <coset> <level> <word>` per vertex,
    /// then `e <u> <v>` per edge with `u < v`. Cayley vertices have type
    /// `cayley` and coset `-`; the word is the rest of the line.
    pub fn export<W: Write>(&self, ball: &BallEnumeration, out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| LabError::Io(e.to_string());
        let p = ball.presentation();
        writeln!(out, "# cusp graph: radius {} max_level {}", self.radius, self.max_level).map_err(io)?;
        for v in 0..self.vertex_total {
            match self.classify(v) {
                CuspVertex::Element(i) => {
                    writeln!(out, "v {v} cayley - 1 {}", ball.word(i).display(p)).map_err(io)?
                }
                CuspVertex::Horoball(c, pos, level) => {
                    let i = self.cosets[c].members[pos];
                    writeln!(out, "v {v} horoball {c} {level} {}", ball.word(i).display(p)).map_err(io)?
                }
            }
        }
        let mut nb = Vec::new();
        for v in 0..self.vertex_total {
            nb.clear();
            self.neighbors(v, &mut nb);
            for &w in nb.iter().filter(|&&w| w > v) {
                writeln!(out, "e {v} {w}").map_err(io)?;
            }
        }
        Ok(())
    }
}

impl Graph for CuspGraph {
    fn vertex_count(&self) -> usize {
        self.vertex_total
    }

    fn neighbors(&self, v: usize, out: &mut Vec<usize>) {
        let start = out.len();
        match self.classify(v) {
            CuspVertex::Element(i) => {
                out.extend_from_slice(self.cayley_neighbors(i));
                for &(c, pos) in &self.memberships[self.member_offsets[i]..self.member_offsets[i + 1]] {
                    let coset = &self.cosets[c];
                    let mut h = Vec::new();
                    coset.horizontal(pos, level_reach(1), &mut h);
                    out.extend(h.into_iter().map(|b| coset.members[b]));
                    if self.max_level > 1 {
                        out.push(self.horoball_vertex(c, pos, 2));
                    }
                }
            }
            CuspVertex::Horoball(c, pos, level) => {
                out.push(self.horoball_vertex(c, pos, level - 1));
                let mut h = Vec::new();
                self.cosets[c].horizontal(pos, level_reach(level), &mut h);
                out.extend(h.into_iter().map(|b| self.horoball_vertex(c, b, level)));
                if level < self.max_level {
                    out.push(self.horoball_vertex(c, pos, level + 1));
                }
            }
        }
        out[start..].sort_unstable();
        let mut k = start;
        for j in start..out.len() {
            if k == start || out[j] != out[k - 1] {
                out[k] = out[j];
                k += 1;
            }
        }
        out.truncate(k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp::graph::{combinatorial_horoball, graph_distance, AdjacencyGraph};
    use crate::group::{enumerate_ball, Generator};
    use crate::lie::GroupElement;

    fn unipotent() -> Presentation {
        Presentation::free(vec![Generator {
            name: "u".into(),
            element: GroupElement::from_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap(),
        }])
        .unwrap()
    }

    #[test]
    fn cyclic_group_is_one_horoball() {
        let p = unipotent()
            .with_peripherals(vec![Peripheral { name: "P".into(), generators: vec![0] }])
            .unwrap();
        let b = enumerate_ball(&p, 10).unwrap();
        let g = cusp_graph(&b, 5).unwrap();
        assert_eq!(g.cosets().len(), 1);
        let h = combinatorial_horoball(&AdjacencyGraph::path(21), 5).unwrap();
        assert_eq!(g.vertex_count(), h.vertex_count());
        assert_eq!(g.edge_count(), h.edge_count());
        let d = g.distances_to_identity();
        let u8_index = b.find(&Word::letter(0, 8)).unwrap();
        assert_eq!(d[u8_index], graph_distance(&h, h.vertex(10, 1), h.vertex(18, 1)).unwrap());
    }

    #[test]
    fn no_peripherals_is_cayley_ball() {
        let b = enumerate_ball(&unipotent(), 6).unwrap();
        let g = cusp_graph(&b, 4).unwrap();
        assert_eq!(g.vertex_count(), 13);
        assert_eq!(g.edge_count(), 12);
        let d = g.distances_to_identity();
        assert!(b.lengths().iter().zip(&d).all(|(l, d)| *l as u32 == *d));
    }

    #[test]
    fn word_peripherals_must_be_generators() {
        let p = Presentation::free(vec![
            Generator { name: "a".into(), element: GroupElement::from_rows(2, &[1.0, 2.0, 0.0, 1.0]).unwrap() },
            Generator { name: "b".into(), element: GroupElement::from_rows(2, &[1.0, 0.0, 2.0, 1.0]).unwrap() },
        ])
        .unwrap();
        assert!(peripheral_from_words(&p, "A", &["a".into()]).is_ok());
        assert!(matches!(
            peripheral_from_words(&p, "C", &["a b^-1".into()]),
            Err(LabError::NotAdapted(_))
        ));
    }

    #[test]
    fn cusp_distances_never_exceed_word_length() {
        let p = Presentation::free(vec![
            Generator { name: "a".into(), element: GroupElement::from_rows(2, &[1.0, 2.0, 0.0, 1.0]).unwrap() },
            Generator { name: "b".into(), element: GroupElement::from_rows(2, &[1.0, 0.0, 2.0, 1.0]).unwrap() },
        ])
        .unwrap()
        .with_peripherals(vec![
            Peripheral { name: "A".into(), generators: vec![0] },
            Peripheral { name: "B".into(), generators: vec![1] },
        ])
        .unwrap();
        let b = enumerate_ball(&p, 7).unwrap();
        let g = cusp_graph(&b, default_max_level(7)).unwrap();
        let d = g.distances_to_identity();
        assert!(b.lengths().iter().zip(&d).all(|(l, d)| *d <= *l as u32));
        assert!(d.iter().zip(b.lengths()).any(|(d, l)| (*d as usize) < l));
    }
}
