//! Hyperbolicity and growth comparisons on cusp graphs.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::graph::{bfs, combinatorial_horoball, tree_path, AdjacencyGraph, Graph, UNREACHABLE};
use super::space::{default_max_level, CuspGraph};
use crate::error::{LabError, Result};
use crate::group::{cartan_power_sequence, BallEnumeration};
use crate::lie::{cartan_projection, partial_projection, CartanVector, Functional, GroupElement, RootSubset};
use crate::stats::lower_envelope;

/// Fewest quadruples accepted by [`hyperbolicity_probe`].
pub const MIN_QUADRUPLES: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    /// Largest four-point defect seen.
    pub delta: f64,
    pub quadruples: usize,
    pub sources: usize,
    /// Quadruple attaining the maximum.
    pub witness: [usize; 4],
}

/// `(L − M)/2` for the three pair sums `L ≥ M ≥ S`.
pub fn four_point_defect(d: impl Fn(usize, usize) -> u32, q: [usize; 4]) -> f64 {
    let [x, y, z, w] = q;
    let mut s = [
        d(x, y) as u64 + d(z, w) as u64,
        d(x, z) as u64 + d(y, w) as u64,
        d(x, w) as u64 + d(y, z) as u64,
    ];
    s.sort_unstable();
    (s[2] - s[1]) as f64 / 2.0
}

/// Four-point condition over quadruples drawn from `candidates`. At most
/// `max_sources` candidates are kept (a seeded sample); quadruples are
/// enumerated exhaustively when there are at most `quadruples` of them and
/// sampled otherwise.
pub fn hyperbolicity_probe<G: Graph + ?Sized>(
    g: &G,
    candidates: &[usize],
    max_sources: usize,
    quadruples: usize,
    seed: u64,
) -> Result<HyperbolicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<usize> = if candidates.len() <= max_sources {
        candidates.to_vec()
    } else {
        let mut idx = sample(&mut rng, candidates.len(), max_sources).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| candidates[i]).collect()
    };
    let m = points.len();
    let tables: Vec<Vec<u32>> = points.par_iter().map(|&s| bfs(g, s).0).collect();
    let d = |a: usize, b: usize| tables[a][points[b]];
    for a in 0..m {
        for b in 0..m {
            if d(a, b) == UNREACHABLE {
                return Err(LabError::Disconnected(points[a], points[b]));
            }
        }
    }
    let total = if m >= 4 {
        (m * (m - 1) * (m - 2) * (m - 3) / 24) as u64
    } else {
        0
    };
    let mut best = (0.0, [0usize; 4]);
    let mut count = 0;
    let mut consider = |q: [usize; 4]| {
        let v = four_point_defect(d, q);
        if v > best.0 {
            best = (v, q.map(|i| points[i]));
        }
    };
    if total <= quadruples as u64 {
        for a in 0..m {
            for b in (a + 1)..m {
                for c in (b + 1)..m {
                    for e in (c + 1)..m {
                        consider([a, b, c, e]);
                        count += 1;
                    }
                }
            }
        }
    } else {
        for _ in 0..quadruples {
            let idx = sample(&mut rng, m, 4).into_vec();
            consider([idx[0], idx[1], idx[2], idx[3]]);
            count += 1;
        }
    }
    if count < MIN_QUADRUPLES {
        return Err(LabError::InsufficientData(format!("{count} quadruples, need {MIN_QUADRUPLES}")));
    }
    Ok(HyperbolicityReport {
        delta: best.0,
        quadruples: count,
        sources: m,
        witness: best.1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearBound {
    /// Slope `c`.
    pub slope: f64,
    /// Offset `C`.
    pub offset: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TightElement {
    pub word: String,
    pub distance: f64,
    pub phi: f64,
    /// `φ − (c·d − C) ≥ 0`.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceComparison {
    /// `φ ≥ c·d_X − C`.
    pub graph_lower: Option<LinearBound>,
    /// `φ ≥ c·d_M − C`.
    pub symmetric_lower: Option<LinearBound>,
    /// `φ ≤ c·d_M + C`.
    pub symmetric_upper: Option<LinearBound>,
    /// Elements closest to the `d_X` envelope.
    pub tight: Vec<TightElement>,
    pub samples: usize,
}

const ENVELOPE_BINS: usize = 20;
const TIGHT_REPORTED: usize = 10;

fn lower(x: &[f64], y: &[f64]) -> Option<LinearBound> {
    lower_envelope(x, y, ENVELOPE_BINS).map(|(slope, offset)| LinearBound { slope, offset })
}

/// Envelope fits of `φ(κ_θ(γ))` against the cusp distance and the
/// symmetric-space displacement, over ball elements reached in the graph.
pub fn distance_phi_comparison(
    ball: &BallEnumeration,
    table: &[CartanVector],
    phi: &Functional,
    theta: &RootSubset,
    graph_distance: &[u32],
) -> Result<DistanceComparison> {
    phi.require_support(theta)?;
    if table.len() != ball.len() || graph_distance.len() != ball.len() {
        return Err(LabError::DimensionMismatch("tables must cover the ball".into()));
    }
    let keep: Vec<usize> = (0..ball.len()).filter(|&i| graph_distance[i] != UNREACHABLE).collect();
    let y: Vec<f64> = keep.iter().map(|&i| phi.eval(&table[i])).collect();
    let dx: Vec<f64> = keep.iter().map(|&i| graph_distance[i] as f64).collect();
    let dm: Vec<f64> = keep
        .iter()
        .map(|&i| std::f64::consts::SQRT_2 * table[i].norm())
        .collect();
    let graph_lower = lower(&dx, &y);
    let symmetric_lower = lower(&dm, &y);
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let symmetric_upper = lower(&dm, &neg).map(|b| LinearBound {
        slope: -b.slope,
        offset: b.offset,
    });
    let mut tight = Vec::new();
    if let Some(b) = &graph_lower {
        let mut order: Vec<(f64, usize)> = (0..keep.len())
            .map(|k| (y[k] - (b.slope * dx[k] - b.offset), k))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(slack, k) in order.iter().take(TIGHT_REPORTED) {
            tight.push(TightElement {
                word: ball.word(keep[k]).display(ball.presentation()),
                distance: dx[k],
                phi: y[k],
                slack,
            });
        }
    }
    Ok(DistanceComparison {
        graph_lower,
        symmetric_lower,
        symmetric_upper,
        tight,
        samples: keep.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeripheralGrowth {
    /// `(n, d_X(υⁿ, id), φ(κ_θ(υⁿ)))` for `n = −N..=N`.
    pub points: Vec<(i64, u32, f64)>,
    pub fit: Option<LinearBound>,
    /// Why no fit was produced.
    pub degenerate: Option<String>,
    pub all_above: bool,
}

/// `φ(κ_θ(υⁿ)) ≥ c₁·d_X(υⁿ, id) − C₁` along a cyclic peripheral `⟨υ⟩`,
/// with `d_X` measured in the combinatorial horoball over `⟨υ⟩`.
pub fn peripheral_growth_check(
    generator: &GroupElement,
    n: usize,
    phi: &Functional,
    theta: &RootSubset,
) -> Result<PeripheralGrowth> {
    phi.require_support(theta)?;
    let mut points = vec![(0i64, 0u32, 0.0)];
    if n == 0 {
        return Ok(PeripheralGrowth {
            points,
            fit: None,
            degenerate: Some("identity only".into()),
            all_above: true,
        });
    }
    let h = combinatorial_horoball(&AdjacencyGraph::path(2 * n + 1), default_max_level(n))?;
    let (dist, _) = bfs(&h, h.vertex(n, 1));
    let plus = cartan_power_sequence(generator, n)?;
    let minus = cartan_power_sequence(&generator.inverse(), n)?;
    for k in 1..=n {
        points.push((k as i64, dist[h.vertex(n + k, 1)], phi.eval(&plus[k - 1])));
        points.push((-(k as i64), dist[h.vertex(n - k, 1)], phi.eval(&minus[k - 1])));
    }
    points.sort_by_key(|p| p.0);
    let x: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fit = lower(&x, &y);
    let all_above = fit
        .as_ref()
        .is_none_or(|b| x.iter().zip(&y).all(|(a, v)| *v >= b.slope * a - b.offset - 1e-9));
    Ok(PeripheralGrowth {
        degenerate: fit.is_none().then(|| "distances take a single value".into()),
        points,
        fit,
        all_above,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityBand {
    pub length: usize,
    pub geodesics: usize,
    /// Largest `‖κ_θ(γ) − κ_θ(η) − κ_θ(η⁻¹γ)‖` over interior `η`.
    pub max_residual: f64,
    /// Same with `φ` applied instead of the norm.
    pub max_phi_residual: f64,
}

/// Along the BFS geodesic from `id` to each ball element `γ`, compares
/// `κ_θ(γ)` with `κ_θ(η) + κ_θ(η⁻¹γ)` at the interior group vertices `η`.
pub fn geodesic_additivity_probe(
    graph: &CuspGraph,
    ball: &BallEnumeration,
    phi: &Functional,
    theta: &RootSubset,
) -> Result<Vec<AdditivityBand>> {
    phi.require_support(theta)?;
    if graph.ball_size() != ball.len() {
        return Err(LabError::DimensionMismatch("graph was built over a different ball".into()));
    }
    let elements = ball.map_elements(|_, g| g.clone())?;
    let kappa: Vec<CartanVector> = elements
        .par_iter()
        .map(|g| cartan_projection(g).map(|k| partial_projection(&k, theta)))
        .collect::<Result<_>>()?;
    let (_, parent) = bfs(graph, 0);
    let rows: Vec<(usize, f64, f64)> = (1..ball.len())
        .into_par_iter()
        .map(|t| -> Result<(usize, f64, f64)> {
            let mut worst = (0.0f64, 0.0f64);
            if let Some(path) = tree_path(&parent, 0, t) {
                for &eta in &path[1..path.len() - 1] {
                    if eta >= ball.len() {
                        continue;
                    }
                    let rest = elements[eta].inverse().compose(&elements[t])?;
                    let kr = partial_projection(&cartan_projection(&rest)?, theta);
                    let r = kappa[t].sub(&kappa[eta]).sub(&kr);
                    worst.0 = worst.0.max(r.norm());
                    worst.1 = worst.1.max(phi.eval(&r).abs());
                }
            }
            Ok((ball.length(t), worst.0, worst.1))
        })
        .collect::<Result<_>>()?;
    let mut bands: Vec<AdditivityBand> = (0..=ball.radius())
        .map(|length| AdditivityBand {
            length,
            geodesics: 0,
            max_residual: 0.0,
            max_phi_residual: 0.0,
        })
        .collect();
    for (l, r, pr) in rows {
        let b = &mut bands[l];
        b.geodesics += 1;
        b.max_residual = b.max_residual.max(r);
        b.max_phi_residual = b.max_phi_residual.max(pr);
    }
    bands.retain(|b| b.geodesics > 0);
    Ok(bands)
}

/// Seeded uniform sample of `k` distinct values in `0..n`, sorted.
pub fn sample_vertices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = sample(&mut rng, n, k).into_vec();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp::space::cusp_graph;
    use crate::group::{enumerate_ball, Generator, Presentation};

    #[test]
    fn tree_is_zero_hyperbolic() {
        // binary tree on 15 vertices
        let edges: Vec<_> = (1..15).map(|i| ((i - 1) / 2, i)).collect();
        let g = AdjacencyGraph::from_edges(15, &edges).unwrap();
        let all: Vec<usize> = (0..15).collect();
        let r = hyperbolicity_probe(&g, &all, 15, 2000, 1).unwrap();
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn twelve_cycle_defect() {
        let g = AdjacencyGraph::cycle(12);
        let all: Vec<usize> = (0..12).collect();
        let r = hyperbolicity_probe(&g, &all, 12, 1000, 1).unwrap();
        // exhaustive oracle
        let (d, _) = bfs(&g, 0);
        let dist = |a: usize, b: usize| d[(b + 12 - a) % 12];
        let mut best: f64 = 0.0;
        for a in 0..12 {
            for b in a + 1..12 {
                for c in b + 1..12 {
                    for e in c + 1..12 {
                        best = best.max(four_point_defect(dist, [a, b, c, e]));
                    }
                }
            }
        }
        assert_eq!(r.delta, best);
        assert_eq!(r.delta, 3.0);
    }

    #[test]
    fn too_few_quadruples() {
        let g = AdjacencyGraph::path(5);
        assert!(matches!(
            hyperbolicity_probe(&g, &[0, 1, 2, 3, 4], 5, 100, 0),
            Err(LabError::InsufficientData(_))
        ));
    }

    #[test]
    fn parabolic_growth_rate() {
        let u = GroupElement::from_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let a = Functional::root(&[2], 0, 1).unwrap();
        let theta = RootSubset::full(&[2]);
        let r = peripheral_growth_check(&u, 1024, &a, &theta).unwrap();
        let fit = r.fit.unwrap();
        assert!(r.all_above);
        assert!(fit.slope > 0.3 && fit.slope < 1.2, "{fit:?}");
        let id = peripheral_growth_check(&u, 0, &a, &theta).unwrap();
        assert!(id.fit.is_none() && id.degenerate.is_some());
    }

    #[test]
    fn diagonal_powers_are_additive() {
        let p = Presentation::free(vec![Generator {
            name: "h".into(),
            element: GroupElement::from_rows(2, &[4.0, 0.0, 0.0, 0.25]).unwrap(),
        }])
        .unwrap();
        let b = enumerate_ball(&p, 8).unwrap();
        let g = cusp_graph(&b, 3).unwrap();
        let a = Functional::root(&[2], 0, 1).unwrap();
        let theta = RootSubset::full(&[2]);
        let bands = geodesic_additivity_probe(&g, &b, &a, &theta).unwrap();
        assert!(bands.iter().all(|x| x.max_residual < 1e-12));
        let table = crate::poincare::cartan_table(&b).unwrap();
        let cmp = distance_phi_comparison(&b, &table, &a, &theta, &g.distances_to_identity()).unwrap();
        let lower = cmp.graph_lower.unwrap();
        assert!((lower.slope - 2.0 * 4f64.ln()).abs() < 1e-9 && lower.offset.abs() < 1e-9);
    }
}
