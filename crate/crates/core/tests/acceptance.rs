//! Acceptance criteria A1–A13. Runs as a plain binary and prints one line
//! per criterion; exits non-zero when a criterion fails that is not a
//! recorded expected failure.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anosov_lab::config::{ExperimentConfig, Format};
use anosov_lab::cusp::{bfs, combinatorial_horoball, AdjacencyGraph, Graph};
use anosov_lab::group::cartan_power_sequence;
use anosov_lab::integrals::{
    elementary, integral_critical_exponent, poly, series_integral_sandwich, unipotent_log_bound, LogBoundOptions,
    RationalProduct, ShellOptions, BISECTION_STEPS,
};
use anosov_lab::lie::{
    cartan_projection, iwasawa_cocycle, opposition_involution, partial_cartan, simple_root, Functional, GroupElement,
    RootSubset,
};
use anosov_lab::limit::{random_flags, sine_bound};
use anosov_lab::linalg::Mat;
use anosov_lab::output::Outcome;
use anosov_lab::poincare::{counting_exponent, phi_counts_cyclic, WindowPolicy};
use anosov_lab::run::{run, Command, RunOptions};
use anosov_lab::stats::linear_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const A1_SAMPLES: usize = 1000;
const A1_TOL: f64 = 1e-8;
const A1_TIME: Duration = Duration::from_secs(5);
const A2_PAIRS: usize = 1000;
const A2_TOL: f64 = 1e-8;
const A3_MAX_DISTANCE: usize = 1024;
const A3_TOL: f64 = 4.0;
const A3_TIME: Duration = Duration::from_secs(10);
const A4_POWERS: usize = 100_000;
const A4_TOL: f64 = 0.05;
const A4_TIME: Duration = Duration::from_secs(10);
const A5_TIME: Duration = Duration::from_secs(30);
const A6_MAX_POWER: usize = 10_000;
const A6_SLOPE_TOL: f64 = 0.2;
const A6_RATE_REL_TOL: f64 = 0.1;
const A7_MAX_RADIUS: usize = 14;
const A7_TOL: f64 = 0.05;
const A7_MIN_GAP: f64 = 0.03;
const A7_TIME: Duration = Duration::from_secs(120);
const A8_RADIUS: usize = 13;
const A8_MIN_DELTA: f64 = 0.8;
const A9_EPSILON: f64 = 0.1;
const A9_BANDS: (usize, usize) = (4, 8);
const A9_SLACK: f64 = 0.1;
const A10_MASS_TOL: f64 = 1e-12;
const A11_FIT_RADIUS: f64 = 10.0;
const A11_TEST_RADIUS: f64 = 1e4;
const A12_S: [f64; 4] = [0.6, 0.8, 1.0, 1.5];
const A12_MAX_A: f64 = 10.0;
const A12_LATTICE_RADIUS: u32 = 1000;
const A13_THREADS: [usize; 3] = [1, 2, 8];

/// Criteria known not to hold; see the project notes for the analysis.
const EXPECTED_FAILURES: [&str; 1] = ["A9-monotone"];

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn gallery(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("gallery").join(name);
    ExperimentConfig::load(&path).expect("gallery config")
}

fn report(cfg: &ExperimentConfig) -> Outcome {
    run(Command::Report, cfg, &RunOptions::default()).expect("report")
}

fn metric(o: &Outcome, name: &str) -> f64 {
    *o.metrics.get(name).unwrap_or_else(|| panic!("metric {name} missing"))
}

fn random_element(rng: &mut ChaCha8Rng, d: usize) -> GroupElement {
    let mut m = Mat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
    if m.determinant() < 0.0 {
        m.row_mut(0).neg_mut();
    }
    GroupElement::normalized(vec![m], vec![false]).unwrap()
}

fn a1() -> Vec<Verdict> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let theta3 = RootSubset::full(&[3]);
    let flags = random_flags(&theta3, A1_SAMPLES, 2).unwrap();
    let theta4 = RootSubset::from_lists(&[4], &[vec![1, 3]]).unwrap();
    let phi = Functional::from_weights(&[4], [((0, 1), 1.0), ((0, 3), 2.0)]).unwrap();
    let (mut inv, mut lip, mut coc, mut part, mut bar) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for f in &flags {
        let (g, h) = (random_element(&mut rng, 3), random_element(&mut rng, 3));
        let kg = cartan_projection(&g).unwrap();
        inv = inv.max(opposition_involution(&kg).sub(&cartan_projection(&g.inverse()).unwrap()).norm());
        let gh = &g * &h;
        let kh = cartan_projection(&h).unwrap();
        lip = lip.max(cartan_projection(&gh).unwrap().sub(&kh).norm() - kg.norm());
        let lhs = iwasawa_cocycle(&gh, f);
        let rhs = iwasawa_cocycle(&g, &f.act(&h)).add(&iwasawa_cocycle(&h, f));
        coc = coc.max(lhs.sub(&rhs).norm());
        let g4 = random_element(&mut rng, 4);
        let k4 = cartan_projection(&g4).unwrap();
        part = part.max((phi.eval(&partial_cartan(&g4, &theta4).unwrap()) - phi.eval(&k4)).abs());
        bar = bar.max((phi.bar().eval(&k4) - phi.eval(&cartan_projection(&g4.inverse()).unwrap())).abs());
    }
    let t = start.elapsed();
    let ok = |x: f64| x <= A1_TOL;
    vec![Verdict {
        id: "A1",
        pass: ok(inv) && ok(lip) && ok(coc) && ok(part) && ok(bar) && t < A1_TIME,
        detail: format!(
            "{A1_SAMPLES} samples: inverse {inv:.1e}, Lipschitz excess {lip:.1e}, cocycle {coc:.1e}, \
             partial {part:.1e}, bar {bar:.1e} (tol {A1_TOL:.0e}); {:.2} s",
            t.as_secs_f64()
        ),
    }]
}

fn a2() -> Vec<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..A2_PAIRS {
        let (g, h) = (random_element(&mut rng, 3), random_element(&mut rng, 3));
        let b = sine_bound(&g.blocks()[0], &h.blocks()[0]).unwrap();
        worst = worst.max(b.excess).max(b.log_sin - b.excess);
    }
    vec![Verdict {
        id: "A2",
        pass: worst <= A2_TOL,
        detail: format!("{A2_PAIRS} pairs, worst violation {worst:.2e} (tol {A2_TOL:.0e})"),
    }]
}

/// Horoball over a path built edge by edge from the definition.
fn explicit_horoball(n: usize, levels: usize) -> AdjacencyGraph {
    let id = |v: usize, l: usize| (l - 1) * n + v;
    let mut edges = Vec::new();
    for l in 1..=levels {
        let reach = 1usize << (l - 1);
        for v in 0..n {
            if l < levels {
                edges.push((id(v, l), id(v, l + 1)));
            }
            for w in v + 1..n.min(v + reach + 1) {
                edges.push((id(v, l), id(w, l)));
            }
        }
    }
    AdjacencyGraph::from_edges(n * levels, &edges).unwrap()
}

fn a3() -> Vec<Verdict> {
    let start = Instant::now();
    let n = A3_MAX_DISTANCE + 1;
    let levels = 12;
    let h = combinatorial_horoball(&AdjacencyGraph::path(n), levels).unwrap();
    let (d, _) = bfs(&h, h.vertex(0, 1));
    let oracle = explicit_horoball(n, levels);
    let (d_ref, _) = bfs(&oracle, 0);
    let mut worst = 0.0f64;
    let mut agree = h.vertex_count() == oracle.vertex_count();
    for w in 2..=A3_MAX_DISTANCE {
        let x = d[h.vertex(w, 1)];
        agree &= x == d_ref[w];
        worst = worst.max((x as f64 - 2.0 * (w as f64).log2()).abs());
    }
    let t = start.elapsed();
    vec![Verdict {
        id: "A3",
        pass: agree && worst <= A3_TOL && t < A3_TIME,
        detail: format!(
            "d_Y in 2..={A3_MAX_DISTANCE}: max |d − 2 log₂ d_Y| = {worst:.3} (tol {A3_TOL}), \
             explicit-graph BFS agrees: {agree}; {:.2} s",
            t.as_secs_f64()
        ),
    }]
}

fn a4() -> Vec<Verdict> {
    let start = Instant::now();
    let u = GroupElement::new(vec![Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])], vec![true]).unwrap();
    let alpha = Functional::root(&[2], 0, 1).unwrap();
    let sample = phi_counts_cyclic(&u, A4_POWERS, &alpha, &RootSubset::full(&[2])).unwrap();
    let e = counting_exponent(&sample, WindowPolicy::default()).unwrap();
    let t = start.elapsed();
    vec![Verdict {
        id: "A4",
        pass: (e.value - 0.5).abs() <= A4_TOL && t < A4_TIME,
        detail: format!(
            "δ̂ = {:.4} ± {:.4} from {A4_POWERS} powers (target 0.5 ± {A4_TOL}); {:.2} s",
            e.value,
            e.stderr,
            t.as_secs_f64()
        ),
    }]
}

fn a5() -> Vec<Verdict> {
    let x2 = RationalProduct::polynomial(poly(1, &[(1.0, &[0]), (1.0, &[2])]), 1.0).unwrap();
    let r2 = RationalProduct::polynomial(poly(2, &[(1.0, &[0, 0]), (1.0, &[2, 0]), (1.0, &[0, 2])]), 1.0).unwrap();
    let x = RationalProduct::polynomial(poly(2, &[(1.0, &[0, 0]), (1.0, &[2, 0])]), 1.0).unwrap();
    let y = RationalProduct::polynomial(poly(2, &[(1.0, &[0, 0]), (1.0, &[0, 2])]), 1.0).unwrap();
    let cases = [
        ("1+x²", x2, 0.5, 0.03),
        ("1+x²+y²", r2, 1.0, 0.05),
        ("(1+x²)(1+y²)", x.times(&y).unwrap(), 0.5, 0.05),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, r, target, tol) in cases {
        let start = Instant::now();
        let e = integral_critical_exponent(&r, &ShellOptions::default(), BISECTION_STEPS).unwrap();
        let t = start.elapsed();
        pass &= (e.value - target).abs() <= tol && t < A5_TIME;
        parts.push(format!("δ({name}) = {:.4} (target {target} ± {tol}, {:.1} s)", e.value, t.as_secs_f64()));
    }
    vec![Verdict {
        id: "A5",
        pass,
        detail: parts.join("; "),
    }]
}

fn a6() -> Vec<Verdict> {
    let cfg = gallery("g4_product.toml");
    let g = cfg.presentation().unwrap().generators()[0].element.clone();
    let seq = cartan_power_sequence(&g, A6_MAX_POWER).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = (1..=A6_MAX_POWER)
        .map(|n| ((n as f64).ln(), simple_root(&seq[n - 1], 0, 1).unwrap()))
        .unzip();
    let slope = linear_fit(&x, &y).unwrap().slope;
    let rate = std::f64::consts::SQRT_2 * seq[A6_MAX_POWER - 1].norm() / A6_MAX_POWER as f64;
    let target = 2.0 * 2f64.ln();
    let out = report(&cfg);
    let (c1, c3) = (metric(&out, "condition_1"), metric(&out, "condition_3"));
    vec![Verdict {
        id: "A6",
        pass: (slope - 2.0).abs() <= A6_SLOPE_TOL
            && (rate - target).abs() <= A6_RATE_REL_TOL * target
            && c1 == 1.0
            && c3 == 0.0,
        detail: format!(
            "α₁ slope in log n = {slope:.4} (2 ± {A6_SLOPE_TOL}), d_M/n = {rate:.4} (2 log 2 ± 10%), \
             condition (1) {c1}, condition (3) {c3}"
        ),
    }]
}

fn a7() -> Vec<Verdict> {
    let start = Instant::now();
    let cfg = gallery("g2_cusped_schottky.toml");
    let out = report(&cfg);
    let t = start.elapsed();
    let (dp, gap) = (metric(&out, "delta_peripheral"), metric(&out, "entropy_gap"));
    vec![Verdict {
        id: "A7",
        pass: cfg.radius <= A7_MAX_RADIUS && (dp - 0.5).abs() <= A7_TOL && gap >= A7_MIN_GAP && t < A7_TIME,
        detail: format!(
            "radius {}: δ̂(⟨u⟩) = {dp:.4} (0.5 ± {A7_TOL}), gap {gap:.4} (≥ {A7_MIN_GAP}); {:.1} s",
            cfg.radius,
            t.as_secs_f64()
        ),
    }]
}

fn a8() -> Vec<Verdict> {
    let cfg = gallery("g3_lattice.toml");
    let out = report(&cfg);
    let sweep = out.table("radius_sweep").unwrap();
    let values: Vec<f64> = sweep.rows.iter().map(|r| r[1].as_f64().unwrap()).collect();
    let delta = metric(&out, "delta");
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    vec![Verdict {
        id: "A8",
        pass: cfg.radius == A8_RADIUS && delta >= A8_MIN_DELTA && monotone,
        detail: format!(
            "radius {}: δ̂ = {delta:.4} (≥ {A8_MIN_DELTA}); sweep {:?} nondecreasing: {monotone}",
            cfg.radius,
            values.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    }]
}

fn a9_a10() -> Vec<Verdict> {
    let cfg = gallery("g5_schottky_sl3.toml");
    assert_eq!(cfg.report.epsilon, A9_EPSILON);
    let out = report(&cfg);
    let bands = out.table("multiplicative").unwrap();
    let sups: Vec<(u64, f64)> = bands
        .rows
        .iter()
        .map(|r| (r[0].as_u64().unwrap(), r[3].as_f64().unwrap()))
        .collect();
    let covered = sups.first().map(|s| s.0) == Some(A9_BANDS.0 as u64) && sups.last().map(|s| s.0) == Some(A9_BANDS.1 as u64);
    let band4 = sups[0].1;
    let bounded = sups.iter().all(|&(_, s)| s <= band4 + A9_SLACK);
    let max_step = sups.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    let listing = sups.iter().map(|(k, s)| format!("{k}:{s:.7}")).collect::<Vec<_>>().join(" ");
    let mass = metric(&out, "measure_mass");
    let (short, long) = (metric(&out, "residual_median_short"), metric(&out, "residual_median_long"));
    vec![
        Verdict {
            id: "A9-bound",
            pass: covered && bounded,
            detail: format!("ε = {A9_EPSILON}, sup by band {listing}; all ≤ band 4 + {A9_SLACK}"),
        },
        Verdict {
            id: "A9-monotone",
            pass: covered && max_step <= 0.0,
            detail: format!("largest band-to-band increase {max_step:.2e} (must be ≤ 0)"),
        },
        Verdict {
            id: "A10",
            pass: (mass - 1.0).abs() <= A10_MASS_TOL && long < short,
            detail: format!(
                "mass − 1 = {:.1e} (tol {A10_MASS_TOL:.0e}); residual median lengths 6–8 {long:.2e} < lengths 2–4 {short:.2e}",
                mass - 1.0
            ),
        },
    ]
}

fn a11() -> Vec<Verdict> {
    let basis = vec![elementary(3, 0, 1), elementary(3, 1, 2), elementary(3, 0, 2)];
    let opts = LogBoundOptions {
        fit_radius: A11_FIT_RADIUS,
        test_radius: A11_TEST_RADIUS,
        ..Default::default()
    };
    let r = unipotent_log_bound(&basis, &opts).unwrap();
    vec![Verdict {
        id: "A11",
        pass: r.violations.is_empty() && r.tested > 0,
        detail: format!(
            "C = {:.4} fitted on ‖Y‖ ≤ {A11_FIT_RADIUS} ({} samples); {} samples up to ‖Y‖ = {A11_TEST_RADIUS:.0e}, \
             {} violations, worst excess {:.3e}",
            r.constant,
            r.fit_samples,
            r.tested,
            r.violations.len(),
            r.worst_excess
        ),
    }]
}

fn a12() -> Vec<Verdict> {
    // φ = 2ω₁, so e^{−sφ(κ(uᵗ))} = σ₁(uᵗ)^{−2s} against ∫ (2 + t²)^{−s} dt
    let t = series_integral_sandwich(
        &[elementary(2, 0, 1)],
        &[2.0],
        A12_LATTICE_RADIUS,
        &A12_S,
        &ShellOptions::default(),
    )
    .unwrap();
    let ratios = t.rows.iter().map(|r| format!("s={}:{:.4}", r.s, r.ratio)).collect::<Vec<_>>().join(" ");
    vec![Verdict {
        id: "A12",
        pass: t.a_hat <= A12_MAX_A,
        detail: format!("ratios {ratios}; Â = {:.4} (≤ {A12_MAX_A})", t.a_hat),
    }]
}

fn a13() -> Vec<Verdict> {
    let mut outputs = Vec::new();
    for name in ["g4_product.toml", "g5_schottky_sl3.toml"] {
        let cfg = gallery(name);
        for threads in A13_THREADS {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let out = pool.install(|| report(&cfg));
            let dir = tempfile::tempdir().unwrap();
            let mut bytes = out.to_json().unwrap().into_bytes();
            for p in out.write(dir.path(), Format::Csv).unwrap() {
                bytes.extend(std::fs::read(p).unwrap());
            }
            outputs.push((name, threads, bytes));
        }
    }
    let identical = outputs
        .chunks(A13_THREADS.len())
        .all(|c| c.iter().all(|(_, _, b)| *b == c[0].2));
    vec![Verdict {
        id: "A13",
        pass: identical,
        detail: format!(
            "report on G4 and G5 with {:?} threads: JSON and CSV bytes identical: {identical}",
            A13_THREADS
        ),
    }]
}

fn main() {
    let criteria: [fn() -> Vec<Verdict>; 12] = [a1, a2, a3, a4, a5, a6, a7, a8, a9_a10, a11, a12, a13];
    let mut unexpected = 0;
    for c in criteria {
        for v in c() {
            let expected_fail = EXPECTED_FAILURES.contains(&v.id);
            let tag = match (v.pass, expected_fail) {
                (true, false) => "PASS",
                (false, false) => {
                    unexpected += 1;
                    "FAIL"
                }
                (false, true) => "FAIL (expected)",
                (true, true) => {
                    unexpected += 1;
                    "XPASS"
                }
            };
            println!("{:<12} {tag:<16} {}", v.id, v.detail);
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria did not behave as recorded");
        std::process::exit(1);
    }
}
