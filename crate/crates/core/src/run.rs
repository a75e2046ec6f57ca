//! Subcommands and report analyses: each one reads a config, calls the
//! library and fills an [`Outcome`] with named metrics and tables.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::config::{Analysis, ExperimentConfig};
use crate::cusp::{cusp_graph, default_max_level, distance_phi_comparison, hyperbolicity_probe, Graph};
use crate::error::{LabError, Result};
use crate::group::{
    cartan_power_sequence, configured_budget, enumerate_ball_with_budget, faithfulness_audit, ping_pong_certificate,
    BallEnumeration, Presentation, DEFAULT_COLLISION_TOLERANCE,
};
use crate::integrals::{integral_critical_exponent, shell_integrals, ShellOptions};
use crate::lie::{simple_root, CartanVector, Functional, GroupElement, RootSubset, DEFAULT_GAP_TOLERANCE};
use crate::limit::{
    functional_positivity_check, limit_cone_sample, limit_set_sample, multiplicative_probe, transversality_audit,
    AuditOptions, MultiplicativeOptions,
};
use crate::output::{number, Check, Outcome, Table};
use crate::poincare::{
    band_median, cartan_table, counting_exponent, entropy_gap_report, finiteness_audit, measure_from_sample,
    phi_counts_cyclic, phi_counts_with_flags, poincare_by_radius, ps_residual, radius_sweep, sample_from_table,
    EntropyGapOptions, ExponentEstimate, PhiSample, WindowPolicy,
};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Group,
    Kappa,
    Exponent,
    Poincare,
    Measure,
    Cusp,
    Integral,
    Cone,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Group => "group",
            Command::Kappa => "kappa",
            Command::Exponent => "exponent",
            Command::Poincare => "poincare",
            Command::Measure => "measure",
            Command::Cusp => "cusp",
            Command::Integral => "integral",
            Command::Cone => "cone",
            Command::Report => "report",
        }
    }
}

/// Command-line overrides of config values.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub radius: Option<usize>,
    pub seed: Option<u64>,
    pub phi: Option<String>,
}

/// Sweep radii below the configured one.
const SWEEP_SPAN: usize = 4;
/// Word-length bands of the residual comparison.
const RESIDUAL_SHORT: (usize, usize) = (2, 4);
const RESIDUAL_LONG: (usize, usize) = (6, 8);
const MULTIPLICATIVE_BANDS: (usize, usize) = (4, 8);
/// Powers below this are left out of the log-slope fit.
const POWER_FIT_START: usize = 10;
/// Offsets from `δ̂` at which partial sums are traced.
const POINCARE_OFFSETS: [f64; 5] = [-0.2, -0.1, 0.0, 0.1, 0.2];

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    presentation: Presentation,
    theta: RootSubset,
    radius: usize,
    seed: u64,
    phi_override: Option<String>,
    ball: Option<BallEnumeration>,
    table: Option<Vec<CartanVector>>,
    delta: Option<ExponentEstimate>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig, opts: &RunOptions) -> Result<Self> {
        Ok(Self {
            presentation: cfg.presentation()?,
            theta: cfg.theta_subset()?,
            radius: opts.radius.unwrap_or(cfg.radius),
            seed: opts.seed.unwrap_or(cfg.seed),
            phi_override: opts.phi.clone(),
            cfg,
            ball: None,
            table: None,
            delta: None,
        })
    }

    fn budget(&self) -> u64 {
        self.cfg.budgets.enumeration.unwrap_or_else(configured_budget)
    }

    fn ball(&mut self) -> Result<&BallEnumeration> {
        if self.ball.is_none() {
            self.ball = Some(enumerate_ball_with_budget(&self.presentation, self.radius, self.budget())?);
        }
        Ok(self.ball.as_ref().expect("ball was just built"))
    }

    fn table(&mut self) -> Result<&[CartanVector]> {
        if self.table.is_none() {
            let t = cartan_table(self.ball()?)?;
            self.table = Some(t);
        }
        Ok(self.table.as_deref().expect("table was just built"))
    }

    fn phi(&self) -> Result<(String, Functional)> {
        self.cfg.select_functional(self.phi_override.as_deref())
    }

    /// Generator of a cyclic group, whose orbit is sampled by powers.
    fn cyclic(&self) -> Option<&GroupElement> {
        let p = &self.presentation;
        (p.generator_count() == 1 && p.orders()[0].is_none()).then(|| &p.generators()[0].element)
    }

    fn sample(&mut self, phi: &Functional) -> Result<PhiSample> {
        if let Some(g) = self.cyclic() {
            return phi_counts_cyclic(&g.clone(), self.cfg.budgets.powers, phi, &self.theta.clone());
        }
        self.table()?;
        let ball = self.ball.as_ref().expect("ball is built with the table");
        Ok(sample_from_table(ball, self.table.as_ref().expect("table was built"), phi))
    }

    /// `δ̂` of the selected functional, computed once.
    fn delta(&mut self) -> Result<ExponentEstimate> {
        if let Some(d) = &self.delta {
            return Ok(d.clone());
        }
        let (_, phi) = self.phi()?;
        let d = counting_exponent(&self.sample(&phi)?, WindowPolicy::default())?;
        self.delta = Some(d.clone());
        Ok(d)
    }
}

fn row(values: impl IntoIterator<Item = Value>) -> Vec<Value> {
    values.into_iter().collect()
}

fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

fn flag_value(coords: &[f64]) -> Value {
    Value::Array(coords.iter().map(|&x| number(x)).collect())
}

fn analyses(cmd: Command, cfg: &ExperimentConfig) -> Vec<Analysis> {
    match cmd {
        Command::Group => vec![Analysis::Group],
        Command::Exponent => vec![Analysis::Exponent],
        Command::Measure => vec![Analysis::Measure, Analysis::Residual],
        Command::Cusp => vec![Analysis::Cusp],
        Command::Integral => vec![Analysis::Integral],
        Command::Cone => vec![Analysis::Cone],
        Command::Report => cfg.report.analyses.clone(),
        Command::Kappa | Command::Poincare => Vec::new(),
    }
}

/// Runs one subcommand. Expectations in the config are checked against
/// the metrics it produced; `report` also flags expected metrics it did
/// not produce.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let mut ctx = Context::new(cfg, opts)?;
    let mut out = Outcome {
        command: cmd.name().into(),
        experiment: cfg.name.clone(),
        radius: ctx.radius,
        seed: ctx.seed,
        ..Default::default()
    };
    match cmd {
        Command::Kappa => kappa(&mut ctx, &mut out)?,
        Command::Poincare => poincare(&mut ctx, &mut out)?,
        _ => {}
    }
    for a in analyses(cmd, cfg) {
        analysis(a, &mut ctx, &mut out)?;
    }
    out.checks = checks(&cfg.expected, &out.metrics, cmd == Command::Report);
    if !out.checks.is_empty() {
        let failed = out.checks.iter().filter(|c| !c.pass).count();
        out.metric("checks_failed", failed as f64);
    }
    Ok(out)
}

fn checks(
    expected: &BTreeMap<String, crate::config::Expectation>,
    metrics: &BTreeMap<String, f64>,
    require_all: bool,
) -> Vec<Check> {
    expected
        .iter()
        .filter(|(k, _)| require_all || metrics.contains_key(*k))
        .map(|(k, e)| {
            let observed = metrics.get(k).copied();
            Check {
                metric: k.clone(),
                expected: e.clone(),
                pass: observed.is_some_and(|x| e.accepts(x)),
                observed,
            }
        })
        .collect()
}

fn analysis(a: Analysis, ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    match a {
        Analysis::Group => group(ctx, out),
        Analysis::Exponent => exponent(ctx, out),
        Analysis::EntropyGap => entropy_gap(ctx, out),
        Analysis::RadiusSweep => sweep(ctx, out),
        Analysis::Powers => powers(ctx, out),
        Analysis::Measure => measure(ctx, out),
        Analysis::Residual => residual(ctx, out),
        Analysis::Multiplicative => multiplicative(ctx, out),
        Analysis::LimitSet => limit_set(ctx, out),
        Analysis::Cone => cone(ctx, out),
        Analysis::Cusp => cusp(ctx, out),
        Analysis::Finiteness => finiteness(ctx, out),
        Analysis::Integral => integral(ctx, out),
    }
}

fn group(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let ball = ctx.ball()?;
    out.metric("ball_size", ball.len() as f64);
    let mut spheres = Table::new("spheres", &["length", "count"]);
    for (k, c) in ball.sphere_counts().into_iter().enumerate() {
        spheres.push(row([Value::from(k), Value::from(c)]));
    }
    let audit = faithfulness_audit(ball, DEFAULT_COLLISION_TOLERANCE)?;
    out.metric("faithful", f64::from(u8::from(audit.is_faithful())));
    out.metric("distinct_elements", audit.distinct_elements as f64);
    let mut collisions = Table::new("collisions", &["first", "second"]);
    for c in &audit.collisions {
        collisions.push(row([text(&c.first_word), text(&c.second_word)]));
    }
    out.tables.push(spheres);
    out.tables.push(collisions);
    if let Some(domains) = ctx.cfg.pingpong()? {
        let cert = ping_pong_certificate(&ctx.presentation, &domains)?;
        out.metric("pingpong_certified", f64::from(u8::from(cert.certified)));
        out.metric("pingpong_worst_excess", cert.worst_excess);
        if !cert.failures.is_empty() {
            out.note("pingpong_failures", cert.failures.join("; "));
        }
    }
    Ok(())
}

fn estimate_row(name: &str, e: &ExponentEstimate) -> Vec<Value> {
    row([
        text(name),
        number(e.value),
        number(e.stderr),
        number(e.window.0),
        number(e.window.1),
        Value::from(e.sample_count),
        text(&e.method),
    ])
}

const ESTIMATE_COLUMNS: [&str; 7] = ["functional", "delta", "stderr", "window_lo", "window_hi", "samples", "method"];

/// `δ̂` for every configured functional; `delta` is the selected one.
fn exponent(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let mut t = Table::new("exponents", &ESTIMATE_COLUMNS);
    let names: Vec<String> = ctx.cfg.functionals.keys().cloned().collect();
    let selected = ctx.phi().ok().map(|(n, _)| n);
    for name in names {
        if ctx.phi_override.as_ref().is_some_and(|p| *p != name) {
            continue;
        }
        let phi = ctx.cfg.functional(&name)?;
        let e = counting_exponent(&ctx.sample(&phi)?, WindowPolicy::default())?;
        out.metric(&format!("delta_{name}"), e.value);
        if selected.as_deref() == Some(name.as_str()) {
            out.metric("delta", e.value);
            out.metric("delta_stderr", e.stderr);
            ctx.delta = Some(e.clone());
        }
        t.push(estimate_row(&name, &e));
    }
    if let Some(n) = selected {
        out.note("phi", n);
    }
    out.tables.push(t);
    Ok(())
}

fn entropy_gap(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let peripherals: Vec<String> = ctx.presentation.peripherals().iter().map(|p| p.name.clone()).collect();
    if peripherals.is_empty() {
        return Err(LabError::Config("entropy_gap needs a peripheral subgroup".into()));
    }
    let opts = EntropyGapOptions {
        peripheral_powers: ctx.cfg.budgets.powers,
        peripheral_radius: ctx.cfg.budgets.peripheral_radius,
        policy: WindowPolicy::default(),
    };
    let theta = ctx.theta.clone();
    let ball = ctx.ball()?;
    let mut t = Table::new("entropy_gap", &["peripheral", "delta_group", "delta_peripheral", "gap", "gap_stderr"]);
    let mut min_gap = f64::INFINITY;
    for (k, name) in peripherals.iter().enumerate() {
        let r = entropy_gap_report(ball, name, &phi, &theta, opts)?;
        if k == 0 {
            out.metric("delta_group", r.gamma.value);
            out.metric("delta_peripheral", r.subgroup.value);
            out.metric("delta_peripheral_stderr", r.subgroup.stderr);
        }
        min_gap = min_gap.min(r.gap);
        t.push(row([
            text(name),
            number(r.gamma.value),
            number(r.subgroup.value),
            number(r.gap),
            number(r.gap_stderr),
        ]));
    }
    out.metric("entropy_gap", min_gap);
    out.tables.push(t);
    Ok(())
}

/// Exponents of the balls of radius `R − 4 ..= R`, fitted on the window
/// of the full ball.
fn sweep(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let sample = ctx.sample(&phi)?;
    let r = sample.max_length();
    let radii: Vec<u32> = (r.saturating_sub(SWEEP_SPAN as u32).max(1)..=r).collect();
    let rows = radius_sweep(&sample, &radii, WindowPolicy::default())?;
    let mut t = Table::new("radius_sweep", &["radius", "delta", "stderr", "samples"]);
    for (radius, e) in &rows {
        t.push(row([Value::from(*radius), number(e.value), number(e.stderr), Value::from(e.sample_count)]));
    }
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        out.metric("sweep_first", first.1.value);
        out.metric("sweep_last", last.1.value);
    }
    let min_step = rows
        .windows(2)
        .map(|w| w[1].1.value - w[0].1.value)
        .fold(f64::INFINITY, f64::min);
    if min_step.is_finite() {
        out.metric("sweep_min_step", min_step);
    }
    out.tables.push(t);
    Ok(())
}

/// `α₁` of the first factor and `d_M/n` along powers of the first
/// generator, at log-spaced `n`.
fn powers(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let g = ctx.presentation.generators()[0].element.clone();
    let n_max = ctx.cfg.budgets.powers.max(1);
    let seq = cartan_power_sequence(&g, n_max)?;
    let mut ns: Vec<usize> = (0..=(n_max as f64).log10().floor() as usize * 10)
        .map(|i| 10f64.powf(i as f64 / 10.0).round() as usize)
        .filter(|&n| n <= n_max)
        .collect();
    ns.push(n_max);
    ns.dedup();
    let mut t = Table::new("powers", &["n", "alpha_1", "displacement", "displacement_per_n"]);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &n in &ns {
        let k = &seq[n - 1];
        let a1 = simple_root(k, 0, 1)?;
        let dm = std::f64::consts::SQRT_2 * k.norm();
        if n >= POWER_FIT_START {
            x.push((n as f64).ln());
            y.push(a1);
        }
        t.push(row([Value::from(n), number(a1), number(dm), number(dm / n as f64)]));
    }
    if let Some(fit) = linear_fit(&x, &y) {
        out.metric("power_log_slope", fit.slope);
    }
    let last = &seq[n_max - 1];
    out.metric("displacement_rate", std::f64::consts::SQRT_2 * last.norm() / n_max as f64);
    out.tables.push(t);
    Ok(())
}

/// Patterson atoms at `s₀ = δ̂ + 0.1` on the ball of radius
/// `min(R, report.measure_radius)`.
fn measure(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let s0 = ctx.delta()?.value + 0.1;
    let radius = ctx.radius.min(ctx.cfg.report.measure_radius);
    let ball = enumerate_ball_with_budget(&ctx.presentation, radius, ctx.budget())?;
    let sample = phi_counts_with_flags(&ball, &phi, &ctx.theta, DEFAULT_GAP_TOLERANCE)?;
    let m = measure_from_sample(&sample, s0)?;
    out.metric("measure_s0", s0);
    out.metric("measure_mass", m.total_mass);
    out.metric("measure_atoms", m.atoms.len() as f64);
    out.metric("measure_dropped_mass", m.dropped_mass);
    let mut t = Table::new("atoms", &["word", "length", "weight", "flag"]);
    for a in &m.atoms {
        t.push(row([
            text(ball.word(a.element).display(ball.presentation())),
            Value::from(ball.length(a.element)),
            number(a.weight),
            flag_value(&a.flag.coordinates()),
        ]));
    }
    out.tables.push(t);
    Ok(())
}

/// Cocycle residuals for `γ` the first generator.
fn residual(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let gamma = ctx.presentation.generators()[0].element.clone();
    let (epsilon, theta) = (ctx.cfg.report.epsilon, ctx.theta.clone());
    let ball = ctx.ball()?;
    let (report, raw) = ps_residual(ball, &phi, &theta, &gamma, epsilon, DEFAULT_GAP_TOLERANCE)?;
    let short = band_median(&raw, RESIDUAL_SHORT.0, RESIDUAL_SHORT.1);
    let long = band_median(&raw, RESIDUAL_LONG.0, RESIDUAL_LONG.1);
    if let Some(s) = short {
        out.metric("residual_median_short", s);
    }
    if let Some(l) = long {
        out.metric("residual_median_long", l);
    }
    if let (Some(s), Some(l)) = (short, long) {
        if s > 0.0 {
            out.metric("residual_decay", l / s);
        }
    }
    out.metric("residual_selected", report.selected as f64);
    let mut t = Table::new("residuals", &["length", "count", "median", "max"]);
    for b in &report.bands {
        t.push(row([Value::from(b.length), Value::from(b.count), number(b.median), number(b.max)]));
    }
    out.tables.push(t);
    Ok(())
}

fn multiplicative(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let opts = MultiplicativeOptions {
        epsilon: ctx.cfg.report.epsilon,
        pairs_per_band: ctx.cfg.budgets.pairs_per_band,
        seed: ctx.seed,
        ..Default::default()
    };
    let theta = ctx.theta.clone();
    let ball = ctx.ball()?;
    let hi = MULTIPLICATIVE_BANDS.1.min(ball.radius());
    let r = multiplicative_probe(ball, &theta, (MULTIPLICATIVE_BANDS.0, hi), &opts)?;
    let mut t = Table::new("multiplicative", &["length", "sampled", "selected", "sup", "median"]);
    let sups: Vec<f64> = r.bands.iter().filter_map(|b| b.sup_residual).collect();
    for b in &r.bands {
        t.push(row([
            Value::from(b.length),
            Value::from(b.sampled),
            Value::from(b.selected),
            b.sup_residual.map_or(Value::Null, number),
            b.median_residual.map_or(Value::Null, number),
        ]));
    }
    if let Some(&first) = sups.first() {
        out.metric("multiplicative_band4_sup", first);
        out.metric(
            "multiplicative_max_rise",
            sups.iter().map(|s| s - first).fold(f64::NEG_INFINITY, f64::max),
        );
    }
    if sups.len() >= 2 {
        let step = sups.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        out.metric("multiplicative_max_step", step);
    }
    out.metric("sine_checks", r.sine_checks as f64);
    out.metric("sine_violations", r.sine_violations as f64);
    out.tables.push(t);
    Ok(())
}

fn limit_set(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let theta = ctx.theta.clone();
    let opts = AuditOptions {
        pair_budget: ctx.cfg.budgets.pair_budget,
        seed: ctx.seed,
        ..Default::default()
    };
    let ball = ctx.ball()?;
    let sample = limit_set_sample(ball, &theta, DEFAULT_GAP_TOLERANCE)?;
    out.metric("limit_points", sample.len() as f64);
    let audit = transversality_audit(&sample, &opts)?;
    if let Some(m) = audit.min_margin {
        out.metric("transversality_min_margin", m);
    }
    if let Some(r) = audit.min_ratio {
        out.metric("transversality_min_ratio", r);
    }
    out.metric("transversality_audited", audit.audited as f64);
    let mut t = Table::new("limit_set", &["word", "length", "gap", "flag"]);
    for p in &sample.points {
        t.push(row([
            text(ball.word(p.index).display(ball.presentation())),
            Value::from(p.length),
            number(p.gap),
            flag_value(&p.flag.coordinates()),
        ]));
    }
    out.tables.push(t);
    Ok(())
}

fn cone(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let theta = ctx.theta.clone();
    let ball = ctx.ball()?;
    let sample = limit_cone_sample(ball, &theta, None)?;
    let pos = functional_positivity_check(&sample, &phi);
    out.metric("cone_directions", sample.len() as f64);
    if let Some(m) = pos.min {
        out.metric("cone_min", m);
    }
    let mut t = Table::new("cone", &["length", "min_phi"]);
    for (l, v) in &pos.per_length {
        t.push(row([Value::from(*l), number(*v)]));
    }
    out.tables.push(t);
    Ok(())
}

fn cusp(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let theta = ctx.theta.clone();
    let (seed, budgets) = (ctx.seed, ctx.cfg.budgets.clone());
    let max_level = ctx.cfg.max_level.unwrap_or_else(|| default_max_level(ctx.radius));
    ctx.table()?;
    let ball = ctx.ball.as_ref().expect("ball is built with the table");
    let table = ctx.table.as_ref().expect("table was built");
    let graph = cusp_graph(ball, max_level)?;
    out.metric("cusp_vertices", graph.vertex_count() as f64);
    out.metric("cusp_edges", graph.edge_count() as f64);
    out.metric("cusp_max_level", max_level as f64);
    let candidates: Vec<usize> = (0..ball.len()).collect();
    let hyp = hyperbolicity_probe(&graph, &candidates, budgets.sources, budgets.quadruples, seed)?;
    out.metric("hyperbolicity_delta", hyp.delta);
    let dist = graph.distances_to_identity();
    let cmp = distance_phi_comparison(ball, table, &phi, &theta, &dist)?;
    if let Some(b) = &cmp.graph_lower {
        out.metric("distance_lower_slope", b.slope);
        out.metric("distance_lower_offset", b.offset);
    }
    if let Some(b) = &cmp.symmetric_lower {
        out.metric("symmetric_lower_slope", b.slope);
    }
    let mut t = Table::new("distances", &["word", "length", "cusp_distance", "phi", "displacement"]);
    for (i, k) in table.iter().enumerate() {
        t.push(row([
            text(ball.word(i).display(ball.presentation())),
            Value::from(ball.length(i)),
            if dist[i] == crate::cusp::UNREACHABLE { Value::Null } else { Value::from(dist[i]) },
            number(phi.eval(k)),
            number(std::f64::consts::SQRT_2 * k.norm()),
        ]));
    }
    out.tables.push(t);
    let mut graph_text = Vec::new();
    graph.export(ball, &mut graph_text)?;
    out.attachments.push(("cusp_graph.txt".into(), graph_text));
    Ok(())
}

fn finiteness(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (_, phi) = ctx.phi()?;
    let theta = ctx.theta.clone();
    let has_peripherals = !ctx.presentation.peripherals().is_empty();
    let max_level = ctx.cfg.max_level.unwrap_or_else(|| default_max_level(ctx.radius));
    let ball = ctx.ball()?;
    let dx: Option<Vec<f64>> = if has_peripherals {
        let g = cusp_graph(ball, max_level)?;
        Some(g.distances_to_identity().into_iter().map(f64::from).collect())
    } else {
        None
    };
    let r = finiteness_audit(ball, &phi, &theta, dx.as_deref(), WindowPolicy::default())?;
    let mut t = Table::new("conditions", &["id", "name", "holds", "detail"]);
    for c in &r.conditions {
        if let Some(h) = c.holds {
            out.metric(&format!("condition_{}", c.id), f64::from(u8::from(h)));
        }
        t.push(row([Value::from(c.id), text(&c.name), c.holds.map_or(Value::Null, Value::from), text(&c.detail)]));
    }
    out.tables.push(t);
    Ok(())
}

fn integral(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let spec = ctx
        .cfg
        .integral
        .as_ref()
        .ok_or_else(|| LabError::Config("no [integral] section".into()))?;
    let opts = ShellOptions {
        r_max: spec.r_max,
        seed: ctx.seed,
        ..Default::default()
    };
    let e = integral_critical_exponent(&spec.product, &opts, spec.steps)?;
    out.metric("integral_delta", e.value);
    out.metric("integral_stderr", e.stderr);
    out.note("integral_method", e.method.clone());
    let mut t = Table::new("shells", &["s", "radius", "value", "error", "classification"]);
    for &s in &spec.s {
        let est = shell_integrals(&spec.product, s, &opts)?;
        for k in 0..est.radii.len() {
            t.push(row([
                number(s),
                number(est.radii[k]),
                number(est.values[k]),
                number(est.errors[k]),
                text(format!("{:?}", est.classification).to_lowercase()),
            ]));
        }
    }
    out.tables.push(t);
    Ok(())
}

/// Cartan projection of every ball element.
fn kappa(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let dims = ctx.presentation.dims();
    let mut columns: Vec<String> = vec!["word".into(), "length".into()];
    for (f, &d) in dims.iter().enumerate() {
        for j in 1..=d {
            columns.push(format!("kappa_{f}_{j}"));
        }
    }
    columns.push("displacement".into());
    ctx.table()?;
    let ball = ctx.ball.as_ref().expect("ball is built with the table");
    let table = ctx.table.as_ref().expect("table was built");
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("kappa", &refs);
    for (i, k) in table.iter().enumerate() {
        let mut r = vec![text(ball.word(i).display(ball.presentation())), Value::from(ball.length(i))];
        r.extend(k.coords().into_iter().map(number));
        r.push(number(std::f64::consts::SQRT_2 * k.norm()));
        t.push(r);
    }
    out.metric("rows", table.len() as f64);
    out.tables.push(t);
    Ok(())
}

/// Partial sums `Σ_{|γ| ≤ r} e^{−sφ}` by radius at `s` around `δ̂`.
fn poincare(ctx: &mut Context, out: &mut Outcome) -> Result<()> {
    let (name, phi) = ctx.phi()?;
    let sample = ctx.sample(&phi)?;
    let d = counting_exponent(&sample, WindowPolicy::default())?;
    out.metric("delta", d.value);
    out.note("phi", name);
    let mut t = Table::new("partial_sums", &["s", "radius", "partial_sum"]);
    for off in POINCARE_OFFSETS {
        let s = d.value + off;
        if s <= 0.0 {
            continue;
        }
        for (r, v) in poincare_by_radius(&sample, s) {
            t.push(row([number(s), Value::from(r), number(v)]));
        }
    }
    out.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIVIAL: &str = r#"
name = "trivial"
radius = 0
theta = [[1]]

[group]
kind = "free"
projective = [true]

[[group.generators]]
name = "t"
blocks = [[2.0, 0.0, 0.0, 0.5]]
"#;

    #[test]
    fn kappa_of_identity_ball() {
        let cfg = ExperimentConfig::from_toml_str(TRIVIAL).unwrap();
        let out = run(Command::Kappa, &cfg, &RunOptions::default()).unwrap();
        let t = out.table("kappa").unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0][2..], [number(0.0), number(0.0), number(0.0)]);
    }

    #[test]
    fn report_flags_missing_metrics() {
        let mut cfg = ExperimentConfig::from_toml_str(TRIVIAL).unwrap();
        cfg.report.analyses = vec![Analysis::Group];
        cfg.expected.insert("delta".into(), Default::default());
        cfg.expected.insert("faithful".into(), crate::config::Expectation { value: Some(1.0), ..Default::default() });
        let out = run(Command::Report, &cfg, &RunOptions { radius: Some(3), ..Default::default() }).unwrap();
        assert_eq!(out.metrics["ball_size"], 7.0);
        let pass: Vec<_> = out.checks.iter().map(|c| (c.metric.as_str(), c.pass)).collect();
        assert_eq!(pass, [("delta", false), ("faithful", true)]);
        assert_eq!(out.metrics["checks_failed"], 1.0);
        let group = run(Command::Group, &cfg, &RunOptions::default()).unwrap();
        assert_eq!(group.checks.len(), 1);
    }
}
