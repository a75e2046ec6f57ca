//! Experiment configuration: a strict TOML schema (unknown keys are
//! rejected) and its conversion into presentations, root subsets and
//! functionals.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::{
    Cap, CyclicOrder, Generator, GeneratorDomains, Peripheral, PingPongDomains, Presentation, PresentationKind,
};
use crate::integrals::RationalProduct;
use crate::lie::{Functional, GroupElement, RootSubset};
use crate::linalg::Mat;

/// Allowed `| |det| − 1 |` for generator blocks when not renormalizing.
pub const CONFIG_DET_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub radius: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub group: GroupSpec,
    /// Simple-root indices per factor, 1-based.
    pub theta: Vec<Vec<usize>>,
    #[serde(default)]
    pub functionals: BTreeMap<String, FunctionalSpec>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<IntegralSpec>,
    #[serde(default)]
    pub report: ReportSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected: BTreeMap<String, Expectation>,
}

/// Analyses bundled by `report`; each contributes named metrics that
/// `expected` entries can refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Group,
    Exponent,
    EntropyGap,
    RadiusSweep,
    Powers,
    Measure,
    Residual,
    Multiplicative,
    LimitSet,
    Cone,
    Cusp,
    Finiteness,
    Integral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSpec {
    /// Functional used when `--phi` is absent and several are configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    pub analyses: Vec<Analysis>,
    /// Transversality margin for the residual and multiplicative probes.
    pub epsilon: f64,
    /// Radius of the ball behind the Patterson measure.
    pub measure_radius: usize,
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self {
            phi: None,
            analyses: vec![Analysis::Group, Analysis::Exponent],
            epsilon: 0.1,
            measure_radius: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Free,
    FreeProduct,
    DirectPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub kind: GroupKind,
    /// Size of the first factor for `direct_pair`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<usize>,
    /// Rescale every block to `|det| = 1` instead of checking it.
    #[serde(default)]
    pub renormalize: bool,
    pub projective: Vec<bool>,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peripherals: Vec<PeripheralSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pingpong: Option<PingPongSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    /// One row-major matrix per direct factor.
    pub blocks: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeripheralSpec {
    pub name: String,
    pub generators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PingPongSpec {
    pub factor: usize,
    pub domains: Vec<DomainSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub generator: String,
    pub plus: CapSpec,
    pub minus: CapSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CapSpec {
    /// `[a, b]` in `ℝ ∪ {∞}`; wraps through `∞` when `a > b`.
    Interval([f64; 2]),
    Cap { center: Vec<f64>, radius: f64 },
}

impl CapSpec {
    pub fn to_cap(&self) -> Result<Cap> {
        match self {
            CapSpec::Interval([a, b]) => Cap::from_interval(*a, *b),
            CapSpec::Cap { center, radius } => Cap::new(center.clone(), *radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// Direct factor, 0-based.
    pub factor: usize,
    /// Weight or root index, 1-based.
    pub index: usize,
    pub coefficient: f64,
}

/// `Σ c ω + Σ c α` over the listed terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roots: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Ball size limit; the environment override applies when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<u64>,
    /// Powers of a cyclic peripheral generator.
    pub powers: usize,
    /// Word radius for non-cyclic peripheral subgroups.
    pub peripheral_radius: usize,
    /// Pairs per band in the multiplicative probe.
    pub pairs_per_band: usize,
    /// Pairs in the transversality audit.
    pub pair_budget: usize,
    /// Sampled quadruples in the hyperbolicity probe.
    pub quadruples: usize,
    /// BFS sources in the hyperbolicity probe.
    pub sources: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            enumeration: None,
            powers: 100_000,
            peripheral_radius: 40,
            pairs_per_band: 4000,
            pair_budget: 200_000,
            quadruples: 20_000,
            sources: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralSpec {
    pub product: RationalProduct,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Exponents at which shell traces are written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s: Vec<f64>,
}

fn default_r_max() -> f64 {
    1e4
}

fn default_steps() -> usize {
    crate::integrals::BISECTION_STEPS
}

/// Expected value with tolerance, or bounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Expectation {
    pub fn accepts(&self, x: f64) -> bool {
        let close = match (self.value, self.tolerance) {
            (Some(v), Some(t)) => (x - v).abs() <= t,
            (Some(v), None) => x == v,
            _ => true,
        };
        close && self.min.is_none_or(|m| x >= m) && self.max.is_none_or(|m| x <= m)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Builds every derived object once so errors surface at load time.
    pub fn validate(&self) -> Result<()> {
        let p = self.presentation()?;
        self.theta_subset()?;
        for name in self.functionals.keys() {
            self.functional(name)?;
        }
        if let Some(phi) = &self.report.phi {
            self.functional(phi)?;
        }
        if !(self.report.epsilon > 0.0 && self.report.epsilon < 1.0) {
            return Err(LabError::Config("report.epsilon must lie in (0, 1)".into()));
        }
        if let Some(pp) = &self.group.pingpong {
            self.pingpong_domains(&p, pp)?;
        }
        Ok(())
    }

    pub fn presentation(&self) -> Result<Presentation> {
        let g = &self.group;
        let mut generators = Vec::with_capacity(g.generators.len());
        for spec in &g.generators {
            if spec.blocks.len() != g.projective.len() {
                return Err(LabError::Config(format!(
                    "generator {} has {} blocks but {} projective flags",
                    spec.name,
                    spec.blocks.len(),
                    g.projective.len()
                )));
            }
            let mut blocks = Vec::with_capacity(spec.blocks.len());
            for rows in &spec.blocks {
                let d = (rows.len() as f64).sqrt().round() as usize;
                if d * d != rows.len() || d == 0 {
                    return Err(LabError::Config(format!(
                        "generator {}: {} entries do not form a square matrix",
                        spec.name,
                        rows.len()
                    )));
                }
                let m = Mat::from_row_slice(d, d, rows);
                if !g.renormalize && (m.determinant().abs() - 1.0).abs() > CONFIG_DET_TOLERANCE {
                    return Err(LabError::Config(format!(
                        "generator {}: |det| = {} is not 1",
                        spec.name,
                        m.determinant().abs()
                    )));
                }
                blocks.push(m);
            }
            generators.push(Generator {
                name: spec.name.clone(),
                element: GroupElement::normalized(blocks, g.projective.clone())
                    .map_err(|e| LabError::Config(format!("generator {}: {e}", spec.name)))?,
            });
        }
        let orders: Vec<CyclicOrder> = g.generators.iter().map(|s| s.order).collect();
        let kind = match g.kind {
            GroupKind::Free => {
                if orders.iter().any(Option::is_some) {
                    return Err(LabError::Config("finite orders need kind = \"free_product\"".into()));
                }
                PresentationKind::Free
            }
            GroupKind::FreeProduct => PresentationKind::FreeProductCyclic(orders),
            GroupKind::DirectPair => {
                let left = g.left.ok_or_else(|| LabError::Config("direct_pair needs `left`".into()))?;
                if left == 0 || left >= orders.len() {
                    return Err(LabError::Config("`left` must split the generators".into()));
                }
                PresentationKind::DirectPair {
                    left,
                    left_orders: orders[..left].to_vec(),
                    right_orders: orders[left..].to_vec(),
                }
            }
        };
        let names: Vec<&str> = g.generators.iter().map(|s| s.name.as_str()).collect();
        let index = |n: &str| {
            names
                .iter()
                .position(|&m| m == n)
                .ok_or_else(|| LabError::UnknownGenerator(n.to_string()))
        };
        let peripherals = g
            .peripherals
            .iter()
            .map(|p| {
                Ok(Peripheral {
                    name: p.name.clone(),
                    generators: p.generators.iter().map(|n| index(n)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(generators, kind, peripherals)
    }

    pub fn dims(&self) -> Result<Vec<usize>> {
        Ok(self.presentation()?.dims())
    }

    /// `θ`, required to be symmetric.
    pub fn theta_subset(&self) -> Result<RootSubset> {
        let dims = self.dims()?;
        let sets: Vec<BTreeSet<usize>> = self.theta.iter().map(|l| l.iter().copied().collect()).collect();
        RootSubset::symmetric(&dims, sets)
    }

    pub fn functional(&self, name: &str) -> Result<Functional> {
        let spec = self
            .functionals
            .get(name)
            .ok_or_else(|| LabError::Config(format!("unknown functional `{name}`")))?;
        let dims = self.dims()?;
        let mut f = Functional::from_weights(
            &dims,
            spec.weights.iter().map(|t| ((t.factor, t.index), t.coefficient)),
        )?;
        for t in &spec.roots {
            f = f.add(&Functional::root(&dims, t.factor, t.index)?.scale(t.coefficient));
        }
        f.require_support(&self.theta_subset()?)?;
        Ok(f)
    }

    /// The named functional, else `report.phi`, else the only one.
    pub fn select_functional(&self, name: Option<&str>) -> Result<(String, Functional)> {
        let name = match name.or(self.report.phi.as_deref()) {
            Some(n) => n.to_string(),
            None => match self.functionals.keys().next() {
                Some(n) if self.functionals.len() == 1 => n.clone(),
                Some(_) => return Err(LabError::Config("several functionals configured; pass --phi".into())),
                None => return Err(LabError::Config("no functional configured".into())),
            },
        };
        let f = self.functional(&name)?;
        Ok((name, f))
    }

    pub fn pingpong(&self) -> Result<Option<PingPongDomains>> {
        match &self.group.pingpong {
            Some(pp) => Ok(Some(self.pingpong_domains(&self.presentation()?, pp)?)),
            None => Ok(None),
        }
    }

    fn pingpong_domains(&self, p: &Presentation, spec: &PingPongSpec) -> Result<PingPongDomains> {
        let mut generators: Vec<Option<GeneratorDomains>> = vec![None; p.generator_count()];
        for d in &spec.domains {
            let i = p.generator_index(&d.generator)?;
            generators[i] = Some(GeneratorDomains {
                plus: d.plus.to_cap()?,
                minus: d.minus.to_cap()?,
            });
        }
        let generators = generators
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.ok_or_else(|| LabError::Config(format!("no ping-pong domains for {}", p.generators()[i].name)))
            })
            .collect::<Result<_>>()?;
        Ok(PingPongDomains {
            factor: spec.factor,
            generators,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "sample"
radius = 6
seed = 3
theta = [[1]]

[group]
kind = "free"
projective = [true]

[[group.generators]]
name = "u"
blocks = [[1.0, 4.0, 0.0, 1.0]]

[[group.generators]]
name = "h"
blocks = [[1.25, 0.3, 1.875, 1.25]]

[[group.peripherals]]
name = "P"
generators = ["u"]

[group.pingpong]
factor = 0

[[group.pingpong.domains]]
generator = "u"
plus = { interval = [2.0, inf] }
minus = { interval = [-inf, -2.0] }

[[group.pingpong.domains]]
generator = "h"
plus = { interval = [0.1, 1.9] }
minus = { interval = [-1.9, -0.1] }

[functionals.alpha]
roots = [{ factor = 0, index = 1, coefficient = 1.0 }]
"#;

    #[test]
    fn parses_and_builds() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let p = c.presentation().unwrap();
        assert_eq!(p.generator_count(), 2);
        assert_eq!(p.peripherals()[0].generators, vec![0]);
        let (name, phi) = c.select_functional(None).unwrap();
        assert_eq!(name, "alpha");
        assert_eq!(phi.coefficients().get(&(0, 1)), Some(&2.0));
        assert!(c.pingpong().unwrap().is_some());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn strictness() {
        let extra = SAMPLE.replace("seed = 3", "seed = 3\ncolour = 1");
        assert!(matches!(ExperimentConfig::from_toml_str(&extra), Err(LabError::Config(_))));
        let bad_det = SAMPLE.replace("[1.0, 4.0, 0.0, 1.0]", "[2.0, 4.0, 0.0, 1.0]");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad_det), Err(LabError::Config(_))));
        let renorm = bad_det.replace("projective = [true]", "projective = [true]\nrenormalize = true");
        assert!(ExperimentConfig::from_toml_str(&renorm).is_ok());
        let unknown = SAMPLE.replace("generators = [\"u\"]", "generators = [\"w\"]");
        assert!(matches!(ExperimentConfig::from_toml_str(&unknown), Err(LabError::UnknownGenerator(_))));
        let wrong_size = SAMPLE.replace("[1.0, 4.0, 0.0, 1.0]", "[1.0, 4.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]");
        assert!(ExperimentConfig::from_toml_str(&wrong_size).is_err());
    }

    #[test]
    fn expectations() {
        let e = Expectation { value: Some(0.5), tolerance: Some(0.05), ..Default::default() };
        assert!(e.accepts(0.53) && !e.accepts(0.56));
        let m = Expectation { min: Some(0.8), ..Default::default() };
        assert!(m.accepts(0.9) && !m.accepts(0.7));
    }
}
