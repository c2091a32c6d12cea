//! Scenario configuration: model, metric, perturbation, seed and tasks.

use dflab_core::graph_form::{build_model, GraphForm, ModelSpec};
use dflab_core::metrics::{
    auto_scale, budget_metric, budgets_m1, budgets_m2, graph_distance, max_combine, Profile, PseudoMetric,
};
use dflab_core::spectral::{PerturbedForm, ShnolVerdict};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSet {
    M1,
    M2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `|x - y| / sqrt(2d)` on lattice coordinates.
    LatticeIntrinsic,
    Coordinate {
        scale: f64,
        #[serde(default = "identity")]
        profile: Profile,
    },
    /// Coordinate metric scaled so the interior row sums just fit.
    AutoScale {
        #[serde(default = "identity")]
        profile: Profile,
    },
    Budget {
        set: BudgetSet,
    },
    GraphDistance,
    /// Distance 1 between `center` and every other vertex, 0 otherwise.
    Star {
        center: usize,
    },
    Table {
        rows: Vec<Vec<f64>>,
    },
    /// Pointwise maximum of the listed metrics.
    Max {
        of: Vec<MetricSpec>,
    },
}

fn identity() -> Profile {
    Profile::Identity
}

impl MetricSpec {
    pub fn build(&self, g: &GraphForm) -> CliResult<PseudoMetric> {
        Ok(match self {
            MetricSpec::LatticeIntrinsic => PseudoMetric::lattice_intrinsic(g)?,
            MetricSpec::Coordinate { scale, profile } => PseudoMetric::coordinate(g, *scale, *profile)?,
            MetricSpec::AutoScale { profile } => PseudoMetric::coordinate(g, auto_scale(g, *profile)?, *profile)?,
            MetricSpec::Budget { set: BudgetSet::M1 } => budget_metric(&budgets_m1(g)),
            MetricSpec::Budget { set: BudgetSet::M2 } => budget_metric(&budgets_m2(g)),
            MetricSpec::GraphDistance => graph_distance(g),
            MetricSpec::Star { center } => {
                if *center >= g.n() {
                    return Err(CliError::Config(format!("star center {center} outside window")));
                }
                PseudoMetric::star(g.n(), *center)
            }
            MetricSpec::Table { rows } => {
                let n = g.n();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(format!("metric table must be {n} x {n}")));
                }
                PseudoMetric::table_from_fn(n, |x, y| rows[x][y])
            }
            MetricSpec::Max { of } => {
                let mut parts = of.iter().map(|m| m.build(g));
                let first = parts
                    .next()
                    .ok_or_else(|| CliError::Config("max metric needs at least one part".into()))??;
                parts.try_fold(first, |acc, m| Ok::<_, CliError>(max_combine(&acc, &m?)?))?
            }
        })
    }
}

/// Per-vertex weights: a constant or one value per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Constant(f64),
    PerVertex(Vec<f64>),
}

impl Weights {
    fn expand(&self, n: usize) -> CliResult<Vec<f64>> {
        match self {
            Weights::Constant(c) => Ok(vec![*c; n]),
            Weights::PerVertex(v) if v.len() == n => Ok(v.clone()),
            Weights::PerVertex(v) => Err(CliError::Config(format!("expected {n} weights, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    #[serde(default)]
    pub nu_plus: Option<Weights>,
    #[serde(default)]
    pub nu_minus: Option<Weights>,
    /// Form-bound certificate; `c_q` defaults to the smallest feasible value.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub c_q: Option<f64>,
}

impl Perturbation {
    pub fn build(&self, g: GraphForm) -> CliResult<PerturbedForm> {
        let n = g.n();
        let mut h = PerturbedForm::new(g);
        if let Some(w) = &self.nu_plus {
            h = h.with_nu_plus(w.expand(n)?)?;
        }
        if let Some(w) = &self.nu_minus {
            h = h.with_nu_minus(w.expand(n)?)?;
        }
        match (self.q, self.c_q) {
            (Some(q), Some(c)) => h = h.with_certificate(q, c)?,
            (Some(q), None) => h = h.certify(q)?,
            (None, Some(_)) => return Err(CliError::Config("c_q given without q".into())),
            (None, None) => {
                if h.nu_minus.iter().any(|&v| v != 0.0) {
                    return Err(CliError::Config(
                        "nonzero nu_minus needs a certificate parameter q".into(),
                    ));
                }
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance on reported exact values (jump size, capacity).
    pub exact: f64,
    /// Relative tolerance of the ground state transform identities.
    pub gst: f64,
    /// Ratio threshold of the spectrum-membership verdict.
    pub shnol_threshold: f64,
    /// Relative band around the predicted slope or increment.
    pub trend: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-10,
            gst: 1e-9,
            shnol_threshold: 0.05,
            trend: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    #[serde(flatten)]
    pub task: Task,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendKind {
    #[default]
    Finite,
    Infinite,
}

/// Test function on a lattice window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Wave {
    PlaneWave {
        theta: Vec<f64>,
    },
    Cosh {
        mu: Vec<f64>,
    },
    /// Bottom eigenvector of the interior restriction, chosen positive.
    Perron,
}

fn default_gammas() -> Vec<f64> {
    vec![0.1, 1.0]
}

fn default_band() -> f64 {
    0.1
}

fn default_min_delta() -> i64 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Row-sum criterion, definitional check and pseudo-metric axioms.
    VerifyMetric,
    /// Every part is intrinsic while their maximum is not.
    Counterexample {
        parts: Vec<MetricSpec>,
    },
    JumpSize {
        #[serde(default)]
        expected: Option<f64>,
        /// Window radii for a trend classification.
        #[serde(default)]
        radii: Option<Vec<usize>>,
        #[serde(default)]
        expect_trend: TrendKind,
    },
    Capacity {
        set: Vec<usize>,
        #[serde(default)]
        expected: Option<f64>,
        #[serde(default)]
        expected_minimizer: Option<Vec<f64>>,
        #[serde(default)]
        nested_checks: usize,
    },
    Spectrum {
        #[serde(default)]
        max_at_least: Option<f64>,
    },
    Gst {
        trials: usize,
        wave: Wave,
    },
    Caccioppoli {
        trials: usize,
    },
    Shnol {
        trials: usize,
        /// `E = B_r(origin)` in metric units.
        set_radius: f64,
        a: f64,
        #[serde(default)]
        s: Option<f64>,
    },
    ShnolRatio {
        waves: Vec<Wave>,
        /// `E_n = B_{n * step}(origin)` in metric units.
        step: f64,
        a: f64,
        #[serde(default)]
        s: Option<f64>,
        expect_verdict: ShnolVerdict,
    },
    ConditionC {
        a: f64,
        #[serde(default)]
        s: Option<f64>,
        #[serde(default = "default_gammas")]
        gammas: Vec<f64>,
        #[serde(default)]
        wave: Option<Wave>,
    },
    /// Budget-metric distances of the two-hub example over growing `N`.
    Degeneration {
        sizes: Vec<usize>,
    },
    /// Log-slope of the cut-off energy measure on an exponential kernel.
    CutoffDecay {
        set_radius: f64,
        a: f64,
        #[serde(default = "default_min_delta")]
        min_delta: i64,
    },
    /// Mirror-kernel energies of `x`, `|x|^(-1/4)` and their product under
    /// grid doubling.
    EnergyRefinement {
        doublings: usize,
        /// Relative band around `4 ln 2` for each increment of the product.
        #[serde(default = "default_band")]
        band: f64,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::VerifyMetric => "verify-metric",
            Task::Counterexample { .. } => "counterexample",
            Task::JumpSize { .. } => "jump-size",
            Task::Capacity { .. } => "capacity",
            Task::Spectrum { .. } => "spectrum",
            Task::Gst { .. } => "gst",
            Task::Caccioppoli { .. } => "caccioppoli",
            Task::Shnol { .. } => "shnol",
            Task::ShnolRatio { .. } => "shnol-ratio",
            Task::ConditionC { .. } => "condition-c",
            Task::Degeneration { .. } => "degeneration",
            Task::CutoffDecay { .. } => "cutoff-decay",
            Task::EnergyRefinement { .. } => "energy-refinement",
        }
    }

    pub fn randomized(&self) -> bool {
        match self {
            Task::VerifyMetric
            | Task::Counterexample { .. }
            | Task::Gst { .. }
            | Task::Caccioppoli { .. }
            | Task::Shnol { .. } => true,
            Task::Capacity { nested_checks, .. } => *nested_checks > 0,
            _ => false,
        }
    }

    pub fn needs_metric(&self) -> bool {
        !matches!(
            self,
            Task::Capacity { .. }
                | Task::Spectrum { .. }
                | Task::Gst { .. }
                | Task::Degeneration { .. }
                | Task::EnergyRefinement { .. }
                | Task::Counterexample { .. }
        )
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.tasks.is_empty() {
            return Err(CliError::Config("scenario lists no tasks".into()));
        }
        if self.seed.is_none() {
            if let Some(t) = self.tasks.iter().find(|t| t.task.randomized()) {
                return Err(CliError::Config(format!(
                    "task `{}` is randomized and needs a seed",
                    t.task.name()
                )));
            }
        }
        if self.metric.is_none() {
            if let Some(t) = self.tasks.iter().find(|t| t.task.needs_metric()) {
                return Err(CliError::Config(format!("task `{}` needs a metric", t.task.name())));
            }
        }
        Ok(())
    }

    pub fn build_graph(&self) -> CliResult<GraphForm> {
        Ok(build_model(&self.model)?)
    }
}
