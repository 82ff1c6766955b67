//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! grid_side = 10
//! objective = "a"
//! budget_multiple = 2.0      # or: budget = 36.0
//! methods = ["aspo", "greedy", "random"]
//! seeds = [0, 1, 2]
//! runtime_cap_s = 120.0
//! kernel = { family = "squared_exponential", length_scale = 1.0 }
//! m = 20
//! noise_sigma = 1.0
//! agents = 1
//! adaptive = false
//! multimodal = { k = 3, ladder = [0.1, 0.3, 0.6] }
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::KernelSpec;
use crate::envgraph::{EdgeWeightMode, EnvGraph};
use crate::error::{IppError, Result};
use crate::objectives::Objective;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Random,
    Greedy,
    Aspo,
    Exact,
    RelaxRound,
    BSurrogate,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Random, Method::Greedy, Method::Aspo, Method::Exact, Method::RelaxRound, Method::BSurrogate];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Greedy => "greedy",
            Method::Aspo => "aspo",
            Method::Exact => "exact",
            Method::RelaxRound => "relax_round",
            Method::BSurrogate => "b_surrogate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = IppError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| IppError::Config(format!("unknown method {s:?}")))
    }
}

/// Absolute budget or a multiple of the shortest start-goal cost. Written
/// `16` or `2x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Absolute(f64),
    Multiple(f64),
}

impl Budget {
    pub fn resolve(self, g: &EnvGraph) -> f64 {
        match self {
            Budget::Absolute(b) => b,
            Budget::Multiple(k) => k * g.shortest_costs_to_goal()[g.start()],
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Absolute(b) => write!(f, "{b}"),
            Budget::Multiple(k) => write!(f, "{k}x"),
        }
    }
}

impl FromStr for Budget {
    type Err = IppError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || IppError::Config(format!("bad budget {s:?}"));
        let out = match s.strip_suffix(['x', 'X']) {
            Some(k) => Budget::Multiple(k.parse().map_err(|_| bad())?),
            None => Budget::Absolute(s.parse().map_err(|_| bad())?),
        };
        match out {
            Budget::Absolute(v) | Budget::Multiple(v) if v.is_finite() && v > 0.0 => Ok(out),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodalSpec {
    pub k: usize,
    /// Ascending noise levels handed to the `k` most important path nodes.
    pub ladder: Vec<f64>,
}

impl FromStr for MultimodalSpec {
    type Err = IppError;

    /// `k=3,ladder=0.1,0.3,0.6`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || IppError::Config(format!("bad multimodal spec {s:?}; expected k=K,ladder=S1,S2,..."));
        let (k, ladder) = s.split_once(",ladder=").ok_or_else(bad)?;
        let k = k.trim().strip_prefix("k=").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let ladder = ladder.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        Ok(Self { k, ladder })
    }
}

pub const DEFAULT_BUDGET_MULTIPLE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid_side: usize,
    /// Distance between neighbouring grid nodes.
    pub spacing: f64,
    pub edge_weights: EdgeWeightMode,
    pub objective: Objective,
    /// At most one of `budget` and `budget_multiple`; neither means
    /// twice the shortest path cost.
    pub budget: Option<f64>,
    pub budget_multiple: Option<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub runtime_cap_s: f64,
    pub kernel: KernelSpec,
    /// Number of prediction points, drawn uniformly over the grid per seed.
    pub m: usize,
    pub noise_sigma: f64,
    pub multimodal: Option<MultimodalSpec>,
    pub agents: usize,
    /// Measure a sampled ground truth instead of zeros, and log net
    /// expected improvement.
    pub adaptive: bool,
    /// Use a Gaussian-mixture interest map as ground truth and report the
    /// posterior variance over its high-interest cells.
    pub interest_map: bool,
    pub execute_steps: usize,
    /// Compute a relaxation lower bound and the gap for every run.
    pub compute_bounds: bool,
    /// Swap-polishing steps applied to every static run; 0 disables.
    pub polish_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid_side: 5,
            spacing: 1.0,
            edge_weights: EdgeWeightMode::Unit,
            objective: Objective::A,
            budget: None,
            budget_multiple: None,
            methods: vec![Method::Aspo, Method::Greedy, Method::Random],
            seeds: (0..25).collect(),
            runtime_cap_s: 120.0,
            kernel: KernelSpec::squared_exponential(1.0),
            m: 20,
            noise_sigma: 1.0,
            multimodal: None,
            agents: 1,
            adaptive: false,
            interest_map: false,
            execute_steps: 1,
            compute_bounds: false,
            polish_steps: 0,
        }
    }
}

/// Command-line values that replace file values when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_side: Option<usize>,
    pub budget: Option<Budget>,
    pub objective: Option<Objective>,
    pub methods: Option<Vec<Method>>,
    pub seeds: Option<Vec<u64>>,
    pub runtime_cap_s: Option<f64>,
    pub agents: Option<usize>,
    pub multimodal: Option<MultimodalSpec>,
}

/// `0..25`, `3` or `1,4,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || IppError::Config(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(str::parse).collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| IppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IppError::Config(e.to_string()))
    }

    pub fn budget_spec(&self) -> Result<Budget> {
        match (self.budget, self.budget_multiple) {
            (Some(b), None) => Ok(Budget::Absolute(b)),
            (None, Some(k)) => Ok(Budget::Multiple(k)),
            (None, None) => Ok(Budget::Multiple(DEFAULT_BUDGET_MULTIPLE)),
            _ => Err(IppError::Config("set exactly one of budget and budget_multiple".into())),
        }
    }

    pub fn set_budget(&mut self, b: Budget) {
        (self.budget, self.budget_multiple) = match b {
            Budget::Absolute(v) => (Some(v), None),
            Budget::Multiple(k) => (None, Some(k)),
        };
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(v) = o.grid_side {
            self.grid_side = v;
        }
        if let Some(b) = o.budget {
            self.set_budget(b);
        }
        if let Some(v) = o.objective {
            self.objective = v;
        }
        if let Some(v) = &o.methods {
            self.methods = v.clone();
        }
        if let Some(v) = &o.seeds {
            self.seeds = v.clone();
        }
        if let Some(v) = o.runtime_cap_s {
            self.runtime_cap_s = v;
        }
        if let Some(v) = o.agents {
            self.agents = v;
        }
        if let Some(v) = &o.multimodal {
            self.multimodal = Some(v.clone());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(IppError::Config(msg));
        if self.grid_side < 2 {
            return fail(format!("grid_side must be at least 2, got {}", self.grid_side));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return fail(format!("spacing must be positive, got {}", self.spacing));
        }
        self.budget_spec()?;
        if let Some(b) = self.budget.or(self.budget_multiple) {
            if !(b > 0.0) || !b.is_finite() {
                return fail(format!("budget must be positive, got {b}"));
            }
        }
        if self.methods.is_empty() {
            return fail("no methods selected".into());
        }
        if self.seeds.is_empty() {
            return fail("no seeds selected".into());
        }
        let distinct = |n: usize, set: usize| n == set;
        if !distinct(self.methods.len(), self.methods.iter().collect::<std::collections::BTreeSet<_>>().len())
            || !distinct(self.seeds.len(), self.seeds.iter().collect::<std::collections::BTreeSet<_>>().len())
        {
            return fail("methods and seeds must not repeat".into());
        }
        if !(self.runtime_cap_s > 0.0) {
            return fail(format!("runtime_cap_s must be positive, got {}", self.runtime_cap_s));
        }
        self.kernel.validate().map_err(|e| IppError::Config(e.to_string()))?;
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return fail(format!("noise_sigma must be positive, got {}", self.noise_sigma));
        }
        if self.agents == 0 {
            return fail("agents must be at least 1".into());
        }
        if self.execute_steps == 0 {
            return fail("execute_steps must be at least 1".into());
        }
        if let Some(mm) = &self.multimodal {
            if mm.ladder.is_empty() || mm.ladder.windows(2).any(|w| w[1] < w[0]) {
                return fail("multimodal ladder must be non-empty and ascending".into());
            }
            if mm.ladder.iter().any(|&s| !(s > 0.0) || s > self.noise_sigma) {
                return fail("multimodal ladder values must lie in (0, noise_sigma]".into());
            }
        }
        Ok(())
    }

    /// Whether runs see a non-zero world.
    pub fn needs_truth(&self) -> bool {
        self.adaptive || self.interest_map || self.objective == Objective::Ei
    }
}
