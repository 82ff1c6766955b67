//! Running methods over seeds and persisting the results.
//!
//! An output directory holds `results.csv` with one row per (method, seed),
//! `reports/<run-id>.json` with the full [`RunRecord`], and
//! `instance/<run-id>.json` with everything needed to re-check the run.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Budget, ExperimentConfig, Method};
use super::truth::{high_interest_trace, sample_ground_truth, sample_interest_map, GroundTruth, InterestMap};
use crate::belief::{default_characterization, replay, Belief, GaussianPrior, KernelSpec, Measurement, SensorModel};
use crate::bounds::{exact_small, gap, relax_and_round, relax_lower_bound, RelaxOptions, Relaxation};
use crate::envgraph::{
    build_grid_scaled, random_prediction_points, validate_path, EnvGraph, GraphDocument, PathEncoding,
};
use crate::error::{IppError, Result};
use crate::multiagent::{plan_fleet, AgentSpec};
use crate::objectives::{eval_belief, net_ei_normalized, DesignSpace, Objective};
use crate::planner::{
    aspo_plan, greedy_baseline, random_baseline, MeasurementSource, NullWorld, PlannerConfig, SolveReport,
    TruthWorld,
};
use crate::refine::{polish, select_sensors, SensorAssignment, SwapBudget};

const TRUTH_STREAM: u64 = 1;
const WORLD_STREAM: u64 = 2;

fn substream(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// One seeded problem: the graph with its random prediction points, the
/// prior, the sensor model and, when the configuration needs one, a world.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub graph: EnvGraph,
    pub kernel: KernelSpec,
    pub noise_sigma: f64,
    pub budget: f64,
    pub prior: Arc<GaussianPrior>,
    pub model: SensorModel,
    pub agents: Vec<AgentSpec>,
    pub truth: Option<GroundTruth>,
    pub interest: Option<InterestMap>,
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let base = build_grid_scaled(cfg.grid_side, cfg.spacing, cfg.edge_weights)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_prediction_points(&base, cfg.m, &mut rng);
        let graph = base.with_prediction_points(points);
        let prior = Arc::new(GaussianPrior::from_kernel(graph.prediction_points(), &cfg.kernel)?);
        let model = default_characterization(&graph, &prior, &cfg.kernel, cfg.noise_sigma)?;
        let budget = cfg.budget_spec()?.resolve(&graph);
        let interest = cfg.interest_map.then(|| sample_interest_map(&graph, seed));
        let truth = match &interest {
            Some(map) => Some(map.node_values(&graph)),
            None if cfg.needs_truth() => Some(sample_ground_truth(&graph, &cfg.kernel, substream(seed, TRUTH_STREAM))?),
            None => None,
        };
        let agents = vec![AgentSpec { start: graph.start(), goal: graph.goal(), budget }; cfg.agents];
        Ok(Self { seed, graph, kernel: cfg.kernel, noise_sigma: cfg.noise_sigma, budget, prior, model, agents, truth, interest })
    }

    pub fn document(&self, objective: Objective) -> InstanceDocument {
        InstanceDocument {
            seed: self.seed,
            objective,
            kernel: self.kernel,
            noise_sigma: self.noise_sigma,
            budget: self.budget,
            graph: GraphDocument::from(&self.graph),
            agents: self.agents.clone(),
            truth: self.truth.as_ref().map(|t| t.values.clone()),
        }
    }

    fn world(&self) -> Box<dyn MeasurementSource> {
        match &self.truth {
            Some(t) => Box::new(TruthWorld::new(t.values.clone(), true, substream(self.seed, WORLD_STREAM))),
            None => Box::new(NullWorld),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub seed: u64,
    pub objective: Objective,
    pub kernel: KernelSpec,
    pub noise_sigma: f64,
    pub budget: f64,
    pub graph: GraphDocument,
    pub agents: Vec<AgentSpec>,
    pub truth: Option<Vec<f64>>,
}

impl InstanceDocument {
    /// Graph, prior and sensor model rebuilt from the stored fields.
    pub fn rebuild(&self) -> Result<(EnvGraph, Arc<GaussianPrior>, SensorModel)> {
        let g = EnvGraph::try_from(self.graph.clone())?;
        let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &self.kernel)?);
        let model = default_characterization(&g, &prior, &self.kernel, self.noise_sigma)?;
        Ok((g, prior, model))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub measurements: usize,
    pub trace_cov: f64,
    pub logdet_cov: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolishSummary {
    pub path: PathEncoding,
    pub initial: f64,
    pub value: f64,
    pub accepted: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultimodalSummary {
    pub assignment: SensorAssignment,
    pub relaxed_value: f64,
    pub lower_bound: f64,
    pub rounded_value: f64,
    pub baseline_value: f64,
}

/// Everything one (method, seed) run produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub method: Method,
    pub seed: u64,
    /// One report per agent.
    pub reports: Vec<SolveReport>,
    /// Objective of all measurements together.
    pub value: f64,
    pub runtime_s: f64,
    pub measurements: Vec<Measurement>,
    pub belief: BeliefSummary,
    /// Net expected improvement over graph size after each measurement.
    pub net_ei_trace: Option<Vec<f64>>,
    pub interest_trace: Option<f64>,
    pub polished: Option<PolishSummary>,
    pub multimodal: Option<MultimodalSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub budget: f64,
    pub objective: Objective,
    pub agents: usize,
    pub value: Option<f64>,
    pub runtime_s: Option<f64>,
    pub lower_bound: Option<f64>,
    pub delta: Option<f64>,
    pub gap_ratio_a: Option<f64>,
    pub gap_ratio_d: Option<f64>,
    pub truncated: Option<bool>,
    pub polished_value: Option<f64>,
    pub multimodal_value: Option<f64>,
    pub net_ei_normalized: Option<f64>,
    pub interest_trace: Option<f64>,
    pub status: Status,
    pub error: String,
    /// The full configuration as JSON.
    pub config: String,
}

pub fn run_id(method: Method, seed: u64) -> String {
    format!("{method}-s{seed}")
}

impl ResultRow {
    fn failed(cfg: &ExperimentConfig, method: Method, seed: u64, budget: f64, err: &IppError) -> Self {
        Self {
            run_id: run_id(method, seed),
            method,
            seed,
            n: cfg.grid_side * cfg.grid_side,
            m: cfg.m,
            budget,
            objective: cfg.objective,
            agents: cfg.agents,
            value: None,
            runtime_s: None,
            lower_bound: None,
            delta: None,
            gap_ratio_a: None,
            gap_ratio_d: None,
            truncated: None,
            polished_value: None,
            multimodal_value: None,
            net_ei_normalized: None,
            interest_trace: None,
            status: Status::Error,
            error: err.to_string(),
            config: config_json(cfg),
        }
    }

    fn from_record(cfg: &ExperimentConfig, inst: &Instance, rec: &RunRecord) -> Self {
        let bound = rec.reports.first().and_then(|r| r.bound.as_ref());
        Self {
            run_id: rec.run_id.clone(),
            method: rec.method,
            seed: rec.seed,
            n: inst.graph.n(),
            m: inst.prior.m(),
            budget: inst.budget,
            objective: cfg.objective,
            agents: rec.reports.len(),
            value: Some(rec.value),
            runtime_s: Some(rec.runtime_s),
            lower_bound: bound.map(|b| b.lower),
            delta: bound.map(|b| b.gap_delta),
            gap_ratio_a: bound.map(|b| b.gap_ratio_a),
            gap_ratio_d: bound.map(|b| b.gap_ratio_d),
            truncated: Some(rec.reports.iter().any(|r| r.truncated)),
            polished_value: rec.polished.as_ref().map(|p| p.value),
            multimodal_value: rec.multimodal.as_ref().map(|s| s.rounded_value),
            net_ei_normalized: rec.net_ei_trace.as_ref().and_then(|t| t.last().copied()),
            interest_trace: rec.interest_trace,
            status: Status::Ok,
            error: String::new(),
            config: config_json(cfg),
        }
    }
}

fn config_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

/// Report for a precomputed path: the path's nodes are measured in the
/// instance's world in order.
fn static_report(
    method: Method,
    inst: &Instance,
    obj: Objective,
    path: PathEncoding,
    truncated: bool,
    wall_time_s: f64,
) -> Result<SolveReport> {
    let mut world = inst.world();
    let mut belief = Belief::new(inst.prior.clone());
    let mut measurements = Vec::with_capacity(path.sequence.len());
    let mut trace = Vec::with_capacity(path.sequence.len());
    for &i in &path.sequence {
        let sigma = inst.model.sigma(i);
        let y = world.measure(i, sigma);
        belief = belief.update(i, y, sigma, &inst.model)?;
        measurements.push(Measurement { node: i, y, sigma });
        trace.push(eval_belief(obj, &belief)?);
    }
    Ok(SolveReport {
        method: method.name().to_string(),
        objective: obj,
        cost: path.total_cost,
        value: *trace.last().expect("paths are non-empty"),
        path,
        budget: inst.budget,
        wall_time_s,
        truncated,
        measurements,
        objective_trace: trace,
        bound: None,
    })
}

/// Smallest prior mean over the nodes; the expected-improvement incumbent
/// before any measurement.
fn prior_incumbent(space: &DesignSpace) -> f64 {
    space.prior_node_means().iter().copied().fold(f64::INFINITY, f64::min)
}

fn require_static(obj: Objective) -> Result<()> {
    if obj.is_static() {
        Ok(())
    } else {
        Err(IppError::WrongObjective(obj))
    }
}

/// Runs one method on one instance.
pub fn run_method(cfg: &ExperimentConfig, inst: &Instance, method: Method) -> Result<RunRecord> {
    let obj = cfg.objective;
    let g = &inst.graph;
    let space = DesignSpace::new(inst.prior.clone(), &inst.model)?;
    let pcfg = PlannerConfig {
        execute_steps: cfg.execute_steps,
        runtime_cap_s: cfg.runtime_cap_s,
        ..PlannerConfig::new(obj, inst.budget).with_seed(inst.seed)
    };
    let mut relaxation: Option<Relaxation> = None;
    let mut shared: Option<Vec<Measurement>> = None;
    let (mut reports, value, runtime_s) = match method {
        Method::Aspo if inst.agents.len() > 1 => {
            let fleet = plan_fleet(g, &inst.model, &inst.prior, &pcfg, &inst.agents, inst.world().as_mut())?;
            shared = Some(fleet.measurements);
            (fleet.agents, fleet.joint_value, fleet.wall_time_s)
        }
        Method::Aspo | Method::Greedy | Method::Random => {
            let planner = match method {
                Method::Aspo => aspo_plan,
                Method::Greedy => greedy_baseline,
                _ => random_baseline,
            };
            let r = planner(g, &inst.model, &inst.prior, &pcfg, inst.world().as_mut())?;
            let (v, t) = (r.value, r.wall_time_s);
            (vec![r], v, t)
        }
        Method::Exact | Method::BSurrogate => {
            require_static(obj)?;
            let target = if method == Method::Exact { obj } else { Objective::B };
            let started = Instant::now();
            let ex = exact_small(g, &space, target, inst.budget, cfg.runtime_cap_s)?;
            let t = started.elapsed().as_secs_f64();
            let r = static_report(method, inst, obj, ex.path, ex.truncated, t)?;
            (vec![r.clone()], r.value, t)
        }
        Method::RelaxRound => {
            require_static(obj)?;
            let started = Instant::now();
            let (path, relax) = relax_and_round(g, &space, obj, inst.budget, &RelaxOptions::default())?;
            let t = started.elapsed().as_secs_f64();
            relaxation = Some(relax);
            let r = static_report(method, inst, obj, path, false, t)?;
            (vec![r.clone()], r.value, t)
        }
    };
    let single = reports.len() == 1 && obj.is_static();

    if cfg.compute_bounds && single {
        let relax = match relaxation {
            Some(r) => r,
            None => relax_lower_bound(g, &space, obj, inst.budget, &RelaxOptions::default())?,
        };
        reports[0].bound = Some(gap(value, relax.lower, inst.prior.m(), relax.kind, relax.iterations, relax.fw_gap)?);
    }

    let polished = if cfg.polish_steps > 0 && single {
        let p = polish(g, &space, obj, &reports[0].path, &SwapBudget::new(cfg.polish_steps, inst.seed)?)?;
        Some(PolishSummary { path: p.path, initial: p.initial, value: p.value, accepted: p.accepted })
    } else {
        None
    };

    let multimodal = match &cfg.multimodal {
        Some(mm) if single => {
            let model = inst.model.with_sigma_range(mm.ladder[0].min(inst.noise_sigma), inst.noise_sigma)?;
            let path = &reports[0].path;
            let distinct = path.sequence.iter().collect::<std::collections::BTreeSet<_>>().len();
            let sel = select_sensors(g, &model, &inst.prior, obj, path, mm.k.min(distinct), &mm.ladder)?;
            Some(MultimodalSummary {
                assignment: sel.assignment,
                relaxed_value: sel.relaxed_value,
                lower_bound: sel.lower_bound,
                rounded_value: sel.rounded_value,
                baseline_value: sel.baseline_value,
            })
        }
        _ => None,
    };

    let measurements = shared.unwrap_or_else(|| reports[0].measurements.clone());

    let net_ei_trace = if cfg.adaptive || obj == Objective::Ei {
        let mut y_min = prior_incumbent(&space);
        let mut b = Belief::new(inst.prior.clone());
        let mut trace = Vec::with_capacity(measurements.len());
        for m in &measurements {
            b = b.update(m.node, m.y, m.sigma, &inst.model)?;
            y_min = y_min.min(m.y);
            trace.push(net_ei_normalized(&b, y_min, g.n()));
        }
        Some(trace)
    } else {
        None
    };

    let interest_trace = match &inst.interest {
        Some(map) => Some(high_interest_trace(g, &inst.kernel, &measurements, map)?),
        None => None,
    };

    let final_belief = replay(inst.prior.clone(), &inst.model, &measurements)?;
    Ok(RunRecord {
        run_id: run_id(method, inst.seed),
        method,
        seed: inst.seed,
        reports,
        value,
        runtime_s,
        belief: BeliefSummary {
            measurements: measurements.len(),
            trace_cov: final_belief.trace_cov(),
            logdet_cov: final_belief.logdet_cov(),
        },
        measurements,
        net_ei_trace,
        interest_trace,
        polished,
        multimodal,
    })
}

/// Builds the instance and runs one method on it.
pub fn run_single(cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<(Instance, RunRecord)> {
    cfg.validate()?;
    let inst = Instance::build(cfg, seed)?;
    let rec = run_method(cfg, &inst, method)?;
    Ok((inst, rec))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub ok: usize,
    pub failed: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub mean_runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub objective: Objective,
    pub methods: Vec<MethodSummary>,
}

impl Summary {
    pub fn get(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objective {}", self.objective)?;
        for s in &self.methods {
            writeln!(
                f,
                "  {:<12} {:>12.6} ± {:<10.6} ({} ok, {} failed, {:.3} s/run)",
                s.method.name(),
                s.mean,
                s.stderr,
                s.ok,
                s.failed,
                s.mean_runtime_s
            )?;
        }
        Ok(())
    }
}

/// Mean and standard error of a sample; the standard error of a single
/// value is 0.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-method statistics over successful rows, in the order methods first
/// appear.
pub fn summarize(objective: Objective, rows: &[ResultRow]) -> Summary {
    let mut order: Vec<Method> = Vec::new();
    for r in rows {
        if !order.contains(&r.method) {
            order.push(r.method);
        }
    }
    let methods = order
        .into_iter()
        .map(|method| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
            let values: Vec<f64> = mine.iter().filter(|r| r.status == Status::Ok).filter_map(|r| r.value).collect();
            let runtimes: Vec<f64> = mine.iter().filter_map(|r| r.runtime_s).collect();
            let (mean, stderr) = mean_stderr(&values);
            MethodSummary {
                method,
                ok: values.len(),
                failed: mine.len() - values.len(),
                mean,
                stderr,
                mean_runtime_s: mean_stderr(&runtimes).0,
            }
        })
        .collect();
    Summary { objective, methods }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let rows = rd.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

/// Every (method, seed) pair of the configuration, run in parallel. Failures
/// become rows with `status = error`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    cfg.validate()?;
    let instances: Vec<Result<Instance>> = cfg.seeds.par_iter().map(|&s| Instance::build(cfg, s)).collect();
    let jobs: Vec<(Method, usize)> =
        cfg.methods.iter().flat_map(|&m| (0..cfg.seeds.len()).map(move |i| (m, i))).collect();
    let outcomes: Vec<(ResultRow, Option<(RunRecord, InstanceDocument)>)> = jobs
        .par_iter()
        .map(|&(method, i)| {
            let seed = cfg.seeds[i];
            let inst = match &instances[i] {
                Ok(inst) => inst,
                Err(e) => return (ResultRow::failed(cfg, method, seed, f64::NAN, e), None),
            };
            match run_method(cfg, inst, method) {
                Ok(rec) => {
                    let row = ResultRow::from_record(cfg, inst, &rec);
                    (row, Some((rec, inst.document(cfg.objective))))
                }
                Err(e) => (ResultRow::failed(cfg, method, seed, inst.budget, &e), None),
            }
        })
        .collect();

    fs::create_dir_all(out_dir.join("reports"))?;
    fs::create_dir_all(out_dir.join("instance"))?;
    let mut wr = csv::Writer::from_path(out_dir.join("results.csv"))?;
    for (row, saved) in &outcomes {
        wr.serialize(row)?;
        if let Some((rec, doc)) = saved {
            write_json(&out_dir.join("reports").join(format!("{}.json", rec.run_id)), rec)?;
            write_json(&out_dir.join("instance").join(format!("{}.json", rec.run_id)), doc)?;
        }
    }
    wr.flush()?;
    let rows: Vec<ResultRow> = outcomes.into_iter().map(|(r, _)| r).collect();
    Ok(summarize(cfg.objective, &rows))
}

/// One line of `gap.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub budget_spec: String,
    pub budget: f64,
    pub seed: u64,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub delta: Option<f64>,
    pub gap_ratio_a: Option<f64>,
    pub gap_ratio_d: Option<f64>,
    pub status: Status,
    pub error: String,
}

impl GapRow {
    /// `m delta / lower` for A, `exp(delta)` for D, `delta` for B.
    pub fn ratio(&self, obj: Objective) -> Option<f64> {
        match obj {
            Objective::A => self.gap_ratio_a,
            Objective::D => self.gap_ratio_d,
            _ => self.delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapStudy {
    pub objective: Objective,
    pub rows: Vec<GapRow>,
    /// Median gap ratio per budget, in the order given.
    pub medians: Vec<(String, f64)>,
    /// Whether the medians never increase with the budget.
    pub non_increasing: bool,
}

impl fmt::Display for GapStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.objective {
            Objective::A => "m*delta/lower",
            Objective::D => "exp(delta)",
            _ => "delta",
        };
        writeln!(f, "median {label} by budget")?;
        for (b, med) in &self.medians {
            writeln!(f, "  {b:<10} {med:.6}")?;
        }
        writeln!(f, "  non-increasing in budget: {}", self.non_increasing)
    }
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// ASPO against the walk relaxation for every budget and seed; writes
/// `gap.csv`.
pub fn gap_study(cfg: &ExperimentConfig, budgets: &[Budget], out_dir: &Path) -> Result<GapStudy> {
    cfg.validate()?;
    require_static(cfg.objective)?;
    if budgets.is_empty() {
        return Err(IppError::Config("gap study needs at least one budget".into()));
    }
    let cfgs: Vec<ExperimentConfig> = budgets
        .iter()
        .map(|&b| {
            let mut c = ExperimentConfig { compute_bounds: true, polish_steps: 0, multimodal: None, agents: 1, ..cfg.clone() };
            c.set_budget(b);
            c
        })
        .collect();
    let jobs: Vec<(usize, u64)> = (0..budgets.len()).flat_map(|b| cfg.seeds.iter().map(move |&s| (b, s))).collect();
    let rows: Vec<GapRow> = jobs
        .par_iter()
        .map(|&(bi, seed)| {
            let spec = budgets[bi].to_string();
            let built = Instance::build(&cfgs[bi], seed);
            let budget = built.as_ref().map(|i| i.budget).unwrap_or(f64::NAN);
            let fail = |e: IppError| GapRow {
                budget_spec: spec.clone(),
                budget,
                seed,
                upper: None,
                lower: None,
                delta: None,
                gap_ratio_a: None,
                gap_ratio_d: None,
                status: Status::Error,
                error: e.to_string(),
            };
            let outcome = built.and_then(|inst| run_method(&cfgs[bi], &inst, Method::Aspo));
            match outcome {
                Ok(rec) => {
                    let b = rec.reports[0].bound.clone().expect("bounds requested");
                    GapRow {
                        budget_spec: spec.clone(),
                        budget,
                        seed,
                        upper: Some(b.upper),
                        lower: Some(b.lower),
                        delta: Some(b.gap_delta),
                        gap_ratio_a: Some(b.gap_ratio_a),
                        gap_ratio_d: Some(b.gap_ratio_d),
                        status: Status::Ok,
                        error: String::new(),
                    }
                }
                Err(e) => fail(e),
            }
        })
        .collect();

    fs::create_dir_all(out_dir)?;
    let mut wr = csv::Writer::from_path(out_dir.join("gap.csv"))?;
    for r in &rows {
        wr.serialize(r)?;
    }
    wr.flush()?;

    let medians: Vec<(String, f64)> = budgets
        .iter()
        .map(|b| {
            let spec = b.to_string();
            let mut v: Vec<f64> = rows
                .iter()
                .filter(|r| r.budget_spec == spec)
                .filter_map(|r| r.ratio(cfg.objective))
                .filter(|x| x.is_finite())
                .collect();
            (spec, median(&mut v))
        })
        .collect();
    let non_increasing = medians.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    Ok(GapStudy { objective: cfg.objective, rows, medians, non_increasing })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub rows: usize,
    pub paths: usize,
    pub values_checked: usize,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-checks every successful row of `out_dir/results.csv`: each path must
/// be feasible on the stored instance and the stored value must follow from
/// replaying the stored measurements.
pub fn validate_outputs(out_dir: &Path) -> Result<ValidationReport> {
    let rows = read_results(&out_dir.join("results.csv"))?;
    let mut rep = ValidationReport::default();
    for row in rows.iter().filter(|r| r.status == Status::Ok) {
        rep.rows += 1;
        let id = &row.run_id;
        let rec: RunRecord =
            serde_json::from_str(&fs::read_to_string(out_dir.join("reports").join(format!("{id}.json")))?)?;
        let doc: InstanceDocument =
            serde_json::from_str(&fs::read_to_string(out_dir.join("instance").join(format!("{id}.json")))?)?;
        let (g, prior, model) = doc.rebuild()?;
        if rec.reports.len() != doc.agents.len() && rec.reports.len() != 1 {
            rep.failures.push(format!("{id}: {} reports for {} agents", rec.reports.len(), doc.agents.len()));
            continue;
        }
        for (r, a) in rec.reports.iter().zip(&doc.agents) {
            rep.paths += 1;
            let ga = g.with_endpoints(a.start, a.goal)?;
            let verdict = validate_path(&ga, &r.path, a.budget);
            if !verdict.is_valid() {
                rep.failures.push(format!("{id}: infeasible path {verdict:?}"));
            }
        }
        let belief = replay(prior.clone(), &model, &rec.measurements)?;
        let value = match doc.objective {
            Objective::Ei => {
                let space = DesignSpace::new(prior, &model)?;
                let y_min = rec.measurements.iter().map(|m| m.y).fold(prior_incumbent(&space), f64::min);
                net_ei_normalized(&belief, y_min, g.n())
            }
            obj => eval_belief(obj, &belief)?,
        };
        rep.values_checked += 1;
        let stored = row.value.unwrap_or(f64::NAN);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        if !close(value, stored) || !close(value, rec.value) {
            rep.failures.push(format!("{id}: stored value {stored} but replay gives {value}"));
        }
    }
    Ok(rep)
}
