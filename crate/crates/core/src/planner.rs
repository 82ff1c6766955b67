//! Receding-horizon orienteering planner and the random / greedy baselines.
//!
//! Each replan scores every node by the objective after a hypothetical
//! measurement there, solves a longest-walk dynamic program over
//! `(node, remaining budget bucket)` (by default over arrival edges instead of
//! nodes, which rules out walks that bounce straight back between two good
//! nodes) and executes the first `h` moves. The
//! executed path never revisits a node: visited nodes are removed from the
//! program and every move keeps a simple route to the goal within budget.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, GaussianPrior, Measurement, SensorModel};
use crate::bounds::BoundReport;
use crate::envgraph::{EnvGraph, NodeId, PathEncoding, BUDGET_EPS};
use crate::error::{IppError, Result};
use crate::objectives::{eval_belief, eval_ei, net_ei_normalized, DesignSpace, Objective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardShaping {
    /// `r_j = -phi(belief + j)` as is.
    Raw,
    /// `r_j = phi(belief) - phi(belief + j)`: the same ordering per replan,
    /// but nonnegative, so longer walks are never penalized for length alone.
    MarginalGain,
}

/// State space of the replanning program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkState {
    /// `(node, bucket)`: any walk, including immediate back-and-forth.
    Node,
    /// `(arrival edge, bucket)`: a walk may not reverse the edge it came in on.
    Edge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub objective: Objective,
    pub budget: f64,
    /// Moves executed per replan.
    pub execute_steps: usize,
    /// Budget bucket width for the dynamic program; `None` picks
    /// [`EnvGraph::default_budget_resolution`].
    pub budget_resolution: Option<f64>,
    pub runtime_cap_s: f64,
    pub rng_seed: u64,
    pub reward_shaping: RewardShaping,
    pub walk_state: WalkState,
}

impl PlannerConfig {
    pub fn new(objective: Objective, budget: f64) -> Self {
        Self {
            objective,
            budget,
            execute_steps: 1,
            budget_resolution: None,
            runtime_cap_s: 120.0,
            rng_seed: 0,
            reward_shaping: RewardShaping::MarginalGain,
            walk_state: WalkState::Edge,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self, g: &EnvGraph) -> Result<()> {
        self.validate_settings()?;
        check_budget(g, self.budget)
    }

    /// Everything except the budget.
    pub(crate) fn validate_settings(&self) -> Result<()> {
        if self.execute_steps == 0 {
            return Err(IppError::InvalidArgument("execute_steps must be at least 1".into()));
        }
        if !(self.runtime_cap_s > 0.0) {
            return Err(IppError::InvalidArgument("runtime cap must be positive".into()));
        }
        if let Some(r) = self.budget_resolution {
            if !(r > 0.0) || !r.is_finite() {
                return Err(IppError::InvalidArgument(format!("budget resolution {r} must be positive")));
            }
        }
        Ok(())
    }

    pub fn resolution(&self, g: &EnvGraph) -> f64 {
        self.budget_resolution.unwrap_or_else(|| g.default_budget_resolution(self.budget))
    }
}

pub(crate) fn check_budget(g: &EnvGraph, budget: f64) -> Result<()> {
    let shortest = g.shortest_costs_to_goal()[g.start()];
    if !budget.is_finite() || budget + BUDGET_EPS < shortest {
        return Err(IppError::InfeasibleBudget { budget, shortest });
    }
    Ok(())
}

/// Where measurement values come from.
pub trait MeasurementSource {
    fn measure(&mut self, node: NodeId, sigma: f64) -> f64;
}

/// Returns zero for every measurement. Values do not affect the A, B and D
/// objectives, so this is the default source for them.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullWorld;

impl MeasurementSource for NullWorld {
    fn measure(&mut self, _node: NodeId, _sigma: f64) -> f64 {
        0.0
    }
}

/// Per-node true values observed with Gaussian noise of the sensor's sigma.
#[derive(Clone, Debug)]
pub struct TruthWorld {
    values: Vec<f64>,
    noisy: bool,
    rng: ChaCha8Rng,
}

impl TruthWorld {
    pub fn new(values: Vec<f64>, noisy: bool, seed: u64) -> Self {
        Self { values, noisy, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl MeasurementSource for TruthWorld {
    fn measure(&mut self, node: NodeId, sigma: f64) -> f64 {
        let noise: f64 = if self.noisy { self.rng.sample(StandardNormal) } else { 0.0 };
        self.values[node] + sigma * noise
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub objective: Objective,
    pub path: PathEncoding,
    /// Objective of the final posterior (net expected improvement per node
    /// for EI).
    pub value: f64,
    pub cost: f64,
    pub budget: f64,
    pub wall_time_s: f64,
    pub truncated: bool,
    pub measurements: Vec<Measurement>,
    /// Objective after each measurement.
    pub objective_trace: Vec<f64>,
    pub bound: Option<BoundReport>,
}

/// `r_j = -phi(belief + measurement at j)` for A, B, D; the expected
/// improvement at `j` for EI.
pub fn node_rewards(belief: &Belief, space: &DesignSpace, obj: Objective, y_min: f64) -> Result<Vec<f64>> {
    if obj == Objective::Ei {
        return Ok(eval_ei(belief, space, y_min));
    }
    Ok(space.one_step_values(obj, belief)?.into_iter().map(|v| -v).collect())
}

fn shaped_rewards(belief: &Belief, space: &DesignSpace, cfg: &PlannerConfig, y_min: f64) -> Result<Vec<f64>> {
    let mut r = node_rewards(belief, space, cfg.objective, y_min)?;
    if cfg.reward_shaping == RewardShaping::MarginalGain && cfg.objective != Objective::Ei {
        let current = eval_belief(cfg.objective, belief)?;
        for v in &mut r {
            *v += current;
        }
    }
    Ok(r)
}

/// `U[i, b]`: best reward collectable on a walk from `i` to the goal using at
/// most `b` budget buckets; `-inf` when the goal is out of reach.
#[derive(Clone, Debug)]
pub struct ValueTable {
    n: usize,
    max_bucket: usize,
    resolution: f64,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn get(&self, i: NodeId, b: usize) -> f64 {
        self.values[b * self.n + i]
    }

    pub fn max_bucket(&self) -> usize {
        self.max_bucket
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Edge costs in buckets, rounded up so bucketed plans never overshoot.
pub(crate) fn bucket_costs(g: &EnvGraph, resolution: f64) -> Vec<Vec<(NodeId, usize, f64)>> {
    (0..g.n())
        .map(|i| {
            g.out_edges(i)
                .iter()
                .map(|&(j, w)| (j, ((w / resolution - 1e-9).ceil().max(1.0)) as usize, w))
                .collect()
        })
        .collect()
}

pub(crate) fn budget_buckets(budget: f64, resolution: f64) -> usize {
    ((budget.max(0.0) / resolution) + 1e-9).floor() as usize
}

pub(crate) fn solve_table(
    g: &EnvGraph,
    rewards: &[f64],
    costs: &[Vec<(NodeId, usize, f64)>],
    max_bucket: usize,
    resolution: f64,
    blocked: &[bool],
) -> ValueTable {
    let n = g.n();
    let goal = g.goal();
    let mut values = vec![f64::NEG_INFINITY; n * (max_bucket + 1)];
    for b in 0..=max_bucket {
        for i in 0..n {
            if blocked[i] {
                continue;
            }
            let v = if i == goal {
                rewards[goal]
            } else {
                let mut best = f64::NEG_INFINITY;
                for &(j, c, _) in &costs[i] {
                    if c <= b && !blocked[j] {
                        best = best.max(values[(b - c) * n + j]);
                    }
                }
                rewards[i] + best
            };
            values[b * n + i] = v;
        }
    }
    ValueTable { n, max_bucket, resolution, values }
}

/// Walk program over `(entered-from edge, bucket)` states: a walk may not
/// turn straight back along the edge it arrived on.
#[derive(Clone, Debug)]
pub(crate) struct EdgeTable {
    /// For every out-edge `(i -> j)`, in the order of `costs[i]`, the state id
    /// of "at `j`, entered from `i`".
    state_of: Vec<Vec<usize>>,
    states: usize,
    values: Vec<f64>,
}

impl EdgeTable {
    fn get(&self, state: usize, b: usize) -> f64 {
        self.values[b * self.states + state]
    }

    /// Best successor of `cur` with `b` buckets left, over allowed nodes.
    fn best_move(
        &self,
        cur: NodeId,
        out: &[(NodeId, usize, f64)],
        b: usize,
        allowed: impl Fn(NodeId) -> bool,
    ) -> Option<(NodeId, usize, f64)> {
        let mut best: Option<(NodeId, usize, f64)> = None;
        for (e, &(j, c, _)) in out.iter().enumerate() {
            if c > b || !allowed(j) {
                continue;
            }
            let v = self.get(self.state_of[cur][e], b - c);
            if v.is_finite() && best.is_none_or(|(_, _, bv)| v > bv) {
                best = Some((j, c, v));
            }
        }
        best
    }

    /// Best non-reversing walk from `from` (entered from nowhere) with `b`
    /// buckets, and its value including `rewards[from]`.
    pub(crate) fn best_walk(
        &self,
        g: &EnvGraph,
        rewards: &[f64],
        costs: &[Vec<(NodeId, usize, f64)>],
        from: NodeId,
        b: usize,
    ) -> Option<(f64, Vec<NodeId>)> {
        if from == g.goal() {
            return Some((rewards[from], vec![from]));
        }
        let (mut j, mut c, v) = self.best_move(from, &costs[from], b, |_| true)?;
        let value = rewards[from] + v;
        let mut walk = vec![from, j];
        let (mut prev, mut b) = (from, b - c);
        while j != g.goal() {
            let next = self.best_move(j, &costs[j], b, |k| k != prev)?;
            prev = j;
            (j, c) = (next.0, next.1);
            b -= c;
            walk.push(j);
        }
        Some((value, walk))
    }
}

pub(crate) fn solve_edge_table(
    g: &EnvGraph,
    rewards: &[f64],
    costs: &[Vec<(NodeId, usize, f64)>],
    max_bucket: usize,
    blocked: &[bool],
) -> EdgeTable {
    let n = g.n();
    let goal = g.goal();
    let mut offset = vec![0usize; n + 1];
    for j in 0..n {
        offset[j + 1] = offset[j] + g.in_edges(j).len();
    }
    let states = offset[n];
    let state_of: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            costs[i]
                .iter()
                .map(|&(j, _, _)| {
                    let slot = g.in_edges(j).iter().position(|&(p, _)| p == i).expect("reverse adjacency");
                    offset[j] + slot
                })
                .collect()
        })
        .collect();
    let mut values = vec![f64::NEG_INFINITY; states * (max_bucket + 1)];
    for b in 0..=max_bucket {
        for j in 0..n {
            if blocked[j] {
                continue;
            }
            for (slot, &(p, _)) in g.in_edges(j).iter().enumerate() {
                let v = if j == goal {
                    rewards[goal]
                } else {
                    let mut best = f64::NEG_INFINITY;
                    for (e, &(k, c, _)) in costs[j].iter().enumerate() {
                        if c <= b && k != p && !blocked[k] {
                            best = best.max(values[(b - c) * states + state_of[j][e]]);
                        }
                    }
                    rewards[j] + best
                };
                values[b * states + offset[j] + slot] = v;
            }
        }
    }
    EdgeTable { state_of, states, values }
}

enum Table {
    Node(ValueTable),
    Edge(EdgeTable),
}

impl Table {
    fn best_move(
        &self,
        cur: NodeId,
        out: &[(NodeId, usize, f64)],
        b: usize,
        allowed: impl Fn(NodeId) -> bool,
    ) -> Option<NodeId> {
        match self {
            Table::Node(t) => best_successor(t, out, b, allowed).map(|(j, _)| j),
            Table::Edge(t) => t.best_move(cur, out, b, allowed).map(|(j, _, _)| j),
        }
    }
}

/// Removes cycles from a walk in the order they close.
pub(crate) fn loop_erased(walk: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    for &i in walk {
        if let Some(pos) = out.iter().position(|&k| k == i) {
            out.truncate(pos + 1);
        } else {
            out.push(i);
        }
    }
    out
}

/// Simple start-goal path built by re-solving the non-reversing program with
/// the nodes taken so far blocked and taking `steps` moves per solve.
pub(crate) fn receding_simple_path(
    g: &EnvGraph,
    rewards: &[f64],
    costs: &[Vec<(NodeId, usize, f64)>],
    max_bucket: usize,
    steps: usize,
) -> Option<Vec<NodeId>> {
    let mut blocked = vec![false; g.n()];
    let mut seq = vec![g.start()];
    blocked[g.start()] = true;
    let mut b = max_bucket;
    while *seq.last()? != g.goal() {
        let table = solve_edge_table(g, rewards, costs, b, &blocked);
        let cur = *seq.last()?;
        let (_, walk) = table.best_walk(g, rewards, costs, cur, b)?;
        // The loop-erased walk is a simple route to the goal over unblocked
        // nodes that costs no more than the walk, so any prefix of it keeps
        // the goal in reach.
        for &j in loop_erased(&walk).iter().skip(1).take(steps.max(1)) {
            let last = *seq.last()?;
            b -= costs[last].iter().find(|e| e.0 == j)?.1;
            blocked[j] = true;
            seq.push(j);
        }
    }
    Some(seq)
}

/// Longest-walk dynamic program from the goal backwards. Returns the table
/// and the walk obtained by following the best successor from the start with
/// the full budget; the walk may repeat nodes.
pub fn dp_orienteering(
    g: &EnvGraph,
    rewards: &[f64],
    budget: f64,
    resolution: Option<f64>,
) -> Result<(ValueTable, Vec<NodeId>)> {
    if rewards.len() != g.n() || rewards.iter().any(|r| !r.is_finite()) {
        return Err(IppError::InvalidArgument("one finite reward per node required".into()));
    }
    check_budget(g, budget)?;
    let res = resolution.unwrap_or_else(|| g.default_budget_resolution(budget));
    let costs = bucket_costs(g, res);
    let max_bucket = budget_buckets(budget, res);
    let table = solve_table(g, rewards, &costs, max_bucket, res, &vec![false; g.n()]);
    if !table.get(g.start(), max_bucket).is_finite() {
        let shortest = g.shortest_costs_to_goal()[g.start()];
        return Err(IppError::InfeasibleBudget { budget, shortest });
    }
    let mut walk = vec![g.start()];
    let (mut cur, mut b) = (g.start(), max_bucket);
    while cur != g.goal() {
        let (j, c) = best_successor(&table, &costs[cur], b, |_| true)
            .ok_or_else(|| IppError::Inconsistent("finite value without a successor".into()))?;
        walk.push(j);
        cur = j;
        b -= c;
    }
    Ok((table, walk))
}

fn best_successor(
    table: &ValueTable,
    out: &[(NodeId, usize, f64)],
    b: usize,
    allowed: impl Fn(NodeId) -> bool,
) -> Option<(NodeId, usize)> {
    let mut best: Option<(NodeId, usize, f64)> = None;
    for &(j, c, _) in out {
        if c > b || !allowed(j) {
            continue;
        }
        let v = table.get(j, b - c);
        if v.is_finite() && best.is_none_or(|(_, _, bv)| v > bv) {
            best = Some((j, c, v));
        }
    }
    best.map(|(j, c, _)| (j, c))
}

/// State shared by the agents of one planning run.
pub(crate) struct Context<'a> {
    pub space: &'a DesignSpace,
    pub model: &'a SensorModel,
    pub cfg: &'a PlannerConfig,
    pub world: &'a mut dyn MeasurementSource,
    pub y_min: f64,
    pub deadline: Instant,
    pub n_nodes: usize,
}

impl Context<'_> {
    pub fn new<'a>(
        space: &'a DesignSpace,
        model: &'a SensorModel,
        cfg: &'a PlannerConfig,
        world: &'a mut dyn MeasurementSource,
        n_nodes: usize,
    ) -> Context<'a> {
        let y_min = space.prior_node_means().iter().copied().fold(f64::INFINITY, f64::min);
        Context {
            space,
            model,
            cfg,
            world,
            y_min,
            deadline: Instant::now() + Duration::from_secs_f64(cfg.runtime_cap_s.min(1e9)),
            n_nodes,
        }
    }

    pub fn value(&self, belief: &Belief) -> Result<f64> {
        match self.cfg.objective {
            Objective::Ei => Ok(net_ei_normalized(belief, self.y_min, self.n_nodes)),
            obj => eval_belief(obj, belief),
        }
    }
}

/// One agent walking a simple path on its own copy of the graph endpoints.
pub(crate) struct Walker {
    pub g: EnvGraph,
    costs: Vec<Vec<(NodeId, usize, f64)>>,
    resolution: f64,
    pub seq: Vec<NodeId>,
    pub visited: Vec<bool>,
    pub remaining: f64,
    pub budget: f64,
    pub truncated: bool,
    pub measurements: Vec<Measurement>,
    pub trace: Vec<f64>,
}

impl Walker {
    pub fn new(g: EnvGraph, budget: f64, resolution: Option<f64>) -> Result<Self> {
        check_budget(&g, budget)?;
        let resolution = resolution.unwrap_or_else(|| g.default_budget_resolution(budget));
        let costs = bucket_costs(&g, resolution);
        let mut visited = vec![false; g.n()];
        visited[g.start()] = true;
        Ok(Self {
            seq: vec![g.start()],
            visited,
            remaining: budget,
            budget,
            truncated: false,
            measurements: Vec::new(),
            trace: Vec::new(),
            costs,
            resolution,
            g,
        })
    }

    pub fn current(&self) -> NodeId {
        *self.seq.last().expect("non-empty")
    }

    pub fn done(&self) -> bool {
        self.current() == self.g.goal()
    }

    pub fn measure_current(&mut self, belief: &mut Belief, ctx: &mut Context) -> Result<()> {
        let node = self.current();
        let sigma = ctx.model.sigma(node);
        let y = ctx.world.measure(node, sigma);
        *belief = belief.update(node, y, sigma, ctx.model)?;
        ctx.y_min = ctx.y_min.min(y);
        self.measurements.push(Measurement { node, y, sigma });
        self.trace.push(ctx.value(belief)?);
        Ok(())
    }

    fn move_to(&mut self, j: NodeId, belief: &mut Belief, ctx: &mut Context) -> Result<()> {
        let w = self.g.edge_weight(self.current(), j).expect("moves follow edges");
        self.remaining -= w;
        self.seq.push(j);
        self.visited[j] = true;
        self.measure_current(belief, ctx)
    }

    /// Unvisited successors that keep a simple route to the goal in budget.
    fn feasible_moves(&self) -> Vec<(NodeId, f64)> {
        let dist = self.g.shortest_costs_to_goal_avoiding(&self.visited);
        self.g
            .out_edges(self.current())
            .iter()
            .filter(|&&(j, w)| !self.visited[j] && w + dist[j] <= self.remaining + BUDGET_EPS)
            .copied()
            .collect()
    }

    /// Finishes along a shortest route that avoids visited nodes.
    pub fn complete_shortest(&mut self, belief: &mut Belief, ctx: &mut Context) -> Result<()> {
        let route = self
            .g
            .shortest_path_to_goal(self.current(), &self.visited)
            .ok_or_else(|| IppError::Inconsistent("no simple route to the goal remains".into()))?;
        for &j in &route[1..] {
            self.move_to(j, belief, ctx)?;
        }
        Ok(())
    }

    /// One replan followed by up to `execute_steps` moves.
    pub fn aspo_round(&mut self, belief: &mut Belief, ctx: &mut Context) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        if Instant::now() >= ctx.deadline {
            self.truncated = true;
            return self.complete_shortest(belief, ctx);
        }
        let rewards = shaped_rewards(belief, ctx.space, ctx.cfg, ctx.y_min)?;
        let max_bucket = budget_buckets(self.remaining, self.resolution);
        let table = match ctx.cfg.walk_state {
            WalkState::Node => Table::Node(solve_table(
                &self.g,
                &rewards,
                &self.costs,
                max_bucket,
                self.resolution,
                &self.visited,
            )),
            WalkState::Edge => Table::Edge(solve_edge_table(&self.g, &rewards, &self.costs, max_bucket, &self.visited)),
        };
        for _ in 0..ctx.cfg.execute_steps {
            if self.done() {
                break;
            }
            let feasible = self.feasible_moves();
            if feasible.is_empty() {
                return Err(IppError::Inconsistent("walker has no feasible move".into()));
            }
            let b = budget_buckets(self.remaining, self.resolution).min(max_bucket);
            let cur = self.current();
            let ok = |j: NodeId| feasible.iter().any(|&(f, _)| f == j);
            let next = match table.best_move(cur, &self.costs[cur], b, ok) {
                Some(j) => j,
                // The table predates moves made in this round; fall back to
                // the lowest-index feasible move.
                None => feasible[0].0,
            };
            self.move_to(next, belief, ctx)?;
        }
        Ok(())
    }

    pub fn into_report(
        self,
        method: &str,
        objective: Objective,
        value: f64,
        wall_time_s: f64,
    ) -> Result<SolveReport> {
        let path = PathEncoding::from_sequence(&self.g, &self.seq)?;
        Ok(SolveReport {
            method: method.to_string(),
            objective,
            cost: path.total_cost,
            path,
            value,
            budget: self.budget,
            wall_time_s,
            truncated: self.truncated,
            measurements: self.measurements,
            objective_trace: self.trace,
            bound: None,
        })
    }
}

fn run_single(
    method: &str,
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    cfg: &PlannerConfig,
    world: &mut dyn MeasurementSource,
    mut step: impl FnMut(&mut Walker, &mut Belief, &mut Context) -> Result<()>,
) -> Result<SolveReport> {
    cfg.validate(g)?;
    let space = DesignSpace::new(prior.clone(), model)?;
    let started = Instant::now();
    let mut ctx = Context::new(&space, model, cfg, world, g.n());
    let mut walker = Walker::new(g.clone(), cfg.budget, cfg.budget_resolution)?;
    let mut belief = Belief::new(prior.clone());
    walker.measure_current(&mut belief, &mut ctx)?;
    while !walker.done() {
        step(&mut walker, &mut belief, &mut ctx)?;
    }
    let value = ctx.value(&belief)?;
    walker.into_report(method, cfg.objective, value, started.elapsed().as_secs_f64())
}

/// Receding-horizon orienteering planner.
pub fn aspo_plan(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    cfg: &PlannerConfig,
    world: &mut dyn MeasurementSource,
) -> Result<SolveReport> {
    run_single("aspo", g, model, prior, cfg, world, |w, b, ctx| w.aspo_round(b, ctx))
}

/// Uniform choice among moves that keep the goal reachable in budget.
pub fn random_baseline(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    cfg: &PlannerConfig,
    world: &mut dyn MeasurementSource,
) -> Result<SolveReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    run_single("random", g, model, prior, cfg, world, |w, b, ctx| {
        let moves = w.feasible_moves();
        if moves.is_empty() {
            return Err(IppError::Inconsistent("walker has no feasible move".into()));
        }
        let j = moves[rng.random_range(0..moves.len())].0;
        w.move_to(j, b, ctx)
    })
}

/// One-step lookahead: the move with the best objective after measuring its
/// endpoint; ties go to the lowest node index.
pub fn greedy_baseline(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    cfg: &PlannerConfig,
    world: &mut dyn MeasurementSource,
) -> Result<SolveReport> {
    run_single("greedy", g, model, prior, cfg, world, |w, b, ctx| {
        let moves = w.feasible_moves();
        if moves.is_empty() {
            return Err(IppError::Inconsistent("walker has no feasible move".into()));
        }
        // Scores are "higher is better" for both cases.
        let scores = node_rewards(b, ctx.space, ctx.cfg.objective, ctx.y_min)?;
        let mut best = moves[0].0;
        for &(j, _) in &moves[1..] {
            if scores[j] > scores[best] {
                best = j;
            }
        }
        w.move_to(best, b, ctx)
    })
}
