//! Lower bounds from convex relaxations, an exact branch-and-bound solver for
//! small graphs, relax-and-round, and optimality gaps.
//!
//! Relaxations work on node weights `w` in `[0,1]^n` (start and goal fixed at
//! one) and are minimized with Frank-Wolfe. Two feasible sets are supported:
//!
//! - `BoxBudget`: every node reachable within budget, at most as many nodes as
//!   the cheapest edges allow;
//! - `WalkPolytope`: the convex hull of node sets of start-goal walks within
//!   budget. Its linear oracle is a longest-walk dynamic program without
//!   immediate reversals; node capacities are dualized with subgradient
//!   multipliers so that repeated visits are not rewarded twice, and the
//!   returned vertex is the best simple path found along the way.
//!
//! For a convex objective and any point `w`,
//! `f(w) + min_v <grad f(w), v - w>` is below the optimum over the set, so any
//! lower estimate of the linear minimum yields a valid bound at every
//! iteration.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::envgraph::{EnvGraph, NodeId, PathEncoding, BUDGET_EPS};
use crate::error::{IppError, Result};
use crate::objectives::{DesignSpace, Objective, Offset};
use crate::planner::{budget_buckets, check_budget, receding_simple_path, solve_edge_table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKind {
    WalkPolytope,
    BoxBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    /// `(upper - lower) / m`.
    pub gap_delta: f64,
    /// `m * delta / lower`, the relative gap for A.
    pub gap_ratio_a: f64,
    /// `exp(delta)`, the ratio of mean confidence radii for D.
    pub gap_ratio_d: f64,
    pub relaxation_kind: RelaxationKind,
    pub iterations: usize,
    pub fw_gap: f64,
}

/// Gap figures for an upper value `upper` and lower bound `lower` over `m`
/// prediction points.
pub fn gap(
    upper: f64,
    lower: f64,
    m: usize,
    kind: RelaxationKind,
    iterations: usize,
    fw_gap: f64,
) -> Result<BoundReport> {
    if lower > upper + 1e-6 {
        return Err(IppError::Inconsistent(format!("lower bound {lower} exceeds upper value {upper}")));
    }
    if m == 0 {
        return Err(IppError::InvalidArgument("gap needs at least one prediction point".into()));
    }
    let delta = (upper - lower) / m as f64;
    Ok(BoundReport {
        lower,
        upper,
        gap_delta: delta,
        gap_ratio_a: m as f64 * delta / lower,
        gap_ratio_d: delta.exp(),
        relaxation_kind: kind,
        iterations,
        fw_gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub kind: RelaxationKind,
    pub max_iters: usize,
    /// Stop when the certified gap falls below `tol * max(1, |f|)`.
    pub tol: f64,
    /// Subgradient steps per walk-oracle call.
    pub multiplier_iters: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { kind: RelaxationKind::WalkPolytope, max_iters: 200, tol: 1e-6, multiplier_iters: 30 }
    }
}

impl RelaxOptions {
    pub fn with_kind(kind: RelaxationKind) -> Self {
        Self { kind, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Relaxation {
    pub weights: Vec<f64>,
    /// Certified lower bound on the objective of every feasible path.
    pub lower: f64,
    /// Objective at `weights`.
    pub primal: f64,
    /// `primal - lower`.
    pub fw_gap: f64,
    pub iterations: usize,
    pub kind: RelaxationKind,
    /// Walks in the final convex combination with their coefficients.
    pub active: Vec<(f64, Vec<NodeId>)>,
}

pub(crate) struct Vertex {
    /// Lower estimate of `min <g, v>` over the feasible set.
    pub estimate: f64,
    pub weights: Vec<f64>,
    pub walk: Option<Vec<NodeId>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes a convex function of `t` on `[0, 1]`.
fn golden_section(mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    // The endpoint may be the minimizer of a monotone segment.
    let (f_mid, f_one) = (f(mid)?, f(1.0)?);
    Ok(if f_one <= f_mid { 1.0 } else { mid })
}

pub(crate) struct FwOutcome {
    pub w: Vec<f64>,
    pub primal: f64,
    pub lower: f64,
    pub iterations: usize,
    pub active: Vec<(f64, Vec<NodeId>)>,
}

pub(crate) fn frank_wolfe(
    space: &DesignSpace,
    obj: Objective,
    off: Option<&Offset>,
    w0: Vec<f64>,
    walk0: Option<Vec<NodeId>>,
    max_iters: usize,
    tol: f64,
    mut lmo: impl FnMut(&[f64]) -> Result<Vertex>,
) -> Result<FwOutcome> {
    let mut w = w0;
    let mut active: Vec<(f64, Vec<NodeId>)> = walk0.map(|p| vec![(1.0, p)]).unwrap_or_default();
    let mut lower = f64::NEG_INFINITY;
    let mut primal = space.evaluate_with(obj, &w, off)?;
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let (f, grad) = space.eval_grad_with(obj, &w, off)?;
        primal = f;
        let vertex = lmo(&grad)?;
        let gw = dot(&grad, &w);
        lower = lower.max(f - (gw - vertex.estimate));
        if primal - lower <= tol * primal.abs().max(1.0) {
            break;
        }
        let slope = dot(&grad, &vertex.weights) - gw;
        if slope >= -1e-15 * gw.abs().max(1.0) {
            // The oracle's vertex does not improve on w.
            break;
        }
        let gamma = match obj {
            Objective::B => 1.0,
            _ => {
                let qw = space.white_precision_with(&w, off);
                let qv = space.white_precision_with(&vertex.weights, off);
                let dq = &qv - &qw;
                golden_section(|t| space.value_from_white(obj, &(&qw + &dq * t), 0.0))?
            }
        };
        for (wi, vi) in w.iter_mut().zip(&vertex.weights) {
            *wi = ((1.0 - gamma) * *wi + gamma * vi).clamp(0.0, 1.0);
        }
        if let Some(walk) = vertex.walk {
            for entry in &mut active {
                entry.0 *= 1.0 - gamma;
            }
            match active.iter_mut().find(|(_, p)| *p == walk) {
                Some(entry) => entry.0 += gamma,
                None => active.push((gamma, walk)),
            }
            active.retain(|(a, _)| *a > 1e-14);
        }
    }
    primal = space.evaluate_with(obj, &w, off)?.min(primal);
    Ok(FwOutcome { w, primal, lower: lower.min(primal), iterations, active })
}

/// Nodes lying on some start-goal walk within `budget`.
fn walk_reachable(g: &EnvGraph, budget: f64) -> Vec<bool> {
    let from = g.shortest_costs_from(g.start(), &[]);
    let to = g.shortest_costs_to_goal();
    (0..g.n()).map(|v| from[v] + to[v] <= budget + BUDGET_EPS).collect()
}

/// Box oracle: fixed nodes at one, the `k` most negative eligible gradient
/// entries at one.
pub(crate) fn box_vertex(grad: &[f64], fixed: &[bool], eligible: &[bool], k: usize) -> Vertex {
    let n = grad.len();
    let mut weights = vec![0.0; n];
    let mut estimate = 0.0;
    let mut free: Vec<NodeId> = Vec::new();
    for i in 0..n {
        if fixed[i] {
            weights[i] = 1.0;
            estimate += grad[i];
        } else if eligible[i] && grad[i] < 0.0 {
            free.push(i);
        }
    }
    free.sort_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(a.cmp(&b)));
    for &i in free.iter().take(k) {
        weights[i] = 1.0;
        estimate += grad[i];
    }
    Vertex { estimate, weights, walk: None }
}

/// Bucket costs rounded down, so that every path within budget stays within
/// the bucket budget.
fn relaxed_costs(g: &EnvGraph, budget: f64) -> (Vec<Vec<(NodeId, usize, f64)>>, usize) {
    let mut res = g.default_budget_resolution(budget);
    let wmin = g.min_edge_weight();
    if wmin > 0.0 && wmin < res {
        res = wmin;
    }
    let costs = (0..g.n())
        .map(|i| {
            g.out_edges(i)
                .iter()
                .map(|&(j, w)| (j, ((w / res + 1e-9).floor().max(1.0)) as usize, w))
                .collect()
        })
        .collect();
    (costs, budget_buckets(budget, res))
}

/// Moves taken per solve when building a simple path for the oracle.
const PRIMAL_STEPS: usize = 4;

/// Longest-walk oracle with dualized node capacities.
struct WalkOracle<'a> {
    g: &'a EnvGraph,
    costs: Vec<Vec<(NodeId, usize, f64)>>,
    max_bucket: usize,
    mu: Vec<f64>,
    iters: usize,
}

impl<'a> WalkOracle<'a> {
    fn new(g: &'a EnvGraph, budget: f64, iters: usize) -> Self {
        let (costs, max_bucket) = relaxed_costs(g, budget);
        Self { g, costs, max_bucket, mu: vec![0.0; g.n()], iters: iters.max(1) }
    }

    fn best_walk(&self, rewards: &[f64]) -> (f64, Vec<NodeId>) {
        let n = self.g.n();
        let table = solve_edge_table(self.g, rewards, &self.costs, self.max_bucket, &vec![false; n]);
        table
            .best_walk(self.g, rewards, &self.costs, self.g.start(), self.max_bucket)
            .expect("budget admits a start-goal walk")
    }

    /// Upper estimate of `max_path sum_{i in path} rho_i` and a simple path
    /// collecting as much `rho` as the heuristics find.
    fn solve(&mut self, rho: &[f64]) -> (f64, Vec<NodeId>) {
        let n = self.g.n();
        let set_value = |walk: &[NodeId]| {
            let mut seen = vec![false; n];
            walk.iter().filter(|&&i| !std::mem::replace(&mut seen[i], true)).map(|&i| rho[i]).sum::<f64>()
        };
        let mut best_walk = receding_simple_path(self.g, rho, &self.costs, self.max_bucket, PRIMAL_STEPS)
            .expect("budget admits a start-goal path");
        let mut target = set_value(&best_walk);
        // Multipliers from the previous gradient, capped by the new rewards.
        for (m, r) in self.mu.iter_mut().zip(rho) {
            *m = m.min(r.max(0.0));
        }
        let mut best_upper = f64::INFINITY;
        let mut step_scale = 1.0;
        let mut stall = 0;
        for _ in 0..self.iters {
            let r: Vec<f64> = rho.iter().zip(&self.mu).map(|(p, m)| p - m).collect();
            let (value, walk) = self.best_walk(&r);
            let upper = value + self.mu.iter().sum::<f64>();
            if !best_upper.is_finite() || upper < best_upper - 1e-12 * best_upper.abs().max(1.0) {
                best_upper = upper;
                stall = 0;
            } else {
                stall += 1;
                if stall >= 3 {
                    step_scale *= 0.5;
                    stall = 0;
                }
            }
            let mut count = vec![0usize; n];
            for &i in &walk {
                count[i] += 1;
            }
            let v = set_value(&walk);
            if v > target && count.iter().all(|&c| c <= 1) {
                target = v;
                best_walk = walk;
            }
            let mut norm2 = 0.0;
            let mut sub = vec![0.0; n];
            for i in 0..n {
                let d = count[i] as f64 - 1.0;
                if self.mu[i] > 0.0 || d > 0.0 {
                    sub[i] = d;
                    norm2 += d * d;
                }
            }
            if norm2 == 0.0 || best_upper - target <= 1e-9 * best_upper.abs().max(1.0) {
                best_upper = best_upper.min(upper);
                break;
            }
            let step = step_scale * (upper - target).max(1e-12 * upper.abs().max(1.0)) / norm2;
            for i in 0..n {
                self.mu[i] = (self.mu[i] + step * sub[i]).max(0.0);
            }
        }
        let reduced: Vec<f64> = rho.iter().zip(&self.mu).map(|(p, m)| p - m).collect();
        if let Some(p) = receding_simple_path(self.g, &reduced, &self.costs, self.max_bucket, PRIMAL_STEPS) {
            let v = set_value(&p);
            if v > target {
                target = v;
                best_walk = p;
            }
        }
        (best_upper.max(target), best_walk)
    }
}

pub(crate) fn indicator(n: usize, nodes: &[NodeId]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &i in nodes {
        w[i] = 1.0;
    }
    w
}

/// Frank-Wolfe lower bound on the objective of every feasible path.
pub fn relax_lower_bound(
    g: &EnvGraph,
    space: &DesignSpace,
    obj: Objective,
    budget: f64,
    opts: &RelaxOptions,
) -> Result<Relaxation> {
    if !obj.is_static() {
        return Err(IppError::WrongObjective(obj));
    }
    if space.n() != g.n() {
        return Err(IppError::InvalidArgument("design space and graph sizes differ".into()));
    }
    check_budget(g, budget)?;
    let n = g.n();
    let eligible = walk_reachable(g, budget);
    let mut fixed = vec![false; n];
    fixed[g.start()] = true;
    fixed[g.goal()] = true;
    let k = g.max_path_nodes(budget).saturating_sub(2);
    let shortest = g.shortest_path_to_goal(g.start(), &[]).expect("goal reachable");
    let w0 = indicator(n, &shortest);

    let boxed = frank_wolfe(space, obj, None, w0.clone(), None, opts.max_iters, opts.tol, |grad| {
        Ok(box_vertex(grad, &fixed, &eligible, k))
    })?;
    if opts.kind == RelaxationKind::BoxBudget {
        return Ok(Relaxation {
            fw_gap: boxed.primal - boxed.lower,
            weights: boxed.w,
            lower: boxed.lower,
            primal: boxed.primal,
            iterations: boxed.iterations,
            kind: RelaxationKind::BoxBudget,
            active: Vec::new(),
        });
    }

    let mut oracle = WalkOracle::new(g, budget, opts.multiplier_iters);
    let walked = frank_wolfe(space, obj, None, w0, Some(shortest), opts.max_iters, opts.tol, |grad| {
        let rho: Vec<f64> = grad.iter().map(|v| -v).collect();
        let (upper, walk) = oracle.solve(&rho);
        let boxed_est = box_vertex(grad, &fixed, &eligible, k).estimate;
        let mut set: Vec<NodeId> = walk.clone();
        set.sort_unstable();
        set.dedup();
        Ok(Vertex { estimate: (-upper).max(boxed_est), weights: indicator(n, &set), walk: Some(walk) })
    })?;
    // The linearization bound holds at any point of the cube, so also try it
    // between the two relaxed solutions.
    let mut lower = walked.lower.max(boxed.lower);
    for t in [0.0, 0.25, 0.5, 0.75] {
        let w: Vec<f64> = boxed.w.iter().zip(&walked.w).map(|(b, a)| (1.0 - t) * b + t * a).collect();
        let (f, grad) = space.eval_grad(obj, &w)?;
        let rho: Vec<f64> = grad.iter().map(|v| -v).collect();
        let (upper, _) = oracle.solve(&rho);
        let est = (-upper).max(box_vertex(&grad, &fixed, &eligible, k).estimate);
        lower = lower.max(f - dot(&grad, &w) + est);
    }
    let lower = lower.min(walked.primal);
    Ok(Relaxation {
        fw_gap: walked.primal - lower,
        weights: walked.w,
        lower,
        primal: walked.primal,
        iterations: walked.iterations,
        kind: RelaxationKind::WalkPolytope,
        active: walked.active,
    })
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    pub path: PathEncoding,
    pub value: f64,
    pub truncated: bool,
    pub nodes_explored: usize,
}

/// Depth-first branch and bound over simple paths, branching on successors
/// in increasing node order. A partial path is pruned when even measuring
/// every node still reachable on a completion cannot beat the incumbent.
pub fn exact_small(
    g: &EnvGraph,
    space: &DesignSpace,
    obj: Objective,
    budget: f64,
    runtime_cap_s: f64,
) -> Result<ExactResult> {
    if !obj.is_static() {
        return Err(IppError::WrongObjective(obj));
    }
    check_budget(g, budget)?;
    let n = g.n();
    let mut search = Search {
        g,
        space,
        obj,
        deadline: Instant::now() + Duration::from_secs_f64(runtime_cap_s.clamp(0.0, 1e9)),
        wmin: g.min_edge_weight(),
        seq: vec![g.start()],
        visited: indicator(n, &[g.start()]).iter().map(|&v| v > 0.0).collect(),
        best: None,
        truncated: false,
        explored: 0,
    };
    search.rec(budget)?;
    let (value, seq) = match search.best {
        Some(b) => b,
        None => {
            // Only reachable when the cap expired before the first leaf.
            let seq = g.shortest_path_to_goal(g.start(), &[]).expect("goal reachable");
            (space.evaluate(obj, &indicator(n, &seq))?, seq)
        }
    };
    Ok(ExactResult {
        path: PathEncoding::from_sequence(g, &seq)?,
        value,
        truncated: search.truncated,
        nodes_explored: search.explored,
    })
}

struct Search<'a> {
    g: &'a EnvGraph,
    space: &'a DesignSpace,
    obj: Objective,
    deadline: Instant,
    wmin: f64,
    seq: Vec<NodeId>,
    visited: Vec<bool>,
    best: Option<(f64, Vec<NodeId>)>,
    truncated: bool,
    explored: usize,
}

impl Search<'_> {
    fn weights(&self) -> Vec<f64> {
        self.visited.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect()
    }

    fn rec(&mut self, remaining: f64) -> Result<()> {
        self.explored += 1;
        if self.explored % 64 == 0 && Instant::now() >= self.deadline {
            self.truncated = true;
        }
        if self.truncated {
            return Ok(());
        }
        let g = self.g;
        let cur = *self.seq.last().expect("non-empty");
        let n = g.n();
        if cur == g.goal() {
            let v = self.space.evaluate(self.obj, &self.weights())?;
            if self.best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                self.best = Some((v, self.seq.clone()));
            }
            return Ok(());
        }
        let mut blocked = self.visited.clone();
        blocked[cur] = false;
        let from = g.shortest_costs_from(cur, &blocked);
        let to = g.shortest_costs_to_goal_avoiding(&self.visited);
        if let Some((incumbent, _)) = &self.best {
            let incumbent = *incumbent;
            let eligible: Vec<bool> =
                (0..n).map(|v| !self.visited[v] && from[v] + to[v] <= remaining + BUDGET_EPS).collect();
            let bound = self.completion_bound(&eligible, remaining)?;
            if bound >= incumbent {
                return Ok(());
            }
        }
        for &(j, w) in g.out_edges(cur) {
            if self.visited[j] || w + to[j] > remaining + BUDGET_EPS {
                continue;
            }
            self.visited[j] = true;
            self.seq.push(j);
            self.rec(remaining - w)?;
            self.seq.pop();
            self.visited[j] = false;
        }
        Ok(())
    }

    /// Lower bound over all completions: relaxation with the visited nodes
    /// fixed, eligible nodes free, and at most as many new nodes as the
    /// remaining budget buys.
    fn completion_bound(&self, eligible: &[bool], remaining: f64) -> Result<f64> {
        let base = self.weights();
        let k = if self.wmin > 0.0 {
            ((remaining + BUDGET_EPS) / self.wmin).floor() as usize
        } else {
            usize::MAX
        };
        let count = eligible.iter().filter(|&&e| e).count();
        let mut all = base.clone();
        for (i, &e) in eligible.iter().enumerate() {
            if e {
                all[i] = 1.0;
            }
        }
        // Measuring more never hurts, so the full superset is a bound.
        let superset = self.space.evaluate(self.obj, &all)?;
        if count <= k {
            return Ok(superset);
        }
        let fixed: Vec<bool> = self.visited.clone();
        let out = frank_wolfe(self.space, self.obj, None, base, None, 25, 1e-9, |grad| {
            Ok(box_vertex(grad, &fixed, eligible, k))
        })?;
        Ok(out.lower.max(superset))
    }
}

/// Feasible path from relaxed weights and an optional order surrogate. From
/// the current node, move to the feasible unvisited successor with the
/// smallest order value above the current one; without such a successor take
/// the heaviest one; with no weight left, finish along a shortest route. Ties
/// go to the lowest node index.
pub fn round_path(g: &EnvGraph, weights: &[f64], order: Option<&[f64]>, budget: f64) -> Result<PathEncoding> {
    check_budget(g, budget)?;
    let n = g.n();
    if weights.len() != n || order.is_some_and(|o| o.len() != n) {
        return Err(IppError::InvalidArgument("one weight and order value per node required".into()));
    }
    let mut visited = vec![false; n];
    visited[g.start()] = true;
    let mut seq = vec![g.start()];
    let mut remaining = budget;
    while *seq.last().expect("non-empty") != g.goal() {
        let cur = *seq.last().expect("non-empty");
        let dist = g.shortest_costs_to_goal_avoiding(&visited);
        let moves: Vec<(NodeId, f64)> = g
            .out_edges(cur)
            .iter()
            .filter(|&&(j, w)| !visited[j] && w + dist[j] <= remaining + BUDGET_EPS)
            .copied()
            .collect();
        let by_order = order.and_then(|u| {
            moves
                .iter()
                .filter(|&&(j, _)| u[j].is_finite() && u[j] > u[cur])
                .min_by(|a, b| u[a.0].total_cmp(&u[b.0]).then(a.0.cmp(&b.0)))
                .copied()
        });
        let by_weight = moves
            .iter()
            .filter(|&&(j, _)| weights[j] > 0.0)
            .max_by(|a, b| weights[a.0].total_cmp(&weights[b.0]).then(b.0.cmp(&a.0)))
            .copied();
        match by_order.or(by_weight) {
            Some((j, w)) => {
                remaining -= w;
                visited[j] = true;
                seq.push(j);
            }
            None => {
                let rest = g
                    .shortest_path_to_goal(cur, &visited)
                    .ok_or_else(|| IppError::Inconsistent("rounding lost the route to the goal".into()))?;
                seq.extend_from_slice(&rest[1..]);
            }
        }
    }
    PathEncoding::from_sequence(g, &seq)
}

/// Average first-visit position of each node over the walks of a
/// relaxation's convex combination; `+inf` for nodes no walk visits.
pub fn order_surrogate(n: usize, active: &[(f64, Vec<NodeId>)]) -> Vec<f64> {
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (alpha, walk) in active {
        let mut seen = vec![false; n];
        for (pos, &i) in walk.iter().enumerate() {
            if !seen[i] {
                seen[i] = true;
                num[i] += alpha * (pos + 1) as f64;
                den[i] += alpha;
            }
        }
    }
    num.iter().zip(&den).map(|(a, d)| if *d > 0.0 { a / d } else { f64::INFINITY }).collect()
}

/// Solves the walk relaxation and rounds it to a feasible path.
pub fn relax_and_round(
    g: &EnvGraph,
    space: &DesignSpace,
    obj: Objective,
    budget: f64,
    opts: &RelaxOptions,
) -> Result<(PathEncoding, Relaxation)> {
    let relax = relax_lower_bound(g, space, obj, budget, opts)?;
    let order = (!relax.active.is_empty()).then(|| order_surrogate(g.n(), &relax.active));
    let path = round_path(g, &relax.weights, order.as_deref(), budget)?;
    Ok((path, relax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{default_characterization, GaussianPrior, KernelSpec};
    use crate::envgraph::{build_grid, enumerate_feasible_paths, validate_path, EdgeWeightMode};
    use std::sync::Arc;

    fn space(side: usize, ell: f64) -> (EnvGraph, DesignSpace) {
        let g = build_grid(side, EdgeWeightMode::Unit).unwrap();
        let k = KernelSpec::squared_exponential(ell);
        let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &k).unwrap());
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        let s = DesignSpace::new(prior, &model).unwrap();
        (g, s)
    }

    #[test]
    fn gap_figures() {
        let r = gap(5.0, 5.0, 20, RelaxationKind::BoxBudget, 1, 0.0).unwrap();
        assert_eq!(r.gap_delta, 0.0);
        assert_eq!(r.gap_ratio_d, 1.0);
        let r = gap(3.0 + 20.0, 3.0, 20, RelaxationKind::BoxBudget, 1, 0.0).unwrap();
        assert_eq!(r.gap_delta, 1.0);
        assert!((r.gap_ratio_a - 20.0 / 3.0).abs() < 1e-15);
        assert!(matches!(gap(1.0, 2.0, 20, RelaxationKind::BoxBudget, 1, 0.0), Err(IppError::Inconsistent(_))));
    }

    #[test]
    fn b_is_exact_after_one_step() {
        let (g, s) = space(4, 1.0);
        let r = relax_lower_bound(&g, &s, Objective::B, 8.0, &RelaxOptions::with_kind(RelaxationKind::BoxBudget))
            .unwrap();
        assert!(r.fw_gap <= 1e-9 * r.primal.abs().max(1.0));
        assert!(r.iterations <= 2);
    }

    #[test]
    fn saturating_budget_gives_all_ones() {
        let (g, s) = space(3, 1.0);
        for obj in [Objective::A, Objective::D] {
            let r = relax_lower_bound(&g, &s, obj, 100.0, &RelaxOptions::with_kind(RelaxationKind::BoxBudget)).unwrap();
            let all = s.evaluate(obj, &[1.0; 9]).unwrap();
            assert!((r.lower - all).abs() < 1e-6 * all.abs().max(1.0), "{obj}: {} vs {all}", r.lower);
        }
    }

    #[test]
    fn bounds_hold_for_enumerated_paths() {
        let (g, s) = space(4, 1.5);
        let budget = 8.0;
        let paths = enumerate_feasible_paths(&g, budget, 5000).paths;
        for obj in [Objective::A, Objective::B, Objective::D] {
            let walk = relax_lower_bound(&g, &s, obj, budget, &RelaxOptions::default()).unwrap();
            let boxed =
                relax_lower_bound(&g, &s, obj, budget, &RelaxOptions::with_kind(RelaxationKind::BoxBudget)).unwrap();
            assert!(walk.lower >= boxed.lower - 1e-7);
            for p in &paths {
                let v = s.evaluate(obj, &indicator(g.n(), &p.sequence)).unwrap();
                assert!(v >= walk.lower - 1e-7, "{obj}: path {v} below bound {}", walk.lower);
            }
        }
    }

    #[test]
    fn exact_matches_enumeration_on_3x3() {
        let (g, s) = space(3, 1.0);
        for obj in [Objective::A, Objective::B, Objective::D] {
            for budget in [4.0, 6.0] {
                let ex = exact_small(&g, &s, obj, budget, 10.0).unwrap();
                let best = enumerate_feasible_paths(&g, budget, 10_000)
                    .paths
                    .iter()
                    .map(|p| s.evaluate(obj, &indicator(9, &p.sequence)).unwrap())
                    .fold(f64::INFINITY, f64::min);
                assert!((ex.value - best).abs() <= 1e-10 * best.abs().max(1.0));
                assert!(!ex.truncated);
            }
        }
    }

    #[test]
    fn exact_on_2x2_and_unique_shortest() {
        let (g, s) = space(2, 1.0);
        let ex = exact_small(&g, &s, Objective::A, 2.0, 5.0).unwrap();
        let vals: Vec<f64> = enumerate_feasible_paths(&g, 2.0, 10)
            .paths
            .iter()
            .map(|p| s.evaluate(Objective::A, &indicator(4, &p.sequence)).unwrap())
            .collect();
        assert_eq!(vals.len(), 2);
        assert!((ex.value - vals[0].min(vals[1])).abs() < 1e-12);

        let coords = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)];
        let line = EnvGraph::new(coords, &edges, 0, 2, vec![[1.0, 0.0]]).unwrap();
        let k = KernelSpec::squared_exponential(1.0);
        let prior = Arc::new(GaussianPrior::from_kernel(line.prediction_points(), &k).unwrap());
        let model = default_characterization(&line, &prior, &k, 1.0).unwrap();
        let ls = DesignSpace::new(prior, &model).unwrap();
        let ex = exact_small(&line, &ls, Objective::D, 2.0, 5.0).unwrap();
        assert_eq!(ex.path.sequence, vec![0, 1, 2]);
    }

    #[test]
    fn exact_rejects_short_budget() {
        let (g, s) = space(3, 1.0);
        assert!(matches!(exact_small(&g, &s, Objective::A, 3.0, 1.0), Err(IppError::InfeasibleBudget { .. })));
    }

    #[test]
    fn rounding_an_integral_path_returns_it() {
        let g = build_grid(4, EdgeWeightMode::Unit).unwrap();
        let seq = vec![0, 4, 5, 1, 2, 6, 10, 11, 15];
        let w = indicator(16, &seq);
        let order = order_surrogate(16, &[(1.0, seq.clone())]);
        let p = round_path(&g, &w, Some(&order), 8.0).unwrap();
        assert_eq!(p.sequence, seq);
    }

    #[test]
    fn rounding_equal_weights_takes_lowest_index() {
        let g = build_grid(3, EdgeWeightMode::Unit).unwrap();
        let p = round_path(&g, &[0.5; 9], None, 4.0).unwrap();
        assert_eq!(p.sequence, vec![0, 1, 2, 5, 8]);
        assert!(validate_path(&g, &p, 4.0).is_valid());
    }

    #[test]
    fn relax_and_round_is_feasible_and_above_bound() {
        let (g, s) = space(5, 1.0);
        let (p, r) = relax_and_round(&g, &s, Objective::A, 16.0, &RelaxOptions::default()).unwrap();
        assert!(validate_path(&g, &p, 16.0).is_valid());
        let v = s.evaluate(Objective::A, &indicator(25, &p.sequence)).unwrap();
        assert!(v >= r.lower - 1e-9);
    }
}
