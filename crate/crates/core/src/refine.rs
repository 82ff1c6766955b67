//! Post-hoc improvements of a finished path: one-hop swap polishing and
//! multimodal sensor selection.
//!
//! A swap replaces an interior node `i` by an off-path node `j` adjacent to
//! both of `i`'s path neighbours, provided the path length is unchanged. On a
//! grid this flips a corner of the path across its unit square.
//!
//! Sensor selection keeps the path fixed and decides which `k` of its nodes
//! get the better sensors of a ladder. The continuous relaxation spreads `k`
//! units of importance over the path nodes; rounding hands the ladder out in
//! order of importance, and upgraded nodes replace their baseline
//! measurement at the largest noise level.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{GaussianPrior, SensorModel};
use crate::bounds::{frank_wolfe, indicator, Vertex};
use crate::envgraph::{validate_path, EnvGraph, NodeId, PathEncoding, BUDGET_EPS};
use crate::error::{IppError, Result};
use crate::objectives::{DesignSpace, Objective};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapBudget {
    /// Maximum number of local steps.
    pub n_loc: usize,
    pub rng_seed: u64,
    /// Sweep the interior positions in order, stopping at the first sweep
    /// without an improving swap, instead of sampling positions.
    pub exhaustive: bool,
}

impl SwapBudget {
    pub fn new(n_loc: usize, rng_seed: u64) -> Result<Self> {
        if n_loc == 0 {
            return Err(IppError::InvalidArgument("n_loc must be at least 1".into()));
        }
        Ok(Self { n_loc, rng_seed, exhaustive: false })
    }

    pub fn exhaustive(mut self) -> Self {
        self.exhaustive = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Polished {
    pub path: PathEncoding,
    pub initial: f64,
    pub value: f64,
    /// Objective after each accepted swap.
    pub accepted: Vec<f64>,
    pub steps: usize,
}

fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= BUDGET_EPS * a.abs().max(1.0)
}

/// Off-path replacements for the node at position `t` of `seq`.
pub fn swap_candidates(g: &EnvGraph, seq: &[NodeId], on_path: &[bool], t: usize) -> Vec<NodeId> {
    if t == 0 || t + 1 >= seq.len() {
        return Vec::new();
    }
    let (pred, i, succ) = (seq[t - 1], seq[t], seq[t + 1]);
    let (Some(w1), Some(w2)) = (g.edge_weight(pred, i), g.edge_weight(i, succ)) else {
        return Vec::new();
    };
    g.out_edges(pred)
        .iter()
        .filter(|&&(j, _)| !on_path[j])
        .filter_map(|&(j, a)| g.edge_weight(j, succ).filter(|b| same_cost(a + b, w1 + w2)).map(|_| j))
        .collect()
}

/// Local search over one-hop swaps; a swap is applied only if it strictly
/// lowers the objective.
pub fn polish(
    g: &EnvGraph,
    space: &DesignSpace,
    obj: Objective,
    p: &PathEncoding,
    sb: &SwapBudget,
) -> Result<Polished> {
    if !obj.is_static() {
        return Err(IppError::WrongObjective(obj));
    }
    if sb.n_loc == 0 {
        return Err(IppError::InvalidArgument("n_loc must be at least 1".into()));
    }
    let verdict = validate_path(g, p, p.total_cost + BUDGET_EPS);
    if !verdict.is_valid() {
        return Err(IppError::InvalidArgument(format!("path to polish is infeasible: {:?}", verdict.violations)));
    }
    let n = g.n();
    let mut seq = p.sequence.clone();
    let mut on_path = vec![false; n];
    for &i in &seq {
        on_path[i] = true;
    }
    let initial = space.evaluate(obj, &indicator(n, &seq))?;
    let mut value = initial;
    let mut accepted = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(sb.rng_seed);
    let interior = seq.len().saturating_sub(2);
    let mut steps = 0;
    let mut since_improvement = 0;
    while steps < sb.n_loc && interior > 0 {
        let t = if sb.exhaustive { 1 + steps % interior } else { rng.random_range(1..=interior) };
        steps += 1;
        let mut best: Option<(f64, NodeId)> = None;
        let old = seq[t];
        for j in swap_candidates(g, &seq, &on_path, t) {
            seq[t] = j;
            let v = space.evaluate(obj, &indicator(n, &seq))?;
            if v < value && best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, j));
            }
        }
        seq[t] = old;
        match best {
            Some((v, j)) => {
                on_path[old] = false;
                on_path[j] = true;
                seq[t] = j;
                value = v;
                accepted.push(v);
                since_improvement = 0;
            }
            None => since_improvement += 1,
        }
        if sb.exhaustive && since_improvement >= interior {
            break;
        }
    }
    let path = PathEncoding::from_sequence(g, &seq)?;
    Ok(Polished { path, initial, value, accepted, steps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorAssignment {
    /// Relaxed importance of every path node.
    pub s: BTreeMap<NodeId, f64>,
    /// Upgraded nodes and their noise levels.
    pub chosen: BTreeMap<NodeId, f64>,
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct SensorSelection {
    pub assignment: SensorAssignment,
    /// Objective of the relaxed solution.
    pub relaxed_value: f64,
    /// Certified lower bound on the relaxed optimum.
    pub lower_bound: f64,
    pub rounded_value: f64,
    /// Every path node at the largest noise level.
    pub baseline_value: f64,
    pub iterations: usize,
}

fn check_static(obj: Objective) -> Result<()> {
    if obj.is_static() {
        Ok(())
    } else {
        Err(IppError::WrongObjective(obj))
    }
}

fn path_nodes(g: &EnvGraph, p: &PathEncoding) -> Result<Vec<NodeId>> {
    let set: BTreeSet<NodeId> = p.sequence.iter().copied().collect();
    if set.iter().any(|&i| i >= g.n()) {
        return Err(IppError::InvalidArgument("path node outside the graph".into()));
    }
    Ok(set.into_iter().collect())
}

fn check_ladder(model: &SensorModel, ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(IppError::InvalidArgument("sensor ladder is empty".into()));
    }
    if ladder.windows(2).any(|w| w[1] < w[0]) {
        return Err(IppError::InvalidArgument("sensor ladder must be ascending".into()));
    }
    let tol = 1e-12 * model.sigma_max();
    if ladder.iter().any(|&s| !(s >= model.sigma_min() - tol && s <= model.sigma_max() + tol)) {
        return Err(IppError::InvalidArgument(format!(
            "ladder values must lie in [{}, {}]",
            model.sigma_min(),
            model.sigma_max()
        )));
    }
    Ok(())
}

/// Objective of the path measured at the model's largest noise level except
/// at `chosen` nodes, which use the given levels instead.
pub fn assignment_value(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    obj: Objective,
    p: &PathEncoding,
    chosen: &BTreeMap<NodeId, f64>,
) -> Result<f64> {
    check_static(obj)?;
    let nodes = path_nodes(g, p)?;
    if chosen.keys().any(|i| !nodes.contains(i)) {
        return Err(IppError::InvalidArgument("upgraded node is not on the path".into()));
    }
    let mut sig = vec![model.sigma_max(); g.n()];
    for (&i, &s) in chosen {
        sig[i] = s;
    }
    DesignSpace::new(prior.clone(), model)?.with_sigmas(&sig)?.evaluate(obj, &indicator(g.n(), &nodes))
}

/// Exactly `k` eligible entries at one: the `k` smallest gradient entries.
fn top_k_vertex(grad: &[f64], eligible: &[NodeId], k: usize) -> Vertex {
    let mut order = eligible.to_vec();
    order.sort_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(a.cmp(&b)));
    let mut weights = vec![0.0; grad.len()];
    let mut estimate = 0.0;
    for &i in order.iter().take(k) {
        weights[i] = 1.0;
        estimate += grad[i];
    }
    Vertex { estimate, weights, walk: None }
}

/// Relaxed sensor selection on a fixed path followed by ladder rounding.
/// Ladders shorter than `k` repeat their last value.
pub fn select_sensors(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    obj: Objective,
    p: &PathEncoding,
    k: usize,
    ladder: &[f64],
) -> Result<SensorSelection> {
    check_static(obj)?;
    check_ladder(model, ladder)?;
    if model.n() != g.n() {
        return Err(IppError::InvalidArgument("sensor model and graph sizes differ".into()));
    }
    let nodes = path_nodes(g, p)?;
    if k > nodes.len() {
        return Err(IppError::InvalidArgument(format!("k = {k} exceeds the {} path nodes", nodes.len())));
    }
    let n = g.n();
    let base = DesignSpace::new(prior.clone(), model)?;
    let path_w = indicator(n, &nodes);
    let path_info = base.with_sigmas(&vec![model.sigma_max(); n])?.offset(&path_w);
    let upgrade = base.with_sigmas(&vec![ladder[0]; n])?;
    let baseline_value = upgrade.evaluate_with(obj, &vec![0.0; n], Some(&path_info))?;

    let (s, relaxed_value, lower_bound, iterations) = if k == 0 {
        (vec![0.0; n], baseline_value, baseline_value, 0)
    } else {
        let mut w0 = vec![0.0; n];
        for &i in &nodes {
            w0[i] = k as f64 / nodes.len() as f64;
        }
        let out = frank_wolfe(&upgrade, obj, Some(&path_info), w0, None, 500, 1e-10, |grad| {
            Ok(top_k_vertex(grad, &nodes, k))
        })?;
        (out.w, out.primal, out.lower, out.iterations)
    };

    let mut ranked = nodes.clone();
    ranked.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let chosen: BTreeMap<NodeId, f64> =
        ranked.iter().take(k).enumerate().map(|(r, &i)| (i, ladder[r.min(ladder.len() - 1)])).collect();
    let rounded_value = assignment_value(g, model, prior, obj, p, &chosen)?;
    Ok(SensorSelection {
        assignment: SensorAssignment { s: nodes.iter().map(|&i| (i, s[i])).collect(), chosen, k },
        relaxed_value,
        lower_bound,
        rounded_value,
        baseline_value,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{default_characterization, KernelSpec};
    use crate::envgraph::{build_grid, EdgeWeightMode};

    fn instance(side: usize, sigma_min: f64) -> (EnvGraph, SensorModel, Arc<GaussianPrior>) {
        let g = build_grid(side, EdgeWeightMode::Unit).unwrap();
        let k = KernelSpec::squared_exponential(1.0);
        let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &k).unwrap());
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap().with_sigma_range(sigma_min, 1.0).unwrap();
        (g, model, prior)
    }

    fn corridor() -> EnvGraph {
        let coords = (0..4).map(|i| [i as f64, 0.0]).collect();
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)];
        EnvGraph::new(coords, &edges, 0, 3, vec![[1.5, 0.0]]).unwrap()
    }

    #[test]
    fn corridor_has_no_swaps() {
        let g = corridor();
        let k = KernelSpec::squared_exponential(1.0);
        let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &k).unwrap());
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        let space = DesignSpace::new(prior, &model).unwrap();
        let p = PathEncoding::from_sequence(&g, &[0, 1, 2, 3]).unwrap();
        let out = polish(&g, &space, Objective::A, &p, &SwapBudget::new(50, 1).unwrap()).unwrap();
        assert_eq!(out.path, p);
        assert!(out.accepted.is_empty());
        assert_eq!(out.value, out.initial);
    }

    #[test]
    fn grid_corner_flips() {
        let g = build_grid(3, EdgeWeightMode::Unit).unwrap();
        let seq = [0, 1, 2, 5, 8];
        let mut on = vec![false; 9];
        for &i in &seq {
            on[i] = true;
        }
        // Node 2 sits on the corner between 1 and 5; its flip is 4.
        assert_eq!(swap_candidates(&g, &seq, &on, 2), vec![4]);
        assert!(swap_candidates(&g, &seq, &on, 1).is_empty());
        assert!(swap_candidates(&g, &seq, &on, 0).is_empty());
    }

    #[test]
    fn polish_is_monotone_and_cost_preserving() {
        let (g, model, prior) = instance(5, 1.0);
        let space = DesignSpace::new(prior, &model).unwrap();
        let p = PathEncoding::from_sequence(&g, &[0, 1, 2, 3, 4, 9, 14, 19, 24]).unwrap();
        for obj in [Objective::A, Objective::D] {
            let out = polish(&g, &space, obj, &p, &SwapBudget::new(200, 7).unwrap()).unwrap();
            assert!(validate_path(&g, &out.path, p.total_cost).is_valid());
            assert_eq!(out.path.total_cost, p.total_cost);
            let mut prev = out.initial;
            for &v in &out.accepted {
                assert!(v < prev);
                prev = v;
            }
            assert!(out.value <= out.initial);
            assert!(!out.accepted.is_empty(), "{obj}: the edge path should bend toward the middle");
        }
    }

    #[test]
    fn exhaustive_sweep_reaches_local_optimum() {
        let (g, model, prior) = instance(5, 1.0);
        let space = DesignSpace::new(prior, &model).unwrap();
        let p = PathEncoding::from_sequence(&g, &[0, 5, 10, 15, 20, 21, 22, 23, 24]).unwrap();
        let sb = SwapBudget::new(10_000, 0).unwrap().exhaustive();
        let out = polish(&g, &space, Objective::A, &p, &sb).unwrap();
        assert!(out.steps < 10_000);
        let seq = &out.path.sequence;
        let mut on = vec![false; 25];
        for &i in seq {
            on[i] = true;
        }
        for t in 1..seq.len() - 1 {
            for j in swap_candidates(&g, seq, &on, t) {
                let mut s2 = seq.clone();
                s2[t] = j;
                assert!(space.evaluate(Objective::A, &indicator(25, &s2)).unwrap() >= out.value);
            }
        }
    }

    #[test]
    fn polish_rejects_adaptive_objective() {
        let g = corridor();
        let prior = Arc::new(GaussianPrior::zero_mean(nalgebra::DMatrix::identity(1, 1)).unwrap());
        let model = SensorModel::uniform(nalgebra::DMatrix::from_element(4, 1, 1.0), 1.0).unwrap();
        let space = DesignSpace::new(prior, &model).unwrap();
        let p = PathEncoding::from_sequence(&g, &[0, 1, 2, 3]).unwrap();
        assert!(matches!(
            polish(&g, &space, Objective::Ei, &p, &SwapBudget::new(1, 0).unwrap()),
            Err(IppError::WrongObjective(_))
        ));
        assert!(SwapBudget::new(0, 0).is_err());
    }

    #[test]
    fn full_upgrade_with_single_level() {
        let (g, model, prior) = instance(3, 0.2);
        let p = PathEncoding::from_sequence(&g, &[0, 1, 2, 5, 8]).unwrap();
        let sel = select_sensors(&g, &model, &prior, Objective::A, &p, 5, &[0.2]).unwrap();
        assert_eq!(sel.assignment.chosen.len(), 5);
        assert!(sel.assignment.chosen.values().all(|&s| s == 0.2));
        let total: f64 = sel.assignment.s.values().sum();
        assert!((total - 5.0).abs() < 1e-8);
    }

    #[test]
    fn two_level_rounding_is_top_h() {
        let (g, model, prior) = instance(4, 0.3);
        let p = PathEncoding::from_sequence(&g, &[0, 1, 5, 6, 10, 14, 15]).unwrap();
        for obj in [Objective::A, Objective::D] {
            let sel = select_sensors(&g, &model, &prior, obj, &p, 2, &[0.3]).unwrap();
            let s = &sel.assignment.s;
            let mut ranked: Vec<NodeId> = s.keys().copied().collect();
            ranked.sort_by(|a, b| s[b].total_cmp(&s[a]).then(a.cmp(b)));
            let top: BTreeSet<NodeId> = ranked[..2].iter().copied().collect();
            let chosen: BTreeSet<NodeId> = sel.assignment.chosen.keys().copied().collect();
            assert_eq!(top, chosen);
            assert!(sel.relaxed_value <= sel.rounded_value + 1e-12);
            assert!(sel.lower_bound <= sel.relaxed_value + 1e-12);
            assert!(sel.rounded_value <= sel.baseline_value);
        }
    }

    #[test]
    fn ladder_is_handed_out_by_importance() {
        let (g, model, prior) = instance(4, 0.1);
        let p = PathEncoding::from_sequence(&g, &[0, 4, 5, 6, 7, 11, 15]).unwrap();
        let sel = select_sensors(&g, &model, &prior, Objective::D, &p, 3, &[0.1, 0.4, 0.7]).unwrap();
        let s = &sel.assignment.s;
        let mut by_sigma: Vec<(f64, f64)> = sel.assignment.chosen.iter().map(|(i, &sg)| (sg, s[i])).collect();
        by_sigma.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(by_sigma.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0.1, 0.4, 0.7]);
        assert!(by_sigma.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn selection_rejects_bad_inputs() {
        let (g, model, prior) = instance(3, 0.2);
        let p = PathEncoding::from_sequence(&g, &[0, 1, 2, 5, 8]).unwrap();
        assert!(select_sensors(&g, &model, &prior, Objective::A, &p, 6, &[0.2]).is_err());
        assert!(select_sensors(&g, &model, &prior, Objective::A, &p, 2, &[0.5, 0.2]).is_err());
        assert!(select_sensors(&g, &model, &prior, Objective::A, &p, 2, &[0.05]).is_err());
        assert!(select_sensors(&g, &model, &prior, Objective::A, &p, 2, &[]).is_err());
        assert!(select_sensors(&g, &model, &prior, Objective::Ei, &p, 2, &[0.2]).is_err());
    }
}
