//! Local swap search on a random feasible path: each accepted swap replaces
//! one node by a neighbour reachable at the same cost.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::envgraph::{build_grid, EdgeWeightMode};
use ipp::objectives::{DesignSpace, Objective};
use ipp::planner::{random_baseline, NullWorld, PlannerConfig};
use ipp::refine::{polish, SwapBudget};

fn main() -> ipp::Result<()> {
    let g = build_grid(7, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;
    let space = DesignSpace::new(prior.clone(), &model)?;

    let cfg = PlannerConfig::new(Objective::A, 20.0).with_seed(3);
    let start = random_baseline(&g, &model, &prior, &cfg, &mut NullWorld)?;
    let p = polish(&g, &space, Objective::A, &start.path, &SwapBudget::new(500, 3)?)?;
    println!("random path  {:?}", start.path.sequence);
    println!("polished     {:?}", p.path.sequence);
    println!("tr(Sigma) {:.4} -> {:.4} with {} accepted swaps", p.initial, p.value, p.accepted.len());
    println!("cost {} -> {}", start.path.total_cost, p.path.total_cost);

    let full = polish(&g, &space, Objective::A, &start.path, &SwapBudget::new(500, 3)?.exhaustive())?;
    println!("exhaustive sweep: {:.4}", full.value);
    Ok(())
}
