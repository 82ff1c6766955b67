//! Adaptive planning against a sampled world: measurement values feed the
//! posterior mean, and the planner chases expected improvement below the
//! best value seen so far.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::envgraph::{build_grid, EdgeWeightMode};
use ipp::harness::sample_ground_truth;
use ipp::objectives::Objective;
use ipp::planner::{aspo_plan, random_baseline, PlannerConfig, TruthWorld};

fn main() -> ipp::Result<()> {
    let g = build_grid(10, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;
    let truth = sample_ground_truth(&g, &kernel, 42)?;
    let lowest = truth.values.iter().copied().fold(f64::INFINITY, f64::min);
    println!("true minimum over the grid: {lowest:.4}");

    let cfg = PlannerConfig::new(Objective::Ei, 36.0).with_seed(42);
    let aspo = aspo_plan(&g, &model, &prior, &cfg, &mut TruthWorld::new(truth.values.clone(), true, 1))?;
    let random = random_baseline(&g, &model, &prior, &cfg, &mut TruthWorld::new(truth.values.clone(), true, 1))?;
    for r in [&aspo, &random] {
        let best = r.measurements.iter().map(|m| m.y).fold(f64::INFINITY, f64::min);
        println!("{:<7} net EI / n = {:.6}, best measured {best:.4}, {} nodes", r.method, r.value, r.path.len());
    }
    let every = aspo.objective_trace.len().div_ceil(8);
    let tail: Vec<String> = aspo.objective_trace.iter().step_by(every).map(|v| format!("{v:.4}")).collect();
    println!("aspo trace: {}", tail.join(" "));
    Ok(())
}
