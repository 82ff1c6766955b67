//! Plans an A-optimal path on a 10x10 grid with the receding-horizon
//! planner and compares it with the greedy and random baselines.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::envgraph::{build_grid, validate_path, EdgeWeightMode};
use ipp::objectives::Objective;
use ipp::planner::{aspo_plan, greedy_baseline, random_baseline, NullWorld, PlannerConfig};

fn main() -> ipp::Result<()> {
    let g = build_grid(10, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;

    let shortest = g.shortest_costs_to_goal()[g.start()];
    let cfg = PlannerConfig::new(Objective::A, 2.0 * shortest).with_seed(7);
    println!("n = {}, m = {}, budget = {}", g.n(), prior.m(), cfg.budget);
    println!("prior trace = {:.4}", prior.trace());

    let runs = [
        aspo_plan(&g, &model, &prior, &cfg, &mut NullWorld)?,
        greedy_baseline(&g, &model, &prior, &cfg, &mut NullWorld)?,
        random_baseline(&g, &model, &prior, &cfg, &mut NullWorld)?,
    ];
    for r in &runs {
        assert!(validate_path(&g, &r.path, cfg.budget).is_valid());
        println!(
            "{:<7} tr(Sigma) = {:.4}  cost = {:>4}  nodes = {:>3}  {:.1} ms",
            r.method,
            r.value,
            r.cost,
            r.path.len(),
            r.wall_time_s * 1e3
        );
    }
    println!("aspo path: {:?}", runs[0].path.sequence);
    Ok(())
}
