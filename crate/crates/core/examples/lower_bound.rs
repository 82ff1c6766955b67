//! Certified lower bounds from the two convex relaxations, and the gap to
//! the planner's path.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::bounds::{gap, relax_lower_bound, RelaxOptions, RelaxationKind};
use ipp::envgraph::{build_grid, EdgeWeightMode};
use ipp::objectives::{DesignSpace, Objective};
use ipp::planner::{aspo_plan, NullWorld, PlannerConfig};

fn main() -> ipp::Result<()> {
    let g = build_grid(8, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;
    let space = DesignSpace::new(prior.clone(), &model)?;
    let budget = 20.0;

    for obj in [Objective::A, Objective::D] {
        let plan = aspo_plan(&g, &model, &prior, &PlannerConfig::new(obj, budget), &mut NullWorld)?;
        println!("{obj}: planner value {:.4}", plan.value);
        for kind in [RelaxationKind::BoxBudget, RelaxationKind::WalkPolytope] {
            let r = relax_lower_bound(&g, &space, obj, budget, &RelaxOptions::with_kind(kind))?;
            let b = gap(plan.value, r.lower, prior.m(), kind, r.iterations, r.fw_gap)?;
            println!(
                "  {kind:?}: lower {:.4} after {} iterations, delta {:.4}, m*delta/lower {:.3}, exp(delta) {:.3}",
                b.lower, b.iterations, b.gap_delta, b.gap_ratio_a, b.gap_ratio_d
            );
        }
    }
    Ok(())
}
