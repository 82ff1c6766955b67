//! Two agents share one posterior; each replans on its turn with everything
//! the other has measured so far.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::envgraph::{build_grid, EdgeWeightMode};
use ipp::multiagent::{plan_fleet, AgentSpec};
use ipp::objectives::Objective;
use ipp::planner::{aspo_plan, NullWorld, PlannerConfig};

fn main() -> ipp::Result<()> {
    let g = build_grid(8, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;
    let cfg = PlannerConfig::new(Objective::A, 18.0);

    let agents = [
        AgentSpec { start: 0, goal: 63, budget: 18.0 },
        AgentSpec { start: 7, goal: 56, budget: 18.0 },
    ];
    let fleet = plan_fleet(&g, &model, &prior, &cfg, &agents, &mut NullWorld)?;
    for (a, r) in agents.iter().zip(&fleet.agents) {
        println!("agent {} -> {}: own tr(Sigma) {:.4}, path {:?}", a.start, a.goal, r.value, r.path.sequence);
    }
    println!("joint tr(Sigma) {:.4} from {} measurements", fleet.joint_value, fleet.measurements.len());

    let solo = aspo_plan(&g, &model, &prior, &cfg, &mut NullWorld)?;
    println!("one agent alone: {:.4}", solo.value);
    Ok(())
}
