//! Several agents planning against one shared belief.
//!
//! Agents take turns in id order. On its turn an agent replans with rewards
//! computed from the shared posterior, which already holds every measurement
//! any agent has made, and executes `h` moves. Agents have their own
//! endpoints and budgets and may share nodes.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::belief::{replay, Belief, GaussianPrior, Measurement, SensorModel};
use crate::envgraph::{EnvGraph, NodeId};
use crate::error::{IppError, Result};
use crate::objectives::DesignSpace;
use crate::planner::{Context, MeasurementSource, PlannerConfig, SolveReport, Walker};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub start: NodeId,
    pub goal: NodeId,
    pub budget: f64,
}

impl AgentSpec {
    /// `m` agents on the graph's own endpoints with the configured budget.
    pub fn fleet(g: &EnvGraph, cfg: &PlannerConfig, m: usize) -> Vec<AgentSpec> {
        vec![AgentSpec { start: g.start(), goal: g.goal(), budget: cfg.budget }; m]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FleetReport {
    /// One report per agent; `value` is the objective of that agent's own
    /// measurements alone.
    pub agents: Vec<SolveReport>,
    /// Objective of the shared posterior.
    pub joint_value: f64,
    /// All measurements in the order they were taken.
    pub measurements: Vec<Measurement>,
    pub wall_time_s: f64,
}

/// Interleaved receding-horizon planning for a fleet. With one agent this is
/// exactly [`aspo_plan`](crate::planner::aspo_plan).
pub fn plan_fleet(
    g: &EnvGraph,
    model: &SensorModel,
    prior: &Arc<GaussianPrior>,
    cfg: &PlannerConfig,
    agents: &[AgentSpec],
    world: &mut dyn MeasurementSource,
) -> Result<FleetReport> {
    if agents.is_empty() {
        return Err(IppError::InvalidArgument("a fleet needs at least one agent".into()));
    }
    cfg.validate_settings()?;
    let mut walkers = agents
        .iter()
        .map(|a| Walker::new(g.with_endpoints(a.start, a.goal)?, a.budget, cfg.budget_resolution))
        .collect::<Result<Vec<_>>>()?;
    let space = DesignSpace::new(prior.clone(), model)?;
    let started = Instant::now();
    let mut ctx = Context::new(&space, model, cfg, world, g.n());
    let mut belief = Belief::new(prior.clone());
    for w in &mut walkers {
        w.measure_current(&mut belief, &mut ctx)?;
    }
    while walkers.iter().any(|w| !w.done()) {
        for w in walkers.iter_mut().filter(|w| !w.done()) {
            w.aspo_round(&mut belief, &mut ctx)?;
        }
    }
    let joint_value = ctx.value(&belief)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let measurements = belief.history().to_vec();
    let mut reports = Vec::with_capacity(walkers.len());
    for w in walkers {
        let own = replay(prior.clone(), model, &w.measurements)?;
        let value = ctx.value(&own)?;
        reports.push(w.into_report("aspo", cfg.objective, value, wall_time_s)?);
    }
    Ok(FleetReport { agents: reports, joint_value, measurements, wall_time_s })
}
