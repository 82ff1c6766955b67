//! Branch and bound on a small grid, checked against brute-force
//! enumeration of every feasible path.

use std::sync::Arc;

use ipp::belief::{default_characterization, GaussianPrior, KernelSpec};
use ipp::bounds::exact_small;
use ipp::envgraph::{build_grid, enumerate_feasible_paths, EdgeWeightMode};
use ipp::objectives::{DesignSpace, Objective};

fn main() -> ipp::Result<()> {
    let g = build_grid(4, EdgeWeightMode::Unit)?;
    let kernel = KernelSpec::squared_exponential(1.0);
    let prior = Arc::new(GaussianPrior::from_kernel(g.prediction_points(), &kernel)?);
    let model = default_characterization(&g, &prior, &kernel, 1.0)?;
    let space = DesignSpace::new(prior, &model)?;
    let budget = 8.0;

    let all = enumerate_feasible_paths(&g, budget, 1_000_000);
    println!("{} feasible paths", all.paths.len());
    for obj in [Objective::A, Objective::B, Objective::D] {
        let brute = all
            .paths
            .iter()
            .map(|p| {
                let w: Vec<f64> = (0..g.n()).map(|i| f64::from(u8::from(p.sequence.contains(&i)))).collect();
                space.evaluate(obj, &w)
            })
            .collect::<ipp::Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let ex = exact_small(&g, &space, obj, budget, 60.0)?;
        println!(
            "{obj}: branch and bound {:.6} ({} nodes explored), enumeration {:.6}, path {:?}",
            ex.value, ex.nodes_explored, brute, ex.path.sequence
        );
    }
    Ok(())
}
