//! Gaussian-mixture interest map on the unit square and the posterior
//! variance left in its high-interest region after planning.

use ipp::belief::KernelSpec;
use ipp::envgraph::EdgeWeightMode;
use ipp::harness::{run_single, sample_interest_map, ExperimentConfig, Method, HIGH_INTEREST};

fn main() -> ipp::Result<()> {
    let mut cfg = ExperimentConfig {
        grid_side: 20,
        spacing: 1.0 / 19.0,
        edge_weights: EdgeWeightMode::Euclidean,
        kernel: KernelSpec::matern32(0.45),
        noise_sigma: 0.01,
        m: 100,
        interest_map: true,
        ..Default::default()
    };
    cfg.set_budget(ipp::harness::Budget::Absolute(8.0));

    let (inst, rec) = run_single(&cfg, Method::Aspo, 4)?;
    let map = sample_interest_map(&inst.graph, 4);
    println!("{} bumps, {} lattice cells at or above {HIGH_INTEREST}", map.bumps.len(), map.high_interest_points().len());
    for row in (0..20).rev().step_by(2) {
        let line: String = (0..20)
            .map(|c| {
                let i = row * 20 + c;
                let on_path = rec.reports[0].path.sequence.contains(&i);
                match (on_path, map.value(inst.graph.coord(i)) >= HIGH_INTEREST) {
                    (true, _) => '*',
                    (false, true) => '#',
                    (false, false) => '.',
                }
            })
            .collect();
        println!("  {line}");
    }
    println!("high-interest trace after {} measurements: {:.4}", rec.measurements.len(), rec.interest_trace.unwrap_or(f64::NAN));
    Ok(())
}
