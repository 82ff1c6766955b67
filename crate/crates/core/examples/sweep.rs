//! A small benchmark sweep through the harness: every method on a few seeds,
//! then re-validation of what was written.

use ipp::harness::{run_experiment, validate_outputs, ExperimentConfig, Method};

fn main() -> ipp::Result<()> {
    let cfg = ExperimentConfig {
        grid_side: 5,
        methods: vec![Method::Aspo, Method::Greedy, Method::Random, Method::RelaxRound, Method::BSurrogate],
        seeds: (0..5).collect(),
        compute_bounds: true,
        polish_steps: 200,
        ..Default::default()
    };
    print!("{}", cfg.to_toml_string()?);
    let out = std::env::temp_dir().join("ipp-example-sweep");
    let summary = run_experiment(&cfg, &out)?;
    print!("{summary}");
    let check = validate_outputs(&out)?;
    println!("re-checked {} paths under {}: {}", check.paths, out.display(), if check.is_ok() { "ok" } else { "FAILED" });
    Ok(())
}
