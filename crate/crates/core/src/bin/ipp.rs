use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ipp::harness::{
    gap_study, parse_methods, parse_seeds, run_experiment, run_single, validate_outputs, Budget, ExperimentConfig,
    Method, MultimodalSpec, Overrides,
};
use ipp::objectives::Objective;
use ipp::{IppError, Result};

#[derive(Parser)]
#[command(name = "ipp", version, about = "Informative path planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan once and print the path.
    Plan(Common),
    /// Run every method on every seed and write results.
    Sweep(Common),
    /// Compare ASPO with the relaxation bound over several budgets.
    Gap {
        #[command(flatten)]
        common: Common,
        /// Comma-separated budgets, absolute or multiples like `2x`.
        #[arg(long, default_value = "1.5x,2x,3x")]
        budgets: String,
    },
    /// Re-check paths and values stored in an output directory.
    Validate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid side length.
    #[arg(long)]
    grid: Option<usize>,
    /// Absolute budget or a multiple of the shortest path cost, e.g. `2x`.
    #[arg(long)]
    budget: Option<Budget>,
    #[arg(long)]
    objective: Option<Objective>,
    /// Comma-separated methods.
    #[arg(long)]
    method: Option<String>,
    /// `0..25` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long = "runtime-cap")]
    runtime_cap: Option<f64>,
    #[arg(long)]
    agents: Option<usize>,
    /// `k=K,ladder=S1,S2,...`
    #[arg(long)]
    multimodal: Option<MultimodalSpec>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let o = Overrides {
            grid_side: self.grid,
            budget: self.budget,
            objective: self.objective,
            methods: self.method.as_deref().map(parse_methods).transpose()?,
            seeds: self.seeds.as_deref().map(parse_seeds).transpose()?,
            runtime_cap_s: self.runtime_cap,
            agents: self.agents,
            multimodal: self.multimodal.clone(),
        };
        base.apply(&o)
    }
}

fn plan(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let method = if c.method.is_some() { cfg.methods[0] } else { Method::Aspo };
    let (inst, rec) = run_single(&cfg, method, cfg.seeds[0])?;
    println!("method {method}, seed {}, n {}, budget {:.4}", inst.seed, inst.graph.n(), inst.budget);
    for (k, r) in rec.reports.iter().enumerate() {
        println!("agent {k}: cost {:.4}, path {:?}", r.cost, r.path.sequence);
    }
    println!("{} = {:.6} in {:.3} s", cfg.objective, rec.value, rec.runtime_s);
    if let Some(b) = rec.reports[0].bound.as_ref() {
        println!("lower bound {:.6}, delta {:.6}", b.lower, b.gap_delta);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Plan(c) => plan(&c).map(|_| true),
        Command::Sweep(c) => {
            let summary = run_experiment(&c.config()?, &c.out)?;
            print!("{summary}");
            println!("wrote {}", c.out.join("results.csv").display());
            Ok(true)
        }
        Command::Gap { common, budgets } => {
            let budgets = budgets.split(',').map(str::parse).collect::<Result<Vec<Budget>>>()?;
            let study = gap_study(&common.config()?, &budgets, &common.out)?;
            print!("{study}");
            println!("wrote {}", common.out.join("gap.csv").display());
            Ok(true)
        }
        Command::Validate { out } => {
            let rep = validate_outputs(&out)?;
            println!("{} rows, {} paths, {} values re-checked", rep.rows, rep.paths, rep.values_checked);
            for f in &rep.failures {
                println!("FAIL {f}");
            }
            Ok(rep.is_ok())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, IppError::Config(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
