use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seedstress::harness::{
    compare_budgets, replay_trace, run_dast, run_experiment, ExperimentSpec, RunOptions, RunSummary,
};
use seedstress::solver::Budget;
use seedstress::Error;

#[derive(Parser)]
#[command(name = "seedstress", version, about = "Stress testing by tree search over simulator seeds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search one simulator for likely failure paths.
    Run(RunArgs),
    /// Search for failures of the test system that the baseline avoids.
    Dast(RunArgs),
    /// Sweep budgets for both the tree search and direct Monte Carlo.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated budgets in the mode chosen by the budget flag
        /// (steps unless --budget-iterations or --budget-seconds is given).
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
    },
    /// Re-run a trace file and check it reproduces exactly.
    Replay {
        trace: PathBuf,
        /// Do not print the trajectory.
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    searches: Option<usize>,
    #[arg(long, group = "budget")]
    budget_iterations: Option<u64>,
    #[arg(long, group = "budget")]
    budget_steps: Option<u64>,
    #[arg(long, group = "budget")]
    budget_seconds: Option<f64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
}

impl RunArgs {
    fn spec(&self) -> Result<ExperimentSpec, Error> {
        let mut spec = ExperimentSpec::load(&self.config)?;
        if let Some(n) = self.searches {
            spec.searches = n;
        }
        if let Some(n) = self.budget_iterations {
            spec.budget = Budget::Iterations(n);
        }
        if let Some(n) = self.budget_steps {
            spec.budget = Budget::Steps(n);
        }
        if let Some(s) = self.budget_seconds {
            spec.budget = Budget::Seconds(s);
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(k) = self.top_k {
            spec.top_k = k;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            workers: self.workers,
        }
    }

    fn sweep(&self, values: &[f64]) -> Result<Vec<Budget>, Error> {
        values
            .iter()
            .map(|&v| {
                let whole = || {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as u64)
                    } else {
                        Err(Error::Config(format!("budget {v} is not a whole number")))
                    }
                };
                if self.budget_seconds.is_some() {
                    Ok(Budget::Seconds(v))
                } else if self.budget_iterations.is_some() {
                    whole().map(Budget::Iterations)
                } else {
                    whole().map(Budget::Steps)
                }
            })
            .collect()
    }
}

fn report(summary: &RunSummary) {
    let found = summary.records.iter().filter(|r| r.event).count();
    println!(
        "searches {}  events {}  find rate {:.3}  simulator steps {}",
        summary.records.len(),
        found,
        summary.find_rate(),
        summary.total_steps()
    );
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => report(&run_experiment(&args.spec()?, &args.options())?),
        Command::Dast(args) => report(&run_dast(&args.spec()?, &args.options())?),
        Command::Compare { run, budgets } => {
            let spec = run.spec()?;
            let rows = compare_budgets(&spec, &run.sweep(&budgets)?, &run.options())?;
            println!("budget_mode,budget,solver,searches,mean_return,sem_return,find_rate");
            for r in rows {
                println!(
                    "{},{},{},{},{:.4},{:.4},{:.3}",
                    r.budget_mode, r.budget, r.solver, r.searches, r.mean_return, r.sem_return, r.find_rate
                );
            }
        }
        Command::Replay { trace, quiet } => {
            let rep = replay_trace(&trace)?;
            if !quiet {
                println!("t\tseed\tlikelihood\tevent\tmiss_distance\treward");
                let r = &rep.record;
                for t in 0..r.len() {
                    let o = &r.step_outputs[t];
                    let miss = o.miss_distance.map_or("-".to_string(), |d| format!("{d:.4}"));
                    println!(
                        "{t}\t{}\t{:.6e}\t{}\t{miss}\t{:.6}",
                        r.seeds.0[t], o.likelihood, o.event, r.rewards[t]
                    );
                }
            }
            println!(
                "replay ok: return {} event {}",
                rep.record.return_value, rep.record.event_reached
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ReplayMismatch(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
