//! Experiment runner CLI: runs seeded contextual optimization experiments
//! and writes per-run and aggregate learning curves as CSV.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 all runs
//! diverged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ccmaes::harness::{
    export_experiment, run_experiment, ExperimentConfig, Method, ProblemKind,
};
use ccmaes::Error;

#[derive(Parser)]
#[command(name = "ccmaes", version, about = "Contextual CMA-ES experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SurrogateArgs {
    /// Exploit the surrogate aggressively (λ' = 10λ, n_start = 100)
    #[arg(long)]
    aggressive: bool,
    /// Virtual generation size λ' (default: 3λ, or 10λ with --aggressive)
    #[arg(long = "lambda-prime")]
    lambda_prime: Option<usize>,
    /// Real evaluations before the surrogate is exploited
    #[arg(long = "n-start")]
    n_start: Option<u64>,
    /// Exponent of the ranking-SVM cost schedule
    #[arg(long = "c-pow")]
    c_pow: Option<f64>,
    /// SMO iterations per training sample
    #[arg(long = "n-iter")]
    n_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a contextual benchmark function experiment
    Bench {
        /// sphere, rosenbrock, ackley, ellipsoidal, discus, or diff_powers
        #[arg(long)]
        problem: String,
        /// ccmaes, accmaes, cacmes, or acacmes
        #[arg(long)]
        method: String,
        /// Parameter dimension
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Context dimension
        #[arg(long, default_value_t = 1)]
        ns: usize,
        /// Real samples per generation
        #[arg(long, default_value_t = 50)]
        lambda: usize,
        #[arg(long, default_value_t = 850)]
        generations: usize,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        /// Initial step size (default: 1, or 14.5 on ackley)
        #[arg(long)]
        sigma0: Option<f64>,
        #[command(flatten)]
        surrogate: SurrogateArgs,
        /// Output directory for the CSV files
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the 2D viapoint experiment (λ = 100, n_start = 1000)
    Viapoint {
        /// ccmaes, accmaes, cacmes, or acacmes
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 200)]
        generations: usize,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        surrogate: SurrogateArgs,
        /// Output directory for the CSV files
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_config(command: Command) -> Result<(ExperimentConfig, PathBuf), Error> {
    match command {
        Command::Bench {
            problem,
            method,
            n,
            ns,
            lambda,
            generations,
            runs,
            seed,
            sigma0,
            surrogate,
            out,
        } => {
            let kind = ProblemKind::parse(&problem)?;
            if kind == ProblemKind::Viapoint {
                return Err(Error::InvalidArgument(
                    "use the `viapoint` subcommand for the viapoint problem".into(),
                ));
            }
            let mut config = ExperimentConfig::benchmark(kind, Method::parse(&method)?);
            config.n = n;
            config.n_s = ns;
            config.lambda = lambda;
            config.generations = generations;
            config.runs = runs;
            config.base_seed = seed;
            config.sigma0 = sigma0;
            apply_surrogate_args(&mut config, &surrogate);
            Ok((config, out))
        }
        Command::Viapoint {
            method,
            generations,
            runs,
            seed,
            surrogate,
            out,
        } => {
            let mut config = ExperimentConfig::viapoint(Method::parse(&method)?);
            config.generations = generations;
            config.runs = runs;
            config.base_seed = seed;
            apply_surrogate_args(&mut config, &surrogate);
            Ok((config, out))
        }
    }
}

fn apply_surrogate_args(config: &mut ExperimentConfig, args: &SurrogateArgs) {
    config.aggressive = args.aggressive;
    config.lambda_prime = args.lambda_prime;
    config.n_start = args.n_start;
    if let Some(c_pow) = args.c_pow {
        config.c_pow = c_pow;
    }
    if let Some(n_iter) = args.n_iter {
        config.n_iter = n_iter;
    }
}

fn run(command: Command) -> Result<u8, Error> {
    let (config, out) = build_config(command)?;
    config.validate()?;
    let result = run_experiment(&config)?;
    let (runs_path, agg_path) = export_experiment(&result, &config, &out)?;
    println!(
        "{} on {}: {} runs x {} generations, final mean {}",
        result.method,
        config.problem.name(),
        config.runs,
        config.generations,
        result.final_mean()
    );
    println!("wrote {}", runs_path.display());
    println!("wrote {}", agg_path.display());
    if result.all_diverged() {
        eprintln!("error: all runs diverged");
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Io { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
