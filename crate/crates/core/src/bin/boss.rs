use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use boss::harness::{
    run_experiment, write_results, AgentKind, EnvKind, ExperimentConfig, PriorKind,
};
use boss::posterior::{ClusterSettings, DEFAULT_DIRICHLET_PRIOR};

#[derive(Debug, Parser)]
#[command(name = "boss", version, about = "Best-of-sampled-set RL experiments on the Chain domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run independent seeded trials and write summary/trial CSVs.
    Run(RunArgs),
    /// Print how many posterior samples make one optimistic with probability 1 - delta.
    SampleSize {
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "chain")]
    env: EnvKind,
    #[arg(long, default_value = "boss")]
    agent: AgentKind,
    #[arg(long, default_value = "tied")]
    prior: PriorKind,
    #[arg(short = 'K', default_value_t = 5)]
    k: usize,
    #[arg(short = 'B', default_value_t = 10)]
    b: u64,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 500)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long = "gibbs-burn", default_value_t = 500)]
    gibbs_burn: usize,
    #[arg(long = "gibbs-thin", default_value_t = 50)]
    gibbs_thin: usize,
    /// Dirichlet pseudo-count of the full prior.
    #[arg(long = "dirichlet-prior", default_value_t = DEFAULT_DIRICHLET_PRIOR)]
    dirichlet_prior: f64,
    /// Also write a per-step trace CSV.
    #[arg(long)]
    trace: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            env: self.env,
            agent: self.agent,
            prior: self.prior,
            k: self.k,
            b: self.b,
            discount: self.gamma,
            steps: self.steps,
            runs: self.runs,
            base_seed: self.seed,
            cluster: ClusterSettings {
                alpha: self.alpha,
                burn: self.gibbs_burn,
                thin: self.gibbs_thin,
                ..ClusterSettings::default()
            },
            full_prior: self.dirichlet_prior,
            keep_trace: self.trace,
            ..ExperimentConfig::default()
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match cli.command {
        Command::SampleSize { delta } => match boss::agent::optimistic_sample_size(delta) {
            Ok(k) => {
                println!("{k}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run(args) => run(&args),
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let config = args.config();
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let experiment = match run_experiment(&config) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let summary = &experiment.summary;
    if !summary.std_err_defined() {
        eprintln!("warning: std_err is undefined for a single run and is reported as 0");
    }
    match write_results(summary, &experiment.trials, &args.out) {
        Ok(files) => {
            println!(
                "{}: mean {:.1} (se {:.1}) over {} runs -> {}",
                config.label(),
                summary.mean,
                summary.std_err,
                summary.runs,
                files.summary.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
