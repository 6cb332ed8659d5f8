//! Seeded multi-trial experiments and their CSV output.
//!
//! Every trial owns a ChaCha8 stream keyed by `base_seed` and selected by
//! `run_id` (`ChaCha8Rng::seed_from_u64(base_seed)` followed by
//! `set_stream(run_id)`), so a trial's outcome does not depend on how many other
//! trials run or in which order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agent::{Agent, BossAgent, ExploitAgent, FixedPolicyAgent, RandomAgent};
use crate::env::{make_chain, make_chain2, EnvInstance};
use crate::error::{Error, Result};
use crate::mdp::{Planner, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use crate::posterior::{
    ClusterPosterior, ClusterSettings, FullPosterior, PosteriorModel, SlipGrouping, SlipPosterior,
    DEFAULT_DIRICHLET_PRIOR,
};
use crate::stats::mean_and_std_err;

pub const SUMMARY_HEADER: [&str; 11] = [
    "env",
    "agent",
    "prior",
    "K",
    "B",
    "gamma",
    "steps",
    "runs",
    "seed",
    "mean_cum_reward",
    "std_err",
];
pub const TRIALS_HEADER: [&str; 2] = ["run_id", "cum_reward"];
pub const TRACE_HEADER: [&str; 6] = ["run_id", "step", "state", "action", "reward", "resampled"];

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRACE_FILE: &str = "trace.csv";

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name),
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(EnvKind {
    Chain => "chain",
    Chain2 => "chain2",
});

named_enum!(
    /// `optimal` plans on the true MDP and `random` picks uniformly; both are
    /// reference points rather than learners.
    AgentKind {
        Boss => "boss",
        Exploit => "exploit",
        Optimal => "optimal",
        Random => "random",
    }
);

named_enum!(PriorKind {
    Full => "full",
    Tied => "tied",
    Semi => "semi",
    Cluster => "cluster",
});

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub agent: AgentKind,
    pub prior: PriorKind,
    pub k: usize,
    pub b: u64,
    pub discount: f64,
    pub steps: usize,
    pub runs: u64,
    pub base_seed: u64,
    pub cluster: ClusterSettings,
    /// Dirichlet pseudo-count of the full prior.
    pub full_prior: f64,
    /// `(non_slip, slip)` Beta pseudo-counts of the tied and semi priors.
    pub slip_prior: (f64, f64),
    pub tolerance: f64,
    pub keep_trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Chain,
            agent: AgentKind::Boss,
            prior: PriorKind::Tied,
            k: 5,
            b: 10,
            discount: 0.95,
            steps: 1000,
            runs: 500,
            base_seed: 0,
            cluster: ClusterSettings::default(),
            full_prior: DEFAULT_DIRICHLET_PRIOR,
            slip_prior: (1.0, 1.0),
            tolerance: DEFAULT_TOLERANCE,
            keep_trace: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.steps == 0 {
            return fail("steps must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.agent == AgentKind::Boss && (self.k == 0 || self.b == 0) {
            return fail(format!("boss needs K >= 1 and B >= 1, got K={}, B={}", self.k, self.b));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return fail(format!("gamma must lie in [0, 1), got {}", self.discount));
        }
        if !(self.tolerance > 0.0) {
            return fail(format!("planner tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.cluster.alpha > 0.0 && self.cluster.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.cluster.alpha));
        }
        if !(self.full_prior > 0.0) || !(self.slip_prior.0 > 0.0 && self.slip_prior.1 > 0.0) {
            return fail("prior pseudo-counts must be positive".into());
        }
        Ok(())
    }

    /// Short identifier used in diagnostics.
    pub fn label(&self) -> String {
        format!(
            "{}/{}/{} K={} B={} seed={}",
            self.env, self.agent, self.prior, self.k, self.b, self.base_seed
        )
    }

    pub fn planner(&self) -> Planner<f64> {
        Planner {
            tolerance: self.tolerance,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn environment(&self) -> Result<EnvInstance<f64>> {
        match self.env {
            EnvKind::Chain => make_chain(self.discount),
            EnvKind::Chain2 => make_chain2(self.discount),
        }
    }

    pub fn posterior(&self, env: &EnvInstance<f64>) -> Result<Box<dyn PosteriorModel<f64>>> {
        let outcomes = env.outcomes.clone();
        let gamma = self.discount;
        Ok(match self.prior {
            PriorKind::Full => Box::new(FullPosterior::new(&outcomes, self.full_prior, gamma)?),
            PriorKind::Tied => Box::new(SlipPosterior::new(
                outcomes,
                SlipGrouping::Tied,
                self.slip_prior,
                gamma,
            )?),
            PriorKind::Semi => Box::new(SlipPosterior::new(
                outcomes,
                SlipGrouping::PerAction,
                self.slip_prior,
                gamma,
            )?),
            PriorKind::Cluster => {
                Box::new(ClusterPosterior::new(outcomes, self.cluster.clone(), gamma)?)
            }
        })
    }

    pub fn agent(&self, env: &EnvInstance<f64>) -> Result<Box<dyn Agent<f64>>> {
        Ok(match self.agent {
            AgentKind::Boss => Box::new(BossAgent::new(
                self.posterior(env)?,
                self.k,
                self.b,
                self.planner(),
            )?),
            AgentKind::Exploit => Box::new(ExploitAgent::new(self.posterior(env)?, self.planner())),
            AgentKind::Optimal => {
                let (_, policy) = self.planner().solve(&env.mdp)?;
                Box::new(FixedPolicyAgent::new(policy))
            }
            AgentKind::Random => Box::new(RandomAgent::new(env.mdp.n_actions())),
        })
    }
}

/// Random stream of one trial.
pub fn trial_rng(base_seed: u64, run_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run_id);
    rng
}

/// One step of a recorded trial; states and actions are 0-based here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub resampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub run_id: u64,
    pub cumulative_reward: f64,
    pub resamples: usize,
    pub trace: Option<Vec<TraceRow>>,
}

/// Runs one trial from state 1 for `config.steps` steps.
pub fn run_trial(config: &ExperimentConfig, run_id: u64) -> Result<TrialResult> {
    run_trial_inner(config, run_id).map_err(|e| Error::Trial {
        run_id,
        context: config.label(),
        source: Box::new(e),
    })
}

fn run_trial_inner(config: &ExperimentConfig, run_id: u64) -> Result<TrialResult> {
    config.validate()?;
    let env = config.environment()?;
    let mut agent = config.agent(&env)?;
    let mut rng = trial_rng(config.base_seed, run_id);
    let mut trace = config.keep_trace.then(|| Vec::with_capacity(config.steps));
    let mut state = 0;
    let mut total = 0.0;
    let mut resamples = 0;
    for step in 0..config.steps {
        let decision = agent.act(state, &mut rng)?;
        let outcome = env.step(state, decision.action, &mut rng);
        agent.observe(state, decision.action, outcome.reward, outcome.next_state)?;
        total += outcome.reward;
        resamples += usize::from(decision.resampled);
        if let Some(rows) = trace.as_mut() {
            rows.push(TraceRow {
                step,
                state,
                action: decision.action,
                reward: outcome.reward,
                resampled: decision.resampled,
            });
        }
        state = outcome.next_state;
    }
    Ok(TrialResult {
        run_id,
        cumulative_reward: total,
        resamples,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub runs: u64,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(runs)`; reported as 0 for a single run.
    pub std_err: f64,
}

impl Summary {
    /// Aggregates trials in `run_id` order.
    pub fn from_trials(config: &ExperimentConfig, trials: &[TrialResult]) -> Self {
        let mut rewards: Vec<(u64, f64)> = trials
            .iter()
            .map(|t| (t.run_id, t.cumulative_reward))
            .collect();
        rewards.sort_by_key(|&(id, _)| id);
        let values: Vec<f64> = rewards.into_iter().map(|(_, r)| r).collect();
        let (mean, std_err) = mean_and_std_err(&values);
        Self {
            config: config.clone(),
            runs: trials.len() as u64,
            mean,
            std_err,
        }
    }

    /// False when the standard error is a placeholder (fewer than two runs).
    pub fn std_err_defined(&self) -> bool {
        self.runs >= 2
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub summary: Summary,
    /// Sorted by `run_id`.
    pub trials: Vec<TrialResult>,
}

/// Runs all trials on the rayon pool and summarizes them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let trials = (0..config.runs)
        .into_par_iter()
        .map(|run_id| run_trial(config, run_id))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        summary: Summary::from_trials(config, &trials),
        trials,
    })
}

/// Paths written by [`write_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub summary: PathBuf,
    pub trials: PathBuf,
    pub trace: Option<PathBuf>,
}

fn summary_record(summary: &Summary) -> Vec<String> {
    let c = &summary.config;
    vec![
        c.env.to_string(),
        c.agent.to_string(),
        c.prior.to_string(),
        c.k.to_string(),
        c.b.to_string(),
        c.discount.to_string(),
        c.steps.to_string(),
        summary.runs.to_string(),
        c.base_seed.to_string(),
        summary.mean.to_string(),
        summary.std_err.to_string(),
    ]
}

/// Writes `summary.csv` and `trials.csv` into `out_dir`, plus `trace.csv` when any
/// trial kept a trace. Floats use Rust's shortest round-trip formatting, so the
/// files are byte-stable and parse back to identical values.
pub fn write_results(summary: &Summary, trials: &[TrialResult], out_dir: &Path) -> Result<WrittenFiles> {
    fs::create_dir_all(out_dir)?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary_record(summary))?;
    w.flush()?;

    let mut sorted: Vec<&TrialResult> = trials.iter().collect();
    sorted.sort_by_key(|t| t.run_id);

    let trials_path = out_dir.join(TRIALS_FILE);
    let mut w = csv::Writer::from_path(&trials_path)?;
    w.write_record(TRIALS_HEADER)?;
    for t in &sorted {
        w.write_record([t.run_id.to_string(), t.cumulative_reward.to_string()])?;
    }
    w.flush()?;

    let trace_path = if sorted.iter().any(|t| t.trace.is_some()) {
        let path = out_dir.join(TRACE_FILE);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(TRACE_HEADER)?;
        for t in &sorted {
            for row in t.trace.iter().flatten() {
                w.write_record([
                    t.run_id.to_string(),
                    row.step.to_string(),
                    (row.state + 1).to_string(),
                    (row.action + 1).to_string(),
                    row.reward.to_string(),
                    u8::from(row.resampled).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Some(path)
    } else {
        None
    };

    Ok(WrittenFiles {
        summary: summary_path,
        trials: trials_path,
        trace: trace_path,
    })
}

/// Reads `(run_id, cum_reward)` rows back from a trials CSV.
pub fn read_trials(path: &Path) -> Result<Vec<(u64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(TRIALS_HEADER) {
        return Err(Error::Config(format!("unexpected trials header {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse_err = |field: &str| Error::Config(format!("malformed trials field `{field}`"));
        let run_id = record[0].parse().map_err(|_| parse_err(&record[0]))?;
        let reward = record[1].parse().map_err(|_| parse_err(&record[1]))?;
        rows.push((run_id, reward));
    }
    Ok(rows)
}
