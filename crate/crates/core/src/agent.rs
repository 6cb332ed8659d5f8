//! Acting agents: BOSS, the posterior-mean `exploit` baseline, and fixed or random
//! reference policies.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::mdp::{Planner, Policy, TabularMdp};
use crate::posterior::PosteriorModel;
use crate::scalar::Scalar;

/// MDP whose action `i * A + j` behaves like action `j` of model `i`.
#[derive(Debug, Clone)]
pub struct MergedMdp<T> {
    mdp: TabularMdp<T>,
    n_models: usize,
    n_base_actions: usize,
}

impl<T: Scalar> MergedMdp<T> {
    pub fn mdp(&self) -> &TabularMdp<T> {
        &self.mdp
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn n_base_actions(&self) -> usize {
        self.n_base_actions
    }

    /// `(model index, base action)` of a merged action.
    pub fn decode(&self, merged_action: usize) -> (usize, usize) {
        (
            merged_action / self.n_base_actions,
            merged_action % self.n_base_actions,
        )
    }
}

/// Merges sampled models over a shared state space into one MDP with `K * A` actions.
pub fn merge_models<T: Scalar>(models: &[TabularMdp<T>]) -> Result<MergedMdp<T>> {
    let first = models
        .first()
        .ok_or_else(|| Error::ShapeMismatch("cannot merge an empty model set".into()))?;
    let (n, a_count, gamma) = (first.n_states(), first.n_actions(), first.discount());
    if let Some(m) = models
        .iter()
        .find(|m| m.n_states() != n || m.n_actions() != a_count || m.discount() != gamma)
    {
        return Err(Error::ShapeMismatch(format!(
            "model with S={}, A={}, gamma={} does not match S={n}, A={a_count}, gamma={gamma}",
            m.n_states(),
            m.n_actions(),
            m.discount()
        )));
    }
    let merged_actions = models.len() * a_count;
    let mut transitions = Vec::with_capacity(n * merged_actions * n);
    let mut rewards = Vec::with_capacity(n * merged_actions * n);
    for s in 0..n {
        for model in models {
            for a in 0..a_count {
                transitions.extend_from_slice(model.transition_row(s, a));
                rewards.extend_from_slice(model.reward_row(s, a));
            }
        }
    }
    Ok(MergedMdp {
        mdp: TabularMdp::new(n, merged_actions, transitions, rewards, gamma)?,
        n_models: models.len(),
        n_base_actions: a_count,
    })
}

/// Raw sample-count bound `ln(δ/2) / ln(1 - δ/2)` that makes at least one of the
/// sampled models optimistic with probability `1 - δ`.
pub fn optimistic_sample_bound(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            domain: "(0, 1)",
        });
    }
    let half = delta / 2.0;
    Ok(half.ln() / (-half).ln_1p())
}

/// [`optimistic_sample_bound`] rounded up to a whole number of samples.
pub fn optimistic_sample_size(delta: f64) -> Result<u64> {
    Ok(optimistic_sample_bound(delta)?.ceil() as u64)
}

/// Action chosen for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: usize,
    /// Whether new models were sampled and solved before acting.
    pub resampled: bool,
}

pub trait Agent<T: Scalar>: Send {
    fn act(&mut self, s: usize, rng: &mut dyn RngCore) -> Result<Decision>;

    fn observe(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<()>;
}

/// Best-of-sampled-set agent.
///
/// Samples `k` models whenever some state–action pair has just been tried `b`
/// times (and before the first action), merges them, and follows the merged MDP's
/// optimal policy until the next trigger.
pub struct BossAgent<T: Scalar> {
    posterior: Box<dyn PosteriorModel<T>>,
    k: usize,
    b: u64,
    q: Vec<u64>,
    policy: Option<Policy>,
    do_sample: bool,
    planner: Planner<T>,
    resamples: usize,
}

impl<T: Scalar> BossAgent<T> {
    pub fn new(
        posterior: Box<dyn PosteriorModel<T>>,
        k: usize,
        b: u64,
        planner: Planner<T>,
    ) -> Result<Self> {
        if k == 0 || b == 0 {
            return Err(Error::Config(format!("K and B must be positive, got K={k}, B={b}")));
        }
        let pairs = posterior.n_states() * posterior.n_actions();
        Ok(Self {
            posterior,
            k,
            b,
            q: vec![0; pairs],
            policy: None,
            do_sample: true,
            planner,
            resamples: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.q[s * self.posterior.n_actions() + a]
    }

    pub fn do_sample(&self) -> bool {
        self.do_sample
    }

    /// Number of sample-merge-solve rounds so far.
    pub fn resamples(&self) -> usize {
        self.resamples
    }

    /// Current policy over merged actions.
    pub fn merged_policy(&self) -> Option<&Policy> {
        self.policy.as_ref()
    }

    pub fn posterior(&self) -> &dyn PosteriorModel<T> {
        self.posterior.as_ref()
    }

    fn replan(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        let models = self.posterior.sample_models(self.k, rng);
        let merged = merge_models(&models)?;
        let (_, policy) = self.planner.solve(merged.mdp())?;
        self.policy = Some(policy);
        self.do_sample = false;
        self.resamples += 1;
        Ok(())
    }
}

impl<T: Scalar> Agent<T> for BossAgent<T> {
    fn act(&mut self, s: usize, rng: &mut dyn RngCore) -> Result<Decision> {
        let resampled = self.do_sample;
        if resampled {
            self.replan(rng)?;
        }
        let policy = self.policy.as_ref().expect("plan exists after first act");
        Ok(Decision {
            action: policy.action(s) % self.posterior.n_actions(),
            resampled,
        })
    }

    fn observe(&mut self, s: usize, a: usize, _reward: f64, next: usize) -> Result<()> {
        let idx = s * self.posterior.n_actions() + a;
        self.q[idx] += 1;
        self.posterior.update(s, a, next)?;
        if self.q[idx] == self.b {
            self.do_sample = true;
        }
        Ok(())
    }
}

/// Acts greedily in the posterior-mean MDP, replanning every step.
pub struct ExploitAgent<T: Scalar> {
    posterior: Box<dyn PosteriorModel<T>>,
    planner: Planner<T>,
}

impl<T: Scalar> ExploitAgent<T> {
    pub fn new(posterior: Box<dyn PosteriorModel<T>>, planner: Planner<T>) -> Self {
        Self { posterior, planner }
    }

    pub fn posterior(&self) -> &dyn PosteriorModel<T> {
        self.posterior.as_ref()
    }
}

/// Greedy action at `s` for the posterior-mean MDP.
pub fn exploit_act<T: Scalar>(
    posterior: &dyn PosteriorModel<T>,
    planner: &Planner<T>,
    s: usize,
) -> Result<usize> {
    let (_, policy) = planner.solve(&posterior.mean_model())?;
    Ok(policy.action(s))
}

impl<T: Scalar> Agent<T> for ExploitAgent<T> {
    fn act(&mut self, s: usize, _rng: &mut dyn RngCore) -> Result<Decision> {
        Ok(Decision {
            action: exploit_act(self.posterior.as_ref(), &self.planner, s)?,
            resampled: false,
        })
    }

    fn observe(&mut self, s: usize, a: usize, _reward: f64, next: usize) -> Result<()> {
        self.posterior.update(s, a, next)
    }
}

/// Follows a fixed policy and ignores observations.
pub struct FixedPolicyAgent {
    policy: Policy,
}

impl FixedPolicyAgent {
    pub fn new(policy: Policy) -> Self {
        Self { policy }
    }
}

impl<T: Scalar> Agent<T> for FixedPolicyAgent {
    fn act(&mut self, s: usize, _rng: &mut dyn RngCore) -> Result<Decision> {
        Ok(Decision {
            action: self.policy.action(s),
            resampled: false,
        })
    }

    fn observe(&mut self, _s: usize, _a: usize, _reward: f64, _next: usize) -> Result<()> {
        Ok(())
    }
}

/// Picks actions uniformly at random.
pub struct RandomAgent {
    n_actions: usize,
}

impl RandomAgent {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions }
    }
}

impl<T: Scalar> Agent<T> for RandomAgent {
    fn act(&mut self, _s: usize, rng: &mut dyn RngCore) -> Result<Decision> {
        Ok(Decision {
            action: rng.random_range(0..self.n_actions),
            resampled: false,
        })
    }

    fn observe(&mut self, _s: usize, _a: usize, _reward: f64, _next: usize) -> Result<()> {
        Ok(())
    }
}
