//! Ground-truth Chain and Chain2 environments.
//!
//! States are 0-indexed here; CSV output and docs use 1-indexed states so that
//! "state 1" is the start of the chain.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::scalar::Scalar;

pub const ADVANCE: usize = 0;
pub const RESET: usize = 1;

pub const CHAIN_LENGTH: usize = 5;
pub const CHAIN_SLIP: f64 = 0.2;
pub const CHAIN_GOAL_REWARD: f64 = 10.0;
pub const CHAIN_RESET_REWARD: f64 = 2.0;

/// Environment-relative outcomes shared across states.
///
/// Each `(state, outcome)` pair fixes a successor and a reward; each action has an
/// intended outcome that it produces unless it slips.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSpec {
    n_states: usize,
    n_outcomes: usize,
    successor: Vec<usize>,
    reward: Vec<f64>,
    intended: Vec<usize>,
}

impl OutcomeSpec {
    pub fn new(
        n_states: usize,
        n_outcomes: usize,
        successor: Vec<usize>,
        reward: Vec<f64>,
        intended: Vec<usize>,
    ) -> Result<Self> {
        let len = n_states * n_outcomes;
        if successor.len() != len || reward.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "outcome tables need {len} entries, got {} successors and {} rewards",
                successor.len(),
                reward.len()
            )));
        }
        if successor.iter().any(|&s| s >= n_states) {
            return Err(Error::ShapeMismatch("successor out of range".into()));
        }
        if intended.is_empty() || intended.iter().any(|&o| o >= n_outcomes) {
            return Err(Error::ShapeMismatch("intended outcome out of range".into()));
        }
        Ok(Self {
            n_states,
            n_outcomes,
            successor,
            reward,
            intended,
        })
    }

    /// Outcome table of the five-state chain.
    pub fn chain() -> Self {
        let n = CHAIN_LENGTH;
        let mut successor = Vec::with_capacity(2 * n);
        let mut reward = Vec::with_capacity(2 * n);
        for s in 0..n {
            if s + 1 < n {
                successor.push(s + 1);
                reward.push(0.0);
            } else {
                successor.push(s);
                reward.push(CHAIN_GOAL_REWARD);
            }
            successor.push(0);
            reward.push(CHAIN_RESET_REWARD);
        }
        Self::new(n, 2, successor, reward, vec![ADVANCE, RESET]).expect("chain outcome table")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn n_actions(&self) -> usize {
        self.intended.len()
    }

    pub fn successor(&self, s: usize, outcome: usize) -> usize {
        self.successor[s * self.n_outcomes + outcome]
    }

    pub fn outcome_reward(&self, s: usize, outcome: usize) -> f64 {
        self.reward[s * self.n_outcomes + outcome]
    }

    pub fn intended(&self, action: usize) -> usize {
        self.intended[action]
    }

    /// Outcome that moves `s` to `next`, if exactly one does.
    pub fn decode(&self, s: usize, next: usize) -> Option<usize> {
        let mut found = None;
        for o in 0..self.n_outcomes {
            if self.successor(s, o) == next {
                if found.is_some() {
                    return None;
                }
                found = Some(o);
            }
        }
        found
    }

    pub fn decode_or_err(&self, s: usize, next: usize) -> Result<usize> {
        self.decode(s, next)
            .ok_or(Error::UndecodableTransition { from: s, to: next })
    }

    /// True when distinct outcomes lead to distinct successors in every state.
    pub fn is_injective(&self) -> bool {
        (0..self.n_states).all(|s| (0..self.n_states).all(|next| {
            let hits = (0..self.n_outcomes)
                .filter(|&o| self.successor(s, o) == next)
                .count();
            hits <= 1
        }))
    }

    /// Reward tensor `(s, a, s')`: the outcome reward where `s'` is an outcome's
    /// successor, zero elsewhere.
    pub fn reward_tensor<T: Scalar>(&self) -> Vec<T> {
        let (n, a_count) = (self.n_states, self.n_actions());
        let mut rewards = vec![T::zero(); n * a_count * n];
        for s in 0..n {
            for a in 0..a_count {
                for o in 0..self.n_outcomes {
                    rewards[(s * a_count + a) * n + self.successor(s, o)] =
                        T::of(self.outcome_reward(s, o));
                }
            }
        }
        rewards
    }

    /// Transition row over successor states given outcome probabilities for state `s`.
    pub fn fill_row<T: Scalar>(&self, s: usize, outcome_probs: &[T], row: &mut [T]) {
        row.iter_mut().for_each(|p| *p = T::zero());
        for (o, &p) in outcome_probs.iter().enumerate() {
            row[self.successor(s, o)] = row[self.successor(s, o)] + p;
        }
    }

    /// Builds an MDP from per-`(s, a)` outcome distributions, stored flat in `(s, a, o)` order.
    pub fn build_mdp<T: Scalar>(&self, outcome_probs: &[T], discount: T) -> Result<TabularMdp<T>> {
        let (n, a_count, k) = (self.n_states, self.n_actions(), self.n_outcomes);
        if outcome_probs.len() != n * a_count * k {
            return Err(Error::ShapeMismatch(format!(
                "expected {} outcome probabilities, got {}",
                n * a_count * k,
                outcome_probs.len()
            )));
        }
        let mut transitions = vec![T::zero(); n * a_count * n];
        for s in 0..n {
            for a in 0..a_count {
                let idx = s * a_count + a;
                self.fill_row(
                    s,
                    &outcome_probs[idx * k..(idx + 1) * k],
                    &mut transitions[idx * n..(idx + 1) * n],
                );
            }
        }
        TabularMdp::new(n, a_count, transitions, self.reward_tensor(), discount)
    }
}

/// A ground-truth environment together with its outcome structure.
#[derive(Debug, Clone)]
pub struct EnvInstance<T> {
    pub name: &'static str,
    pub mdp: TabularMdp<T>,
    pub outcomes: OutcomeSpec,
    /// `(s, a, o)` outcome probabilities of the true dynamics.
    pub outcome_probs: Vec<f64>,
    /// Diagnostic cluster label per state, 1-based.
    pub true_clusters: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub next_state: usize,
    pub outcome: usize,
}

impl<T: Scalar> EnvInstance<T> {
    fn from_advance_probs(
        name: &'static str,
        advance: impl Fn(usize, usize) -> f64,
        true_clusters: Vec<usize>,
        discount: f64,
    ) -> Result<Self> {
        let outcomes = OutcomeSpec::chain();
        let mut outcome_probs = Vec::with_capacity(CHAIN_LENGTH * 2 * 2);
        for s in 0..CHAIN_LENGTH {
            for a in 0..2 {
                let p = advance(s, a);
                outcome_probs.push(p);
                outcome_probs.push(1.0 - p);
            }
        }
        let probs: Vec<T> = outcome_probs.iter().map(|&p| T::of(p)).collect();
        let mdp = outcomes.build_mdp(&probs, T::of(discount))?;
        Ok(Self {
            name,
            mdp,
            outcomes,
            outcome_probs,
            true_clusters,
        })
    }

    /// Sample the true outcome of `action` in `state`.
    pub fn step(&self, state: usize, action: usize, rng: &mut dyn RngCore) -> Step {
        let k = self.outcomes.n_outcomes();
        let base = (state * self.outcomes.n_actions() + action) * k;
        let probs = &self.outcome_probs[base..base + k];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut outcome = k - 1;
        for (o, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = o;
                break;
            }
        }
        Step {
            reward: self.outcomes.outcome_reward(state, outcome),
            next_state: self.outcomes.successor(state, outcome),
            outcome,
        }
    }

    pub fn outcome_distribution(&self, state: usize, action: usize) -> &[f64] {
        let k = self.outcomes.n_outcomes();
        let base = (state * self.outcomes.n_actions() + action) * k;
        &self.outcome_probs[base..base + k]
    }
}

fn check_discount(discount: f64) -> Result<()> {
    if (0.0..1.0).contains(&discount) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "discount",
            value: discount,
            domain: "[0, 1)",
        })
    }
}

/// Five-state chain: action 0 advances and action 1 resets, each slipping to the
/// other outcome with probability 0.2.
pub fn make_chain<T: Scalar>(discount: f64) -> Result<EnvInstance<T>> {
    check_discount(discount)?;
    EnvInstance::from_advance_probs(
        "chain",
        |_, a| if a == 0 { 1.0 - CHAIN_SLIP } else { CHAIN_SLIP },
        vec![1; CHAIN_LENGTH],
        discount,
    )
}

/// Two-cluster chain: states 1, 3, 5 behave like [`make_chain`]; states 2 and 4
/// advance with probability 0.3 under action 0 and 0.7 under action 1.
pub fn make_chain2<T: Scalar>(discount: f64) -> Result<EnvInstance<T>> {
    check_discount(discount)?;
    EnvInstance::from_advance_probs(
        "chain2",
        |s, a| match (s % 2, a) {
            (0, 0) => 0.8,
            (0, _) => 0.2,
            (_, 0) => 0.3,
            _ => 0.7,
        },
        vec![1, 2, 1, 2, 1],
        discount,
    )
}
