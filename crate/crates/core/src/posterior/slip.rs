use rand::RngCore;
use rand_distr::{Beta, Distribution};

use super::PosteriorModel;
use crate::env::OutcomeSpec;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::scalar::Scalar;

/// How slip probabilities are shared between actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipGrouping {
    /// One slip probability for every state–action pair.
    Tied,
    /// One slip probability per action.
    PerAction,
}

/// Beta posterior over slip probabilities on a two-outcome environment whose
/// outcome structure is otherwise known.
#[derive(Debug, Clone)]
pub struct SlipPosterior<T> {
    outcomes: OutcomeSpec,
    grouping: SlipGrouping,
    prior: (f64, f64),
    /// `(non_slip, slip)` Beta parameters per group.
    params: Vec<(f64, f64)>,
    discount: T,
}

impl<T: Scalar> SlipPosterior<T> {
    /// `prior` is `(non_slip, slip)` pseudo-counts.
    pub fn new(
        outcomes: OutcomeSpec,
        grouping: SlipGrouping,
        prior: (f64, f64),
        discount: T,
    ) -> Result<Self> {
        if outcomes.n_outcomes() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "slip posteriors need exactly two outcomes, got {}",
                outcomes.n_outcomes()
            )));
        }
        if !outcomes.is_injective() {
            return Err(Error::ShapeMismatch(
                "outcomes must lead to distinct successors".into(),
            ));
        }
        for (name, v) in [("beta non-slip prior", prior.0), ("beta slip prior", prior.1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    domain: "(0, inf)",
                });
            }
        }
        let groups = match grouping {
            SlipGrouping::Tied => 1,
            SlipGrouping::PerAction => outcomes.n_actions(),
        };
        Ok(Self {
            outcomes,
            grouping,
            prior,
            params: vec![prior; groups],
            discount,
        })
    }

    pub fn tied(outcomes: OutcomeSpec, discount: T) -> Result<Self> {
        Self::new(outcomes, SlipGrouping::Tied, (1.0, 1.0), discount)
    }

    pub fn semi(outcomes: OutcomeSpec, discount: T) -> Result<Self> {
        Self::new(outcomes, SlipGrouping::PerAction, (1.0, 1.0), discount)
    }

    pub fn grouping(&self) -> SlipGrouping {
        self.grouping
    }

    pub fn prior(&self) -> (f64, f64) {
        self.prior
    }

    /// `(non_slip, slip)` Beta parameters of each group.
    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    /// Overwrite the Beta parameters, e.g. to pin the posterior in tests.
    pub fn set_params(&mut self, params: Vec<(f64, f64)>) -> Result<()> {
        if params.len() != self.params.len()
            || params.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0))
        {
            return Err(Error::ShapeMismatch("invalid Beta parameter set".into()));
        }
        self.params = params;
        Ok(())
    }

    fn group(&self, action: usize) -> usize {
        match self.grouping {
            SlipGrouping::Tied => 0,
            SlipGrouping::PerAction => action,
        }
    }

    /// Builds the MDP in which actions in group `g` slip with probability `slips[g]`.
    pub fn model_from_slips(&self, slips: &[f64]) -> TabularMdp<T> {
        let n = self.outcomes.n_states();
        let n_actions = self.outcomes.n_actions();
        let mut probs = Vec::with_capacity(n * n_actions * 2);
        for _ in 0..n {
            for a in 0..n_actions {
                let w = slips[self.group(a)];
                let intended = self.outcomes.intended(a);
                let mut pair = [T::zero(); 2];
                pair[intended] = T::of(1.0 - w);
                pair[1 - intended] = T::of(w);
                probs.extend_from_slice(&pair);
            }
        }
        self.outcomes
            .build_mdp(&probs, self.discount)
            .expect("slip rows lie on the simplex")
    }
}

impl<T: Scalar> PosteriorModel<T> for SlipPosterior<T> {
    fn n_states(&self) -> usize {
        self.outcomes.n_states()
    }

    fn n_actions(&self) -> usize {
        self.outcomes.n_actions()
    }

    fn update(&mut self, s: usize, a: usize, next: usize) -> Result<()> {
        if s >= self.n_states() || next >= self.n_states() || a >= self.n_actions() {
            return Err(Error::ShapeMismatch(format!(
                "transition ({s}, {a}, {next}) out of range"
            )));
        }
        let outcome = self.outcomes.decode_or_err(s, next)?;
        let g = self.group(a);
        if outcome == self.outcomes.intended(a) {
            self.params[g].0 += 1.0;
        } else {
            self.params[g].1 += 1.0;
        }
        Ok(())
    }

    fn sample_model(&mut self, rng: &mut dyn RngCore) -> TabularMdp<T> {
        let slips: Vec<f64> = self
            .params
            .iter()
            .map(|&(non_slip, slip)| {
                Beta::new(slip, non_slip)
                    .expect("positive Beta parameters")
                    .sample(rng)
            })
            .collect();
        self.model_from_slips(&slips)
    }

    fn mean_model(&self) -> TabularMdp<T> {
        let slips: Vec<f64> = self
            .params
            .iter()
            .map(|&(non_slip, slip)| slip / (non_slip + slip))
            .collect();
        self.model_from_slips(&slips)
    }
}
