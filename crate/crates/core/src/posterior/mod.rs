//! Bayesian beliefs over MDP dynamics with a shared update/sample/mean contract.

mod cluster;
mod full;
mod slip;

pub use cluster::{
    crp_log_prior, dcm_log_marginal, full_conditional, gibbs_sweep, log_joint, ClusterPosterior,
    ClusterSettings, Clustering, CountTable, MAX_ENUMERATED_STATES,
};
pub use full::{FullPosterior, DEFAULT_DIRICHLET_PRIOR};
pub use slip::{SlipGrouping, SlipPosterior};

use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use crate::error::Result;
use crate::mdp::TabularMdp;
use crate::scalar::Scalar;

/// Posterior over transition dynamics. Rewards are known and copied into every
/// emitted model.
pub trait PosteriorModel<T: Scalar>: Send {
    fn n_states(&self) -> usize;

    fn n_actions(&self) -> usize;

    fn update(&mut self, s: usize, a: usize, next: usize) -> Result<()>;

    /// Draw one MDP from the posterior.
    fn sample_model(&mut self, rng: &mut dyn RngCore) -> TabularMdp<T>;

    /// Draw `k` MDPs for one resampling event.
    fn sample_models(&mut self, k: usize, rng: &mut dyn RngCore) -> Vec<TabularMdp<T>> {
        (0..k).map(|_| self.sample_model(rng)).collect()
    }

    /// The posterior-mean MDP.
    fn mean_model(&self) -> TabularMdp<T>;
}

/// Dirichlet draw via normalized Gamma variates.
pub(crate) fn sample_dirichlet(params: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
    let mut total = 0.0;
    for (slot, &alpha) in out.iter_mut().zip(params) {
        let g = Gamma::new(alpha, 1.0).expect("positive Dirichlet parameter");
        *slot = g.sample(rng);
        total += *slot;
    }
    if total > 0.0 && total.is_finite() {
        out.iter_mut().for_each(|x| *x /= total);
    } else {
        // every Gamma draw underflowed; fall back to the mean
        let sum: f64 = params.iter().sum();
        out.iter_mut().zip(params).for_each(|(x, &p)| *x = p / sum);
    }
}

pub(crate) fn to_scalar<T: Scalar>(probs: &[f64]) -> Vec<T> {
    probs.iter().map(|&p| T::of(p)).collect()
}
