use rand::RngCore;

use super::{sample_dirichlet, to_scalar, PosteriorModel};
use crate::env::OutcomeSpec;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::scalar::Scalar;

/// Default Dirichlet pseudo-count (the Jeffreys prior for a multinomial).
pub const DEFAULT_DIRICHLET_PRIOR: f64 = 0.5;

/// Independent Dirichlet over next states for every state–action pair.
#[derive(Debug, Clone)]
pub struct FullPosterior<T> {
    n_states: usize,
    n_actions: usize,
    prior: f64,
    params: Vec<f64>,
    rewards: Vec<T>,
    discount: T,
}

impl<T: Scalar> FullPosterior<T> {
    pub fn new(outcomes: &OutcomeSpec, prior: f64, discount: T) -> Result<Self> {
        if !(prior > 0.0 && prior.is_finite()) {
            return Err(Error::Domain {
                name: "dirichlet prior",
                value: prior,
                domain: "(0, inf)",
            });
        }
        let n = outcomes.n_states();
        let a = outcomes.n_actions();
        Ok(Self {
            n_states: n,
            n_actions: a,
            prior,
            params: vec![prior; n * a * n],
            rewards: outcomes.reward_tensor(),
            discount,
        })
    }

    /// Dirichlet parameters in `(s, a, s')` order.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param(&self, s: usize, a: usize, next: usize) -> f64 {
        self.params[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    fn assemble(&self, transitions: Vec<f64>) -> TabularMdp<T> {
        TabularMdp::new(
            self.n_states,
            self.n_actions,
            to_scalar(&transitions),
            self.rewards.clone(),
            self.discount,
        )
        .expect("Dirichlet rows lie on the simplex")
    }
}

impl<T: Scalar> PosteriorModel<T> for FullPosterior<T> {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn update(&mut self, s: usize, a: usize, next: usize) -> Result<()> {
        if s >= self.n_states || next >= self.n_states || a >= self.n_actions {
            return Err(Error::ShapeMismatch(format!(
                "transition ({s}, {a}, {next}) out of range"
            )));
        }
        self.params[(s * self.n_actions + a) * self.n_states + next] += 1.0;
        Ok(())
    }

    fn sample_model(&mut self, rng: &mut dyn RngCore) -> TabularMdp<T> {
        let n = self.n_states;
        let mut transitions = vec![0.0; self.params.len()];
        for (row, params) in transitions.chunks_mut(n).zip(self.params.chunks(n)) {
            sample_dirichlet(params, rng, row);
        }
        self.assemble(transitions)
    }

    fn mean_model(&self) -> TabularMdp<T> {
        let n = self.n_states;
        let mut transitions = vec![0.0; self.params.len()];
        for (row, params) in transitions.chunks_mut(n).zip(self.params.chunks(n)) {
            let total: f64 = params.iter().sum();
            row.iter_mut().zip(params).for_each(|(x, &p)| *x = p / total);
        }
        self.assemble(transitions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn posterior() -> FullPosterior<f64> {
        FullPosterior::new(&OutcomeSpec::chain(), 1.0, 0.95).unwrap()
    }

    #[test]
    fn update_increments_single_entry() {
        let mut p = posterior();
        p.update(0, 0, 1).unwrap();
        for (i, &x) in p.params().iter().enumerate() {
            let expected = if i == 1 { 2.0 } else { 1.0 };
            assert_eq!(x, expected);
        }
        assert_eq!(p.param(0, 0, 1), 2.0);
    }

    #[test]
    fn uninformed_mean_is_uniform() {
        let mean = posterior().mean_model();
        assert!(mean.transitions().iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert_eq!(mean.reward(4, 0, 4), 10.0);
        assert_eq!(mean.reward(2, 1, 0), 2.0);
        assert_eq!(mean.reward(0, 0, 3), 0.0);
    }

    #[test]
    fn symmetric_sample_means_are_uniform() {
        let mut p = posterior();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let mut acc = vec![0.0; p.params().len()];
        for _ in 0..n {
            let m = p.sample_model(&mut rng);
            acc.iter_mut().zip(m.transitions()).for_each(|(a, &x)| *a += x);
        }
        assert!(acc.iter().all(|&a| (a / n as f64 - 0.2).abs() < 0.02));
    }

    #[test]
    fn rejects_out_of_range_update() {
        let mut p = posterior();
        assert!(p.update(5, 0, 0).is_err());
        assert!(p.update(0, 2, 0).is_err());
        assert!(FullPosterior::<f64>::new(&OutcomeSpec::chain(), 0.0, 0.95).is_err());
    }
}
