//! Non-parametric state-clustering posterior.
//!
//! States are partitioned by a Chinese restaurant process. Every cluster shares, per
//! action, one multinomial over outcomes with a Dirichlet prior; those parameters are
//! integrated out, so the sampler only moves over partitions and draws per-cluster
//! outcome probabilities from the posterior predictive when a model is requested.

use rand::RngCore;
use statrs::function::gamma::ln_gamma;

use super::{sample_dirichlet, PosteriorModel};
use crate::env::OutcomeSpec;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::scalar::Scalar;
use crate::stats::{log_sum_exp, sample_log_categorical};

/// Largest state count for which the posterior mean enumerates every partition.
pub const MAX_ENUMERATED_STATES: usize = 8;

/// Observed outcome counts in `(s, a, o)` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    n_states: usize,
    n_actions: usize,
    n_outcomes: usize,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn zeros(n_states: usize, n_actions: usize, n_outcomes: usize) -> Self {
        Self {
            n_states,
            n_actions,
            n_outcomes,
            counts: vec![0; n_states * n_actions * n_outcomes],
        }
    }

    pub fn from_counts(
        n_states: usize,
        n_actions: usize,
        n_outcomes: usize,
        counts: Vec<u64>,
    ) -> Result<Self> {
        if counts.len() != n_states * n_actions * n_outcomes {
            return Err(Error::ShapeMismatch(format!(
                "count table expects {} entries, got {}",
                n_states * n_actions * n_outcomes,
                counts.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            n_outcomes,
            counts,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn get(&self, s: usize, a: usize, o: usize) -> u64 {
        self.counts[(s * self.n_actions + a) * self.n_outcomes + o]
    }

    pub fn increment(&mut self, s: usize, a: usize, o: usize) {
        self.counts[(s * self.n_actions + a) * self.n_outcomes + o] += 1;
    }

    /// Outcome counts of one state–action pair.
    pub fn row(&self, s: usize, a: usize) -> &[u64] {
        let o = (s * self.n_actions + a) * self.n_outcomes;
        &self.counts[o..o + self.n_outcomes]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    /// Counts summed over `states`, in `(a, o)` order.
    pub fn pooled(&self, states: impl IntoIterator<Item = usize>) -> Vec<f64> {
        let mut pooled = vec![0.0; self.n_actions * self.n_outcomes];
        for s in states {
            let base = s * self.n_actions * self.n_outcomes;
            for (slot, &c) in pooled
                .iter_mut()
                .zip(&self.counts[base..base + self.n_actions * self.n_outcomes])
            {
                *slot += c as f64;
            }
        }
        pooled
    }
}

/// κ-dependent part of the cluster marginal: per action,
/// `ln Γ(Ση) - Σ ln Γ(η_i) + Σ ln Γ(n_i + η_i) - ln Γ(Σ n_i + Ση)`
/// for pooled counts `n`. Zero for an empty cluster.
fn pooled_log_marginal(pooled: &[f64], eta: &[f64]) -> f64 {
    let eta_total: f64 = eta.iter().sum();
    let eta_norm = ln_gamma(eta_total) - eta.iter().map(|&e| ln_gamma(e)).sum::<f64>();
    pooled
        .chunks(eta.len())
        .map(|counts| {
            let total: f64 = counts.iter().sum();
            if total == 0.0 {
                return 0.0;
            }
            eta_norm
                + counts
                    .iter()
                    .zip(eta)
                    .map(|(&n, &e)| ln_gamma(n + e))
                    .sum::<f64>()
                - ln_gamma(total + eta_total)
        })
        .sum()
}

/// Log multinomial coefficient `ln (Σ o_i)! - Σ ln o_i!`.
fn log_multinomial_coefficient(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    ln_gamma(total as f64 + 1.0) - counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>()
}

/// Log marginal likelihood of the outcome counts of `states` when they form one
/// cluster, with each action's outcome distribution integrated against
/// `Dirichlet(eta)`. Includes the per-state multinomial coefficients.
pub fn dcm_log_marginal(counts: &CountTable, states: &[usize], eta: &[f64]) -> f64 {
    assert_eq!(eta.len(), counts.n_outcomes(), "one pseudo-count per outcome");
    let coefficients: f64 = states
        .iter()
        .flat_map(|&s| (0..counts.n_actions()).map(move |a| (s, a)))
        .map(|(s, a)| log_multinomial_coefficient(counts.row(s, a)))
        .sum();
    coefficients + pooled_log_marginal(&counts.pooled(states.iter().copied()), eta)
}

/// Partition of states, labelled by order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clustering {
    labels: Vec<usize>,
}

impl Clustering {
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let labels = labels
            .iter()
            .map(|&l| match map.iter().find(|(raw, _)| *raw == l) {
                Some(&(_, canon)) => canon,
                None => {
                    map.push((l, map.len()));
                    map.len() - 1
                }
            })
            .collect();
        Self { labels }
    }

    pub fn single(n_states: usize) -> Self {
        Self {
            labels: vec![0; n_states],
        }
    }

    pub fn singletons(n_states: usize) -> Self {
        Self {
            labels: (0..n_states).collect(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, s: usize) -> usize {
        self.labels[s]
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&s| self.labels[s] == cluster)
            .collect()
    }

    /// Every partition of `n_states` states, in restricted-growth order.
    pub fn enumerate(n_states: usize) -> Vec<Clustering> {
        fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Clustering>) {
            if prefix.len() == n {
                out.push(Clustering {
                    labels: prefix.clone(),
                });
                return;
            }
            let limit = if prefix.is_empty() { 0 } else { max + 1 };
            for l in 0..=limit {
                prefix.push(l);
                extend(prefix, max.max(l), n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n_states > 0 {
            extend(&mut Vec::with_capacity(n_states), 0, n_states, &mut out);
        }
        out
    }
}

/// `ln p(κ | α) = r ln α + ln Γ(α) - ln Γ(α + n) + Σ ln Γ(κ_i)` for a partition of
/// `n` states into `r` clusters of sizes `κ_i`.
pub fn crp_log_prior(clustering: &Clustering, alpha: f64) -> f64 {
    let sizes = clustering.sizes();
    let n = clustering.n_states() as f64;
    sizes.len() as f64 * alpha.ln() + ln_gamma(alpha) - ln_gamma(alpha + n)
        + sizes.iter().map(|&k| ln_gamma(k as f64)).sum::<f64>()
}

/// Hyperparameters of the clustering posterior and its Gibbs schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub alpha: f64,
    pub eta: Vec<f64>,
    /// Sweeps before the first draw of a resampling event.
    pub burn: usize,
    /// Sweeps between consecutive draws of one resampling event.
    pub thin: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            eta: vec![1.0, 1.0],
            burn: 500,
            thin: 50,
        }
    }
}

impl ClusterSettings {
    fn validate(&self, n_outcomes: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain {
                name: "alpha",
                value: self.alpha,
                domain: "(0, inf)",
            });
        }
        if self.eta.len() != n_outcomes {
            return Err(Error::ShapeMismatch(format!(
                "eta has {} entries for {n_outcomes} outcomes",
                self.eta.len()
            )));
        }
        if let Some(&e) = self.eta.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Domain {
                name: "eta",
                value: e,
                domain: "(0, inf)",
            });
        }
        Ok(())
    }
}

/// `ln p(data | κ) + ln p(κ)` without the κ-independent multinomial coefficients.
fn log_joint_unnormalized(counts: &CountTable, clustering: &Clustering, settings: &ClusterSettings) -> f64 {
    crp_log_prior(clustering, settings.alpha)
        + (0..clustering.n_clusters())
            .map(|c| {
                let pooled = counts.pooled(clustering.members(c));
                pooled_log_marginal(&pooled, &settings.eta)
            })
            .sum::<f64>()
}

/// Full joint `ln p(data | κ) + ln p(κ | α)`.
pub fn log_joint(counts: &CountTable, clustering: &Clustering, alpha: f64, eta: &[f64]) -> f64 {
    crp_log_prior(clustering, alpha)
        + (0..clustering.n_clusters())
            .map(|c| dcm_log_marginal(counts, &clustering.members(c), eta))
            .sum::<f64>()
}

/// Candidate labels for state `s` (existing clusters of the other states, then one
/// fresh label) and their unnormalized log conditional weights.
pub(crate) fn conditional_log_weights(
    counts: &CountTable,
    labels: &[usize],
    s: usize,
    alpha: f64,
    eta: &[f64],
) -> (Vec<usize>, Vec<f64>) {
    let n = labels.len();
    let own = counts.pooled([s]);
    let mut candidates: Vec<usize> = Vec::with_capacity(n + 1);
    for s2 in (0..n).filter(|&s2| s2 != s) {
        if !candidates.contains(&labels[s2]) {
            candidates.push(labels[s2]);
        }
    }
    let mut log_weights = Vec::with_capacity(n + 1);
    for &c in &candidates {
        let members = (0..n).filter(|&s2| s2 != s && labels[s2] == c);
        let size = members.clone().count();
        let pooled = counts.pooled(members);
        let joined: Vec<f64> = pooled.iter().zip(&own).map(|(&p, &o)| p + o).collect();
        log_weights.push(
            (size as f64).ln() + pooled_log_marginal(&joined, eta) - pooled_log_marginal(&pooled, eta),
        );
    }
    let fresh = (0..=n).find(|l| !candidates.contains(l)).expect("n+1 labels");
    candidates.push(fresh);
    log_weights.push(alpha.ln() + pooled_log_marginal(&own, eta));
    (candidates, log_weights)
}

/// Reassigns every state once, in index order, from its full conditional given the
/// other states' assignments. A fresh cluster is always among the candidates.
pub fn gibbs_sweep(
    counts: &CountTable,
    clustering: &mut Clustering,
    alpha: f64,
    eta: &[f64],
    rng: &mut dyn RngCore,
) {
    let mut labels = clustering.labels.clone();
    for s in 0..labels.len() {
        let (candidates, log_weights) = conditional_log_weights(counts, &labels, s, alpha, eta);
        labels[s] = candidates[sample_log_categorical(&log_weights, rng)];
    }
    *clustering = Clustering::from_labels(&labels);
}

/// Full conditional of state `s`'s assignment, as (candidate clustering, probability)
/// pairs computed from the full joint. Used to check the incremental sweep.
pub fn full_conditional(
    counts: &CountTable,
    clustering: &Clustering,
    s: usize,
    alpha: f64,
    eta: &[f64],
) -> Vec<(Clustering, f64)> {
    let n = clustering.n_states();
    let mut options: Vec<Clustering> = Vec::new();
    for target in 0..=n {
        let mut labels = clustering.labels.clone();
        labels[s] = if target == n { n + 1 } else { clustering.labels[target] };
        if target < n && target == s {
            continue;
        }
        let candidate = Clustering::from_labels(&labels);
        if !options.contains(&candidate) {
            options.push(candidate);
        }
    }
    let scores: Vec<f64> = options
        .iter()
        .map(|c| log_joint(counts, c, alpha, eta))
        .collect();
    let z = log_sum_exp(&scores);
    options
        .into_iter()
        .zip(scores)
        .map(|(c, w)| (c, (w - z).exp()))
        .collect()
}

/// Clustering posterior over MDP dynamics.
#[derive(Debug, Clone)]
pub struct ClusterPosterior<T> {
    outcomes: OutcomeSpec,
    counts: CountTable,
    settings: ClusterSettings,
    current: Clustering,
    discount: T,
    sweeps: u64,
}

impl<T: Scalar> ClusterPosterior<T> {
    pub fn new(outcomes: OutcomeSpec, settings: ClusterSettings, discount: T) -> Result<Self> {
        let counts = CountTable::zeros(
            outcomes.n_states(),
            outcomes.n_actions(),
            outcomes.n_outcomes(),
        );
        Self::with_counts(outcomes, counts, settings, discount)
    }

    pub fn with_counts(
        outcomes: OutcomeSpec,
        counts: CountTable,
        settings: ClusterSettings,
        discount: T,
    ) -> Result<Self> {
        settings.validate(outcomes.n_outcomes())?;
        if counts.n_states() != outcomes.n_states()
            || counts.n_actions() != outcomes.n_actions()
            || counts.n_outcomes() != outcomes.n_outcomes()
        {
            return Err(Error::ShapeMismatch(
                "count table does not match outcome structure".into(),
            ));
        }
        let current = Clustering::single(outcomes.n_states());
        Ok(Self {
            outcomes,
            counts,
            settings,
            current,
            discount,
            sweeps: 0,
        })
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub fn settings(&self) -> &ClusterSettings {
        &self.settings
    }

    pub fn clustering(&self) -> &Clustering {
        &self.current
    }

    pub fn set_clustering(&mut self, clustering: Clustering) -> Result<()> {
        if clustering.n_states() != self.outcomes.n_states() {
            return Err(Error::ShapeMismatch("clustering size".into()));
        }
        self.current = clustering;
        Ok(())
    }

    /// Total Gibbs sweeps run so far.
    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn gibbs_sweep(&mut self, rng: &mut dyn RngCore) -> &Clustering {
        gibbs_sweep(
            &self.counts,
            &mut self.current,
            self.settings.alpha,
            &self.settings.eta,
            rng,
        );
        self.sweeps += 1;
        &self.current
    }

    fn run_sweeps(&mut self, n: usize, rng: &mut dyn RngCore) {
        for _ in 0..n {
            self.gibbs_sweep(rng);
        }
    }

    /// Posterior-predictive outcome probabilities per `(s, a, o)` under `clustering`.
    fn predictive_outcomes(&self, clustering: &Clustering, rng: Option<&mut dyn RngCore>) -> Vec<f64> {
        let (n, n_actions, k) = (
            self.counts.n_states(),
            self.counts.n_actions(),
            self.counts.n_outcomes(),
        );
        let mut rng = rng;
        let mut theta = vec![0.0; clustering.n_clusters() * n_actions * k];
        let mut params = vec![0.0; k];
        for c in 0..clustering.n_clusters() {
            let pooled = self.counts.pooled(clustering.members(c));
            for a in 0..n_actions {
                params
                    .iter_mut()
                    .zip(&pooled[a * k..(a + 1) * k])
                    .zip(&self.settings.eta)
                    .for_each(|((p, &count), &e)| *p = count + e);
                let out = &mut theta[(c * n_actions + a) * k..(c * n_actions + a + 1) * k];
                match rng.as_deref_mut() {
                    Some(r) => sample_dirichlet(&params, r, out),
                    None => {
                        let total: f64 = params.iter().sum();
                        out.iter_mut().zip(&params).for_each(|(o, &p)| *o = p / total);
                    }
                }
            }
        }
        let mut probs = Vec::with_capacity(n * n_actions * k);
        for s in 0..n {
            let c = clustering.label(s);
            probs.extend_from_slice(&theta[c * n_actions * k..(c + 1) * n_actions * k]);
        }
        probs
    }

    fn build(&self, outcome_probs: &[f64]) -> TabularMdp<T> {
        let probs: Vec<T> = outcome_probs.iter().map(|&p| T::of(p)).collect();
        self.outcomes
            .build_mdp(&probs, self.discount)
            .expect("predictive rows lie on the simplex")
    }

    /// Draws per-cluster outcome distributions for the current clustering.
    pub fn sample_clustered_model(&self, rng: &mut dyn RngCore) -> TabularMdp<T> {
        let probs = self.predictive_outcomes(&self.current, Some(rng));
        self.build(&probs)
    }

    /// Exact posterior over partitions, as (clustering, probability) pairs.
    pub fn partition_posterior(&self) -> Vec<(Clustering, f64)> {
        let parts = Clustering::enumerate(self.counts.n_states());
        let scores: Vec<f64> = parts
            .iter()
            .map(|c| log_joint_unnormalized(&self.counts, c, &self.settings))
            .collect();
        let z = log_sum_exp(&scores);
        parts
            .into_iter()
            .zip(scores)
            .map(|(c, w)| (c, (w - z).exp()))
            .collect()
    }
}

impl<T: Scalar> PosteriorModel<T> for ClusterPosterior<T> {
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
        self.counts.increment(s, a, outcome);
        Ok(())
    }

    /// A resampling event of size one.
    fn sample_model(&mut self, rng: &mut dyn RngCore) -> TabularMdp<T> {
        self.sample_models(1, rng).pop().expect("one model")
    }

    /// Restarts the chain from a single cluster, burns in, then draws `k` models
    /// separated by `thin` sweeps.
    fn sample_models(&mut self, k: usize, rng: &mut dyn RngCore) -> Vec<TabularMdp<T>> {
        self.current = Clustering::single(self.n_states());
        let mut models = Vec::with_capacity(k);
        for i in 0..k {
            let sweeps = if i == 0 {
                self.settings.burn
            } else {
                self.settings.thin
            };
            self.run_sweeps(sweeps, rng);
            models.push(self.sample_clustered_model(rng));
        }
        models
    }

    /// Exact posterior mean over partitions for small state spaces; otherwise the
    /// predictive mean under the current clustering.
    fn mean_model(&self) -> TabularMdp<T> {
        if self.n_states() > MAX_ENUMERATED_STATES {
            let probs = self.predictive_outcomes(&self.current, None);
            return self.build(&probs);
        }
        let mut mean = vec![0.0; self.counts.as_slice().len()];
        for (clustering, weight) in self.partition_posterior() {
            let probs = self.predictive_outcomes(&clustering, None);
            mean.iter_mut()
                .zip(probs)
                .for_each(|(m, p)| *m += weight * p);
        }
        let k = self.counts.n_outcomes();
        for row in mean.chunks_mut(k) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        self.build(&mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_chain2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(n_states: usize, n_actions: usize, counts: &[u64]) -> CountTable {
        CountTable::from_counts(n_states, n_actions, 2, counts.to_vec()).unwrap()
    }

    #[test]
    fn empty_counts_have_unit_marginal() {
        let t = CountTable::zeros(3, 2, 2);
        assert_eq!(dcm_log_marginal(&t, &[0, 1, 2], &[1.0, 1.0]), 0.0);
        assert_eq!(dcm_log_marginal(&t, &[], &[0.5, 2.0]), 0.0);
    }

    #[test]
    fn single_observation_is_one_half() {
        let t = table(1, 1, &[1, 0]);
        assert!((dcm_log_marginal(&t, &[0], &[1.0, 1.0]) - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn beta_binomial_closed_form() {
        // one state, counts (3, 2) under Beta(1, 1): C(5,3) * B(4,3)/B(1,1) = 10 / 60
        let t = table(1, 1, &[3, 2]);
        assert!((dcm_log_marginal(&t, &[0], &[1.0, 1.0]) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn crp_small_cases() {
        for alpha in [0.1, 0.5, 3.0] {
            assert!(crp_log_prior(&Clustering::single(1), alpha).abs() < 1e-14);
            let together = crp_log_prior(&Clustering::single(2), alpha).exp();
            let apart = crp_log_prior(&Clustering::singletons(2), alpha).exp();
            assert!((together - 1.0 / (1.0 + alpha)).abs() < 1e-14);
            assert!((apart - alpha / (1.0 + alpha)).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_labels() {
        let c = Clustering::from_labels(&[7, 3, 7, 9, 3]);
        assert_eq!(c.labels(), &[0, 1, 0, 2, 1]);
        assert_eq!(c.sizes(), vec![2, 2, 1]);
        assert_eq!(c.members(1), vec![1, 4]);
        let bell: Vec<usize> = (1..=6).map(|n| Clustering::enumerate(n).len()).collect();
        assert_eq!(bell, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn marginal_survives_large_counts() {
        let t = table(2, 1, &[1_000_000, 250_000, 800_000, 200_000]);
        let v = dcm_log_marginal(&t, &[0, 1], &[1.0, 1.0]);
        assert!(v.is_finite() && v < 0.0);
    }

    #[test]
    fn fresh_cluster_vanishes_as_alpha_shrinks() {
        let t = CountTable::zeros(4, 2, 2);
        let c = Clustering::single(4);
        let cond = full_conditional(&t, &c, 2, 1e-9, &[1.0, 1.0]);
        let stay = cond.iter().find(|(k, _)| *k == c).unwrap().1;
        assert!(stay > 1.0 - 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut clustering = c.clone();
        for _ in 0..100 {
            gibbs_sweep(&t, &mut clustering, 1e-9, &[1.0, 1.0], &mut rng);
        }
        assert_eq!(clustering, c);
    }

    #[test]
    fn incremental_conditional_matches_full_joint() {
        let t = table(4, 2, &[3, 1, 0, 2, 2, 2, 1, 1, 0, 4, 5, 0, 9, 1, 0, 0]);
        for start in [Clustering::from_labels(&[0, 1, 0, 2]), Clustering::single(4)] {
            for s in 0..4 {
                let (candidates, weights) =
                    conditional_log_weights(&t, start.labels(), s, 0.7, &[1.0, 2.0]);
                let probs = crate::stats::softmax(&weights);
                let exact = full_conditional(&t, &start, s, 0.7, &[1.0, 2.0]);
                assert_eq!(candidates.len(), exact.len());
                for (c, p) in candidates.iter().zip(probs) {
                    let mut labels = start.labels().to_vec();
                    labels[s] = *c;
                    let moved = Clustering::from_labels(&labels);
                    let q = exact.iter().find(|(k, _)| *k == moved).unwrap().1;
                    assert!((p - q).abs() < 1e-12, "state {s}: {p} vs {q}");
                }
            }
        }
    }

    #[test]
    fn chain2_modal_partition() {
        let env = make_chain2::<f64>(0.95).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut post =
            ClusterPosterior::<f64>::new(env.outcomes.clone(), ClusterSettings::default(), 0.95)
                .unwrap();
        let mut s = 0;
        for t in 0..10_000 {
            // alternate actions and restart uniformly so every state is visited
            let a = t % 2;
            let step = env.step(s, a, &mut rng);
            post.update(s, a, step.next_state).unwrap();
            s = if t % 7 == 0 { (t / 7) % 5 } else { step.next_state };
        }
        let mut tally = std::collections::HashMap::new();
        for _ in 0..200 {
            post.gibbs_sweep(&mut rng);
        }
        for _ in 0..2_000 {
            *tally.entry(post.gibbs_sweep(&mut rng).clone()).or_insert(0) += 1;
        }
        let (modal, _) = tally.iter().max_by_key(|(_, &n)| n).unwrap();
        assert_eq!(modal.labels(), &[0, 1, 0, 1, 0]);
    }

    #[test]
    fn forced_single_cluster_concentrates() {
        let env = make_chain2::<f64>(0.95).unwrap();
        let heavy: Vec<u64> = (0..5)
            .flat_map(|_| [800_000u64, 200_000, 200_000, 800_000])
            .collect();
        let counts = CountTable::from_counts(5, 2, 2, heavy).unwrap();
        let post = ClusterPosterior::<f64>::with_counts(
            env.outcomes.clone(),
            counts,
            ClusterSettings::default(),
            0.95,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let m = post.sample_clustered_model(&mut rng);
            assert!((m.transition(2, 0, 3) - 0.8).abs() < 2e-3);
            assert!((m.transition(2, 1, 0) - 0.8).abs() < 2e-3);
        }
    }
}
