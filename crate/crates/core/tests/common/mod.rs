//! Reference computations shared by the integration tests. None of these go
//! through the library's planners or samplers.

#![allow(dead_code)]

use std::collections::BTreeMap;

use boss::mdp::{Policy, TabularMdp};
use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Exact `V^π` from `(I - γ P_π) V = r_π`.
pub fn exact_policy_value(mdp: &TabularMdp<f64>, policy: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        let act = policy[s];
        a[s][s] += 1.0;
        for next in 0..n {
            let p = mdp.transition(s, act, next);
            a[s][next] -= gamma * p;
            b[s] += p * mdp.reward(s, act, next);
        }
    }
    solve_linear(a, b)
}

/// Howard policy iteration with exact evaluation.
pub fn policy_iteration(mdp: &TabularMdp<f64>) -> (Vec<f64>, Vec<usize>) {
    let n = mdp.n_states();
    let mut policy = vec![0; n];
    loop {
        let v = exact_policy_value(mdp, &policy);
        let mut changed = false;
        for s in 0..n {
            let q = |a: usize| -> f64 {
                (0..n)
                    .map(|x| mdp.transition(s, a, x) * (mdp.reward(s, a, x) + mdp.discount() * v[x]))
                    .sum()
            };
            let current = q(policy[s]);
            for a in 0..mdp.n_actions() {
                if q(a) > current + 1e-12 {
                    policy[s] = a;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return (v, policy);
        }
    }
}

/// Best of all `A^S` deterministic policies under exact evaluation at `start`,
/// with every policy's values.
pub fn enumerate_policies(mdp: &TabularMdp<f64>) -> Vec<(Vec<usize>, Vec<f64>)> {
    let n = mdp.n_states();
    let a = mdp.n_actions();
    let total = a.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let policy: Vec<usize> = (0..n)
                .map(|_| {
                    let act = code % a;
                    code /= a;
                    act
                })
                .collect();
            let v = exact_policy_value(mdp, &policy);
            (policy, v)
        })
        .collect()
}

/// Expected undiscounted reward of `policy` over `steps` steps from `start`,
/// by propagating the state distribution.
pub fn finite_horizon_reward(
    mdp: &TabularMdp<f64>,
    policy: &Policy,
    start: usize,
    steps: usize,
) -> f64 {
    let n = mdp.n_states();
    let mut dist = vec![0.0; n];
    dist[start] = 1.0;
    let mut total = 0.0;
    for _ in 0..steps {
        let mut next = vec![0.0; n];
        for s in 0..n {
            let act = policy.action(s);
            for x in 0..n {
                let p = mdp.transition(s, act, x);
                total += dist[s] * p * mdp.reward(s, act, x);
                next[x] += dist[s] * p;
            }
        }
        dist = next;
    }
    total
}

/// All set partitions of `n` items as canonical label vectors, found by brute force
/// over `n^n` labelings.
pub fn brute_force_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut seen = BTreeMap::new();
    for mut code in 0..n.pow(n as u32) {
        let raw: Vec<usize> = (0..n)
            .map(|_| {
                let l = code % n;
                code /= n;
                l
            })
            .collect();
        seen.insert(canonical(&raw), ());
    }
    seen.into_keys().collect()
}

pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|l| match order.iter().position(|x| x == l) {
            Some(i) => i,
            None => {
                order.push(*l);
                order.len() - 1
            }
        })
        .collect()
}

/// CRP probability of a canonical labeling via sequential seating.
pub fn crp_seating_probability(labels: &[usize], alpha: f64) -> f64 {
    let mut sizes: Vec<usize> = Vec::new();
    let mut p = 1.0;
    for (i, &l) in labels.iter().enumerate() {
        let denom = i as f64 + alpha;
        if l < sizes.len() {
            p *= sizes[l] as f64 / denom;
            sizes[l] += 1;
        } else {
            p *= alpha / denom;
            sizes.push(1);
        }
    }
    p
}

/// Log marginal of one cluster's counts `counts[state][action][outcome]` computed
/// directly from the multivariate Polya formula.
pub fn polya_log_marginal(counts: &[Vec<Vec<u64>>], eta: &[f64]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let n_actions = counts[0].len();
    let mut total = 0.0;
    for a in 0..n_actions {
        let mut pooled = vec![0.0; eta.len()];
        for state in counts {
            let row = &state[a];
            let n: u64 = row.iter().sum();
            total += ln_gamma(n as f64 + 1.0);
            for (i, &c) in row.iter().enumerate() {
                total -= ln_gamma(c as f64 + 1.0);
                pooled[i] += c as f64;
            }
        }
        let eta_sum: f64 = eta.iter().sum();
        let pooled_sum: f64 = pooled.iter().sum();
        total += ln_gamma(eta_sum) - eta.iter().map(|&e| ln_gamma(e)).sum::<f64>();
        total += pooled.iter().zip(eta).map(|(&c, &e)| ln_gamma(c + e)).sum::<f64>();
        total -= ln_gamma(pooled_sum + eta_sum);
    }
    total
}

fn dirichlet_draw(eta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
    let draws: Vec<f64> = eta
        .iter()
        .map(|&e| Gamma::new(e, 1.0).unwrap().sample(rng))
        .collect();
    let s: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / s).collect()
}

fn multinomial_pmf(counts: &[u64], theta: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut log_p = ln_gamma(n as f64 + 1.0);
    for (&c, &t) in counts.iter().zip(theta) {
        log_p += c as f64 * t.ln() - ln_gamma(c as f64 + 1.0);
    }
    log_p.exp()
}

/// Monte-Carlo estimate (mean, standard error) of
/// `∫ Π_{s,a} Mult(o^{s,a} | θ_a) Π_a Dir(θ_a | η) dθ`.
pub fn monte_carlo_marginal(
    counts: &[Vec<Vec<u64>>],
    eta: &[f64],
    samples: usize,
    rng: &mut dyn RngCore,
) -> (f64, f64) {
    let n_actions = counts[0].len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut like = 1.0;
        for a in 0..n_actions {
            let theta = dirichlet_draw(eta, rng);
            for state in counts {
                like *= multinomial_pmf(&state[a], &theta);
            }
        }
        sum += like;
        sum_sq += like * like;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Total variation distance between two distributions keyed the same way.
pub fn total_variation<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<&K> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Exact posterior over partitions of the states in `counts[state][action][outcome]`,
/// weighting each brute-force partition by sequential-seating CRP mass and the
/// closed-form cluster marginals.
pub fn exact_partition_posterior(
    counts: &[Vec<Vec<u64>>],
    alpha: f64,
    eta: &[f64],
) -> BTreeMap<Vec<usize>, f64> {
    let parts = brute_force_partitions(counts.len());
    let log_w: Vec<f64> = parts
        .iter()
        .map(|labels| {
            let r = labels.iter().max().unwrap() + 1;
            let marginal: f64 = (0..r)
                .map(|c| {
                    let members: Vec<Vec<Vec<u64>>> = labels
                        .iter()
                        .zip(counts)
                        .filter(|(l, _)| **l == c)
                        .map(|(_, x)| x.clone())
                        .collect();
                    polya_log_marginal(&members, eta)
                })
                .sum();
            crp_seating_probability(labels, alpha).ln() + marginal
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    parts
        .into_iter()
        .zip(log_w)
        .map(|(p, w)| (p, (w - max).exp() / z))
        .collect()
}
