//! Tabular MDPs and exact dynamic-programming planners.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Finite MDP with transition-indexed rewards.
///
/// Both tensors are stored flat in `(s, a, s')` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp<T> {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<T>,
    rewards: Vec<T>,
    discount: T,
}

impl<T: Scalar> TabularMdp<T> {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<T>,
        rewards: Vec<T>,
        discount: T,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp(format!(
                "need at least one state and action, got S={n_states}, A={n_actions}"
            )));
        }
        let len = n_states * n_actions * n_states;
        if transitions.len() != len || rewards.len() != len {
            return Err(Error::InvalidMdp(format!(
                "expected {len} tensor entries, got {} transitions and {} rewards",
                transitions.len(),
                rewards.len()
            )));
        }
        if !(discount >= T::zero() && discount < T::one()) {
            return Err(Error::InvalidMdp(format!("discount {discount} not in [0, 1)")));
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidMdp(format!("non-finite reward {r}")));
        }
        let tol = T::simplex_tolerance();
        for (row_idx, row) in transitions.chunks(n_states).enumerate() {
            if let Some(p) = row.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
                return Err(Error::InvalidMdp(format!(
                    "probability {p} outside [0, 1] in row (s={}, a={})",
                    row_idx / n_actions,
                    row_idx % n_actions
                )));
            }
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol {
                return Err(Error::InvalidMdp(format!(
                    "row (s={}, a={}) sums to {total}",
                    row_idx / n_actions,
                    row_idx % n_actions
                )));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> T {
        self.discount
    }

    fn offset(&self, s: usize, a: usize) -> usize {
        (s * self.n_actions + a) * self.n_states
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[T] {
        let o = self.offset(s, a);
        &self.transitions[o..o + self.n_states]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[T] {
        let o = self.offset(s, a);
        &self.rewards[o..o + self.n_states]
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> T {
        self.transitions[self.offset(s, a) + next]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> T {
        self.rewards[self.offset(s, a) + next]
    }

    pub fn transitions(&self) -> &[T] {
        &self.transitions
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    /// Expected immediate reward `sum_s' T(s,a,s') R(s,a,s')`.
    pub fn expected_reward(&self, s: usize, a: usize) -> T {
        self.transition_row(s, a)
            .iter()
            .zip(self.reward_row(s, a))
            .map(|(&p, &r)| p * r)
            .sum()
    }

    /// One-step lookahead value of taking `a` in `s` and following `values` afterwards.
    pub fn q_value(&self, s: usize, a: usize, values: &[T]) -> T {
        let gamma = self.discount;
        self.transition_row(s, a)
            .iter()
            .zip(self.reward_row(s, a))
            .zip(values)
            .map(|((&p, &r), &v)| p * (r + gamma * v))
            .sum()
    }

    pub fn reward_bounds(&self) -> (T, T) {
        self.rewards.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &r| (lo.min(r), hi.max(r)),
        )
    }

    /// `max_a Q(s, a)` for every state, together with the lowest maximizing action.
    fn max_backup(&self, values: &[T], out: &mut [T], actions: Option<&mut [usize]>) {
        let mut actions = actions;
        for (s, slot) in out.iter_mut().enumerate() {
            let mut best = self.q_value(s, 0, values);
            let mut best_action = 0;
            for a in 1..self.n_actions {
                let q = self.q_value(s, a, values);
                if q > best {
                    best = q;
                    best_action = a;
                }
            }
            *slot = best;
            if let Some(acts) = actions.as_deref_mut() {
                acts[s] = best_action;
            }
        }
    }

    /// Sup-norm of `B V - V` for the optimality operator `B`.
    pub fn bellman_residual(&self, values: &ValueFunction<T>) -> T {
        let mut next = vec![T::zero(); self.n_states];
        self.max_backup(values.as_slice(), &mut next, None);
        sup_distance(&next, values.as_slice())
    }
}

fn sup_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// State values, one entry per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T>(Vec<T>);

impl<T: Scalar> ValueFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn zeros(n_states: usize) -> Self {
        Self(vec![T::zero(); n_states])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: usize) -> T {
        self.0[s]
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

/// Deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self(vec![action; n_states])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Synchronous value iteration started from zero.
///
/// Stops as soon as one sweep moves the values by at most `tolerance` in the sup norm,
/// which bounds the Bellman residual of the returned values by `discount * tolerance`.
pub fn value_iteration<T: Scalar>(
    mdp: &TabularMdp<T>,
    tolerance: T,
    max_iterations: usize,
) -> Result<ValueFunction<T>> {
    check_tolerance(tolerance)?;
    let n = mdp.n_states();
    let mut current = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    for _ in 0..max_iterations {
        mdp.max_backup(&current, &mut next, None);
        residual = sup_distance(&next, &current);
        std::mem::swap(&mut current, &mut next);
        if residual <= tolerance {
            return Ok(ValueFunction(current));
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual: residual.as_f64(),
    })
}

/// Greedy policy with respect to `values`; ties go to the lowest action index.
pub fn greedy_policy<T: Scalar>(mdp: &TabularMdp<T>, values: &ValueFunction<T>) -> Result<Policy> {
    if values.len() != mdp.n_states() {
        return Err(Error::ShapeMismatch(format!(
            "value function has {} entries, MDP has {} states",
            values.len(),
            mdp.n_states()
        )));
    }
    let mut scratch = vec![T::zero(); mdp.n_states()];
    let mut actions = vec![0; mdp.n_states()];
    mdp.max_backup(values.as_slice(), &mut scratch, Some(&mut actions));
    Ok(Policy(actions))
}

pub fn evaluate_policy<T: Scalar>(
    mdp: &TabularMdp<T>,
    policy: &Policy,
    tolerance: T,
) -> Result<ValueFunction<T>> {
    evaluate_policy_with_limit(mdp, policy, tolerance, DEFAULT_MAX_ITERATIONS)
}

/// Iterative evaluation of a fixed policy, stopping on the same criterion as
/// [`value_iteration`].
pub fn evaluate_policy_with_limit<T: Scalar>(
    mdp: &TabularMdp<T>,
    policy: &Policy,
    tolerance: T,
    max_iterations: usize,
) -> Result<ValueFunction<T>> {
    check_tolerance(tolerance)?;
    if policy.len() != mdp.n_states() {
        return Err(Error::ShapeMismatch(format!(
            "policy covers {} states, MDP has {}",
            policy.len(),
            mdp.n_states()
        )));
    }
    if let Some(&a) = policy.actions().iter().find(|&&a| a >= mdp.n_actions()) {
        return Err(Error::ShapeMismatch(format!(
            "policy action {a} out of range for {} actions",
            mdp.n_actions()
        )));
    }
    let n = mdp.n_states();
    let mut current = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    for _ in 0..max_iterations {
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = mdp.q_value(s, policy.action(s), &current);
        }
        residual = sup_distance(&next, &current);
        std::mem::swap(&mut current, &mut next);
        if residual <= tolerance {
            return Ok(ValueFunction(current));
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual: residual.as_f64(),
    })
}

fn check_tolerance<T: Scalar>(tolerance: T) -> Result<()> {
    if tolerance > T::zero() && tolerance.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "tolerance",
            value: tolerance.as_f64(),
            domain: "(0, inf)",
        })
    }
}

/// Value iteration followed by greedy extraction, with fixed settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planner<T> {
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for Planner<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(DEFAULT_TOLERANCE),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl<T: Scalar> Planner<T> {
    pub fn solve(&self, mdp: &TabularMdp<T>) -> Result<(ValueFunction<T>, Policy)> {
        let values = value_iteration(mdp, self.tolerance, self.max_iterations)?;
        let policy = greedy_policy(mdp, &values)?;
        Ok((values, policy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn self_loop(reward: f64, gamma: f64) -> TabularMdp<f64> {
        TabularMdp::new(1, 1, vec![1.0], vec![reward], gamma).unwrap()
    }

    /// Two states, two actions; action 1 moves to the other state.
    fn two_state(rewards: [f64; 8]) -> TabularMdp<f64> {
        let t = vec![
            1.0, 0.0, 0.0, 1.0, //
            0.0, 1.0, 1.0, 0.0,
        ];
        TabularMdp::new(2, 2, t, rewards.to_vec(), 0.9).unwrap()
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let mdp = two_state([0.0; 8]);
        let v = value_iteration(&mdp, 1e-6, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
        let pv = evaluate_policy(&mdp, &Policy::new(vec![1, 0]), 1e-6).unwrap();
        assert!(pv.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn self_loop_is_geometric_series() {
        let v = value_iteration(&self_loop(10.0, 0.95), 1e-6, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_abs_diff_eq!(v.get(0), 200.0, epsilon = 1e-6 / 0.05);
        let pv = evaluate_policy(&self_loop(2.0, 0.95), &Policy::constant(1, 0), 1e-6).unwrap();
        assert_abs_diff_eq!(pv.get(0), 40.0, epsilon = 1e-6 / 0.05);
    }

    #[test]
    fn f32_planning() {
        let mdp = TabularMdp::<f32>::new(1, 1, vec![1.0], vec![10.0], 0.95).unwrap();
        let v = value_iteration(&mdp, 1e-3, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!((v.get(0) - 200.0).abs() < 0.05);
    }

    #[test]
    fn returned_values_meet_residual_bound() {
        let mdp = two_state([0.0, 0.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.5]);
        let v = value_iteration(&mdp, 1e-6, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(mdp.bellman_residual(&v) <= 1e-6);
    }

    #[test]
    fn identical_actions_tie_to_lowest_index() {
        let t = vec![0.5, 0.5, 0.5, 0.5, 0.25, 0.75, 0.25, 0.75];
        let r = vec![1.0, 2.0, 1.0, 2.0, 0.0, 4.0, 0.0, 4.0];
        let mdp = TabularMdp::new(2, 2, t, r, 0.9).unwrap();
        let (_, policy) = Planner::default().solve(&mdp).unwrap();
        assert_eq!(policy.actions(), &[0, 0]);
    }

    #[test]
    fn greedy_prefers_strictly_better_action() {
        // staying in state 1 pays 1 per step, moving there from state 0 pays nothing
        let mdp = two_state([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let (v, policy) = Planner::default().solve(&mdp).unwrap();
        assert_eq!(policy.actions(), &[1, 0]);
        assert_abs_diff_eq!(v.get(1), 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(v.get(0), 9.0, epsilon = 1e-4);
    }

    #[test]
    fn non_convergence_reports_residual() {
        match value_iteration(&self_loop(1.0, 0.99), 1e-9, 5) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 5);
                assert!(residual > 0.9);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(TabularMdp::new(1, 1, vec![0.9], vec![0.0], 0.5).is_err());
        assert!(TabularMdp::new(1, 1, vec![1.0], vec![0.0], 1.0).is_err());
        assert!(TabularMdp::new(2, 1, vec![1.2, -0.2, 0.0, 1.0], vec![0.0; 4], 0.5).is_err());
        assert!(TabularMdp::<f64>::new(1, 1, vec![1.0, 0.0], vec![0.0], 0.5).is_err());
        assert!(value_iteration(&self_loop(1.0, 0.5), 0.0, 10).is_err());
    }

    #[test]
    fn policy_shape_is_checked() {
        let mdp = two_state([0.0; 8]);
        assert!(evaluate_policy(&mdp, &Policy::new(vec![0]), 1e-6).is_err());
        assert!(evaluate_policy(&mdp, &Policy::new(vec![0, 2]), 1e-6).is_err());
        assert!(greedy_policy(&mdp, &ValueFunction::zeros(3)).is_err());
    }
}
