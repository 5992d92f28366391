use rayon::prelude::*;

use super::{bellman_residual, greedy_policy, q_value, FiniteMdp, Policy, SolveError, ValueFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct ViSolution {
    pub values: ValueFunction,
    pub policy: Policy,
    pub iterations: usize,
    /// Sup-norm change of each sweep.
    pub residuals: Vec<f64>,
    /// Bellman residual of the returned values.
    pub residual: f64,
}

pub const DEFAULT_MAX_SWEEPS: usize = 200_000;

/// Value iteration from `v = 0` until the Bellman residual of the returned
/// values is at most `tol`. The policy is greedy for the returned values with
/// ties within `tol` broken toward the earliest action.
pub fn value_iteration<M: FiniteMdp + ?Sized>(mdp: &M, discount: f64, tol: f64) -> Result<ViSolution, SolveError> {
    value_iteration_with(mdp, discount, tol, DEFAULT_MAX_SWEEPS, None)
}

pub fn value_iteration_with<M: FiniteMdp + ?Sized>(
    mdp: &M,
    discount: f64,
    tol: f64,
    max_sweeps: usize,
    start: Option<&[f64]>,
) -> Result<ViSolution, SolveError> {
    if !(0.0..1.0).contains(&discount) {
        return Err(SolveError::Invalid(format!("discount {discount} outside [0, 1)")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolveError::Invalid(format!("tolerance {tol} must be positive")));
    }
    let n = mdp.num_states();
    let mut v = start.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut residuals = Vec::new();
    loop {
        let prepared = mdp.prepare(&v);
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                (0..mdp.num_actions()).map(|a| q_value(mdp, &prepared, s, a, discount)).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residuals.push(change);
        v = next;
        // the residual of the new values is at most discount * change
        if discount * change <= tol {
            break;
        }
        if residuals.len() >= max_sweeps {
            return Err(SolveError::NotConverged { iterations: residuals.len(), residual: change });
        }
    }
    let residual = bellman_residual(mdp, &v, discount);
    let policy = greedy_policy(mdp, &v, discount, tol);
    Ok(ViSolution { values: ValueFunction(v), policy, iterations: residuals.len(), residuals, residual })
}

/// Value of a fixed policy by iterating its Bellman operator to `tol`.
pub fn policy_evaluation<M: FiniteMdp + ?Sized>(mdp: &M, policy: &Policy, discount: f64, tol: f64) -> ValueFunction {
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    loop {
        let prepared = mdp.prepare(&v);
        let next: Vec<f64> =
            (0..n).into_par_iter().map(|s| q_value(mdp, &prepared, s, policy.get(s), discount)).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if discount * change <= tol * (1.0 - discount) || change == 0.0 {
            return ValueFunction(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{max_stage_cost, TabularMdp};
    use nalgebra::{DMatrix, DVector};

    fn single(cost: f64) -> TabularMdp {
        TabularMdp { costs: vec![vec![cost]], transitions: vec![vec![vec![(0, 1.0)]]] }
    }

    #[test]
    fn geometric_series() {
        let s = value_iteration(&single(5.0), 0.9, 1e-9).unwrap();
        assert!((s.values.get(0) - 50.0).abs() < 1e-7);
        assert!(s.residual <= 1e-9);
    }

    #[test]
    fn zero_cost() {
        let mut m = TabularMdp::random(4, 3, 1);
        m.costs.iter_mut().flatten().for_each(|c| *c = 0.0);
        let s = value_iteration(&m, 0.95, 1e-9).unwrap();
        assert!(s.values.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(value_iteration(&single(1.0), 1.0, 1e-6).is_err());
        assert!(value_iteration(&single(1.0), 0.5, 0.0).is_err());
        assert!(matches!(
            value_iteration_with(&single(1.0), 0.99, 1e-12, 3, None),
            Err(SolveError::NotConverged { iterations: 3, .. })
        ));
    }

    fn exact_policy_values(m: &TabularMdp, policy: &Policy, discount: f64) -> Vec<f64> {
        let n = m.costs.len();
        let mut a = DMatrix::<f64>::identity(n, n);
        let mut c = DVector::<f64>::zeros(n);
        for s in 0..n {
            c[s] = m.costs[s][policy.get(s)];
            for &(t, p) in &m.transitions[s][policy.get(s)] {
                a[(s, t)] -= discount * p;
            }
        }
        a.lu().solve(&c).unwrap().iter().copied().collect()
    }

    /// Policy iteration with exact linear solves.
    fn policy_iteration(m: &TabularMdp, discount: f64) -> (Vec<f64>, Policy) {
        let mut policy = Policy::constant(m.costs.len(), 0);
        loop {
            let v = exact_policy_values(m, &policy, discount);
            let next = greedy_policy(m, &v, discount, 1e-12);
            if next == policy {
                return (v, policy);
            }
            policy = next;
        }
    }

    #[test]
    fn matches_policy_iteration() {
        for seed in 0..10 {
            let m = TabularMdp::random(3, 3, seed);
            let (v, p) = policy_iteration(&m, 0.9);
            let s = value_iteration(&m, 0.9, 1e-10).unwrap();
            for (a, b) in v.iter().zip(&s.values.0) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            assert_eq!(s.policy, p);
        }
    }

    #[test]
    fn bounded_and_contracting() {
        let m = TabularMdp::random(6, 4, 3);
        let d = 0.8;
        let s = value_iteration(&m, d, 1e-10).unwrap();
        let cap = max_stage_cost(&m) / (1.0 - d);
        assert!(s.values.0.iter().all(|&v| (0.0..=cap).contains(&v)));
        for w in s.residuals.windows(2) {
            assert!(w[1] <= d * w[0] + 1e-12);
        }
    }

    #[test]
    fn policy_evaluation_matches_linear_solve() {
        let m = TabularMdp::random(5, 2, 9);
        let p = Policy(vec![0, 1, 1, 0, 1]);
        let exact = exact_policy_values(&m, &p, 0.9);
        let v = policy_evaluation(&m, &p, 0.9, 1e-10);
        for (a, b) in exact.iter().zip(&v.0) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
