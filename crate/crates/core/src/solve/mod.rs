//! Optimal per-group policies: value iteration, and column generation on the
//! occupancy-measure LP of each group.

pub mod column_generation;
pub mod lp;
pub mod system;
pub mod value_iteration;

use rand::Rng;
use rayon::prelude::*;

use crate::mdp::GroupMdp;
use crate::model::Action;
use crate::rng::substream;

pub use column_generation::{
    assignment_pricing, column_generation, price_columns, restricted_master, CgOptions, CgResult, Column,
    MasterSolution,
};
pub use lp::{solve_lp, LpColumn, LpError, LpProblem, LpSolution, RevisedSimplex, SimplexOptions};
pub use system::{
    solve_group, solve_system, start_distribution, ExactCheck, GroupSolution, OptimalPolicy, SolveMethod, SolveOptions,
    SystemSolution,
};
pub use value_iteration::{policy_evaluation, value_iteration, value_iteration_with, ViSolution};

/// A finite discounted-cost MDP with a fixed number of actions in every state.
pub trait FiniteMdp: Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn cost(&self, s: usize, a: usize) -> f64;
    /// Precomputation shared by every `expected_next` call for one value vector.
    fn prepare(&self, values: &[f64]) -> Vec<f64> {
        values.to_vec()
    }
    /// `E[v(s') | s, a]`, given `prepare(v)`.
    fn expected_next(&self, prepared: &[f64], s: usize, a: usize) -> f64;
    fn successors(&self, s: usize, a: usize) -> Vec<(usize, f64)>;
}

impl FiniteMdp for GroupMdp {
    fn num_states(&self) -> usize {
        GroupMdp::num_states(self)
    }
    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }
    fn cost(&self, s: usize, a: usize) -> f64 {
        GroupMdp::cost(self, s, a)
    }
    fn prepare(&self, values: &[f64]) -> Vec<f64> {
        self.collapse_arrivals(values)
    }
    fn expected_next(&self, prepared: &[f64], s: usize, a: usize) -> f64 {
        GroupMdp::expected_next(self, prepared, s, a)
    }
    fn successors(&self, s: usize, a: usize) -> Vec<(usize, f64)> {
        GroupMdp::successors(self, s, a)
    }
}

/// Explicit small MDP, mostly for tests and examples.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    /// `costs[s][a]`
    pub costs: Vec<Vec<f64>>,
    /// `transitions[s][a]` as `(successor, probability)`
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
}

impl TabularMdp {
    /// Random dense MDP with costs in `[0, 10)`.
    pub fn random(states: usize, actions: usize, seed: u64) -> Self {
        let mut rng = substream(seed, &[0x7AB]);
        let mut costs = Vec::with_capacity(states);
        let mut transitions = Vec::with_capacity(states);
        for _ in 0..states {
            costs.push((0..actions).map(|_| rng.gen_range(0.0..10.0)).collect());
            transitions.push(
                (0..actions)
                    .map(|_| {
                        let w: Vec<f64> = (0..states).map(|_| rng.gen_range(0.0..1.0)).collect();
                        let total: f64 = w.iter().sum();
                        w.into_iter().enumerate().map(|(t, p)| (t, p / total)).collect()
                    })
                    .collect(),
            );
        }
        Self { costs, transitions }
    }
}

impl FiniteMdp for TabularMdp {
    fn num_states(&self) -> usize {
        self.costs.len()
    }
    fn num_actions(&self) -> usize {
        self.costs.first().map_or(0, Vec::len)
    }
    fn cost(&self, s: usize, a: usize) -> f64 {
        self.costs[s][a]
    }
    fn expected_next(&self, prepared: &[f64], s: usize, a: usize) -> f64 {
        self.transitions[s][a].iter().map(|&(t, p)| p * prepared[t]).sum()
    }
    fn successors(&self, s: usize, a: usize) -> Vec<(usize, f64)> {
        self.transitions[s][a].clone()
    }
}

/// Expected discounted cost per state.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    /// `sum_s gamma(s) v(s)`.
    pub fn weighted(&self, gamma: &[f64]) -> f64 {
        self.0.iter().zip(gamma).map(|(v, g)| v * g).sum()
    }
}

/// One action index per state. For group MDPs the index refers to [`Action::ALL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy(pub Vec<usize>);

impl Policy {
    pub fn constant(states: usize, action: usize) -> Self {
        Self(vec![action; states])
    }

    pub fn get(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn action(&self, s: usize) -> Action {
        Action::ALL[self.0[s]]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("value iteration did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("restricted master is infeasible; add slack columns or a feasible column per state")]
    MasterInfeasible,
    #[error("column generation stopped after {rounds} rounds with objective {objective} (min reduced cost {min_reduced_cost:e})")]
    RoundLimit { rounds: usize, objective: f64, min_reduced_cost: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid solver input: {0}")]
    Invalid(String),
}

/// `c(s,a) + discount * E[v(s')]`.
pub fn q_value<M: FiniteMdp + ?Sized>(mdp: &M, prepared: &[f64], s: usize, a: usize, discount: f64) -> f64 {
    mdp.cost(s, a) + discount * mdp.expected_next(prepared, s, a)
}

/// Index of the first action within `tie_tol` of the minimum of `q`.
pub fn argmin_with_ties(q: &[f64], tie_tol: f64) -> usize {
    let best = q.iter().copied().fold(f64::INFINITY, f64::min);
    q.iter().position(|&v| v <= best + tie_tol).unwrap_or(0)
}

/// Greedy policy for `values`; ties within `tie_tol` go to the earliest action.
pub fn greedy_policy<M: FiniteMdp + ?Sized>(mdp: &M, values: &[f64], discount: f64, tie_tol: f64) -> Policy {
    let prepared = mdp.prepare(values);
    Policy(
        (0..mdp.num_states())
            .into_par_iter()
            .map(|s| {
                let q: Vec<f64> = (0..mdp.num_actions()).map(|a| q_value(mdp, &prepared, s, a, discount)).collect();
                argmin_with_ties(&q, tie_tol)
            })
            .collect(),
    )
}

/// `max_s |min_a Q(s,a) - v(s)|`.
pub fn bellman_residual<M: FiniteMdp + ?Sized>(mdp: &M, values: &[f64], discount: f64) -> f64 {
    let prepared = mdp.prepare(values);
    (0..mdp.num_states())
        .into_par_iter()
        .map(|s| {
            let best =
                (0..mdp.num_actions()).map(|a| q_value(mdp, &prepared, s, a, discount)).fold(f64::INFINITY, f64::min);
            (best - values[s]).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Gap between the best and second-best action value in each state.
pub fn action_gaps<M: FiniteMdp + ?Sized>(mdp: &M, values: &[f64], discount: f64) -> Vec<f64> {
    let prepared = mdp.prepare(values);
    (0..mdp.num_states())
        .into_par_iter()
        .map(|s| {
            let mut q: Vec<f64> = (0..mdp.num_actions()).map(|a| q_value(mdp, &prepared, s, a, discount)).collect();
            q.sort_by(f64::total_cmp);
            if q.len() > 1 {
                q[1] - q[0]
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// States where two policies choose different actions although the best
/// action beats the runner-up by more than `tie_gap` under `values`.
pub fn policy_disagreements<M: FiniteMdp + ?Sized>(
    mdp: &M,
    values: &[f64],
    discount: f64,
    a: &Policy,
    b: &Policy,
    tie_gap: f64,
) -> Vec<usize> {
    let gaps = action_gaps(mdp, values, discount);
    (0..mdp.num_states()).filter(|&s| a.get(s) != b.get(s) && gaps[s] > tie_gap).collect()
}

/// Largest stage cost over all state-action pairs.
pub fn max_stage_cost<M: FiniteMdp + ?Sized>(mdp: &M) -> f64 {
    (0..mdp.num_states())
        .flat_map(|s| (0..mdp.num_actions()).map(move |a| (s, a)))
        .map(|(s, a)| mdp.cost(s, a))
        .fold(0.0, f64::max)
}
