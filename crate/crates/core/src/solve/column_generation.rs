//! Column generation on the occupancy-measure LP of a single group.
//!
//! Master, restricted to a set of `(state, action)` columns:
//!
//! ```text
//! min  sum c(s,a) d(s,a)
//! s.t. sum_a d(s,a) - discount * sum_(s',a') P(s | s',a') d(s',a') >= gamma(s)   for every s
//!      d >= 0
//! ```
//!
//! Its duals are values `v(s)`; a column prices out when
//! `c(s,a) - v(s) + discount * E[v(s') | s,a] < 0`.

use std::collections::HashSet;

use rayon::prelude::*;

use super::lp::{LpColumn, LpProblem, RevisedSimplex, SimplexOptions};
use super::{greedy_policy, FiniteMdp, Policy, SolveError, ValueFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub state: usize,
    pub action: usize,
    pub cost: f64,
    pub successors: Vec<(usize, f64)>,
}

impl Column {
    pub fn from_mdp<M: FiniteMdp + ?Sized>(mdp: &M, state: usize, action: usize) -> Self {
        Self { state, action, cost: mdp.cost(state, action), successors: mdp.successors(state, action) }
    }

    fn to_lp(&self, discount: f64) -> LpColumn {
        let mut entries: Vec<(usize, f64)> = self.successors.iter().map(|&(t, p)| (t, -discount * p)).collect();
        entries.push((self.state, 1.0));
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, a) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        LpColumn { cost: self.cost, entries: merged, tag: Some(self.state) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterSolution {
    /// One value per state.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Occupancy `d(s,a)` of each column, in input order.
    pub occupancy: Vec<f64>,
}

/// Solves the master restricted to `columns` from scratch.
pub fn restricted_master(columns: &[Column], gamma: &[f64], discount: f64) -> Result<MasterSolution, SolveError> {
    if columns.is_empty() {
        return Err(SolveError::MasterInfeasible);
    }
    let mut p = LpProblem::new(gamma.to_vec());
    p.columns = columns.iter().map(|c| c.to_lp(discount)).collect();
    match super::lp::solve_lp(&p) {
        Ok(s) => Ok(MasterSolution { duals: s.duals, objective: s.objective, occupancy: s.x }),
        Err(super::LpError::Infeasible { .. }) => Err(SolveError::MasterInfeasible),
        Err(e) => Err(e.into()),
    }
}

/// Reduced cost of every `(state, action)` pair not in `skip`, as
/// `(reduced cost, state, action)`.
fn reduced_costs<M: FiniteMdp + ?Sized>(
    mdp: &M,
    duals: &[f64],
    discount: f64,
    skip: &HashSet<(usize, usize)>,
) -> Vec<(f64, usize, usize)> {
    let prepared = mdp.prepare(duals);
    (0..mdp.num_states())
        .into_par_iter()
        .flat_map_iter(|s| {
            let prepared = &prepared;
            (0..mdp.num_actions()).filter(move |&a| !skip.contains(&(s, a))).map(move |a| {
                let f = mdp.cost(s, a) - duals[s] + discount * mdp.expected_next(prepared, s, a);
                (f, s, a)
            })
        })
        .collect()
}

/// The column of minimum reduced cost over every feasible `(state, action)`,
/// by exhaustive enumeration (ties go to the lowest state, then action).
/// `duals` shorter than the state count read as 0 beyond their end.
pub fn price_columns<M: FiniteMdp + ?Sized>(mdp: &M, duals: &[f64], discount: f64) -> (Column, f64) {
    let mut v = duals.to_vec();
    v.resize(mdp.num_states(), 0.0);
    let all = reduced_costs(mdp, &v, discount, &HashSet::new());
    let &(f, s, a) = all
        .iter()
        .min_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))))
        .expect("at least one state-action pair");
    (Column::from_mdp(mdp, s, a), f)
}

/// Pricing written as the assignment program
/// `min sum f(s,a) z(s,a)  s.t.  sum z = 1, z >= 0`,
/// solved as an LP; the constraint matrix is totally unimodular, so the LP
/// optimum is attained at a single pair. Returns `(state, action, value)`.
pub fn assignment_pricing(reduced: &[(usize, usize, f64)]) -> Result<(usize, usize, f64), SolveError> {
    let mut p = LpProblem::new(vec![1.0, -1.0]);
    for &(_, _, f) in reduced {
        p.add_column(f, vec![(0, 1.0), (1, -1.0)]);
    }
    let s = super::lp::solve_lp(&p)?;
    let j = (0..reduced.len())
        .max_by(|&a, &b| s.x[a].total_cmp(&s.x[b]))
        .ok_or_else(|| SolveError::Invalid("no pairs to price".into()))?;
    Ok((reduced[j].0, reduced[j].1, s.objective))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOptions {
    /// Columns with reduced cost below `-tol` are added.
    pub tol: f64,
    /// Columns added per pricing round.
    pub batch: usize,
    pub max_rounds: usize,
    /// Action of the one-per-state starting columns.
    pub initial_action: usize,
    /// Extra starting columns, e.g. the final set of an earlier run.
    pub initial_columns: Vec<(usize, usize)>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-6, batch: 16, max_rounds: 100_000, initial_action: 1, initial_columns: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgResult {
    pub values: ValueFunction,
    pub policy: Policy,
    pub objective: f64,
    /// Pricing rounds, the last one included.
    pub iterations: usize,
    /// `(state, action)` columns of the final master.
    pub columns: Vec<(usize, usize)>,
    pub generated: usize,
    pub objective_history: Vec<f64>,
    /// Smallest reduced cost seen in the final pricing round.
    pub min_reduced_cost: f64,
    pub simplex_iterations: usize,
}

pub fn column_generation<M: FiniteMdp + ?Sized>(
    mdp: &M,
    gamma: &[f64],
    discount: f64,
    opts: &CgOptions,
) -> Result<CgResult, SolveError> {
    let n = mdp.num_states();
    if gamma.len() != n {
        return Err(SolveError::Invalid(format!("gamma has {} entries for {n} states", gamma.len())));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(SolveError::Invalid(format!("tolerance {} must be positive", opts.tol)));
    }
    if opts.initial_action >= mdp.num_actions() {
        return Err(SolveError::Invalid(format!("initial action {} out of range", opts.initial_action)));
    }

    let mut columns: Vec<(usize, usize)> = (0..n).map(|s| (s, opts.initial_action)).collect();
    let mut present: HashSet<(usize, usize)> = columns.iter().copied().collect();
    for &c in &opts.initial_columns {
        if present.insert(c) {
            columns.push(c);
        }
    }
    let lp_columns: Vec<LpColumn> =
        columns.par_iter().map(|&(s, a)| Column::from_mdp(mdp, s, a).to_lp(discount)).collect();
    let mut problem = LpProblem::new(gamma.to_vec());
    problem.columns = lp_columns;
    let basis: Vec<usize> = (0..n).collect();
    let mut lp = RevisedSimplex::with_basis(problem, &basis, SimplexOptions::default()).map_err(|e| match e {
        super::LpError::Infeasible { .. } => SolveError::MasterInfeasible,
        e => e.into(),
    })?;

    let mut history = Vec::new();
    let mut generated = 0;
    let mut rounds = 0;
    loop {
        let sol = lp.solve()?;
        history.push(sol.objective);
        rounds += 1;
        let mut candidates = reduced_costs(mdp, &sol.duals, discount, &present);
        let min_rc = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        candidates.retain(|c| c.0 < -opts.tol);
        if candidates.is_empty() {
            let values = sol.duals;
            let policy = greedy_policy(mdp, &values, discount, opts.tol);
            return Ok(CgResult {
                values: ValueFunction(values),
                policy,
                objective: sol.objective,
                iterations: rounds,
                columns,
                generated,
                objective_history: history,
                min_reduced_cost: min_rc,
                simplex_iterations: sol.iterations,
            });
        }
        if rounds >= opts.max_rounds {
            return Err(SolveError::RoundLimit { rounds, objective: sol.objective, min_reduced_cost: min_rc });
        }
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        candidates.truncate(opts.batch.max(1));
        let new: Vec<LpColumn> =
            candidates.iter().map(|&(_, s, a)| Column::from_mdp(mdp, s, a).to_lp(discount)).collect();
        for &(_, s, a) in &candidates {
            present.insert((s, a));
            columns.push((s, a));
        }
        generated += new.len();
        lp.add_columns(new);
    }
}
