//! Per-group screening MDP: infection probability, exact one-year transition
//! laws, and expected stage costs.
//!
//! One year for a group in state `(x, y, u)` under action `a`:
//! ongoing employees leave with `p_leave`; every remaining employee and every
//! new hire is infected with probability `alpha(x, y, u)`; infected employees
//! who are tested are caught unless the test gives a false negative; all
//! infected employees drop out of next year's ongoing count, and the
//! undetected ones form next year's `u`. New hires arrive as a truncated
//! Poisson count.
//!
//! Per employee the year therefore ends in one of three outcomes (stays
//! clean, infected and undetected, or gone), so the joint law of
//! `(y', u')` is the convolution of two trinomial splits, one for ongoing
//! employees and one for new hires.

use std::io::Write;

use rayon::prelude::*;

use crate::clinic::{ClinicModel, GroupClinic};
use crate::dist::{split3_floor, truncated_poisson, JointCounts, ProbVec, PRUNE_FLOOR};
use crate::model::{Action, Bounds, GroupId, GroupParams, GroupState, OngoingTest, SystemParams, Test};

/// Per-state stage costs for each action and the successor rows.
type BuiltRow = ([f64; 6], Vec<Vec<(u32, f64)>>);

/// Yearly infection probability of one employee of the group.
///
/// Groups do not mix, so only the group's own undetected share contributes
/// besides the patient term. An empty group has no employee term.
pub fn infection_probability(state: &GroupState, gp: &GroupParams, beta: f64) -> f64 {
    let internal = match state.headcount() {
        0 => 0.0,
        n => gp.transmission_prob * state.undetected as f64 / n as f64,
    };
    (internal + beta * gp.patient_contact_prob * gp.transmission_prob).clamp(0.0, 1.0)
}

/// Number of employees taking each kind of test in a year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TestedCounts {
    pub skin_new: usize,
    pub skin_ongoing: usize,
    pub blood: usize,
    pub untested: usize,
}

pub fn tested_counts(state: &GroupState, action: &Action, leavers: usize) -> TestedCounts {
    let x = state.new_arrivals;
    let stayers = state.ongoing - leavers;
    let mut c = TestedCounts::default();
    match action.new_test {
        Test::Skin => c.skin_new = x,
        Test::Blood => c.blood += x,
    }
    match action.ongoing_test {
        OngoingTest::None => c.untested = stayers,
        OngoingTest::Skin => c.skin_ongoing = stayers,
        OngoingTest::Blood => c.blood += stayers,
    }
    c
}

/// Probability that an infected new hire is missed. The skin protocol is
/// given twice, so a miss needs two false negatives.
pub fn new_hire_false_negative(test: Test, gp: &GroupParams) -> f64 {
    match test {
        Test::Skin => gp.skin_fn * gp.skin_fn,
        Test::Blood => gp.blood_fn,
    }
}

/// Probability that an uninfected new hire is flagged (two skin chances).
pub fn new_hire_false_positive(test: Test, gp: &GroupParams) -> f64 {
    match test {
        Test::Skin => 1.0 - (1.0 - gp.skin_fp) * (1.0 - gp.skin_fp),
        Test::Blood => gp.blood_fp,
    }
}

/// Probability that an infected ongoing employee is missed (1 when untested).
pub fn ongoing_false_negative(test: OngoingTest, gp: &GroupParams) -> f64 {
    match test {
        OngoingTest::None => 1.0,
        OngoingTest::Skin => gp.skin_fn,
        OngoingTest::Blood => gp.blood_fn,
    }
}

pub fn ongoing_false_positive(test: OngoingTest, gp: &GroupParams) -> f64 {
    match test {
        OngoingTest::None => 0.0,
        OngoingTest::Skin => gp.skin_fp,
        OngoingTest::Blood => gp.blood_fp,
    }
}

/// Exact law of the successor state for one `(state, action)` pair.
///
/// Arrivals are independent of everything else, so the law is stored as the
/// product of the arrival pmf and a sparse joint table over `(y', u')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDist {
    pub arrivals: ProbVec,
    /// `(y', u', probability)` cells, sorted.
    pub core: Vec<(usize, usize, f64)>,
}

impl TransitionDist {
    pub fn prob(&self, s: &GroupState) -> f64 {
        let core = self
            .core
            .binary_search_by(|&(y, u, _)| (y, u).cmp(&(s.ongoing, s.undetected)))
            .map(|i| self.core[i].2)
            .unwrap_or(0.0);
        core * self.arrivals.get(s.new_arrivals)
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupState, f64)> + '_ {
        self.arrivals
            .iter()
            .flat_map(move |(x, px)| self.core.iter().map(move |&(y, u, p)| (GroupState::new(x, y, u), px * p)))
    }

    pub fn total(&self) -> f64 {
        self.arrivals.total() * self.core.iter().map(|c| c.2).sum::<f64>()
    }

    /// Marginal law of `u'`.
    pub fn undetected_marginal(&self) -> Vec<f64> {
        let len = self.core.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        let mut m = vec![0.0; len];
        for &(_, u, p) in &self.core {
            m[u] += p;
        }
        m
    }

    /// Marginal law of `y'`.
    pub fn ongoing_marginal(&self) -> Vec<f64> {
        let len = self.core.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let mut m = vec![0.0; len];
        for &(y, _, p) in &self.core {
            m[y] += p;
        }
        m
    }
}

/// Trinomial split of the ongoing employees into (stays clean, infected and missed).
fn ongoing_split(y: usize, test: OngoingTest, alpha: f64, gp: &GroupParams, floor: f64) -> JointCounts {
    let stay = 1.0 - gp.leave_prob;
    let p_clean = stay * (1.0 - alpha);
    let p_missed = stay * alpha * ongoing_false_negative(test, gp);
    split3_floor(y, p_clean, p_missed.min(1.0 - p_clean), floor).expect("category probabilities are valid")
}

/// Trinomial split of the new hires into (clean, infected and missed).
fn new_hire_split(x: usize, test: Test, alpha: f64, gp: &GroupParams, floor: f64) -> JointCounts {
    let p_clean = 1.0 - alpha;
    let p_missed = alpha * new_hire_false_negative(test, gp);
    split3_floor(x, p_clean, p_missed.min(1.0 - p_clean), floor).expect("category probabilities are valid")
}

/// Convolves the two splits into `grid` (dense over `(y', u')` within
/// `bounds`, clamping overflow onto the bounds) and returns the nonzero
/// cells as `(core index, probability)`, renormalized.
fn combine_into(
    ongoing: &JointCounts,
    new_hires: &JointCounts,
    bounds: &Bounds,
    grid: &mut [f64],
    out: &mut Vec<(u32, f64)>,
) {
    let width = bounds.max_undetected + 1;
    let mut touched_lo = usize::MAX;
    let mut touched_hi = 0;
    for &(cy, uy, p) in ongoing.cells() {
        for &(cx, ux, q) in new_hires.cells() {
            let y = (cy + cx).min(bounds.max_ongoing);
            let u = (uy + ux).min(bounds.max_undetected);
            let k = y * width + u;
            grid[k] += p * q;
            touched_lo = touched_lo.min(k);
            touched_hi = touched_hi.max(k);
        }
    }
    out.clear();
    let mut total = 0.0;
    if touched_lo <= touched_hi {
        for (k, cell) in grid.iter_mut().enumerate().take(touched_hi + 1).skip(touched_lo) {
            if *cell >= PRUNE_FLOOR {
                out.push((k as u32, *cell));
                total += *cell;
            }
            *cell = 0.0;
        }
    }
    for c in out.iter_mut() {
        c.1 /= total;
    }
}

/// Exact law of next year's state given this year's state and action.
pub fn transition_distribution(state: &GroupState, action: &Action, gp: &GroupParams, beta: f64) -> TransitionDist {
    let bounds = gp.bounds();
    let alpha = infection_probability(state, gp, beta);
    let ys = ongoing_split(state.ongoing, action.ongoing_test, alpha, gp, PRUNE_FLOOR);
    let xs = new_hire_split(state.new_arrivals, action.new_test, alpha, gp, PRUNE_FLOOR);
    let mut grid = vec![0.0; (bounds.max_ongoing + 1) * (bounds.max_undetected + 1)];
    let mut cells = Vec::new();
    combine_into(&ys, &xs, &bounds, &mut grid, &mut cells);
    let width = bounds.max_undetected + 1;
    TransitionDist {
        arrivals: truncated_poisson(gp.arrival_rate, bounds.max_new),
        core: cells.into_iter().map(|(k, p)| (k as usize / width, k as usize % width, p)).collect(),
    }
}

/// Expected one-year cost split by source.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageCost {
    pub tests: f64,
    pub xray: f64,
    pub undetected: f64,
    pub lost_time: f64,
}

impl StageCost {
    pub fn total(&self) -> f64 {
        self.tests + self.xray + self.undetected + self.lost_time
    }
}

/// Expected counts behind the stage cost.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpectedCounts {
    pub skin_new: f64,
    pub skin_ongoing: f64,
    pub blood: f64,
    pub true_positives: f64,
    pub false_positives: f64,
    pub undetected: f64,
    /// Clinic hours, X-ray visits included.
    pub hours: f64,
}

pub fn expected_counts(
    state: &GroupState,
    action: &Action,
    gp: &GroupParams,
    beta: f64,
    clinic: &GroupClinic,
) -> ExpectedCounts {
    let alpha = infection_probability(state, gp, beta);
    let x = state.new_arrivals as f64;
    let stayers = state.ongoing as f64 * (1.0 - gp.leave_prob);
    let mut c = ExpectedCounts::default();

    let fn_new = new_hire_false_negative(action.new_test, gp);
    let fp_new = new_hire_false_positive(action.new_test, gp);
    match action.new_test {
        Test::Skin => c.skin_new = x,
        Test::Blood => c.blood += x,
    }
    c.true_positives += x * alpha * (1.0 - fn_new);
    c.false_positives += x * (1.0 - alpha) * fp_new;
    c.undetected += x * alpha * fn_new;
    c.hours += x * clinic.hours(action.new_test, true);

    let fn_old = ongoing_false_negative(action.ongoing_test, gp);
    let fp_old = ongoing_false_positive(action.ongoing_test, gp);
    match action.ongoing_test {
        OngoingTest::None => {}
        OngoingTest::Skin => c.skin_ongoing = stayers,
        OngoingTest::Blood => c.blood += stayers,
    }
    if let Some(t) = action.ongoing_test.test() {
        c.true_positives += stayers * alpha * (1.0 - fn_old);
        c.false_positives += stayers * (1.0 - alpha) * fp_old;
        c.hours += stayers * clinic.hours(t, false);
    }
    c.undetected += stayers * alpha * fn_old;
    c.hours += clinic.xray * (c.true_positives + c.false_positives);
    c
}

/// Closed-form expected one-year cost of `action` in `state`.
pub fn expected_stage_cost(
    state: &GroupState,
    action: &Action,
    group: GroupId,
    sys: &SystemParams,
    clinic: &ClinicModel,
) -> StageCost {
    let gp = &sys.groups[&group];
    stage_cost_from(state, action, gp, sys, clinic.group(group))
}

fn stage_cost_from(
    state: &GroupState,
    action: &Action,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
) -> StageCost {
    let c = expected_counts(state, action, gp, sys.beta, clinic);
    let skin_charges = if sys.double_charge_new_skin { 2.0 * c.skin_new } else { c.skin_new } + c.skin_ongoing;
    StageCost {
        tests: sys.test_cost_blood * c.blood + sys.test_cost_skin * skin_charges,
        xray: sys.xray_cost * (c.true_positives + c.false_positives),
        undetected: gp.undetected_cost * c.undetected,
        lost_time: gp.lost_time_rate * c.hours,
    }
}

/// The decomposed MDP of one group with every transition law and stage cost
/// precomputed.
///
/// Successor laws are kept in factored form: a shared arrival pmf times a
/// sparse table over `(y', u')` per `(state, action)`. Expectations of a value
/// function therefore first collapse the arrival dimension
/// (see [`GroupMdp::collapse_arrivals`]).
#[derive(Clone, Debug)]
pub struct GroupMdp {
    pub group: GroupId,
    pub bounds: Bounds,
    pub params: GroupParams,
    pub arrivals: ProbVec,
    costs: Vec<[f64; 6]>,
    offsets: Vec<usize>,
    cells: Vec<u32>,
    probs: Vec<f64>,
}

impl GroupMdp {
    pub fn build(group: GroupId, sys: &SystemParams, clinic: &ClinicModel) -> Self {
        let gp = sys.groups[&group].clone();
        let bounds = gp.bounds();
        let gc = clinic.group(group).clone();
        let core_len = (bounds.max_ongoing + 1) * (bounds.max_undetected + 1);
        let n = bounds.num_states();

        let rows: Vec<BuiltRow> = (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; core_len],
                |grid, idx| {
                    let s = bounds.state(idx);
                    let alpha = infection_probability(&s, &gp, sys.beta);
                    let ys: Vec<JointCounts> = [OngoingTest::None, OngoingTest::Skin, OngoingTest::Blood]
                        .iter()
                        .map(|&t| ongoing_split(s.ongoing, t, alpha, &gp, PRUNE_FLOOR))
                        .collect();
                    let xs: Vec<JointCounts> = [Test::Skin, Test::Blood]
                        .iter()
                        .map(|&t| new_hire_split(s.new_arrivals, t, alpha, &gp, PRUNE_FLOOR))
                        .collect();
                    let mut costs = [0.0; 6];
                    let mut laws = Vec::with_capacity(6);
                    for (k, a) in Action::ALL.iter().enumerate() {
                        costs[k] = stage_cost_from(&s, a, &gp, sys, &gc).total();
                        let yi = a.ongoing_test as usize;
                        let xi = a.new_test as usize;
                        let mut cells = Vec::new();
                        combine_into(&ys[yi], &xs[xi], &bounds, grid, &mut cells);
                        laws.push(cells);
                    }
                    (costs, laws)
                },
            )
            .collect();

        let total: usize = rows.iter().flat_map(|r| r.1.iter()).map(Vec::len).sum();
        let mut costs = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(6 * n + 1);
        let mut cells = Vec::with_capacity(total);
        let mut probs = Vec::with_capacity(total);
        offsets.push(0);
        for (c, laws) in rows {
            costs.push(c);
            for law in laws {
                for (k, p) in law {
                    cells.push(k);
                    probs.push(p);
                }
                offsets.push(cells.len());
            }
        }
        Self {
            group,
            bounds,
            arrivals: truncated_poisson(gp.arrival_rate, bounds.max_new),
            params: gp,
            costs,
            offsets,
            cells,
            probs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.costs.len()
    }

    pub fn state(&self, index: usize) -> GroupState {
        self.bounds.state(index)
    }

    pub fn index(&self, s: &GroupState) -> usize {
        self.bounds.index(s)
    }

    pub fn actions(&self) -> &'static [Action; 6] {
        &Action::ALL
    }

    /// Expected stage cost of action number `a` (see [`Action::ALL`]).
    pub fn cost(&self, s: usize, a: usize) -> f64 {
        self.costs[s][a]
    }

    /// Largest stage cost over all state-action pairs.
    pub fn max_cost(&self) -> f64 {
        self.costs.iter().flatten().copied().fold(0.0, f64::max)
    }

    fn core_width(&self) -> usize {
        self.bounds.max_undetected + 1
    }

    fn core_len(&self) -> usize {
        (self.bounds.max_ongoing + 1) * self.core_width()
    }

    /// Sparse `(y', u')` law of `(s, a)` as `(core index, probability)` pairs.
    pub fn core_law(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let k = 6 * s + a;
        let range = self.offsets[k]..self.offsets[k + 1];
        self.cells[range.clone()].iter().zip(&self.probs[range]).map(|(&c, &p)| (c as usize, p))
    }

    pub fn transition(&self, s: usize, a: usize) -> TransitionDist {
        let w = self.core_width();
        TransitionDist {
            arrivals: self.arrivals.clone(),
            core: self.core_law(s, a).map(|(k, p)| (k / w, k % w, p)).collect(),
        }
    }

    /// Full successor list `(state index, probability)`.
    pub fn successors(&self, s: usize, a: usize) -> Vec<(usize, f64)> {
        let core_len = self.core_len();
        let mut out = Vec::new();
        for (x, px) in self.arrivals.iter() {
            for (k, p) in self.core_law(s, a) {
                out.push((x * core_len + k, px * p));
            }
        }
        out
    }

    /// `W(y', u') = sum_x' P(x') v(x', y', u')`, the arrival-averaged value.
    pub fn collapse_arrivals(&self, values: &[f64]) -> Vec<f64> {
        let core_len = self.core_len();
        let mut w = vec![0.0; core_len];
        for (x, px) in self.arrivals.iter() {
            let block = &values[x * core_len..(x + 1) * core_len];
            for (wk, vk) in w.iter_mut().zip(block) {
                *wk += px * vk;
            }
        }
        w
    }

    /// `E[v(s') | s, a]` given the collapsed values from [`Self::collapse_arrivals`].
    pub fn expected_next(&self, collapsed: &[f64], s: usize, a: usize) -> f64 {
        let k = 6 * s + a;
        let range = self.offsets[k]..self.offsets[k + 1];
        self.cells[range.clone()].iter().zip(&self.probs[range]).map(|(&c, &p)| p * collapsed[c as usize]).sum()
    }

    /// Number of stored `(y', u')` cells across all state-action pairs.
    pub fn stored_cells(&self) -> usize {
        self.cells.len()
    }

    /// Debug dump: `state,action,successor,probability`, one row per nonzero entry.
    pub fn write_transitions_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "action", "successor", "probability"])?;
        for s in 0..self.num_states() {
            for (a, action) in Action::ALL.iter().enumerate() {
                for (t, p) in self.successors(s, a) {
                    w.write_record([
                        self.state(s).to_string(),
                        action.to_string(),
                        self.state(t).to_string(),
                        format!("{p:e}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
