//! Monte Carlo simulation of every group under a screening policy.
//!
//! Each group-year draws exactly ten uniforms from its own substream
//! `(seed, replication, group, year)` and turns them into counts by inverse
//! CDF, so different policies see the same randomness (common random numbers)
//! and a run is reproducible from its seed alone.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, DiscreteCDF, StudentsT};

use crate::clinic::{ClinicModel, GroupClinic};
use crate::dist::truncated_poisson;
use crate::mdp::{infection_probability, StageCost};
use crate::model::{
    initial_state, Action, GroupId, GroupParams, GroupState, ModelError, OngoingTest, SystemParams, Test,
};
use crate::rng::substream;
use crate::solve::OptimalPolicy;

/// `F^{-1}(u)` for `Binomial(n, p)`, searching outward from the mode. The
/// result is nondecreasing in `u`.
pub fn binomial_inverse(n: usize, p: f64, u: f64) -> usize {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let d = Binomial::new(p, n as u64).expect("valid binomial");
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    let mut k = mode;
    let mut cdf = d.cdf(k as u64);
    let mut pmf = d.pmf(k as u64);
    let odds = p / (1.0 - p);
    if u <= cdf {
        // step down while P(X <= k-1) still covers u
        while k > 0 && u <= cdf - pmf {
            cdf -= pmf;
            pmf *= k as f64 / ((n - k + 1) as f64 * odds);
            k -= 1;
        }
    } else {
        while k < n && u > cdf {
            pmf *= (n - k) as f64 / (k + 1) as f64 * odds;
            k += 1;
            cdf += pmf;
        }
    }
    k
}

/// Inverse CDF over an explicit pmf.
pub fn discrete_inverse(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u <= c).unwrap_or(cdf.len() - 1)
}

/// Uniforms consumed per group-year, in order: leavers, infected new hires,
/// first and second new-hire false negatives, first and second new-hire false
/// positives, infected ongoing, ongoing false negatives, ongoing false
/// positives, arrivals.
pub const DRAWS_PER_STEP: usize = 10;

/// Realized counts of one simulated year.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub alpha: f64,
    pub leavers: usize,
    pub infected_new: usize,
    pub infected_ongoing: usize,
    pub undetected_new: usize,
    pub undetected_ongoing: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub skin_new: usize,
    pub skin_ongoing: usize,
    pub blood: usize,
    /// Next state before clamping to bounds.
    pub next_unclamped: GroupState,
    pub next: GroupState,
}

impl StepOutcome {
    pub fn infected(&self) -> usize {
        self.infected_new + self.infected_ongoing
    }
}

/// One year of the group recursion driven by the given uniforms.
pub fn sample_step(
    s: &GroupState,
    action: &Action,
    gp: &GroupParams,
    beta: f64,
    arrivals_cdf: &[f64],
    u: &[f64; DRAWS_PER_STEP],
) -> StepOutcome {
    let alpha = infection_probability(s, gp, beta);
    let mut o = StepOutcome { alpha, ..Default::default() };
    let x = s.new_arrivals;
    o.leavers = binomial_inverse(s.ongoing, gp.leave_prob, u[0]);
    let stay = s.ongoing - o.leavers;

    o.infected_new = binomial_inverse(x, alpha, u[1]);
    let clean_new = x - o.infected_new;
    let (missed, flagged) = match action.new_test {
        Test::Skin => {
            o.skin_new = x;
            let miss1 = binomial_inverse(o.infected_new, gp.skin_fn, u[2]);
            let miss2 = binomial_inverse(miss1, gp.skin_fn, u[3]);
            let r1 = binomial_inverse(clean_new, gp.skin_fp, u[4]);
            let r2 = binomial_inverse(clean_new - r1, gp.skin_fp, u[5]);
            (miss2, r1 + r2)
        }
        Test::Blood => {
            o.blood += x;
            (binomial_inverse(o.infected_new, gp.blood_fn, u[2]), binomial_inverse(clean_new, gp.blood_fp, u[4]))
        }
    };
    o.undetected_new = missed;
    o.true_positives += o.infected_new - missed;
    o.false_positives += flagged;

    o.infected_ongoing = binomial_inverse(stay, alpha, u[6]);
    let clean_old = stay - o.infected_ongoing;
    match action.ongoing_test {
        OngoingTest::None => o.undetected_ongoing = o.infected_ongoing,
        t => {
            let (fnr, fpr) = match t {
                OngoingTest::Skin => {
                    o.skin_ongoing = stay;
                    (gp.skin_fn, gp.skin_fp)
                }
                _ => {
                    o.blood += stay;
                    (gp.blood_fn, gp.blood_fp)
                }
            };
            o.undetected_ongoing = binomial_inverse(o.infected_ongoing, fnr, u[7]);
            o.true_positives += o.infected_ongoing - o.undetected_ongoing;
            o.false_positives += binomial_inverse(clean_old, fpr, u[8]);
        }
    }

    let arrivals = discrete_inverse(arrivals_cdf, u[9]);
    o.next_unclamped = GroupState::new(arrivals, clean_old + clean_new, o.undetected_new + o.undetected_ongoing);
    o.next = gp.bounds().clamp(o.next_unclamped);
    o
}

/// Cost of a realized year, using realized counts and the clinic hours.
pub fn realized_cost(o: &StepOutcome, gp: &GroupParams, sys: &SystemParams, clinic: &GroupClinic) -> StageCost {
    let skin_charges = if sys.double_charge_new_skin { 2 * o.skin_new } else { o.skin_new } + o.skin_ongoing;
    let positives = (o.true_positives + o.false_positives) as f64;
    let hours = o.skin_new as f64 * clinic.skin_new
        + o.skin_ongoing as f64 * clinic.skin_ongoing
        + o.blood as f64 * clinic.blood
        + positives * clinic.xray;
    StageCost {
        tests: sys.test_cost_blood * o.blood as f64 + sys.test_cost_skin * skin_charges as f64,
        xray: sys.xray_cost * positives,
        undetected: gp.undetected_cost * (o.undetected_new + o.undetected_ongoing) as f64,
        lost_time: gp.lost_time_rate * hours,
    }
}

/// Practitioner rule for one group: in years `t` with `t % period_years == 0`
/// the ongoing test is the last band whose threshold the undetected share
/// `u / (x + y)` reaches, or `default_test` below every band; other years
/// have no ongoing test.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRule {
    pub group: GroupId,
    pub new_test: Test,
    pub period_years: usize,
    pub default_test: OngoingTest,
    pub bands: Vec<Band>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub threshold: f64,
    pub test: OngoingTest,
}

impl ThresholdRule {
    pub fn every(group: GroupId, period_years: usize, test: OngoingTest) -> Self {
        Self { group, new_test: Test::Blood, period_years, default_test: test, bands: Vec::new() }
    }

    pub fn triggered(group: GroupId, bands: Vec<Band>) -> Self {
        Self { group, new_test: Test::Blood, period_years: 1, default_test: OngoingTest::None, bands }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.period_years == 0 {
            v.push(format!("rule {}: period must be at least 1 year", self.group));
        }
        if self.bands.windows(2).any(|w| w[1].threshold < w[0].threshold) {
            v.push(format!("rule {}: thresholds must be nondecreasing", self.group));
        }
        if self.bands.iter().any(|b| !(0.0..=1.0).contains(&b.threshold)) {
            v.push(format!("rule {}: thresholds must lie in [0, 1]", self.group));
        }
        v
    }

    pub fn decide(&self, s: &GroupState, year: usize) -> Action {
        let ongoing = if !year.is_multiple_of(self.period_years.max(1)) {
            OngoingTest::None
        } else {
            let r = s.infected_ratio();
            self.bands.iter().rev().find(|b| r >= b.threshold).map_or(self.default_test, |b| b.test)
        };
        Action::new(self.new_test, ongoing)
    }
}

/// The published practitioner rules: blood tests for every new hire, yearly
/// blood tests for physicians, periodic blood tests for the high-risk nurse
/// and staff groups, and infected-share triggers elsewhere.
pub fn published_rules() -> Vec<ThresholdRule> {
    let g = GroupId::new;
    let band = |threshold, test| Band { threshold, test };
    vec![
        ThresholdRule::every(g(1, 1), 1, OngoingTest::Blood),
        ThresholdRule::every(g(1, 2), 1, OngoingTest::Blood),
        ThresholdRule::every(g(1, 3), 1, OngoingTest::Blood),
        ThresholdRule::triggered(g(2, 1), vec![band(0.016, OngoingTest::Blood)]),
        ThresholdRule::every(g(2, 2), 3, OngoingTest::Blood),
        ThresholdRule::every(g(2, 3), 3, OngoingTest::Blood),
        ThresholdRule::triggered(g(3, 1), vec![band(0.017, OngoingTest::Blood)]),
        ThresholdRule::triggered(g(3, 2), vec![band(0.017, OngoingTest::Skin), band(0.022, OngoingTest::Blood)]),
        ThresholdRule::every(g(3, 3), 2, OngoingTest::Blood),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    /// Skin test for new hires and every ongoing employee, every year.
    AnnualSkin,
    /// The same action in every state and year.
    Constant(Action),
    OptimalLookup(OptimalPolicy),
    ThresholdRules(Vec<ThresholdRule>),
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::AnnualSkin => "current",
            PolicySpec::Constant(_) => "constant",
            PolicySpec::OptimalLookup(_) => "optimal",
            PolicySpec::ThresholdRules(_) => "threshold",
        }
    }

    pub fn check(&self, sys: &SystemParams) -> Result<(), SimError> {
        let mut v = Vec::new();
        for id in sys.group_ids() {
            match self {
                PolicySpec::OptimalLookup(p) if !p.groups.contains_key(&id) => {
                    v.push(format!("optimal policy has no table for group {id}"))
                }
                PolicySpec::ThresholdRules(rules) => match rules.iter().find(|r| r.group == id) {
                    None => v.push(format!("no threshold rule for group {id}")),
                    Some(r) => v.extend(r.violations()),
                },
                _ => {}
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::Policy(v))
        }
    }

    pub fn decide(&self, group: GroupId, s: &GroupState, year: usize) -> Action {
        match self {
            PolicySpec::AnnualSkin => Action::new(Test::Skin, OngoingTest::Skin),
            PolicySpec::Constant(a) => *a,
            PolicySpec::OptimalLookup(p) => p.action(group, s).expect("policy covers group"),
            PolicySpec::ThresholdRules(rules) => {
                rules.iter().find(|r| r.group == group).expect("rule covers group").decide(s, year)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid policy:\n  - {}", .0.join("\n  - "))]
    Policy(Vec<String>),
    #[error("invalid simulation settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("infection rate target {target} is not reachable for beta in [0, 1]: rate(0) = {rate_at_zero}, rate(1) = {rate_at_one}")]
    Unreachable { target: f64, rate_at_zero: f64, rate_at_one: f64 },
    #[error("infection rate is not monotone in beta: rate({b1}) = {r1} > rate({b2}) = {r2}")]
    NotMonotone { b1: f64, r1: f64, b2: f64, r2: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Years averaged, after the burn-in.
    pub years: usize,
    pub replications: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { years: 100, replications: 30, seed: 0, burn_in: 10 }
    }
}

/// One simulated group-year.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YearRecord {
    pub year: usize,
    pub state: GroupState,
    pub action: Action,
    pub outcome: StepOutcome,
    pub cost: StageCost,
}

fn group_tag(id: GroupId) -> u64 {
    ((id.salary as u64) << 16) | id.risk as u64
}

/// Uniforms of one group-year.
pub fn step_uniforms(seed: u64, replication: usize, group: GroupId, year: usize) -> [f64; DRAWS_PER_STEP] {
    let mut rng = substream(seed, &[replication as u64, group_tag(group), year as u64]);
    let mut u = [0.0; DRAWS_PER_STEP];
    for v in &mut u {
        *v = rng.gen();
    }
    u
}

/// Full trajectory of one group over `total_years`, burn-in included.
pub fn simulate_group(
    policy: &PolicySpec,
    sys: &SystemParams,
    clinic: &ClinicModel,
    group: GroupId,
    total_years: usize,
    seed: u64,
    replication: usize,
) -> Result<Vec<YearRecord>, SimError> {
    let gp = sys.group(group)?;
    let gc = clinic.group(group);
    let cdf: Vec<f64> = truncated_poisson(gp.arrival_rate, gp.max_new)
        .mass()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut s = gp.bounds().clamp(initial_state(sys, group)?);
    let mut out = Vec::with_capacity(total_years);
    for year in 0..total_years {
        let action = policy.decide(group, &s, year);
        let u = step_uniforms(seed, replication, group, year);
        let outcome = sample_step(&s, &action, gp, sys.beta, &cdf, &u);
        let cost = realized_cost(&outcome, gp, sys, gc);
        out.push(YearRecord { year, state: s, action, outcome, cost });
        s = outcome.next;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// 95% confidence half-width over replications (NaN for one replication).
    pub half_width: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = pairwise_sum(xs) / n as f64;
        if n < 2 {
            return Self { mean, half_width: f64::NAN };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid t").inverse_cdf(0.975);
        Self { mean, half_width: t * (var / n as f64).sqrt() }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Per-group averages over the reporting years of one replication.
#[derive(Clone, Debug, Default, PartialEq)]
struct GroupTotals {
    cost: StageCost,
    infected: f64,
    headcount: f64,
    ongoing_tests: f64,
    skin_ongoing_years: f64,
    blood_ongoing_years: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub group: GroupId,
    pub yearly_cost: Estimate,
    pub infection_rate: Estimate,
    pub mean_headcount: f64,
    /// Years per year with an ongoing skin or blood test.
    pub skin_test_frequency: f64,
    pub blood_test_frequency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub policy: String,
    pub seed: u64,
    pub years: usize,
    pub replications: usize,
    pub burn_in: usize,
    pub yearly_cost: Estimate,
    pub infection_rate: Estimate,
    /// Headcount-weighted realized infection probability.
    pub realized_alpha: Estimate,
    /// Mean yearly cost by source.
    pub breakdown: StageCost,
    pub groups: Vec<GroupSummary>,
    pub replication_costs: Vec<f64>,
    pub replication_rates: Vec<f64>,
}

struct RepResult {
    cost: f64,
    rate: f64,
    alpha: f64,
    breakdown: StageCost,
    groups: Vec<GroupTotals>,
}

fn run_replication(
    policy: &PolicySpec,
    sys: &SystemParams,
    clinic: &ClinicModel,
    opts: &SimOptions,
    rep: usize,
) -> Result<RepResult, SimError> {
    let ids = sys.group_ids();
    let total = opts.burn_in + opts.years;
    let traces: Vec<Vec<YearRecord>> =
        ids.iter().map(|&g| simulate_group(policy, sys, clinic, g, total, opts.seed, rep)).collect::<Result<_, _>>()?;
    let mut rate_sum = 0.0;
    let mut alpha_sum = 0.0;
    let mut cost_sum = 0.0;
    let mut breakdown = StageCost::default();
    let mut groups = vec![GroupTotals::default(); ids.len()];
    for year in opts.burn_in..total {
        let (mut inf, mut head, mut alpha_w) = (0.0, 0.0, 0.0);
        for (gi, tr) in traces.iter().enumerate() {
            let r = &tr[year];
            let n = r.state.headcount() as f64;
            let i = r.outcome.infected() as f64;
            inf += i;
            head += n;
            alpha_w += r.outcome.alpha * n;
            cost_sum += r.cost.total();
            breakdown.tests += r.cost.tests;
            breakdown.xray += r.cost.xray;
            breakdown.undetected += r.cost.undetected;
            breakdown.lost_time += r.cost.lost_time;
            let g = &mut groups[gi];
            g.cost.tests += r.cost.tests;
            g.cost.xray += r.cost.xray;
            g.cost.undetected += r.cost.undetected;
            g.cost.lost_time += r.cost.lost_time;
            g.infected += i;
            g.headcount += n;
            match r.action.ongoing_test {
                OngoingTest::None => {}
                OngoingTest::Skin => g.skin_ongoing_years += 1.0,
                OngoingTest::Blood => g.blood_ongoing_years += 1.0,
            }
            if r.action.ongoing_test != OngoingTest::None {
                g.ongoing_tests += 1.0;
            }
        }
        if head > 0.0 {
            rate_sum += inf / head;
            alpha_sum += alpha_w / head;
        }
    }
    let y = opts.years as f64;
    let scale = |c: &StageCost| StageCost {
        tests: c.tests / y,
        xray: c.xray / y,
        undetected: c.undetected / y,
        lost_time: c.lost_time / y,
    };
    Ok(RepResult {
        cost: cost_sum / y,
        rate: rate_sum / y,
        alpha: alpha_sum / y,
        breakdown: scale(&breakdown),
        groups: groups.into_iter().map(|g| GroupTotals { cost: scale(&g.cost), ..g }).collect(),
    })
}

/// Simulates every group for `burn_in + years` years in each replication and
/// averages the last `years`.
pub fn simulate(
    policy: &PolicySpec,
    sys: &SystemParams,
    clinic: &ClinicModel,
    opts: &SimOptions,
) -> Result<SimReport, SimError> {
    if opts.years == 0 || opts.replications == 0 {
        return Err(SimError::Settings("years and replications must be at least 1".into()));
    }
    policy.check(sys)?;
    let reps: Vec<RepResult> = (0..opts.replications)
        .into_par_iter()
        .map(|r| run_replication(policy, sys, clinic, opts, r))
        .collect::<Result<_, _>>()?;
    let costs: Vec<f64> = reps.iter().map(|r| r.cost).collect();
    let rates: Vec<f64> = reps.iter().map(|r| r.rate).collect();
    let alphas: Vec<f64> = reps.iter().map(|r| r.alpha).collect();
    let n = reps.len() as f64;
    let mean_of = |f: &dyn Fn(&RepResult) -> f64| pairwise_sum(&reps.iter().map(f).collect::<Vec<_>>()) / n;
    let breakdown = StageCost {
        tests: mean_of(&|r| r.breakdown.tests),
        xray: mean_of(&|r| r.breakdown.xray),
        undetected: mean_of(&|r| r.breakdown.undetected),
        lost_time: mean_of(&|r| r.breakdown.lost_time),
    };
    let y = opts.years as f64;
    let groups = sys
        .group_ids()
        .into_iter()
        .enumerate()
        .map(|(gi, group)| {
            let gcost: Vec<f64> = reps.iter().map(|r| r.groups[gi].cost.total()).collect();
            let grate: Vec<f64> = reps
                .iter()
                .map(|r| {
                    let g = &r.groups[gi];
                    if g.headcount > 0.0 {
                        g.infected / g.headcount
                    } else {
                        0.0
                    }
                })
                .collect();
            GroupSummary {
                group,
                yearly_cost: Estimate::from_samples(&gcost),
                infection_rate: Estimate::from_samples(&grate),
                mean_headcount: mean_of(&|r| r.groups[gi].headcount) / y,
                skin_test_frequency: mean_of(&|r| r.groups[gi].skin_ongoing_years) / y,
                blood_test_frequency: mean_of(&|r| r.groups[gi].blood_ongoing_years) / y,
            }
        })
        .collect();
    Ok(SimReport {
        policy: policy.name().to_string(),
        seed: opts.seed,
        years: opts.years,
        replications: opts.replications,
        burn_in: opts.burn_in,
        yearly_cost: Estimate::from_samples(&costs),
        infection_rate: Estimate::from_samples(&rates),
        realized_alpha: Estimate::from_samples(&alphas),
        breakdown,
        groups,
        replication_costs: costs,
        replication_rates: rates,
    })
}

impl SimReport {
    /// Per-group CSV. Deterministic for a given seed.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "policy",
            "group",
            "avg_yearly_cost",
            "cost_half_width",
            "avg_infection_rate",
            "rate_half_width",
            "skin_test_frequency",
            "blood_test_frequency",
            "mean_headcount",
        ])?;
        for g in &self.groups {
            w.write_record([
                self.policy.clone(),
                g.group.to_string(),
                format!("{:.4}", g.yearly_cost.mean),
                format!("{:.4}", g.yearly_cost.half_width),
                format!("{:.6}", g.infection_rate.mean),
                format!("{:.6}", g.infection_rate.half_width),
                format!("{:.4}", g.skin_test_frequency),
                format!("{:.4}", g.blood_test_frequency),
                format!("{:.3}", g.mean_headcount),
            ])?;
        }
        w.write_record([
            self.policy.clone(),
            "all".into(),
            format!("{:.4}", self.yearly_cost.mean),
            format!("{:.4}", self.yearly_cost.half_width),
            format!("{:.6}", self.infection_rate.mean),
            format!("{:.6}", self.infection_rate.half_width),
            String::new(),
            String::new(),
            String::new(),
        ])?;
        w.flush()?;
        Ok(())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "policy {}: {} replications x {} years (burn-in {}), seed {}",
            self.policy, self.replications, self.years, self.burn_in, self.seed
        );
        let _ = writeln!(
            s,
            "  average yearly cost   {:>12.2} +/- {:.2}",
            self.yearly_cost.mean, self.yearly_cost.half_width
        );
        let _ = writeln!(
            s,
            "  average infection rate {:>10.4}% +/- {:.4}%",
            100.0 * self.infection_rate.mean,
            100.0 * self.infection_rate.half_width
        );
        let _ = writeln!(s, "  realized infection probability {:.4}%", 100.0 * self.realized_alpha.mean);
        let b = &self.breakdown;
        let _ = writeln!(
            s,
            "  cost by source: tests {:.2}, x-rays {:.2}, undetected {:.2}, lost time {:.2}",
            b.tests, b.xray, b.undetected, b.lost_time
        );
        s
    }
}

/// Several policies simulated on the same random numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub reports: Vec<SimReport>,
}

impl Comparison {
    /// Paired estimate of `cost(i) - cost(j)` over replications.
    pub fn cost_difference(&self, i: usize, j: usize) -> Estimate {
        let d: Vec<f64> = self.reports[i]
            .replication_costs
            .iter()
            .zip(&self.reports[j].replication_costs)
            .map(|(a, b)| a - b)
            .collect();
        Estimate::from_samples(&d)
    }

    /// Paired estimate of `rate(i) - rate(j)`.
    pub fn rate_difference(&self, i: usize, j: usize) -> Estimate {
        let d: Vec<f64> = self.reports[i]
            .replication_rates
            .iter()
            .zip(&self.reports[j].replication_rates)
            .map(|(a, b)| a - b)
            .collect();
        Estimate::from_samples(&d)
    }

    /// One row per policy: cost and infection rate with half-widths.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "policy",
            "avg_yearly_cost",
            "cost_half_width",
            "avg_infection_rate",
            "rate_half_width",
            "realized_alpha",
            "alpha_half_width",
        ])?;
        for r in &self.reports {
            w.write_record([
                r.policy.clone(),
                format!("{:.4}", r.yearly_cost.mean),
                format!("{:.4}", r.yearly_cost.half_width),
                format!("{:.6}", r.infection_rate.mean),
                format!("{:.6}", r.infection_rate.half_width),
                format!("{:.6}", r.realized_alpha.mean),
                format!("{:.6}", r.realized_alpha.half_width),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>24} {:>24}", "policy", "average yearly cost", "average infection rate");
        for r in &self.reports {
            let _ = writeln!(
                s,
                "{:<12} {:>14.0} +/- {:<6.0} {:>13.2}% +/- {:.2}%",
                r.policy,
                r.yearly_cost.mean,
                r.yearly_cost.half_width,
                100.0 * r.infection_rate.mean,
                100.0 * r.infection_rate.half_width
            );
        }
        s
    }
}

pub fn compare(
    policies: &[PolicySpec],
    sys: &SystemParams,
    clinic: &ClinicModel,
    opts: &SimOptions,
) -> Result<Comparison, SimError> {
    if policies.len() < 2 {
        return Err(SimError::Settings("compare needs at least two policies".into()));
    }
    let reports = policies.iter().map(|p| simulate(p, sys, clinic, opts)).collect::<Result<_, _>>()?;
    Ok(Comparison { reports })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub beta: f64,
    pub rate: f64,
    /// Every `(beta, rate)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection on `beta` in `[0, 1]` so that the long-run infection rate under
/// yearly skin testing is within `tol` of `target`. `opts` is raised to at
/// least 200 years and 20 replications; every evaluation uses the same seed.
pub fn calibrate_beta(
    target: f64,
    sys: &SystemParams,
    clinic: &ClinicModel,
    tol: f64,
    opts: &SimOptions,
) -> Result<Calibration, SimError> {
    if !(0.0..1.0).contains(&target) || tol.is_nan() || tol <= 0.0 {
        return Err(SimError::Settings(format!("target {target} must be in [0, 1) and tol {tol} positive")));
    }
    let opts = SimOptions { years: opts.years.max(200), replications: opts.replications.max(20), ..opts.clone() };
    let mut evaluations: Vec<(f64, f64)> = Vec::new();
    let rate_at = |beta: f64, evals: &mut Vec<(f64, f64)>| -> Result<f64, SimError> {
        let s = SystemParams { beta, ..sys.clone() };
        let r = simulate(&PolicySpec::AnnualSkin, &s, clinic, &opts)?.infection_rate.mean;
        evals.push((beta, r));
        Ok(r)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut r_lo = rate_at(lo, &mut evaluations)?;
    if (r_lo - target).abs() <= tol {
        return Ok(Calibration { beta: lo, rate: r_lo, evaluations });
    }
    let mut r_hi = rate_at(hi, &mut evaluations)?;
    if (r_hi - target).abs() <= tol {
        return Ok(Calibration { beta: hi, rate: r_hi, evaluations });
    }
    if !(r_lo < target && target < r_hi) {
        return Err(SimError::Unreachable { target, rate_at_zero: r_lo, rate_at_one: r_hi });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let r = rate_at(mid, &mut evaluations)?;
        let slack = tol;
        if r < r_lo - slack {
            return Err(SimError::NotMonotone { b1: lo, r1: r_lo, b2: mid, r2: r });
        }
        if r > r_hi + slack {
            return Err(SimError::NotMonotone { b1: mid, r1: r, b2: hi, r2: r_hi });
        }
        if (r - target).abs() <= tol {
            return Ok(Calibration { beta: mid, rate: r, evaluations });
        }
        if r < target {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    let (beta, rate) = *evaluations.last().expect("evaluated");
    Ok(Calibration { beta, rate, evaluations })
}
