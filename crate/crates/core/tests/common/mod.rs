//! Reference models written person by person, sharing nothing with the library
//! except the parameter types.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use tbscreen::clinic::GroupClinic;
use tbscreen::model::{Action, GroupParams, GroupState, OngoingTest, SystemParams, Test};

pub fn alpha(s: &GroupState, gp: &GroupParams, beta: f64) -> f64 {
    let n = s.new_arrivals + s.ongoing;
    let own = if n == 0 { 0.0 } else { gp.transmission_prob * s.undetected as f64 / n as f64 };
    (own + beta * gp.patient_contact_prob * gp.transmission_prob).min(1.0)
}

/// One possible fate of one person: probability, change to (y', u'), cost.
#[derive(Clone, Copy, Debug)]
pub struct Fate {
    pub p: f64,
    pub stays_clean: bool,
    pub missed: bool,
    pub cost: f64,
}

struct Prices {
    test: f64,
    hours: f64,
    xray: f64,
    xray_hours: f64,
    rate: f64,
    undetected: f64,
}

impl Prices {
    fn tested(&self, positive: bool) -> f64 {
        let mut c = self.test + self.rate * self.hours;
        if positive {
            c += self.xray + self.rate * self.xray_hours;
        }
        c
    }
}

fn prices(test: Option<(Test, bool)>, gp: &GroupParams, sys: &SystemParams, clinic: &GroupClinic) -> Prices {
    let (test, hours) = match test {
        None => (0.0, 0.0),
        Some((Test::Blood, _)) => (sys.test_cost_blood, clinic.blood),
        Some((Test::Skin, true)) => {
            let charges = if sys.double_charge_new_skin { 2.0 } else { 1.0 };
            (charges * sys.test_cost_skin, clinic.skin_new)
        }
        Some((Test::Skin, false)) => (sys.test_cost_skin, clinic.skin_ongoing),
    };
    Prices {
        test,
        hours,
        xray: sys.xray_cost,
        xray_hours: clinic.xray,
        rate: gp.lost_time_rate,
        undetected: gp.undetected_cost,
    }
}

/// Fates of a new hire. With `split_flags`, clean hires are split by whether
/// they were flagged (needed for costs, not for the successor law).
pub fn new_hire_fates(
    s: &GroupState,
    test: Test,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
    split_flags: bool,
) -> Vec<Fate> {
    let a = alpha(s, gp, sys.beta);
    let (fnr, fpr) = match test {
        Test::Skin => (gp.skin_fn * gp.skin_fn, 1.0 - (1.0 - gp.skin_fp) * (1.0 - gp.skin_fp)),
        Test::Blood => (gp.blood_fn, gp.blood_fp),
    };
    let pr = prices(Some((test, true)), gp, sys, clinic);
    let mut out = vec![
        Fate { p: a * (1.0 - fnr), stays_clean: false, missed: false, cost: pr.tested(true) },
        Fate { p: a * fnr, stays_clean: false, missed: true, cost: pr.tested(false) + pr.undetected },
    ];
    if split_flags {
        out.push(Fate { p: (1.0 - a) * fpr, stays_clean: true, missed: false, cost: pr.tested(true) });
        out.push(Fate { p: (1.0 - a) * (1.0 - fpr), stays_clean: true, missed: false, cost: pr.tested(false) });
    } else {
        out.push(Fate { p: 1.0 - a, stays_clean: true, missed: false, cost: f64::NAN });
    }
    out.retain(|f| f.p > 0.0);
    out
}

pub fn ongoing_fates(
    s: &GroupState,
    test: OngoingTest,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
    split_flags: bool,
) -> Vec<Fate> {
    let a = alpha(s, gp, sys.beta);
    let stay = 1.0 - gp.leave_prob;
    let mut out = vec![Fate { p: gp.leave_prob, stays_clean: false, missed: false, cost: 0.0 }];
    match test {
        OngoingTest::None => {
            out.push(Fate { p: stay * a, stays_clean: false, missed: true, cost: gp.undetected_cost });
            out.push(Fate { p: stay * (1.0 - a), stays_clean: true, missed: false, cost: 0.0 });
        }
        OngoingTest::Skin | OngoingTest::Blood => {
            let t = if test == OngoingTest::Skin { Test::Skin } else { Test::Blood };
            let (fnr, fpr) = match t {
                Test::Skin => (gp.skin_fn, gp.skin_fp),
                Test::Blood => (gp.blood_fn, gp.blood_fp),
            };
            let pr = prices(Some((t, false)), gp, sys, clinic);
            out.push(Fate { p: stay * a * (1.0 - fnr), stays_clean: false, missed: false, cost: pr.tested(true) });
            out.push(Fate {
                p: stay * a * fnr,
                stays_clean: false,
                missed: true,
                cost: pr.tested(false) + pr.undetected,
            });
            if split_flags {
                out.push(Fate { p: stay * (1.0 - a) * fpr, stays_clean: true, missed: false, cost: pr.tested(true) });
                out.push(Fate {
                    p: stay * (1.0 - a) * (1.0 - fpr),
                    stays_clean: true,
                    missed: false,
                    cost: pr.tested(false),
                });
            } else {
                out.push(Fate { p: stay * (1.0 - a), stays_clean: true, missed: false, cost: f64::NAN });
            }
        }
    }
    out.retain(|f| f.p > 0.0);
    out
}

/// Every combination of individual fates, visited depth first.
fn walk(
    people: &[&[Fate]],
    i: usize,
    y: usize,
    u: usize,
    p: f64,
    cost: f64,
    visit: &mut impl FnMut(usize, usize, f64, f64),
) {
    if i == people.len() {
        visit(y, u, p, cost);
        return;
    }
    for f in people[i] {
        walk(people, i + 1, y + f.stays_clean as usize, u + f.missed as usize, p * f.p, cost + f.cost, visit);
    }
}

/// Exact law of the unclamped `(y', u')` by enumerating every person's fate.
pub fn enumerate_core(
    s: &GroupState,
    action: &Action,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
) -> BTreeMap<(usize, usize), f64> {
    let new = new_hire_fates(s, action.new_test, gp, sys, clinic, false);
    let old = ongoing_fates(s, action.ongoing_test, gp, sys, clinic, false);
    let mut people: Vec<&[Fate]> = vec![new.as_slice(); s.new_arrivals];
    people.extend(std::iter::repeat_n(old.as_slice(), s.ongoing));
    let mut law = BTreeMap::new();
    walk(&people, 0, 0, 0, 1.0, 0.0, &mut |y, u, p, _| *law.entry((y, u)).or_insert(0.0) += p);
    law
}

/// Exact expected one-year cost by enumerating every person's fate.
pub fn enumerate_cost(
    s: &GroupState,
    action: &Action,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
) -> f64 {
    let new = new_hire_fates(s, action.new_test, gp, sys, clinic, true);
    let old = ongoing_fates(s, action.ongoing_test, gp, sys, clinic, true);
    let mut people: Vec<&[Fate]> = vec![new.as_slice(); s.new_arrivals];
    people.extend(std::iter::repeat_n(old.as_slice(), s.ongoing));
    let mut total = 0.0;
    walk(&people, 0, 0, 0, 1.0, 0.0, &mut |_, _, p, c| total += p * c);
    total
}

/// Poisson pmf by the product formula, with everything at or above `max`
/// lumped onto `max`.
pub fn clamped_poisson(rate: f64, max: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(max + 1);
    let mut term = (-rate).exp();
    let mut below = 0.0;
    for k in 0..max {
        pmf.push(term);
        below += term;
        term *= rate / (k + 1) as f64;
    }
    pmf.push(1.0 - below);
    pmf
}

/// One simulated year, drawing a uniform per person and per test.
/// Returns the unclamped successor and the realized cost.
pub fn person_step<R: Rng>(
    rng: &mut R,
    s: &GroupState,
    action: &Action,
    gp: &GroupParams,
    sys: &SystemParams,
    clinic: &GroupClinic,
    arrivals_pmf: &[f64],
) -> (GroupState, f64) {
    let a = alpha(s, gp, sys.beta);
    let mut y = 0;
    let mut u = 0;
    let mut cost = 0.0;
    let new_pr = prices(Some((action.new_test, true)), gp, sys, clinic);
    for _ in 0..s.new_arrivals {
        let infected = rng.gen::<f64>() < a;
        let positive = match (action.new_test, infected) {
            (Test::Skin, true) => !(rng.gen::<f64>() < gp.skin_fn && rng.gen::<f64>() < gp.skin_fn),
            (Test::Skin, false) => rng.gen::<f64>() < gp.skin_fp || rng.gen::<f64>() < gp.skin_fp,
            (Test::Blood, true) => rng.gen::<f64>() >= gp.blood_fn,
            (Test::Blood, false) => rng.gen::<f64>() < gp.blood_fp,
        };
        cost += new_pr.tested(positive);
        match (infected, positive) {
            (false, _) => y += 1,
            (true, false) => {
                u += 1;
                cost += gp.undetected_cost;
            }
            (true, true) => {}
        }
    }
    let old_test = action.ongoing_test.test();
    let old_pr = old_test.map(|t| prices(Some((t, false)), gp, sys, clinic));
    for _ in 0..s.ongoing {
        if rng.gen::<f64>() < gp.leave_prob {
            continue;
        }
        let infected = rng.gen::<f64>() < a;
        let positive = match old_test {
            None => false,
            Some(t) => {
                let (fnr, fpr) = match t {
                    Test::Skin => (gp.skin_fn, gp.skin_fp),
                    Test::Blood => (gp.blood_fn, gp.blood_fp),
                };
                let r = rng.gen::<f64>();
                if infected {
                    r >= fnr
                } else {
                    r < fpr
                }
            }
        };
        if let Some(pr) = &old_pr {
            cost += pr.tested(positive);
        }
        match (infected, positive) {
            (false, _) => y += 1,
            (true, false) => {
                u += 1;
                cost += gp.undetected_cost;
            }
            (true, true) => {}
        }
    }
    let r = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut x = arrivals_pmf.len() - 1;
    for (k, p) in arrivals_pmf.iter().enumerate() {
        acc += p;
        if r < acc {
            x = k;
            break;
        }
    }
    (GroupState::new(x, y, u), cost)
}

/// Binomial pmf from the multiplicative binomial coefficient.
pub fn binomial_pmf(n: usize, p: f64, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
