//! Clinic time per tested employee, including a congestion upper bound.
//!
//! The waiting bound comes from a one-season queue simulation in which every
//! group is at its maximum headcount and everyone takes the skin test. It is
//! computed once per parameter set and added to every per-employee entry.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{GroupId, SystemParams, Test};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClinicParams {
    /// Hours per blood draw.
    pub t_blood: f64,
    /// Hours per skin-test visit (placement or reading).
    pub t_skin_visit: f64,
    /// Hours per follow-up X-ray.
    pub t_xray: f64,
    /// Chance a new hire misses the reading window and restarts the protocol.
    pub p_missed_window: f64,
    pub servers: usize,
    /// Employees served per server-hour.
    pub service_rate: f64,
    /// Working hours over which one year's clinic visits are spread.
    pub season_hours: f64,
    /// Allow unlimited restarts (geometric) instead of at most one.
    pub geometric_restart: bool,
    /// Add the simulated waiting bound to every entry.
    pub include_waiting: bool,
}

impl Default for ClinicParams {
    fn default() -> Self {
        Self {
            t_blood: 0.5,
            t_skin_visit: 0.5,
            t_xray: 1.0,
            p_missed_window: 0.1,
            servers: 2,
            service_rate: 6.0,
            season_hours: 2000.0,
            geometric_restart: false,
            include_waiting: true,
        }
    }
}

impl ClinicParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("clinic.t_blood", self.t_blood),
            ("clinic.t_skin_visit", self.t_skin_visit),
            ("clinic.t_xray", self.t_xray),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be a finite nonnegative number"));
            }
        }
        let missed_ok = if self.geometric_restart {
            (0.0..1.0).contains(&self.p_missed_window)
        } else {
            (0.0..=1.0).contains(&self.p_missed_window)
        };
        if !missed_ok {
            out.push(format!("clinic.p_missed_window = {} is out of range", self.p_missed_window));
        }
        if self.servers < 1 {
            out.push("clinic.servers must be at least 1".to_string());
        }
        if !(self.service_rate > 0.0 && self.service_rate.is_finite()) {
            out.push(format!("clinic.service_rate = {} must be positive", self.service_rate));
        }
        if !(self.season_hours > 0.0 && self.season_hours.is_finite()) {
            out.push(format!("clinic.season_hours = {} must be positive", self.season_hours));
        }
        out
    }
}

/// Expected clinic hours for one tested employee, without waiting.
pub fn expected_time_per_employee(test: Test, is_new: bool, p_positive: f64, cp: &ClinicParams) -> f64 {
    let base = match (test, is_new) {
        (Test::Blood, _) => cp.t_blood,
        (Test::Skin, false) => 2.0 * cp.t_skin_visit,
        (Test::Skin, true) => {
            let restarts =
                if cp.geometric_restart { cp.p_missed_window / (1.0 - cp.p_missed_window) } else { cp.p_missed_window };
            4.0 * cp.t_skin_visit + restarts * 2.0 * cp.t_skin_visit
        }
    };
    base + p_positive * cp.t_xray
}

/// Per-group clinic hours, each already including the waiting bound.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupClinic {
    pub waiting: f64,
    pub blood: f64,
    pub skin_new: f64,
    pub skin_ongoing: f64,
    /// Hours added per positive result (the X-ray visit).
    pub xray: f64,
}

impl GroupClinic {
    /// Hours per tested employee before any positive-result follow-up.
    pub fn hours(&self, test: Test, is_new: bool) -> f64 {
        match (test, is_new) {
            (Test::Blood, _) => self.blood,
            (Test::Skin, true) => self.skin_new,
            (Test::Skin, false) => self.skin_ongoing,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClinicModel {
    pub groups: BTreeMap<GroupId, GroupClinic>,
}

impl ClinicModel {
    pub fn group(&self, id: GroupId) -> &GroupClinic {
        &self.groups[&id]
    }

    /// A model with every entry zero (no lost-time cost).
    pub fn zero(sys: &SystemParams) -> Self {
        let groups = sys
            .groups
            .keys()
            .map(|&id| (id, GroupClinic { waiting: 0.0, blood: 0.0, skin_new: 0.0, skin_ongoing: 0.0, xray: 0.0 }))
            .collect();
        Self { groups }
    }

    /// CSV with header `group,test,is_new,hours`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "test", "is_new", "hours"])?;
        for (id, g) in &self.groups {
            for (test, is_new) in [(Test::Skin, true), (Test::Skin, false), (Test::Blood, true), (Test::Blood, false)] {
                w.write_record([
                    id.to_string(),
                    format!("{test:?}").to_lowercase(),
                    is_new.to_string(),
                    format!("{}", g.hours(test, is_new)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean queueing delay per employee, for every group, in one congested season.
///
/// Every group is at its maximum size (`max_new + max_ongoing`); new hires make
/// four skin visits, ongoing employees two. Visit times are uniform over the
/// season and service times exponential. Each group's visits come from their
/// own random streams, so enlarging one group leaves the others' draws intact.
pub fn waiting_bounds(sys: &SystemParams, cp: &ClinicParams, seed: u64) -> BTreeMap<GroupId, f64> {
    struct Visit {
        arrival: f64,
        service: f64,
        group: usize,
    }
    let ids = sys.group_ids();
    let mut visits = Vec::new();
    for (gi, id) in ids.iter().enumerate() {
        let g = &sys.groups[id];
        for (stream, employees, per_employee) in [(0u64, g.max_new, 4), (1u64, g.max_ongoing, 2)] {
            let mut rng = substream(seed, &[0xC11C, gi as u64, stream]);
            for _ in 0..employees * per_employee {
                let arrival = rng.gen::<f64>() * cp.season_hours;
                let u: f64 = rng.gen();
                let service = -(1.0 - u).ln() / cp.service_rate;
                visits.push(Visit { arrival, service, group: gi });
            }
        }
    }
    visits.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));

    let mut total_wait = vec![0.0; ids.len()];
    // Min-heap of server free times, compared as raw bits (all values are nonnegative).
    let mut free: BinaryHeap<Reverse<u64>> =
        (0..cp.servers.min(visits.len().max(1))).map(|_| Reverse(0f64.to_bits())).collect();
    for v in &visits {
        let Reverse(bits) = free.pop().expect("at least one server");
        let start = f64::from_bits(bits).max(v.arrival);
        total_wait[v.group] += start - v.arrival;
        free.push(Reverse((start + v.service).to_bits()));
    }
    ids.iter()
        .enumerate()
        .map(|(gi, id)| {
            let g = &sys.groups[id];
            let employees = g.max_new + g.max_ongoing;
            let w = if employees == 0 { 0.0 } else { total_wait[gi] / employees as f64 };
            (*id, w)
        })
        .collect()
}

/// Upper bound on one group's per-employee waiting time; see [`waiting_bounds`].
pub fn waiting_upper_bound(group: GroupId, sys: &SystemParams, cp: &ClinicParams, seed: u64) -> f64 {
    waiting_bounds(sys, cp, seed).get(&group).copied().unwrap_or(0.0)
}

pub fn build_clinic_model(sys: &SystemParams, cp: &ClinicParams, seed: u64) -> ClinicModel {
    let waits = if cp.include_waiting {
        waiting_bounds(sys, cp, seed)
    } else {
        sys.groups.keys().map(|&id| (id, 0.0)).collect()
    };
    let groups = waits
        .into_iter()
        .map(|(id, waiting)| {
            (
                id,
                GroupClinic {
                    waiting,
                    blood: expected_time_per_employee(Test::Blood, false, 0.0, cp) + waiting,
                    skin_new: expected_time_per_employee(Test::Skin, true, 0.0, cp) + waiting,
                    skin_ongoing: expected_time_per_employee(Test::Skin, false, 0.0, cp) + waiting,
                    xray: cp.t_xray,
                },
            )
        })
        .collect();
    ClinicModel { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{desk_defaults, paper_defaults};

    #[test]
    fn per_employee_times() {
        let cp = ClinicParams::default();
        assert_eq!(expected_time_per_employee(Test::Blood, false, 0.0, &cp), cp.t_blood);
        assert_eq!(expected_time_per_employee(Test::Skin, false, 0.0, &cp), 2.0 * cp.t_skin_visit);
        let no_miss = ClinicParams { p_missed_window: 0.0, ..cp.clone() };
        assert_eq!(expected_time_per_employee(Test::Skin, true, 0.0, &no_miss), 4.0 * cp.t_skin_visit);
        let h = expected_time_per_employee(Test::Skin, true, 0.25, &cp);
        assert!((h - (4.0 * 0.5 + 0.1 * 2.0 * 0.5 + 0.25 * 1.0)).abs() < 1e-15);
        let geo = ClinicParams { geometric_restart: true, ..cp.clone() };
        assert!(
            expected_time_per_employee(Test::Skin, true, 0.0, &geo)
                > expected_time_per_employee(Test::Skin, true, 0.0, &cp)
        );
    }

    #[test]
    fn nondecreasing_in_positive_rate() {
        let cp = ClinicParams::default();
        for test in [Test::Skin, Test::Blood] {
            for is_new in [true, false] {
                let mut last = f64::NEG_INFINITY;
                for k in 0..=20 {
                    let h = expected_time_per_employee(test, is_new, k as f64 / 20.0, &cp);
                    assert!(h >= last);
                    last = h;
                }
            }
        }
    }

    #[test]
    fn uncongested_limit_is_zero() {
        let sys = desk_defaults();
        let cp = ClinicParams { servers: 100_000, ..ClinicParams::default() };
        for w in waiting_bounds(&sys, &cp, 3).values() {
            assert_eq!(*w, 0.0);
        }
    }

    #[test]
    fn more_load_never_shortens_waits() {
        let sys = paper_defaults();
        let cp = ClinicParams { season_hours: 400.0, ..ClinicParams::default() };
        let target = GroupId::new(2, 2);
        let base = waiting_upper_bound(target, &sys, &cp, 11);
        let mut heavier = sys.clone();
        for (id, g) in heavier.groups.iter_mut() {
            if *id != target {
                g.max_new *= 2;
                g.max_ongoing *= 2;
            }
        }
        let loaded = waiting_upper_bound(target, &heavier, &cp, 11);
        assert!(base > 0.0);
        assert!(loaded >= base, "{loaded} < {base}");
    }

    #[test]
    fn defaults_give_reproducible_positive_bound() {
        let sys = paper_defaults();
        let cp = ClinicParams::default();
        let a = waiting_upper_bound(GroupId::new(1, 1), &sys, &cp, 5);
        let b = waiting_upper_bound(GroupId::new(1, 1), &sys, &cp, 5);
        assert!(a > 0.0 && a.is_finite());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn model_entries() {
        let sys = desk_defaults();
        let zero_cp = ClinicParams {
            t_blood: 0.0,
            t_skin_visit: 0.0,
            t_xray: 0.0,
            include_waiting: false,
            ..ClinicParams::default()
        };
        let m = build_clinic_model(&sys, &zero_cp, 1);
        for g in m.groups.values() {
            assert_eq!([g.blood, g.skin_new, g.skin_ongoing, g.xray, g.waiting], [0.0; 5]);
        }

        let cp = ClinicParams::default();
        let with = build_clinic_model(&sys, &cp, 1);
        let without = build_clinic_model(&sys, &ClinicParams { include_waiting: false, ..cp.clone() }, 1);
        for (id, g) in &with.groups {
            let h = &without.groups[id];
            for (a, b) in [(g.blood, h.blood), (g.skin_new, h.skin_new), (g.skin_ongoing, h.skin_ongoing)] {
                assert!((a - b - g.waiting).abs() < 1e-12);
                assert!(a >= b);
            }
            assert!(g.skin_new > g.skin_ongoing && g.skin_ongoing > g.blood);
        }
    }

    #[test]
    fn csv_export() {
        let sys = desk_defaults();
        let m = build_clinic_model(&sys, &ClinicParams::default(), 1);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group,test,is_new,hours\n"));
        assert_eq!(text.lines().count(), 1 + 4 * sys.groups.len());
    }
}
