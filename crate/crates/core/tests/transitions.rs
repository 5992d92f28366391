mod common;

use common::{clamped_poisson, enumerate_core, enumerate_cost};
use tbscreen::clinic::build_clinic_model;
use tbscreen::mdp::{expected_stage_cost, transition_distribution, GroupMdp};
use tbscreen::model::{desk_defaults, paper_defaults, Action, GroupId, GroupState};

#[test]
fn transition_law_matches_person_enumeration() {
    let sys = paper_defaults();
    let clinic = build_clinic_model(&sys, &sys.clinic, 1);
    let mut checked = 0;
    for id in [GroupId::new(1, 1), GroupId::new(2, 2), GroupId::new(3, 3)] {
        let gp = &sys.groups[&id];
        let c = clinic.group(id);
        for (x, y, u) in [(0, 0, 0), (1, 0, 0), (0, 3, 0), (2, 5, 1), (6, 6, 3), (4, 2, 2), (6, 0, 6), (3, 6, 0)] {
            let s = GroupState::new(x, y, u);
            for a in Action::ALL {
                let law = enumerate_core(&s, &a, gp, &sys, c);
                let td = transition_distribution(&s, &a, gp, sys.beta);
                let b = gp.bounds();
                let mut clamped = std::collections::BTreeMap::new();
                for (&(yy, uu), &p) in &law {
                    *clamped.entry((yy.min(b.max_ongoing), uu.min(b.max_undetected))).or_insert(0.0) += p;
                }
                let mut lib = std::collections::BTreeMap::new();
                for &(yy, uu, p) in &td.core {
                    *lib.entry((yy, uu)).or_insert(0.0) += p;
                }
                for (k, &p) in &clamped {
                    let q = lib.get(k).copied().unwrap_or(0.0);
                    assert!((p - q).abs() < 1e-12, "{id} {s} {a} cell {k:?}: {p} vs {q}");
                }
                for (k, &q) in &lib {
                    assert!(clamped.contains_key(k) || q < 1e-14, "{id} {s} {a}: extra cell {k:?} = {q}");
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 3 * 8 * 6);
}

#[test]
fn arrivals_follow_clamped_poisson() {
    let sys = desk_defaults();
    for (id, gp) in &sys.groups {
        let td = transition_distribution(&GroupState::new(1, 2, 0), &Action::ALL[0], gp, sys.beta);
        let want = clamped_poisson(gp.arrival_rate, gp.max_new);
        assert_eq!(td.arrivals.mass().len(), want.len(), "{id}");
        for (k, (&a, &b)) in td.arrivals.mass().iter().zip(&want).enumerate() {
            assert!((a - b).abs() < 1e-12, "{id} x' = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn stage_cost_matches_person_enumeration() {
    let mut sys = paper_defaults();
    let clinic = build_clinic_model(&sys, &sys.clinic, 3);
    for double in [false, true] {
        sys.double_charge_new_skin = double;
        for id in sys.group_ids() {
            let gp = &sys.groups[&id];
            for (x, y, u) in [(0, 0, 0), (2, 3, 1), (4, 4, 4), (1, 4, 0), (4, 0, 2)] {
                let s = GroupState::new(x, y, u);
                for a in Action::ALL {
                    let want = enumerate_cost(&s, &a, gp, &sys, clinic.group(id));
                    let got = expected_stage_cost(&s, &a, id, &sys, &clinic).total();
                    assert!((want - got).abs() <= 1e-9 * want.abs().max(1.0), "{id} {s} {a}: {want} vs {got}");
                }
            }
        }
    }
}

#[test]
fn desk_rows_sum_to_one_and_stay_in_bounds() {
    let sys = desk_defaults();
    let clinic = build_clinic_model(&sys, &sys.clinic, 7);
    for id in [GroupId::new(1, 1), GroupId::new(3, 1), GroupId::new(3, 3)] {
        let mdp = GroupMdp::build(id, &sys, &clinic);
        for s in 0..mdp.num_states() {
            for a in 0..6 {
                let succ = mdp.successors(s, a);
                let total: f64 = succ.iter().map(|e| e.1).sum();
                assert!((total - 1.0).abs() < 1e-9, "{id} state {s} action {a}: {total}");
                assert!(succ.iter().all(|&(t, p)| t < mdp.num_states() && p >= 0.0));
            }
        }
    }
}

#[test]
fn transition_csv_lists_every_stored_cell() {
    let mut sys = desk_defaults();
    let id = GroupId::new(3, 1);
    let g = sys.groups.get_mut(&id).unwrap();
    (g.max_new, g.max_ongoing, g.max_undetected) = (1, 3, 1);
    let clinic = build_clinic_model(&sys, &sys.clinic, 7);
    let mdp = GroupMdp::build(id, &sys, &clinic);
    let mut buf = Vec::new();
    mdp.write_transitions_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().count() > 1);
    let mut again = Vec::new();
    mdp.write_transitions_csv(&mut again).unwrap();
    assert_eq!(text.as_bytes(), &again[..]);
}
