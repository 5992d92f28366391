//! Solve every group on the reduced-population model, then use the policy on
//! the full-size system: region maps, testing frequencies, and a cost
//! comparison against the practitioner rules.
//!
//! cargo run --release --example optimal_policy -- [replications]

use std::time::Instant;

use tbscreen::analyze::{default_fixed_x, estimate_frequencies, export_region_map, frequencies_text, FrequencyOptions};
use tbscreen::clinic::build_clinic_model;
use tbscreen::model::{paper_defaults, BoundsRule, DESK_SCALE};
use tbscreen::sim::{compare, published_rules, PolicySpec, SimOptions};
use tbscreen::solve::{solve_system, SolveOptions};

fn main() {
    let reps: usize = std::env::args().nth(1).map_or(30, |a| a.parse().expect("replications"));
    let paper = paper_defaults();
    let desk = paper.scaled(DESK_SCALE, BoundsRule::Desk);
    let clinic_desk = build_clinic_model(&desk, &desk.clinic, 7);
    let t = Instant::now();
    let sol = solve_system(&desk, &clinic_desk, &SolveOptions { population_scale: DESK_SCALE, ..Default::default() })
        .expect("solve");
    print!("{}", sol.text_report());
    println!("solved in {:.1?}\n", t.elapsed());

    for id in desk.group_ids() {
        let map = export_region_map(&sol.policy, id, default_fixed_x(&desk, id, 1.0)).unwrap();
        println!("group {id}: codes {:?}", map.codes());
        print!("{}", map.ascii());
    }

    let clinic = build_clinic_model(&paper, &paper.clinic, 7);
    let optimal = PolicySpec::OptimalLookup(sol.policy.clone());
    let freq = estimate_frequencies(&optimal, &paper, &clinic, 100, 7, &FrequencyOptions::default()).unwrap();
    print!("\n{}", frequencies_text(&freq));

    let opts = SimOptions { years: 100, replications: reps, seed: 7, ..Default::default() };
    let cmp = compare(
        &[PolicySpec::AnnualSkin, PolicySpec::ThresholdRules(published_rules()), optimal],
        &paper,
        &clinic,
        &opts,
    )
    .unwrap();
    print!("\n{}", cmp.text());
}
