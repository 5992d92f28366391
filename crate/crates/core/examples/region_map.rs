//! Action regions of one group's optimal policy, the thresholds read off
//! them, and how well the thresholds reproduce the policy.
//!
//! cargo run --release --example region_map -- 3,2

use tbscreen::analyze::{default_fixed_x, export_region_map, extract_thresholds, rule_agreement};
use tbscreen::clinic::build_clinic_model;
use tbscreen::model::{desk_defaults, GroupId};
use tbscreen::solve::{solve_system, SolveOptions};

fn main() {
    let group: GroupId = std::env::args().nth(1).as_deref().unwrap_or("3,2").parse().expect("group as i,j");
    let mut sys = desk_defaults();
    sys.groups.retain(|g, _| *g == group);
    assert!(!sys.groups.is_empty(), "unknown group {group}");
    let clinic = build_clinic_model(&sys, &sys.clinic, 7);
    let sol = solve_system(&sys, &clinic, &SolveOptions::default()).expect("solve");
    let x = default_fixed_x(&sys, group, 1.0);

    let map = export_region_map(&sol.policy, group, x).unwrap();
    println!("group {group} at x = {x}: rows y = 0..{}, columns u = 0..{}", map.rows() - 1, map.cols() - 1);
    println!("'.' no test, 's' skin, 'B' blood\n");
    print!("{}", map.ascii());

    let t = extract_thresholds(&sol.policy, group, x).unwrap();
    println!("\n{t}");
    for period in [1, 2] {
        let share = rule_agreement(&sol.policy, &t.to_rule(period), &sys, &clinic, 200, 7).unwrap();
        println!(
            "rule checked every {period} year(s): agrees with the policy on {:.1}% of visited states",
            100.0 * share
        );
    }
    println!();
    map.write_csv(std::io::stdout().lock()).unwrap();
}
