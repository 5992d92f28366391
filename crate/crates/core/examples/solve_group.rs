//! Solve one group by column generation and check it against value iteration.
//!
//! cargo run --release --example solve_group -- 2,2 8 15 5

use std::time::Instant;

use tbscreen::clinic::build_clinic_model;
use tbscreen::mdp::GroupMdp;
use tbscreen::model::{desk_defaults, GroupId};
use tbscreen::solve::{solve_group, SolveMethod, SolveOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let group: GroupId = args.first().map_or("2,2", String::as_str).parse().expect("group as i,j");
    let mut sys = desk_defaults();
    if args.len() >= 4 {
        let g = sys.groups.get_mut(&group).expect("known group");
        g.max_new = args[1].parse().unwrap();
        g.max_ongoing = args[2].parse().unwrap();
        g.max_undetected = args[3].parse().unwrap();
    }
    let clinic = build_clinic_model(&sys, &sys.clinic, 1);
    let t = Instant::now();
    let mdp = GroupMdp::build(group, &sys, &clinic);
    println!("group {group}: {} states, built in {:.2?}", mdp.num_states(), t.elapsed());

    let opts = SolveOptions { method: SolveMethod::ColumnGeneration, verify_exact: true, ..Default::default() };
    let sol = solve_group(&mdp, &sys, &opts).expect("solve");
    println!(
        "column generation: objective {:.4} after {} pricing rounds, {} columns added, {:.2}s",
        sol.objective, sol.iterations, sol.columns_generated, sol.wall_secs
    );
    if let Some(e) = &sol.exact {
        println!(
            "value iteration:   objective {:.4}, relative gap {:.2e}, non-tie disagreements {}",
            e.exact_objective, e.relative_gap, e.disagreements
        );
    }
    println!("start state {} -> action {}", sol.start, sol.policy.action(mdp.index(&sol.start)));
}
