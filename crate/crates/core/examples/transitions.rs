//! Successor law and stage cost of one state under each action.
//!
//! cargo run --release --example transitions -- 1,1 2 5 1

use tbscreen::clinic::build_clinic_model;
use tbscreen::mdp::{expected_counts, expected_stage_cost, infection_probability, transition_distribution, GroupMdp};
use tbscreen::model::{desk_defaults, Action, GroupId, GroupState};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let group: GroupId = args.first().map_or("1,1", String::as_str).parse().expect("group as i,j");
    let n = |i: usize, d: usize| args.get(i).map_or(d, |a| a.parse().expect("count"));
    let s = GroupState::new(n(1, 2), n(2, 5), n(3, 1));
    let sys = desk_defaults();
    let clinic = build_clinic_model(&sys, &sys.clinic, 7);
    let gp = &sys.groups[&group];
    println!("group {group}, state {s}, alpha = {:.4}", infection_probability(&s, gp, sys.beta));
    println!("bounds {:?}\n", gp.bounds());

    println!(
        "{:<14} {:>9} {:>9} {:>9} {:>9} {:>9}  {:>7} {:>7}",
        "action", "tests", "xray", "undetect", "lost", "total", "E[y']", "E[u']"
    );
    for a in Action::ALL {
        let c = expected_stage_cost(&s, &a, group, &sys, &clinic);
        let td = transition_distribution(&s, &a, gp, sys.beta);
        let ey: f64 = td.core.iter().map(|&(y, _, p)| y as f64 * p).sum();
        let eu: f64 = td.core.iter().map(|&(_, u, p)| u as f64 * p).sum();
        println!(
            "{:<14} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}  {ey:>7.3} {eu:>7.3}",
            a.to_string(),
            c.tests,
            c.xray,
            c.undetected,
            c.lost_time,
            c.total()
        );
    }

    let a = Action::ALL[5];
    let k = expected_counts(&s, &a, gp, sys.beta, clinic.group(group));
    println!(
        "\n{a}: {:.3} true positives, {:.3} false positives, {:.3} clinic hours",
        k.true_positives, k.false_positives, k.hours
    );
    let mut cells: Vec<_> = transition_distribution(&s, &a, gp, sys.beta).iter().collect();
    cells.sort_by(|x, y| y.1.total_cmp(&x.1));
    println!("most likely successors:");
    for (t, p) in cells.iter().take(8) {
        println!("  {t} {p:.5}");
    }

    let mdp = GroupMdp::build(group, &sys, &clinic);
    println!(
        "\nwhole group: {} states, {} stored (y', u') cells over all state-action pairs",
        mdp.num_states(),
        mdp.stored_cells()
    );
}
