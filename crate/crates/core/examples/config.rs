//! Configuration documents: load, validate, scale, and write back.
//!
//! cargo run --release --example config -- [path.json]

use tbscreen::model::{initial_state, load_config, paper_defaults, BoundsRule};

fn main() {
    let sys = match std::env::args().nth(1) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).expect("readable file");
            match load_config(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{path}: {e}");
                    std::process::exit(1);
                }
            }
        }
        None => paper_defaults(),
    };
    println!("{:<6} {:>7} {:>6} {:>6} {:>6} {:>8}  start", "group", "lambda", "M^x", "M^y", "M^u", "states");
    for id in sys.group_ids() {
        let g = &sys.groups[&id];
        let b = g.bounds();
        println!(
            "{:<6} {:>7.2} {:>6} {:>6} {:>6} {:>8}  {}",
            id.to_string(),
            g.arrival_rate,
            b.max_new,
            b.max_ongoing,
            b.max_undetected,
            b.num_states(),
            initial_state(&sys, id).unwrap()
        );
    }
    let desk = sys.scaled(0.2, BoundsRule::Desk);
    let total: usize = desk.groups.values().map(|g| g.bounds().num_states()).sum();
    println!("\nscaled by 0.2: {total} states over all groups");

    let mut broken = sys.clone();
    broken.beta = 1.4;
    broken.groups.values_mut().next().unwrap().leave_prob = -0.1;
    println!("\nan invalid copy reports:");
    for v in broken.violations() {
        println!("  {v}");
    }

    let json = sys.to_json();
    let back = load_config(&json).expect("round trip");
    println!("\nround trip through JSON preserved parameters: {}", back == sys);
}
