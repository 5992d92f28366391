//! Background infection rate that yields a target infection rate under
//! yearly skin tests.
//!
//! cargo run --release --example calibrate -- [target] [paper|desk]

use std::time::Instant;

use tbscreen::clinic::build_clinic_model;
use tbscreen::model::{desk_defaults, paper_defaults};
use tbscreen::sim::{calibrate_beta, SimOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let target: f64 = args.next().map_or(0.02, |a| a.parse().expect("target rate"));
    let sys = match args.next().as_deref() {
        Some("desk") => desk_defaults(),
        _ => paper_defaults(),
    };
    let clinic = build_clinic_model(&sys, &sys.clinic, 7);
    let t = Instant::now();
    let cal = calibrate_beta(target, &sys, &clinic, 0.0005, &SimOptions { seed: 7, ..Default::default() })
        .expect("calibration");
    for (i, (b, r)) in cal.evaluations.iter().enumerate() {
        println!("{i:>3}  beta {b:.5}  rate {:.4}%", 100.0 * r);
    }
    println!(
        "beta = {:.5} gives {:.4}% (target {:.2}%), {:.1?}",
        cal.beta,
        100.0 * cal.rate,
        100.0 * target,
        t.elapsed()
    );
}
