//! Clinic hours per tested employee, including the congestion bound.
//!
//! cargo run --release --example clinic_times -- [servers]

use tbscreen::clinic::{build_clinic_model, expected_time_per_employee, waiting_bounds};
use tbscreen::model::{paper_defaults, Test};

fn main() {
    let mut sys = paper_defaults();
    if let Some(s) = std::env::args().nth(1) {
        sys.clinic.servers = s.parse().expect("server count");
    }
    let cp = &sys.clinic;
    println!("servers {}, service rate {}/h, season {} h", cp.servers, cp.service_rate, cp.season_hours);
    println!(
        "base hours: blood {:.2}, skin new {:.2}, skin ongoing {:.2}, X-ray {:.2}",
        expected_time_per_employee(Test::Blood, false, 0.0, cp),
        expected_time_per_employee(Test::Skin, true, 0.0, cp),
        expected_time_per_employee(Test::Skin, false, 0.0, cp),
        cp.t_xray
    );
    for (id, w) in waiting_bounds(&sys, cp, 7) {
        println!("  group {id}: waiting bound {:.4} h per employee", w);
    }
    for season in [2000.0, 200.0, 40.0] {
        sys.clinic.season_hours = season;
        let w = waiting_bounds(&sys, &sys.clinic, 7);
        let worst = w.values().copied().fold(0.0, f64::max);
        println!("season {season:>6} h: worst waiting bound {worst:.3} h");
    }
    sys.clinic.season_hours = 2000.0;
    let model = build_clinic_model(&sys, &sys.clinic, 7);
    println!();
    model.write_csv(std::io::stdout()).unwrap();
}
