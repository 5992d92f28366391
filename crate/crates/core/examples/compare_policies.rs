//! Simulate yearly skin testing against the published practitioner rules.
//!
//! cargo run --release --example compare_policies -- [years] [replications] [seed]

use tbscreen::clinic::build_clinic_model;
use tbscreen::model::paper_defaults;
use tbscreen::sim::{compare, published_rules, PolicySpec, SimOptions};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let opts = SimOptions {
        years: args.first().copied().unwrap_or(100) as usize,
        replications: args.get(1).copied().unwrap_or(30) as usize,
        seed: args.get(2).copied().unwrap_or(7),
        ..Default::default()
    };
    let sys = paper_defaults();
    let clinic = build_clinic_model(&sys, &sys.clinic, opts.seed);
    let policies = [PolicySpec::AnnualSkin, PolicySpec::ThresholdRules(published_rules())];
    let cmp = compare(&policies, &sys, &clinic, &opts).expect("simulation");
    print!("{}", cmp.text());
    let ratio = cmp.reports[1].yearly_cost.mean / cmp.reports[0].yearly_cost.mean;
    println!("cost ratio threshold/current: {ratio:.3}");
    for r in &cmp.reports {
        println!("\n{}", r.text());
        for g in &r.groups {
            println!(
                "  {}  cost {:>9.1}  rate {:.4}  headcount {:>7.1}  skin/yr {:.2}  blood/yr {:.2}",
                g.group,
                g.yearly_cost.mean,
                g.infection_rate.mean,
                g.mean_headcount,
                g.skin_test_frequency,
                g.blood_test_frequency
            );
        }
    }
}
