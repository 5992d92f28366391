//! The count laws behind the transition model.
//!
//! cargo run --release --example distributions

use tbscreen::dist::{binomial, compound, convolve, split3, truncated_poisson};

fn show(label: &str, mass: &[f64]) {
    let cells: Vec<String> =
        mass.iter().enumerate().filter(|(_, p)| **p > 5e-4).map(|(k, p)| format!("{k}:{p:.4}")).collect();
    println!("{label:<34} {}", cells.join(" "));
}

fn main() {
    // 12 employees, each infected with probability 0.022
    let infected = binomial(12, 0.022);
    show("Bin(12, 0.022)", infected.mass());

    // infected employees missed by a skin test read twice (false negative 0.04)
    let missed = compound(&infected, |k| binomial(k, 0.04 * 0.04));
    show("missed after two skin readings", missed.mass());
    show("Bin(12, 0.022 * 0.0016)", binomial(12, 0.022 * 0.0016).mass());

    // clean new hires flagged by either of two skin readings (false positive 0.27)
    let first = binomial(8, 0.27);
    let mut either = vec![0.0; 9];
    for (r1, w) in first.iter() {
        for (r2, v) in binomial(8 - r1, 0.27).iter() {
            either[r1 + r2] += w * v;
        }
    }
    show("flagged, two chances", &either);
    show("Bin(8, 1 - 0.73^2)", binomial(8, 1.0 - 0.73 * 0.73).mass());

    // ongoing employees split three ways: leave, infected, stay clean
    let j = split3(10, 0.15, 0.85 * 0.022).unwrap();
    println!("\nsplit of 10 ongoing: P(2 leave, 0 infected) = {:.4}", j.get(2, 0));
    println!(
        "  leavers marginal mean {:.3}, infected marginal mean {:.3}",
        j.marginal_a().mean(),
        j.marginal_b().mean()
    );

    let arrivals = truncated_poisson(10.0, 15);
    show("\narrivals, Poisson(10) clamped at 15", arrivals.mass());
    println!("  mean {:.4} (unclamped 10)", arrivals.mean());
    let two_groups = convolve(&truncated_poisson(2.8, 6), &truncated_poisson(0.8, 4));
    println!("  two groups together: mean {:.4}, total {:.12}", two_groups.mean(), two_groups.total());
}
