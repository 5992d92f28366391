//! The revised simplex on its own: a small covering LP, its duals, and a
//! warm-started re-solve after adding a column.
//!
//! cargo run --release --example lp

use tbscreen::solve::{solve_lp, LpColumn, LpProblem, RevisedSimplex, SimplexOptions};

fn main() {
    // cover nutrient needs (rows) with foods (columns) at least cost
    let needs = [8.0, 6.0, 3.0];
    let a = vec![vec![2.0, 1.0, 0.0, 1.0], vec![1.0, 2.0, 1.0, 0.0], vec![0.0, 1.0, 3.0, 1.0]];
    let cost = [3.0, 2.5, 4.0, 1.5];
    let p = LpProblem::from_dense(&cost, &a, &needs);
    let sol = solve_lp(&p).expect("feasible");
    println!("x = {:?}", sol.x.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    println!("objective {:.4} in {} pivots", sol.objective, sol.iterations);
    println!("duals {:?}", sol.duals.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    let dual_obj: f64 = sol.duals.iter().zip(&needs).map(|(y, b)| y * b).sum();
    println!("dual objective {dual_obj:.4}");
    println!("reduced costs {:?}", sol.reduced_costs(&p).iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    println!("slack {:?}", p.slack(&sol.x).iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());

    // a cheap new food; restart from the old basis
    let mut s = RevisedSimplex::new(p.clone(), SimplexOptions::default());
    let before = s.solve().unwrap().iterations;
    s.add_columns([LpColumn { cost: 1.2, entries: vec![(0, 1.0), (1, 1.0), (2, 1.0)], tag: None }]);
    let again = s.solve().unwrap();
    println!("\nwith a fifth column: objective {:.4} after {} more pivots", again.objective, again.iterations - before);
    println!("x = {:?}", again.x.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    println!("basis {:?}", s.basic_columns());

    let mut bad = LpProblem::new(vec![1.0]);
    bad.add_column(1.0, vec![(0, -1.0)]);
    println!("\ninfeasible problem: {}", solve_lp(&bad).unwrap_err());
}
