//! Screening policies for latent infection among hospital employees.
//!
//! Employees are split into salary/risk groups. Each group is a small Markov
//! decision process over `(new hires, ongoing employees, undetected infected)`
//! whose yearly action chooses the test for new hires and for ongoing staff.
//! The crate builds the exact transition laws, solves each group's discounted
//! problem, and evaluates policies by Monte Carlo simulation.

pub mod analyze;
pub mod clinic;
pub mod dist;
pub mod mdp;
pub mod model;
pub mod rng;
pub mod sim;
pub mod solve;
