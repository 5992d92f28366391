//! `tbscreen`: solve, simulate, compare, calibrate and export screening policies.
//!
//! Every run writes `manifest.txt` next to its outputs. CSV outputs depend only
//! on the arguments, the configuration and the seed.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use tbscreen::analyze::{
    default_fixed_x, estimate_frequencies, export_region_map, extract_thresholds, frequencies_text,
    write_frequencies_csv, FrequencyOptions,
};
use tbscreen::clinic::{build_clinic_model, ClinicModel};
use tbscreen::model::{desk_defaults, load_config, paper_defaults, BoundsRule, GroupId, SystemParams, DESK_SCALE};
use tbscreen::sim::{calibrate_beta, compare, published_rules, simulate, PolicySpec, SimOptions};
use tbscreen::solve::{solve_system, OptimalPolicy, SolveMethod, SolveOptions};

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser, Debug)]
#[command(
    name = "tbscreen",
    version,
    about = "Screening policies for employee groups: MDP solve, simulation, calibration"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; overrides --preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in parameter set used when no --config is given.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Paper)]
    preset: Preset,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Population scale at which the optimal policy is solved; defaults to 1
    /// for the desk preset and 0.2 otherwise.
    #[arg(long, global = true)]
    solve_scale: Option<f64>,
    /// Read the optimal policy from a CSV written by `solve` instead of solving.
    #[arg(long, global = true)]
    policy_file: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyName {
    Current,
    Optimal,
    Threshold,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Cg,
    Vi,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve every group and write the policy table.
    Solve {
        /// Re-solve column-generation groups with value iteration and compare.
        #[arg(long)]
        verify_exact: bool,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Simulate one policy.
    Simulate {
        #[arg(long, value_enum)]
        policy: PolicyName,
        #[arg(long, default_value_t = 100)]
        years: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
    },
    /// Simulate the current, threshold and optimal policies side by side.
    Compare {
        #[arg(long, default_value_t = 100)]
        years: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
    },
    /// Find the background rate giving a target infection rate under yearly skin tests.
    Calibrate {
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.001)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        years: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Write the (y, u) action grid of one group's optimal policy.
    ExportMap {
        #[arg(long)]
        group: GroupId,
        /// Arrival count held fixed; defaults to the rounded arrival rate.
        #[arg(long)]
        fixed_x: Option<usize>,
    },
    /// Testing frequency of the optimal policy per group.
    Frequencies {
        #[arg(long, default_value_t = 100)]
        years: usize,
    },
}

struct Run {
    common: Common,
    sys: SystemParams,
    outputs: Vec<PathBuf>,
    notes: Vec<(String, String)>,
}

impl Run {
    fn clinic(&self, sys: &SystemParams) -> ClinicModel {
        build_clinic_model(sys, &sys.clinic, self.common.seed)
    }

    fn solve_scale(&self) -> f64 {
        self.common.solve_scale.unwrap_or(match (self.common.config.is_some(), self.common.preset) {
            (false, Preset::Desk) => 1.0,
            _ => DESK_SCALE,
        })
    }

    fn optimal(&mut self) -> Result<OptimalPolicy, BoxError> {
        if let Some(path) = &self.common.policy_file {
            let text = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            return Ok(OptimalPolicy::read_csv(&text[..])?);
        }
        let (sys, scale) = self.solve_system_params();
        let clinic = self.clinic(&sys);
        let sol = solve_system(&sys, &clinic, &SolveOptions { population_scale: scale, ..Default::default() })?;
        self.notes.push(("solve_scale".into(), scale.to_string()));
        Ok(sol.policy)
    }

    fn solve_system_params(&self) -> (SystemParams, f64) {
        let scale = self.solve_scale();
        if scale == 1.0 {
            (self.sys.clone(), 1.0)
        } else {
            (self.sys.scaled(scale, BoundsRule::Desk), scale)
        }
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), BoxError>,
    ) -> Result<(), BoxError> {
        let path = self.common.out.join(name);
        let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), BoxError> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}

fn load_system(common: &Common) -> Result<SystemParams, String> {
    match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            load_config(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => Ok(match common.preset {
            Preset::Desk => desk_defaults(),
            Preset::Paper => paper_defaults(),
        }),
    }
}

fn parameter_hash(sys: &SystemParams) -> String {
    format!("{:x}", Sha256::digest(sys.to_json().as_bytes()))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Solve { .. } => "solve",
        Command::Simulate { .. } => "simulate",
        Command::Compare { .. } => "compare",
        Command::Calibrate { .. } => "calibrate",
        Command::ExportMap { .. } => "export-map",
        Command::Frequencies { .. } => "frequencies",
    }
}

fn sim_options(years: usize, reps: usize, seed: u64) -> SimOptions {
    SimOptions { years, replications: reps, seed, ..Default::default() }
}

fn execute(run: &mut Run, command: &Command) -> Result<(), BoxError> {
    let seed = run.common.seed;
    match *command {
        Command::Solve { verify_exact, method, tol } => {
            let (sys, scale) = run.solve_system_params();
            let clinic = run.clinic(&sys);
            let method = match method {
                Method::Auto => SolveMethod::Auto,
                Method::Cg => SolveMethod::ColumnGeneration,
                Method::Vi => SolveMethod::ValueIteration,
            };
            let opts = SolveOptions { method, tol, verify_exact, population_scale: scale, ..Default::default() };
            let sol = solve_system(&sys, &clinic, &opts)?;
            run.notes.push(("solve_scale".into(), scale.to_string()));
            run.write("policy.csv", |w| Ok(sol.policy.write_csv(w)?))?;
            run.write("solve.csv", |w| Ok(sol.write_report_csv(w)?))?;
            run.write_text("solve.txt", &sol.text_report())?;
            print!("{}", sol.text_report());
        }
        Command::Simulate { policy, years, reps } => {
            let spec = match policy {
                PolicyName::Current => PolicySpec::AnnualSkin,
                PolicyName::Threshold => PolicySpec::ThresholdRules(published_rules()),
                PolicyName::Optimal => PolicySpec::OptimalLookup(run.optimal()?),
            };
            let clinic = run.clinic(&run.sys);
            let report = simulate(&spec, &run.sys, &clinic, &sim_options(years, reps, seed))?;
            let name = spec.name();
            run.write(&format!("simulate_{name}.csv"), |w| Ok(report.write_csv(w)?))?;
            run.write_text(&format!("simulate_{name}.txt"), &report.text())?;
            print!("{}", report.text());
        }
        Command::Compare { years, reps } => {
            let optimal = run.optimal()?;
            let policies = [
                PolicySpec::AnnualSkin,
                PolicySpec::ThresholdRules(published_rules()),
                PolicySpec::OptimalLookup(optimal),
            ];
            let clinic = run.clinic(&run.sys);
            let cmp = compare(&policies, &run.sys, &clinic, &sim_options(years, reps, seed))?;
            run.write("compare.csv", |w| Ok(cmp.write_csv(w)?))?;
            run.write_text("compare.txt", &cmp.text())?;
            print!("{}", cmp.text());
        }
        Command::Calibrate { target, tol, years, reps } => {
            let clinic = run.clinic(&run.sys);
            let cal = calibrate_beta(target, &run.sys, &clinic, tol, &sim_options(years, reps, seed))?;
            run.write("calibration.csv", |w| {
                writeln!(w, "step,beta,rate")?;
                for (i, (b, r)) in cal.evaluations.iter().enumerate() {
                    writeln!(w, "{i},{b},{r}")?;
                }
                Ok(())
            })?;
            let text = format!(
                "target infection rate {:.3}%\nbeta {:.5}\nrate {:.3}%\nevaluations {}\n",
                100.0 * target,
                cal.beta,
                100.0 * cal.rate,
                cal.evaluations.len()
            );
            run.write_text("calibration.txt", &text)?;
            print!("{text}");
        }
        Command::ExportMap { group, fixed_x } => {
            run.sys.group(group)?;
            let policy = run.optimal()?;
            let scale = policy.population_scale;
            let x = fixed_x.unwrap_or_else(|| default_fixed_x(&run.sys, group, scale));
            let map = export_region_map(&policy, group, x)?;
            let slug = format!("{}_{}", group.salary, group.risk);
            run.write(&format!("region_{slug}.csv"), |w| Ok(map.write_csv(w)?))?;
            let summary = extract_thresholds(&policy, group, x)?;
            let mut text = map.ascii();
            let _ = writeln!(text, "\n{summary}");
            run.write_text(&format!("region_{slug}.txt"), &text)?;
            print!("{text}");
        }
        Command::Frequencies { years } => {
            let spec = PolicySpec::OptimalLookup(run.optimal()?);
            let clinic = run.clinic(&run.sys);
            let est = estimate_frequencies(&spec, &run.sys, &clinic, years, seed, &FrequencyOptions::default())?;
            run.write("frequencies.csv", |w| Ok(write_frequencies_csv(&est, w)?))?;
            run.write_text("frequencies.txt", &frequencies_text(&est))?;
            print!("{}", frequencies_text(&est));
        }
    }
    Ok(())
}

fn write_manifest(run: &Run, command: &str, wall: f64) -> std::io::Result<PathBuf> {
    let mut m = String::new();
    let _ = writeln!(m, "command = {command}");
    let _ = writeln!(m, "args = {}", std::env::args().skip(1).collect::<Vec<_>>().join(" "));
    let config = run.common.config.as_ref().map_or_else(
        || format!("preset:{}", format!("{:?}", run.common.preset).to_lowercase()),
        |p| p.display().to_string(),
    );
    let _ = writeln!(m, "config = {config}");
    let _ = writeln!(m, "seed = {}", run.common.seed);
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "parameter_hash = {}", parameter_hash(&run.sys));
    for (k, v) in &run.notes {
        let _ = writeln!(m, "{k} = {v}");
    }
    for p in &run.outputs {
        let _ = writeln!(m, "output = {}", p.display());
    }
    let _ = writeln!(m, "wall_seconds = {wall:.3}");
    let path = run.common.out.join("manifest.txt");
    fs::write(&path, m)?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let sys = match load_system(&cli.common) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = fs::create_dir_all(&cli.common.out) {
        eprintln!("error: {}: {e}", cli.common.out.display());
        return ExitCode::from(1);
    }
    let start = Instant::now();
    let mut run = Run { common: cli.common, sys, outputs: Vec::new(), notes: Vec::new() };
    if let Err(e) = execute(&mut run, &cli.command) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match write_manifest(&run, command_name(&cli.command), start.elapsed().as_secs_f64()) {
        Ok(p) => {
            eprintln!("manifest: {}", p.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing manifest: {e}");
            ExitCode::from(1)
        }
    }
}
