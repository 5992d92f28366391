//! Solving every group of a system and packaging the result as a policy
//! that can be queried at any population scale.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use crate::clinic::ClinicModel;
use crate::mdp::GroupMdp;
use crate::model::{initial_state, Action, Bounds, GroupId, GroupState, ModelError, SystemParams};

use super::{column_generation, policy_disagreements, value_iteration, CgOptions, Policy, SolveError, ValueFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Column generation up to `SolveOptions::cg_state_limit` states, value
    /// iteration above it.
    Auto,
    ColumnGeneration,
    ValueIteration,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::Auto => "auto",
            SolveMethod::ColumnGeneration => "column-generation",
            SolveMethod::ValueIteration => "value-iteration",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Money tolerance for the Bellman residual and for pricing.
    pub tol: f64,
    pub cg_batch: usize,
    pub cg_state_limit: usize,
    /// Also run value iteration and compare (column generation only).
    pub verify_exact: bool,
    /// Population scale of the solved system relative to the one the policy
    /// will be queried on (1 when they are the same).
    pub population_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            tol: 1e-6,
            cg_batch: 16,
            cg_state_limit: 1000,
            verify_exact: false,
            population_scale: 1.0,
        }
    }
}

/// Comparison of a column-generation solve against value iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCheck {
    pub exact_objective: f64,
    pub relative_gap: f64,
    /// States whose actions differ although the exact action gap exceeds `10 * tol`.
    pub disagreements: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSolution {
    pub group: GroupId,
    pub bounds: Bounds,
    pub start: GroupState,
    pub method: SolveMethod,
    pub values: ValueFunction,
    pub policy: Policy,
    /// Expected discounted cost from the starting state.
    pub objective: f64,
    pub iterations: usize,
    pub columns_generated: usize,
    pub wall_secs: f64,
    pub exact: Option<ExactCheck>,
}

/// Point mass at the group's starting state.
pub fn start_distribution(mdp: &GroupMdp, sys: &SystemParams) -> Result<(GroupState, Vec<f64>), ModelError> {
    let start = mdp.bounds.clamp(initial_state(sys, mdp.group)?);
    let mut gamma = vec![0.0; mdp.num_states()];
    gamma[mdp.index(&start)] = 1.0;
    Ok((start, gamma))
}

pub fn solve_group(mdp: &GroupMdp, sys: &SystemParams, opts: &SolveOptions) -> Result<GroupSolution, SolveError> {
    let t0 = Instant::now();
    let (start, gamma) = start_distribution(mdp, sys).map_err(|e| SolveError::Invalid(e.to_string()))?;
    let method = match opts.method {
        SolveMethod::Auto if mdp.num_states() <= opts.cg_state_limit => SolveMethod::ColumnGeneration,
        SolveMethod::Auto => SolveMethod::ValueIteration,
        m => m,
    };
    let discount = sys.discount;
    let (values, policy, objective, iterations, generated) = match method {
        SolveMethod::ColumnGeneration => {
            let cg = column_generation(
                mdp,
                &gamma,
                discount,
                &CgOptions { tol: opts.tol, batch: opts.cg_batch, ..Default::default() },
            )?;
            (cg.values, cg.policy, cg.objective, cg.iterations, cg.generated)
        }
        _ => {
            let vi = value_iteration(mdp, discount, opts.tol)?;
            let obj = vi.values.weighted(&gamma);
            (vi.values, vi.policy, obj, vi.iterations, 0)
        }
    };
    let exact = if opts.verify_exact && method == SolveMethod::ColumnGeneration {
        let vi = value_iteration(mdp, discount, opts.tol)?;
        let target = vi.values.weighted(&gamma);
        Some(ExactCheck {
            exact_objective: target,
            relative_gap: (objective - target).abs() / target.abs().max(1e-12),
            disagreements: policy_disagreements(mdp, &vi.values.0, discount, &policy, &vi.policy, 10.0 * opts.tol)
                .len(),
        })
    } else {
        None
    };
    Ok(GroupSolution {
        group: mdp.group,
        bounds: mdp.bounds,
        start,
        method,
        values,
        policy,
        objective,
        iterations,
        columns_generated: generated,
        wall_secs: t0.elapsed().as_secs_f64(),
        exact,
    })
}

/// Per-group policy tables solved at `population_scale` times the population
/// they are queried on.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPolicy {
    pub population_scale: f64,
    pub groups: BTreeMap<GroupId, (Bounds, Policy)>,
}

impl OptimalPolicy {
    /// Maps a state of the queried population onto the solved bounds: counts
    /// are scaled and the undetected share is preserved.
    pub fn solved_state(&self, group: GroupId, s: &GroupState) -> Option<GroupState> {
        let (bounds, _) = self.groups.get(&group)?;
        let k = self.population_scale;
        if k == 1.0 {
            return Some(bounds.clamp(*s));
        }
        let x = (k * s.new_arrivals as f64).round() as usize;
        let y = (k * s.ongoing as f64).round() as usize;
        let u = match s.headcount() {
            0 => (k * s.undetected as f64).round() as usize,
            n => (s.undetected as f64 * (x + y) as f64 / n as f64).round() as usize,
        };
        Some(bounds.clamp(GroupState::new(x, y, u)))
    }

    pub fn action(&self, group: GroupId, s: &GroupState) -> Option<Action> {
        let t = self.solved_state(group, s)?;
        let (bounds, policy) = &self.groups[&group];
        Some(policy.action(bounds.index(&t)))
    }

    /// CSV `group,x,y,u,action` with the action index into [`Action::ALL`],
    /// preceded by a `# population_scale=` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# population_scale={}", self.population_scale)?;
        writeln!(out, "# bounds group,max_new,max_ongoing,max_undetected")?;
        for (g, (b, _)) in &self.groups {
            writeln!(out, "# bounds \"{g}\",{},{},{}", b.max_new, b.max_ongoing, b.max_undetected)?;
        }
        writeln!(out, "group,x,y,u,action")?;
        for (g, (b, p)) in &self.groups {
            for (k, s) in b.states().enumerate() {
                writeln!(out, "\"{g}\",{},{},{},{}", s.new_arrivals, s.ongoing, s.undetected, p.get(k))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self, String> {
        let mut text = String::new();
        input.read_to_string(&mut text).map_err(|e| e.to_string())?;
        let mut scale = None;
        let mut groups: BTreeMap<GroupId, (Bounds, Policy)> = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("# population_scale=") {
                scale = Some(v.trim().parse::<f64>().map_err(|e| e.to_string())?);
            } else if let Some(v) = line.strip_prefix("# bounds \"") {
                let (g, rest) = v.split_once("\",").ok_or("malformed bounds line")?;
                let n: Vec<usize> =
                    rest.split(',').map(|t| t.trim().parse().map_err(|_| "bad bound")).collect::<Result<_, _>>()?;
                let [max_new, max_ongoing, max_undetected] = n[..] else {
                    return Err("bounds line needs three numbers".into());
                };
                let b = Bounds { max_new, max_ongoing, max_undetected };
                let id: GroupId = g.parse::<GroupId>().map_err(|e| e.to_string())?;
                groups.insert(id, (b, Policy(vec![usize::MAX; b.num_states()])));
            } else if !line.starts_with('#') {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        for rec in rd.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let id: GroupId = rec[0].parse::<GroupId>().map_err(|e| e.to_string())?;
            let num = |i: usize| rec[i].parse::<usize>().map_err(|e| e.to_string());
            let s = GroupState::new(num(1)?, num(2)?, num(3)?);
            let a = num(4)?;
            let (b, p) = groups.get_mut(&id).ok_or(format!("group {id} has no bounds line"))?;
            if !b.contains(&s) || a >= Action::ALL.len() {
                return Err(format!("row {id} {s} out of range"));
            }
            p.0[b.index(&s)] = a;
        }
        if groups.values().any(|(_, p)| p.0.contains(&usize::MAX)) {
            return Err("policy table is incomplete".into());
        }
        Ok(Self { population_scale: scale.ok_or("missing population_scale line")?, groups })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSolution {
    pub groups: Vec<GroupSolution>,
    pub policy: OptimalPolicy,
}

impl SystemSolution {
    /// Deterministic per-group summary (no timings).
    pub fn write_report_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "group",
            "states",
            "method",
            "objective",
            "iterations",
            "columns_generated",
            "exact_objective",
            "relative_gap",
            "disagreements",
        ])?;
        for g in &self.groups {
            let (eo, gap, dis) = match &g.exact {
                Some(e) => (
                    format!("{:.6}", e.exact_objective),
                    format!("{:.3e}", e.relative_gap),
                    e.disagreements.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                g.group.to_string(),
                g.bounds.num_states().to_string(),
                g.method.to_string(),
                format!("{:.6}", g.objective),
                g.iterations.to_string(),
                g.columns_generated.to_string(),
                eo,
                gap,
                dis,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<6} {:>8} {:<18} {:>14} {:>8} {:>8} {:>9}",
            "group", "states", "method", "objective", "iters", "columns", "seconds"
        );
        for g in &self.groups {
            let _ = writeln!(
                s,
                "{:<6} {:>8} {:<18} {:>14.2} {:>8} {:>8} {:>9.2}",
                g.group.to_string(),
                g.bounds.num_states(),
                g.method.to_string(),
                g.objective,
                g.iterations,
                g.columns_generated,
                g.wall_secs
            );
            if let Some(e) = &g.exact {
                let _ = writeln!(
                    s,
                    "       exact check: objective {:.2}, relative gap {:.2e}, policy disagreements {}",
                    e.exact_objective, e.relative_gap, e.disagreements
                );
            }
        }
        s
    }
}

/// Solves every group in turn; each group's MDP is built, solved, and dropped.
pub fn solve_system(
    sys: &SystemParams,
    clinic: &ClinicModel,
    opts: &SolveOptions,
) -> Result<SystemSolution, SolveError> {
    let mut groups = Vec::new();
    let mut table = BTreeMap::new();
    for id in sys.group_ids() {
        let mdp = GroupMdp::build(id, sys, clinic);
        let sol = solve_group(&mdp, sys, opts)?;
        table.insert(id, (sol.bounds, sol.policy.clone()));
        groups.push(sol);
    }
    Ok(SystemSolution { groups, policy: OptimalPolicy { population_scale: opts.population_scale, groups: table } })
}
