//! Practitioner summaries of a policy: how often each group is tested, the
//! infected-share thresholds that trigger testing, and `(y, u)` action maps.

use std::fmt::Write as _;
use std::io::Write;

use crate::clinic::ClinicModel;
use crate::model::{GroupId, GroupState, OngoingTest, SystemParams, Test};
use crate::sim::{simulate_group, Band, PolicySpec, SimError, ThresholdRule};
use crate::solve::OptimalPolicy;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalyzeError {
    #[error("policy has no table for group {0}")]
    UnknownGroup(GroupId),
    #[error("fixed new-arrival count {fixed_x} exceeds the bound {max_new}")]
    FixedXOutOfRange { fixed_x: usize, max_new: usize },
    #[error("horizon must be at least 10 years, got {0}")]
    Horizon(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Action codes over the `(y, u)` grid at a fixed number of new arrivals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMap {
    pub group: GroupId,
    pub fixed_x: usize,
    /// `grid[y][u]`: 1 no test, 2 skin, 3 blood.
    pub grid: Vec<Vec<u8>>,
}

impl RegionMap {
    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.first().map_or(0, Vec::len)
    }

    /// Sorted distinct codes present.
    pub fn codes(&self) -> Vec<u8> {
        let mut c: Vec<u8> = self.grid.iter().flatten().copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// CSV with header `y,u,action`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["y", "u", "action"])?;
        for (y, row) in self.grid.iter().enumerate() {
            for (u, code) in row.iter().enumerate() {
                w.write_record([y.to_string(), u.to_string(), code.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Compact picture, `y` increasing downward: `.` no test, `s` skin, `B` blood.
    pub fn ascii(&self) -> String {
        let mut s = String::new();
        for row in &self.grid {
            for &c in row {
                s.push(match c {
                    1 => '.',
                    2 => 's',
                    _ => 'B',
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Ongoing-test action of the policy at every `(y, u)` with `x = fixed_x`,
/// in the policy's own (solved) coordinates.
pub fn export_region_map(policy: &OptimalPolicy, group: GroupId, fixed_x: usize) -> Result<RegionMap, AnalyzeError> {
    let (b, p) = policy.groups.get(&group).ok_or(AnalyzeError::UnknownGroup(group))?;
    if fixed_x > b.max_new {
        return Err(AnalyzeError::FixedXOutOfRange { fixed_x, max_new: b.max_new });
    }
    let grid = (0..=b.max_ongoing)
        .map(|y| {
            (0..=b.max_undetected)
                .map(|u| p.action(b.index(&GroupState::new(fixed_x, y, u))).ongoing_test.code())
                .collect()
        })
        .collect();
    Ok(RegionMap { group, fixed_x, grid })
}

/// Default fixed arrival count for maps: the rounded mean, within bounds.
pub fn default_fixed_x(sys: &SystemParams, group: GroupId, scale: f64) -> usize {
    let g = &sys.groups[&group];
    ((g.arrival_rate * scale).round() as usize).min(g.max_new)
}

/// Infected-share thresholds of a policy at a fixed arrival count.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSummary {
    pub group: GroupId,
    pub fixed_x: usize,
    /// Ordered from the lowest band up; share `u / (x + y)` at which each test starts.
    pub bands: Vec<Band>,
    /// Most common new-hire test over the map.
    pub new_test: Test,
    /// Set when the policy never changes away from "no test".
    pub diagnostic: Option<String>,
}

impl ThresholdSummary {
    pub fn to_rule(&self, period_years: usize) -> ThresholdRule {
        ThresholdRule {
            group: self.group,
            new_test: self.new_test,
            period_years,
            default_test: OngoingTest::None,
            bands: self.bands.clone(),
        }
    }
}

impl std::fmt::Display for ThresholdSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "group {} at x = {}: new hires take the {} test",
            self.group,
            self.fixed_x,
            test_name(Some(self.new_test))
        )?;
        if let Some(d) = &self.diagnostic {
            return writeln!(f, "{d}");
        }
        for b in &self.bands {
            writeln!(f, "{} test if infected share >= {:.2}%", test_name(b.test.test()), 100.0 * b.threshold)?;
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// For each `y`, the smallest `u` where the ongoing action leaves "no test"
/// (and the smallest where it becomes blood), as a share of `x + y`; each band
/// reports the median over `y`. A skin band is reported only where skin is
/// the first test above "no test".
pub fn extract_thresholds(
    policy: &OptimalPolicy,
    group: GroupId,
    fixed_x: usize,
) -> Result<ThresholdSummary, AnalyzeError> {
    let map = export_region_map(policy, group, fixed_x)?;
    let (b, p) = &policy.groups[&group];
    let mut skin_first = Vec::new();
    let mut blood_start = Vec::new();
    let mut blood_first = Vec::new();
    for (y, row) in map.grid.iter().enumerate() {
        let n = fixed_x + y;
        if n == 0 {
            continue;
        }
        let share = |u: usize| u as f64 / n as f64;
        if let Some(u0) = row.iter().position(|&c| c != 1) {
            if row[u0] == 2 {
                skin_first.push(share(u0));
            } else {
                blood_first.push(share(u0));
            }
        }
        if let Some(ub) = row.iter().position(|&c| c == 3) {
            blood_start.push(share(ub));
        }
    }
    let mut new_counts = [0usize; 2];
    for s in b.states().filter(|s| s.new_arrivals == fixed_x) {
        new_counts[p.action(b.index(&s)).new_test as usize] += 1;
    }
    let new_test = if new_counts[1] >= new_counts[0] { Test::Blood } else { Test::Skin };

    let mut bands = Vec::new();
    let diagnostic = if skin_first.is_empty() && blood_first.is_empty() {
        Some(format!("group {group}: the policy never tests ongoing employees at x = {fixed_x}"))
    } else {
        None
    };
    if skin_first.len() > blood_first.len() {
        bands.push(Band { threshold: median(skin_first), test: OngoingTest::Skin });
        if !blood_start.is_empty() {
            bands.push(Band { threshold: median(blood_start), test: OngoingTest::Blood });
        }
    } else if !blood_first.is_empty() {
        bands.push(Band { threshold: median(blood_first), test: OngoingTest::Blood });
    }
    if bands.len() == 2 && bands[1].threshold < bands[0].threshold {
        bands[1].threshold = bands[0].threshold;
    }
    Ok(ThresholdSummary { group, fixed_x, bands, new_test, diagnostic })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Period {
    Years(usize),
    Infrequent,
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Period::Years(k) => write!(f, "{k}"),
            Period::Infrequent => f.write_str("infrequent"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyEstimate {
    pub group: GroupId,
    /// Ongoing test used most often, if any.
    pub test: Option<Test>,
    /// Mean number of ongoing-test years over the horizon.
    pub administrations: f64,
    pub period: Period,
    /// Lowest trigger share, for infrequent groups with a policy table.
    pub trigger_threshold: Option<f64>,
    pub thresholds: Option<ThresholdSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyOptions {
    pub replications: usize,
    pub burn_in: usize,
    /// Fixed arrival count used for thresholds; `None` uses the rounded mean.
    pub fixed_x: Option<usize>,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self { replications: 5, burn_in: 10, fixed_x: None }
    }
}

/// Simulates the policy for `horizon` years (after a burn-in) and converts the
/// number of ongoing-test years into a testing period.
pub fn estimate_frequencies(
    policy: &PolicySpec,
    sys: &SystemParams,
    clinic: &ClinicModel,
    horizon: usize,
    seed: u64,
    opts: &FrequencyOptions,
) -> Result<Vec<FrequencyEstimate>, AnalyzeError> {
    if horizon < 10 {
        return Err(AnalyzeError::Horizon(horizon));
    }
    policy.check(sys)?;
    let reps = opts.replications.max(1);
    let mut out = Vec::new();
    for group in sys.group_ids() {
        let mut skin = 0usize;
        let mut blood = 0usize;
        for rep in 0..reps {
            let tr = simulate_group(policy, sys, clinic, group, opts.burn_in + horizon, seed, rep)?;
            for r in &tr[opts.burn_in..] {
                match r.action.ongoing_test {
                    OngoingTest::None => {}
                    OngoingTest::Skin => skin += 1,
                    OngoingTest::Blood => blood += 1,
                }
            }
        }
        let count = (skin + blood) as f64 / reps as f64;
        let test = match (skin, blood) {
            (0, 0) => None,
            (s, b) if s > b => Some(Test::Skin),
            _ => Some(Test::Blood),
        };
        let infrequent = count < horizon as f64 / 20.0;
        let period = if infrequent {
            Period::Infrequent
        } else {
            Period::Years(((horizon as f64 / count).round() as usize).max(1))
        };
        let thresholds = match (infrequent, policy) {
            (true, PolicySpec::OptimalLookup(p)) => {
                let scale = p.population_scale;
                let fx = opts.fixed_x.unwrap_or_else(|| default_fixed_x(sys, group, scale));
                let (b, _) = &p.groups[&group];
                Some(extract_thresholds(p, group, fx.min(b.max_new))?)
            }
            _ => None,
        };
        out.push(FrequencyEstimate {
            group,
            test,
            administrations: count,
            period,
            trigger_threshold: thresholds.as_ref().and_then(|t| t.bands.first().map(|b| b.threshold)),
            thresholds,
        });
    }
    Ok(out)
}

fn test_name(t: Option<Test>) -> &'static str {
    match t {
        None => "none",
        Some(Test::Skin) => "skin",
        Some(Test::Blood) => "blood",
    }
}

/// CSV `group,test,administrations,period_years,trigger_threshold,bands`.
pub fn write_frequencies_csv<W: Write>(est: &[FrequencyEstimate], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "test", "administrations", "period_years", "trigger_threshold", "bands"])?;
    for e in est {
        let bands = e
            .thresholds
            .as_ref()
            .map(|t| {
                t.bands
                    .iter()
                    .map(|b| format!("{}>={:.4}", test_name(b.test.test()), b.threshold))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        w.write_record([
            e.group.to_string(),
            test_name(e.test).to_string(),
            format!("{:.2}", e.administrations),
            e.period.to_string(),
            e.trigger_threshold.map(|t| format!("{t:.4}")).unwrap_or_default(),
            bands,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Text table in the layout of a practitioner rule sheet.
pub fn frequencies_text(est: &[FrequencyEstimate]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<6} {:<6} {:>8}  rule", "group", "test", "per 100y");
    for e in est {
        let rule = match (&e.period, &e.thresholds) {
            (Period::Years(1), _) => format!("{} test every year", test_name(e.test)),
            (Period::Years(k), _) => format!("{} test every {k} years", test_name(e.test)),
            (Period::Infrequent, Some(t)) if !t.bands.is_empty() => t
                .bands
                .iter()
                .map(|b| format!("{} if infected share >= {:.2}%", test_name(b.test.test()), 100.0 * b.threshold))
                .collect::<Vec<_>>()
                .join(", "),
            (Period::Infrequent, _) => "rarely tested".to_string(),
        };
        let per100 = if e.administrations.is_finite() { e.administrations } else { 0.0 };
        let _ = writeln!(s, "{:<6} {:<6} {:>8.1}  {}", e.group.to_string(), test_name(e.test), per100, rule);
    }
    s
}

/// Share of visited states (simulating `rule`) where the rule's ongoing test
/// equals the source policy's.
pub fn rule_agreement(
    source: &OptimalPolicy,
    rule: &ThresholdRule,
    sys: &SystemParams,
    clinic: &ClinicModel,
    years: usize,
    seed: u64,
) -> Result<f64, AnalyzeError> {
    let mut rules = vec![rule.clone()];
    for id in sys.group_ids() {
        if id != rule.group {
            rules.push(ThresholdRule::every(id, 1, OngoingTest::None));
        }
    }
    let spec = PolicySpec::ThresholdRules(rules);
    let tr = simulate_group(&spec, sys, clinic, rule.group, years, seed, 0)?;
    let agree = tr
        .iter()
        .filter(|r| source.action(rule.group, &r.state).map(|a| a.ongoing_test) == Some(r.action.ongoing_test))
        .count();
    Ok(agree as f64 / tr.len() as f64)
}
