//! Domain types, configuration loading, and the built-in parameter sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clinic::ClinicParams;
use crate::dist::truncated_poisson;

/// Employee group: salary class `i` and infection-risk class `j`, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId {
    pub salary: usize,
    pub risk: usize,
}

impl GroupId {
    pub const fn new(salary: usize, risk: usize) -> Self {
        Self { salary, risk }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.salary, self.risk)
    }
}

impl FromStr for GroupId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (i, j) = s.split_once(',').ok_or_else(|| format!("group key `{s}` is not of the form \"i,j\""))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("group key `{s}` has a non-integer index"));
        let id = GroupId::new(parse(i)?, parse(j)?);
        if id.salary == 0 || id.risk == 0 {
            return Err(format!("group key `{s}`: indices are 1-based"));
        }
        Ok(id)
    }
}

/// Inclusive upper bounds of a group's state components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bounds {
    pub max_new: usize,
    pub max_ongoing: usize,
    pub max_undetected: usize,
}

impl Bounds {
    pub fn num_states(&self) -> usize {
        (self.max_new + 1) * (self.max_ongoing + 1) * (self.max_undetected + 1)
    }

    pub fn contains(&self, s: &GroupState) -> bool {
        s.new_arrivals <= self.max_new && s.ongoing <= self.max_ongoing && s.undetected <= self.max_undetected
    }

    /// Row-major index with `new_arrivals` slowest and `undetected` fastest.
    pub fn index(&self, s: &GroupState) -> usize {
        (s.new_arrivals * (self.max_ongoing + 1) + s.ongoing) * (self.max_undetected + 1) + s.undetected
    }

    pub fn state(&self, index: usize) -> GroupState {
        let nu = self.max_undetected + 1;
        let ny = self.max_ongoing + 1;
        GroupState { new_arrivals: index / (nu * ny), ongoing: (index / nu) % ny, undetected: index % nu }
    }

    pub fn clamp(&self, s: GroupState) -> GroupState {
        GroupState {
            new_arrivals: s.new_arrivals.min(self.max_new),
            ongoing: s.ongoing.min(self.max_ongoing),
            undetected: s.undetected.min(self.max_undetected),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = GroupState> + '_ {
        (0..self.num_states()).map(move |k| self.state(k))
    }
}

/// Per-group rates, probabilities, unit costs, and state bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupParams {
    /// Mean new hires per year.
    pub arrival_rate: f64,
    pub leave_prob: f64,
    pub patient_contact_prob: f64,
    pub transmission_prob: f64,
    pub skin_fp: f64,
    pub skin_fn: f64,
    pub blood_fp: f64,
    pub blood_fn: f64,
    /// Dollars per undetected infection.
    pub undetected_cost: f64,
    /// Dollars per hour spent at the clinic.
    pub lost_time_rate: f64,
    pub max_new: usize,
    pub max_ongoing: usize,
    pub max_undetected: usize,
}

impl GroupParams {
    pub fn bounds(&self) -> Bounds {
        Bounds { max_new: self.max_new, max_ongoing: self.max_ongoing, max_undetected: self.max_undetected }
    }
}

/// Count state of one group at the start of a year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupState {
    pub new_arrivals: usize,
    pub ongoing: usize,
    pub undetected: usize,
}

impl GroupState {
    pub const fn new(new_arrivals: usize, ongoing: usize, undetected: usize) -> Self {
        Self { new_arrivals, ongoing, undetected }
    }

    pub fn headcount(&self) -> usize {
        self.new_arrivals + self.ongoing
    }

    /// Undetected infected as a fraction of `x + y` (zero for an empty group).
    pub fn infected_ratio(&self) -> f64 {
        match self.headcount() {
            0 => 0.0,
            n => self.undetected as f64 / n as f64,
        }
    }
}

impl fmt::Display for GroupState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.new_arrivals, self.ongoing, self.undetected)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Test {
    Skin,
    Blood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OngoingTest {
    None,
    Skin,
    Blood,
}

impl OngoingTest {
    pub fn test(self) -> Option<Test> {
        match self {
            OngoingTest::None => None,
            OngoingTest::Skin => Some(Test::Skin),
            OngoingTest::Blood => Some(Test::Blood),
        }
    }

    /// Region-map code: 1 no test, 2 skin, 3 blood.
    pub fn code(self) -> u8 {
        match self {
            OngoingTest::None => 1,
            OngoingTest::Skin => 2,
            OngoingTest::Blood => 3,
        }
    }
}

impl From<Test> for OngoingTest {
    fn from(t: Test) -> Self {
        match t {
            Test::Skin => OngoingTest::Skin,
            Test::Blood => OngoingTest::Blood,
        }
    }
}

/// Yearly decision for one group: the new-hire test (mandatory) and the
/// ongoing-employee test (optional).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub new_test: Test,
    pub ongoing_test: OngoingTest,
}

impl Action {
    /// All feasible actions, in tie-breaking preference order: no ongoing test
    /// first, then skin, then blood; skin before blood for new hires.
    pub const ALL: [Action; 6] = [
        Action::new(Test::Skin, OngoingTest::None),
        Action::new(Test::Blood, OngoingTest::None),
        Action::new(Test::Skin, OngoingTest::Skin),
        Action::new(Test::Blood, OngoingTest::Skin),
        Action::new(Test::Skin, OngoingTest::Blood),
        Action::new(Test::Blood, OngoingTest::Blood),
    ];

    pub const fn new(new_test: Test, ongoing_test: OngoingTest) -> Self {
        Self { new_test, ongoing_test }
    }

    /// Position in [`Action::ALL`].
    pub fn index(&self) -> usize {
        let ongoing = match self.ongoing_test {
            OngoingTest::None => 0,
            OngoingTest::Skin => 1,
            OngoingTest::Blood => 2,
        };
        let new = match self.new_test {
            Test::Skin => 0,
            Test::Blood => 1,
        };
        2 * ongoing + new
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.new_test, self.ongoing_test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialStateMode {
    /// Start each group near its long-run headcount with no infections.
    SteadyState,
    /// Explicit per-group starting states; groups not listed fall back to steady state.
    Configured(BTreeMap<GroupId, GroupState>),
}

/// Free-text labels for the salary and risk classes. Metadata only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub salary: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub risk: Vec<String>,
}

/// Full model parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub groups: BTreeMap<GroupId, GroupParams>,
    /// Explicit contact probabilities `(from, to)`; absent pairs read as the
    /// identity (1 within a group, 0 across groups).
    pub contact: BTreeMap<(GroupId, GroupId), f64>,
    /// Proportion of infected patients visiting the facility.
    pub beta: f64,
    pub test_cost_blood: f64,
    pub test_cost_skin: f64,
    pub xray_cost: f64,
    /// Charge two skin administrations for each new hire instead of one.
    pub double_charge_new_skin: bool,
    pub discount: f64,
    pub clinic: ClinicParams,
    pub initial_state_mode: InitialStateMode,
    pub labels: Labels,
}

pub const DEFAULT_DISCOUNT: f64 = 0.97;

impl SystemParams {
    pub fn group(&self, id: GroupId) -> Result<&GroupParams, ModelError> {
        self.groups.get(&id).ok_or(ModelError::UnknownGroup(id))
    }

    pub fn group_ids(&self) -> Vec<GroupId> {
        self.groups.keys().copied().collect()
    }

    pub fn contact_prob(&self, from: GroupId, to: GroupId) -> f64 {
        self.contact.get(&(from, to)).copied().unwrap_or(if from == to { 1.0 } else { 0.0 })
    }

    /// Every violated invariant, as human-readable messages naming the field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.groups.is_empty() {
            out.push("at least one group required".to_string());
        }
        let prob = |out: &mut Vec<String>, name: String, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name} = {v} is outside [0, 1]"));
            }
        };
        let nonneg = |out: &mut Vec<String>, name: String, v: f64| {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be a finite nonnegative number"));
            }
        };
        for (id, g) in &self.groups {
            let f = |field: &str| format!("groups.{id}.{field}");
            if !(g.arrival_rate > 0.0 && g.arrival_rate.is_finite()) {
                out.push(format!("{} = {} must be positive", f("lambda"), g.arrival_rate));
            }
            prob(&mut out, f("p_leave"), g.leave_prob);
            prob(&mut out, f("nu"), g.patient_contact_prob);
            prob(&mut out, f("xi"), g.transmission_prob);
            prob(&mut out, f("skin_fp"), g.skin_fp);
            prob(&mut out, f("skin_fn"), g.skin_fn);
            prob(&mut out, f("blood_fp"), g.blood_fp);
            prob(&mut out, f("blood_fn"), g.blood_fn);
            nonneg(&mut out, f("c_undetected"), g.undetected_cost);
            nonneg(&mut out, f("c_lost_per_hour"), g.lost_time_rate);
            if g.max_undetected > g.max_new + g.max_ongoing {
                out.push(format!(
                    "{} = {} exceeds max_new + max_ongoing = {}",
                    f("max_undetected"),
                    g.max_undetected,
                    g.max_new + g.max_ongoing
                ));
            }
        }
        prob(&mut out, "beta".into(), self.beta);
        nonneg(&mut out, "costs.blood".into(), self.test_cost_blood);
        nonneg(&mut out, "costs.skin".into(), self.test_cost_skin);
        nonneg(&mut out, "costs.xray".into(), self.xray_cost);
        if !(0.0..1.0).contains(&self.discount) {
            out.push(format!("discount = {} is outside [0, 1)", self.discount));
        }
        for (&(from, to), &p) in &self.contact {
            let name = format!("contact.{from};{to}");
            prob(&mut out, name.clone(), p);
            let expected = if from == to { 1.0 } else { 0.0 };
            if p != expected {
                out.push(format!("{name} = {p}: groups are solved independently, so contact must be {expected}"));
            }
            for g in [from, to] {
                if !self.groups.contains_key(&g) {
                    out.push(format!("{name} refers to unknown group {g}"));
                }
            }
        }
        out.extend(self.clinic.violations());
        if let InitialStateMode::Configured(states) = &self.initial_state_mode {
            for (id, s) in states {
                match self.groups.get(id) {
                    None => out.push(format!("initial.{id} refers to an unknown group")),
                    Some(g) if !g.bounds().contains(s) => {
                        out.push(format!("initial.{id} = {s} violates the group's bounds"))
                    }
                    Some(_) => {}
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    /// Copy with every arrival rate multiplied by `factor` and bounds
    /// recomputed by `rule`. Configured initial states are clamped to the new bounds.
    pub fn scaled(&self, factor: f64, rule: BoundsRule) -> SystemParams {
        let mut out = self.clone();
        for g in out.groups.values_mut() {
            g.arrival_rate *= factor;
            let b = rule.bounds(g.arrival_rate, g.leave_prob);
            g.max_new = b.max_new;
            g.max_ongoing = b.max_ongoing;
            g.max_undetected = b.max_undetected;
        }
        if let InitialStateMode::Configured(states) = &mut out.initial_state_mode {
            for (id, s) in states.iter_mut() {
                if let Some(g) = out.groups.get(id) {
                    *s = g.bounds().clamp(*s);
                }
            }
        }
        out
    }

    /// Serializes to the configuration document format read by [`load_config`].
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ConfigDoc::from(self)).expect("config document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
}

/// How state bounds are derived when a configuration leaves them out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsRule {
    /// Arrival tail below 1e-3, four times the mean headcount, 20% of that for infections.
    Standard,
    /// Tighter bounds for reduced-population runs where the exact solvers must finish quickly.
    Desk,
}

impl BoundsRule {
    pub fn bounds(self, arrival_rate: f64, leave_prob: f64) -> Bounds {
        let headcount = (arrival_rate / leave_prob.max(1e-9)).round() as usize;
        match self {
            BoundsRule::Standard => {
                let max_ongoing = 4 * headcount;
                Bounds {
                    max_new: arrival_bound(arrival_rate, 1e-3),
                    max_ongoing,
                    max_undetected: 5usize.max((0.2 * max_ongoing as f64).round() as usize),
                }
            }
            BoundsRule::Desk => {
                let max_ongoing = 3usize.max((1.3 * headcount as f64).round() as usize);
                Bounds {
                    max_new: arrival_bound(arrival_rate, 1e-3),
                    max_ongoing,
                    max_undetected: 4usize.max((0.1 * max_ongoing as f64).round() as usize),
                }
            }
        }
    }
}

/// Smallest `k` with `P(Poisson(rate) > k) < tail`.
pub fn arrival_bound(rate: f64, tail: f64) -> usize {
    let mut k = rate.ceil() as usize;
    loop {
        let d = truncated_poisson(rate, k + 1);
        if d.get(k + 1) < tail {
            return k;
        }
        k += 1;
    }
}

/// Starting state of a group under the configured initial-state mode.
pub fn initial_state(params: &SystemParams, group: GroupId) -> Result<GroupState, ModelError> {
    let g = params.group(group)?;
    if let InitialStateMode::Configured(states) = &params.initial_state_mode {
        if let Some(s) = states.get(&group) {
            if !g.bounds().contains(s) {
                return Err(ModelError::Invalid(vec![format!("initial.{group} = {s} violates the group's bounds")]));
            }
            return Ok(*s);
        }
    }
    let x0 = (g.arrival_rate.round() as usize).min(g.max_new);
    let y0 = ((g.arrival_rate / g.leave_prob.max(1e-9)).round() as usize).min(g.max_ongoing);
    Ok(GroupState::new(x0, y0, 0))
}

// ---------------------------------------------------------------------------
// Configuration document

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupDoc {
    lambda: f64,
    p_leave: f64,
    nu: f64,
    xi: f64,
    skin_fp: f64,
    skin_fn: f64,
    blood_fp: f64,
    blood_fn: f64,
    c_undetected: f64,
    c_lost_per_hour: f64,
    #[serde(default)]
    max_new: Option<usize>,
    #[serde(default)]
    max_ongoing: Option<usize>,
    #[serde(default)]
    max_undetected: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostsDoc {
    blood: f64,
    skin: f64,
    xray: f64,
    #[serde(default)]
    double_charge_new_skin: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    groups: BTreeMap<String, GroupDoc>,
    beta: f64,
    costs: CostsDoc,
    #[serde(default = "default_discount")]
    discount: f64,
    #[serde(default)]
    clinic: ClinicParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<BTreeMap<String, [usize; 3]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    contact: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "is_default_labels")]
    labels: Labels,
}

fn default_discount() -> f64 {
    DEFAULT_DISCOUNT
}

fn is_default_labels(l: &Labels) -> bool {
    l == &Labels::default()
}

impl From<&SystemParams> for ConfigDoc {
    fn from(p: &SystemParams) -> Self {
        let groups = p
            .groups
            .iter()
            .map(|(id, g)| {
                (
                    id.to_string(),
                    GroupDoc {
                        lambda: g.arrival_rate,
                        p_leave: g.leave_prob,
                        nu: g.patient_contact_prob,
                        xi: g.transmission_prob,
                        skin_fp: g.skin_fp,
                        skin_fn: g.skin_fn,
                        blood_fp: g.blood_fp,
                        blood_fn: g.blood_fn,
                        c_undetected: g.undetected_cost,
                        c_lost_per_hour: g.lost_time_rate,
                        max_new: Some(g.max_new),
                        max_ongoing: Some(g.max_ongoing),
                        max_undetected: Some(g.max_undetected),
                    },
                )
            })
            .collect();
        let initial = match &p.initial_state_mode {
            InitialStateMode::SteadyState => None,
            InitialStateMode::Configured(m) => {
                Some(m.iter().map(|(id, s)| (id.to_string(), [s.new_arrivals, s.ongoing, s.undetected])).collect())
            }
        };
        ConfigDoc {
            groups,
            beta: p.beta,
            costs: CostsDoc {
                blood: p.test_cost_blood,
                skin: p.test_cost_skin,
                xray: p.xray_cost,
                double_charge_new_skin: p.double_charge_new_skin,
            },
            discount: p.discount,
            clinic: p.clinic.clone(),
            initial,
            contact: p.contact.iter().map(|((a, b), v)| (format!("{a};{b}"), *v)).collect(),
            labels: p.labels.clone(),
        }
    }
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<SystemParams, ModelError> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut violations = Vec::new();
    let mut groups = BTreeMap::new();
    for (key, g) in doc.groups {
        let id = match key.parse::<GroupId>() {
            Ok(id) => id,
            Err(e) => {
                violations.push(e);
                continue;
            }
        };
        let auto = BoundsRule::Standard.bounds(g.lambda, g.p_leave);
        groups.insert(
            id,
            GroupParams {
                arrival_rate: g.lambda,
                leave_prob: g.p_leave,
                patient_contact_prob: g.nu,
                transmission_prob: g.xi,
                skin_fp: g.skin_fp,
                skin_fn: g.skin_fn,
                blood_fp: g.blood_fp,
                blood_fn: g.blood_fn,
                undetected_cost: g.c_undetected,
                lost_time_rate: g.c_lost_per_hour,
                max_new: g.max_new.unwrap_or(auto.max_new),
                max_ongoing: g.max_ongoing.unwrap_or(auto.max_ongoing),
                max_undetected: g.max_undetected.unwrap_or(auto.max_undetected),
            },
        );
    }
    let mut contact = BTreeMap::new();
    for (key, v) in doc.contact {
        let parsed = key
            .split_once(';')
            .ok_or_else(|| format!("contact key `{key}` is not of the form \"i,j;k,l\""))
            .and_then(|(a, b)| Ok((a.parse::<GroupId>()?, b.parse::<GroupId>()?)));
        match parsed {
            Ok(k) => {
                contact.insert(k, v);
            }
            Err(e) => violations.push(e),
        }
    }
    let initial_state_mode = match doc.initial {
        None => InitialStateMode::SteadyState,
        Some(m) => {
            let mut states = BTreeMap::new();
            for (key, [x, y, u]) in m {
                match key.parse::<GroupId>() {
                    Ok(id) => {
                        states.insert(id, GroupState::new(x, y, u));
                    }
                    Err(e) => violations.push(format!("initial: {e}")),
                }
            }
            InitialStateMode::Configured(states)
        }
    };
    let params = SystemParams {
        groups,
        contact,
        beta: doc.beta,
        test_cost_blood: doc.costs.blood,
        test_cost_skin: doc.costs.skin,
        xray_cost: doc.costs.xray,
        double_charge_new_skin: doc.costs.double_charge_new_skin,
        discount: doc.discount,
        clinic: doc.clinic,
        initial_state_mode,
        labels: doc.labels,
    };
    violations.extend(params.violations());
    if violations.is_empty() {
        Ok(params)
    } else {
        Err(ModelError::Invalid(violations))
    }
}

/// The published nine-group parameter set (three salary classes by three risk
/// classes), with default discount, clinic times, and standard bounds.
pub fn paper_defaults() -> SystemParams {
    // (arrival rate) indexed [salary][risk]
    const LAMBDA: [[f64; 3]; 3] = [[4.0, 14.0, 10.0], [15.0, 50.0, 35.0], [4.0, 14.0, 10.0]];
    const NU: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.75, 0.5, 1.0]];
    const XI: [[f64; 3]; 3] = [[0.05, 0.22, 0.22], [0.05, 0.22, 0.22], [0.05, 0.22, 0.22]];
    // indexed by risk class
    const SKIN_FP: [f64; 3] = [0.6, 0.27, 0.27];
    const SKIN_FN: [f64; 3] = [0.04, 0.04, 0.04];
    const BLOOD_FP: [f64; 3] = [0.176, 0.176, 0.176];
    const BLOOD_FN: [f64; 3] = [0.008, 0.008, 0.008];
    // indexed by salary class
    const LOST_PER_HOUR: [f64; 3] = [150.0, 30.0, 29.0];
    const UNDETECTED: [f64; 3] = [5000.0, 1000.0, 1000.0];
    const LEAVE: f64 = 0.15;

    let mut groups = BTreeMap::new();
    for i in 0..3 {
        for j in 0..3 {
            let b = BoundsRule::Standard.bounds(LAMBDA[i][j], LEAVE);
            groups.insert(
                GroupId::new(i + 1, j + 1),
                GroupParams {
                    arrival_rate: LAMBDA[i][j],
                    leave_prob: LEAVE,
                    patient_contact_prob: NU[i][j],
                    transmission_prob: XI[i][j],
                    skin_fp: SKIN_FP[j],
                    skin_fn: SKIN_FN[j],
                    blood_fp: BLOOD_FP[j],
                    blood_fn: BLOOD_FN[j],
                    undetected_cost: UNDETECTED[i],
                    lost_time_rate: LOST_PER_HOUR[i],
                    max_new: b.max_new,
                    max_ongoing: b.max_ongoing,
                    max_undetected: b.max_undetected,
                },
            );
        }
    }
    SystemParams {
        groups,
        contact: BTreeMap::new(),
        beta: 0.1,
        test_cost_blood: 45.0,
        test_cost_skin: 8.0,
        xray_cost: 100.0,
        double_charge_new_skin: false,
        discount: DEFAULT_DISCOUNT,
        clinic: ClinicParams::default(),
        initial_state_mode: InitialStateMode::SteadyState,
        labels: Labels {
            salary: vec!["physicians".into(), "nurses".into(), "other employees".into()],
            risk: vec!["BCG vaccinated".into(), "location risk class 2".into(), "location risk class 3".into()],
        },
    }
}

/// Population scale of the desk preset.
pub const DESK_SCALE: f64 = 0.2;

/// The published parameters with arrivals scaled down for quick exact solves.
pub fn desk_defaults() -> SystemParams {
    paper_defaults().scaled(DESK_SCALE, BoundsRule::Desk)
}
