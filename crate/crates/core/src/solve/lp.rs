//! A small revised simplex for `min c'x  s.t.  Ax >= b, x >= 0`.
//!
//! The basis is kept as a dense LU factorization with partial pivoting plus
//! a product-form eta file, refactorized every few dozen pivots. Columns are
//! sparse. Phase 1 starts from artificial (or surplus) variables unless the
//! caller supplies a feasible starting basis.
//!
//! Columns may carry a tag. When several basic variables tie in the ratio
//! test, one whose tag equals the entering column's tag leaves first; surplus
//! and artificial variables are tagged with their row. For MDP master
//! problems tagged by state this keeps one column per state in the basis.
#![allow(clippy::needless_range_loop)]

#[derive(Clone, Debug, PartialEq)]
pub struct LpColumn {
    pub cost: f64,
    /// `(row, coefficient)` pairs.
    pub entries: Vec<(usize, f64)>,
    pub tag: Option<usize>,
}

/// `min c'x` subject to `Ax >= b`, `x >= 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub rhs: Vec<f64>,
    pub columns: Vec<LpColumn>,
}

impl LpProblem {
    pub fn new(rhs: Vec<f64>) -> Self {
        Self { rhs, columns: Vec::new() }
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn add_column(&mut self, cost: f64, entries: Vec<(usize, f64)>) -> usize {
        self.add_tagged_column(cost, entries, None)
    }

    pub fn add_tagged_column(&mut self, cost: f64, entries: Vec<(usize, f64)>, tag: Option<usize>) -> usize {
        self.columns.push(LpColumn { cost, entries, tag });
        self.columns.len() - 1
    }

    /// Builds from a dense row-major matrix.
    pub fn from_dense(cost: &[f64], a: &[Vec<f64>], b: &[f64]) -> Self {
        let mut p = Self::new(b.to_vec());
        for (j, &c) in cost.iter().enumerate() {
            let entries = a.iter().enumerate().filter(|(_, row)| row[j] != 0.0).map(|(i, row)| (i, row[j])).collect();
            p.add_column(c, entries);
        }
        p
    }

    /// `Ax - b` for a candidate solution.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; self.num_rows()];
        for (col, &xj) in self.columns.iter().zip(x) {
            for &(i, a) in &col.entries {
                ax[i] += a * xj;
            }
        }
        ax.iter().zip(&self.rhs).map(|(l, r)| l - r).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// One price per constraint, nonnegative for a minimization in `>=` form.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    /// Reduced cost `c_j - y'a_j` of every column.
    pub fn reduced_costs(&self, p: &LpProblem) -> Vec<f64> {
        p.columns.iter().map(|c| c.cost - c.entries.iter().map(|&(i, a)| self.duals[i] * a).sum::<f64>()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase 1 objective {phase1_objective:.3e})")]
    Infeasible { phase1_objective: f64 },
    /// `column` is the entering structural column, or `None` when the ray
    /// enters through a surplus variable.
    #[error("linear program is unbounded (entering column {column:?})")]
    Unbounded { column: Option<usize> },
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix is singular")]
    Singular,
    #[error("starting basis needs {expected} columns, got {got}")]
    BasisSize { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    /// Relative to `1 + max |c_j|`.
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-11,
            pivot_tol: 1e-9,
            refactor_every: 50,
            max_iterations: None,
            degenerate_streak: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Var {
    Col(usize),
    Surplus(usize),
    Artificial(usize),
}

/// Dense `PB = LU` with row permutation `perm`.
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, LpError> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, big) =
                (k..n).map(|i| (i, a[i * n + k].abs())).fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if big < 1e-13 {
                return Err(LpError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..];
            for i in 0..n - k - 1 {
                let row = &mut bottom[i * n..(i + 1) * n];
                let m = row[k] / pivot;
                row[k] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        row[j] -= m * row_k[j];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    /// Solves `B z = a` in place (`z` enters holding `a`).
    fn solve(&self, z: &mut [f64]) {
        let n = self.n;
        let mut t: Vec<f64> = self.perm.iter().map(|&p| z[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&t[..i]).map(|(l, v)| l * v).sum();
            t[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&t[i + 1..]).map(|(u, v)| u * v).sum();
            t[i] = (t[i] - s) / row[i];
        }
        z.copy_from_slice(&t);
    }

    /// Solves `B' y = w` in place.
    fn solve_transpose(&self, w: &mut [f64]) {
        let n = self.n;
        let mut t = w.to_vec();
        for k in 0..n {
            let row = &self.lu[k * n..(k + 1) * n];
            t[k] /= row[k];
            let tk = t[k];
            if tk != 0.0 {
                for j in k + 1..n {
                    t[j] -= row[j] * tk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = &self.lu[k * n..k * n + k];
            let tk = t[k];
            if tk != 0.0 {
                for j in 0..k {
                    t[j] -= row[j] * tk;
                }
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            w[p] = t[i];
        }
    }
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// Revised simplex state that can be re-solved after adding columns.
pub struct RevisedSimplex {
    problem: LpProblem,
    opts: SimplexOptions,
    basis: Vec<Var>,
    x_b: Vec<f64>,
    lu: Option<DenseLu>,
    etas: Vec<Eta>,
    phase: u8,
    iterations: usize,
}

impl RevisedSimplex {
    /// Starts from the artificial/surplus basis.
    pub fn new(problem: LpProblem, opts: SimplexOptions) -> Self {
        let basis = problem
            .rhs
            .iter()
            .enumerate()
            .map(|(i, &b)| if b >= 0.0 { Var::Artificial(i) } else { Var::Surplus(i) })
            .collect();
        Self { problem, opts, basis, x_b: Vec::new(), lu: None, etas: Vec::new(), phase: 1, iterations: 0 }
    }

    /// Starts from the basis formed by the given structural columns, which
    /// must be nonsingular and primal feasible.
    pub fn with_basis(problem: LpProblem, columns: &[usize], opts: SimplexOptions) -> Result<Self, LpError> {
        if columns.len() != problem.num_rows() {
            return Err(LpError::BasisSize { expected: problem.num_rows(), got: columns.len() });
        }
        let mut s = Self::new(problem, opts);
        s.basis = columns.iter().map(|&j| Var::Col(j)).collect();
        s.refactor()?;
        if s.x_b.iter().any(|&v| v < -opts.feasibility_tol) {
            return Err(LpError::Infeasible { phase1_objective: f64::NAN });
        }
        s.phase = 2;
        Ok(s)
    }

    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    /// Appends columns; the current basis stays valid.
    pub fn add_columns(&mut self, columns: impl IntoIterator<Item = LpColumn>) {
        self.problem.columns.extend(columns);
    }

    /// Structural columns currently in the basis.
    pub fn basic_columns(&self) -> Vec<usize> {
        self.basis
            .iter()
            .filter_map(|v| match v {
                Var::Col(j) => Some(*j),
                _ => None,
            })
            .collect()
    }

    fn m(&self) -> usize {
        self.problem.num_rows()
    }

    fn column_into(&self, v: Var, out: &mut [f64]) {
        out.iter_mut().for_each(|e| *e = 0.0);
        match v {
            Var::Col(j) => {
                for &(i, a) in &self.problem.columns[j].entries {
                    out[i] += a;
                }
            }
            Var::Surplus(i) => out[i] = -1.0,
            Var::Artificial(i) => out[i] = if self.problem.rhs[i] >= 0.0 { 1.0 } else { -1.0 },
        }
    }

    fn cost(&self, v: Var) -> f64 {
        match (self.phase, v) {
            (1, Var::Artificial(_)) => 1.0,
            (1, _) => 0.0,
            (_, Var::Col(j)) => self.problem.columns[j].cost,
            _ => 0.0,
        }
    }

    fn tag(&self, v: Var) -> Option<usize> {
        match v {
            Var::Col(j) => self.problem.columns[j].tag,
            Var::Surplus(i) | Var::Artificial(i) => Some(i),
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let mut dense = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (p, &v) in self.basis.iter().enumerate() {
            self.column_into(v, &mut col);
            for (i, &a) in col.iter().enumerate() {
                dense[i * m + p] = a;
            }
        }
        self.lu = Some(DenseLu::factor(dense, m)?);
        self.etas.clear();
        let mut x = self.problem.rhs.clone();
        self.ftran(&mut x);
        self.x_b = x;
        Ok(())
    }

    fn ftran(&self, z: &mut [f64]) {
        self.lu.as_ref().expect("factorized").solve(z);
        for e in &self.etas {
            let zp = z[e.pos] / e.pivot;
            if zp != 0.0 {
                for &(i, d) in &e.entries {
                    z[i] -= d * zp;
                }
            }
            z[e.pos] = zp;
        }
    }

    fn btran(&self, w: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let s: f64 = e.entries.iter().map(|&(i, d)| d * w[i]).sum();
            w[e.pos] = (w[e.pos] - s) / e.pivot;
        }
        self.lu.as_ref().expect("factorized").solve_transpose(w);
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&v| self.cost(v)).collect();
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, v: Var, y: &[f64]) -> f64 {
        match v {
            Var::Col(j) => {
                let c = &self.problem.columns[j];
                c.cost_in(self.phase) - c.entries.iter().map(|&(i, a)| y[i] * a).sum::<f64>()
            }
            Var::Surplus(i) => y[i],
            Var::Artificial(_) => f64::INFINITY,
        }
    }

    /// Runs both phases as needed and returns the optimal solution.
    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        let m = self.m();
        if self.lu.is_none() {
            self.refactor()?;
        }
        let limit = self.opts.max_iterations.unwrap_or(50 * (m + self.problem.columns.len()) + 10_000);
        if self.phase == 1 {
            self.run_phase(limit)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.x_b)
                .filter(|(v, _)| matches!(v, Var::Artificial(_)))
                .map(|(_, x)| x.max(0.0))
                .sum();
            let scale = 1.0 + self.problem.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeas > self.opts.feasibility_tol * scale {
                return Err(LpError::Infeasible { phase1_objective: infeas });
            }
            self.phase = 2;
        }
        self.run_phase(limit)?;
        self.refactor()?;

        let mut x = vec![0.0; self.problem.columns.len()];
        for (&v, &val) in self.basis.iter().zip(&self.x_b) {
            if let Var::Col(j) = v {
                x[j] = val.max(0.0);
            }
        }
        Ok(LpSolution { objective: self.problem.objective(&x), duals: self.duals(), x, iterations: self.iterations })
    }

    fn run_phase(&mut self, limit: usize) -> Result<(), LpError> {
        let m = self.m();
        let n = self.problem.columns.len();
        let cmax = self.problem.columns.iter().fold(0.0f64, |a, c| a.max(c.cost.abs()));
        let opt_tol = self.opts.optimality_tol * (1.0 + if self.phase == 1 { 1.0 } else { cmax });
        let mut in_basis = vec![false; n];
        let mut surplus_in = vec![false; m];
        for &v in &self.basis {
            match v {
                Var::Col(j) => in_basis[j] = true,
                Var::Surplus(i) => surplus_in[i] = true,
                Var::Artificial(_) => {}
            }
        }
        let mut degenerate = 0usize;
        let mut d = vec![0.0; m];
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let bland = degenerate >= self.opts.degenerate_streak;
            let y = self.duals();

            let mut entering: Option<(Var, f64)> = None;
            let candidates = (0..n)
                .filter(|&j| !in_basis[j])
                .map(Var::Col)
                .chain((0..m).filter(|&i| !surplus_in[i]).map(Var::Surplus));
            for v in candidates {
                let r = self.reduced_cost(v, &y);
                if r < -opt_tol {
                    if bland {
                        entering = Some((v, r));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| r < best) {
                        entering = Some((v, r));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };

            self.column_into(q, &mut d);
            self.ftran(&mut d);

            let tol = self.opts.pivot_tol;
            let q_tag = self.tag(q);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            if self.phase == 2 {
                leave = (0..m).find(|&i| matches!(self.basis[i], Var::Artificial(_)) && d[i].abs() > tol);
                if leave.is_some() {
                    best_ratio = 0.0;
                }
            }
            if leave.is_none() {
                for i in 0..m {
                    if d[i] > tol {
                        let r = self.x_b[i].max(0.0) / d[i];
                        best_ratio = best_ratio.min(r);
                    }
                }
                if best_ratio.is_finite() {
                    let slack = 1e-12 * (1.0 + best_ratio);
                    let ties = (0..m).filter(|&i| d[i] > tol && self.x_b[i].max(0.0) / d[i] <= best_ratio + slack);
                    let mut pick: Option<usize> = None;
                    for i in ties {
                        let better = match pick {
                            None => true,
                            Some(p) => {
                                let ti = q_tag.is_some() && self.tag(self.basis[i]) == q_tag;
                                let tp = q_tag.is_some() && self.tag(self.basis[p]) == q_tag;
                                if ti != tp {
                                    ti
                                } else if bland {
                                    self.basis[i] < self.basis[p]
                                } else {
                                    d[i] > d[p]
                                }
                            }
                        };
                        if better {
                            pick = Some(i);
                        }
                    }
                    leave = pick;
                }
            }
            let Some(p) = leave else {
                let column = match q {
                    Var::Col(j) => Some(j),
                    _ => None,
                };
                return Err(LpError::Unbounded { column });
            };

            let theta = if best_ratio == 0.0 { 0.0 } else { self.x_b[p].max(0.0) / d[p] };
            for i in 0..m {
                if i != p {
                    self.x_b[i] -= theta * d[i];
                }
            }
            self.x_b[p] = theta;
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };

            match self.basis[p] {
                Var::Col(j) => in_basis[j] = false,
                Var::Surplus(i) => surplus_in[i] = false,
                Var::Artificial(_) => {}
            }
            match q {
                Var::Col(j) => in_basis[j] = true,
                Var::Surplus(i) => surplus_in[i] = true,
                Var::Artificial(_) => unreachable!("artificials never enter"),
            }
            self.basis[p] = q;
            self.etas.push(Eta {
                pos: p,
                pivot: d[p],
                entries: (0..m).filter(|&i| i != p && d[i] != 0.0).map(|i| (i, d[i])).collect(),
            });
            self.iterations += 1;
            if self.etas.len() >= self.opts.refactor_every {
                self.refactor()?;
            }
        }
    }
}

impl LpColumn {
    fn cost_in(&self, phase: u8) -> f64 {
        if phase == 1 {
            0.0
        } else {
            self.cost
        }
    }
}

/// Solves the LP from scratch with default options.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    RevisedSimplex::new(p.clone(), SimplexOptions::default()).solve()
}
