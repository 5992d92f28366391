//! Exact finite discrete distributions.
//!
//! Everything here is deterministic and allocation-light: probability vectors
//! indexed by a nonnegative count, joint laws over count pairs, and the handful
//! of constructors the transition model needs (binomial, truncated Poisson,
//! trinomial split, convolution).

use statrs::function::gamma::ln_gamma;

/// Entries below this are dropped (and the remainder renormalized) when a
/// distribution is built. Keeps supports small without visible mass loss.
pub const PRUNE_FLOOR: f64 = 1e-15;

/// Tolerance used when checking that a probability vector sums to one.
pub const SUM_TOL: f64 = 1e-12;

/// A probability mass function over `0..mass.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVec {
    mass: Vec<f64>,
}

impl ProbVec {
    /// Wraps a mass vector, checking nonnegativity and unit total.
    pub fn new(mass: Vec<f64>) -> Result<Self, DistError> {
        if mass.is_empty() {
            return Err(DistError::Empty);
        }
        if let Some((k, &p)) = mass.iter().enumerate().find(|(_, p)| **p < 0.0 || !p.is_finite()) {
            return Err(DistError::BadEntry { index: k, value: p });
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(DistError::NotNormalized { total });
        }
        Ok(Self { mass })
    }

    pub fn point_mass(at: usize) -> Self {
        let mut mass = vec![0.0; at + 1];
        mass[at] = 1.0;
        Self { mass }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    /// Largest index carried (the support is a subset of `0..=max_index`).
    pub fn max_index(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Nonzero `(count, probability)` pairs in increasing count order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass.iter().copied().enumerate().filter(|(_, p)| *p > 0.0)
    }

    fn from_raw(mut mass: Vec<f64>) -> Self {
        while mass.len() > 1 && *mass.last().unwrap() == 0.0 {
            mass.pop();
        }
        Self { mass }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("probability vector is empty")]
    Empty,
    #[error("entry {index} is not a finite nonnegative probability ({value})")]
    BadEntry { index: usize, value: f64 },
    #[error("entries sum to {total}, not 1")]
    NotNormalized { total: f64 },
    #[error("category probabilities {p_a} + {p_b} exceed 1")]
    Domain { p_a: f64, p_b: f64 },
}

/// Joint law of two counts `(a, b)`, stored as sparse cells sorted by `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointCounts {
    cells: Vec<(usize, usize, f64)>,
}

impl JointCounts {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cells.binary_search_by(|&(ca, cb, _)| (ca, cb).cmp(&(a, b))).map(|i| self.cells[i].2).unwrap_or(0.0)
    }

    pub fn cells(&self) -> &[(usize, usize, f64)] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.2).sum()
    }

    pub fn marginal_a(&self) -> ProbVec {
        let len = self.cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let mut mass = vec![0.0; len];
        for &(a, _, p) in &self.cells {
            mass[a] += p;
        }
        ProbVec::from_raw(mass)
    }

    pub fn marginal_b(&self) -> ProbVec {
        let len = self.cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        let mut mass = vec![0.0; len];
        for &(_, b, p) in &self.cells {
            mass[b] += p;
        }
        ProbVec::from_raw(mass)
    }

    /// Law of the componentwise sum of two independent pairs.
    pub fn convolve(&self, other: &JointCounts) -> JointCounts {
        let (a1, b1) = self.extent();
        let (a2, b2) = other.extent();
        let width = b1 + b2 + 1;
        let mut grid = vec![0.0; (a1 + a2 + 1) * width];
        for &(ia, ib, p) in &self.cells {
            for &(ja, jb, q) in &other.cells {
                grid[(ia + ja) * width + ib + jb] += p * q;
            }
        }
        let cells =
            grid.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(k, &p)| (k / width, k % width, p)).collect();
        JointCounts { cells }
    }

    fn extent(&self) -> (usize, usize) {
        self.cells.iter().fold((0, 0), |(ma, mb), &(a, b, _)| (ma.max(a), mb.max(b)))
    }
}

/// ln(n choose k).
fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial pmf over its effective support `[lo, hi]`, computed outward from
/// the mode by the ratio recurrence. Returns `(lo, masses)`; entries below
/// `floor` at the ends are cut and the rest renormalized.
pub(crate) fn binomial_window(n: usize, p: f64, floor: f64) -> (usize, Vec<f64>) {
    if n == 0 || p <= 0.0 {
        return (0, vec![1.0]);
    }
    if p >= 1.0 {
        return (n, vec![1.0]);
    }
    let q = 1.0 - p;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let ln_mode = ln_choose(n, mode) + mode as f64 * p.ln() + (n - mode) as f64 * q.ln();
    let pm = ln_mode.exp();
    let ratio = p / q;

    let mut up = Vec::new();
    let mut cur = pm;
    let mut k = mode;
    while k < n {
        cur *= (n - k) as f64 / (k + 1) as f64 * ratio;
        if cur < floor {
            break;
        }
        up.push(cur);
        k += 1;
    }
    let mut down = Vec::new();
    cur = pm;
    k = mode;
    while k > 0 {
        cur *= k as f64 / (n - k + 1) as f64 / ratio;
        if cur < floor {
            break;
        }
        down.push(cur);
        k -= 1;
    }
    let lo = mode - down.len();
    let mut mass: Vec<f64> = down.into_iter().rev().collect();
    mass.push(pm);
    mass.extend(up);
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    (lo, mass)
}

/// Binomial(n, p) with full support `0..=n`.
pub fn binomial(n: usize, p: f64) -> ProbVec {
    let (lo, window) = binomial_window(n, p, PRUNE_FLOOR);
    let mut mass = vec![0.0; n + 1];
    mass[lo..lo + window.len()].copy_from_slice(&window);
    ProbVec { mass }
}

fn poisson_ln_pmf(rate: f64, k: usize) -> f64 {
    k as f64 * rate.ln() - rate - ln_gamma(k as f64 + 1.0)
}

/// Poisson(rate) clamped at `max`: all mass at or above `max` sits on `max`.
pub fn truncated_poisson(rate: f64, max: usize) -> ProbVec {
    let mut mass = vec![0.0; max + 1];
    for (k, m) in mass.iter_mut().enumerate().take(max) {
        *m = poisson_ln_pmf(rate, k).exp();
    }
    // Upper tail summed directly; subtracting from one loses digits when it is small.
    let mut tail = 0.0;
    let mut k = max;
    let mut term = poisson_ln_pmf(rate, k).exp();
    loop {
        tail += term;
        k += 1;
        term *= rate / k as f64;
        if (k as f64) > rate && term < 1e-18 * tail.max(1e-300) {
            break;
        }
    }
    mass[max] = tail;
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    ProbVec { mass }
}

/// Joint law of category counts `(A, B)` over `n` independent trials where each
/// trial lands in A with `p_a`, in B with `p_b`, and elsewhere otherwise.
pub fn split3(n: usize, p_a: f64, p_b: f64) -> Result<JointCounts, DistError> {
    split3_floor(n, p_a, p_b, PRUNE_FLOOR)
}

pub(crate) fn split3_floor(n: usize, p_a: f64, p_b: f64, floor: f64) -> Result<JointCounts, DistError> {
    if p_a < 0.0 || p_b < 0.0 || p_a + p_b > 1.0 + 1e-12 {
        return Err(DistError::Domain { p_a, p_b });
    }
    let (a_lo, a_mass) = binomial_window(n, p_a, floor);
    let rest = 1.0 - p_a;
    let q = if rest <= 0.0 { 0.0 } else { (p_b / rest).clamp(0.0, 1.0) };
    let mut cells = Vec::new();
    for (i, &pa) in a_mass.iter().enumerate() {
        let a = a_lo + i;
        let (b_lo, b_mass) = binomial_window(n - a, q, floor);
        for (jb, &pb) in b_mass.iter().enumerate() {
            let p = pa * pb;
            if p >= floor {
                cells.push((a, b_lo + jb, p));
            }
        }
    }
    let total: f64 = cells.iter().map(|c| c.2).sum();
    for c in &mut cells {
        c.2 /= total;
    }
    Ok(JointCounts { cells })
}

/// Law of the sum of two independent counts.
pub fn convolve(d1: &ProbVec, d2: &ProbVec) -> ProbVec {
    let mut mass = vec![0.0; d1.mass.len() + d2.mass.len() - 1];
    for (i, &p) in d1.mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (j, &q) in d2.mass.iter().enumerate() {
            mass[i + j] += p * q;
        }
    }
    ProbVec::from_raw(mass)
}

/// Mixture `sum_k outer[k] * inner(k)`, e.g. a binomial thinning of a random count.
pub fn compound(outer: &ProbVec, inner: impl Fn(usize) -> ProbVec) -> ProbVec {
    let mut mass: Vec<f64> = Vec::new();
    for (k, w) in outer.iter() {
        let d = inner(k);
        if mass.len() < d.mass.len() {
            mass.resize(d.mass.len(), 0.0);
        }
        for (j, q) in d.mass.iter().enumerate() {
            mass[j] += w * q;
        }
    }
    ProbVec::from_raw(mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let n = a.len().max(b.len());
        (0..n).all(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs() <= tol)
    }

    #[test]
    fn binomial_small_cases() {
        assert!(close(binomial(2, 0.5).mass(), &[0.25, 0.5, 0.25], 1e-15));
        assert_eq!(binomial(5, 0.0).mass()[0], 1.0);
        assert_eq!(binomial(5, 0.0).total(), 1.0);
        // 0.8^3, 3*0.2*0.8^2, 3*0.04*0.8, 0.008
        assert!(close(binomial(3, 0.2).mass(), &[0.512, 0.384, 0.096, 0.008], 1e-15));
        assert_eq!(binomial(0, 0.3).mass(), &[1.0]);
        assert_eq!(binomial(4, 1.0).get(4), 1.0);
    }

    #[test]
    fn truncated_poisson_cases() {
        assert_eq!(truncated_poisson(4.0, 0).mass(), &[1.0]);
        let d = truncated_poisson(4.0, 10);
        assert!((d.total() - 1.0).abs() < SUM_TOL);
        // 1 - sum_{k<=9} e^-4 4^k/k!, summed term by term
        let mut cdf9 = 0.0;
        let mut term = (-4.0f64).exp();
        for k in 0..=9 {
            if k > 0 {
                term *= 4.0 / k as f64;
            }
            cdf9 += term;
        }
        assert!((d.get(10) - (1.0 - cdf9)).abs() < 1e-12);
        assert!((d.get(10) - 0.00813).abs() < 1e-5);
    }

    #[test]
    fn split3_cases() {
        let j = split3(1, 0.3, 0.2).unwrap();
        assert!((j.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((j.get(1, 0) - 0.3).abs() < 1e-15);
        assert!((j.get(0, 1) - 0.2).abs() < 1e-15);
        assert_eq!(j.cells().len(), 3);

        let j = split3(2, 0.25, 0.25).unwrap();
        let expect =
            [((0, 0), 0.25), ((1, 0), 0.25), ((0, 1), 0.25), ((2, 0), 0.0625), ((0, 2), 0.0625), ((1, 1), 0.125)];
        for ((a, b), p) in expect {
            assert!((j.get(a, b) - p).abs() < 1e-15, "({a},{b})");
        }
        assert!(split3(3, 0.7, 0.4).is_err());
    }

    #[test]
    fn split3_marginals_are_binomial() {
        let j = split3(12, 0.35, 0.15).unwrap();
        assert!(close(j.marginal_a().mass(), binomial(12, 0.35).mass(), 1e-13));
        assert!(close(j.marginal_b().mass(), binomial(12, 0.15).mass(), 1e-13));
    }

    #[test]
    fn convolution_cases() {
        let b = binomial(6, 0.3);
        assert!(close(convolve(&b, &ProbVec::point_mass(0)).mass(), b.mass(), 1e-16));
        let one = binomial(1, 0.3);
        assert!(close(convolve(&one, &one).mass(), binomial(2, 0.3).mass(), 1e-15));
        let u = ProbVec::new(vec![0.5, 0.5]).unwrap();
        assert!(close(convolve(&u, &u).mass(), &[0.25, 0.5, 0.25], 1e-16));
    }

    #[test]
    fn probvec_validation() {
        assert!(ProbVec::new(vec![]).is_err());
        assert!(ProbVec::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVec::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVec::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn large_binomial_is_normalized() {
        let d = binomial(1500, 0.15);
        assert!((d.total() - 1.0).abs() < SUM_TOL);
        assert!((d.mean() - 225.0).abs() < 1e-9);
    }
}
