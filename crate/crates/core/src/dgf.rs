//! Distance-generating functions on treeplexes.
//!
//! Three kinds share one dilated framework: the dilated entropy with weights
//! `β`, the dilatable global entropy (DGE) with weights `γ` and `w`, and a
//! dilated Euclidean DGF with weights `β`. A [`ProximalSetup`] fixes a kind and
//! a strong-convexity scale `s`; every [`Regularizer`] method it exposes acts on
//! `s·d`.
//!
//! Prox is `argmin_x { gᵀx + D(x‖c) }`, i.e. `∇d*(−g + ∇d(c))`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::treeplex::{Treeplex, EMPTY};

/// Lower clamp applied to entropy argmax coordinates so that iterates stay in
/// the relative interior even when softmax underflows.
pub const INTERIOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DgfKind {
    Dge,
    DilatedEntropy,
    DilatedEuclidean,
}

impl DgfKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DgfKind::Dge => "dge",
            DgfKind::DilatedEntropy => "dilated-entropy",
            DgfKind::DilatedEuclidean => "dilated-euclidean",
        }
    }
}

impl fmt::Display for DgfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DgfKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dge" => Ok(DgfKind::Dge),
            "dilated-entropy" | "dilated" => Ok(DgfKind::DilatedEntropy),
            "dilated-euclidean" => Ok(DgfKind::DilatedEuclidean),
            other => Err(Error::InvalidParameter(format!("unknown dgf '{other}'"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Weights

/// One weight for the empty sequence plus one per decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct DpWeights {
    pub root: f64,
    pub decision_points: Vec<f64>,
}

impl DpWeights {
    pub fn max(&self) -> f64 {
        self.decision_points.iter().fold(self.root, |m, &b| m.max(b))
    }

    /// Mean over the root weight and all decision-point weights.
    pub fn mean(&self) -> f64 {
        (self.root + self.decision_points.iter().sum::<f64>()) / (1 + self.decision_points.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgfWeights {
    pub beta: DpWeights,
    pub gamma: DpWeights,
    /// Indexed by sequence; `w[0]` is `w_∅`.
    pub w: Vec<f64>,
}

/// `b_j = c + c·max_a Σ_{j'∈C_ja} b_j'`, root `c + c·Σ_{j∈C_∅} b_j`.
fn dilated_recursion(t: &Treeplex, c: f64) -> DpWeights {
    let mut b = vec![0.0; t.num_decision_points()];
    for j in t.bottom_up_order() {
        let best = t
            .decision_point(j)
            .sequences()
            .map(|s| t.children(s).iter().map(|&k| b[k]).sum::<f64>())
            .fold(0.0, f64::max);
        b[j] = c + c * best;
    }
    let root = c + c * t.children(EMPTY).iter().map(|&k| b[k]).sum::<f64>();
    DpWeights { root, decision_points: b }
}

pub fn compute_beta(t: &Treeplex) -> DpWeights {
    dilated_recursion(t, 2.0)
}

pub fn compute_gamma(t: &Treeplex) -> DpWeights {
    dilated_recursion(t, 1.0)
}

/// `γ` and the per-sequence `w_σ = γ_{owner(σ)} − Σ_{j∈C_σ} γ_j` (`γ_∅` at the root).
pub fn compute_gamma_w(t: &Treeplex) -> (DpWeights, Vec<f64>) {
    let gamma = compute_gamma(t);
    let w = (0..t.num_sequences())
        .map(|s| {
            let own = t.owner(s).map_or(gamma.root, |j| gamma.decision_points[j]);
            own - t.children(s).iter().map(|&k| gamma.decision_points[k]).sum::<f64>()
        })
        .collect();
    (gamma, w)
}

pub fn compute_weights(t: &Treeplex) -> DgfWeights {
    let (gamma, w) = compute_gamma_w(t);
    DgfWeights { beta: compute_beta(t), gamma, w }
}

// ---------------------------------------------------------------------------
// Local simplex DGFs and the dilated construction

#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// A DGF on a single simplex, normalized to have minimum 0 at the barycenter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalDgf {
    /// `ψ(v) = log n + Σ v log v`.
    Entropy,
    /// `ψ(v) = ½ Σ (v_i − 1/n)²`.
    Euclidean,
}

impl LocalDgf {
    pub fn value(self, v: &[f64]) -> f64 {
        let n = v.len() as f64;
        match self {
            LocalDgf::Entropy => n.ln() + v.iter().map(|&p| xlogx(p)).sum::<f64>(),
            LocalDgf::Euclidean => 0.5 * v.iter().map(|&p| (p - 1.0 / n).powi(2)).sum::<f64>(),
        }
    }

    pub fn gradient_into(self, v: &[f64], out: &mut [f64]) {
        let n = v.len() as f64;
        for (o, &p) in out.iter_mut().zip(v) {
            *o = match self {
                LocalDgf::Entropy => 1.0 + p.ln(),
                LocalDgf::Euclidean => p - 1.0 / n,
            };
        }
    }

    /// Writes `argmax_{v∈Δ} uᵀv − ψ(v)` into `out` and returns the maximum.
    pub fn conjugate(self, u: &[f64], out: &mut [f64]) -> Result<f64> {
        let n = u.len();
        let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() || u.iter().any(|v| v.is_nan()) {
            return Err(Error::OverflowGuard(format!("non-finite local gradient (max {m})")));
        }
        match self {
            LocalDgf::Entropy => {
                let mut total = 0.0;
                for (o, &ui) in out.iter_mut().zip(u) {
                    *o = (ui - m).exp();
                    total += *o;
                }
                out.iter_mut().for_each(|o| *o /= total);
                Ok(m + total.ln() - (n as f64).ln())
            }
            LocalDgf::Euclidean => {
                let c = 1.0 / n as f64;
                let z: Vec<f64> = u.iter().map(|&ui| ui + c).collect();
                project_simplex(&z, out);
                let value = u.iter().zip(out.iter()).map(|(a, b)| a * b).sum::<f64>() - self.value(out);
                Ok(value)
            }
        }
    }

    fn root_value(self, x0: f64) -> f64 {
        match self {
            LocalDgf::Entropy => xlogx(x0),
            LocalDgf::Euclidean => 0.5 * (x0 - 1.0).powi(2),
        }
    }

    fn root_gradient(self, x0: f64) -> f64 {
        match self {
            LocalDgf::Entropy => 1.0 + x0.ln(),
            LocalDgf::Euclidean => x0 - 1.0,
        }
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(z: &[f64], out: &mut [f64]) {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (o, &zi) in out.iter_mut().zip(z) {
        *o = (zi - theta).max(0.0);
    }
}

/// Result of a conjugate evaluation: the maximizer and the optimal value.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugate {
    pub argmax: Vec<f64>,
    pub value: f64,
}

fn check_len(t: &Treeplex, v: &[f64]) -> Result<()> {
    if v.len() != t.num_sequences() {
        return Err(Error::DimensionMismatch { expected: t.num_sequences(), found: v.len() });
    }
    Ok(())
}

/// `α_∅ ψ_∅(x_∅) + Σ_j α_j x_{p_j} ψ_j(x_j / x_{p_j})`; unreachable decision
/// points contribute 0.
pub fn dilated_value(t: &Treeplex, local: LocalDgf, weights: &DpWeights, x: &[f64]) -> Result<f64> {
    check_len(t, x)?;
    if let Some(s) = x.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::DomainError(format!("x[{s}] = {} is not a nonnegative number", x[s])));
    }
    let mut total = weights.root * local.root_value(x[EMPTY]);
    let mut v = Vec::with_capacity(t.max_actions());
    for (j, dp) in t.decision_points().iter().enumerate() {
        let xp = x[dp.parent];
        if xp <= 0.0 {
            continue;
        }
        v.clear();
        v.extend(x[dp.sequences()].iter().map(|&xs| xs / xp));
        total += weights.decision_points[j] * xp * local.value(&v);
    }
    Ok(total)
}

pub fn dilated_gradient(t: &Treeplex, local: LocalDgf, weights: &DpWeights, x: &[f64]) -> Result<Vec<f64>> {
    check_len(t, x)?;
    let positive_required = |s: usize| local == LocalDgf::Entropy || !t.children(s).is_empty() || s == EMPTY;
    if let Some(s) = (0..x.len()).find(|&s| !(x[s] > 0.0) && positive_required(s)) {
        return Err(Error::DomainError(format!("gradient needs x[{s}] > 0, got {}", x[s])));
    }
    let mut g = vec![0.0; x.len()];
    g[EMPTY] = weights.root * local.root_gradient(x[EMPTY]);
    let mut v = Vec::with_capacity(t.max_actions());
    let mut gv = vec![0.0; t.max_actions()];
    for (j, dp) in t.decision_points().iter().enumerate() {
        let xp = x[dp.parent];
        let alpha = weights.decision_points[j];
        v.clear();
        v.extend(x[dp.sequences()].iter().map(|&xs| xs / xp));
        let gv = &mut gv[..v.len()];
        local.gradient_into(&v, gv);
        let mut inner = 0.0;
        for (k, s) in dp.sequences().enumerate() {
            g[s] += alpha * gv[k];
            inner += gv[k] * v[k];
        }
        g[dp.parent] += alpha * (local.value(&v) - inner);
    }
    Ok(g)
}

/// `argmax_{x∈Q} gᵀx − d(x)` by the bottom-up local-conjugate recursion.
pub fn dilated_conjugate(t: &Treeplex, local: LocalDgf, weights: &DpWeights, g: &[f64]) -> Result<Conjugate> {
    check_len(t, g)?;
    let mut work = g.to_vec();
    let mut behavioral = vec![1.0; g.len()];
    let mut u = Vec::with_capacity(t.max_actions());
    for j in t.bottom_up_order() {
        let dp = t.decision_point(j);
        let alpha = weights.decision_points[j];
        u.clear();
        u.extend(work[dp.sequences()].iter().map(|&gs| gs / alpha));
        let value = local.conjugate(&u, &mut behavioral[dp.sequences()])?;
        work[dp.parent] += alpha * value;
    }
    let value = work[EMPTY] - weights.root * local.root_value(1.0);
    if !value.is_finite() {
        return Err(Error::OverflowGuard(format!("conjugate value {value}")));
    }
    let floor = if local == LocalDgf::Entropy { INTERIOR_FLOOR } else { 0.0 };
    let mut x = vec![0.0; g.len()];
    x[EMPTY] = 1.0;
    for dp in t.decision_points() {
        let xp = x[dp.parent];
        for s in dp.sequences() {
            x[s] = (xp * behavioral[s]).max(floor);
        }
    }
    Ok(Conjugate { argmax: x, value })
}

// ---------------------------------------------------------------------------
// DGE closed forms

/// `Σ_σ w_σ x_σ log x_σ + Σ_j γ_j x_{p_j} log|A_j|`, with `0 log 0 = 0`.
pub fn dge_value(t: &Treeplex, gamma: &DpWeights, w: &[f64], x: &[f64]) -> Result<f64> {
    check_len(t, x)?;
    if let Some(s) = x.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::DomainError(format!("x[{s}] = {} is not a nonnegative number", x[s])));
    }
    let entropy: f64 = w.iter().zip(x).map(|(&ws, &xs)| ws * xlogx(xs)).sum();
    let spread: f64 = t
        .decision_points()
        .iter()
        .zip(&gamma.decision_points)
        .map(|(dp, &gj)| gj * x[dp.parent] * (dp.num_actions() as f64).ln())
        .sum();
    Ok(entropy + spread)
}

/// `(1 + log x_σ) w_σ + Σ_{j∈C_σ} γ_j log|A_j|`.
pub fn dge_gradient(t: &Treeplex, gamma: &DpWeights, w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len(t, x)?;
    if let Some(s) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DomainError(format!("gradient needs x[{s}] > 0, got {}", x[s])));
    }
    let mut g: Vec<f64> = w.iter().zip(x).map(|(&ws, &xs)| (1.0 + xs.ln()) * ws).collect();
    for (dp, &gj) in t.decision_points().iter().zip(&gamma.decision_points) {
        g[dp.parent] += gj * (dp.num_actions() as f64).ln();
    }
    Ok(g)
}

/// Diagonal of the DGE Hessian, `w_σ / x_σ`.
pub fn dge_hessian_diag(w: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter().zip(x).map(|(&ws, &xs)| ws / xs).collect()
}

// ---------------------------------------------------------------------------
// Regularizer interface

/// A scaled DGF `s·d` over a polytope, with the linear oracles the solvers need.
pub trait Regularizer: Send + Sync {
    fn dim(&self) -> usize;
    /// Strong-convexity scale `s` already folded into every method below.
    fn scale(&self) -> f64;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `argmax_x gᵀx − s·d(x)` and its value.
    fn conjugate(&self, g: &[f64]) -> Result<Conjugate>;
    /// `argmax_x gᵀx` over the polytope (a vertex) and its value.
    fn linear_maximize(&self, g: &[f64]) -> (Vec<f64>, f64);
    /// Largest constraint violation of `x`.
    fn residual(&self, x: &[f64]) -> f64;
    fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.residual(x) <= tol
    }
    /// Largest ℓ1 norm over the polytope.
    fn max_l1(&self) -> f64;
    /// Upper bound on `max d − min d` over the polytope, times `s`.
    fn diameter_bound(&self) -> f64;

    fn conjugate_gradient(&self, g: &[f64]) -> Result<Vec<f64>> {
        Ok(self.conjugate(g)?.argmax)
    }

    /// Minimizer of the DGF over the polytope.
    fn center(&self) -> Result<Vec<f64>> {
        self.conjugate_gradient(&vec![0.0; self.dim()])
    }

    /// `argmin_x gᵀx + D(x‖center)`.
    fn prox(&self, center: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.gradient(center)?;
        if g.len() != u.len() {
            return Err(Error::DimensionMismatch { expected: u.len(), found: g.len() });
        }
        u.iter_mut().zip(g).for_each(|(ui, gi)| *ui -= gi);
        self.conjugate_gradient(&u)
    }

    /// `d(x) − d(c) − ∇d(c)ᵀ(x − c)`.
    fn bregman(&self, x: &[f64], center: &[f64]) -> Result<f64> {
        let gc = self.gradient(center)?;
        let lin: f64 = gc.iter().zip(x.iter().zip(center)).map(|(g, (a, b))| g * (a - b)).sum();
        Ok(self.value(x)? - self.value(center)? - lin)
    }
}

// ---------------------------------------------------------------------------
// Proximal setup on a treeplex

#[derive(Debug, Clone)]
pub struct ProximalSetup {
    treeplex: Arc<Treeplex>,
    kind: DgfKind,
    weights: DgfWeights,
    scale: f64,
    max_l1: f64,
    diameter: f64,
}

impl ProximalSetup {
    /// Scale `s = M_Q`, which makes `s·d` 1-strongly convex w.r.t. ℓ1.
    pub fn new(treeplex: Arc<Treeplex>, kind: DgfKind) -> Self {
        let s = treeplex.max_l1();
        Self::with_scale(treeplex, kind, s).expect("M_Q is positive")
    }

    pub fn unscaled(treeplex: Arc<Treeplex>, kind: DgfKind) -> Self {
        Self::with_scale(treeplex, kind, 1.0).expect("unit scale is valid")
    }

    pub fn with_scale(treeplex: Arc<Treeplex>, kind: DgfKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        let weights = compute_weights(&treeplex);
        let max_l1 = treeplex.max_l1();
        let max_log = treeplex
            .decision_points()
            .iter()
            .map(|dp| (dp.num_actions() as f64).ln())
            .fold(0.0, f64::max);
        let raw = match kind {
            DgfKind::Dge => max_l1 * max_l1 * max_log,
            DgfKind::DilatedEntropy => 2f64.powi(treeplex.depth() as i32 + 2) * max_l1 * max_l1 * max_log,
            DgfKind::DilatedEuclidean => {
                // d ≥ 0 and each local term is at most ½(1 − 1/n), so the
                // maximum of a linear function bounds the range.
                let mut c = vec![0.0; treeplex.num_sequences()];
                c[EMPTY] = 0.5 * weights.beta.root;
                for (j, dp) in treeplex.decision_points().iter().enumerate() {
                    let n = dp.num_actions() as f64;
                    c[dp.parent] += weights.beta.decision_points[j] * 0.5 * (1.0 - 1.0 / n);
                }
                treeplex.linear_maximize(&c).1
            }
        };
        Ok(Self { treeplex, kind, weights, scale, max_l1, diameter: raw * scale })
    }

    pub fn treeplex(&self) -> &Arc<Treeplex> {
        &self.treeplex
    }

    pub fn kind(&self) -> DgfKind {
        self.kind
    }

    pub fn weights(&self) -> &DgfWeights {
        &self.weights
    }

    /// Weights of the dilated form this setup evaluates conjugates with.
    pub fn dilated_weights(&self) -> &DpWeights {
        match self.kind {
            DgfKind::Dge => &self.weights.gamma,
            DgfKind::DilatedEntropy | DgfKind::DilatedEuclidean => &self.weights.beta,
        }
    }

    fn local(&self) -> LocalDgf {
        match self.kind {
            DgfKind::Dge | DgfKind::DilatedEntropy => LocalDgf::Entropy,
            DgfKind::DilatedEuclidean => LocalDgf::Euclidean,
        }
    }

    /// `d(x)` before scaling.
    pub fn raw_value(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            DgfKind::Dge => dge_value(&self.treeplex, &self.weights.gamma, &self.weights.w, x),
            _ => dilated_value(&self.treeplex, self.local(), self.dilated_weights(), x),
        }
    }

    /// `∇d(x)` before scaling.
    pub fn raw_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            DgfKind::Dge => dge_gradient(&self.treeplex, &self.weights.gamma, &self.weights.w, x),
            _ => dilated_gradient(&self.treeplex, self.local(), self.dilated_weights(), x),
        }
    }

    /// `argmax gᵀx − d(x)` before scaling.
    pub fn raw_conjugate(&self, g: &[f64]) -> Result<Conjugate> {
        dilated_conjugate(&self.treeplex, self.local(), self.dilated_weights(), g)
    }
}

impl Regularizer for ProximalSetup {
    fn dim(&self) -> usize {
        self.treeplex.num_sequences()
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scale * self.raw_value(x)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.raw_gradient(x)?;
        g.iter_mut().for_each(|v| *v *= self.scale);
        Ok(g)
    }

    fn conjugate(&self, g: &[f64]) -> Result<Conjugate> {
        let scaled: Vec<f64> = g.iter().map(|v| v / self.scale).collect();
        let mut c = self.raw_conjugate(&scaled)?;
        c.value *= self.scale;
        Ok(c)
    }

    fn prox(&self, center: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.raw_gradient(center)?;
        if g.len() != u.len() {
            return Err(Error::DimensionMismatch { expected: u.len(), found: g.len() });
        }
        u.iter_mut().zip(g).for_each(|(ui, gi)| *ui -= gi / self.scale);
        Ok(self.raw_conjugate(&u)?.argmax)
    }

    fn linear_maximize(&self, g: &[f64]) -> (Vec<f64>, f64) {
        self.treeplex.linear_maximize(g)
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.treeplex.residual(x)
    }

    fn max_l1(&self) -> f64 {
        self.max_l1
    }

    fn diameter_bound(&self) -> f64 {
        self.diameter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::generate_kuhn;
    use crate::sample::{interior_strategy, rng_for};
    use crate::treeplex::{DecisionPointSpec, ParentRef};

    fn line(n: usize) -> Treeplex {
        let mut specs = vec![DecisionPointSpec::new("d1", ParentRef::Empty, &["go", "stop"])];
        for i in 2..=n {
            let parent = ParentRef::Sequence { decision_point: format!("d{}", i - 1), action: 0 };
            specs.push(DecisionPointSpec::new(format!("d{i}"), parent, &["go", "stop"]));
        }
        Treeplex::new(specs).unwrap()
    }

    #[test]
    fn kuhn_weights() {
        let g = generate_kuhn();
        let w = compute_weights(&g.treeplex_x);
        assert_eq!(w.beta.root, 38.0);
        assert_eq!(w.beta.max(), 38.0);
        assert!((w.beta.mean() - 62.0 / 7.0).abs() < 1e-12);
        assert_eq!(w.gamma.root, 7.0);
        assert_eq!(w.gamma.max(), 7.0);
        assert!((w.gamma.mean() - 16.0 / 7.0).abs() < 1e-12);
        assert_eq!(w.gamma.root, g.treeplex_x.max_l1());
        assert!(w.w.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn line_weights_unrolled() {
        let t = line(3);
        let b = compute_beta(&t);
        assert_eq!(b.decision_points, vec![14.0, 6.0, 2.0]);
        assert_eq!(b.root, 30.0);
        let (gamma, w) = compute_gamma_w(&t);
        assert_eq!(gamma.decision_points, vec![3.0, 2.0, 1.0]);
        assert_eq!(gamma.root, 4.0);
        assert_eq!(w, vec![1.0, 1.0, 3.0, 1.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn leaf_weights() {
        let t = Treeplex::simplex(4).unwrap();
        assert_eq!(compute_beta(&t).decision_points, vec![2.0]);
        let (gamma, w) = compute_gamma_w(&t);
        assert_eq!(gamma.decision_points, vec![1.0]);
        assert_eq!(w, vec![1.0; 5]);
    }

    #[test]
    fn simplex_values() {
        let t = Arc::new(Treeplex::simplex(2).unwrap());
        let d = ProximalSetup::unscaled(t.clone(), DgfKind::Dge);
        assert!((d.value(&[1.0, 1.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(d.value(&[1.0, 0.5, 0.5]).unwrap().abs() < 1e-15);
        let g = d.gradient(&[1.0, 0.5, 0.5]).unwrap();
        assert!((g[1] - (1.0 + 0.5f64.ln())).abs() < 1e-15);
        let x = d.conjugate_gradient(&[0.0, 1.0, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((x[1] - e / (e + 1.0)).abs() < 1e-15);
        assert!((x[2] - 1.0 / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn negative_coordinate_is_domain_error() {
        let t = Arc::new(Treeplex::simplex(2).unwrap());
        let d = ProximalSetup::unscaled(t, DgfKind::Dge);
        assert!(matches!(d.value(&[1.0, 1.5, -0.5]), Err(Error::DomainError(_))));
        assert!(matches!(d.gradient(&[1.0, 1.0, 0.0]), Err(Error::DomainError(_))));
    }

    #[test]
    fn nonfinite_gradient_is_overflow_guard() {
        let t = Arc::new(Treeplex::simplex(2).unwrap());
        let d = ProximalSetup::unscaled(t, DgfKind::Dge);
        assert!(matches!(d.conjugate(&[0.0, f64::INFINITY, 0.0]), Err(Error::OverflowGuard(_))));
    }

    #[test]
    fn huge_gradients_stay_interior() {
        let g = generate_kuhn();
        let d = ProximalSetup::new(g.treeplex_x.clone(), DgfKind::Dge);
        let big: Vec<f64> = (0..13).map(|i| if i % 3 == 0 { 1e6 } else { -1e6 }).collect();
        let x = d.conjugate_gradient(&big).unwrap();
        assert!(x.iter().all(|&v| v > 0.0));
        assert!(g.treeplex_x.is_strategy(&x, 1e-9));
        d.gradient(&x).unwrap();
    }

    #[test]
    fn kuhn_diameters() {
        let g = generate_kuhn();
        let dge = ProximalSetup::unscaled(g.treeplex_x.clone(), DgfKind::Dge);
        assert!((dge.diameter_bound() - 49.0 * 2f64.ln()).abs() < 1e-12);
        let dil = ProximalSetup::unscaled(g.treeplex_x.clone(), DgfKind::DilatedEntropy);
        assert!((dil.diameter_bound() - 16.0 * 49.0 * 2f64.ln()).abs() < 1e-12);
        let scaled = ProximalSetup::new(g.treeplex_x.clone(), DgfKind::Dge);
        assert!((scaled.diameter_bound() - 343.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dge_and_dilated_gamma_agree_on_kuhn() {
        let g = generate_kuhn();
        let t = &g.treeplex_x;
        let (gamma, w) = compute_gamma_w(t);
        for i in 0..50 {
            let x = interior_strategy(t, &mut rng_for(11, i));
            let a = dge_value(t, &gamma, &w, &x).unwrap();
            let b = dilated_value(t, LocalDgf::Entropy, &gamma, &x).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn euclidean_projection_and_conjugate() {
        let mut out = [0.0; 3];
        project_simplex(&[0.5, 0.5, 0.5], &mut out);
        assert!(out.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        project_simplex(&[3.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [1.0, 0.0, 0.0]);

        let t = Arc::new(line(2));
        let d = ProximalSetup::unscaled(t.clone(), DgfKind::DilatedEuclidean);
        let c = d.center().unwrap();
        assert!(t.is_strategy(&c, 1e-12));
        assert!(d.value(&c).unwrap().abs() < 1e-15);
        let x = d.prox(&c, &[0.0; 5]).unwrap();
        assert!(x.iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for k in [DgfKind::Dge, DgfKind::DilatedEntropy, DgfKind::DilatedEuclidean] {
            assert_eq!(k.as_str().parse::<DgfKind>().unwrap(), k);
        }
        assert!("tsallis".parse::<DgfKind>().is_err());
    }
}
