//! Scaled-extension chains of simplexes.
//!
//! A chain is an ordered list of simplex blocks `Δ^{s_1}, …, Δ^{s_n}`. Block `k`
//! is either unscaled (it sums to 1) or scaled by a linear function
//! `h_k(x) = Σ a·x` of coordinates in earlier blocks, so that block `k` sums to
//! `h_k(x)`. Treeplexes are the special case where every `a` is the indicator
//! of the parent sequence.
//!
//! Coordinates are laid out block after block; `offset(k)..offset(k)+size(k)`
//! is block `k`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dgf::{xlogx, Conjugate, DgfKind, LocalDgf, Regularizer};
use crate::error::{Error, Result};
use crate::games::{json_error, PayoffEntry};
use crate::sample::{dirichlet_ones, rng_for};
use crate::sparse::CsrMatrix;
use crate::treeplex::{Treeplex, EMPTY};

pub const CHAIN_FORMAT_VERSION: u32 = 1;

/// Samples used to check that every `h_k` is positive in the interior.
const POSITIVITY_SAMPLES: u64 = 100;
const POSITIVITY_SEED: u64 = 0x005c_a1ed;
const POSITIVITY_MIN: f64 = 1e-12;

/// One nonzero of a scaling vector: `value · x[ref_block][ref_index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCoeff {
    pub ref_block: usize,
    pub ref_index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub size: usize,
    pub offset: usize,
    /// `None` means `h ≡ 1`.
    pub h: Option<Vec<ScaleCoeff>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScExtChain {
    blocks: Vec<Block>,
    dim: usize,
}

impl ScExtChain {
    /// `h` lists `(block, coefficients)`; blocks not listed are unscaled.
    pub fn new(sizes: &[usize], h: Vec<(usize, Vec<ScaleCoeff>)>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidChain("a chain needs at least one block".into()));
        }
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for (k, &size) in sizes.iter().enumerate() {
            if size == 0 {
                return Err(Error::InvalidChain(format!("block {k} is empty")));
            }
            blocks.push(Block { size, offset, h: None });
            offset += size;
        }
        for (k, coeffs) in h {
            if k >= blocks.len() {
                return Err(Error::InvalidChain(format!("scaling function for missing block {k}")));
            }
            if blocks[k].h.is_some() {
                return Err(Error::InvalidChain(format!("block {k} has two scaling functions")));
            }
            if coeffs.is_empty() {
                return Err(Error::InvalidChain(format!("block {k} has an identically zero scaling function")));
            }
            let mut seen = std::collections::HashSet::new();
            for c in &coeffs {
                if c.ref_block >= k {
                    return Err(Error::InvalidChain(format!(
                        "block {k} is scaled by block {}, which does not precede it",
                        c.ref_block
                    )));
                }
                if c.ref_index >= blocks[c.ref_block].size {
                    return Err(Error::InvalidChain(format!(
                        "block {k} references coordinate {} of block {} (size {})",
                        c.ref_index, c.ref_block, blocks[c.ref_block].size
                    )));
                }
                if !(0.0..=1.0).contains(&c.value) {
                    return Err(Error::InvalidCoefficient {
                        block: k,
                        ref_block: c.ref_block,
                        ref_index: c.ref_index,
                        value: c.value,
                    });
                }
                if !seen.insert((c.ref_block, c.ref_index)) {
                    return Err(Error::InvalidChain(format!(
                        "block {k} lists coordinate {}:{} twice",
                        c.ref_block, c.ref_index
                    )));
                }
            }
            blocks[k].h = Some(coeffs);
        }
        let chain = Self { blocks, dim: offset };
        chain.check_scaling_range()?;
        Ok(chain)
    }

    /// A single unscaled simplex.
    pub fn simplex(size: usize) -> Result<Self> {
        Self::new(&[size], Vec::new())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Global coordinate of `(block, index)`.
    pub fn coord(&self, block: usize, index: usize) -> usize {
        self.blocks[block].offset + index
    }

    fn range(&self, k: usize) -> std::ops::Range<usize> {
        let b = &self.blocks[k];
        b.offset..b.offset + b.size
    }

    /// `h_k(x)`; 1 for unscaled blocks.
    pub fn scaling(&self, k: usize, x: &[f64]) -> f64 {
        match &self.blocks[k].h {
            None => 1.0,
            Some(coeffs) => coeffs.iter().map(|c| c.value * x[self.coord(c.ref_block, c.ref_index)]).sum(),
        }
    }

    /// Every `h_k ≤ 1` on the chain (exact, by linear maximization) and
    /// `h_k > 1e-12` on sampled interior points.
    fn check_scaling_range(&self) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            let Some(coeffs) = &b.h else { continue };
            let mut g = vec![0.0; self.dim];
            for c in coeffs {
                g[self.coord(c.ref_block, c.ref_index)] = c.value;
            }
            let (_, max) = self.linear_maximize(&g);
            if max > 1.0 + 1e-12 {
                return Err(Error::InvalidChain(format!("scaling function of block {k} reaches {max} > 1")));
            }
        }
        for i in 0..POSITIVITY_SAMPLES {
            let x = self.sample_interior(&mut rng_for(POSITIVITY_SEED, i));
            for k in 0..self.blocks.len() {
                let h = self.scaling(k, &x);
                if h <= POSITIVITY_MIN {
                    return Err(Error::InvalidChain(format!(
                        "scaling function of block {k} is {h:e} at an interior sample"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Interior point with Dirichlet(1) directions in every block.
    pub fn sample_interior<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for k in 0..self.blocks.len() {
            let d = dirichlet_ones(rng, self.blocks[k].size);
            let h = self.scaling(k, &x);
            for (xi, di) in x[self.range(k)].iter_mut().zip(d) {
                *xi = h * di;
            }
        }
        x
    }

    /// Block `k` sums to `h_k(x)` and every coordinate is `≥ −tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && self.residual(x) <= tol
    }

    /// Largest violation of `x ≥ 0` and the block-sum constraints; infinite
    /// for non-finite input.
    pub fn residual(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let negativity = x.iter().fold(0.0, |m: f64, &v| m.max(-v));
        (0..self.blocks.len()).fold(negativity, |m, k| {
            m.max((x[self.range(k)].iter().sum::<f64>() - self.scaling(k, x)).abs())
        })
    }

    /// `argmax_{x∈X} gᵀx`, a vertex, and its value. Ties go to the lowest index.
    pub fn linear_maximize(&self, g: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(g.len(), self.dim);
        let mut work = g.to_vec();
        let mut best = vec![0usize; self.blocks.len()];
        let mut total = 0.0;
        for k in (0..self.blocks.len()).rev() {
            let r = self.range(k);
            let (i, v) = work[r.clone()]
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
            best[k] = i;
            self.push_back(k, v, &mut work, &mut total);
        }
        let mut x = vec![0.0; self.dim];
        for k in 0..self.blocks.len() {
            let h = self.scaling(k, &x);
            x[self.coord(k, best[k])] = h;
        }
        (x, total)
    }

    /// Adds `value · h_k` to earlier entries of `work` (or to `constant`).
    fn push_back(&self, k: usize, value: f64, work: &mut [f64], constant: &mut f64) {
        match &self.blocks[k].h {
            None => *constant += value,
            Some(coeffs) => {
                for c in coeffs {
                    work[self.coord(c.ref_block, c.ref_index)] += value * c.value;
                }
            }
        }
    }

    /// Largest ℓ1 norm over the chain.
    pub fn max_l1(&self) -> f64 {
        self.linear_maximize(&vec![1.0; self.dim]).1
    }
}

// ---------------------------------------------------------------------------
// Weights

#[derive(Debug, Clone, PartialEq)]
pub struct ChainWeights {
    pub alpha_dilated: Vec<f64>,
    pub alpha_dge: Vec<f64>,
}

/// `α_k = c + c·max_i Σ_{q>k} α_q ‖a_q‖₀ a_q[k,i]`, computed back to front.
fn chain_recursion(chain: &ScExtChain, c: f64) -> Vec<f64> {
    let n = chain.num_blocks();
    let mut alpha = vec![0.0; n];
    let mut pressure = vec![0.0; chain.dim()];
    for k in (0..n).rev() {
        let m = pressure[chain.range(k)].iter().copied().fold(0.0, f64::max);
        alpha[k] = c + c * m;
        if let Some(coeffs) = &chain.blocks[k].h {
            let nnz = coeffs.len() as f64;
            for co in coeffs {
                pressure[chain.coord(co.ref_block, co.ref_index)] += alpha[k] * nnz * co.value;
            }
        }
    }
    alpha
}

pub fn chain_weights(chain: &ScExtChain) -> ChainWeights {
    ChainWeights { alpha_dilated: chain_recursion(chain, 2.0), alpha_dge: chain_recursion(chain, 1.0) }
}

// ---------------------------------------------------------------------------
// DGFs

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainDgfKind {
    /// Global form `Σ α_k Σ x log x − Σ α_k h log h + Σ α_k h log s_k`.
    Dge,
    /// Dilated form `Σ α_k (h log s_k + Σ x log(x/h))`.
    DilatedEntropy,
}

impl TryFrom<DgfKind> for ChainDgfKind {
    type Error = Error;

    fn try_from(kind: DgfKind) -> Result<Self> {
        match kind {
            DgfKind::Dge => Ok(ChainDgfKind::Dge),
            DgfKind::DilatedEntropy => Ok(ChainDgfKind::DilatedEntropy),
            DgfKind::DilatedEuclidean => {
                Err(Error::InvalidParameter("chains support only the dge and dilated-entropy DGFs".into()))
            }
        }
    }
}

fn check_dim(chain: &ScExtChain, v: &[f64]) -> Result<()> {
    if v.len() != chain.dim() {
        return Err(Error::DimensionMismatch { expected: chain.dim(), found: v.len() });
    }
    Ok(())
}

pub fn chain_value(chain: &ScExtChain, alpha: &[f64], kind: ChainDgfKind, x: &[f64]) -> Result<f64> {
    check_dim(chain, x)?;
    if let Some(i) = x.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::DomainError(format!("x[{i}] = {} is not a nonnegative number", x[i])));
    }
    let mut total = 0.0;
    for k in 0..chain.num_blocks() {
        let h = chain.scaling(k, x);
        let log_s = (chain.blocks[k].size as f64).ln();
        let block = &x[chain.range(k)];
        let ent: f64 = block.iter().map(|&v| xlogx(v)).sum();
        let mass: f64 = block.iter().sum();
        let term = match kind {
            ChainDgfKind::Dge => ent - xlogx(h) + h * log_s,
            ChainDgfKind::DilatedEntropy => {
                if h <= 0.0 {
                    if mass > 0.0 {
                        return Err(Error::DomainError(format!("block {k} has mass {mass} but h = {h}")));
                    }
                    0.0
                } else {
                    h * log_s + ent - mass * h.ln()
                }
            }
        };
        total += alpha[k] * term;
    }
    Ok(total)
}

pub fn chain_gradient(chain: &ScExtChain, alpha: &[f64], kind: ChainDgfKind, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(chain, x)?;
    if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DomainError(format!("gradient needs x[{i}] > 0, got {}", x[i])));
    }
    let mut g = vec![0.0; chain.dim()];
    for k in 0..chain.num_blocks() {
        let h = chain.scaling(k, x);
        if !(h > 0.0) {
            return Err(Error::DomainError(format!("gradient needs h_{k} > 0, got {h}")));
        }
        let log_s = (chain.blocks[k].size as f64).ln();
        let a = alpha[k];
        let log_h = h.ln();
        let mut mass = 0.0;
        for i in chain.range(k) {
            mass += x[i];
            g[i] += a
                * match kind {
                    ChainDgfKind::Dge => 1.0 + x[i].ln(),
                    ChainDgfKind::DilatedEntropy => 1.0 + x[i].ln() - log_h,
                };
        }
        if let Some(coeffs) = &chain.blocks[k].h {
            let dh = match kind {
                ChainDgfKind::Dge => log_s - 1.0 - log_h,
                ChainDgfKind::DilatedEntropy => log_s - mass / h,
            };
            for c in coeffs {
                g[chain.coord(c.ref_block, c.ref_index)] += a * c.value * dh;
            }
        }
    }
    Ok(g)
}

/// `argmax_{x∈X} gᵀx − d(x)`. Both kinds share this maximizer and value.
pub fn chain_conjugate(chain: &ScExtChain, alpha: &[f64], g: &[f64]) -> Result<Conjugate> {
    check_dim(chain, g)?;
    let mut work = g.to_vec();
    let mut dir = vec![0.0; chain.dim()];
    let mut constant = 0.0;
    let mut u = Vec::new();
    for k in (0..chain.num_blocks()).rev() {
        let r = chain.range(k);
        u.clear();
        u.extend(work[r.clone()].iter().map(|&v| v / alpha[k]));
        let local = LocalDgf::Entropy.conjugate(&u, &mut dir[r])?;
        chain.push_back(k, alpha[k] * local, &mut work, &mut constant);
    }
    if !constant.is_finite() {
        return Err(Error::OverflowGuard(format!("conjugate value {constant}")));
    }
    let mut x = vec![0.0; chain.dim()];
    for k in 0..chain.num_blocks() {
        let h = chain.scaling(k, &x);
        for i in chain.range(k) {
            x[i] = (h * dir[i]).max(crate::dgf::INTERIOR_FLOOR);
        }
    }
    Ok(Conjugate { argmax: x, value: constant })
}

/// Scaled entropy DGF `s·d` on a chain.
#[derive(Debug, Clone)]
pub struct ChainDgf {
    chain: Arc<ScExtChain>,
    kind: ChainDgfKind,
    alpha: Vec<f64>,
    scale: f64,
    max_l1: f64,
    diameter: f64,
}

impl ChainDgf {
    /// Scale `s = M_X`.
    pub fn new(chain: Arc<ScExtChain>, kind: ChainDgfKind) -> Self {
        let s = chain.max_l1();
        Self::with_scale(chain, kind, s).expect("M_X is positive")
    }

    pub fn unscaled(chain: Arc<ScExtChain>, kind: ChainDgfKind) -> Self {
        Self::with_scale(chain, kind, 1.0).expect("unit scale is valid")
    }

    pub fn with_scale(chain: Arc<ScExtChain>, kind: ChainDgfKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        let w = chain_weights(&chain);
        let alpha = match kind {
            ChainDgfKind::Dge => w.alpha_dge,
            ChainDgfKind::DilatedEntropy => w.alpha_dilated,
        };
        // On X, d ≤ Σ α_k h_k log s_k, which is linear in x; d ≥ 0.
        let mut c = vec![0.0; chain.dim()];
        let mut constant = 0.0;
        for k in 0..chain.num_blocks() {
            let v = alpha[k] * (chain.blocks[k].size as f64).ln();
            chain.push_back(k, v, &mut c, &mut constant);
        }
        let diameter = (chain.linear_maximize(&c).1 + constant) * scale;
        let max_l1 = chain.max_l1();
        Ok(Self { chain, kind, alpha, scale, max_l1, diameter })
    }

    pub fn chain(&self) -> &Arc<ScExtChain> {
        &self.chain
    }

    pub fn kind(&self) -> ChainDgfKind {
        self.kind
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn raw_value(&self, x: &[f64]) -> Result<f64> {
        chain_value(&self.chain, &self.alpha, self.kind, x)
    }

    pub fn raw_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        chain_gradient(&self.chain, &self.alpha, self.kind, x)
    }

    pub fn raw_conjugate(&self, g: &[f64]) -> Result<Conjugate> {
        chain_conjugate(&self.chain, &self.alpha, g)
    }
}

impl Regularizer for ChainDgf {
    fn dim(&self) -> usize {
        self.chain.dim()
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
        self.chain.linear_maximize(g)
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.chain.residual(x)
    }

    fn max_l1(&self) -> f64 {
        self.max_l1
    }

    fn diameter_bound(&self) -> f64 {
        self.diameter
    }
}

// ---------------------------------------------------------------------------
// Treeplex encoding

/// Chain coordinate `c` holds sequence `c + 1`; the empty sequence is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainIndexMap {
    num_sequences: usize,
}

impl ChainIndexMap {
    pub fn sequence_of(&self, coord: usize) -> usize {
        coord + 1
    }

    pub fn coord_of(&self, sequence: usize) -> Option<usize> {
        (sequence != EMPTY && sequence < self.num_sequences).then(|| sequence - 1)
    }

    pub fn to_chain(&self, x: &[f64]) -> Vec<f64> {
        x[1..].to_vec()
    }

    pub fn to_sequence_form(&self, z: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(z.len() + 1);
        x.push(1.0);
        x.extend_from_slice(z);
        x
    }
}

/// One block per decision point in top-down order, scaled by the indicator of
/// its parent sequence; root decision points are unscaled.
pub fn chain_from_treeplex(t: &Treeplex) -> (ScExtChain, ChainIndexMap) {
    let sizes: Vec<usize> = t.decision_points().iter().map(|dp| dp.num_actions()).collect();
    let mut h = Vec::new();
    for (j, dp) in t.decision_points().iter().enumerate() {
        if dp.parent == EMPTY {
            continue;
        }
        let parent = t.owner(dp.parent).expect("non-empty sequence has an owner");
        let index = dp.parent - t.decision_point(parent).first_seq;
        h.push((j, vec![ScaleCoeff { ref_block: parent, ref_index: index, value: 1.0 }]));
    }
    let chain = ScExtChain::new(&sizes, h).expect("treeplex encodes a valid chain");
    (chain, ChainIndexMap { num_sequences: t.num_sequences() })
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainBody {
    blocks: Vec<BlockFile>,
    #[serde(default)]
    h: Vec<ScalingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingFile {
    block: usize,
    coeffs: Vec<CoeffFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffFile {
    ref_block: usize,
    ref_index: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffFile {
    row: usize,
    col: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    version: u32,
    blocks: Vec<BlockFile>,
    #[serde(default)]
    h: Vec<ScalingFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opponent: Option<ChainBody>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    payoffs: Vec<PayoffFile>,
}

/// A chain, optionally paired with an opponent chain and a sparse payoff
/// `A` (rows index this chain, columns the opponent) forming a saddle-point problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainProblem {
    pub chain: ScExtChain,
    pub opponent: Option<ScExtChain>,
    pub payoff: Vec<PayoffEntry>,
}

impl ChainProblem {
    pub fn payoff_matrix(&self) -> Result<CsrMatrix> {
        let Some(opp) = &self.opponent else {
            return Err(Error::InvalidChain("no opponent chain, so no payoff matrix".into()));
        };
        let triplets: Vec<_> = self.payoff.iter().map(|e| (e.row, e.col, e.value)).collect();
        CsrMatrix::from_triplets(self.chain.dim(), opp.dim(), &triplets)
    }
}

fn body_to_chain(body: ChainBody) -> Result<ScExtChain> {
    let sizes: Vec<usize> = body.blocks.iter().map(|b| b.size).collect();
    let h = body
        .h
        .into_iter()
        .map(|s| {
            let coeffs = s
                .coeffs
                .into_iter()
                .map(|c| ScaleCoeff { ref_block: c.ref_block, ref_index: c.ref_index, value: c.value })
                .collect();
            (s.block, coeffs)
        })
        .collect();
    ScExtChain::new(&sizes, h)
}

fn chain_to_body(chain: &ScExtChain) -> ChainBody {
    ChainBody {
        blocks: chain.blocks.iter().map(|b| BlockFile { size: b.size }).collect(),
        h: chain
            .blocks
            .iter()
            .enumerate()
            .filter_map(|(k, b)| {
                b.h.as_ref().map(|coeffs| ScalingFile {
                    block: k,
                    coeffs: coeffs
                        .iter()
                        .map(|c| CoeffFile { ref_block: c.ref_block, ref_index: c.ref_index, value: c.value })
                        .collect(),
                })
            })
            .collect(),
    }
}

pub fn chain_problem_to_json(p: &ChainProblem) -> String {
    let body = chain_to_body(&p.chain);
    let file = ChainFile {
        version: CHAIN_FORMAT_VERSION,
        blocks: body.blocks,
        h: body.h,
        opponent: p.opponent.as_ref().map(chain_to_body),
        payoffs: p.payoff.iter().map(|e| PayoffFile { row: e.row, col: e.col, value: e.value }).collect(),
    };
    serde_json::to_string_pretty(&file).expect("chain serializes")
}

pub fn chain_problem_from_json(text: &str, context: &str) -> Result<ChainProblem> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(context, e))?;
    let version = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| Error::ParseError {
        context: format!("{context}: version"),
        message: "missing or non-integer 'version'".into(),
    })?;
    if version != CHAIN_FORMAT_VERSION as u64 {
        return Err(Error::SchemaVersionMismatch { found: version as u32, expected: CHAIN_FORMAT_VERSION });
    }
    let file: ChainFile = serde_json::from_value(value)
        .map_err(|e| Error::ParseError { context: context.to_string(), message: e.to_string() })?;
    let chain = body_to_chain(ChainBody { blocks: file.blocks, h: file.h })?;
    let opponent = file.opponent.map(body_to_chain).transpose()?;
    let payoff: Vec<PayoffEntry> =
        file.payoffs.iter().map(|p| PayoffEntry { row: p.row, col: p.col, value: p.value }).collect();
    if !payoff.is_empty() {
        let Some(opp) = &opponent else {
            return Err(Error::ParseError {
                context: format!("{context}: payoffs"),
                message: "payoffs need an opponent chain".into(),
            });
        };
        for (k, e) in payoff.iter().enumerate() {
            if e.row >= chain.dim() || e.col >= opp.dim() || !e.value.is_finite() {
                return Err(Error::ParseError {
                    context: format!("{context}: payoffs[{k}]"),
                    message: format!("entry ({}, {}) = {} outside {}x{}", e.row, e.col, e.value, chain.dim(), opp.dim()),
                });
            }
        }
    }
    let problem = ChainProblem { chain, opponent, payoff };
    if problem.opponent.is_some() {
        problem.payoff_matrix()?;
    }
    Ok(problem)
}

pub fn load_chain(path: &Path) -> Result<ChainProblem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    chain_problem_from_json(&text, &path.display().to_string())
}

pub fn save_chain(p: &ChainProblem, path: &Path) -> Result<()> {
    std::fs::write(path, chain_problem_to_json(p)).map_err(|e| Error::io(path, e))
}

/// Matching pennies with both players on a two-action simplex chain.
pub fn matching_pennies() -> ChainProblem {
    let payoff = vec![
        PayoffEntry { row: 0, col: 0, value: 1.0 },
        PayoffEntry { row: 0, col: 1, value: -1.0 },
        PayoffEntry { row: 1, col: 0, value: -1.0 },
        PayoffEntry { row: 1, col: 1, value: 1.0 },
    ];
    ChainProblem {
        chain: ScExtChain::simplex(2).expect("two-action simplex"),
        opponent: Some(ScExtChain::simplex(2).expect("two-action simplex")),
        payoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgf::compute_gamma;
    use crate::games::generate_kuhn;

    fn coeff(b: usize, i: usize, v: f64) -> ScaleCoeff {
        ScaleCoeff { ref_block: b, ref_index: i, value: v }
    }

    #[test]
    fn one_block_weights() {
        let w = chain_weights(&ScExtChain::simplex(3).unwrap());
        assert_eq!(w.alpha_dilated, vec![2.0]);
        assert_eq!(w.alpha_dge, vec![1.0]);
    }

    #[test]
    fn two_block_indicator_weights() {
        let c = ScExtChain::new(&[2, 2], vec![(1, vec![coeff(0, 0, 1.0)])]).unwrap();
        let w = chain_weights(&c);
        assert_eq!(w.alpha_dge, vec![2.0, 1.0]);
        assert_eq!(w.alpha_dilated, vec![6.0, 2.0]);
        assert_eq!(c.max_l1(), 2.0);
    }

    #[test]
    fn kuhn_chain_weights_are_gamma() {
        let t = generate_kuhn().treeplex_x;
        let (chain, _) = chain_from_treeplex(&t);
        assert_eq!(chain.num_blocks(), 6);
        assert_eq!(chain_weights(&chain).alpha_dge, compute_gamma(&t).decision_points);
        assert_eq!(chain.max_l1() + 1.0, t.max_l1());
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(matches!(
            ScExtChain::new(&[2, 2], vec![(1, vec![coeff(0, 0, 1.5)])]),
            Err(Error::InvalidCoefficient { block: 1, .. })
        ));
        assert!(ScExtChain::new(&[2, 2], vec![(1, vec![coeff(1, 0, 1.0)])]).is_err());
        assert!(ScExtChain::new(&[2, 0], vec![]).is_err());
        // h = x[0][0] + x[0][1] + x[0][0] style overshoot: 1 + 1 on a simplex block is fine only up to 1.
        assert!(ScExtChain::new(&[2, 2, 2], vec![(1, vec![coeff(0, 0, 1.0)]), (2, vec![coeff(0, 0, 1.0), coeff(1, 0, 1.0)])])
            .is_err());
    }

    #[test]
    fn conjugate_of_zero_is_scaled_uniform() {
        let c = ScExtChain::new(&[2, 3], vec![(1, vec![coeff(0, 1, 1.0)])]).unwrap();
        let w = chain_weights(&c);
        let x = chain_conjugate(&c, &w.alpha_dge, &[0.0; 5]).unwrap().argmax;
        assert_eq!(&x[..2], &[0.5, 0.5]);
        for v in &x[2..] {
            assert!((v - 0.5 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_single_block_has_zero_value() {
        let c = ScExtChain::simplex(4).unwrap();
        for kind in [ChainDgfKind::Dge, ChainDgfKind::DilatedEntropy] {
            assert!(chain_value(&c, &[1.0], kind, &[0.25; 4]).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn file_round_trip() {
        let t = generate_kuhn().treeplex_x;
        let (chain, _) = chain_from_treeplex(&t);
        let p = ChainProblem { chain, opponent: None, payoff: vec![] };
        let back = chain_problem_from_json(&chain_problem_to_json(&p), "mem").unwrap();
        assert_eq!(back, p);

        let mp = matching_pennies();
        let back = chain_problem_from_json(&chain_problem_to_json(&mp), "mem").unwrap();
        assert_eq!(back, mp);
    }

    #[test]
    fn file_with_bad_coefficient() {
        let text = r#"{"version": 1, "blocks": [{"size": 2}, {"size": 2}],
            "h": [{"block": 1, "coeffs": [{"ref_block": 0, "ref_index": 0, "value": 1.5}]}]}"#;
        assert!(matches!(chain_problem_from_json(text, "mem"), Err(Error::InvalidCoefficient { .. })));
        let v2 = r#"{"version": 2, "blocks": [{"size": 2}]}"#;
        assert!(matches!(chain_problem_from_json(v2, "mem"), Err(Error::SchemaVersionMismatch { .. })));
    }
}
