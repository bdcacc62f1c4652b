//! Seeded invariant suites for treeplex and chain DGFs.
//!
//! Each [`Check`] holds the worst statistic over its samples and the threshold
//! it is held to. Sample `i` of a check is drawn from its own stream, so a
//! report is identical whether the batch runs on one thread or many.

use std::sync::Arc;

use serde::Serialize;

use crate::dgf::{compute_gamma_w, compute_weights, dge_value, dilated_value, DgfKind, LocalDgf, ProximalSetup, Regularizer};
use crate::error::Result;
use crate::games::GameInstance;
use crate::oracle::{chain_vertices, treeplex_vertices};
use crate::sample::{gaussian, interior_strategy, rng_for, SampleRng};
use crate::scext::{chain_from_treeplex, chain_value, chain_weights, ChainDgf, ChainDgfKind, ChainProblem, ScExtChain};
use crate::treeplex::Treeplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub domain: String,
    pub name: String,
    /// Worst value over all samples; NaN if any sample was NaN, infinite
    /// (null in JSON) if no sample applied.
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub samples: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub source: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(source: impl Into<String>, seed: u64, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { source: source.into(), seed, passed, checks }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, domain: &str, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.domain == domain && c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dilatability_samples: usize,
    pub hessian_samples: usize,
    pub gradient_samples: usize,
    pub conjugate_samples: usize,
    /// Interior points added to the vertex oracle for conjugate optimality.
    pub oracle_samples: usize,
    pub identity_samples: usize,
    pub diameter_pairs: usize,
    /// Vertex enumeration is skipped above this many vertices.
    pub vertex_limit: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dilatability_samples: 1000,
            hessian_samples: 100,
            gradient_samples: 100,
            conjugate_samples: 100,
            oracle_samples: 1000,
            identity_samples: 100,
            diameter_pairs: 10_000,
            vertex_limit: 10_000,
        }
    }
}

pub const DILATABILITY_TOL: f64 = 1e-8;
pub const HESSIAN_REL_TOL: f64 = 1e-3;
pub const GRADIENT_REL_TOL: f64 = 1e-4;
pub const CONJUGATE_MARGIN_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const PROX_IDENTITY_TOL: f64 = 1e-10;
pub const GRADIENT_INVERSE_TOL: f64 = 1e-8;
pub const BREGMAN_REL_TOL: f64 = 1e-6;
pub const EQUIVALENCE_TOL: f64 = 1e-9;
pub const DIAMETER_ROUNDING: f64 = 1e-12;

// Stream tags; sample `i` of a check uses stream `tag << 40 | i`.
const TAG_DILATE: u64 = 1;
const TAG_HESSIAN: u64 = 2;
const TAG_GRADIENT: u64 = 3;
const TAG_CONJUGATE: u64 = 4;
const TAG_ORACLE: u64 = 5;
const TAG_IDENTITY: u64 = 6;
const TAG_DIAMETER: u64 = 7;
const TAG_EQUIV: u64 = 8;

fn rng(cfg: &SuiteConfig, tag: u64, i: u64) -> SampleRng {
    rng_for(cfg.seed, (tag << 40) | i)
}

/// Evaluates `f(0..n)` in index order, in parallel when the feature is on.
fn sample_map<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

struct CheckBuilder<'a> {
    domain: &'a str,
    out: Vec<Check>,
}

impl CheckBuilder<'_> {
    /// Folds per-sample statistics into the worst one. `None` marks a sample
    /// where the check does not apply (a zero direction on a one-point
    /// domain); a check with no applicable samples holds vacuously.
    fn push(&mut self, name: &str, relation: Relation, threshold: f64, stats: Vec<Result<Option<f64>>>) {
        let mut worst = match relation {
            Relation::AtMost => f64::NEG_INFINITY,
            Relation::AtLeast => f64::INFINITY,
        };
        let mut samples = 0;
        let mut error = None;
        for s in stats {
            match s {
                Ok(Some(v)) => {
                    samples += 1;
                    worst = match relation {
                        _ if v.is_nan() || worst.is_nan() => f64::NAN,
                        Relation::AtMost => worst.max(v),
                        Relation::AtLeast => worst.min(v),
                    };
                }
                Ok(None) => {}
                Err(e) => {
                    error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let within = match relation {
            Relation::AtMost => worst <= threshold,
            Relation::AtLeast => worst >= threshold,
        };
        self.out.push(Check {
            domain: self.domain.to_string(),
            name: name.to_string(),
            statistic: worst,
            relation,
            threshold,
            samples,
            passed: error.is_none() && (samples == 0 || within),
            error,
        });
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norms(v: &[f64]) -> (f64, f64) {
    (v.iter().map(|x| x.abs()).sum(), v.iter().map(|x| x * x).sum())
}

fn axpy(x: &[f64], h: f64, m: &[f64]) -> Vec<f64> {
    x.iter().zip(m).map(|(a, b)| a + h * b).collect()
}

/// Rescales `m` so the largest relative move `|m_i|/x_i` is 1; `None` for `m = 0`.
fn normalize_direction(x: &[f64], m: &[f64]) -> Option<Vec<f64>> {
    let r = x.iter().zip(m).fold(0.0, |r: f64, (xi, mi)| if *mi == 0.0 { r } else { r.max(mi.abs() / xi) });
    (r > 0.0 && r.is_finite()).then(|| m.iter().map(|v| v / r).collect())
}

type Sampler<'a> = dyn Fn(&mut SampleRng) -> Vec<f64> + Sync + 'a;

/// One unscaled regularizer under test together with how to sample its domain.
struct Subject<'a> {
    label: &'static str,
    dgf: &'a dyn Regularizer,
    sample: &'a Sampler<'a>,
    vertices: Option<&'a [Vec<f64>]>,
    /// Hessian directions span the whole space rather than the tangent space.
    full_space: bool,
}

impl Subject<'_> {
    fn direction(&self, rng: &mut SampleRng, x: &[f64]) -> Vec<f64> {
        if self.full_space {
            gaussian(rng, x.len())
        } else {
            let other = (self.sample)(rng);
            other.iter().zip(x).map(|(a, b)| a - b).collect()
        }
    }
}

const HESSIAN_STEP: f64 = 1e-4;
const GRADIENT_STEP: f64 = 1e-5;

fn dgf_checks(b: &mut CheckBuilder<'_>, s: &Subject<'_>, cfg: &SuiteConfig) {
    let d = s.dgf;
    let m_q = d.max_l1();
    let name = |check: &str| format!("{}/{check}", s.label);

    // Finite-difference quadratic forms mᵀ∇²d(x)m against ‖m‖₂² and ‖m‖₁²/M.
    let forms = sample_map(cfg.hessian_samples, |i| -> Result<Option<(f64, f64)>> {
        let mut r = rng(cfg, TAG_HESSIAN, i);
        let x = (s.sample)(&mut r);
        let Some(m) = normalize_direction(&x, &s.direction(&mut r, &x)) else { return Ok(None) };
        let gp = d.gradient(&axpy(&x, HESSIAN_STEP, &m))?;
        let gm = d.gradient(&axpy(&x, -HESSIAN_STEP, &m))?;
        let q = m.iter().zip(gp.iter().zip(&gm)).map(|(mi, (a, c))| mi * (a - c)).sum::<f64>() / (2.0 * HESSIAN_STEP);
        let (l1, l2sq) = norms(&m);
        Ok(Some((q / l2sq, q * m_q / (l1 * l1))))
    });
    let lower = 1.0 - HESSIAN_REL_TOL;
    b.push(
        &name("hessian-l2"),
        Relation::AtLeast,
        lower,
        forms.iter().map(|f| f.as_ref().map(|o| o.map(|v| v.0)).map_err(Clone::clone)).collect(),
    );
    b.push(&name("hessian-l1"), Relation::AtLeast, lower, forms.into_iter().map(|f| f.map(|o| o.map(|v| v.1))).collect());

    // Directional derivative of the value against the gradient.
    let fd = sample_map(cfg.gradient_samples, |i| -> Result<Option<f64>> {
        let mut r = rng(cfg, TAG_GRADIENT, i);
        let x = (s.sample)(&mut r);
        let Some(m) = normalize_direction(&x, &s.direction(&mut r, &x)) else { return Ok(None) };
        let slope = (d.value(&axpy(&x, GRADIENT_STEP, &m))? - d.value(&axpy(&x, -GRADIENT_STEP, &m))?) / (2.0 * GRADIENT_STEP);
        let exact = dot(&d.gradient(&x)?, &m);
        Ok(Some((slope - exact).abs() / (1.0 + exact.abs())))
    });
    b.push(&name("gradient-fd"), Relation::AtMost, GRADIENT_REL_TOL, fd);

    // Conjugate optimality against vertices and sampled points.
    let oracle: Vec<Result<(Vec<f64>, f64)>> = s
        .vertices
        .unwrap_or(&[])
        .iter()
        .cloned()
        .map(Ok)
        .chain(sample_map(cfg.oracle_samples, |i| Ok((s.sample)(&mut rng(cfg, TAG_ORACLE, i)))))
        .map(|p: Result<Vec<f64>>| p.and_then(|p| d.value(&p).map(|v| (p, v))))
        .collect();
    let oracle: Result<Vec<(Vec<f64>, f64)>> = oracle.into_iter().collect();
    let conj = sample_map(cfg.conjugate_samples, |i| -> Result<(f64, f64, f64)> {
        let oracle = oracle.as_ref().map_err(Clone::clone)?;
        let g: Vec<f64> = gaussian(&mut rng(cfg, TAG_CONJUGATE, i), d.dim()).iter().map(|v| 5.0 * v).collect();
        let c = d.conjugate(&g)?;
        let attained = dot(&g, &c.argmax) - d.value(&c.argmax)?;
        let best = oracle.iter().map(|(p, v)| dot(&g, p) - v).fold(f64::NEG_INFINITY, f64::max);
        let consistency = (c.value - attained).abs() / (1.0 + attained.abs());
        Ok((attained - best, consistency, d.residual(&c.argmax)))
    });
    let pick = |k: usize| -> Vec<Result<Option<f64>>> {
        conj.iter().map(|r| r.as_ref().map(|t| Some([t.0, t.1, t.2][k])).map_err(Clone::clone)).collect()
    };
    b.push(&name("conjugate-optimality"), Relation::AtLeast, -CONJUGATE_MARGIN_TOL, pick(0));
    b.push(&name("conjugate-value"), Relation::AtMost, CONJUGATE_MARGIN_TOL, pick(1));
    b.push(&name("conjugate-feasibility"), Relation::AtMost, FEASIBILITY_TOL, pick(2));

    // prox(c, 0) = c and ∇d*(∇d(x)) = x.
    let ids = sample_map(cfg.identity_samples, |i| -> Result<(f64, f64)> {
        let x = (s.sample)(&mut rng(cfg, TAG_IDENTITY, i));
        let prox = d.prox(&x, &vec![0.0; x.len()])?;
        let inv = d.conjugate_gradient(&d.gradient(&x)?)?;
        Ok((max_abs_diff(&prox, &x), max_abs_diff(&inv, &x)))
    });
    b.push(
        &name("prox-identity"),
        Relation::AtMost,
        PROX_IDENTITY_TOL,
        ids.iter().map(|r| r.as_ref().map(|t| Some(t.0)).map_err(Clone::clone)).collect(),
    );
    b.push(
        &name("gradient-inverse"),
        Relation::AtMost,
        GRADIENT_INVERSE_TOL,
        ids.into_iter().map(|r| r.map(|t| Some(t.1))).collect(),
    );

    // Bregman divergences: from the minimizer, bounded by the diameter; from
    // any interior point, bounded below by strong convexity. Odd samples
    // take a vertex for x.
    let center = d.center();
    let pairs = sample_map(cfg.diameter_pairs, |i| -> Result<Option<(f64, f64, f64)>> {
        let center = center.as_ref().map_err(Clone::clone)?;
        let mut r = rng(cfg, TAG_DIAMETER, i);
        let c = (s.sample)(&mut r);
        let x = if i % 2 == 1 { d.linear_maximize(&gaussian(&mut r, d.dim())).0 } else { (s.sample)(&mut r) };
        let from_center = d.bregman(&x, center)?;
        let div = d.bregman(&x, &c)?;
        let delta: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
        let (l1, l2sq) = norms(&delta);
        if l2sq == 0.0 {
            return Ok(None);
        }
        Ok(Some((from_center, div / (0.5 * l2sq), div * 2.0 * m_q / (l1 * l1))))
    });
    let pick = |k: usize| -> Vec<Result<Option<f64>>> {
        pairs.iter().map(|r| r.as_ref().map(|o| o.map(|t| [t.0, t.1, t.2][k])).map_err(Clone::clone)).collect()
    };
    // The chain bound is attained at vertices, so allow for rounding.
    let bound = d.diameter_bound() * (1.0 + DIAMETER_ROUNDING);
    b.push(&name("diameter"), Relation::AtMost, bound, pick(0));
    b.push(&name("bregman-l2"), Relation::AtLeast, 1.0 - BREGMAN_REL_TOL, pick(1));
    b.push(&name("bregman-l1"), Relation::AtLeast, 1.0 - BREGMAN_REL_TOL, pick(2));
}

/// Dilatability, DGF checks for both entropy DGFs, and the brute-force M_Q.
pub fn treeplex_checks(domain: &str, t: &Arc<Treeplex>, cfg: &SuiteConfig) -> Vec<Check> {
    let mut b = CheckBuilder { domain, out: Vec::new() };
    let (gamma, w) = compute_gamma_w(t);
    let dil = sample_map(cfg.dilatability_samples, |i| -> Result<Option<f64>> {
        let x = interior_strategy(t, &mut rng(cfg, TAG_DILATE, i));
        let global = dge_value(t, &gamma, &w, &x)?;
        let dilated = dilated_value(t, LocalDgf::Entropy, &gamma, &x)?;
        Ok(Some((global - dilated).abs() / (1.0 + dilated.abs())))
    });
    b.push("dilatability", Relation::AtMost, DILATABILITY_TOL, dil);

    let vertices = treeplex_vertices(t, cfg.vertex_limit);
    if let Some(v) = &vertices {
        let best = v.iter().map(|x| x.iter().sum::<f64>()).fold(0.0, f64::max);
        b.push("max-l1-oracle", Relation::AtMost, 1e-12, vec![Ok(Some((best - t.max_l1()).abs()))]);
    }
    let sample = |r: &mut SampleRng| interior_strategy(t, r);
    for (label, kind, full_space) in [("dge", DgfKind::Dge, true), ("dilated-entropy", DgfKind::DilatedEntropy, false)] {
        let setup = ProximalSetup::unscaled(t.clone(), kind);
        let subject = Subject { label, dgf: &setup, sample: &sample, vertices: vertices.as_deref(), full_space };
        dgf_checks(&mut b, &subject, cfg);
    }
    b.out
}

/// Dilatability and DGF checks for the chain DGE and dilated entropy, plus
/// the brute-force M_X when the vertices can be enumerated.
pub fn chain_checks(domain: &str, chain: &Arc<ScExtChain>, cfg: &SuiteConfig) -> Vec<Check> {
    let mut b = CheckBuilder { domain, out: Vec::new() };
    let alpha = chain_weights(chain).alpha_dge;
    let dil = sample_map(cfg.dilatability_samples, |i| -> Result<Option<f64>> {
        let x = chain.sample_interior(&mut rng(cfg, TAG_DILATE, i));
        let global = chain_value(chain, &alpha, ChainDgfKind::Dge, &x)?;
        let dilated = chain_value(chain, &alpha, ChainDgfKind::DilatedEntropy, &x)?;
        Ok(Some((global - dilated).abs() / (1.0 + dilated.abs())))
    });
    b.push("dilatability", Relation::AtMost, DILATABILITY_TOL, dil);

    let vertices = chain_vertices(chain, cfg.vertex_limit);
    if let Some(v) = &vertices {
        let best = v.iter().map(|x| x.iter().sum::<f64>()).fold(0.0, f64::max);
        b.push("max-l1-oracle", Relation::AtMost, 1e-12, vec![Ok(Some((best - chain.max_l1()).abs()))]);
    }
    let sample = |r: &mut SampleRng| chain.sample_interior(r);
    for (label, kind) in [("dge", ChainDgfKind::Dge), ("dilated-entropy", ChainDgfKind::DilatedEntropy)] {
        let dgf = ChainDgf::unscaled(chain.clone(), kind);
        let subject = Subject { label, dgf: &dgf, sample: &sample, vertices: vertices.as_deref(), full_space: false };
        dgf_checks(&mut b, &subject, cfg);
    }
    b.out
}

/// Chain encoding of `t` against the treeplex DGFs: weights, values and
/// conjugates through the index map.
pub fn equivalence_checks(domain: &str, t: &Arc<Treeplex>, cfg: &SuiteConfig) -> Vec<Check> {
    let mut b = CheckBuilder { domain, out: Vec::new() };
    let (chain, map) = chain_from_treeplex(t);
    let chain = Arc::new(chain);
    let tw = compute_weights(t);
    let cw = chain_weights(&chain);
    let diff = |a: &[f64], b: &[f64]| if a.len() == b.len() { max_abs_diff(a, b) } else { f64::INFINITY };
    b.push("weights-gamma", Relation::AtMost, 0.0, vec![Ok(Some(diff(&cw.alpha_dge, &tw.gamma.decision_points)))]);
    b.push("weights-beta", Relation::AtMost, 0.0, vec![Ok(Some(diff(&cw.alpha_dilated, &tw.beta.decision_points)))]);

    for (label, kind, ckind) in [
        ("dge", DgfKind::Dge, ChainDgfKind::Dge),
        ("dilated-entropy", DgfKind::DilatedEntropy, ChainDgfKind::DilatedEntropy),
    ] {
        let tree = ProximalSetup::unscaled(t.clone(), kind);
        let chained = ChainDgf::unscaled(chain.clone(), ckind);
        let stats = sample_map(cfg.conjugate_samples, |i| -> Result<(f64, f64)> {
            let mut r = rng(cfg, TAG_EQUIV, i);
            let x = interior_strategy(t, &mut r);
            let (vt, vc) = (tree.value(&x)?, chained.value(&map.to_chain(&x))?);
            let g: Vec<f64> = gaussian(&mut r, t.num_sequences()).iter().map(|v| 5.0 * v).collect();
            let ct = tree.conjugate(&g)?;
            let cc = chained.conjugate(&map.to_chain(&g))?;
            let value_gap = (vt - vc).abs() / (1.0 + vt.abs());
            Ok((value_gap, diff(&ct.argmax, &map.to_sequence_form(&cc.argmax))))
        });
        b.push(
            &format!("{label}/value"),
            Relation::AtMost,
            EQUIVALENCE_TOL,
            stats.iter().map(|r| r.as_ref().map(|t| Some(t.0)).map_err(Clone::clone)).collect(),
        );
        b.push(
            &format!("{label}/conjugate"),
            Relation::AtMost,
            EQUIVALENCE_TOL,
            stats.into_iter().map(|r| r.map(|t| Some(t.1))).collect(),
        );
    }
    b.out
}

/// All suites for both players of a game.
pub fn validate_game(game: &GameInstance, cfg: &SuiteConfig) -> Report {
    let mut checks = Vec::new();
    for (player, t) in [("player1", &game.treeplex_x), ("player2", &game.treeplex_y)] {
        checks.extend(treeplex_checks(player, t, cfg));
        let (chain, _) = chain_from_treeplex(t);
        checks.extend(chain_checks(&format!("{player}/chain"), &Arc::new(chain), cfg));
        checks.extend(equivalence_checks(&format!("{player}/equivalence"), t, cfg));
    }
    Report::new(game.name.clone(), cfg.seed, checks)
}

/// Chain suites for a chain file and its opponent chain, if any.
pub fn validate_chain_problem(name: &str, p: &ChainProblem, cfg: &SuiteConfig) -> Report {
    let mut checks = chain_checks("chain", &Arc::new(p.chain.clone()), cfg);
    if let Some(o) = &p.opponent {
        checks.extend(chain_checks("opponent", &Arc::new(o.clone()), cfg));
    }
    Report::new(name, cfg.seed, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::generate_kuhn;

    fn small() -> SuiteConfig {
        SuiteConfig {
            dilatability_samples: 50,
            hessian_samples: 20,
            gradient_samples: 20,
            conjugate_samples: 10,
            oracle_samples: 50,
            identity_samples: 10,
            diameter_pairs: 200,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn kuhn_passes_every_check() {
        let r = validate_game(&generate_kuhn(), &small());
        let failed: Vec<_> = r.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(r.find("player1", "dge/hessian-l1").is_some());
        assert!(r.find("player2/equivalence", "weights-gamma").is_some());
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let g = generate_kuhn();
        assert_eq!(validate_game(&g, &small()), validate_game(&g, &small()));
    }

    #[test]
    fn nan_and_errors_fail_a_check() {
        let mut b = CheckBuilder { domain: "d", out: Vec::new() };
        b.push("nan", Relation::AtMost, 1.0, vec![Ok(Some(0.0)), Ok(Some(f64::NAN))]);
        b.push("err", Relation::AtMost, 1.0, vec![Err(crate::Error::DomainError("x".into()))]);
        b.push("vacuous", Relation::AtMost, 1.0, vec![Ok(None)]);
        assert!(!b.out[0].passed && !b.out[1].passed);
        assert!(b.out[2].passed && b.out[2].samples == 0);
        assert!(b.out[0].statistic.is_nan());
    }
}
