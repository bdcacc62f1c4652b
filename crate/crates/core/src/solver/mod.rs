//! Saddle-point solvers for `min_x max_y xᵀAy` over two proximal domains.

mod egt;
mod egt_as;
mod log;
mod mp;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use egt::{excessive_gap, Egt};
pub use egt_as::{EgtAs, EgtAsConfig};
pub use log::{run, Cadence, IterationLog, RunOptions, RunResult, CSV_HEADER};
pub use mp::MirrorProx;

use crate::dgf::{DgfKind, ProximalSetup, Regularizer};
use crate::error::{Error, Result};
use crate::games::GameInstance;
use crate::scext::{ChainDgf, ChainDgfKind, ChainProblem};
use crate::sparse::CsrMatrix;

/// Tolerance for the feasibility check applied to every prox output.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Egt,
    MirrorProx,
    EgtAs,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Egt => "egt",
            Algorithm::MirrorProx => "mp",
            Algorithm::EgtAs => "egt-as",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "egt" => Ok(Algorithm::Egt),
            "mp" => Ok(Algorithm::MirrorProx),
            "egt-as" => Ok(Algorithm::EgtAs),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Two domains and the payoff matrix, shared immutably by solver states.
#[derive(Clone)]
pub struct SaddlePointProblem {
    pub x: Arc<dyn Regularizer>,
    pub y: Arc<dyn Regularizer>,
    a: CsrMatrix,
    at: CsrMatrix,
    opnorm: f64,
}

impl fmt::Debug for SaddlePointProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddlePointProblem")
            .field("dim_x", &self.x.dim())
            .field("dim_y", &self.y.dim())
            .field("nnz", &self.a.nnz())
            .field("opnorm", &self.opnorm)
            .finish()
    }
}

impl SaddlePointProblem {
    pub fn new(x: Arc<dyn Regularizer>, y: Arc<dyn Regularizer>, a: CsrMatrix) -> Result<Self> {
        if a.rows() != x.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), found: a.rows() });
        }
        if a.cols() != y.dim() {
            return Err(Error::DimensionMismatch { expected: y.dim(), found: a.cols() });
        }
        let at = a.transpose();
        let opnorm = a.max_abs();
        Ok(Self { x, y, a, at, opnorm })
    }

    /// Both treeplexes of `game` under the same DGF family, each scaled by its `M_Q`.
    pub fn from_game(game: &GameInstance, kind: DgfKind) -> Result<Self> {
        Self::new(
            Arc::new(ProximalSetup::new(game.treeplex_x.clone(), kind)),
            Arc::new(ProximalSetup::new(game.treeplex_y.clone(), kind)),
            game.payoff_matrix(),
        )
    }

    /// Both chains of `p` under the same chain DGF, each scaled by its `M_X`.
    pub fn from_chains(p: &ChainProblem, kind: DgfKind) -> Result<Self> {
        let kind = ChainDgfKind::try_from(kind)?;
        let a = p.payoff_matrix()?;
        let opponent = p.opponent.clone().expect("payoff_matrix checked the opponent");
        Self::new(
            Arc::new(ChainDgf::new(Arc::new(p.chain.clone()), kind)),
            Arc::new(ChainDgf::new(Arc::new(opponent), kind)),
            a,
        )
    }

    /// `max_ij |A_ij|`, the ℓ1→ℓ∞ operator norm.
    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    /// Norm used for step sizes and smoothing; 1 for the zero matrix.
    pub fn step_norm(&self) -> f64 {
        if self.opnorm > 0.0 {
            self.opnorm
        } else {
            1.0
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    /// `A·y`.
    pub fn ay(&self, y: &[f64]) -> Vec<f64> {
        self.a.mul_vec(y)
    }

    /// `Aᵀ·x`.
    pub fn atx(&self, x: &[f64]) -> Vec<f64> {
        self.at.mul_vec(x)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.a.bilinear(x, y)
    }

    pub(crate) fn check_feasible(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if !self.x.is_feasible(x, FEASIBILITY_TOL) {
            return Err(Error::NumericalFailure("x iterate left its domain".into()));
        }
        if !self.y.is_feasible(y, FEASIBILITY_TOL) {
            return Err(Error::NumericalFailure("y iterate left its domain".into()));
        }
        Ok(())
    }
}

/// `max_y' xᵀAy' − min_x' x'ᵀAy`; nonnegative, zero exactly at equilibrium.
pub fn saddle_gap(p: &SaddlePointProblem, x: &[f64], y: &[f64]) -> f64 {
    let best_y = p.y.linear_maximize(&p.atx(x)).1;
    let neg_ay: Vec<f64> = p.ay(y).iter().map(|v| -v).collect();
    let best_x = p.x.linear_maximize(&neg_ay).1;
    best_y + best_x
}

/// Convergence guarantee after `t ≥ 1` iterations; `None` for EGT/AS.
pub fn theoretical_bound(alg: Algorithm, t: usize, opnorm: f64, omega_x: f64, omega_y: f64) -> Option<f64> {
    let t = t as f64;
    match alg {
        Algorithm::Egt => Some(4.0 * opnorm * (omega_x * omega_y).sqrt() / (t + 1.0)),
        Algorithm::MirrorProx => Some(opnorm * (omega_x + omega_y) / (2.0 * t)),
        Algorithm::EgtAs => None,
    }
}

pub(crate) fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `(1 − τ)a + τb`.
pub(crate) fn blend(a: &[f64], b: &[f64], tau: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - tau) * x + tau * y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgf::{DgfKind, ProximalSetup};
    use crate::games::{generate_kuhn, matrix_game};

    pub(crate) fn kuhn_problem(kind: DgfKind) -> SaddlePointProblem {
        let g = generate_kuhn();
        SaddlePointProblem::new(
            Arc::new(ProximalSetup::new(g.treeplex_x.clone(), kind)),
            Arc::new(ProximalSetup::new(g.treeplex_y.clone(), kind)),
            g.payoff_matrix(),
        )
        .unwrap()
    }

    #[test]
    fn kuhn_egt_bound_at_one() {
        let p = kuhn_problem(DgfKind::Dge);
        assert!((p.opnorm() - 1.0 / 3.0).abs() < 1e-15);
        let b = theoretical_bound(Algorithm::Egt, 1, p.opnorm(), p.x.diameter_bound(), p.y.diameter_bound()).unwrap();
        assert!((b - 4.0 * 343.0 * 2f64.ln() / 6.0).abs() < 1e-9);
        assert!((b - 158.5).abs() < 0.05);
    }

    #[test]
    fn mp_bound_halves() {
        let a = theoretical_bound(Algorithm::MirrorProx, 10, 1.0, 2.0, 3.0).unwrap();
        let b = theoretical_bound(Algorithm::MirrorProx, 20, 1.0, 2.0, 3.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert_eq!(theoretical_bound(Algorithm::EgtAs, 10, 1.0, 2.0, 3.0), None);
    }

    #[test]
    fn pennies_equilibrium_has_zero_gap() {
        let g = matrix_game("pennies", &[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let p = SaddlePointProblem::new(
            Arc::new(ProximalSetup::new(g.treeplex_x.clone(), DgfKind::Dge)),
            Arc::new(ProximalSetup::new(g.treeplex_y.clone(), DgfKind::Dge)),
            g.payoff_matrix(),
        )
        .unwrap();
        let half = [1.0, 0.5, 0.5];
        assert!(saddle_gap(&p, &half, &half).abs() < 1e-12);
        assert!((saddle_gap(&p, &[1.0, 1.0, 0.0], &half) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn algorithm_names() {
        for a in [Algorithm::Egt, Algorithm::MirrorProx, Algorithm::EgtAs] {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
    }
}
