//! EGT with aggressive stepsizing, μ balancing and initial μ fitting.
//!
//! `A·y` and `Aᵀ·x` of the current iterates are carried along and updated by
//! linearity, so each attempted step costs 3 matrix-vector products and the
//! excessive-gap check costs none. Rejected attempts are counted.

use super::egt::excessive_gap_from_products;
use super::{blend, scaled, SaddlePointProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgtAsConfig {
    pub mu_start: f64,
    pub mu_growth: f64,
    /// Fitting stops once the excessive gap exceeds this value.
    pub fit_target: f64,
    pub tau_start: f64,
    pub tau_min: f64,
}

impl Default for EgtAsConfig {
    fn default() -> Self {
        Self { mu_start: 1e-6, mu_growth: 1.2, fit_target: 0.1, tau_start: 0.5, tau_min: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Iterates {
    x: Vec<f64>,
    y: Vec<f64>,
    /// `A·y`.
    ay: Vec<f64>,
    /// `Aᵀ·x`.
    atx: Vec<f64>,
    mu_x: f64,
    mu_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgtAs {
    config: EgtAsConfig,
    state: Iterates,
    /// Accepted steps.
    pub t: usize,
    pub tau: f64,
    pub rejected: usize,
    pub gradient_computations: usize,
    /// Smoothing chosen by the initial fit.
    pub fitted_mu: f64,
}

impl EgtAs {
    pub fn initialize(p: &SaddlePointProblem, config: EgtAsConfig) -> Result<Self> {
        if !(config.mu_start > 0.0 && config.mu_growth > 1.0 && config.tau_start > 0.0 && config.tau_start < 1.0) {
            return Err(Error::InvalidParameter(format!("invalid EGT/AS configuration {config:?}")));
        }
        let x_center = p.x.center()?;
        let atx_center = p.atx(&x_center);
        let mut grads = 1;
        let cap = p.step_norm();
        let mut mu = config.mu_start.min(cap);
        let state = loop {
            let y = p.y.conjugate_gradient(&scaled(&atx_center, 1.0 / mu))?;
            let ay = p.ay(&y);
            let x = p.x.prox(&x_center, &scaled(&ay, 1.0 / mu))?;
            let atx = p.atx(&x);
            grads += 2;
            let gap = excessive_gap_from_products(p, &atx, &ay, mu, mu)?;
            // At μ = ‖A‖ the condition holds by construction; stop there if
            // the target is never reached.
            if gap > config.fit_target || mu >= cap {
                break Iterates { x, y, ay, atx, mu_x: mu, mu_y: mu };
            }
            mu = (mu * config.mu_growth).min(cap);
        };
        p.check_feasible(&state.x, &state.y)?;
        Ok(Self {
            config,
            fitted_mu: state.mu_x,
            state,
            t: 0,
            tau: config.tau_start,
            rejected: 0,
            gradient_computations: grads,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.state.x
    }

    pub fn y(&self) -> &[f64] {
        &self.state.y
    }

    pub fn mu_x(&self) -> f64 {
        self.state.mu_x
    }

    pub fn mu_y(&self) -> f64 {
        self.state.mu_y
    }

    /// Excessive gap of the current iterates, from the carried products.
    pub fn excessive_gap(&self, p: &SaddlePointProblem) -> Result<f64> {
        let s = &self.state;
        excessive_gap_from_products(p, &s.atx, &s.ay, s.mu_x, s.mu_y)
    }

    /// Takes one accepted step, halving `τ` after each rejected attempt.
    pub fn step(&mut self, p: &SaddlePointProblem) -> Result<()> {
        let mut attempts = 0;
        loop {
            let trial = if self.state.mu_x >= self.state.mu_y {
                shrink_x(p, &self.state, self.tau)?
            } else {
                shrink_y(p, &self.state, self.tau)?
            };
            self.gradient_computations += 3;
            attempts += 1;
            let gap = excessive_gap_from_products(p, &trial.atx, &trial.ay, trial.mu_x, trial.mu_y)?;
            if gap >= 0.0 {
                p.check_feasible(&trial.x, &trial.y)?;
                self.state = trial;
                self.t += 1;
                return Ok(());
            }
            self.rejected += 1;
            self.tau /= 2.0;
            if self.tau < self.config.tau_min {
                return Err(Error::StallError { tau: self.tau, attempts });
            }
        }
    }
}

fn shrink_x(p: &SaddlePointProblem, s: &Iterates, tau: f64) -> Result<Iterates> {
    let x_bar = p.x.conjugate_gradient(&scaled(&s.ay, -1.0 / s.mu_x))?;
    let atx_bar = p.atx(&x_bar);
    let atx_hat = blend(&s.atx, &atx_bar, tau);
    let y_bar = p.y.conjugate_gradient(&scaled(&atx_hat, 1.0 / s.mu_y))?;
    let ay_bar = p.ay(&y_bar);
    let step = tau / ((1.0 - tau) * s.mu_x);
    let x_tilde = p.x.prox(&x_bar, &scaled(&ay_bar, step))?;
    let atx_tilde = p.atx(&x_tilde);
    Ok(Iterates {
        x: blend(&s.x, &x_tilde, tau),
        atx: blend(&s.atx, &atx_tilde, tau),
        y: blend(&s.y, &y_bar, tau),
        ay: blend(&s.ay, &ay_bar, tau),
        mu_x: (1.0 - tau) * s.mu_x,
        mu_y: s.mu_y,
    })
}

fn shrink_y(p: &SaddlePointProblem, s: &Iterates, tau: f64) -> Result<Iterates> {
    let y_bar = p.y.conjugate_gradient(&scaled(&s.atx, 1.0 / s.mu_y))?;
    let ay_bar = p.ay(&y_bar);
    let ay_hat = blend(&s.ay, &ay_bar, tau);
    let x_bar = p.x.conjugate_gradient(&scaled(&ay_hat, -1.0 / s.mu_x))?;
    let atx_bar = p.atx(&x_bar);
    let step = -tau / ((1.0 - tau) * s.mu_y);
    let y_tilde = p.y.prox(&y_bar, &scaled(&atx_bar, step))?;
    let ay_tilde = p.ay(&y_tilde);
    Ok(Iterates {
        y: blend(&s.y, &y_tilde, tau),
        ay: blend(&s.ay, &ay_tilde, tau),
        x: blend(&s.x, &x_bar, tau),
        atx: blend(&s.atx, &atx_bar, tau),
        mu_x: s.mu_x,
        mu_y: (1.0 - tau) * s.mu_y,
    })
}
