//! Excessive gap technique with the theoretical parameter schedule.
//!
//! Matrix-vector products per call: 2 in [`Egt::initialize`], 3 per
//! [`Egt::iterate`].

use super::{blend, scaled, SaddlePointProblem};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Egt {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mu_x: f64,
    pub mu_y: f64,
    /// Step size of the last iteration; 0 before the first.
    pub tau: f64,
    pub gradient_computations: usize,
}

/// `g_{μx}(y) − f_{μy}(x)`, nonnegative while the excessive-gap condition holds.
pub fn excessive_gap(p: &SaddlePointProblem, x: &[f64], y: &[f64], mu_x: f64, mu_y: f64) -> Result<f64> {
    excessive_gap_from_products(p, &p.atx(x), &p.ay(y), mu_x, mu_y)
}

/// Same as [`excessive_gap`], given `Aᵀx` and `Ay`.
pub(crate) fn excessive_gap_from_products(
    p: &SaddlePointProblem,
    atx: &[f64],
    ay: &[f64],
    mu_x: f64,
    mu_y: f64,
) -> Result<f64> {
    let f = mu_y * p.y.conjugate(&scaled(atx, 1.0 / mu_y))?.value;
    let g = -mu_x * p.x.conjugate(&scaled(ay, -1.0 / mu_x))?.value;
    Ok(g - f)
}

impl Egt {
    pub fn initialize(p: &SaddlePointProblem) -> Result<Self> {
        let mu = p.step_norm();
        Self::initialize_with(p, mu, mu)
    }

    pub(crate) fn initialize_with(p: &SaddlePointProblem, mu_x: f64, mu_y: f64) -> Result<Self> {
        let x_center = p.x.center()?;
        let y = p.y.conjugate_gradient(&scaled(&p.atx(&x_center), 1.0 / mu_y))?;
        let x = p.x.prox(&x_center, &scaled(&p.ay(&y), 1.0 / mu_x))?;
        p.check_feasible(&x, &y)?;
        Ok(Self { t: 0, x, y, mu_x, mu_y, tau: 0.0, gradient_computations: 2 })
    }

    pub fn iterate(&mut self, p: &SaddlePointProblem) -> Result<()> {
        self.t += 1;
        let tau = 2.0 / (self.t as f64 + 2.0);
        if self.t.is_multiple_of(2) {
            self.shrink_x(p, tau)?;
        } else {
            self.shrink_y(p, tau)?;
        }
        self.tau = tau;
        self.gradient_computations += 3;
        p.check_feasible(&self.x, &self.y)
    }

    fn shrink_x(&mut self, p: &SaddlePointProblem, tau: f64) -> Result<()> {
        let x_bar = p.x.conjugate_gradient(&scaled(&p.ay(&self.y), -1.0 / self.mu_x))?;
        let x_hat = blend(&self.x, &x_bar, tau);
        let y_bar = p.y.conjugate_gradient(&scaled(&p.atx(&x_hat), 1.0 / self.mu_y))?;
        let step = tau / ((1.0 - tau) * self.mu_x);
        let x_tilde = p.x.prox(&x_bar, &scaled(&p.ay(&y_bar), step))?;
        self.x = blend(&self.x, &x_tilde, tau);
        self.y = blend(&self.y, &y_bar, tau);
        self.mu_x *= 1.0 - tau;
        Ok(())
    }

    fn shrink_y(&mut self, p: &SaddlePointProblem, tau: f64) -> Result<()> {
        let y_bar = p.y.conjugate_gradient(&scaled(&p.atx(&self.x), 1.0 / self.mu_y))?;
        let y_hat = blend(&self.y, &y_bar, tau);
        let x_bar = p.x.conjugate_gradient(&scaled(&p.ay(&y_hat), -1.0 / self.mu_x))?;
        let step = -tau / ((1.0 - tau) * self.mu_y);
        let y_tilde = p.y.prox(&y_bar, &scaled(&p.atx(&x_bar), step))?;
        self.y = blend(&self.y, &y_tilde, tau);
        self.x = blend(&self.x, &x_bar, tau);
        self.mu_y *= 1.0 - tau;
        Ok(())
    }
}
