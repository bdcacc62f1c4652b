//! Mirror prox with constant step `η = 1/‖A‖`; 4 matrix-vector products per
//! iteration. The output iterate is the running average of the extrapolated
//! points `w`.

use super::{scaled, SaddlePointProblem};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorProx {
    pub t: usize,
    pub eta: f64,
    pub z_x: Vec<f64>,
    pub z_y: Vec<f64>,
    pub avg_x: Vec<f64>,
    pub avg_y: Vec<f64>,
    pub gradient_computations: usize,
}

impl MirrorProx {
    pub fn initialize(p: &SaddlePointProblem) -> Result<Self> {
        let z_x = p.x.center()?;
        let z_y = p.y.center()?;
        Ok(Self {
            t: 0,
            eta: 1.0 / p.step_norm(),
            avg_x: z_x.clone(),
            avg_y: z_y.clone(),
            z_x,
            z_y,
            gradient_computations: 0,
        })
    }

    pub fn iterate(&mut self, p: &SaddlePointProblem) -> Result<()> {
        let eta = self.eta;
        let w_x = p.x.prox(&self.z_x, &scaled(&p.ay(&self.z_y), eta))?;
        let w_y = p.y.prox(&self.z_y, &scaled(&p.atx(&self.z_x), -eta))?;
        self.z_x = p.x.prox(&self.z_x, &scaled(&p.ay(&w_y), eta))?;
        self.z_y = p.y.prox(&self.z_y, &scaled(&p.atx(&w_x), -eta))?;
        self.t += 1;
        self.gradient_computations += 4;
        // Constant η makes the η-weighted average a plain running mean.
        let k = self.t as f64;
        for (a, w) in self.avg_x.iter_mut().zip(&w_x) {
            *a += (w - *a) / k;
        }
        for (a, w) in self.avg_y.iter_mut().zip(&w_y) {
            *a += (w - *a) / k;
        }
        p.check_feasible(&self.z_x, &self.z_y)?;
        p.check_feasible(&self.avg_x, &self.avg_y)
    }
}
