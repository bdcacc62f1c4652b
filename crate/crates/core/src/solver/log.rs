//! Solver driver and per-iteration telemetry.
//!
//! Gap evaluations cost two matrix-vector products each and are not counted in
//! `gradient_computations`. Fields that do not apply to an algorithm are empty
//! in the CSV, and `wall_time_ms` is empty unless timing was requested, so
//! repeated runs produce identical bytes.

use std::fmt::Write as _;
use std::time::Instant;

use super::{saddle_gap, theoretical_bound, Algorithm, Egt, EgtAs, EgtAsConfig, MirrorProx, SaddlePointProblem};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "iteration,gradient_computations,gap,mu_x,mu_y,tau,bound,wall_time_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub gradient_computations: usize,
    pub gap: f64,
    pub mu_x: Option<f64>,
    pub mu_y: Option<f64>,
    pub tau: Option<f64>,
    pub bound: Option<f64>,
    pub wall_time_ms: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl IterationLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iteration,
            self.gradient_computations,
            self.gap,
            opt(self.mu_x),
            opt(self.mu_y),
            opt(self.tau),
            opt(self.bound),
            self.wall_time_ms.map(|t| format!("{t:.3}")).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    /// Every iteration up to 512, then powers of two.
    Default,
    Every(usize),
}

impl Cadence {
    pub fn should_log(self, t: usize) -> bool {
        match self {
            Cadence::Default => t <= 512 || t.is_power_of_two(),
            Cadence::Every(k) => k > 0 && t.is_multiple_of(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub algorithm: Algorithm,
    /// Iterations for EGT and MP; gradient computations for EGT/AS.
    pub budget: usize,
    pub cadence: Cadence,
    pub record_time: bool,
    pub egt_as: EgtAsConfig,
}

impl RunOptions {
    pub fn new(algorithm: Algorithm, budget: usize) -> Self {
        Self { algorithm, budget, cadence: Cadence::Default, record_time: false, egt_as: EgtAsConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub log: Vec<IterationLog>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub gradient_computations: usize,
    pub final_gap: f64,
    /// Whether every logged gap was within the theoretical bound; `None`
    /// when the algorithm has no bound.
    pub bound_satisfied: Option<bool>,
}

impl RunResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.log.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.log {
            let _ = writeln!(out, "{}", row.csv_row());
        }
        out
    }
}

struct Snapshot<'a> {
    t: usize,
    grads: usize,
    x: &'a [f64],
    y: &'a [f64],
    mu: Option<(f64, f64)>,
    tau: Option<f64>,
}

struct Recorder<'a> {
    p: &'a SaddlePointProblem,
    algorithm: Algorithm,
    start: Option<Instant>,
    log: Vec<IterationLog>,
    omega: (f64, f64),
}

impl Recorder<'_> {
    fn record(&mut self, s: Snapshot<'_>) {
        let gap = saddle_gap(self.p, s.x, s.y);
        self.log.push(IterationLog {
            iteration: s.t,
            gradient_computations: s.grads,
            gap,
            mu_x: s.mu.map(|m| m.0),
            mu_y: s.mu.map(|m| m.1),
            tau: s.tau,
            bound: theoretical_bound(self.algorithm, s.t, self.p.opnorm(), self.omega.0, self.omega.1),
            wall_time_ms: self.start.map(|st| st.elapsed().as_secs_f64() * 1e3),
        });
    }
}

pub fn run(p: &SaddlePointProblem, opts: &RunOptions) -> Result<RunResult> {
    if opts.budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let mut rec = Recorder {
        p,
        algorithm: opts.algorithm,
        start: opts.record_time.then(Instant::now),
        log: Vec::new(),
        omega: (p.x.diameter_bound(), p.y.diameter_bound()),
    };
    let (x, y, iterations, grads) = match opts.algorithm {
        Algorithm::Egt => {
            let mut s = Egt::initialize(p)?;
            for t in 1..=opts.budget {
                s.iterate(p)?;
                if opts.cadence.should_log(t) || t == opts.budget {
                    rec.record(Snapshot {
                        t,
                        grads: s.gradient_computations,
                        x: &s.x,
                        y: &s.y,
                        mu: Some((s.mu_x, s.mu_y)),
                        tau: Some(s.tau),
                    });
                }
            }
            (s.x, s.y, s.t, s.gradient_computations)
        }
        Algorithm::MirrorProx => {
            let mut s = MirrorProx::initialize(p)?;
            for t in 1..=opts.budget {
                s.iterate(p)?;
                if opts.cadence.should_log(t) || t == opts.budget {
                    rec.record(Snapshot {
                        t,
                        grads: s.gradient_computations,
                        x: &s.avg_x,
                        y: &s.avg_y,
                        mu: None,
                        tau: None,
                    });
                }
            }
            (s.avg_x, s.avg_y, s.t, s.gradient_computations)
        }
        Algorithm::EgtAs => {
            let mut s = EgtAs::initialize(p, opts.egt_as)?;
            let mut last_logged = None;
            while s.gradient_computations < opts.budget {
                s.step(p)?;
                if opts.cadence.should_log(s.t) {
                    last_logged = Some(s.t);
                    rec.record(Snapshot {
                        t: s.t,
                        grads: s.gradient_computations,
                        x: s.x(),
                        y: s.y(),
                        mu: Some((s.mu_x(), s.mu_y())),
                        tau: Some(s.tau),
                    });
                }
            }
            if last_logged != Some(s.t) {
                rec.record(Snapshot {
                    t: s.t,
                    grads: s.gradient_computations,
                    x: s.x(),
                    y: s.y(),
                    mu: Some((s.mu_x(), s.mu_y())),
                    tau: Some(s.tau),
                });
            }
            (s.x().to_vec(), s.y().to_vec(), s.t, s.gradient_computations)
        }
    };
    let final_gap = rec.log.last().map_or_else(|| saddle_gap(p, &x, &y), |l| l.gap);
    let bound_satisfied = match opts.algorithm {
        Algorithm::EgtAs => None,
        _ => Some(rec.log.iter().all(|l| l.bound.is_some_and(|b| l.gap <= b))),
    };
    Ok(RunResult { log: rec.log, x, y, iterations, gradient_computations: grads, final_gap, bound_satisfied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgf::DgfKind;
    use crate::solver::tests::kuhn_problem;

    #[test]
    fn cadence() {
        let c = Cadence::Default;
        assert!(c.should_log(1) && c.should_log(512) && c.should_log(1024));
        assert!(!c.should_log(513) && !c.should_log(1000));
        assert!(Cadence::Every(10).should_log(20) && !Cadence::Every(10).should_log(21));
    }

    #[test]
    fn csv_rows_leave_missing_fields_empty() {
        let p = kuhn_problem(DgfKind::Dge);
        let r = run(&p, &RunOptions::new(Algorithm::MirrorProx, 3)).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(&fields[3..6], &["", "", ""]);
        assert_eq!(fields[7], "");
    }

    #[test]
    fn runs_are_repeatable() {
        let p = kuhn_problem(DgfKind::Dge);
        for alg in [Algorithm::Egt, Algorithm::MirrorProx, Algorithm::EgtAs] {
            let a = run(&p, &RunOptions::new(alg, 60)).unwrap().to_csv();
            let b = run(&p, &RunOptions::new(alg, 60)).unwrap().to_csv();
            assert_eq!(a, b);
        }
    }
}
