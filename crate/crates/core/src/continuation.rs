//! Predictor–corrector tracing of critical-point branches `t -> x_t` of `P_t f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::SeparableObjective;
use crate::smoothing::{smooth_eval, QuadratureSpec, SmoothedJet, SmoothingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error("newton did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NewtonDiverged { iterations: usize, grad_norm: f64 },
    #[error("hessian is degenerate (smallest eigenvalue {lambda:e})")]
    HessianDegenerate { lambda: f64 },
    #[error("invalid trace configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Constant,
    Secant,
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Geometric factor between consecutive scales; below 1 traces towards smaller `t`.
    pub step_ratio: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub lambda_floor: f64,
    pub predictor: Predictor,
    /// Tracing stops once `|x|` exceeds this radius.
    pub domain: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            t_end: 1e-4,
            step_ratio: 0.9,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            lambda_floor: 1e-8,
            predictor: Predictor::Secant,
            domain: 100.0,
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl TraceConfig {
    /// A configuration running from `t_start` to `t_end` with the default
    /// ratio pointing the right way.
    pub fn between(t_start: f64, t_end: f64) -> Self {
        let step_ratio = if t_end < t_start { 0.9 } else { 1.0 / 0.9 };
        Self {
            t_start,
            t_end,
            step_ratio,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ContinuationError> {
        let bad = |s: String| Err(ContinuationError::Config(s));
        if !(self.t_start > 0.0 && self.t_end > 0.0) {
            return bad(format!(
                "scales must be positive (t_start {}, t_end {})",
                self.t_start, self.t_end
            ));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio != 1.0 && self.step_ratio.is_finite()) {
            return bad(format!("step_ratio {} must be positive and != 1", self.step_ratio));
        }
        if self.t_end != self.t_start && (self.t_end < self.t_start) != (self.step_ratio < 1.0) {
            return bad(format!(
                "step_ratio {} moves away from t_end {} starting at {}",
                self.step_ratio, self.t_end, self.t_start
            ));
        }
        if !(self.newton_tol > 0.0) || !(self.lambda_floor > 0.0) || self.newton_max_iter == 0 {
            return bad("newton_tol, lambda_floor and newton_max_iter must be positive".into());
        }
        if !(self.domain > 0.0) {
            return bad(format!("domain radius {} must be positive", self.domain));
        }
        self.quadrature.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub energy: f64,
    pub laplacian: f64,
}

impl BranchPoint {
    pub fn from_jet(jet: &SmoothedJet) -> Self {
        Self {
            t: jet.t,
            x: jet.x.clone(),
            grad_norm: jet.grad_norm().unwrap_or(f64::NAN),
            lambda_min: jet.lambda_min().unwrap_or(f64::NAN),
            energy: jet.value,
            laplacian: jet.laplacian.unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    HessianDegenerate { lambda: f64 },
    NewtonDiverged,
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

fn hessian(jet: &SmoothedJet) -> DMatrix<f64> {
    let h = jet.hess.as_ref().expect("jet of order >= 2");
    DMatrix::from_fn(h.len(), h.len(), |i, j| h[i][j])
}

/// `grad Laplacian P_t f`, which equals `d/dt grad P_t f` by the heat equation.
fn grad_laplacian(jet: &SmoothedJet) -> DVector<f64> {
    let d = jet.third.as_ref().expect("jet of order 3");
    DVector::from_fn(d.len(), |i, _| (0..d.len()).map(|j| d[i][j][j]).sum())
}

fn velocity_from_jet(jet: &SmoothedJet, lambda_floor: f64) -> Result<Vec<f64>, ContinuationError> {
    let lambda = jet.lambda_min().unwrap_or(f64::NAN);
    if !(lambda > lambda_floor) {
        return Err(ContinuationError::HessianDegenerate { lambda });
    }
    let chol = hessian(jet)
        .cholesky()
        .ok_or(ContinuationError::HessianDegenerate { lambda })?;
    Ok((-chol.solve(&grad_laplacian(jet))).iter().copied().collect())
}

/// Damped Newton on `grad P_t f = 0`, halving the step while the gradient
/// norm does not decrease. Returns the point with its order-3 jet.
pub fn newton_polish(
    obj: &SeparableObjective,
    t: f64,
    x0: &[f64],
    cfg: &TraceConfig,
) -> Result<(Vec<f64>, SmoothedJet), ContinuationError> {
    let spec = &cfg.quadrature;
    let mut x = x0.to_vec();
    let mut jet = smooth_eval(obj, t, &x, 3, spec)?;
    let mut gnorm = jet.grad_norm().unwrap_or(f64::NAN);
    for _ in 0..cfg.newton_max_iter {
        if gnorm <= cfg.newton_tol {
            return Ok((x, jet));
        }
        let lambda = jet.lambda_min().unwrap_or(f64::NAN);
        if !(lambda.abs() >= cfg.lambda_floor * 1e-3) {
            return Err(ContinuationError::HessianDegenerate { lambda });
        }
        let g = DVector::from_vec(jet.grad.clone().expect("jet of order >= 1"));
        let Some(step) = hessian(&jet).lu().solve(&(-g)) else {
            return Err(ContinuationError::HessianDegenerate { lambda });
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi + alpha * si).collect();
            let trial_jet = smooth_eval(obj, t, &trial, 3, spec)?;
            let trial_norm = trial_jet.grad_norm().unwrap_or(f64::NAN);
            if trial_norm < gnorm {
                x = trial;
                jet = trial_jet;
                gnorm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if gnorm <= cfg.newton_tol {
        return Ok((x, jet));
    }
    Err(ContinuationError::NewtonDiverged {
        iterations: cfg.newton_max_iter,
        grad_norm: gnorm,
    })
}

/// Branch velocity `dx/dt = -(hess P_t f)^-1 grad Laplacian P_t f`.
pub fn continuation_rhs(
    obj: &SeparableObjective,
    t: f64,
    x: &[f64],
    cfg: &TraceConfig,
) -> Result<Vec<f64>, ContinuationError> {
    let jet = smooth_eval(obj, t, x, 3, &cfg.quadrature)?;
    velocity_from_jet(&jet, cfg.lambda_floor)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Why an attempted step was rejected.
enum Rejection {
    Degenerate,
    Diverged,
}

/// Smallest accepted step in `log t` before the branch is declared finished.
const MIN_LOG_STEP: f64 = 1e-9;

/// Traces the critical branch through the polished seed from `t_start`
/// towards `t_end`. Steps whose corrector fails, lands on a point with
/// `lambda_min <= lambda_floor` or jumps away from the prediction are retried
/// with half the step in `log t`; when the step collapses the trace ends.
pub fn trace_branch(obj: &SeparableObjective, cfg: &TraceConfig, x_seed: &[f64]) -> Result<Branch, ContinuationError> {
    cfg.validate()?;
    let (x0, jet0) = newton_polish(obj, cfg.t_start, x_seed, cfg)?;
    let mut points = vec![BranchPoint::from_jet(&jet0)];
    let mut xs = vec![x0];
    let mut velocity = velocity_from_jet(&jet0, cfg.lambda_floor).ok();
    let full_step = cfg.step_ratio.ln();
    let log_end = cfg.t_end.ln();
    let mut step = full_step;

    let termination = loop {
        let last = points.last().expect("branch has a point");
        let x_k = xs.last().expect("branch has a point").clone();
        let log_t = last.t.ln();
        let remaining = log_end - log_t;
        if remaining == 0.0 || remaining.signum() != full_step.signum() {
            break Termination::ReachedTEnd;
        }
        let dlog = if step.abs() >= remaining.abs() { remaining } else { step };
        let t_next = if dlog == remaining {
            cfg.t_end
        } else {
            (log_t + dlog).exp()
        };

        let x_pred: Vec<f64> = match cfg.predictor {
            Predictor::Constant => x_k.clone(),
            Predictor::Secant if xs.len() >= 2 => {
                let prev = &xs[xs.len() - 2];
                let ratio = dlog / (log_t - points[points.len() - 2].t.ln());
                x_k.iter().zip(prev).map(|(a, b)| a + (a - b) * ratio).collect()
            }
            Predictor::Secant => x_k.clone(),
            Predictor::Ode => match &velocity {
                Some(v) => x_k.iter().zip(v).map(|(a, vi)| a + last.t * vi * dlog).collect(),
                None => x_k.clone(),
            },
        };
        let bound = 0.5 * t_next.max(last.t).sqrt() + 2.0 * distance(&x_pred, &x_k) + 100.0 * cfg.newton_tol;

        let outcome = match newton_polish(obj, t_next, &x_pred, cfg) {
            Ok((x, jet)) => {
                let lambda = jet.lambda_min().unwrap_or(f64::NAN);
                if !(lambda > cfg.lambda_floor) {
                    Err(Rejection::Degenerate)
                } else if distance(&x, &x_k) > bound {
                    Err(Rejection::Diverged)
                } else {
                    Ok((x, jet))
                }
            }
            Err(ContinuationError::HessianDegenerate { .. }) => Err(Rejection::Degenerate),
            Err(ContinuationError::NewtonDiverged { .. }) => Err(Rejection::Diverged),
            Err(e) => return Err(e),
        };

        match outcome {
            Ok((x, jet)) => {
                velocity = velocity_from_jet(&jet, cfg.lambda_floor).ok();
                points.push(BranchPoint::from_jet(&jet));
                let escaped = norm(&x) > cfg.domain;
                xs.push(x);
                if escaped {
                    break Termination::LeftDomain;
                }
                step = (2.0 * step).abs().min(full_step.abs()) * full_step.signum();
            }
            Err(reason) => {
                step *= 0.5;
                if step.abs() < MIN_LOG_STEP {
                    let lambdas: Vec<f64> = points.iter().rev().take(3).map(|p| p.lambda_min).collect();
                    let shrinking = lambdas.windows(2).all(|w| w[0] < w[1]);
                    break match reason {
                        Rejection::Degenerate => Termination::HessianDegenerate { lambda: lambdas[0] },
                        Rejection::Diverged if shrinking => Termination::HessianDegenerate { lambda: lambdas[0] },
                        Rejection::Diverged => Termination::NewtonDiverged,
                    };
                }
            }
        }
    };
    Ok(Branch { points, termination })
}

/// Weights of the first-derivative stencil at `x0` over the nodes `xs`
/// (Fornberg's recursion).
fn first_derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        let mk = i.min(1);
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mk).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mk).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    /// Finite-difference slope of the branch energy in `t`.
    pub energy_slope: f64,
    pub laplacian: f64,
    pub defect: f64,
}

/// Compares the finite-difference slope of `E(t) = P_t f(x_t)` with the
/// Laplacian at every interior point. The slope uses the five surrounding
/// scales where available and three otherwise.
pub fn branch_energy_check(branch: &Branch) -> Vec<EnergyRecord> {
    let pts = &branch.points;
    let n = pts.len();
    if n < 3 {
        return Vec::new();
    }
    (1..n - 1)
        .map(|i| {
            let half = if i >= 2 && i + 2 < n { 2 } else { 1 };
            let window = &pts[i - half..=i + half];
            let ts: Vec<f64> = window.iter().map(|p| p.t).collect();
            let w = first_derivative_weights(pts[i].t, &ts);
            let slope: f64 = w.iter().zip(window).map(|(wk, p)| wk * p.energy).sum();
            EnergyRecord {
                t: pts[i].t,
                energy_slope: slope,
                laplacian: pts[i].laplacian,
                defect: (slope - pts[i].laplacian).abs(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalReport {
    pub maximal_suspected: bool,
    pub lambda_inf: f64,
}

/// Points at the terminal end inspected by [`detect_terminal`].
pub const TERMINAL_WINDOW: usize = 5;

/// Flags a branch as possibly maximal when it stopped on a degenerate Hessian
/// and `lambda_min` fell monotonically over its last points.
pub fn detect_terminal(branch: &Branch) -> TerminalReport {
    let tail: Vec<f64> = branch
        .points
        .iter()
        .rev()
        .take(TERMINAL_WINDOW)
        .map(|p| p.lambda_min)
        .collect();
    let lambda_inf = tail.iter().copied().fold(f64::INFINITY, f64::min);
    // tail is newest first, so a decreasing sequence reads increasing here
    let decreasing = tail.len() >= 2 && tail.windows(2).all(|w| w[0] < w[1]);
    TerminalReport {
        maximal_suspected: matches!(branch.termination, Termination::HessianDegenerate { .. }) && decreasing,
        lambda_inf,
    }
}
