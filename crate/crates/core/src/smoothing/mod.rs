//! Heat-kernel smoothing `P_t f` and its spatial derivatives up to third order.
//!
//! Polynomials, `|x|` and the `|x|^a` profile are smoothed in closed form (the
//! latter through the scale-free profile `psi_a`); everything else goes
//! through kink-aware composite Gauss–Legendre quadrature in kernel units.

mod closed;
mod convolve;
pub(crate) mod quadrature;

pub use closed::{caloric_polynomial, psi_profile, smooth_abs};
pub use convolve::quadrature_convolve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::SeparableObjective;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothingError {
    #[error("t must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("derivative order {0} exceeds 3")]
    Order(usize),
    #[error("profile exponent {0} outside [1, 2]")]
    Exponent(f64),
    #[error("invalid quadrature spec: {0}")]
    Spec(String),
    #[error("dimension mismatch: objective has {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("quadrature did not reach rel_tol {rel_tol:e}: achieved {achieved:e} (estimate {estimate})")]
    Quadrature { achieved: f64, rel_tol: f64, estimate: f64 },
}

pub(crate) fn check_order(order: usize) -> Result<(), SmoothingError> {
    if order > 3 {
        return Err(SmoothingError::Order(order));
    }
    Ok(())
}

pub(crate) fn check_scale(t: f64) -> Result<(), SmoothingError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(SmoothingError::NonPositiveScale(t));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Integration window `|z| <= truncation` in units of `2 sqrt t`.
    pub truncation: f64,
    /// Gauss–Legendre nodes per panel.
    pub panel_order: usize,
    /// Adaptive bisections allowed beyond the structural panels.
    pub max_panels: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            truncation: 12.0,
            panel_order: 32,
            max_panels: 4096,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), SmoothingError> {
        if !(self.truncation >= 8.0) {
            return Err(SmoothingError::Spec(format!(
                "truncation {} must be >= 8",
                self.truncation
            )));
        }
        if self.panel_order < 8 {
            return Err(SmoothingError::Spec(format!(
                "panel_order {} must be >= 8",
                self.panel_order
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(SmoothingError::Spec(format!("rel_tol {} must be > 0", self.rel_tol)));
        }
        Ok(())
    }
}

/// Value and the first `order` derivatives of a one-dimensional smoothed function.
/// Entries beyond `order` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1D {
    pub order: usize,
    pub derivs: [f64; 4],
}

impl Jet1D {
    pub fn new(order: usize, mut derivs: [f64; 4]) -> Self {
        for d in derivs.iter_mut().skip(order + 1) {
            *d = 0.0;
        }
        Self { order, derivs }
    }

    pub fn value(&self) -> f64 {
        self.derivs[0]
    }

    pub fn d(&self, k: usize) -> Option<f64> {
        (k <= self.order).then(|| self.derivs[k])
    }

    pub(crate) fn scaled(mut self, c: f64) -> Self {
        for d in &mut self.derivs {
            *d *= c;
        }
        self
    }

    pub(crate) fn add_scaled(mut self, other: &Jet1D, c: f64) -> Self {
        for (d, o) in self.derivs.iter_mut().zip(other.derivs) {
            *d += c * o;
        }
        self
    }
}

/// `P_t f` and its derivatives at one point. Derivative fields above the
/// requested order are `None`; `laplacian` needs order 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedJet {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Option<Vec<f64>>,
    pub hess: Option<Vec<Vec<f64>>>,
    pub third: Option<Vec<Vec<Vec<f64>>>>,
    pub laplacian: Option<f64>,
}

impl SmoothedJet {
    fn from_coordinates(t: f64, x: &[f64], order: usize, coords: &[Jet1D]) -> Self {
        let n = x.len();
        let value = coords.iter().map(|j| j.derivs[0]).sum();
        let grad = (order >= 1).then(|| coords.iter().map(|j| j.derivs[1]).collect());
        let hess = (order >= 2).then(|| {
            let mut h = vec![vec![0.0; n]; n];
            for (i, j) in coords.iter().enumerate() {
                h[i][i] = j.derivs[2];
            }
            h
        });
        let third = (order >= 3).then(|| {
            let mut d = vec![vec![vec![0.0; n]; n]; n];
            for (i, j) in coords.iter().enumerate() {
                d[i][i][i] = j.derivs[3];
            }
            d
        });
        let laplacian = (order >= 2).then(|| coords.iter().map(|j| j.derivs[2]).sum());
        Self {
            t,
            x: x.to_vec(),
            value,
            grad,
            hess,
            third,
            laplacian,
        }
    }

    pub fn grad_norm(&self) -> Option<f64> {
        self.grad.as_ref().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Smallest Hessian eigenvalue.
    pub fn lambda_min(&self) -> Option<f64> {
        let h = self.hess.as_ref()?;
        let n = h.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| h[i][j]);
        Some(m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// `P_t f` and derivatives up to `order` at `x`, assembled coordinate by coordinate.
pub fn smooth_eval(
    obj: &SeparableObjective,
    t: f64,
    x: &[f64],
    order: usize,
    spec: &QuadratureSpec,
) -> Result<SmoothedJet, SmoothingError> {
    check_scale(t)?;
    check_order(order)?;
    spec.validate()?;
    if x.len() != obj.dim() {
        return Err(SmoothingError::Dimension {
            expected: obj.dim(),
            got: x.len(),
        });
    }
    let coords = obj
        .coords
        .iter()
        .zip(x)
        .map(|(f, &xi)| convolve::smooth_coordinate(f, t, xi, order, spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SmoothedJet::from_coordinates(t, x, order, &coords))
}

/// Jet of a single coordinate of a separable objective.
pub fn smooth_eval_1d(
    f: &crate::objective::Objective1D,
    t: f64,
    x: f64,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<Jet1D, SmoothingError> {
    check_scale(t)?;
    check_order(order)?;
    spec.validate()?;
    convolve::smooth_coordinate(f, t, x, order, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{make_builtin, Params};
    use std::f64::consts::PI;

    fn build(name: &str, kv: &[(&str, f64)]) -> SeparableObjective {
        let params: Params = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_builtin(name, &params).unwrap()
    }

    #[test]
    fn monomial_at_origin() {
        let j = smooth_eval(&build("monomial", &[]), 0.5, &[0.0], 2, &QuadratureSpec::default()).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.hess, Some(vec![vec![2.0]]));
        assert_eq!(j.third, None);
    }

    #[test]
    fn squared_norm_in_two_dimensions() {
        let j = smooth_eval(
            &build("monomial", &[("dim", 2.0)]),
            0.25,
            &[0.0, 0.0],
            3,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_eq!(j.value, 1.0);
        let h = j.hess.unwrap();
        assert_eq!(h[0][1], 0.0);
        assert_eq!(j.laplacian, Some(h[0][0] + h[1][1]));
    }

    #[test]
    fn abs_hessian_at_inverse_pi() {
        let j = smooth_eval(&build("abs", &[]), 1.0 / PI, &[0.0], 2, &QuadratureSpec::default()).unwrap();
        assert!((j.hess.unwrap()[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let f = build("abs", &[]);
        let spec = QuadratureSpec::default();
        assert!(matches!(
            smooth_eval(&f, 0.0, &[0.0], 0, &spec),
            Err(SmoothingError::NonPositiveScale(_))
        ));
        assert!(matches!(
            smooth_eval(&f, 1.0, &[0.0], 4, &spec),
            Err(SmoothingError::Order(4))
        ));
        assert!(matches!(
            smooth_eval(&f, 1.0, &[0.0, 1.0], 0, &spec),
            Err(SmoothingError::Dimension { .. })
        ));
        let bad = QuadratureSpec {
            truncation: 4.0,
            ..spec
        };
        assert!(matches!(
            smooth_eval(&f, 1.0, &[0.0], 0, &bad),
            Err(SmoothingError::Spec(_))
        ));
    }

    #[test]
    fn decomposed_and_direct_quadrature_agree() {
        let spec = QuadratureSpec::default();
        for (name, kv) in [
            ("multi_valley", vec![]),
            ("nonsmooth_linear", vec![]),
            ("nonsmooth_quadratic", vec![]),
            ("asymmetric_cusp", vec![]),
            ("abs_power", vec![("a", 1.3)]),
        ] {
            let f = build(name, &kv);
            for (t, x) in [(0.3, 0.4), (0.01, -0.05), (2.0, 2.5)] {
                let a = smooth_eval_1d(&f.coords[0], t, x, 3, &spec).unwrap();
                let b = quadrature_convolve(&f.coords[0], t, x, 3, &spec).unwrap();
                for k in 0..=3 {
                    let (u, v) = (a.derivs[k], b.derivs[k]);
                    assert!(
                        (u - v).abs() < 1e-8 * v.abs().max(1.0),
                        "{name} t={t} x={x} k={k}: {u} vs {v}"
                    );
                }
            }
        }
    }
}
