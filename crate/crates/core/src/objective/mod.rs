//! Piecewise-analytic objectives, the example catalog, and grid checks of the
//! growth, leading-profile and tail assumptions.
//!
//! A one-dimensional objective is a tiling of the real line by [`Piece`]s. Each
//! piece owns the interval `(lo, hi]` (the first piece also owns `lo = -inf`)
//! and evaluates to the sum of its [`Form`] terms. Multivariate objectives are
//! separable sums `f(x) = sum_i f_i(x_i)`.

mod catalog;
mod checks;
mod form;

pub use catalog::{catalog_keys, make_builtin, Params};
pub use checks::{check_growth, check_tail, estimate_omega, GridSpec, GrowthCheck, TOL_GROWTH};
pub use form::{ClosedTerm, Form};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("unknown catalog objective `{0}`")]
    UnknownKey(String),
    #[error("parameter `{name}` = {value} out of range: {expected}")]
    ParamOutOfRange {
        name: String,
        value: f64,
        expected: &'static str,
    },
    #[error("unknown parameter `{param}` for objective `{key}`")]
    UnknownParam { key: String, param: String },
    #[error("invalid objective: {0}")]
    Invalid(String),
    #[error("radius {radius} is not below the profile radius r0 = {r0}")]
    RadiusTooLarge { radius: f64, r0: f64 },
    #[error("dimension mismatch: objective has {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("failed to parse objective config: {0}")]
    Parse(String),
}

mod bound {
    //! Infinite interval ends are written as `null`.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize_lo<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn deserialize_hi<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::deserialize_lo")]
    pub lo: f64,
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::deserialize_hi")]
    pub hi: f64,
    pub terms: Vec<Form>,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, terms: Vec<Form>) -> Self {
        Self { lo, hi, terms }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.terms.iter().map(|f| f.value(y)).sum()
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.terms.iter().map(|f| f.derivative(y)).sum()
    }

    pub fn closed_parts(&self) -> Vec<ClosedTerm> {
        self.terms.iter().flat_map(|f| f.closed_parts()).collect()
    }

    /// Value minus the closed-form parts.
    pub fn residual(&self, y: f64) -> f64 {
        self.value(y) - self.closed_parts().iter().map(|c| c.eval(y)).sum::<f64>()
    }

    pub fn has_residual(&self) -> bool {
        self.terms
            .iter()
            .any(|f| f.is_oscillatory() || f.closed_parts().is_empty())
    }

    pub fn is_oscillatory(&self) -> bool {
        self.terms.iter().any(Form::is_oscillatory)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Objective1DRepr {
    pieces: Vec<Piece>,
    a: f64,
    c: f64,
    m: f64,
    #[serde(rename = "C")]
    tail_coeff: f64,
    r0: f64,
}

/// One-dimensional piecewise objective with its declared structural constants.
///
/// `a` is the leading exponent of the local profile `|x|^a`, `c` the global
/// quadratic growth constant, `tail_degree`/`tail_coeff` the polynomial tail
/// bound `f(x) <= C (1 + |x|^m)` and `r0` the radius on which the profile
/// description is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Objective1DRepr", into = "Objective1DRepr")]
pub struct Objective1D {
    pieces: Vec<Piece>,
    breakpoints: Vec<f64>,
    singular: Vec<f64>,
    pub a: f64,
    pub c: f64,
    pub tail_degree: f64,
    pub tail_coeff: f64,
    pub r0: f64,
}

impl TryFrom<Objective1DRepr> for Objective1D {
    type Error = ObjectiveError;

    fn try_from(r: Objective1DRepr) -> Result<Self, Self::Error> {
        Objective1D::new(r.pieces, r.a, r.c, r.m, r.tail_coeff, r.r0)
    }
}

impl From<Objective1D> for Objective1DRepr {
    fn from(o: Objective1D) -> Self {
        Objective1DRepr {
            pieces: o.pieces,
            a: o.a,
            c: o.c,
            m: o.tail_degree,
            tail_coeff: o.tail_coeff,
            r0: o.r0,
        }
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

impl Objective1D {
    /// Builds and validates an objective.
    ///
    /// The leading exponent is only required to be `>= 1` and `c >= 0` so that
    /// flatter-than-quadratic counterexamples such as `x^4` can be represented;
    /// [`Objective1D::is_admissible`] reports whether the standing assumptions
    /// (`a` in `[1, 2]`, `c > 0`) hold.
    pub fn new(
        pieces: Vec<Piece>,
        a: f64,
        c: f64,
        tail_degree: f64,
        tail_coeff: f64,
        r0: f64,
    ) -> Result<Self, ObjectiveError> {
        let invalid = |s: String| Err(ObjectiveError::Invalid(s));
        if pieces.is_empty() {
            return invalid("objective needs at least one piece".into());
        }
        if pieces[0].lo != f64::NEG_INFINITY {
            return invalid("first piece must start at -inf".into());
        }
        if pieces[pieces.len() - 1].hi != f64::INFINITY {
            return invalid("last piece must end at +inf".into());
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.lo < p.hi) {
                return invalid(format!("piece {i}: lo {} must be < hi {}", p.lo, p.hi));
            }
            if p.terms.is_empty() {
                return invalid(format!("piece {i} has no terms"));
            }
            for t in &p.terms {
                t.validate()
                    .map_err(|e| ObjectiveError::Invalid(format!("piece {i}: {e}")))?;
            }
            if i > 0 && pieces[i - 1].hi != p.lo {
                return invalid(format!("pieces {} and {i} leave a gap or overlap", i - 1));
            }
        }
        if !(a.is_finite() && a >= 1.0) {
            return invalid(format!("leading exponent a = {a} must be >= 1"));
        }
        if !(c.is_finite() && c >= 0.0) {
            return invalid(format!("growth constant c = {c} must be >= 0"));
        }
        if !(tail_degree.is_finite() && tail_degree >= 2.0) {
            return invalid(format!("tail degree m = {tail_degree} must be >= 2"));
        }
        if !(tail_coeff.is_finite() && tail_coeff > 0.0) {
            return invalid(format!("tail coefficient C = {tail_coeff} must be > 0"));
        }
        if !(r0.is_finite() && r0 > 0.0) {
            return invalid(format!("profile radius r0 = {r0} must be > 0"));
        }

        let mut bps: Vec<f64> = pieces.iter().skip(1).map(|p| p.lo).collect();
        let mut singular = Vec::new();
        for p in &pieces {
            for f in &p.terms {
                for s in f.singular_points() {
                    if s > p.lo && s < p.hi || s == p.lo || s == p.hi {
                        singular.push(s);
                    }
                    bps.push(s);
                }
            }
        }
        let obj = Self {
            pieces,
            breakpoints: sorted_unique(bps),
            singular: sorted_unique(singular),
            a,
            c,
            tail_degree,
            tail_coeff,
            r0,
        };
        let f0 = obj.eval(0.0);
        if f0 != 0.0 {
            return invalid(format!("objective must vanish at the origin, f(0) = {f0}"));
        }
        Ok(obj)
    }

    /// Skips validation; lets tests convolve descriptions that do not vanish at 0.
    #[cfg(test)]
    pub(crate) fn unchecked(pieces: Vec<Piece>) -> Self {
        let bps = pieces.iter().skip(1).map(|p| p.lo).collect();
        Self {
            pieces,
            breakpoints: sorted_unique(bps),
            singular: Vec::new(),
            a: 2.0,
            c: 1.0,
            tail_degree: 2.0,
            tail_coeff: 1.0,
            r0: 1.0,
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Sorted piece endpoints and declared kinks.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Points where some piece is not analytic up to its closed interval.
    pub fn singular_points(&self) -> &[f64] {
        &self.singular
    }

    /// Index of the piece owning `y`: intervals are `(lo, hi]`, so a point on a
    /// shared endpoint belongs to the piece on its left.
    pub fn piece_index(&self, y: f64) -> usize {
        self.pieces.partition_point(|p| p.hi < y).min(self.pieces.len() - 1)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.pieces[self.piece_index(y)].value(y)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.pieces[self.piece_index(y)].derivative(y)
    }

    pub fn is_admissible(&self) -> bool {
        (1.0..=2.0).contains(&self.a) && self.c > 0.0
    }

    /// `|y|^a`, the leading-order profile in this coordinate.
    pub fn profile(&self, y: f64) -> f64 {
        y.abs().powf(self.a)
    }
}

/// `f(x) = sum_i f_i(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableObjective {
    pub coords: Vec<Objective1D>,
}

impl SeparableObjective {
    pub fn new(coords: Vec<Objective1D>) -> Result<Self, ObjectiveError> {
        if coords.is_empty() {
            return Err(ObjectiveError::Invalid("need at least one coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn single(coord: Objective1D) -> Self {
        Self { coords: vec![coord] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        Ok(self.coords.iter().zip(x).map(|(f, &xi)| f.eval(xi)).sum())
    }

    /// Smallest coordinate growth constant; `f(x) >= c |x|^2` holds with it.
    pub fn growth_constant(&self) -> f64 {
        self.coords.iter().map(|f| f.c).fold(f64::INFINITY, f64::min)
    }

    /// Smallest leading exponent, which dominates `P_t f(0)` as `t -> 0`.
    pub fn leading_exponent(&self) -> f64 {
        self.coords.iter().map(|f| f.a).fold(f64::INFINITY, f64::min)
    }

    pub fn tail_degree(&self) -> f64 {
        self.coords.iter().map(|f| f.tail_degree).fold(2.0, f64::max)
    }

    /// A tail coefficient valid for the composite: `C` itself in one
    /// dimension, `2 * sum_i C_i` otherwise.
    pub fn tail_coeff(&self) -> f64 {
        if self.dim() == 1 {
            self.coords[0].tail_coeff
        } else {
            2.0 * self.coords.iter().map(|f| f.tail_coeff).sum::<f64>()
        }
    }

    pub fn profile_radius(&self) -> f64 {
        self.coords.iter().map(|f| f.r0).fold(f64::INFINITY, f64::min)
    }

    pub fn is_admissible(&self) -> bool {
        self.coords.iter().all(Objective1D::is_admissible)
    }

    /// `Phi_a(x) = sum_i |x_i|^{a_i}`.
    pub fn profile(&self, x: &[f64]) -> f64 {
        self.coords.iter().zip(x).map(|(f, &xi)| f.profile(xi)).sum()
    }

    pub fn from_json(s: &str) -> Result<Self, ObjectiveError> {
        let obj: Self = serde_json::from_str(s).map_err(|e| ObjectiveError::Parse(e.to_string()))?;
        Self::new(obj.coords)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("objective serializes")
    }
}
