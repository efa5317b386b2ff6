use serde::{Deserialize, Serialize};

/// One analytic term of a piece. A piece evaluates to the sum of its terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Form {
    /// `coeff * (y - center)^exponent` with a non-negative integer exponent.
    Power {
        coeff: f64,
        exponent: u32,
        center: f64,
    },
    /// `sum_k coeffs[k] * (y - center)^k`.
    Polynomial {
        coeffs: Vec<f64>,
        center: f64,
    },
    /// `coeff * |y - center|^exponent`.
    AbsPower {
        coeff: f64,
        exponent: f64,
        center: f64,
    },
    /// `y^2 + alpha * y^3 * sin(1/y)`, with value 0 at `y = 0`.
    OscCubic {
        alpha: f64,
    },
    /// `|y| * (1 + beta * |y| * |sin(1/y)|)`, with value 0 at `y = 0`.
    OscAbs {
        beta: f64,
    },
    Constant {
        value: f64,
    },
}

/// A term whose heat-kernel smoothing has a closed form (or a scale-free profile).
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedTerm {
    Poly {
        coeffs: Vec<f64>,
        center: f64,
    },
    /// `coeff * |y - center|`
    Abs {
        coeff: f64,
        center: f64,
    },
    /// `coeff * |y - center|^exponent` with `1 < exponent < 2`.
    Profile {
        coeff: f64,
        exponent: f64,
        center: f64,
    },
}

pub(crate) fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn horner_derivative(coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * s + k as f64 * c)
}

fn is_even_integer(p: f64) -> bool {
    p >= 0.0 && p.fract() == 0.0 && (p as u64).is_multiple_of(2)
}

impl ClosedTerm {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            ClosedTerm::Poly { coeffs, center } => horner(coeffs, y - center),
            ClosedTerm::Abs { coeff, center } => coeff * (y - center).abs(),
            ClosedTerm::Profile {
                coeff,
                exponent,
                center,
            } => coeff * (y - center).abs().powf(*exponent),
        }
    }
}

impl Form {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Form::Power {
                coeff,
                exponent,
                center,
            } => coeff * (y - center).powi(*exponent as i32),
            Form::Polynomial { coeffs, center } => horner(coeffs, y - center),
            Form::AbsPower {
                coeff,
                exponent,
                center,
            } => {
                let d = (y - center).abs();
                if d == 0.0 && *exponent == 0.0 {
                    *coeff
                } else {
                    coeff * d.powf(*exponent)
                }
            }
            Form::OscCubic { alpha } => {
                if y == 0.0 {
                    0.0
                } else {
                    y * y + alpha * y * y * y * (1.0 / y).sin()
                }
            }
            Form::OscAbs { beta } => {
                if y == 0.0 {
                    0.0
                } else {
                    let ay = y.abs();
                    ay * (1.0 + beta * ay * (1.0 / y).sin().abs())
                }
            }
            Form::Constant { value } => *value,
        }
    }

    /// First derivative away from kinks; at a kink the value is the
    /// derivative of the analytic expression evaluated there.
    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            Form::Power {
                coeff,
                exponent,
                center,
            } => {
                if *exponent == 0 {
                    0.0
                } else {
                    coeff * *exponent as f64 * (y - center).powi(*exponent as i32 - 1)
                }
            }
            Form::Polynomial { coeffs, center } => horner_derivative(coeffs, y - center),
            Form::AbsPower {
                coeff,
                exponent,
                center,
            } => {
                let d = y - center;
                if d == 0.0 {
                    0.0
                } else {
                    coeff * exponent * d.signum() * d.abs().powf(exponent - 1.0)
                }
            }
            Form::OscCubic { alpha } => {
                if y == 0.0 {
                    0.0
                } else {
                    let u = 1.0 / y;
                    2.0 * y + alpha * (3.0 * y * y * u.sin() - y * u.cos())
                }
            }
            Form::OscAbs { beta } => {
                if y == 0.0 {
                    0.0
                } else {
                    // |y| + beta * y^2 * |sin(1/y)|
                    let u = 1.0 / y;
                    let s = u.sin();
                    y.signum() + beta * (2.0 * y * s.abs() - s.signum() * u.cos())
                }
            }
            Form::Constant { .. } => 0.0,
        }
    }

    /// Terms that the smoothing layer handles in closed form.
    pub fn closed_parts(&self) -> Vec<ClosedTerm> {
        match self {
            Form::Power {
                coeff,
                exponent,
                center,
            } => {
                let mut coeffs = vec![0.0; *exponent as usize + 1];
                coeffs[*exponent as usize] = *coeff;
                vec![ClosedTerm::Poly {
                    coeffs,
                    center: *center,
                }]
            }
            Form::Polynomial { coeffs, center } => vec![ClosedTerm::Poly {
                coeffs: coeffs.clone(),
                center: *center,
            }],
            Form::AbsPower {
                coeff,
                exponent,
                center,
            } => {
                let p = *exponent;
                if is_even_integer(p) {
                    let mut coeffs = vec![0.0; p as usize + 1];
                    coeffs[p as usize] = *coeff;
                    vec![ClosedTerm::Poly {
                        coeffs,
                        center: *center,
                    }]
                } else if p == 1.0 {
                    vec![ClosedTerm::Abs {
                        coeff: *coeff,
                        center: *center,
                    }]
                } else if p > 1.0 && p < 2.0 {
                    vec![ClosedTerm::Profile {
                        coeff: *coeff,
                        exponent: p,
                        center: *center,
                    }]
                } else {
                    Vec::new()
                }
            }
            Form::OscCubic { .. } => vec![ClosedTerm::Poly {
                coeffs: vec![0.0, 0.0, 1.0],
                center: 0.0,
            }],
            Form::OscAbs { .. } => vec![ClosedTerm::Abs {
                coeff: 1.0,
                center: 0.0,
            }],
            Form::Constant { value } => vec![ClosedTerm::Poly {
                coeffs: vec![*value],
                center: 0.0,
            }],
        }
    }

    /// Points where the term is not analytic (kinks, cusps, essential oscillation).
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            Form::AbsPower { exponent, center, .. } if !is_even_integer(*exponent) => vec![*center],
            Form::OscCubic { .. } | Form::OscAbs { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    pub fn is_oscillatory(&self) -> bool {
        matches!(self, Form::OscCubic { .. } | Form::OscAbs { .. })
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match self {
            Form::Power { coeff, center, .. } => {
                finite(*coeff, "coeff")?;
                finite(*center, "center")
            }
            Form::Polynomial { coeffs, center } => {
                if coeffs.is_empty() {
                    return Err("polynomial needs at least one coefficient".into());
                }
                coeffs.iter().try_for_each(|c| finite(*c, "coefficient"))?;
                finite(*center, "center")
            }
            Form::AbsPower {
                coeff,
                exponent,
                center,
            } => {
                finite(*coeff, "coeff")?;
                finite(*center, "center")?;
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return Err(format!("abs_power exponent {exponent} must be >= 0"));
                }
                Ok(())
            }
            Form::OscCubic { alpha } => finite(*alpha, "alpha"),
            Form::OscAbs { beta } => finite(*beta, "beta"),
            Form::Constant { value } => finite(*value, "value"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn osc_forms_vanish_at_origin() {
        assert_eq!(Form::OscCubic { alpha: 0.5 }.value(0.0), 0.0);
        assert_eq!(Form::OscAbs { beta: 10.0 }.value(0.0), 0.0);
    }

    #[test]
    fn osc_cubic_at_inverse_pi() {
        let x = 1.0 / PI;
        let v = Form::OscCubic { alpha: 0.5 }.value(x);
        // sin(pi) is not exactly zero in floating point
        assert!((v - x * x).abs() < 1e-16);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let forms = [
            Form::Power {
                coeff: 2.0,
                exponent: 3,
                center: 0.5,
            },
            Form::Polynomial {
                coeffs: vec![1.0, -2.0, 0.5, 0.25],
                center: -1.0,
            },
            Form::AbsPower {
                coeff: 1.5,
                exponent: 1.7,
                center: 0.2,
            },
            Form::OscCubic { alpha: 0.5 },
            Form::OscAbs { beta: 10.0 },
        ];
        for f in &forms {
            for &y in &[0.93, -0.71, 1.0, -1.0] {
                let h = 1e-6;
                let fd = (f.value(y + h) - f.value(y - h)) / (2.0 * h);
                let d = f.derivative(y);
                assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "{f:?} at {y}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn closed_parts_plus_residual_reconstruct_value() {
        let f = Form::OscAbs { beta: 10.0 };
        let closed: f64 = f.closed_parts().iter().map(|c| c.eval(0.3)).sum();
        let residual = 10.0 * 0.09 * (1.0f64 / 0.3).sin().abs();
        assert!((closed + residual - f.value(0.3)).abs() < 1e-15);
        assert!(Form::AbsPower {
            coeff: 1.0,
            exponent: 2.5,
            center: 0.0
        }
        .closed_parts()
        .is_empty());
    }
}
