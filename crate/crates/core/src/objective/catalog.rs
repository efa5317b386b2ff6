use std::collections::BTreeMap;

use super::checks::GridSpec;
use super::{Form, Objective1D, ObjectiveError, Piece, SeparableObjective};

/// Named real parameters for catalog objectives.
pub type Params = BTreeMap<String, f64>;

const NEG_INF: f64 = f64::NEG_INFINITY;
const POS_INF: f64 = f64::INFINITY;

/// Catalog keys accepted by [`make_builtin`].
pub fn catalog_keys() -> &'static [&'static str] {
    &[
        "monomial",
        "abs",
        "abs_power",
        "nonsmooth_quadratic",
        "nonsmooth_linear",
        "multi_valley",
        "asymmetric_cusp",
        "cubic_perturbed",
    ]
}

struct ParamReader<'a> {
    key: &'a str,
    params: &'a Params,
    allowed: &'a [&'a str],
}

impl ParamReader<'_> {
    fn check_known(&self) -> Result<(), ObjectiveError> {
        for name in self.params.keys() {
            if name != "dim" && !self.allowed.contains(&name.as_str()) {
                return Err(ObjectiveError::UnknownParam {
                    key: self.key.to_string(),
                    param: name.clone(),
                });
            }
        }
        Ok(())
    }

    fn get(
        &self,
        name: &str,
        default: f64,
        ok: impl Fn(f64) -> bool,
        expected: &'static str,
    ) -> Result<f64, ObjectiveError> {
        let value = self.params.get(name).copied().unwrap_or(default);
        if value.is_finite() && ok(value) {
            Ok(value)
        } else {
            Err(ObjectiveError::ParamOutOfRange {
                name: name.to_string(),
                value,
                expected,
            })
        }
    }
}

fn abs_power(coeff: f64, exponent: f64) -> Form {
    Form::AbsPower {
        coeff,
        exponent,
        center: 0.0,
    }
}

fn whole_line(terms: Vec<Form>) -> Vec<Piece> {
    vec![Piece::new(NEG_INF, POS_INF, terms)]
}

/// Radius beyond which sub-quadratic catalog objectives are replaced by a
/// quadratic tail. Far enough out that the tails are invisible to the
/// smoothed objective at `x = 0` for `t <= 1`.
pub const STITCH_RADIUS: f64 = 10.0;

/// Extends pieces covering `[-r, r]` by C^1 quadratic tails
/// `f(+-r) + f'(+-r) (|x| - r) + (|x| - r)^2` outside.
fn stitch_quadratic_tails(core: Vec<Piece>) -> Vec<Piece> {
    let r = core[core.len() - 1].hi;
    debug_assert_eq!(core[0].lo, -r);
    let left = &core[0];
    let right = &core[core.len() - 1];
    let left_tail = Piece::new(
        NEG_INF,
        -r,
        vec![Form::Polynomial {
            coeffs: vec![left.value(-r), left.derivative(-r), 1.0],
            center: -r,
        }],
    );
    let right_tail = Piece::new(
        r,
        POS_INF,
        vec![Form::Polynomial {
            coeffs: vec![right.value(r), right.derivative(r), 1.0],
            center: r,
        }],
    );
    let mut pieces = Vec::with_capacity(core.len() + 2);
    pieces.push(left_tail);
    pieces.extend(core);
    pieces.push(right_tail);
    pieces
}

/// Minimum of `f(x) / x^2` over the default grid and a logarithmic far-field
/// grid out to `|x| = 1e6`, refined around the best sample.
pub(crate) fn fitted_growth_constant(f: &Objective1D) -> f64 {
    let grid = GridSpec::default();
    let ratio = |x: f64| f.eval(x) / (x * x);
    let far = 4000;
    let span = (1e6 / grid.half_width).ln();
    let mut nodes: Vec<f64> = grid.nodes().into_iter().filter(|&x| x != 0.0).collect();
    for i in 1..=far {
        let x = grid.half_width * (span * i as f64 / far as f64).exp();
        nodes.extend([-x, x]);
    }
    nodes.sort_by(f64::total_cmp);
    let (mut k, mut best) = (0, f64::INFINITY);
    for (i, &x) in nodes.iter().enumerate() {
        let r = ratio(x);
        if r < best {
            best = r;
            k = i;
        }
    }
    let lo = nodes[k.saturating_sub(1)];
    let hi = nodes[(k + 1).min(nodes.len() - 1)];
    let fine = 2000;
    for i in 0..=fine {
        let x = lo + (hi - lo) * i as f64 / fine as f64;
        if x != 0.0 {
            best = best.min(ratio(x));
        }
    }
    best
}

/// A tail coefficient covering both the default grid and the far field.
fn fitted_tail_coeff(f: &Objective1D, m: f64) -> f64 {
    let ratio = |x: f64| f.eval(x) / (1.0 + x.abs().powf(m));
    let worst = GridSpec::default()
        .nodes()
        .into_iter()
        .chain([-1e6, 1e6])
        .map(ratio)
        .fold(0.0, f64::max);
    (worst * 100.0).ceil() / 100.0
}

/// Attaches fitted constants to a set of pieces.
fn finish(pieces: Vec<Piece>, a: f64, r0: f64, m: f64, growth: Option<f64>) -> Result<Objective1D, ObjectiveError> {
    let mut f = Objective1D::new(pieces, a, 1.0, m, 1.0, r0)?;
    f.c = match growth {
        Some(c) => c,
        None => fitted_growth_constant(&f),
    };
    f.tail_coeff = fitted_tail_coeff(&f, m);
    Ok(f)
}

/// Builds a catalog objective.
///
/// Every key accepts `dim` (1 to 3) and replicates the one-dimensional
/// objective across that many coordinates.
///
/// | key | parameters |
/// |---|---|
/// | `monomial` | `m` (integer >= 1): `x^(2m)` |
/// | `abs` | `|x|` |
/// | `abs_power` | `a` in `[1, 2]`: `|x|^a` |
/// | `nonsmooth_quadratic` | `alpha` (0.5): `x^2 + alpha x^3 sin(1/x)` |
/// | `nonsmooth_linear` | `beta` (10): `|x| (1 + beta |x| |sin(1/x)|)` |
/// | `multi_valley` | three-valley landscape with minima near -3, 0, 3 |
/// | `asymmetric_cusp` | `a` (1.5), `b` (0.3): `|x|^a + b x min(|x|,1)^a` |
/// | `cubic_perturbed` | `b` (0.5): `x^2 + b x^3`, stitched at `|x| = 1` |
///
/// `abs`, `abs_power`, `nonsmooth_linear` and `asymmetric_cusp` switch to
/// quadratic tails at `|x| = STITCH_RADIUS`.
pub fn make_builtin(name: &str, params: &Params) -> Result<SeparableObjective, ObjectiveError> {
    let reader = |allowed: &'static [&'static str]| ParamReader {
        key: name,
        params,
        allowed,
    };
    let dim = params.get("dim").copied().unwrap_or(1.0);
    if !(dim.fract() == 0.0 && (1.0..=3.0).contains(&dim)) {
        return Err(ObjectiveError::ParamOutOfRange {
            name: "dim".into(),
            value: dim,
            expected: "an integer in 1..=3",
        });
    }

    let coord = match name {
        "monomial" => {
            let r = reader(&["m"]);
            r.check_known()?;
            let m = r.get(
                "m",
                1.0,
                |v| v >= 1.0 && v.fract() == 0.0 && v <= 10.0,
                "an integer in 1..=10",
            )?;
            let degree = 2 * m as u32;
            let pieces = whole_line(vec![Form::Power {
                coeff: 1.0,
                exponent: degree,
                center: 0.0,
            }]);
            if m == 1.0 {
                finish(pieces, 2.0, 1.0, 2.0, Some(1.0))?
            } else {
                // flatter than quadratic: no positive growth constant exists
                finish(pieces, degree as f64, 1.0, degree as f64, Some(0.0))?
            }
        }
        "abs" => {
            reader(&[]).check_known()?;
            let core = vec![Piece::new(-STITCH_RADIUS, STITCH_RADIUS, vec![abs_power(1.0, 1.0)])];
            finish(stitch_quadratic_tails(core), 1.0, 1.0, 2.0, None)?
        }
        "abs_power" => {
            let r = reader(&["a"]);
            r.check_known()?;
            let a = r.get("a", 1.5, |v| (1.0..=2.0).contains(&v), "a in [1, 2]")?;
            let core = vec![Piece::new(-STITCH_RADIUS, STITCH_RADIUS, vec![abs_power(1.0, a)])];
            finish(stitch_quadratic_tails(core), a, 1.0, 2.0, None)?
        }
        "nonsmooth_quadratic" => {
            let r = reader(&["alpha"]);
            r.check_known()?;
            let alpha = r.get("alpha", 0.5, |v| v.abs() < 1.0, "|alpha| < 1")?;
            finish(whole_line(vec![Form::OscCubic { alpha }]), 2.0, 1.0, 2.0, None)?
        }
        "nonsmooth_linear" => {
            let r = reader(&["beta"]);
            r.check_known()?;
            let beta = r.get("beta", 10.0, |v| v >= 0.0, "beta >= 0")?;
            let core = vec![Piece::new(-STITCH_RADIUS, STITCH_RADIUS, vec![Form::OscAbs { beta }])];
            finish(stitch_quadratic_tails(core), 1.0, 1.0, 2.0, None)?
        }
        "multi_valley" => {
            reader(&[]).check_known()?;
            finish(multi_valley_pieces(), 1.7, 1.0, 2.0, None)?
        }
        "asymmetric_cusp" => {
            let r = reader(&["a", "b"]);
            r.check_known()?;
            let a = r.get("a", 1.5, |v| (1.0..=2.0).contains(&v), "a in [1, 2]")?;
            let b = r.get("b", 0.3, |v| v.abs() < 1.0, "|b| < 1")?;
            let linear = Form::Polynomial {
                coeffs: vec![0.0, b],
                center: 0.0,
            };
            let core = vec![
                Piece::new(-STITCH_RADIUS, -1.0, vec![abs_power(1.0, a), linear.clone()]),
                Piece::new(-1.0, 0.0, vec![abs_power(1.0, a), abs_power(-b, a + 1.0)]),
                Piece::new(0.0, 1.0, vec![abs_power(1.0, a), abs_power(b, a + 1.0)]),
                Piece::new(1.0, STITCH_RADIUS, vec![abs_power(1.0, a), linear]),
            ];
            finish(stitch_quadratic_tails(core), a, 1.0, 2.0, None)?
        }
        "cubic_perturbed" => {
            let r = reader(&["b"]);
            r.check_known()?;
            let b = r.get("b", 0.5, |v| v.abs() < 1.0, "|b| < 1")?;
            let core = vec![Piece::new(
                -1.0,
                1.0,
                vec![Form::Polynomial {
                    coeffs: vec![0.0, 0.0, 1.0, b],
                    center: 0.0,
                }],
            )];
            finish(stitch_quadratic_tails(core), 2.0, 1.0, 2.0, None)?
        }
        other => return Err(ObjectiveError::UnknownKey(other.to_string())),
    };
    SeparableObjective::new(vec![coord; dim as usize])
}

/// Origin cusp `|x|^1.7` on `|x| <= 1`, a narrow shallow valley at -3, a wide
/// deep valley at 3, a plateau at height 1 up to `|x| = 5` and quadratic walls
/// `1 + (|x| - 5)^2` beyond.
fn multi_valley_pieces() -> Vec<Piece> {
    let constant = |lo, hi| Piece::new(lo, hi, vec![Form::Constant { value: 1.0 }]);
    let quad = |lo, hi, base: f64, curv: f64, center: f64| {
        Piece::new(
            lo,
            hi,
            vec![Form::Polynomial {
                coeffs: vec![base, 0.0, curv],
                center,
            }],
        )
    };
    let right_width: f64 = 1.55;
    vec![
        quad(NEG_INF, -5.0, 1.0, 1.0, -5.0),
        constant(-5.0, -3.5),
        // 0.4 + 0.6 (2 |x + 3|)^2
        quad(-3.5, -2.5, 0.4, 2.4, -3.0),
        constant(-2.5, -1.0),
        Piece::new(-1.0, 1.0, vec![abs_power(1.0, 1.7)]),
        constant(1.0, 3.0 - right_width),
        // 0.2 + 0.8 (|x - 3| / 1.55)^2
        quad(
            3.0 - right_width,
            3.0 + right_width,
            0.2,
            0.8 / (right_width * right_width),
            3.0,
        ),
        constant(3.0 + right_width, 5.0),
        quad(5.0, POS_INF, 1.0, 1.0, 5.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn build(name: &str, kv: &[(&str, f64)]) -> SeparableObjective {
        let params: Params = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_builtin(name, &params).unwrap()
    }

    #[test]
    fn monomial_is_x_squared() {
        let f = build("monomial", &[("m", 1.0)]);
        assert_eq!(f.eval(&[2.0]).unwrap(), 4.0);
        assert_eq!(f.growth_constant(), 1.0);
        assert!(f.is_admissible());
        assert!(!build("monomial", &[("m", 2.0)]).is_admissible());
    }

    #[test]
    fn abs_values() {
        let f = build("abs", &[]);
        assert_eq!(f.eval(&[0.0]).unwrap(), 0.0);
        assert_eq!(f.eval(&[-2.0]).unwrap(), 2.0);
        // beyond the stitch f = |x| + (|x| - 10)^2, and f / x^2 bottoms out at |x| = 200/19
        let r = 200.0 / 19.0;
        assert!((f.growth_constant() - (r + (r - 10.0) * (r - 10.0)) / (r * r)).abs() < 1e-9);
        assert_eq!(f.coords[0].tail_coeff, 1.0);
    }

    #[test]
    fn multi_valley_values() {
        let f = build("multi_valley", &[]);
        let e = |x: f64| f.eval(&[x]).unwrap();
        assert!((e(3.0) - 0.2).abs() < 1e-15);
        assert!((e(-3.0) - 0.4).abs() < 1e-15);
        assert_eq!(e(0.0), 0.0);
        assert_eq!(e(1.0), 1.0);
        // continuity across every piece boundary
        for &b in f.coords[0].breakpoints() {
            assert!((e(b) - e(b + 1e-12)).abs() < 1e-9, "jump at {b}");
        }
    }

    #[test]
    fn nonsmooth_quadratic_at_inverse_pi() {
        let f = build("nonsmooth_quadratic", &[]);
        let x = 1.0 / PI;
        let direct = x * x + 0.5 * x.powi(3) * (1.0 / x).sin();
        assert_eq!(f.eval(&[x]).unwrap(), direct);
        assert!((direct - x * x).abs() < 1e-17);
    }

    #[test]
    fn stitched_tails_are_c1() {
        for (name, kv) in [
            ("abs", vec![]),
            ("nonsmooth_linear", vec![]),
            ("asymmetric_cusp", vec![("a", 1.5), ("b", 0.3)]),
            ("abs_power", vec![("a", 1.3)]),
        ] {
            let f = &build(name, &kv).coords[0];
            let r = f.pieces()[0].hi.abs();
            for b in [-r, r] {
                let h = 1e-7;
                let dl = (f.eval(b) - f.eval(b - h)) / h;
                let dr = (f.eval(b + h) - f.eval(b)) / h;
                assert!((dl - dr).abs() < 1e-4 * (1.0 + dl.abs()), "{name} at {b}: {dl} vs {dr}");
            }
        }
    }

    #[test]
    fn errors() {
        let p = |kv: &[(&str, f64)]| -> Params { kv.iter().map(|(k, v)| (k.to_string(), *v)).collect() };
        assert!(matches!(
            make_builtin("nope", &Params::new()),
            Err(ObjectiveError::UnknownKey(_))
        ));
        assert!(matches!(
            make_builtin("abs_power", &p(&[("a", 2.5)])),
            Err(ObjectiveError::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            make_builtin("abs_power", &p(&[("a", 0.5)])),
            Err(ObjectiveError::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            make_builtin("abs", &p(&[("q", 1.0)])),
            Err(ObjectiveError::UnknownParam { .. })
        ));
        assert!(make_builtin("abs", &p(&[("dim", 4.0)])).is_err());
    }

    #[test]
    fn dim_replicates_coordinates() {
        let f = build("monomial", &[("dim", 2.0)]);
        assert_eq!(f.dim(), 2);
        assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), 5.0);
    }
}
