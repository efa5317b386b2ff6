use std::f64::consts::PI;

use statrs::function::erf::erf;

use super::quadrature::{self, graded, subdivide, Panel};
use super::{check_order, check_scale, Jet1D, QuadratureSpec, SmoothingError};

/// Derivatives `d^d/ds^d` of `P_t[(y - c)^k]` at `s = x - c`:
/// `sum_j k! / (j! (k - 2j - d)!) s^(k - 2j - d) t^j`.
pub(crate) fn heat_monomial(k: u32, t: f64, s: f64, order: usize) -> Jet1D {
    let mut derivs = [0.0; 4];
    for (d, slot) in derivs.iter_mut().enumerate().take(order + 1) {
        let d = d as u32;
        let mut sum = 0.0;
        let mut j = 0;
        while 2 * j + d <= k {
            let p = k - 2 * j - d;
            // k! / (j! p!) as a product to stay exact for moderate k
            let mut coeff = 1.0;
            for i in (p + 1)..=k {
                coeff *= i as f64;
            }
            for i in 1..=j {
                coeff /= i as f64;
            }
            sum += coeff * s.powi(p as i32) * t.powi(j as i32);
            j += 1;
        }
        *slot = sum;
    }
    Jet1D { order, derivs }
}

/// The caloric polynomial `P_t[x^(2m)](x)` and its `x`-derivatives.
pub fn caloric_polynomial(m: u32, t: f64, x: f64, order: usize) -> Result<Jet1D, SmoothingError> {
    check_order(order)?;
    if !(t >= 0.0) {
        return Err(SmoothingError::NonPositiveScale(t));
    }
    Ok(heat_monomial(2 * m, t, x, order))
}

/// `P_t|x|` in closed form:
/// `2 sqrt(t/pi) exp(-x^2/4t) + x erf(x / 2 sqrt t)`.
pub fn smooth_abs(t: f64, x: f64, order: usize) -> Result<Jet1D, SmoothingError> {
    check_order(order)?;
    check_scale(t)?;
    let gauss = (-x * x / (4.0 * t)).exp();
    let e = erf(x / (2.0 * t.sqrt()));
    let d2 = gauss / (PI * t).sqrt();
    Ok(Jet1D::new(
        order,
        [2.0 * (t / PI).sqrt() * gauss + x * e, e, d2, -x / (2.0 * t) * d2],
    ))
}

/// The scale-free profile `psi_a(xi) = P_1[|y|^a](xi)`, so that
/// `P_t|y|^a (s) = t^(a/2) psi_a(s / sqrt t)`.
///
/// Orders up to 3 are available. For `1 < a < 2` the half-line integrals are
/// evaluated in `w = u^(a-1)`, under which `u^(a-2) du = dw / (a-1)` is regular.
pub fn psi_profile(a: f64, xi: f64, order: usize) -> Result<Jet1D, SmoothingError> {
    psi_with(a, xi, order, &QuadratureSpec::default())
}

pub(crate) fn psi_with(a: f64, xi: f64, order: usize, spec: &QuadratureSpec) -> Result<Jet1D, SmoothingError> {
    check_order(order)?;
    if !(1.0..=2.0).contains(&a) {
        return Err(SmoothingError::Exponent(a));
    }
    if a == 2.0 {
        return Ok(Jet1D::new(order, [xi * xi + 2.0, 2.0 * xi, 2.0, 0.0]));
    }
    if a == 1.0 {
        return smooth_abs(1.0, xi, order);
    }
    let p = 1.0 / (a - 1.0);
    let reach = 2.0 * spec.truncation;
    let mut panels = Vec::new();
    for (tag, sigma) in [(0usize, 1.0f64), (1, -1.0)] {
        let lo = (sigma * xi - reach).max(0.0);
        let hi = sigma * xi + reach;
        if hi <= 0.0 {
            continue;
        }
        // the kernel exp(-(xi - sigma u)^2 / 4) varies on a unit scale in u
        let mut u_panels = Vec::new();
        subdivide(lo, hi, 2.0, tag, &mut u_panels);
        for (i, up) in u_panels.iter().enumerate() {
            let (wa, wb) = (up.a.powf(a - 1.0), up.b.powf(a - 1.0));
            if i == 0 && lo == 0.0 {
                graded(wa, wb, true, 8, 4.0, tag, &mut panels);
            } else {
                panels.push(Panel { a: wa, b: wb, tag });
            }
        }
    }
    let norm = 1.0 / (4.0 * PI).sqrt();
    let integrand = |w: f64, tag: usize| {
        let sigma = if tag == 0 { 1.0 } else { -1.0 };
        let wp = w.powf(p);
        let r = xi - sigma * wp;
        let k = norm * (-0.25 * r * r).exp();
        [p * k * wp * wp, a * sigma * p * k * wp, a * k, -0.5 * a * r * k]
    };
    let ncomp = order + 1;
    let mut order_q = spec.panel_order;
    loop {
        let out = quadrature::integrate(&panels, ncomp, order_q, spec.max_panels, spec.rel_tol, integrand);
        if out.converged {
            return Ok(Jet1D::new(order, out.value));
        }
        if order_q >= 4 * spec.panel_order {
            return Err(SmoothingError::Quadrature {
                achieved: out.relative_error(ncomp),
                rel_tol: spec.rel_tol,
                estimate: out.value[0],
            });
        }
        order_q *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn caloric_examples() {
        assert!((caloric_polynomial(2, 0.1, 0.0, 2).unwrap().d(2).unwrap() - 2.4).abs() < 1e-14);
        assert_eq!(caloric_polynomial(1, 0.7, 3.0, 0).unwrap().value(), 9.0 + 1.4);
        assert_eq!(caloric_polynomial(1, 0.0, -1.5, 0).unwrap().value(), 2.25);
        // x^6 + 30 x^4 t + 180 x^2 t^2 + 120 t^3
        let j = caloric_polynomial(3, 0.2, 0.5, 3).unwrap();
        let v = 0.5f64.powi(6) + 30.0 * 0.0625 * 0.2 + 180.0 * 0.25 * 0.04 + 120.0 * 0.008;
        assert!((j.value() - v).abs() < 1e-14);
        let d3 = 120.0 * 0.125 + 720.0 * 0.5 * 0.2;
        assert!((j.d(3).unwrap() - d3).abs() < 1e-12);
    }

    #[test]
    fn smooth_abs_examples() {
        let j = smooth_abs(1.0, 0.0, 2).unwrap();
        assert!((j.value() - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
        let j = smooth_abs(0.01, 0.0, 2).unwrap();
        assert!((j.d(2).unwrap() - 5.641895835477563).abs() < 1e-13);
        let j = smooth_abs(1.0, 40.0, 0).unwrap();
        assert!((j.value() - 40.0).abs() < 1e-13);
        assert!(matches!(
            smooth_abs(0.0, 0.0, 0),
            Err(SmoothingError::NonPositiveScale(_))
        ));
    }

    #[test]
    fn psi_endpoints() {
        let j = psi_profile(2.0, 0.0, 2).unwrap();
        assert_eq!(j.d(2), Some(2.0));
        let j = psi_profile(1.0, 0.0, 2).unwrap();
        assert!((j.d(2).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(psi_profile(2.5, 0.0, 2).is_err());
    }

    #[test]
    fn psi_matches_gamma_closed_forms_at_origin() {
        for a in [1.1, 1.3, 1.5, 1.7, 1.9] {
            let j = psi_profile(a, 0.0, 3).unwrap();
            let v = 2f64.powf(a) * gamma((a + 1.0) / 2.0) / PI.sqrt();
            let d2 = a * (a - 1.0) * 2f64.powf(a - 2.0) * gamma((a - 1.0) / 2.0) / PI.sqrt();
            assert!((j.value() - v).abs() < 1e-12 * v, "a = {a}");
            assert!(
                (j.d(2).unwrap() - d2).abs() < 1e-10 * d2,
                "a = {a}: {} vs {d2}",
                j.d(2).unwrap()
            );
            assert!(j.d(1).unwrap().abs() < 1e-14);
            assert!(j.d(3).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn psi_second_derivative_matches_high_precision_oracle() {
        // 30-digit adaptive quadrature of the |z|^(a-2) kernel integral, a = 1.5
        let oracle = [
            (0.0, 1.0848068134740578),
            (0.5, 1.0517731031161042),
            (1.3, 0.8913346515533713),
            (-2.0, 0.7137858767491325),
        ];
        for (xi, want) in oracle {
            let got = psi_profile(1.5, xi, 2).unwrap().d(2).unwrap();
            assert!((got - want).abs() < 1e-11, "xi {xi}: {got} vs {want}");
        }
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let a = 1.5;
        for xi in [-2.3, -0.4, 0.7, 3.1] {
            let j = psi_profile(a, xi, 3).unwrap();
            let h = 1e-4;
            for k in 1..=3 {
                let fp = psi_profile(a, xi + h, 3).unwrap().d(k - 1).unwrap();
                let fm = psi_profile(a, xi - h, 3).unwrap().d(k - 1).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let d = j.d(k).unwrap();
                assert!((fd - d).abs() < 1e-7 * (1.0 + d.abs()), "xi {xi} k {k}: {fd} vs {d}");
            }
        }
    }
}
