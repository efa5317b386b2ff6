use heatcont_core::acceptance::{pure_abs, time_derivative};
use heatcont_core::*;
use proptest::prelude::*;

fn builtin(name: &str) -> SeparableObjective {
    make_builtin(name, &Params::new()).unwrap()
}

fn pure_power(a: f64) -> Objective1D {
    let piece = Piece::new(
        f64::NEG_INFINITY,
        f64::INFINITY,
        vec![objective::Form::AbsPower {
            coeff: 1.0,
            exponent: a,
            center: 0.0,
        }],
    );
    Objective1D::new(vec![piece], a, 0.0, 2.0, 1.0, 1.0).unwrap()
}

fn catalog_index() -> impl Strategy<Value = usize> {
    0..catalog_keys().len()
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exactly_one_piece_evaluates(k in catalog_index(), y in -12.0f64..12.0) {
        let f = &builtin(catalog_keys()[k]).coords[0];
        let i = f.piece_index(y);
        let p = &f.pieces()[i];
        prop_assert!(i == 0 && y <= p.hi || p.lo < y && y <= p.hi);
        let containing = f.pieces().iter().filter(|p| p.lo < y && y <= p.hi).count();
        prop_assert_eq!(containing, 1);
        prop_assert_eq!(f.eval(y), p.value(y));
    }

    #[test]
    fn coordinate_sum_is_order_independent(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let f = make_builtin("multi_valley", &[("dim".to_string(), 3.0)].into_iter().collect()).unwrap();
        let a = f.eval(&[x, y, z]).unwrap();
        let b = f.eval(&[z, x, y]).unwrap();
        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0));
    }

    #[test]
    fn catalog_vanishes_only_at_origin(k in catalog_index(), x in -20.0f64..20.0) {
        let f = builtin(catalog_keys()[k]);
        prop_assert_eq!(f.eval(&[0.0]).unwrap(), 0.0);
        if x != 0.0 {
            prop_assert!(f.eval(&[x]).unwrap() > 0.0);
        }
    }

    #[test]
    fn objective_json_round_trips(k in catalog_index()) {
        let f = builtin(catalog_keys()[k]);
        prop_assert_eq!(SeparableObjective::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn profile_scaling_identity(a in 1.05f64..1.95, t in log_uniform(1e-3, 1.0), s in -2.0f64..2.0) {
        let spec = QuadratureSpec::default();
        let direct = quadrature_convolve(&pure_power(a), t, s, 2, &spec).unwrap();
        let sq = t.sqrt();
        let psi = psi_profile(a, s / sq, 2).unwrap();
        for k in 0..=2 {
            let scaled = t.powf(a / 2.0) * sq.powi(-(k as i32)) * psi.derivs[k];
            let tol = 1e-8 * scaled.abs().max(direct.derivs[0].abs() / sq.powi(k as i32));
            prop_assert!((direct.derivs[k] - scaled).abs() <= tol, "k {}: {} vs {}", k, direct.derivs[k], scaled);
        }
    }

    #[test]
    fn profile_is_strictly_convex(a in 1.0f64..=2.0, xi in -10.0f64..10.0) {
        prop_assert!(psi_profile(a, xi, 2).unwrap().derivs[2] > 0.0);
    }

    #[test]
    fn smoothing_dominates_profile(a in 1.0f64..=2.0, t in log_uniform(1e-4, 1.0), s in -5.0f64..5.0) {
        let v = t.powf(a / 2.0) * psi_profile(a, s / t.sqrt(), 0).unwrap().value();
        let phi = s.abs().powf(a);
        prop_assert!(v >= phi * (1.0 - 1e-14), "{} < {}", v, phi);
    }

    #[test]
    fn gaussian_lower_bound(k in catalog_index(), t in log_uniform(1e-3, 2.0), x in -6.0f64..6.0) {
        let f = builtin(catalog_keys()[k]);
        let v = smooth_eval(&f, t, &[x], 0, &QuadratureSpec::default()).unwrap().value;
        prop_assert!(v >= f.growth_constant() * (x * x + 2.0 * t) - 1e-8);
    }

    #[test]
    fn fit_is_affine_equivariant(
        slope in -2.0f64..2.0,
        noise in prop::collection::vec(-0.1f64..0.1, 12),
        kappa in log_uniform(1e-3, 1e3),
    ) {
        let samples: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let t = 1e-4 * 10f64.powf(i as f64 / 4.0);
                (t, t.powf(slope) * e.exp())
            })
            .collect();
        let scaled: Vec<(f64, f64)> = samples.iter().map(|&(t, y)| (t, kappa * y)).collect();
        let base = fit_power_law(&samples, slope, 0.05).unwrap();
        prop_assert_eq!(&fit_power_law(&samples, slope, 0.05).unwrap(), &base);
        let moved = fit_power_law(&scaled, slope, 0.05).unwrap();
        prop_assert!((moved.slope - base.slope).abs() <= 1e-10);
        prop_assert!((moved.intercept - base.intercept - kappa.ln()).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivatives_match_finite_differences(k in catalog_index(), t in log_uniform(1e-2, 1.0), x in -4.0f64..4.0) {
        let f = builtin(catalog_keys()[k]);
        let spec = QuadratureSpec::default();
        let jet = smooth_eval(&f, t, &[x], 3, &spec).unwrap();
        let d = |k: usize, y: f64| {
            let j = smooth_eval(&f, t, &[y], 2, &spec).unwrap();
            match k {
                0 => j.value,
                1 => j.grad.unwrap()[0],
                _ => j.hess.unwrap()[0][0],
            }
        };
        let exact = [jet.grad.unwrap()[0], jet.hess.unwrap()[0][0], jet.third.unwrap()[0][0][0]];
        let h = 1e-4 * t.sqrt();
        for (k, &e) in exact.iter().enumerate() {
            let fd = (d(k, x + h) - d(k, x - h)) / (2.0 * h);
            prop_assert!((fd - e).abs() <= 1e-6 + 1e-4 * e.abs(), "order {}: {} vs {}", k + 1, fd, e);
        }
    }

    #[test]
    fn heat_equation_residual(k in catalog_index(), t in log_uniform(1e-3, 1.0), x in -4.0f64..4.0) {
        let f = builtin(catalog_keys()[k]);
        let spec = QuadratureSpec::default();
        let lap = smooth_eval(&f, t, &[x], 2, &spec).unwrap().laplacian.unwrap();
        let dt = time_derivative(&f, t, &[x], &spec).unwrap();
        prop_assert!((dt - lap).abs() <= 1e-6 * (1.0 + lap.abs()), "{} vs {}", dt, lap);
    }

    #[test]
    fn polish_is_locally_unique(t in log_uniform(1e-3, 1e-1), u in -1.0f64..1.0) {
        let f = make_builtin("asymmetric_cusp", &Params::new()).unwrap();
        let cfg = TraceConfig::default();
        let (x, _) = newton_polish(&f, t, &[0.0], &cfg).unwrap();
        let (y, _) = newton_polish(&f, t, &[x[0] + 0.1 * t.sqrt() * u], &cfg).unwrap();
        prop_assert!((x[0] - y[0]).abs() <= 1e-8);
    }
}

#[test]
fn branch_points_are_critical_and_nondegenerate() {
    for (name, seed) in [
        ("asymmetric_cusp", 0.0),
        ("multi_valley", 3.0),
        ("nonsmooth_quadratic", 0.0),
    ] {
        let f = builtin(name);
        let cfg = TraceConfig::between(0.5, 1e-3);
        let b = trace_branch(&f, &cfg, &[seed]).unwrap();
        assert!(b.points.len() > 10, "{name}");
        for p in &b.points {
            assert!(p.grad_norm <= cfg.newton_tol, "{name} at t={}", p.t);
            assert!(p.lambda_min > 0.0, "{name} at t={}", p.t);
        }
    }
}

#[test]
fn predictors_agree_pointwise() {
    let f = builtin("asymmetric_cusp");
    let run = |predictor| {
        let cfg = TraceConfig {
            predictor,
            ..TraceConfig::between(1e-1, 1e-3)
        };
        (trace_branch(&f, &cfg, &[0.0]).unwrap(), cfg.newton_tol)
    };
    let (reference, tol) = run(Predictor::Secant);
    for predictor in [Predictor::Constant, Predictor::Ode] {
        let (other, _) = run(predictor);
        let mut shared = 0;
        for p in &other.points {
            if let Some(q) = reference.points.iter().find(|q| q.t == p.t) {
                assert!((p.x[0] - q.x[0]).abs() <= 10.0 * tol, "{predictor:?} at t={}", p.t);
                shared += 1;
            }
        }
        assert!(shared >= 10, "{predictor:?}: only {shared} shared scales");
    }
}

#[test]
fn origin_branch_hessian_lower_bound() {
    // lambda_min >= c0 t^((a - 2) / 2) with c0 fitted on the branch
    for (name, a) in [("abs", 1.0), ("abs_power", 1.5), ("nonsmooth_quadratic", 2.0)] {
        let f = builtin(name);
        let b = trace_branch(&f, &TraceConfig::between(0.05, 1e-3), &[0.0]).unwrap();
        let c0 = b
            .points
            .iter()
            .map(|p| p.lambda_min / p.t.powf((a - 2.0) / 2.0))
            .fold(f64::INFINITY, f64::min);
        assert!(c0 > 0.0, "{name}: c0 = {c0}");
    }
}

#[test]
fn sweep_matches_origin_branch() {
    let f = builtin("asymmetric_cusp");
    let grid = geometric_grid(1e-2, 1e-3, 8);
    let sweep = sweep_minimizers(&f, &grid, &SearchWindow::default(), &TraceConfig::default()).unwrap();
    assert!(sweep.switches.is_empty());
    for r in &sweep.records {
        let (x, _) = newton_polish(&f, r.t, &[0.0], &TraceConfig::default()).unwrap();
        assert!((x[0] - r.x[0]).abs() <= 1e-6, "t={}", r.t);
    }
    let fit = localization_rate(&sweep).unwrap();
    assert!(fit.pass && fit.one_sided);
}

#[test]
fn abs_power_level_matches_profile_curvature() {
    for a in [1.3, 1.5, 1.7] {
        let f = make_builtin("abs_power", &[("a".to_string(), a)].into_iter().collect()).unwrap();
        let b = trace_branch(&f, &TraceConfig::between(0.05, 1e-4), &[0.0]).unwrap();
        let fit = hessian_rate(&f, &b).unwrap();
        let last = b.points.last().unwrap();
        let want = psi_profile(a, last.x[0] / last.t.sqrt(), 2).unwrap().derivs[2];
        assert!(
            (fit.level() / want - 1.0).abs() <= 0.01,
            "a={a}: {} vs {want}",
            fit.level()
        );
    }
}

#[test]
fn pure_abs_matches_closed_form() {
    let spec = QuadratureSpec::default();
    for (t, x) in [(1e-4, 0.003), (0.3, -1.2), (1.0, 2.9)] {
        let q = quadrature_convolve(&pure_abs(), t, x, 2, &spec).unwrap();
        let c = smooth_abs(t, x, 2).unwrap();
        for k in 0..=2 {
            assert!((q.derivs[k] - c.derivs[k]).abs() <= 1e-9 * c.derivs[k].abs().max(1.0));
        }
    }
}
