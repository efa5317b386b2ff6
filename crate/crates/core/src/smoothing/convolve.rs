use std::f64::consts::PI;

use super::quadrature::{self, graded, subdivide, Panel};
use super::{check_order, check_scale, Jet1D, QuadratureSpec, SmoothingError};
use crate::objective::{ClosedTerm, Objective1D};

/// Widest panel in kernel units `z = (y - x) / 2 sqrt t`.
const PANEL_WIDTH: f64 = 2.0;
/// Geometric refinement towards singular points.
const GRADING_LEVELS: usize = 8;
const GRADING_RATIO: f64 = 4.0;
/// Zeros of `sin(1/y)` are used as cuts down to this fraction of `2 sqrt t`.
const OSC_CUTOFF: f64 = 1e-3;

#[derive(Clone, Copy)]
struct Cut {
    z: f64,
    singular: bool,
}

/// Zeros `+-1/(k pi)` of `sin(1/y)` inside `(lo, hi)` with `|y| >= floor`,
/// plus `+-floor` itself when inside.
fn oscillation_cuts(lo: f64, hi: f64, floor: f64, out: &mut Vec<f64>) {
    for (side_lo, side_hi, sign) in [(lo.max(0.0), hi, 1.0), ((-hi).max(0.0), -lo, -1.0)] {
        if floor > side_lo && floor < side_hi {
            out.push(sign * floor);
        }
        let a = side_lo.max(floor);
        if side_hi <= a {
            continue;
        }
        // 1/(k pi) in (a, b) <=> k in (1/(pi b), 1/(pi a))
        let k_lo = (1.0 / (PI * side_hi)).floor() as u64 + 1;
        let k_hi = (1.0 / (PI * a)).ceil() as u64;
        for k in k_lo..k_hi {
            let y = 1.0 / (k as f64 * PI);
            if y > a && y < side_hi {
                out.push(sign * y);
            }
        }
    }
}

/// Panels in kernel units covering `|z| <= Z`, cut at every mapped breakpoint,
/// graded towards singular points and, on oscillatory pieces, cut at the
/// zeros of `sin(1/y)`. Each panel is tagged with its piece index.
fn build_panels(f: &Objective1D, t: f64, x: f64, spec: &QuadratureSpec, skip: impl Fn(usize) -> bool) -> Vec<Panel> {
    let h = 2.0 * t.sqrt();
    let zmax = spec.truncation;
    let to_z = |y: f64| (y - x) / h;
    let singular = f.singular_points();

    let mut cuts = vec![Cut {
        z: -zmax,
        singular: false,
    }];
    for &b in f.breakpoints() {
        let z = to_z(b);
        if z > -zmax && z < zmax {
            cuts.push(Cut {
                z,
                singular: singular.contains(&b),
            });
        }
    }
    cuts.push(Cut {
        z: zmax,
        singular: false,
    });

    let mut panels = Vec::new();
    for seg in cuts.windows(2) {
        let (ca, cb) = (seg[0], seg[1]);
        if cb.z <= ca.z {
            continue;
        }
        let (ya, yb) = (x + h * ca.z, x + h * cb.z);
        let piece_idx = f.piece_index(0.5 * (ya + yb));
        if skip(piece_idx) {
            continue;
        }
        let mut sub = vec![ca];
        if f.pieces()[piece_idx].is_oscillatory() {
            let mut ys = Vec::new();
            oscillation_cuts(ya, yb, h * OSC_CUTOFF, &mut ys);
            ys.sort_by(|a, b| a.total_cmp(b));
            sub.extend(ys.into_iter().map(|y| Cut {
                z: to_z(y),
                singular: false,
            }));
        }
        sub.push(cb);
        for w in sub.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.z <= a.z {
                continue;
            }
            let mut local = Vec::new();
            subdivide(a.z, b.z, PANEL_WIDTH, piece_idx, &mut local);
            let last = local.len() - 1;
            for (i, p) in local.into_iter().enumerate() {
                if i == 0 && a.singular {
                    graded(p.a, p.b, true, GRADING_LEVELS, GRADING_RATIO, piece_idx, &mut panels);
                } else if i == last && b.singular {
                    graded(p.a, p.b, false, GRADING_LEVELS, GRADING_RATIO, piece_idx, &mut panels);
                } else {
                    panels.push(p);
                }
            }
        }
    }
    panels
}

/// `(1/sqrt pi) (2 sqrt t)^-k int H_k(z) e^{-z^2} F(x + 2 sqrt t z) dz` for
/// `k <= order`, with `F` the objective minus `subtract`.
fn convolve(
    f: &Objective1D,
    t: f64,
    x: f64,
    order: usize,
    spec: &QuadratureSpec,
    subtract: &[ClosedTerm],
    skip: impl Fn(usize) -> bool,
) -> Result<Jet1D, SmoothingError> {
    let panels = build_panels(f, t, x, spec, skip);
    if panels.is_empty() {
        return Ok(Jet1D::new(order, [0.0; 4]));
    }
    let h = 2.0 * t.sqrt();
    let pieces = f.pieces();
    let integrand = |z: f64, piece: usize| {
        let y = x + h * z;
        let fy = pieces[piece].value(y) - subtract.iter().map(|c| c.eval(y)).sum::<f64>();
        let g = (-z * z).exp() * fy;
        let z2 = z * z;
        [g, 2.0 * z * g, (4.0 * z2 - 2.0) * g, (8.0 * z2 - 12.0) * z * g]
    };
    let ncomp = order + 1;
    let mut order_q = spec.panel_order;
    let out = loop {
        let out = quadrature::integrate(&panels, ncomp, order_q, spec.max_panels, spec.rel_tol, integrand);
        if out.converged {
            break out;
        }
        if order_q >= 4 * spec.panel_order {
            return Err(SmoothingError::Quadrature {
                achieved: out.relative_error(ncomp),
                rel_tol: spec.rel_tol,
                estimate: out.value[0] / PI.sqrt(),
            });
        }
        order_q *= 2;
    };
    let mut derivs = [0.0; 4];
    let mut factor = 1.0 / PI.sqrt();
    for (k, d) in derivs.iter_mut().enumerate().take(ncomp) {
        *d = factor * out.value[k];
        factor /= h;
    }
    Ok(Jet1D::new(order, derivs))
}

/// Convolution of the whole objective with the heat kernel by panel quadrature.
pub fn quadrature_convolve(
    f: &Objective1D,
    t: f64,
    x: f64,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<Jet1D, SmoothingError> {
    check_order(order)?;
    check_scale(t)?;
    spec.validate()?;
    convolve(f, t, x, order, spec, &[], |_| false)
}

fn closed_term_jet(
    term: &ClosedTerm,
    t: f64,
    x: f64,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<Jet1D, SmoothingError> {
    match term {
        ClosedTerm::Poly { coeffs, center } => {
            let mut jet = Jet1D::new(order, [0.0; 4]);
            for (k, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    jet = jet.add_scaled(&super::closed::heat_monomial(k as u32, t, x - center, order), c);
                }
            }
            Ok(jet)
        }
        ClosedTerm::Abs { coeff, center } => Ok(super::smooth_abs(t, x - center, order)?.scaled(*coeff)),
        ClosedTerm::Profile {
            coeff,
            exponent,
            center,
        } => {
            let rt = t.sqrt();
            let psi = super::closed::psi_with(*exponent, (x - center) / rt, order, spec)?;
            let mut derivs = [0.0; 4];
            let mut factor = coeff * t.powf(exponent / 2.0);
            for (k, d) in derivs.iter_mut().enumerate().take(order + 1) {
                *d = factor * psi.derivs[k];
                factor /= rt;
            }
            Ok(Jet1D::new(order, derivs))
        }
    }
}

/// Jet of `P_t f_i` for one coordinate: the closed-form parts of the piece
/// containing the origin are smoothed exactly over the whole line and only
/// the remainder goes through quadrature.
pub(crate) fn smooth_coordinate(
    f: &Objective1D,
    t: f64,
    x: f64,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<Jet1D, SmoothingError> {
    let anchor = f.piece_index(0.0);
    let anchor_piece = &f.pieces()[anchor];
    let closed = anchor_piece.closed_parts();
    let mut jet = Jet1D::new(order, [0.0; 4]);
    for term in &closed {
        jet = jet.add_scaled(&closed_term_jet(term, t, x, order, spec)?, 1.0);
    }
    let anchor_exact = !anchor_piece.has_residual();
    let rest = convolve(f, t, x, order, spec, &closed, |i| i == anchor && anchor_exact)?;
    Ok(jet.add_scaled(&rest, 1.0))
}
