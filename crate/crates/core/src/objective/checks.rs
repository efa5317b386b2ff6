use serde::{Deserialize, Serialize};

use super::{Objective1D, ObjectiveError, SeparableObjective};

/// Relative slack allowed in the quadratic lower bound.
pub const TOL_GROWTH: f64 = 1e-9;

/// Uniform per-coordinate sampling of `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 10.0,
            points: 20001,
        }
    }
}

impl GridSpec {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let step = 2.0 * self.half_width / (n - 1) as f64;
        (0..n).map(|i| -self.half_width + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub ok: bool,
    pub worst_ratio: f64,
    pub witness: Vec<f64>,
}

/// Checks `f(x) >= c |x|^2` with the declared composite growth constant.
///
/// For a separable sum the ratio `sum f_i / (c sum x_i^2)` is bounded below by
/// the smallest coordinate ratio, and that bound is attained on the axes, so
/// only axis points are sampled.
pub fn check_growth(obj: &SeparableObjective, grid: &GridSpec) -> GrowthCheck {
    let c = obj.growth_constant();
    let nodes = grid.nodes();
    let mut worst = f64::INFINITY;
    let mut witness = vec![0.0; obj.dim()];
    for (i, f) in obj.coords.iter().enumerate() {
        for &x in nodes.iter().filter(|&&x| x != 0.0) {
            let ratio = f.eval(x) / (c * x * x);
            if ratio < worst || ratio.is_nan() {
                worst = ratio;
                witness = vec![0.0; obj.dim()];
                witness[i] = x;
            }
        }
    }
    GrowthCheck {
        ok: worst >= 1.0 - TOL_GROWTH,
        worst_ratio: worst,
        witness,
    }
}

fn ball_sample(rho: f64) -> Vec<f64> {
    let uniform = 20000;
    let mut pts: Vec<f64> = (1..=uniform).map(|i| rho * i as f64 / uniform as f64).collect();
    // log-spaced points resolve the approach to the origin
    let decades = 8.0;
    let log_pts = 800;
    pts.extend((0..log_pts).map(|i| rho * 10f64.powf(-decades * (i + 1) as f64 / log_pts as f64)));
    let neg: Vec<f64> = pts.iter().map(|x| -x).collect();
    pts.extend(neg);
    pts
}

fn omega_1d(f: &Objective1D, rho: f64) -> f64 {
    ball_sample(rho)
        .into_iter()
        .map(|x| {
            let phi = f.profile(x);
            (f.eval(x) - phi).abs() / phi
        })
        .fold(0.0, f64::max)
}

/// Sampled modulus `sup_{0 < |x| <= rho} |f(x) - Phi_a(x)| / Phi_a(x)` for each radius.
///
/// The separable ratio is bounded by its worst coordinate ratio, which is
/// attained on an axis, so each coordinate is sampled on its own segment.
pub fn estimate_omega(obj: &SeparableObjective, radii: &[f64]) -> Result<Vec<(f64, f64)>, ObjectiveError> {
    let r0 = obj.profile_radius();
    radii
        .iter()
        .map(|&rho| {
            if !(rho > 0.0 && rho < r0) {
                return Err(ObjectiveError::RadiusTooLarge { radius: rho, r0 });
            }
            let w = obj.coords.iter().map(|f| omega_1d(f, rho)).fold(0.0, f64::max);
            Ok((rho, w))
        })
        .collect()
}

/// Checks `f(x) <= C (1 + |x|^m)` on the grid.
///
/// One coordinate uses the full grid. In two or three dimensions the full
/// axis grids are combined with a coarser tensor grid of at most ~4e6 points.
pub fn check_tail(obj: &SeparableObjective, tail_coeff: f64, m: f64, grid: &GridSpec) -> bool {
    let bound = |r2: f64| tail_coeff * (1.0 + r2.sqrt().powf(m));
    let nodes = grid.nodes();
    let n = obj.dim();
    // on an axis the other coordinates contribute f_j(0) = 0
    for f in &obj.coords {
        if nodes.iter().any(|&x| !(f.eval(x) <= bound(x * x))) {
            return false;
        }
    }
    if n == 1 {
        return true;
    }
    let per_axis = ((4e6f64).powf(1.0 / n as f64) as usize) | 1;
    let coarse = GridSpec {
        half_width: grid.half_width,
        points: per_axis.min(grid.points),
    }
    .nodes();
    let values: Vec<Vec<f64>> = obj
        .coords
        .iter()
        .map(|f| coarse.iter().map(|&x| f.eval(x)).collect())
        .collect();
    let k = coarse.len();
    let total = k.pow(n as u32);
    (0..total).all(|mut flat| {
        let (mut fx, mut r2) = (0.0, 0.0);
        for v in &values {
            let j = flat % k;
            flat /= k;
            fx += v[j];
            r2 += coarse[j] * coarse[j];
        }
        fx <= bound(r2)
    })
}
