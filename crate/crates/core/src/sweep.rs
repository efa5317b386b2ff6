//! Global minimizers of `P_t f` across scales, branch labelling of the
//! minimizer path and localisation of branch switches by energy crossing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::{newton_polish, trace_branch, ContinuationError, Termination, TraceConfig};
use crate::objective::SeparableObjective;
use crate::smoothing::{smooth_eval, smooth_eval_1d, QuadratureSpec, SmoothedJet, SmoothingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error("search window too small at t = {t}: best grid value {best} is not below the coercivity bound {bound}")]
    WindowTooSmall { t: f64, best: f64, bound: f64 },
    #[error("no local minimizer found at t = {t}")]
    NoMinimizer { t: f64 },
    #[error("branch energies do not change sign over the bracket (D = {d_lo:e} at t_lo, {d_hi:e} at t_hi)")]
    NoSignChange { d_lo: f64, d_hi: f64 },
    #[error("branch {which} terminates inside the bracket near t = {t}")]
    BranchTerminated { which: usize, t: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Per-coordinate search box and grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub grid_points: usize,
}

impl Default for SearchWindow {
    fn default() -> Self {
        Self {
            x_lo: -10.0,
            x_hi: 10.0,
            grid_points: 4001,
        }
    }
}

impl SearchWindow {
    fn validate(&self) -> Result<(), SweepError> {
        if !(self.x_lo < 0.0 && self.x_hi > 0.0) || self.grid_points < 3 {
            return Err(SweepError::Input(format!(
                "window [{}, {}] with {} points must contain 0 and have >= 3 points",
                self.x_lo, self.x_hi, self.grid_points
            )));
        }
        Ok(())
    }

    fn nodes(&self) -> Vec<f64> {
        let n = self.grid_points;
        let h = (self.x_hi - self.x_lo) / (n - 1) as f64;
        (0..n).map(|i| self.x_lo + i as f64 * h).collect()
    }
}

/// Grid candidates polished per coordinate.
pub const POLISH_CANDIDATES: usize = 5;
/// Energies closer than this count as a tie.
pub const TIE_TOL: f64 = 1e-12;
pub const CROSSING_TOL: f64 = 1e-9;
pub const MAX_BISECTIONS: usize = 80;

/// Cheaper quadrature used for the dense value scan.
fn scan_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        panel_order: 16.max(spec.panel_order / 2),
        rel_tol: spec.rel_tol.max(1e-8),
        ..*spec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMinimum {
    pub x: Vec<f64>,
    pub jet: SmoothedJet,
    /// Another candidate had the same energy within [`TIE_TOL`].
    pub tie: bool,
}

struct CoordinateMin {
    x: f64,
    tie: bool,
}

fn scan_coordinate(
    obj: &SeparableObjective,
    i: usize,
    t: f64,
    nodes: &[f64],
    cfg: &TraceConfig,
) -> Result<Vec<f64>, SweepError> {
    let scan = scan_spec(&cfg.quadrature);
    Ok(nodes
        .iter()
        .map(|&x| smooth_eval_1d(&obj.coords[i], t, x, 0, &scan).map(|j| j.value()))
        .collect::<Result<Vec<_>, _>>()?)
}

fn polish_coordinate(
    obj: &SeparableObjective,
    i: usize,
    t: f64,
    nodes: &[f64],
    values: &[f64],
    cfg: &TraceConfig,
) -> Result<CoordinateMin, SweepError> {
    let mut candidates: Vec<usize> = (1..nodes.len() - 1)
        .filter(|&k| values[k] <= values[k - 1] && values[k] <= values[k + 1])
        .collect();
    candidates.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    candidates.truncate(POLISH_CANDIDATES);

    let single = SeparableObjective::single(obj.coords[i].clone());
    let mut polished: Vec<(f64, f64)> = Vec::new();
    for k in candidates {
        let Ok((x, jet)) = newton_polish(&single, t, &[nodes[k]], cfg) else {
            continue;
        };
        if jet.lambda_min().is_some_and(|l| l > 0.0) && !polished.iter().any(|&(px, _)| (px - x[0]).abs() < 1e-8) {
            polished.push((x[0], jet.value));
        }
    }
    let best = polished
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(SweepError::NoMinimizer { t })?;
    let tied: Vec<(f64, f64)> = polished
        .iter()
        .copied()
        .filter(|p| (p.1 - best.1).abs() <= TIE_TOL)
        .collect();
    let x = tied
        .iter()
        .map(|p| p.0)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(best.0);
    Ok(CoordinateMin { x, tie: tied.len() > 1 })
}

/// Global minimizer of `P_t f` over the window: a dense value scan, Newton
/// polish of the best grid minima, and the lowest polished minimum. The
/// quadratic lower bound `P_t f(x) >= c (|x|^2 + 2nt)` certifies that nothing
/// outside the window can do better.
pub fn global_minimize(
    obj: &SeparableObjective,
    t: f64,
    search: &SearchWindow,
    cfg: &TraceConfig,
) -> Result<GlobalMinimum, SweepError> {
    search.validate()?;
    if !(t > 0.0) {
        return Err(SmoothingError::NonPositiveScale(t).into());
    }
    let nodes = search.nodes();
    let scans = (0..obj.dim())
        .map(|i| scan_coordinate(obj, i, t, &nodes, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let best: f64 = scans
        .iter()
        .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    let edge = search.x_lo.abs().min(search.x_hi);
    let n = obj.dim() as f64;
    let bound = obj.growth_constant() * (edge * edge + 2.0 * n * t);
    if !(best < bound) {
        return Err(SweepError::WindowTooSmall { t, best, bound });
    }
    let per_coord = scans
        .iter()
        .enumerate()
        .map(|(i, values)| polish_coordinate(obj, i, t, &nodes, values, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let x: Vec<f64> = per_coord.iter().map(|c| c.x).collect();
    let jet = smooth_eval(obj, t, &x, 3, &cfg.quadrature)?;
    Ok(GlobalMinimum {
        x,
        jet,
        tie: per_coord.iter().any(|c| c.tie),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub energy: f64,
    pub lambda_min: f64,
    pub grad_norm: f64,
    pub branch_label: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSwitch {
    pub t_star: f64,
    /// Branch that is globally optimal just above `t_star`.
    pub branch_from: usize,
    /// Branch that is globally optimal just below `t_star`.
    pub branch_to: usize,
    /// `D'(t_star) = Laplacian_from - Laplacian_to` at the crossing.
    pub energy_slope_gap: f64,
    /// `lambda_min` of `branch_from` at `t_star`.
    pub hessian_before: f64,
    /// `lambda_min` of `branch_to` at `t_star`.
    pub hessian_after: f64,
    pub x_before: Vec<f64>,
    pub x_after: Vec<f64>,
    /// `|E_from - E_to|` at `t_star`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<MinimizerRecord>,
    pub switches: Vec<BranchSwitch>,
}

/// Largest move between consecutive scales that keeps the branch label.
pub fn jump_threshold(t: f64) -> f64 {
    (10.0 * t.sqrt()).min(0.5)
}

/// Geometric grid of `n` scales from `t_from` to `t_to`, both included.
pub fn geometric_grid(t_from: f64, t_to: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t_from];
    }
    let (a, b) = (t_from.ln(), t_to.ln());
    (0..n)
        .map(|i| match i {
            0 => t_from,
            _ if i == n - 1 => t_to,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Global minimizers over a monotone grid of scales, labelled into branches,
/// with every label change refined into a [`BranchSwitch`].
pub fn sweep_minimizers(
    obj: &SeparableObjective,
    t_grid: &[f64],
    search: &SearchWindow,
    cfg: &TraceConfig,
) -> Result<SweepResult, SweepError> {
    let increasing = t_grid.windows(2).all(|w| w[0] < w[1]);
    let decreasing = t_grid.windows(2).all(|w| w[0] > w[1]);
    if t_grid.is_empty() || !(increasing || decreasing) {
        return Err(SweepError::Input(
            "t grid must be non-empty and strictly monotone".into(),
        ));
    }
    let minima = t_grid
        .par_iter()
        .map(|&t| global_minimize(obj, t, search, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut records: Vec<MinimizerRecord> = Vec::with_capacity(minima.len());
    let mut label = 0;
    for (k, (m, &t)) in minima.iter().zip(t_grid).enumerate() {
        if k > 0 {
            let prev = &records[k - 1];
            let jump = prev
                .x
                .iter()
                .zip(&m.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if jump > jump_threshold(t.min(prev.t)) {
                label += 1;
            }
        }
        records.push(MinimizerRecord {
            t,
            x: m.x.clone(),
            energy: m.jet.value,
            lambda_min: m.jet.lambda_min().unwrap_or(f64::NAN),
            grad_norm: m.jet.grad_norm().unwrap_or(f64::NAN),
            branch_label: label,
            tie: m.tie,
        });
    }

    let mut switches = Vec::new();
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.branch_label == b.branch_label {
            continue;
        }
        let bracket = (a.t.min(b.t), a.t.max(b.t));
        let mut s = find_switch_time(obj, (a.t, a.x.clone()), (b.t, b.x.clone()), bracket, cfg)?;
        // seeds are ordered along the sweep; relabel from/to by scale
        let (hi_label, lo_label) = if a.t > b.t {
            (a.branch_label, b.branch_label)
        } else {
            (b.branch_label, a.branch_label)
        };
        s.branch_from = hi_label;
        s.branch_to = lo_label;
        switches.push(s);
    }
    Ok(SweepResult { records, switches })
}

/// Branch points known so far, used to seed polishing at new scales.
struct KnownBranch {
    points: Vec<(f64, Vec<f64>)>,
}

impl KnownBranch {
    fn nearest(&self, t: f64) -> &[f64] {
        &self
            .points
            .iter()
            .min_by(|a, b| (a.0.ln() - t.ln()).abs().total_cmp(&(b.0.ln() - t.ln()).abs()))
            .expect("branch has points")
            .1
    }

    fn polish(&mut self, obj: &SeparableObjective, t: f64, cfg: &TraceConfig) -> Result<SmoothedJet, SweepError> {
        let seed = self.nearest(t).to_vec();
        let (x, jet) = newton_polish(obj, t, &seed, cfg)?;
        self.points.push((t, x));
        Ok(jet)
    }
}

/// Follows the branch through `seed` to both ends of the bracket.
fn follow(
    obj: &SeparableObjective,
    seed: &(f64, Vec<f64>),
    bracket: (f64, f64),
    which: usize,
    cfg: &TraceConfig,
) -> Result<KnownBranch, SweepError> {
    let mut known = KnownBranch { points: Vec::new() };
    for end in [bracket.0, bracket.1] {
        if end == seed.0 {
            let (x, _) = newton_polish(obj, end, &seed.1, cfg)?;
            known.points.push((end, x));
            continue;
        }
        let trace_cfg = TraceConfig {
            t_start: seed.0,
            t_end: end,
            step_ratio: if end < seed.0 { 0.9 } else { 1.0 / 0.9 },
            ..cfg.clone()
        };
        let branch = trace_branch(obj, &trace_cfg, &seed.1)?;
        let last_t = branch.points.last().map_or(seed.0, |p| p.t);
        if branch.termination != Termination::ReachedTEnd {
            return Err(SweepError::BranchTerminated { which, t: last_t });
        }
        known.points.extend(branch.points.into_iter().map(|p| (p.t, p.x)));
    }
    Ok(known)
}

/// Scale at which the energies of the branches through `seed_i` and `seed_j`
/// cross, by bisection in `log t` on `D(t) = E_i(t) - E_j(t)`.
///
/// In the result `branch_from` is 0 when branch `i` is the lower one above
/// `t_star` and 1 otherwise.
pub fn find_switch_time(
    obj: &SeparableObjective,
    seed_i: (f64, Vec<f64>),
    seed_j: (f64, Vec<f64>),
    bracket: (f64, f64),
    cfg: &TraceConfig,
) -> Result<BranchSwitch, SweepError> {
    let (t_lo, t_hi) = bracket;
    if !(t_lo > 0.0 && t_lo < t_hi) {
        return Err(SweepError::Input(format!(
            "bracket ({t_lo}, {t_hi}) must satisfy 0 < t_lo < t_hi"
        )));
    }
    let mut bi = follow(obj, &seed_i, bracket, 0, cfg)?;
    let mut bj = follow(obj, &seed_j, bracket, 1, cfg)?;
    let mut eval = |t: f64| -> Result<(f64, SmoothedJet, SmoothedJet), SweepError> {
        let ji = bi.polish(obj, t, cfg)?;
        let jj = bj.polish(obj, t, cfg)?;
        Ok((ji.value - jj.value, ji, jj))
    };
    let (d_lo, _, _) = eval(t_lo)?;
    let (d_hi, ji_hi, jj_hi) = eval(t_hi)?;
    let same_point = ji_hi.x.iter().zip(&jj_hi.x).all(|(a, b)| (a - b).abs() < 1e-8);
    if same_point || (d_lo.abs() <= CROSSING_TOL && d_hi.abs() <= CROSSING_TOL) || d_lo * d_hi > 0.0 {
        return Err(SweepError::NoSignChange { d_lo, d_hi });
    }

    let (mut a, mut b) = (t_lo.ln(), t_hi.ln());
    let mut best: Option<(f64, f64, SmoothedJet, SmoothedJet)> = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        let t = mid.exp();
        let (d, ji, jj) = eval(t)?;
        let better = best.as_ref().is_none_or(|bst| d.abs() < bst.1.abs());
        if better {
            best = Some((t, d, ji, jj));
        }
        if d.abs() <= CROSSING_TOL {
            break;
        }
        if d.signum() == d_lo.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (t_star, d, ji, jj) = best.expect("at least one bisection step");
    // above the crossing the branch with the lower energy at t_hi is optimal
    let i_above = d_hi < 0.0;
    let (above, below) = if i_above { (&ji, &jj) } else { (&jj, &ji) };
    let lap = |j: &SmoothedJet| j.laplacian.unwrap_or(f64::NAN);
    Ok(BranchSwitch {
        t_star,
        branch_from: if i_above { 0 } else { 1 },
        branch_to: if i_above { 1 } else { 0 },
        energy_slope_gap: lap(above) - lap(below),
        hessian_before: above.lambda_min().unwrap_or(f64::NAN),
        hessian_after: below.lambda_min().unwrap_or(f64::NAN),
        x_before: above.x.clone(),
        x_after: below.x.clone(),
        residual: d.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{make_builtin, Params};
    use std::f64::consts::PI;

    fn build(name: &str) -> SeparableObjective {
        make_builtin(name, &Params::new()).unwrap()
    }

    #[test]
    fn global_minimum_examples() {
        let cfg = TraceConfig::default();
        let w = SearchWindow::default();
        let m = global_minimize(&build("monomial"), 1.0, &w, &cfg).unwrap();
        assert!(m.x[0].abs() < 1e-10);
        assert!((m.jet.value - 2.0).abs() < 1e-12);
        let m = global_minimize(&build("abs"), 0.25, &w, &cfg).unwrap();
        assert!(m.x[0].abs() < 1e-10);
        assert!((m.jet.value - 1.0 / PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn small_window_fails_certificate() {
        let w = SearchWindow {
            x_lo: -0.5,
            x_hi: 0.5,
            grid_points: 101,
        };
        let r = global_minimize(&build("multi_valley"), 2.0, &w, &TraceConfig::default());
        assert!(matches!(r, Err(SweepError::WindowTooSmall { .. })));
    }

    #[test]
    fn geometric_grid_hits_endpoints() {
        let g = geometric_grid(6.0, 1e-3, 120);
        assert_eq!(g.len(), 120);
        assert_eq!(g[0], 6.0);
        assert_eq!(g[119], 1e-3);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn monomial_sweep_has_one_branch() {
        let grid = geometric_grid(1.0, 1e-3, 8);
        let w = SearchWindow {
            grid_points: 401,
            ..SearchWindow::default()
        };
        let s = sweep_minimizers(&build("monomial"), &grid, &w, &TraceConfig::default()).unwrap();
        assert!(s.switches.is_empty());
        assert!(s.records.iter().all(|r| r.branch_label == 0 && r.x[0].abs() < 1e-10));
    }
}
