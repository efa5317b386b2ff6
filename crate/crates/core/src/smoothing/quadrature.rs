//! Adaptive composite Gauss–Legendre quadrature of up to four integrands
//! sharing the same nodes.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights on `[-1, 1]` for an `n`-point rule and its `n/2`-point
/// companion used for error estimation.
pub(crate) struct RulePair {
    fine: Vec<(f64, f64)>,
    coarse: Vec<(f64, f64)>,
}

fn legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("rule order is positive");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

pub(crate) fn rule(order: usize) -> Arc<RulePair> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<RulePair>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(order)
        .or_insert_with(|| {
            Arc::new(RulePair {
                fine: legendre(order),
                coarse: legendre((order / 2).max(1)),
            })
        })
        .clone()
}

/// An integration interval tagged with caller data (e.g. a piece index).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: f64,
    pub b: f64,
    pub tag: usize,
}

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    panel: Panel,
    value: [f64; 4],
    abs: [f64; 4],
    err: [f64; 4],
}

struct Ranked {
    priority: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.priority.total_cmp(&other.priority) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub value: [f64; 4],
    /// Estimated absolute error per component.
    pub err: [f64; 4],
    /// Integral of the absolute integrand per component.
    pub scale: [f64; 4],
    pub converged: bool,
}

impl Outcome {
    /// Worst ratio of estimated error to the component scale.
    pub fn relative_error(&self, ncomp: usize) -> f64 {
        (0..ncomp)
            .map(|k| {
                if self.scale[k] > 0.0 {
                    self.err[k] / self.scale[k]
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

fn eval_panel<F: Fn(f64, usize) -> [f64; 4]>(p: Panel, ncomp: usize, rules: &RulePair, f: &F) -> Evaluated {
    let half = 0.5 * (p.b - p.a);
    let mid = 0.5 * (p.b + p.a);
    let mut value = [0.0; 4];
    let mut abs = [0.0; 4];
    for &(x, w) in &rules.fine {
        let v = f(mid + half * x, p.tag);
        for k in 0..ncomp {
            value[k] += w * v[k];
            abs[k] += w * v[k].abs();
        }
    }
    let mut coarse = [0.0; 4];
    for &(x, w) in &rules.coarse {
        let v = f(mid + half * x, p.tag);
        for k in 0..ncomp {
            coarse[k] += w * v[k];
        }
    }
    let mut err = [0.0; 4];
    for k in 0..ncomp {
        value[k] *= half;
        abs[k] *= half;
        err[k] = (value[k] - coarse[k] * half).abs();
    }
    Evaluated {
        panel: p,
        value,
        abs,
        err,
    }
}

/// Integrates the first `ncomp` components of `f` over the panels, bisecting
/// the worst panel until every component satisfies
/// `err_k <= rel_tol * scale_k` or `max_refinements` bisections were spent.
pub(crate) fn integrate<F>(
    panels: &[Panel],
    ncomp: usize,
    order: usize,
    max_refinements: usize,
    rel_tol: f64,
    f: F,
) -> Outcome
where
    F: Fn(f64, usize) -> [f64; 4],
{
    let rules = rule(order);
    let mut done: Vec<Evaluated> = panels
        .iter()
        .filter(|p| p.b > p.a)
        .map(|&p| eval_panel(p, ncomp, &rules, &f))
        .collect();

    let totals = |done: &[Evaluated]| {
        let mut value = [0.0; 4];
        let mut err = [0.0; 4];
        let mut scale = [0.0; 4];
        for e in done {
            for k in 0..ncomp {
                value[k] += e.value[k];
                err[k] += e.err[k];
                scale[k] += e.abs[k];
            }
        }
        (value, err, scale)
    };
    let accepted =
        |err: &[f64; 4], scale: &[f64; 4]| (0..ncomp).all(|k| err[k] <= rel_tol * scale[k] || err[k] < 1e-300);

    let (_, mut err, scale) = totals(&done);
    let mut refinements = 0;
    if !accepted(&err, &scale) {
        let weight = |e: &Evaluated| {
            (0..ncomp)
                .map(|k| if scale[k] > 0.0 { e.err[k] / scale[k] } else { 0.0 })
                .fold(0.0, f64::max)
        };
        let mut heap: BinaryHeap<Ranked> = done
            .iter()
            .enumerate()
            .map(|(index, e)| Ranked {
                priority: weight(e),
                index,
            })
            .collect();
        while refinements < max_refinements && !accepted(&err, &scale) {
            let Some(Ranked { index, .. }) = heap.pop() else { break };
            let old = done[index];
            let mid = 0.5 * (old.panel.a + old.panel.b);
            if !(mid > old.panel.a && mid < old.panel.b) {
                // cannot split further; keep its error on the books
                continue;
            }
            let left = eval_panel(Panel { b: mid, ..old.panel }, ncomp, &rules, &f);
            let right = eval_panel(Panel { a: mid, ..old.panel }, ncomp, &rules, &f);
            for (k, e) in err.iter_mut().enumerate().take(ncomp) {
                *e += left.err[k] + right.err[k] - old.err[k];
            }
            done[index] = left;
            heap.push(Ranked {
                priority: weight(&left),
                index,
            });
            done.push(right);
            heap.push(Ranked {
                priority: weight(&right),
                index: done.len() - 1,
            });
            refinements += 1;
        }
    }
    let (value, err, scale) = totals(&done);
    Outcome {
        value,
        err,
        scale,
        converged: accepted(&err, &scale),
    }
}

/// Splits `[a, b]` into pieces no wider than `width`.
pub(crate) fn subdivide(a: f64, b: f64, width: f64, tag: usize, out: &mut Vec<Panel>) {
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
        out.push(Panel { a: lo, b: hi, tag });
    }
}

/// Splits `[a, b]` geometrically towards the singular endpoint `s` (either `a` or `b`).
pub(crate) fn graded(a: f64, b: f64, towards_a: bool, levels: usize, ratio: f64, tag: usize, out: &mut Vec<Panel>) {
    let len = b - a;
    let mut cuts: Vec<f64> = (0..=levels).map(|j| len * ratio.powi(-(j as i32))).collect();
    cuts.push(0.0);
    cuts.reverse();
    for w in cuts.windows(2) {
        let (lo, hi) = if towards_a {
            (a + w[0], a + w[1])
        } else {
            (b - w[1], b - w[0])
        };
        if hi > lo {
            out.push(Panel { a: lo, b: hi, tag });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_gaussian_moments() {
        let mut panels = Vec::new();
        subdivide(-12.0, 12.0, 2.0, 0, &mut panels);
        let out = integrate(&panels, 3, 32, 100, 1e-12, |z, _| {
            let g = (-z * z).exp();
            [g, z * z * g, z.abs() * g, 0.0]
        });
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!(out.converged);
        assert!((out.value[0] - sqrt_pi).abs() < 1e-14);
        assert!((out.value[1] - sqrt_pi / 2.0).abs() < 1e-14);
        assert!((out.value[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grading_handles_endpoint_singularity() {
        let mut panels = Vec::new();
        graded(0.0, 1.0, true, 10, 4.0, 0, &mut panels);
        let out = integrate(&panels, 1, 32, 200, 1e-12, |x, _| [x.sqrt(), 0.0, 0.0, 0.0]);
        assert!(out.converged);
        assert!((out.value[0] - 2.0 / 3.0).abs() < 1e-13);
        let covered: f64 = panels.iter().map(|p| p.b - p.a).sum();
        assert!((covered - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_refinement_reports_failure() {
        let panels = [Panel { a: 0.0, b: 1.0, tag: 0 }];
        let out = integrate(&panels, 1, 8, 2, 1e-14, |x, _| [(50.0 * x).sin(), 0.0, 0.0, 0.0]);
        assert!(!out.converged);
        assert!(out.relative_error(1) > 1e-14);
    }
}
