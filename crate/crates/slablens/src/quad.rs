//! Deterministic adaptive quadrature on finite intervals.
//!
//! The engine drives a 15-point Clenshaw-Curtis rule with its embedded
//! 8-point rule (the even-indexed nodes) for the error estimate, refining a
//! fixed-size batch of the worst panels each round. All tie-breaking and
//! summation orders are fixed functions of the panel set, and batch children
//! are evaluated through the order-preserving [`par_map`], so the result is
//! byte-identical across thread counts and across the sequential and
//! parallel execution modes.
//!
//! [`integrate_scaled`] wraps the engine for nonnegative integrands supplied
//! in natural-log form whose peak magnitude may be far outside the f64
//! range: a pilot scan finds the peak, the engine integrates the shifted
//! integrand, and the shift is restored on a [`ScaledComplex`].

use crate::math::{linspace, LN_2};
use crate::par::{par_map, ExecMode};
use crate::scaled::ScaledComplex;
use num_complex::Complex64;
use std::sync::OnceLock;

/// Number of intervals of the fine Clenshaw-Curtis rule (15 nodes).
const FINE_N: usize = 14;
/// Number of intervals of the embedded coarse rule (8 nodes).
const COARSE_N: usize = 7;
/// Panels refined per adaptive round; a fixed batch keeps the refinement
/// history independent of thread scheduling.
const BATCH: usize = 16;

/// Values the engine can accumulate: closed under addition/subtraction,
/// scalable by a real weight, with a magnitude for error control.
pub trait QuadValue:
    Copy + Send + Sync + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn weighted(self, w: f64) -> Self;
    fn abs_norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn weighted(self, w: f64) -> Self {
        self * w
    }
    fn abs_norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn weighted(self, w: f64) -> Self {
        self * w
    }
    fn abs_norm(self) -> f64 {
        self.norm()
    }
}

/// Tolerances and budget for one integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Stop when the error estimate drops below `rel_tol * |value|`.
    pub rel_tol: f64,
    /// ... or below this absolute floor, whichever is larger.
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
    /// Uniform panels the interval starts from (>= 1).
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            // Comfortably below every tolerance the library promises, while
            // still reachable for smooth integrands within the budget.
            rel_tol: 1e-11,
            abs_tol: 1e-300,
            max_evals: 1 << 18,
            initial_panels: 8,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome<V> {
    pub value: V,
    /// Sum of per-panel |fine - coarse| discrepancies.
    pub error_estimate: f64,
    pub evals: usize,
    /// Whether the tolerance was met within the evaluation budget.
    pub converged: bool,
}

struct Rule {
    nodes: [f64; FINE_N + 1],
    w_fine: [f64; FINE_N + 1],
    /// Coarse weights, indexed by coarse node k living at fine node 2k.
    w_coarse: [f64; COARSE_N + 1],
}

/// Clenshaw-Curtis weights for the (n+1)-point rule on [-1, 1]:
/// `w_j = g_j (2/n) sum_{m even} g_m (2 / (1 - m^2)) cos(m j pi / n)` with
/// endpoint factors g = 1/2 at j (or m) equal to 0 or n. All weights are
/// positive, so nonnegative integrands yield nonnegative panel sums.
fn cc_weights(n: usize) -> Vec<f64> {
    let ends = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
    (0..=n)
        .map(|j| {
            let mut s = 0.0;
            let mut m = 0usize;
            while m <= n {
                let im = 2.0 / (1.0 - (m * m) as f64);
                s += ends(m) * im * (m as f64 * j as f64 * std::f64::consts::PI / n as f64).cos();
                m += 2;
            }
            ends(j) * (2.0 / n as f64) * s
        })
        .collect()
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; FINE_N + 1];
        for (j, slot) in nodes.iter_mut().enumerate() {
            *slot = (j as f64 * std::f64::consts::PI / FINE_N as f64).cos();
        }
        // Pin the symmetric values exactly.
        nodes[FINE_N / 2] = 0.0;
        nodes[0] = 1.0;
        nodes[FINE_N] = -1.0;
        let w_fine: [f64; FINE_N + 1] = cc_weights(FINE_N).try_into().unwrap();
        let w_coarse: [f64; COARSE_N + 1] = cc_weights(COARSE_N).try_into().unwrap();
        Rule {
            nodes,
            w_fine,
            w_coarse,
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct Panel<V> {
    left: f64,
    right: f64,
    fine: V,
    err: f64,
}

fn evaluate_panel<V: QuadValue>(f: &(impl Fn(f64) -> V + Sync), left: f64, right: f64) -> Panel<V> {
    let r = rule();
    let half = 0.5 * (right - left);
    let mid = 0.5 * (left + right);
    let mut samples = [V::zero(); FINE_N + 1];
    for (j, s) in samples.iter_mut().enumerate() {
        *s = f(mid + half * r.nodes[j]);
    }
    let mut fine = V::zero();
    for j in 0..=FINE_N {
        fine = fine + samples[j].weighted(half * r.w_fine[j]);
    }
    let mut coarse = V::zero();
    for k in 0..=COARSE_N {
        coarse = coarse + samples[2 * k].weighted(half * r.w_coarse[k]);
    }
    Panel {
        left,
        right,
        fine,
        err: (fine - coarse).abs_norm(),
    }
}

/// Integrates `f` over `[a, b]` adaptively. Returns the outcome even when
/// the tolerance was not reached (see [`QuadOutcome::converged`]); callers
/// decide whether that is an error.
pub fn integrate<V: QuadValue>(
    f: impl Fn(f64) -> V + Sync,
    a: f64,
    b: f64,
    opts: &QuadOptions,
    mode: ExecMode,
) -> QuadOutcome<V> {
    debug_assert!(a.is_finite() && b.is_finite() && a < b);
    let init = opts.initial_panels.max(1);
    let edges = linspace(a, b, init + 1);
    let mut panels: Vec<Panel<V>> = edges
        .windows(2)
        .map(|w| evaluate_panel(&f, w[0], w[1]))
        .collect();
    let mut evals = init * (FINE_N + 1);
    // Splitting below this width gains nothing at f64 resolution.
    let min_width = (b - a) * 2.0f64.powi(-48);

    loop {
        panels.sort_by(|p, q| p.left.total_cmp(&q.left));
        let mut value = V::zero();
        let mut err = 0.0;
        for p in &panels {
            value = value + p.fine;
            err += p.err;
        }
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs_norm());
        if err <= tol {
            return QuadOutcome {
                value,
                error_estimate: err,
                evals,
                converged: true,
            };
        }
        if evals + 2 * BATCH * (FINE_N + 1) > opts.max_evals {
            return QuadOutcome {
                value,
                error_estimate: err,
                evals,
                converged: false,
            };
        }
        // Pick the worst refinable panels: error descending, position as the
        // tie-break so the choice is unique.
        let mut order: Vec<usize> = (0..panels.len())
            .filter(|&i| panels[i].right - panels[i].left > min_width)
            .collect();
        order.sort_by(|&i, &j| {
            panels[j]
                .err
                .total_cmp(&panels[i].err)
                .then(panels[i].left.total_cmp(&panels[j].left))
        });
        order.truncate(BATCH);
        if order.is_empty() || panels[order[0]].err == 0.0 {
            // Nothing left worth splitting; report what we have.
            return QuadOutcome {
                value,
                error_estimate: err,
                evals,
                converged: err <= tol,
            };
        }
        let halves: Vec<(f64, f64)> = order
            .iter()
            .flat_map(|&i| {
                let p = &panels[i];
                let mid = 0.5 * (p.left + p.right);
                [(p.left, mid), (mid, p.right)]
            })
            .collect();
        let children = par_map(mode, &halves, |&(l, r)| evaluate_panel(&f, l, r));
        evals += children.len() * (FINE_N + 1);
        // Remove parents (descending index order keeps swap_remove sound).
        let mut doomed = order;
        doomed.sort_unstable_by(|x, y| y.cmp(x));
        for i in doomed {
            panels.swap_remove(i);
        }
        panels.extend(children);
    }
}

/// Outcome of a log-domain integration: a scaled nonnegative value plus a
/// relative error estimate.
#[derive(Debug, Clone, Copy)]
pub struct ScaledOutcome {
    pub value: ScaledComplex,
    /// Error estimate relative to the value (meaningless when value is 0).
    pub rel_error: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Integrates `exp(ln_f)` over `[a, b]` where `ln_f` may reach magnitudes
/// far outside the f64 exponent range (`NEG_INFINITY` marks zeros of the
/// integrand).
///
/// A pilot scan over `pilot_points` uniform points locates the peak of
/// `ln_f`; the engine then integrates `exp(ln_f - peak)`, which lies in
/// [0, ~e] on the interval, and the peak is restored exactly through the
/// scaled-value exponent.
pub fn integrate_scaled(
    ln_f: impl Fn(f64) -> f64 + Sync,
    a: f64,
    b: f64,
    pilot_points: usize,
    opts: &QuadOptions,
    mode: ExecMode,
) -> ScaledOutcome {
    debug_assert!(a.is_finite() && b.is_finite() && a < b);
    let grid = linspace(a, b, pilot_points.max(8));
    let lead: Vec<f64> = par_map(mode, &grid, |&x| ln_f(x));
    let peak = lead.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return ScaledOutcome {
            value: ScaledComplex::ZERO,
            rel_error: 0.0,
            evals: grid.len(),
            converged: true,
        };
    }
    // Snap the shift to a multiple of ln 2 so restoring it is exact.
    let shift = (peak / LN_2).floor() * LN_2;
    let out = integrate(
        |x| {
            let l = ln_f(x);
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                (l - shift).exp()
            }
        },
        a,
        b,
        opts,
        mode,
    );
    let value = ScaledComplex::from_real(out.value).exp_shift(shift);
    ScaledOutcome {
        value,
        rel_error: if out.value != 0.0 {
            out.error_estimate / out.value.abs()
        } else {
            0.0
        },
        evals: out.evals + grid.len(),
        converged: out.converged,
    }
}
