//! Small numeric helpers: exact power-of-two scaling, stable log/exp
//! combinations, grids, deterministic bisection, and Gauss-Legendre nodes.
//!
//! Everything here is pure and deterministic; these are the primitives the
//! scaled-value type and the quadrature engine are built from.

/// Natural log of 2, spelled once.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Multiplies `x` by 2^n exactly (up to overflow/underflow saturation).
///
/// Implemented as at most three multiplications by representable powers of
/// two, each of which is exact in IEEE arithmetic, so no rounding error is
/// introduced for results inside the floating range.
pub fn ldexp(x: f64, n: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    // Saturate far outside the representable range; three steps of +-1000
    // cover every non-saturating case (f64 spans ~2^-1074 .. 2^1024).
    let n = n.clamp(-3200, 3200);
    let mut result = x;
    let mut remaining = n;
    while remaining != 0 {
        let step = remaining.clamp(-1000, 1000);
        result *= pow2(step as i32);
        remaining -= step;
        if result == 0.0 || result.is_infinite() {
            break;
        }
    }
    result
}

/// 2^n as f64 for |n| <= 1023 (exact; normal range only).
fn pow2(n: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&n));
    f64::from_bits(((n + 1023) as u64) << 52)
}

/// Binary exponent e of a finite nonzero `x` such that `x * 2^-e` lies in
/// [1, 2). Subnormals are handled by pre-scaling.
pub fn exponent_of(x: f64) -> i64 {
    debug_assert!(x != 0.0 && x.is_finite());
    let ax = x.abs();
    if ax >= f64::MIN_POSITIVE {
        (((ax.to_bits() >> 52) & 0x7ff) as i64) - 1023
    } else {
        // Subnormal: renormalize with an exact multiplication by 2^64.
        exponent_of(ax * pow2(64)) - 64
    }
}

/// 1 - e^{-t} for t >= 0, accurate near 0.
pub fn one_minus_exp_neg(t: f64) -> f64 {
    -f64::exp_m1(-t)
}

/// ln(1 - e^{-t}) for t > 0, accurate in both the t -> 0 and t -> inf limits.
pub fn ln_one_minus_exp_neg(t: f64) -> f64 {
    debug_assert!(t > 0.0);
    if t < LN_2 {
        (-f64::exp_m1(-t)).ln()
    } else {
        f64::ln_1p(-f64::exp(-t))
    }
}

/// ln(1 + e^{x}), the softplus, stable across the whole axis.
pub fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 33.0 {
        x
    } else if x < -37.0 {
        x.exp()
    } else {
        f64::ln_1p(x.exp())
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Two-term Taylor series; the truncation error x^4/120 is below one
        // ulp for |x| < 1e-4.
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive (both > 0).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > 0.0 && n >= 2);
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` linearly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Largest `x` in `[floor, cap]` such that `pred` holds on the whole prefix
/// `(floor, x]`, located by a deterministic log-grid scan plus bisection.
///
/// The scan (512 points) finds the first grid point where `pred` fails; the
/// preceding interval is bisected to an absolute tolerance of 1e-12 (in the
/// scanned variable). When the predicate holds everywhere the cap itself is
/// returned. When it fails already at the floor, the floor is returned.
pub fn largest_prefix_valid(floor: f64, cap: f64, pred: impl Fn(f64) -> bool) -> f64 {
    debug_assert!(0.0 < floor && floor < cap);
    let grid = logspace(floor, cap, 512);
    let mut last_good = None;
    let mut first_bad = None;
    for &x in &grid {
        if pred(x) {
            last_good = Some(x);
        } else {
            first_bad = Some(x);
            break;
        }
    }
    match (last_good, first_bad) {
        (Some(_), None) => cap,
        (None, _) => floor,
        (Some(mut lo), Some(mut hi)) => {
            // 80 halvings shrink any bracket below 1e-12 absolute.
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if pred(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    }
}

/// Solves `f(x) = target` for strictly increasing continuous `f` on
/// `[lo, hi]` by bisection; the bracket must straddle the target.
///
/// Returns the midpoint of the final bracket after `iters` halvings.
pub fn bisect_increasing(
    lo: f64,
    hi: f64,
    target: f64,
    iters: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    debug_assert!(lo < hi);
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Nodes are the roots of the Legendre polynomial P_n found by Newton
/// iteration from the Chebyshev initial guess; the classical weight formula
/// 2 / ((1 - x^2) P_n'(x)^2) follows. Deterministic and accurate to machine
/// precision for the small n used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess (Abramowitz-Stegun style).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ldexp_is_exact_and_saturates() {
        assert_eq!(ldexp(1.5, 3), 12.0);
        assert_eq!(ldexp(1.0, -1074), f64::from_bits(1)); // smallest subnormal
        assert_eq!(ldexp(1.0, -2000), 0.0);
        assert_eq!(ldexp(1.0, 2000), f64::INFINITY);
        assert_eq!(ldexp(-3.25, 10), -3328.0);
    }

    #[test]
    fn exponent_extraction_brackets_mantissa() {
        for &x in &[1.0, 1.999, 2.0, 3.7e300, 4.2e-300, 7.0e-310_f64] {
            let e = exponent_of(x);
            let m = ldexp(x, -e);
            assert!((1.0..2.0).contains(&m), "x={x:e} m={m} e={e}");
        }
    }

    #[test]
    fn stable_log_helpers_are_self_consistent() {
        // exp(ln(1 - e^{-t})) must reproduce the expm1-based value to a few
        // ulps across regimes where the naive form loses all accuracy.
        for &t in &[1e-12, 1e-6, 0.3, 2.0, 40.0] {
            let direct = one_minus_exp_neg(t);
            let via_log = ln_one_minus_exp_neg(t).exp();
            assert!(
                (via_log - direct).abs() <= 4.0 * f64::EPSILON * direct,
                "t={t}: {via_log} vs {direct}"
            );
        }
        // expm1(softplus(x)) equals e^x identically; check it to a few ulps.
        for &x in &[-20.0, -1.0, 0.0, 1.0, 20.0_f64] {
            let back = f64::exp_m1(ln_one_plus_exp(x));
            assert!(
                (back - x.exp()).abs() <= 1e-13 * x.exp(),
                "x={x}: {back} vs {}",
                x.exp()
            );
        }
        // Extreme arguments where the naive forms overflow or round to zero.
        assert_eq!(ln_one_plus_exp(800.0), 800.0);
        assert!((ln_one_minus_exp_neg(1e-300) - (-690.77552789821368)).abs() < 1e-10);
    }

    #[test]
    fn largest_prefix_valid_finds_threshold() {
        // Predicate true exactly on (0, 0.37].
        let t = largest_prefix_valid(1e-15, 1.0, |x| x <= 0.37);
        assert!((t - 0.37).abs() < 1e-11, "t={t}");
        // Predicate true everywhere: cap returned.
        assert_eq!(largest_prefix_valid(1e-15, 0.5, |_| true), 0.5);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // Degree 15 is the exactness limit for n = 8.
        let integral: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * (xi.powi(14) + 3.0 * xi.powi(7) + 1.0))
            .sum();
        let exact = 2.0 / 15.0 + 2.0; // odd term vanishes
        assert!((integral - exact).abs() < 1e-13);
    }
}
