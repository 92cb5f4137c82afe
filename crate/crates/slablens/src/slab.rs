//! Slab geometry, the loss model `mu = delta + lambda * delta^beta`, derived
//! layer scalars, and the validity thresholds on `delta`.
//!
//! The slab occupies `0 <= x <= a` with permittivity `-1 + i delta`; the
//! cladding `x < 0` has permittivity `1 + i mu`, and the background `x > a`
//! has permittivity `1`. The loss exponent `beta` and amplitude `lambda`
//! control how the cladding loss scales with the slab loss as
//! `delta -> 0`, and the admissible `(beta, lambda)` combinations are the
//! ones keeping `mu >= 0` at small `delta`.
//!
//! Quantities that appear in exponents (the product `m`, the combination
//! `delta + mu`) are exposed both directly and in natural-log form; the log
//! forms are factored so they stay accurate when `delta` is far below the
//! f64 square-root-of-underflow scale.

use crate::error::{Error, Result};
use crate::math::{largest_prefix_valid, ln_one_minus_exp_neg, ln_one_plus_exp, LN_2};
use crate::scaled::ScaledComplex;
use num_complex::Complex64;

/// Upper limit of every `delta` threshold scan. The loss model is only
/// meaningful for `delta` well below 1; a threshold equal to this cap means
/// "unconstrained up to the cap", not a genuine transition.
pub const DELTA_CAP: f64 = 1.0 - 1e-9;

/// Lower limit of the threshold scans.
const DELTA_SCAN_FLOOR: f64 = 1e-15;

/// Cap on the bracket `25 + 2 lambda delta^{beta+1} + 4 delta^2 +
/// lambda^2 delta^{2 beta} (4 + delta^2)` used by the transfer-denominator
/// lower bound; the bracket tends to 25 as `delta -> 0`, so a cap of 26
/// holds on a nonempty range for every admissible parameter set.
pub const BRACKET_CAP: f64 = 26.0;

/// Required margin `1 - m^{xi/a} >= 1/2` for the dissipation lower bound.
pub const CONTRACTION_MARGIN: f64 = 0.5;

/// Slab thickness, loss-model parameters, and the depth of the dissipation
/// strip behind the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabConfig {
    /// Slab thickness `a > 0`.
    pub a: f64,
    /// Cladding loss amplitude in `mu = delta + lambda * delta^beta`.
    pub lambda: f64,
    /// Cladding loss exponent `beta > 0`.
    pub beta: f64,
    /// Depth of the strip `-xi < x < 0` whose dissipated power is tracked;
    /// `0 < xi <= a`.
    pub xi: f64,
}

/// The five `delta` ceilings below which the various estimates apply. Each
/// is the largest `delta` (capped at [`DELTA_CAP`]) such that its condition
/// holds on all of `(0, delta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaThresholds {
    /// Cladding loss `mu` stays nonnegative.
    pub mu_nonnegative: f64,
    /// The product `m = delta (delta + mu)` stays below 1, so the resonance
    /// cutoff `k0` is positive.
    pub product_below_one: f64,
    /// The bracket of the transfer-denominator bound stays below
    /// [`BRACKET_CAP`].
    pub bracket_bounded: f64,
    /// `1 - m^{xi/a}` stays at least [`CONTRACTION_MARGIN`].
    pub contraction: f64,
    /// The convexity condition `max(|A|^2, mu^2) <= 2.5 (delta + mu)^2` on
    /// the transmitted-side coefficients holds (see
    /// [`LayerScalars::combo_grow`]).
    pub psi_minus_convex: f64,
}

/// Complex material scalars at a fixed `delta`: permittivities, contrasts,
/// and the `k`-independent coefficients built from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerScalars {
    pub delta: f64,
    /// Cladding loss `mu = delta + lambda delta^beta`.
    pub mu: f64,
    /// Cladding permittivity `1 + i mu`.
    pub eps_cladding: Complex64,
    /// Slab permittivity `-1 + i delta`.
    pub eps_slab: Complex64,
    /// Slab/cladding contrast `chi_c = eps_slab / eps_cladding`.
    pub chi_c: Complex64,
    /// `chi_c + 1 = i (delta + mu) / (1 + i mu)`, computed in that analytic
    /// form to avoid the catastrophic cancellation of the literal sum.
    pub chi_c_plus_one: Complex64,
    /// `chi_c - 1 = (-2 + i (delta - mu)) / (1 + i mu)`.
    pub chi_c_minus_one: Complex64,
    /// Interface reflection ratio `(chi_c - 1) / (chi_c + 1)
    /// = ((delta - mu) + 2i) / (delta + mu)`.
    pub reflection: Complex64,
    /// Slab/background contrast `chi_m = eps_slab`.
    pub chi_m: Complex64,
    /// Coefficient of `e^{kappa a}` in the reduced transmitted-side
    /// combination: `(delta + 2i)(delta + mu) / (2 eps_slab)`.
    pub combo_grow: Complex64,
    /// Coefficient of `e^{-kappa a}` in the same combination:
    /// `-delta ((delta - mu) + 2i) / (2 eps_slab)`. The exact identity
    /// `combo_grow + combo_decay = -i mu` pins their sum.
    pub combo_decay: Complex64,
}

impl SlabConfig {
    /// Validates geometry and the feasibility of `(beta, lambda)`:
    /// `lambda > 0` when `beta < 1`, `lambda >= -1` when `beta = 1`, and
    /// `lambda != 0` when `beta > 1`.
    pub fn new(a: f64, lambda: f64, beta: f64, xi: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!("slab thickness must be positive, got {a}")));
        }
        if !(xi.is_finite() && xi > 0.0 && xi <= a) {
            return Err(Error::invalid(format!(
                "strip depth must satisfy 0 < xi <= a, got xi = {xi} with a = {a}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("loss exponent must be positive, got {beta}")));
        }
        if !lambda.is_finite() {
            return Err(Error::invalid(format!("loss amplitude must be finite, got {lambda}")));
        }
        let feasible = if beta < 1.0 {
            lambda > 0.0
        } else if beta == 1.0 {
            lambda >= -1.0
        } else {
            lambda != 0.0
        };
        if !feasible {
            return Err(Error::invalid(format!(
                "infeasible loss model: beta = {beta} requires {}",
                if beta < 1.0 {
                    "lambda > 0"
                } else if beta == 1.0 {
                    "lambda >= -1"
                } else {
                    "lambda != 0"
                }
            )));
        }
        Ok(Self { a, lambda, beta, xi })
    }

    /// Critical distance ratio `tau(beta)`: `(beta + 2) / (beta + 1)` for
    /// `beta < 1`, else `3/2`. Sources with near edge inside
    /// `(a, tau(beta) a)` trigger blow-up; beyond it the dissipation stays
    /// bounded.
    pub fn tau(&self) -> f64 {
        if self.beta < 1.0 {
            (self.beta + 2.0) / (self.beta + 1.0)
        } else {
            1.5
        }
    }

    /// The open interval `(a, tau a)` of near-edge distances with unbounded
    /// dissipation.
    pub fn influence_zone(&self) -> (f64, f64) {
        (self.a, self.tau() * self.a)
    }

    /// Cladding loss `mu(delta) = delta + lambda delta^beta`.
    pub fn mu(&self, delta: f64) -> f64 {
        debug_assert!(delta > 0.0);
        delta + self.lambda * delta.powf(self.beta)
    }

    /// The combination `delta + mu = 2 delta + lambda delta^beta`, organized
    /// so no cancellation occurs for admissible parameters.
    pub fn delta_plus_mu(&self, delta: f64) -> f64 {
        if self.beta < 1.0 {
            // lambda > 0: both terms positive.
            2.0 * delta + self.lambda * delta.powf(self.beta)
        } else {
            // 2 + lambda delta^{beta-1} >= 1 wherever mu >= 0.
            delta * (2.0 + self.lambda * delta.powf(self.beta - 1.0))
        }
    }

    /// `ln(delta + mu)`, factored as `beta ln delta + ln(lambda +
    /// 2 delta^{1-beta})` (or the `beta >= 1` analogue) so it stays finite
    /// and accurate when `delta + mu` underflows f64.
    pub fn ln_delta_plus_mu(&self, delta: f64) -> f64 {
        if self.beta < 1.0 {
            self.beta * delta.ln() + (self.lambda + 2.0 * delta.powf(1.0 - self.beta)).ln()
        } else {
            delta.ln() + (2.0 + self.lambda * delta.powf(self.beta - 1.0)).ln()
        }
    }

    /// The resonance-scale product `m(delta) = delta (delta + mu)`.
    pub fn m(&self, delta: f64) -> f64 {
        delta * self.delta_plus_mu(delta)
    }

    /// `ln m`, factored like [`Self::ln_delta_plus_mu`].
    pub fn ln_m(&self, delta: f64) -> f64 {
        delta.ln() + self.ln_delta_plus_mu(delta)
    }

    /// Resonance cutoff `k0 = ln(1/m) / (2a)`, the wavenumber below which
    /// the slab amplifies. Requires `m < 1`.
    pub fn k0(&self, delta: f64) -> Result<f64> {
        let ln_m = self.ln_m(delta);
        if ln_m >= 0.0 {
            return Err(Error::DeltaTooLarge {
                context: "resonance cutoff needs m = delta (delta + mu) < 1",
                value: delta,
            });
        }
        Ok(-ln_m / (2.0 * self.a))
    }

    /// Material scalars at the given `delta`. Fails when `mu < 0` (the
    /// cladding would be a gain medium).
    pub fn layer_scalars(&self, delta: f64) -> Result<LayerScalars> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        let mu = self.mu(delta);
        if mu < 0.0 {
            return Err(Error::DeltaTooLarge {
                context: "cladding loss mu = delta + lambda delta^beta turned negative",
                value: delta,
            });
        }
        let dpm = self.delta_plus_mu(delta);
        let eps_cladding = Complex64::new(1.0, mu);
        let eps_slab = Complex64::new(-1.0, delta);
        let chi_c = eps_slab / eps_cladding;
        let chi_c_plus_one = Complex64::new(0.0, dpm) / eps_cladding;
        let chi_c_minus_one = Complex64::new(-2.0, delta - mu) / eps_cladding;
        let reflection = Complex64::new(delta - mu, 2.0) / dpm;
        let combo_grow = Complex64::new(delta, 2.0) * dpm / (2.0 * eps_slab);
        let combo_decay = Complex64::new(delta - mu, 2.0) * (-delta) / (2.0 * eps_slab);
        Ok(LayerScalars {
            delta,
            mu,
            eps_cladding,
            eps_slab,
            chi_c,
            chi_c_plus_one,
            chi_c_minus_one,
            reflection,
            chi_m: eps_slab,
            combo_grow,
            combo_decay,
        })
    }

    /// Transfer denominator `g(k) = i delta (1 + W e^{-2 kappa a})` with
    /// `W = ((4 + lambda delta^{beta+1}) - 2i (delta - lambda delta^beta)) / m`,
    /// even in `k` (`kappa = |k|`). Scaled because `W ~ 4/m` overflows f64
    /// at small `delta`.
    pub fn transfer_denominator(&self, k: f64, delta: f64) -> ScaledComplex {
        let kappa = k.abs();
        let numerator = Complex64::new(
            4.0 + self.lambda * delta.powf(self.beta + 1.0),
            -2.0 * (delta - self.lambda * delta.powf(self.beta)),
        );
        let w = ScaledComplex::from_complex(numerator)
            / ScaledComplex::from_ln_mag_phase(self.ln_m(delta), 0.0);
        let one = ScaledComplex::from_real(1.0);
        (one + w.exp_shift(-2.0 * kappa * self.a)).scale(Complex64::new(0.0, delta))
    }

    /// The transfer denominator in its unrearranged product form,
    /// `i delta [1 - ((delta + 2i)(2i - lambda delta^beta) /
    /// (delta (2 delta + lambda delta^beta))) e^{-2 kappa a}]`.
    ///
    /// Kept as an independent route for cross-checking
    /// [`Self::transfer_denominator`]; only usable at moderate `delta`
    /// (roughly `delta >= 1e-100`) where the inner ratio fits in f64.
    pub fn transfer_denominator_direct(&self, k: f64, delta: f64) -> Complex64 {
        let kappa = k.abs();
        let num = Complex64::new(delta, 2.0) * Complex64::new(-self.lambda * delta.powf(self.beta), 2.0);
        let den = delta * (2.0 * delta + self.lambda * delta.powf(self.beta));
        let inner = Complex64::new(1.0, 0.0) - (num / den) * (-2.0 * kappa * self.a).exp();
        Complex64::new(0.0, delta) * inner
    }

    /// `ln |g(k)|^2` for the transfer denominator, evaluated by log-sum-exp
    /// over the expansion `|g|^2 = delta^2 [1 + 2 P e^{-2 kappa a} +
    /// (P^2 + R^2) e^{-4 kappa a}]` whose coefficients are positive for
    /// every admissible parameter set. In particular `|g| >= delta` for all
    /// `k`, which the far-tail envelopes rely on.
    pub fn ln_mod_g_sq(&self, k: f64, delta: f64) -> f64 {
        let kappa = k.abs();
        let ln_m = self.ln_m(delta);
        // P = (4 + lambda delta^{beta+1}) / m  (positive when feasible).
        let ln_p = (4.0 + self.lambda * delta.powf(self.beta + 1.0)).ln() - ln_m;
        // P^2 + R^2 = (16 + 4 delta^2 + lambda^2 delta^{2 beta} (4 + delta^2)) / m^2,
        // expanded so no cancellation occurs.
        let ln_p2r2 = {
            let d2 = delta * delta;
            let l2d2b = (self.lambda * delta.powf(self.beta)).powi(2);
            (16.0 + 4.0 * d2 + l2d2b * (4.0 + d2)).ln() - 2.0 * ln_m
        };
        let l1 = LN_2 + ln_p - 2.0 * kappa * self.a;
        let l2 = ln_p2r2 - 4.0 * kappa * self.a;
        let peak = 0.0f64.max(l1).max(l2);
        2.0 * delta.ln() + peak + ((-peak).exp() + (l1 - peak).exp() + (l2 - peak).exp()).ln()
    }

    /// `ln C_r`, the squared reflection magnitude
    /// `(lambda^2 delta^{2 beta} + 4) / (delta + mu)^2` in log form, using
    /// the factored identity `(delta - mu)^2 = (lambda delta^beta)^2`.
    pub fn ln_reflection_sq(&self, delta: f64) -> f64 {
        let t = self.lambda * delta.powf(self.beta);
        (t * t + 4.0).ln() - 2.0 * self.ln_delta_plus_mu(delta)
    }

    /// `ln L(k)`, the strip loss window
    /// `(1 - e^{-2 k xi}) (1 + C_r e^{-2 k (2a - xi)})` in log form.
    pub fn ln_loss_window(&self, k: f64, delta: f64) -> f64 {
        ln_one_minus_exp_neg(2.0 * k * self.xi)
            + ln_one_plus_exp(self.ln_reflection_sq(delta) - 2.0 * k * (2.0 * self.a - self.xi))
    }

    /// Computes the five applicability ceilings by deterministic scan and
    /// bisection of each condition (see [`DeltaThresholds`]).
    pub fn thresholds(&self) -> DeltaThresholds {
        let mu_nonnegative = largest_prefix_valid(DELTA_SCAN_FLOOR, DELTA_CAP, |d| self.mu(d) >= 0.0);
        let product_below_one =
            largest_prefix_valid(DELTA_SCAN_FLOOR, mu_nonnegative, |d| self.ln_m(d) < 0.0);
        let bracket_bounded = largest_prefix_valid(DELTA_SCAN_FLOOR, product_below_one, |d| {
            self.bound_bracket(d) <= BRACKET_CAP
        });
        let contraction = largest_prefix_valid(DELTA_SCAN_FLOOR, product_below_one, |d| {
            (self.xi / self.a) * self.ln_m(d) <= -LN_2
        });
        let psi_minus_convex = largest_prefix_valid(DELTA_SCAN_FLOOR, mu_nonnegative, |d| {
            let dpm = self.delta_plus_mu(d);
            let mu = self.mu(d);
            let combo_grow_sq = (4.0 + d * d) * dpm * dpm / (4.0 * (1.0 + d * d));
            combo_grow_sq.max(mu * mu) <= 2.5 * dpm * dpm
        });
        DeltaThresholds {
            mu_nonnegative,
            product_below_one,
            bracket_bounded,
            contraction,
            psi_minus_convex,
        }
    }

    /// The bracket `25 + 2 lambda delta^{beta+1} + 4 delta^2 +
    /// lambda^2 delta^{2 beta} (4 + delta^2)` controlling the
    /// transfer-denominator lower bound; compared against [`BRACKET_CAP`].
    pub fn bound_bracket(&self, delta: f64) -> f64 {
        let d2 = delta * delta;
        let ldb = self.lambda * delta.powf(self.beta);
        25.0 + 2.0 * ldb * delta + 4.0 * d2 + ldb * ldb * (4.0 + d2)
    }
}
