//! Randomized property tests for the algebraic invariants the solver
//! rests on: route agreement for the transfer denominator, evenness in
//! the wavenumber, monotone loss windows, the critical-depth formula,
//! scaled-arithmetic consistency, charge scaling of the dissipation,
//! conjugate symmetry of source transforms, and configuration
//! serialization round-trips.

use num_complex::Complex64;
use proptest::prelude::*;
use slablens::dissipation::{DissipationOptions, DissipationSolver};
use slablens::par::ExecMode;
use slablens::scaled::ScaledComplex;
use slablens::slab::SlabConfig;
use slablens::source::Source;
use slablens::sweep::{preset, RunConfig};

/// Log-uniform sampler over `[lo, hi]`.
fn log_in(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// Feasible loss-model parameters. Positive amplitudes are admissible at
/// every exponent; negative amplitudes only for exponents above one, kept
/// away from the boundary so the loss stays positive over the sampled
/// range.
fn loss_model() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        (0.05f64..3.0, 0.05f64..4.0),
        (1.3f64..3.0, 0.05f64..2.0).prop_map(|(beta, mag)| (beta, -mag)),
    ]
    .prop_map(|(beta, lambda)| (lambda, beta))
}

/// A feasible slab with the strip depth inside the slab.
fn slab_strategy() -> impl Strategy<Value = SlabConfig> {
    (0.3f64..5.0, loss_model(), 0.05f64..0.95).prop_map(|(a, (lambda, beta), xi_frac)| {
        SlabConfig::new(a, lambda, beta, xi_frac * a).expect("sampled slab is feasible")
    })
}

/// Angle difference wrapped to `(-pi, pi]`.
fn wrapped(p: f64, q: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (p - q).rem_euclid(two_pi);
    if d > std::f64::consts::PI { d - two_pi } else { d }
}

proptest! {
    /// The three routes to the transfer denominator agree: scaled-product
    /// arithmetic, the log-sum-exp modulus, and (at moderate loss) the
    /// unrearranged complex product.
    #[test]
    fn transfer_denominator_routes_agree(
        slab in slab_strategy(),
        k in log_in(1e-3, 30.0),
        delta in log_in(1e-80, 0.03),
    ) {
        let scaled = slab.transfer_denominator(k, delta);
        let ln_sq = slab.ln_mod_g_sq(k, delta);
        let tol = 1e-9 * ln_sq.abs().max(1.0);
        prop_assert!(
            (2.0 * scaled.log_magnitude() - ln_sq).abs() <= tol,
            "scaled route {} vs log-sum-exp route {}",
            2.0 * scaled.log_magnitude(),
            ln_sq
        );
        prop_assert!(ln_sq >= 2.0 * delta.ln() - 1e-12, "|g| >= delta floor violated");
        if delta >= 1e-60 {
            let direct = slab.transfer_denominator_direct(k, delta);
            prop_assert!(
                (direct.norm().ln() - 0.5 * ln_sq).abs() <= tol,
                "direct route modulus diverges"
            );
            prop_assert!(
                wrapped(scaled.phase(), direct.arg()).abs() <= 1e-9,
                "direct route phase diverges: {} vs {}",
                scaled.phase(),
                direct.arg()
            );
        }
    }

    /// The denominator depends on the wavenumber only through its
    /// magnitude.
    #[test]
    fn transfer_denominator_is_even_in_k(
        slab in slab_strategy(),
        k in log_in(1e-3, 30.0),
        delta in log_in(1e-40, 0.03),
    ) {
        let plus = slab.transfer_denominator(k, delta);
        let minus = slab.transfer_denominator(-k, delta);
        prop_assert_eq!(plus.log_magnitude(), minus.log_magnitude());
        prop_assert_eq!(plus.phase(), minus.phase());
    }

    /// Deepening the measurement strip never shrinks the loss window.
    #[test]
    fn loss_window_grows_with_strip_depth(
        a in 0.3f64..5.0,
        model in loss_model(),
        frac_lo in 0.05f64..0.5,
        frac_hi in 0.55f64..0.95,
        k in log_in(1e-3, 200.0),
        delta in log_in(1e-40, 0.03),
    ) {
        let (lambda, beta) = model;
        let shallow = SlabConfig::new(a, lambda, beta, frac_lo * a).expect("feasible");
        let deep = SlabConfig::new(a, lambda, beta, frac_hi * a).expect("feasible");
        prop_assert!(
            deep.ln_loss_window(k, delta) >= shallow.ln_loss_window(k, delta) - 1e-12,
            "window shrank when the strip deepened"
        );
    }

    /// The critical-depth ratio follows its closed form below exponent
    /// one, decreases there, and saturates at 3/2 from exponent one on.
    #[test]
    fn critical_depth_ratio_matches_its_formula(
        a in 0.3f64..5.0,
        lambda in 0.05f64..4.0,
        beta_lo in 0.01f64..0.98,
        eps in 1e-9f64..0.5,
        beta_hi in 1.0f64..4.0,
    ) {
        let tau_of = |beta: f64| {
            SlabConfig::new(a, lambda, beta, 0.25 * a).expect("feasible").tau()
        };
        let tau = tau_of(beta_lo);
        prop_assert!((tau - (beta_lo + 2.0) / (beta_lo + 1.0)).abs() <= 1e-15);
        prop_assert!(tau_of(beta_lo + 0.01) < tau, "ratio must decrease below one");
        let near_one = tau_of(1.0 - eps) - 1.5;
        prop_assert!(
            near_one > 0.0 && near_one <= eps,
            "ratio must approach 3/2 from above, got excess {near_one}"
        );
        prop_assert_eq!(tau_of(beta_hi), 1.5);
    }

    /// Scaled complex arithmetic is consistent with plain complex
    /// arithmetic wherever the latter is representable.
    #[test]
    fn scaled_arithmetic_matches_complex_arithmetic(
        re1 in -50.0f64..50.0,
        im1 in -50.0f64..50.0,
        re2 in -50.0f64..50.0,
        im2 in -50.0f64..50.0,
        shift in -600.0f64..600.0,
    ) {
        let z1 = Complex64::new(re1, im1);
        let z2 = Complex64::new(re2, im2);
        prop_assume!(z1.norm() > 1e-6 && z2.norm() > 1e-6);
        let s1 = ScaledComplex::from_complex(z1);
        let s2 = ScaledComplex::from_complex(z2);

        let round = s1.to_complex();
        prop_assert!((round - z1).norm() <= 1e-13 * z1.norm());

        let prod = (s1 * s2).to_complex();
        prop_assert!((prod - z1 * z2).norm() <= 1e-12 * (z1 * z2).norm());
        let quot = (s1 / s2).to_complex();
        prop_assert!((quot - z1 / z2).norm() <= 1e-12 * (z1 / z2).norm());

        // Addition loses relative accuracy only through cancellation.
        let sum = z1 + z2;
        if sum.norm() > 1e-3 * (z1.norm() + z2.norm()) {
            prop_assert!(((s1 + s2).to_complex() - sum).norm() <= 1e-11 * sum.norm());
        }

        prop_assert_eq!(s1.conj().conj().log_magnitude(), s1.log_magnitude());
        prop_assert_eq!(s1.conj().conj().phase(), s1.phase());
        let sq = s1.norm_sqr();
        prop_assert!((sq.log_magnitude() - 2.0 * s1.log_magnitude()).abs() <= 1e-12);
        prop_assert_eq!(sq.phase(), 0.0);
        let shifted = s1.exp_shift(shift).log_magnitude();
        let expected = s1.log_magnitude() + shift;
        prop_assert!((shifted - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    /// Source transforms of real densities are conjugate symmetric in the
    /// transverse wavenumber.
    #[test]
    fn source_transforms_are_conjugate_symmetric(
        kind in 0usize..3,
        q in prop_oneof![0.1f64..5.0, -5.0f64..-0.1],
        cx in 2.0f64..8.0,
        cy in -4.0f64..4.0,
        r1 in 0.2f64..1.5,
        r2 in 0.2f64..1.5,
        k in log_in(1e-2, 40.0),
        t in 0.05f64..0.95,
        cells in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let source = match kind {
            0 => Source::rectangle(q, cx, cy, r1, r2).expect("valid"),
            1 => Source::circle(q, cx, cy, r1).expect("valid"),
            _ => {
                // Grid densities must be charge-neutral and not all zero.
                let mut values = cells;
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                for v in &mut values {
                    *v -= mean;
                }
                if values.iter().map(|v| v.abs()).sum::<f64>() < 1e-6 {
                    values[0] += 1.0;
                    values[1] -= 1.0;
                }
                Source::grid(cx, cy, 0.5 * r1, 0.5 * r2, 3, 2, values).expect("valid")
            }
        };
        let sup = source.support();
        let x = sup.x_min + t * (sup.x_max - sup.x_min);
        let plus = source.rho_hat(k, x);
        let minus = source.rho_hat(-k, x);
        let scale = plus.norm().max(1e-300);
        prop_assert!(
            (minus - plus.conj()).norm() <= 1e-12 * scale,
            "rho_hat(-k) = {minus} vs conj(rho_hat(k)) = {:?}",
            plus.conj()
        );
    }

    /// Configurations survive a serialize/parse/serialize round-trip
    /// byte for byte.
    #[test]
    fn config_serialization_round_trips(
        lambda in 0.1f64..4.0,
        xi_over_a in 0.05f64..0.95,
        q in prop_oneof![0.1f64..5.0, -5.0f64..-0.1],
        betas in prop::collection::vec(0.05f64..3.0, 1..4),
        ppd in 2usize..40,
        rel_tol in log_in(1e-10, 1e-6),
        delta_start in log_in(1e-4, 1e-2),
        delta_stop in log_in(1e-12, 1e-6),
    ) {
        let mut config = preset("fig6").expect("bundled preset");
        config.slab.lambda = lambda;
        config.slab.xi_over_a = xi_over_a;
        config.source.q = q;
        config.sweep.betas = betas;
        config.sweep.points_per_decade = ppd;
        config.sweep.delta_start = Some(delta_start);
        config.sweep.delta_stop = Some(delta_stop);
        config.tolerances.rel_tol = rel_tol;
        let first = config.to_toml();
        let reparsed = RunConfig::from_toml(&first).expect("own output parses");
        prop_assert_eq!(first, reparsed.to_toml());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Dissipated power scales with the squared charge: doubling the
    /// source density quadruples the measured loss, to quadrature
    /// accuracy.
    #[test]
    fn dissipation_scales_with_squared_charge(
        q in prop_oneof![log_in(0.1, 10.0), log_in(0.1, 10.0).prop_map(|v| -v)],
        cx in 2.6f64..4.0,
        half_width in 0.2f64..1.0,
        lobe_height in 0.2f64..1.0,
    ) {
        let slab = SlabConfig::new(1.0, 1.0, 0.5, 0.25).expect("feasible");
        let opts = DissipationOptions { rel_tol: 1e-10, ..DissipationOptions::default() };
        let evaluate = |charge: f64| {
            let source = Source::rectangle(charge, cx, 0.0, half_width, lobe_height)
                .expect("valid");
            let solver = DissipationSolver::new(slab.clone(), source).expect("solver");
            let r = solver.evaluate(1e-6, &opts, ExecMode::Sequential).expect("evaluates");
            prop_assert!(r.converged);
            Ok(r.ln_value)
        };
        let ln_unit = evaluate(1.0)?;
        let ln_charged = evaluate(q)?;
        let expected = ln_unit + 2.0 * q.abs().ln();
        prop_assert!(
            (ln_charged - expected).abs() <= 1e-9,
            "ln E(q) = {ln_charged} vs ln(q^2 E(1)) = {expected}"
        );
    }
}
