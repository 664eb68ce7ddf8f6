//! Checks the closed-form truncated-normal moments against adaptive
//! Simpson quadrature of the defining integrals, and the distribution
//! helpers against their basic identities.

use censcorr_core::truncnorm::{
    inverse_mills_ratio, ln_std_normal_cdf, std_normal_cdf, std_normal_pdf, truncated_density,
    upper_truncated_mean, upper_truncated_second_moment, upper_truncated_variance, TruncParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, fa, b, fb, fm, simpson(a, fa, b, fb, fm), tol, 48)
}

/// Standardized moments of t ~ N(0,1) conditioned on t < xi, by
/// quadrature of the defining integrals. Returns (mean, second moment).
fn std_truncated_moments_quadrature(xi: f64) -> (f64, f64) {
    let lo = xi.min(0.0) - 13.0;
    // absolute tolerance scaled to the peak of the integrand so the
    // ratio keeps full relative accuracy when the tail mass is tiny
    let tol = 1e-13 * std_normal_pdf(xi.min(0.0));
    let z = adaptive_simpson(&std_normal_pdf, lo, xi, tol);
    let m1 = adaptive_simpson(&|t: f64| t * std_normal_pdf(t), lo, xi, tol);
    let m2 = adaptive_simpson(&|t: f64| t * t * std_normal_pdf(t), lo, xi, tol);
    (m1 / z, m2 / z)
}

#[test]
fn moments_match_quadrature_on_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mu: f64 = rng.gen_range(-5.0..5.0);
        let beta: f64 = rng.gen_range(0.05..20.0);
        let xi: f64 = rng.gen_range(-6.0..6.0);
        let theta = mu + xi / beta.sqrt();
        let p = TruncParams::new(mu, beta, theta).unwrap();

        let (t1, t2) = std_truncated_moments_quadrature(p.xi());
        let mean_q = mu + t1 / beta.sqrt();
        let second_q = t2 / beta + 2.0 * mu * t1 / beta.sqrt() + mu * mu;
        let var_q = (t2 - t1 * t1) / beta;

        let scale = 1.0 + mean_q.abs();
        let e_mean = (upper_truncated_mean(&p) - mean_q).abs() / scale;
        let e_sec = (upper_truncated_second_moment(&p) - second_q).abs() / (1.0 + second_q.abs());
        let e_var = (upper_truncated_variance(&p) - var_q).abs() / (1.0 + var_q.abs());
        worst = worst.max(e_mean).max(e_sec).max(e_var);
    }
    assert!(worst < 1e-7, "worst moment error vs quadrature: {worst:.3e}");
}

#[test]
fn density_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..50 {
        let mu: f64 = rng.gen_range(-3.0..3.0);
        let beta: f64 = rng.gen_range(0.1..10.0);
        let theta = mu + rng.gen_range(-4.0..4.0) / beta.sqrt();
        let p = TruncParams::new(mu, beta, theta).unwrap();
        let lo = theta.min(mu) - 13.0 / beta.sqrt();
        let total = adaptive_simpson(&|y: f64| truncated_density(y, &p), lo, theta, 1e-12);
        assert!((total - 1.0).abs() < 1e-8, "mass {total} for xi {}", p.xi());
    }
}

proptest! {
    #[test]
    fn pdf_is_symmetric(x in -30.0f64..30.0) {
        let d = (std_normal_pdf(x) - std_normal_pdf(-x)).abs();
        prop_assert!(d <= 1e-16 * (1.0 + std_normal_pdf(x)));
    }

    #[test]
    fn cdf_complement(x in -8.0f64..8.0) {
        prop_assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cdf_is_monotone(x in -37.0f64..8.0, dx in 1e-6f64..2.0) {
        prop_assert!(std_normal_cdf(x + dx) >= std_normal_cdf(x));
    }

    #[test]
    fn ln_cdf_consistent_with_cdf(x in -8.0f64..8.0) {
        let direct = std_normal_cdf(x).ln();
        prop_assert!((ln_std_normal_cdf(x) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }

    /// lambda(x) * Phi(x) = phi(x) must hold to full relative accuracy,
    /// including deep in the left tail.
    #[test]
    fn mills_identity(x in -35.0f64..8.0) {
        let lhs = inverse_mills_ratio(x).ln() + ln_std_normal_cdf(x);
        let rhs = std_normal_pdf(x).ln();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()),
            "x = {x}: lhs {lhs}, rhs {rhs}");
    }

    #[test]
    fn mills_ratio_is_decreasing(x in -30.0f64..8.0, dx in 1e-4f64..1.0) {
        prop_assert!(inverse_mills_ratio(x + dx) <= inverse_mills_ratio(x));
    }

    /// Mean stays strictly below the truncation point and the variance is
    /// positive and no larger than the untruncated variance.
    #[test]
    fn moment_bounds(mu in -5.0f64..5.0, beta in 0.05f64..20.0, xi in -30.0f64..6.0) {
        let theta = mu + xi / beta.sqrt();
        let p = TruncParams::new(mu, beta, theta).unwrap();
        let mean = upper_truncated_mean(&p);
        let var = upper_truncated_variance(&p);
        prop_assert!(mean < theta);
        prop_assert!(var > 0.0);
        prop_assert!(var <= 1.0 / beta * (1.0 + 1e-12));
    }

    /// Law of total moments: second moment minus squared mean equals the
    /// variance form, which is computed without cancellation.
    #[test]
    fn variance_consistency(mu in -3.0f64..3.0, beta in 0.1f64..10.0, xi in -4.0f64..4.0) {
        let theta = mu + xi / beta.sqrt();
        let p = TruncParams::new(mu, beta, theta).unwrap();
        let mean = upper_truncated_mean(&p);
        let second = upper_truncated_second_moment(&p);
        let var = upper_truncated_variance(&p);
        prop_assert!((second - mean * mean - var).abs() < 1e-9 * (1.0 + var));
    }
}
