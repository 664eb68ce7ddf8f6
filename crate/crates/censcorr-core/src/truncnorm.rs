//! Standard normal and upper-truncated normal machinery.
//!
//! The truncated distribution here is a normal `N(mu, 1/beta)` conditioned
//! on `y < theta` (upper tail removed), which is the conditional law of a
//! target below its detection limit. Its first two moments drive the
//! E-step imputations.

use core::fmt;

use crate::float;

const SQRT_2PI: f64 = 2.5066282746310002;
const LN_SQRT_2PI: f64 = 0.9189385332046727;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Location/precision/truncation-point triple for the upper-truncated
/// normal. `beta` is a precision (inverse variance) and must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncParams {
    mu: f64,
    beta: f64,
    theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncError {
    /// `beta <= 0` or not finite.
    NonPositivePrecision,
    /// `mu` or `theta` not finite.
    NonFinite,
}

impl fmt::Display for TruncError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruncError::NonPositivePrecision => {
                write!(f, "precision beta must be positive and finite")
            }
            TruncError::NonFinite => write!(f, "mu and theta must be finite"),
        }
    }
}

impl core::error::Error for TruncError {}

impl TruncParams {
    pub fn new(mu: f64, beta: f64, theta: f64) -> Result<Self, TruncError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(TruncError::NonPositivePrecision);
        }
        if !mu.is_finite() || !theta.is_finite() {
            return Err(TruncError::NonFinite);
        }
        Ok(TruncParams { mu, beta, theta })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Standardized truncation point `(theta - mu) * sqrt(beta)`.
    pub fn xi(&self) -> f64 {
        (self.theta - self.mu) * float::sqrt(self.beta)
    }
}

/// Standard normal density `phi(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    float::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal CDF `Phi(x)`, via the complementary error function so
/// the deep lower tail keeps full relative accuracy instead of rounding
/// to zero.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * float::erfc(-x * FRAC_1_SQRT_2)
}

/// `log Phi(x)`, finite for all finite `x`.
///
/// For moderately negative arguments the direct logarithm of the erfc
/// form is accurate; far in the tail `Phi` underflows, so the value is
/// assembled from the inverse Mills ratio: `Phi(x) = phi(x) / imr(x)`.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > CF_CUTOFF {
        float::ln(std_normal_cdf(x))
    } else {
        -0.5 * x * x - LN_SQRT_2PI - float::ln(mills_cf(-x))
    }
}

/// Below this the erfc-based `Phi` nears underflow and the direct
/// quotient loses relative accuracy; above it `erfc` keeps a few-ulp
/// relative error, so the quotient is both accurate and fixed-cost. A
/// single cutoff for every caller keeps the per-evaluation cost
/// independent of where in the tail the argument lands.
const CF_CUTOFF: f64 = -37.0;

/// Asymptotic expansion of `phi(x)/Phi(x)` at `x = -t`:
/// `t (1 + u - 2u^2 + 10u^3 - 74u^4 + 706u^5 + O(u^6))` with
/// `u = 1/t^2`, obtained by inverting the Mills-ratio series
/// `(1 - u + 3u^2 - 15u^3 + ...) / t`. For `t >= 37` the truncation
/// error is below 1e-14 relative and the cost is a fixed handful of
/// multiplications.
fn mills_cf(t: f64) -> f64 {
    let u = 1.0 / (t * t);
    t * (1.0 + u * (1.0 - u * (2.0 - u * (10.0 - u * (74.0 - 706.0 * u)))))
}

/// Inverse Mills ratio `phi(x)/Phi(x)`, stable for large negative `x`
/// where both numerator and denominator underflow.
pub fn inverse_mills_ratio(x: f64) -> f64 {
    if x > CF_CUTOFF {
        std_normal_pdf(x) / std_normal_cdf(x)
    } else {
        mills_cf(-x)
    }
}

/// Density of the upper-truncated normal: zero on `[theta, inf)`,
/// `sqrt(beta) phi(sqrt(beta)(y - mu)) / Phi(xi)` below it.
pub fn truncated_density(y: f64, p: &TruncParams) -> f64 {
    if y >= p.theta {
        return 0.0;
    }
    let s = float::sqrt(p.beta);
    let z = s * (y - p.mu);
    // log space: the normalizer Phi(xi) underflows when the truncation
    // point is far below the location.
    float::exp(float::ln(s) - 0.5 * z * z - LN_SQRT_2PI - ln_std_normal_cdf(p.xi()))
}

/// `E[y | y < theta]` of the truncated normal:
/// `mu - imr(xi) / sqrt(beta)`.
pub fn upper_truncated_mean(p: &TruncParams) -> f64 {
    p.mu - inverse_mills_ratio(p.xi()) / float::sqrt(p.beta)
}

/// `E[y^2 | y < theta]` of the truncated normal:
/// `(1 - xi imr(xi))/beta + mu^2 - 2 imr(xi) mu / sqrt(beta)`.
pub fn upper_truncated_second_moment(p: &TruncParams) -> f64 {
    let xi = p.xi();
    let l = inverse_mills_ratio(xi);
    (1.0 - xi * l) / p.beta + p.mu * p.mu - 2.0 * l * p.mu / float::sqrt(p.beta)
}

/// Conditional variance `E[y^2|y<theta] - E[y|y<theta]^2`, in the form
/// `(1 - imr(xi)(imr(xi) + xi)) / beta`. For deep truncation
/// `imr(xi) + xi` is a small positive quantity and `imr(xi)(imr(xi)+xi)`
/// approaches 1 from below, so the result stays positive; a floor guards
/// the last few ulps.
pub fn upper_truncated_variance(p: &TruncParams) -> f64 {
    let xi = p.xi();
    let l = inverse_mills_ratio(xi);
    let v = (1.0 - l * (l + xi)) / p.beta;
    v.max(f64::MIN_POSITIVE)
}

/// Conditional mean and variance in one pass, sharing the single Mills
/// ratio evaluation both need.
pub fn upper_truncated_mean_variance(p: &TruncParams) -> (f64, f64) {
    let xi = p.xi();
    let l = inverse_mills_ratio(xi);
    let mean = p.mu - l / float::sqrt(p.beta);
    let var = ((1.0 - l * (l + xi)) / p.beta).max(f64::MIN_POSITIVE);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2_OVER_PI: f64 = 0.7978845608028654;

    #[test]
    fn pdf_anchors() {
        assert!((std_normal_pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert!((std_normal_pdf(1.0) - 0.24197072451914337).abs() < 1e-15);
        assert_eq!(std_normal_pdf(-1.0), std_normal_pdf(1.0));
    }

    #[test]
    fn cdf_anchors() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        // deep tail must not underflow to zero
        let p = std_normal_cdf(-8.0);
        assert!(p > 0.0);
        assert!((p / 6.220960574271786e-16 - 1.0).abs() < 1e-10);
        assert!(std_normal_cdf(-10.0) > 0.0);
    }

    #[test]
    fn imr_anchors() {
        assert!((inverse_mills_ratio(0.0) - SQRT_2_OVER_PI).abs() < 1e-14);
        // phi(1)/Phi(1), reference value
        assert!((inverse_mills_ratio(1.0) - 0.28759997093917833).abs() < 1e-13);
        // large negative argument: naive double evaluation loses accuracy
        assert!((inverse_mills_ratio(-10.0) - 10.09809323396251).abs() < 1e-9);
    }

    #[test]
    fn imr_continuous_at_cutoff() {
        let below = inverse_mills_ratio(CF_CUTOFF - 1e-9);
        let above = inverse_mills_ratio(CF_CUTOFF + 1e-9);
        assert!((below - above).abs() < 1e-8 * below);
    }

    #[test]
    fn params_validation() {
        assert_eq!(
            TruncParams::new(0.0, 0.0, 0.0),
            Err(TruncError::NonPositivePrecision)
        );
        assert_eq!(
            TruncParams::new(0.0, -1.0, 0.0),
            Err(TruncError::NonPositivePrecision)
        );
        assert_eq!(
            TruncParams::new(f64::NAN, 1.0, 0.0),
            Err(TruncError::NonFinite)
        );
        assert_eq!(
            TruncParams::new(0.0, 1.0, f64::INFINITY),
            Err(TruncError::NonFinite)
        );
        assert!(TruncParams::new(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn density_boundary_and_value() {
        let p = TruncParams::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(truncated_density(0.0, &p), 0.0);
        assert_eq!(truncated_density(1.0, &p), 0.0);
        // phi(0.5)/Phi(0) = 2 phi(0.5)
        let d = truncated_density(-0.5, &p);
        assert!((d - 2.0 * std_normal_pdf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn half_normal_moments() {
        let p = TruncParams::new(0.0, 1.0, 0.0).unwrap();
        assert!((upper_truncated_mean(&p) + SQRT_2_OVER_PI).abs() < 1e-13);
        assert!((upper_truncated_second_moment(&p) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn far_truncation_is_no_truncation() {
        let p = TruncParams::new(0.0, 1.0, 50.0).unwrap();
        assert!(upper_truncated_mean(&p).abs() < 1e-12);
        assert!((upper_truncated_second_moment(&p) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shifted_mean_anchor() {
        // mu=2, beta=4, theta=1 -> 2 - 0.5 * imr(-2)
        let p = TruncParams::new(2.0, 4.0, 1.0).unwrap();
        let expect = 2.0 - 0.5 * inverse_mills_ratio(-2.0);
        assert!((upper_truncated_mean(&p) - expect).abs() < 1e-14);
        assert!((upper_truncated_mean(&p) - 0.8133922335885796).abs() < 1e-12);
    }

    #[test]
    fn variance_positive_even_deep_in_tail() {
        // leading term of the deep-tail expansion is 1/xi^2
        for &xi in &[-50.0f64, -200.0, -1000.0] {
            let p = TruncParams::new(-xi, 1.0, 0.0).unwrap(); // xi = theta - mu
            let v = upper_truncated_variance(&p);
            assert!(v > 0.0);
            assert!((v * xi * xi - 1.0).abs() < 0.01, "xi {xi}: v {v}");
            assert!(upper_truncated_mean(&p) < p.theta());
        }
    }
}
