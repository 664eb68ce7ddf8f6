//! Tobit regression for left-censored targets: model and prior types,
//! likelihood evaluation, the E-step moments, and the NNLS-backed M-step.
//!
//! The generative model is `y = <w, x> + eps`, `eps ~ N(0, 1/beta)`, with
//! `y` observed only when `y >= theta`. The coefficient prior is either
//! the ordinary normal `N(0, I/lambda)` or the asymmetric normal with
//! per-coefficient penalties on the positive and negative parts.

mod em;
mod fit;

pub use em::{fit_em, EmConfig, EmFit, EmIteration, EmTrace, InitPolicy};
pub use fit::{fit_censored_regression, FitSettings, FittedModel, Standardization};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::float;
use crate::linalg::{self, Mat};
use crate::nnls::{self, NnlsError, NnlsProblem};
use crate::truncnorm::{self, TruncParams};

const LN_SQRT_2PI: f64 = 0.9189385332046727;

#[derive(Debug, Clone, PartialEq)]
pub enum TobitError {
    /// Inconsistent vector/matrix dimensions.
    DimensionMismatch,
    /// No rows with an observed target; the likelihood has no anchored
    /// scale.
    NoVisibleRows,
    /// A visible target lies below the detection limit.
    VisibleBelowLimit,
    /// Nonpositive precision or prior weight, or non-finite input.
    InvalidParameter,
    /// Overlapping positive/negative sign sets.
    OverlappingSignSets,
    /// Zero residual with zero conditional variance in the beta update;
    /// add jitter to the targets or loosen the prior.
    ZeroResidual,
    /// Ridge system for the symmetric M-step was not positive definite.
    Singular,
    Nnls(NnlsError),
}

impl fmt::Display for TobitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TobitError::DimensionMismatch => write!(f, "dimension mismatch"),
            TobitError::NoVisibleRows => {
                write!(f, "no visible targets: censored-only data cannot anchor the scale")
            }
            TobitError::VisibleBelowLimit => {
                write!(f, "a visible target lies below the detection limit")
            }
            TobitError::InvalidParameter => {
                write!(f, "parameters must be finite with positive precision/weights")
            }
            TobitError::OverlappingSignSets => {
                write!(f, "positive and negative sign sets overlap")
            }
            TobitError::ZeroResidual => write!(
                f,
                "exact interpolation with zero conditional variance; add jitter to the targets"
            ),
            TobitError::Singular => write!(f, "ridge system is not positive definite"),
            TobitError::Nnls(e) => write!(f, "NNLS subproblem failed: {e}"),
        }
    }
}

impl core::error::Error for TobitError {}

impl From<NnlsError> for TobitError {
    fn from(e: NnlsError) -> Self {
        TobitError::Nnls(e)
    }
}

/// Regression coefficients plus noise precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TobitModel {
    w: Vec<f64>,
    beta: f64,
}

impl TobitModel {
    pub fn new(w: Vec<f64>, beta: f64) -> Result<Self, TobitError> {
        if !(beta > 0.0) || !beta.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(TobitError::InvalidParameter);
        }
        Ok(TobitModel { w, beta })
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Censored dataset split into rows with observed targets and rows whose
/// target fell below the detection limit `theta`. Rows of the matrices
/// are feature vectors.
#[derive(Debug, Clone)]
pub struct RegressionData {
    x_visible: Mat,
    y_visible: Vec<f64>,
    x_hidden: Mat,
    theta: f64,
}

impl RegressionData {
    pub fn new(
        x_visible: Mat,
        y_visible: Vec<f64>,
        x_hidden: Mat,
        theta: f64,
    ) -> Result<Self, TobitError> {
        if y_visible.is_empty() {
            return Err(TobitError::NoVisibleRows);
        }
        if x_visible.rows() != y_visible.len() || x_visible.cols() != x_hidden.cols() {
            return Err(TobitError::DimensionMismatch);
        }
        if !theta.is_finite()
            || !x_visible.is_finite()
            || !x_hidden.is_finite()
            || y_visible.iter().any(|v| !v.is_finite())
        {
            return Err(TobitError::InvalidParameter);
        }
        if y_visible.iter().any(|&y| y < theta) {
            return Err(TobitError::VisibleBelowLimit);
        }
        Ok(RegressionData {
            x_visible,
            y_visible,
            x_hidden,
            theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_visible.cols()
    }

    pub fn n_visible(&self) -> usize {
        self.y_visible.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.x_hidden.rows()
    }

    pub fn n(&self) -> usize {
        self.n_visible() + self.n_hidden()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn x_visible(&self) -> &Mat {
        &self.x_visible
    }

    pub fn x_hidden(&self) -> &Mat {
        &self.x_hidden
    }

    pub fn y_visible(&self) -> &[f64] {
        &self.y_visible
    }

    /// Feature vector of row `i` in visible-then-hidden order.
    pub fn row(&self, i: usize) -> &[f64] {
        if i < self.n_visible() {
            self.x_visible.row(i)
        } else {
            self.x_hidden.row(i - self.n_visible())
        }
    }

    /// `sum_i x_i x_i^T` over all rows.
    pub(crate) fn gram(&self) -> Mat {
        let d = self.dim();
        let mut s = Mat::zeros(d, d);
        for i in 0..self.n() {
            let x = self.row(i);
            for h in 0..d {
                let xh = x[h];
                if xh == 0.0 {
                    continue;
                }
                let row = s.row_mut(h);
                for (rj, xj) in row.iter_mut().zip(x) {
                    *rj += xh * xj;
                }
            }
        }
        s
    }

    /// `sum_i x_i t_i` for a length-n vector `t` in row order.
    pub(crate) fn weighted_feature_sum(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..self.n() {
            let ti = t[i];
            for (oj, xj) in out.iter_mut().zip(self.row(i)) {
                *oj += ti * xj;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Symmetric,
    Asymmetric,
}

/// Coefficient prior description: a single base weight for the symmetric
/// normal, or per-coefficient positive/negative penalties for the
/// asymmetric normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub lambda: f64,
    pub lambda_pos: Vec<f64>,
    pub lambda_neg: Vec<f64>,
}

impl PriorSpec {
    pub fn symmetric(lambda: f64, d: usize) -> Result<Self, TobitError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(TobitError::InvalidParameter);
        }
        Ok(PriorSpec {
            kind: PriorKind::Symmetric,
            lambda,
            lambda_pos: vec![lambda; d],
            lambda_neg: vec![lambda; d],
        })
    }

    pub fn asymmetric(
        lambda: f64,
        lambda_pos: Vec<f64>,
        lambda_neg: Vec<f64>,
    ) -> Result<Self, TobitError> {
        if !(lambda > 0.0)
            || lambda_pos.len() != lambda_neg.len()
            || lambda_pos.iter().chain(&lambda_neg).any(|&l| !(l > 0.0) || !l.is_finite())
        {
            return Err(TobitError::InvalidParameter);
        }
        Ok(PriorSpec {
            kind: PriorKind::Asymmetric,
            lambda,
            lambda_pos,
            lambda_neg,
        })
    }

    /// Asymmetric prior from known correlation signs (indices into the
    /// coefficient vector): negatively-signed coefficients get a 100x
    /// positive-part penalty and vice versa.
    pub fn from_sign_sets(
        i_pos: &[usize],
        i_neg: &[usize],
        lambda: f64,
        d: usize,
    ) -> Result<Self, TobitError> {
        let (lp, ln) = build_lambda_vectors(i_pos, i_neg, lambda, d)?;
        PriorSpec::asymmetric(lambda, lp, ln)
    }

    pub fn dim(&self) -> usize {
        self.lambda_pos.len()
    }
}

/// Per-coefficient penalty vectors from sign knowledge:
/// `lambda_pos[h] = 100 lambda` for `h` in the negative set, else
/// `lambda`; `lambda_neg[h] = 100 lambda` for `h` in the positive set,
/// else `lambda`.
pub fn build_lambda_vectors(
    i_pos: &[usize],
    i_neg: &[usize],
    lambda: f64,
    d: usize,
) -> Result<(Vec<f64>, Vec<f64>), TobitError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(TobitError::InvalidParameter);
    }
    if i_pos.iter().chain(i_neg).any(|&h| h >= d) {
        return Err(TobitError::DimensionMismatch);
    }
    if i_pos.iter().any(|h| i_neg.contains(h)) {
        return Err(TobitError::OverlappingSignSets);
    }
    let mut lp = vec![lambda; d];
    let mut ln = vec![lambda; d];
    for &h in i_neg {
        lp[h] = 100.0 * lambda;
    }
    for &h in i_pos {
        ln[h] = 100.0 * lambda;
    }
    Ok((lp, ln))
}

/// Tobit log-likelihood `L0(w, beta)`:
/// `(n_v/2) log beta + sum_v log phi(sqrt(beta)(y - <w,x>))
///  + sum_h log Phi(sqrt(beta)(theta - <w,x>))`.
pub fn tobit_loglik(model: &TobitModel, data: &RegressionData) -> Result<f64, TobitError> {
    if model.dim() != data.dim() {
        return Err(TobitError::DimensionMismatch);
    }
    let beta = model.beta();
    let s = float::sqrt(beta);
    let mut l = 0.5 * data.n_visible() as f64 * float::ln(beta);
    for (i, &y) in data.y_visible.iter().enumerate() {
        let z = s * (y - linalg::dot(model.w(), data.x_visible.row(i)));
        l += -0.5 * z * z - LN_SQRT_2PI;
    }
    for i in 0..data.n_hidden() {
        let z = s * (data.theta - linalg::dot(model.w(), data.x_hidden.row(i)));
        l += truncnorm::ln_std_normal_cdf(z);
    }
    Ok(l)
}

/// Log density of the coefficient prior at `w`. For the symmetric kind
/// this equals the `N(0, I/lambda)` log density.
pub fn log_prior(w: &[f64], prior: &PriorSpec) -> Result<f64, TobitError> {
    if w.len() != prior.dim() {
        return Err(TobitError::DimensionMismatch);
    }
    const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;
    let mut l = 0.0;
    for ((&wh, &lp), &ln) in w.iter().zip(&prior.lambda_pos).zip(&prior.lambda_neg) {
        let pos = wh.max(0.0);
        let neg = (-wh).max(0.0);
        let z = float::sqrt(FRAC_PI_2 / lp) + float::sqrt(FRAC_PI_2 / ln);
        l += -(lp * pos * pos + ln * neg * neg) / 2.0 - float::ln(z);
    }
    Ok(l)
}

/// `log p(w) + L0(w, beta)`.
pub fn regularized_loglik(
    model: &TobitModel,
    data: &RegressionData,
    prior: &PriorSpec,
) -> Result<f64, TobitError> {
    Ok(log_prior(model.w(), prior)? + tobit_loglik(model, data)?)
}

/// E-step summary: expected completed targets (visible entries first,
/// then one conditional mean per hidden row) and the total conditional
/// variance `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub y_bar: Vec<f64>,
    pub v: f64,
}

pub fn e_step(model: &TobitModel, data: &RegressionData) -> Result<EStep, TobitError> {
    if model.dim() != data.dim() {
        return Err(TobitError::DimensionMismatch);
    }
    let mut y_bar = data.y_visible.clone();
    y_bar.reserve(data.n_hidden());
    let mut v = 0.0;
    for i in 0..data.n_hidden() {
        let mu = linalg::dot(model.w(), data.x_hidden.row(i));
        let p = TruncParams::new(mu, model.beta(), data.theta)
            .map_err(|_| TobitError::InvalidParameter)?;
        let (mean, var) = truncnorm::upper_truncated_mean_variance(&p);
        y_bar.push(mean);
        v += var;
    }
    Ok(EStep { y_bar, v })
}

/// Assembles the M-step NNLS system for the coefficient update: the
/// `2d x (n + 2d)` matrix
/// `[[X, diag(lp/beta)^{1/2}, 0], [-X, 0, diag(ln/beta)^{1/2}]]`
/// (columns of `X` are the feature vectors) and the right-hand side
/// `[y_bar; 0]`.
pub fn build_mstep_system(
    data: &RegressionData,
    prior: &PriorSpec,
    beta_prev: f64,
    y_bar: &[f64],
) -> Result<NnlsProblem, TobitError> {
    let d = data.dim();
    let n = data.n();
    if prior.dim() != d || y_bar.len() != n {
        return Err(TobitError::DimensionMismatch);
    }
    if !(beta_prev > 0.0) || !beta_prev.is_finite() {
        return Err(TobitError::InvalidParameter);
    }
    let mut a = Mat::zeros(2 * d, n + 2 * d);
    for h in 0..d {
        for i in 0..n {
            let xv = data.row(i)[h];
            a.set(h, i, xv);
            a.set(d + h, i, -xv);
        }
        a.set(h, n + h, float::sqrt(prior.lambda_pos[h] / beta_prev));
        a.set(d + h, n + d + h, float::sqrt(prior.lambda_neg[h] / beta_prev));
    }
    let mut b = y_bar.to_vec();
    b.extend(core::iter::repeat(0.0).take(2 * d));
    NnlsProblem::new(a, b).map_err(TobitError::Nnls)
}

/// Coefficient update of the M-step: solves the NNLS system and returns
/// `w = w_plus - w_minus`.
pub fn m_step_w(
    data: &RegressionData,
    prior: &PriorSpec,
    beta_prev: f64,
    y_bar: &[f64],
) -> Result<Vec<f64>, TobitError> {
    let problem = build_mstep_system(data, prior, beta_prev, y_bar)?;
    let sol = nnls::solve_nnls_with(&problem, &nnls::NnlsOptions::default())?;
    let d = data.dim();
    Ok((0..d).map(|h| sol.x[h] - sol.x[d + h]).collect())
}

/// Precision update of the M-step: `beta = n / (||X^T w - y_bar||^2 + v)`.
pub fn m_step_beta(
    data: &RegressionData,
    w: &[f64],
    y_bar: &[f64],
    v: f64,
) -> Result<f64, TobitError> {
    let n = data.n();
    if w.len() != data.dim() || y_bar.len() != n {
        return Err(TobitError::DimensionMismatch);
    }
    let mut resid2 = 0.0;
    for i in 0..n {
        let r = linalg::dot(w, data.row(i)) - y_bar[i];
        resid2 += r * r;
    }
    let denom = resid2 + v;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(TobitError::ZeroResidual);
    }
    Ok(n as f64 / denom)
}

/// The EM Q-function at the expected completion `(y_bar, v)`:
/// `log p(w) + (n/2) log beta - (n/2) log 2pi
///  - (beta/2)(||X^T w - y_bar||^2 + v)`.
pub fn q_function(
    w: &[f64],
    beta: f64,
    data: &RegressionData,
    prior: &PriorSpec,
    y_bar: &[f64],
    v: f64,
) -> Result<f64, TobitError> {
    if w.len() != data.dim() || y_bar.len() != data.n() {
        return Err(TobitError::DimensionMismatch);
    }
    let n = data.n() as f64;
    let mut resid2 = v;
    for i in 0..data.n() {
        let r = linalg::dot(w, data.row(i)) - y_bar[i];
        resid2 += r * r;
    }
    Ok(log_prior(w, prior)? + 0.5 * n * float::ln(beta) - n * LN_SQRT_2PI - 0.5 * beta * resid2)
}

/// Completed target vector in visible-then-hidden row order: observed
/// entries unchanged, censored entries replaced by their conditional
/// mean `E[y | y < theta, x]` (always strictly below `theta`).
pub fn impute(model: &TobitModel, data: &RegressionData) -> Result<Vec<f64>, TobitError> {
    let es = e_step(model, data)?;
    Ok(es.y_bar)
}
