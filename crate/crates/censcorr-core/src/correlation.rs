//! Correlation estimators for a pair of left-censored series: the naive
//! common-visible estimate, and the two-stage Tobit imputation pipeline
//! (symmetric or asymmetric prior) that completes both series from side
//! information before computing the correlation.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::float;
use crate::linalg::Mat;
use crate::tobit::{EmConfig, EmTrace, FitSettings, PriorKind, TobitError};

/// Known correlation sign of an explanatory variable with a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignLabel {
    Positive,
    Negative,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrError {
    DimensionMismatch,
    /// Fewer than two usable pairs.
    InsufficientData,
    /// A series has zero variance, so the correlation is undefined.
    ZeroVariance,
    /// Tobit stage failure; carries which stage (1 fits B, 2 fits A).
    StageFailed(u8, TobitError),
}

impl fmt::Display for CorrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrError::DimensionMismatch => write!(f, "dimension mismatch"),
            CorrError::InsufficientData => write!(f, "fewer than two usable pairs"),
            CorrError::ZeroVariance => write!(f, "zero variance: correlation undefined"),
            CorrError::StageFailed(stage, e) => write!(f, "imputation stage {stage} failed: {e}"),
        }
    }
}

impl core::error::Error for CorrError {}

/// Two target series with per-entry visibility flags and detection
/// limits, plus fully observed side information. Entries flagged
/// censored hold a sentinel value that is never read as data.
#[derive(Debug, Clone)]
pub struct PairedCensoredData {
    pub y_a: Vec<f64>,
    pub vis_a: Vec<bool>,
    pub theta_a: f64,
    pub y_b: Vec<f64>,
    pub vis_b: Vec<bool>,
    pub theta_b: f64,
    /// One row per observation, one column per side variable.
    pub side_info: Mat,
    /// Sign label per side variable (column of `side_info`).
    pub side_signs: Vec<SignLabel>,
    /// Sign of B as a predictor of A in the second imputation stage.
    pub sign_b: SignLabel,
}

impl PairedCensoredData {
    pub fn n(&self) -> usize {
        self.y_a.len()
    }

    pub fn validate(&self) -> Result<(), CorrError> {
        let n = self.n();
        if self.vis_a.len() != n
            || self.y_b.len() != n
            || self.vis_b.len() != n
            || self.side_info.rows() != n
            || self.side_signs.len() != self.side_info.cols()
        {
            return Err(CorrError::DimensionMismatch);
        }
        Ok(())
    }

    /// Row indices visible in both series.
    pub fn common_visible(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.vis_a[i] && self.vis_b[i])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    SymTobit,
    AsymTobit,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Naive => write!(f, "naive"),
            Method::SymTobit => write!(f, "sym_tobit"),
            Method::AsymTobit => write!(f, "asym_tobit"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub imputed_a: usize,
    pub imputed_b: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage1_trace: Option<EmTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage2_trace: Option<EmTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub method: Method,
    pub r: f64,
    pub n_effective: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct CorrConfig {
    /// Base prior weight for both Tobit stages.
    pub lambda: f64,
    pub em: EmConfig,
    /// When B's predictor sign is unknown, fall back to the sign of the
    /// common-visible sample correlation.
    pub infer_sign_b: bool,
}

impl Default for CorrConfig {
    fn default() -> Self {
        CorrConfig {
            lambda: 1.0,
            em: EmConfig::default(),
            infer_sign_b: true,
        }
    }
}

/// Pearson correlation coefficient of two equal-length series.
pub fn pcc(ya: &[f64], yb: &[f64]) -> Result<f64, CorrError> {
    if ya.len() != yb.len() {
        return Err(CorrError::DimensionMismatch);
    }
    let n = ya.len();
    if n < 2 {
        return Err(CorrError::InsufficientData);
    }
    let ma = ya.iter().sum::<f64>() / n as f64;
    let mb = yb.iter().sum::<f64>() / n as f64;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (a, b) in ya.iter().zip(yb) {
        let da = a - ma;
        let db = b - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va <= 0.0 || vb <= 0.0 {
        return Err(CorrError::ZeroVariance);
    }
    Ok(cov / (float::sqrt(va) * float::sqrt(vb)))
}

/// Naive estimator: correlation over the rows visible in both series.
pub fn naive_pcc(data: &PairedCensoredData) -> Result<CorrelationEstimate, CorrError> {
    data.validate()?;
    let idx = data.common_visible();
    if idx.len() < 2 {
        return Err(CorrError::InsufficientData);
    }
    let ya: Vec<f64> = idx.iter().map(|&i| data.y_a[i]).collect();
    let yb: Vec<f64> = idx.iter().map(|&i| data.y_b[i]).collect();
    Ok(CorrelationEstimate {
        method: Method::Naive,
        r: pcc(&ya, &yb)?,
        n_effective: idx.len(),
        diagnostics: Diagnostics::default(),
    })
}

/// Negates columns labeled negative so every sign-known column is
/// positively correlated with the target, and returns the indices of all
/// sign-known columns (now uniformly positive).
pub fn preprocess_signs(x: &Mat, signs: &[SignLabel]) -> (Mat, Vec<usize>) {
    assert_eq!(signs.len(), x.cols());
    let mut out = x.clone();
    let mut i_pos = Vec::new();
    for (j, sign) in signs.iter().enumerate() {
        match sign {
            SignLabel::Positive => i_pos.push(j),
            SignLabel::Negative => {
                for i in 0..out.rows() {
                    let v = out.get(i, j);
                    out.set(i, j, -v);
                }
                i_pos.push(j);
            }
            SignLabel::Unknown => {}
        }
    }
    (out, i_pos)
}

/// Two-stage Tobit imputation estimator. Stage 1 fits B's series on the
/// side information and completes it; stage 2 fits A's series on the
/// side information plus the completed B and completes it; the estimate
/// is the correlation of the two completed series over all rows.
pub fn tobit_pcc(
    data: &PairedCensoredData,
    prior_kind: PriorKind,
    config: &CorrConfig,
) -> Result<CorrelationEstimate, CorrError> {
    data.validate()?;
    let n = data.n();
    let (x_side, i_pos) = preprocess_signs(&data.side_info, &data.side_signs);

    let stage_settings = |i_pos: Vec<usize>| FitSettings {
        prior_kind,
        lambda: config.lambda,
        i_pos: match prior_kind {
            PriorKind::Symmetric => Vec::new(),
            PriorKind::Asymmetric => i_pos,
        },
        i_neg: Vec::new(),
        em: config.em.clone(),
    };

    // Stage 1: complete B from side information.
    let fit_b = crate::tobit::fit_censored_regression(
        &x_side,
        &data.y_b,
        &data.vis_b,
        data.theta_b,
        &stage_settings(i_pos.clone()),
    )
    .map_err(|e| CorrError::StageFailed(1, e))?;
    let y_b_hat = fit_b
        .impute_series(&x_side, &data.y_b, &data.vis_b, data.theta_b)
        .map_err(|e| CorrError::StageFailed(1, e))?;

    // Stage 2: complete A from side information plus the completed B.
    let d_s = x_side.cols();
    let mut x2 = Mat::zeros(n, d_s + 1);
    let sign_b = effective_sign_b(data, config);
    let flip_b = sign_b == SignLabel::Negative;
    for i in 0..n {
        let row = x2.row_mut(i);
        row[..d_s].copy_from_slice(x_side.row(i));
        row[d_s] = if flip_b { -y_b_hat[i] } else { y_b_hat[i] };
    }
    let mut i_pos2 = i_pos;
    if sign_b != SignLabel::Unknown {
        i_pos2.push(d_s);
    }
    let fit_a = crate::tobit::fit_censored_regression(
        &x2,
        &data.y_a,
        &data.vis_a,
        data.theta_a,
        &stage_settings(i_pos2),
    )
    .map_err(|e| CorrError::StageFailed(2, e))?;
    let y_a_hat = fit_a
        .impute_series(&x2, &data.y_a, &data.vis_a, data.theta_a)
        .map_err(|e| CorrError::StageFailed(2, e))?;

    let r = pcc(&y_a_hat, &y_b_hat)?;
    Ok(CorrelationEstimate {
        method: match prior_kind {
            PriorKind::Symmetric => Method::SymTobit,
            PriorKind::Asymmetric => Method::AsymTobit,
        },
        r,
        n_effective: n,
        diagnostics: Diagnostics {
            imputed_a: data.vis_a.iter().filter(|&&v| !v).count(),
            imputed_b: data.vis_b.iter().filter(|&&v| !v).count(),
            stage1_trace: Some(fit_b.trace),
            stage2_trace: Some(fit_a.trace),
        },
    })
}

/// B's predictor sign for stage 2: the supplied label, or (optionally)
/// the sign of the common-visible sample correlation when unknown.
fn effective_sign_b(data: &PairedCensoredData, config: &CorrConfig) -> SignLabel {
    if data.sign_b != SignLabel::Unknown || !config.infer_sign_b {
        return data.sign_b;
    }
    let idx = data.common_visible();
    if idx.len() < 2 {
        return SignLabel::Unknown;
    }
    let ya: Vec<f64> = idx.iter().map(|&i| data.y_a[i]).collect();
    let yb: Vec<f64> = idx.iter().map(|&i| data.y_b[i]).collect();
    match pcc(&ya, &yb) {
        Ok(r) if r > 0.0 => SignLabel::Positive,
        Ok(r) if r < 0.0 => SignLabel::Negative,
        _ => SignLabel::Unknown,
    }
}
