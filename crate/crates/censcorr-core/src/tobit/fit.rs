//! Fitting front end over raw feature rows: z-scores the explanatory
//! variables on visible-row statistics, appends a constant intercept
//! feature (always under the symmetric base prior weight), runs the EM
//! loop, and maps imputations back to the caller's row order.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::truncnorm::{self, TruncParams};

use super::{
    fit_em, EmConfig, EmTrace, PriorKind, PriorSpec, RegressionData, TobitError, TobitModel,
};

#[derive(Debug, Clone)]
pub struct FitSettings {
    pub prior_kind: PriorKind,
    /// Base regularization weight on standardized features.
    pub lambda: f64,
    /// Feature indices known to be positively correlated with the target
    /// (after any sign preprocessing).
    pub i_pos: Vec<usize>,
    /// Feature indices known to be negatively correlated with the target.
    pub i_neg: Vec<usize>,
    pub em: EmConfig,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            prior_kind: PriorKind::Symmetric,
            lambda: 1.0,
            i_pos: Vec::new(),
            i_neg: Vec::new(),
            em: EmConfig::default(),
        }
    }
}

/// Visible-row feature means and standard deviations used for z-scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    fn from_visible(features: &Mat, visible: &[bool]) -> Self {
        let d = features.cols();
        let mut means = vec![0.0; d];
        let mut count = 0usize;
        for (i, &vis) in visible.iter().enumerate() {
            if vis {
                count += 1;
                for (m, x) in means.iter_mut().zip(features.row(i)) {
                    *m += x;
                }
            }
        }
        let count = count.max(1) as f64;
        for m in means.iter_mut() {
            *m /= count;
        }
        let mut stds = vec![0.0; d];
        for (i, &vis) in visible.iter().enumerate() {
            if vis {
                for ((s, m), x) in stds.iter_mut().zip(&means).zip(features.row(i)) {
                    *s += (x - m) * (x - m);
                }
            }
        }
        for s in stds.iter_mut() {
            *s = libm::sqrt(*s / count);
            // constant-on-visible features pass through unscaled
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardization { means, stds }
    }

    fn scale_row(&self, raw: &[f64], out: &mut [f64]) {
        for (j, x) in raw.iter().enumerate() {
            out[j] = (x - self.means[j]) / self.stds[j];
        }
        out[raw.len()] = 1.0; // intercept
    }
}

/// A fitted Tobit model together with everything needed to reuse it:
/// coefficients in standardized space (intercept last), the noise
/// precision, the prior, and the standardization statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    /// Coefficients on z-scored features, intercept last.
    pub w: Vec<f64>,
    pub beta: f64,
    pub prior: PriorSpec,
    pub standardization: Standardization,
    pub trace: EmTrace,
}

impl FittedModel {
    /// Linear predictor `<w, x>` for a raw (unscaled) feature row.
    pub fn predict(&self, raw: &[f64]) -> f64 {
        let d = raw.len();
        debug_assert_eq!(d + 1, self.w.len());
        let mut acc = self.w[d];
        for j in 0..d {
            acc += self.w[j] * (raw[j] - self.standardization.means[j]) / self.standardization.stds[j];
        }
        acc
    }

    /// Coefficients mapped back to original feature units, plus the
    /// original-units intercept.
    pub fn original_coefficients(&self) -> (Vec<f64>, f64) {
        let d = self.w.len() - 1;
        let mut coef = Vec::with_capacity(d);
        let mut intercept = self.w[d];
        for j in 0..d {
            let c = self.w[j] / self.standardization.stds[j];
            intercept -= c * self.standardization.means[j];
            coef.push(c);
        }
        (coef, intercept)
    }

    pub fn model(&self) -> TobitModel {
        TobitModel::new(self.w.clone(), self.beta).expect("fitted parameters are valid")
    }

    /// Completed target series in the caller's row order: visible entries
    /// copied, censored entries replaced by `E[y | y < theta, x]`.
    pub fn impute_series(
        &self,
        features: &Mat,
        y: &[f64],
        visible: &[bool],
        theta: f64,
    ) -> Result<Vec<f64>, TobitError> {
        if features.rows() != y.len() || y.len() != visible.len() {
            return Err(TobitError::DimensionMismatch);
        }
        let mut out = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            if visible[i] {
                out.push(y[i]);
            } else {
                let mu = self.predict(features.row(i));
                let p = TruncParams::new(mu, self.beta, theta)
                    .map_err(|_| TobitError::InvalidParameter)?;
                out.push(truncnorm::upper_truncated_mean(&p));
            }
        }
        Ok(out)
    }
}

/// Fits a Tobit model to a censored series given raw feature rows and a
/// per-row visibility flag. Entries with `visible[i] == false` are
/// treated as below the detection limit `theta`; their stored `y[i]` is
/// never read.
pub fn fit_censored_regression(
    features: &Mat,
    y: &[f64],
    visible: &[bool],
    theta: f64,
    settings: &FitSettings,
) -> Result<FittedModel, TobitError> {
    let n = features.rows();
    let d = features.cols();
    if y.len() != n || visible.len() != n {
        return Err(TobitError::DimensionMismatch);
    }
    if !visible.iter().any(|&v| v) {
        return Err(TobitError::NoVisibleRows);
    }

    let standardization = Standardization::from_visible(features, visible);

    let n_v = visible.iter().filter(|&&v| v).count();
    let mut xv = Mat::zeros(n_v, d + 1);
    let mut xh = Mat::zeros(n - n_v, d + 1);
    let mut yv = Vec::with_capacity(n_v);
    let (mut iv, mut ih) = (0, 0);
    for i in 0..n {
        if visible[i] {
            standardization.scale_row(features.row(i), xv.row_mut(iv));
            yv.push(y[i]);
            iv += 1;
        } else {
            standardization.scale_row(features.row(i), xh.row_mut(ih));
            ih += 1;
        }
    }
    let data = RegressionData::new(xv, yv, xh, theta)?;

    // Intercept keeps the symmetric base weight regardless of prior kind.
    let prior = match settings.prior_kind {
        PriorKind::Symmetric => PriorSpec::symmetric(settings.lambda, d + 1)?,
        PriorKind::Asymmetric => {
            let (mut lp, mut ln) =
                super::build_lambda_vectors(&settings.i_pos, &settings.i_neg, settings.lambda, d)?;
            lp.push(settings.lambda);
            ln.push(settings.lambda);
            PriorSpec::asymmetric(settings.lambda, lp, ln)?
        }
    };

    let fit = fit_em(&data, &prior, &settings.em)?;
    Ok(FittedModel {
        w: fit.model.w().to_vec(),
        beta: fit.model.beta(),
        prior,
        standardization,
        trace: fit.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncensored_fit_round_trips_through_original_units() {
        // y = 3 + 2 x0 - x1 with slight noise
        let rows = [
            [0.1, 1.0],
            [0.9, 0.4],
            [1.7, 2.2],
            [2.2, 0.3],
            [3.1, 1.1],
            [4.0, 1.9],
        ];
        let mut flat = Vec::new();
        for r in &rows {
            flat.extend_from_slice(r);
        }
        let features = Mat::from_vec(6, 2, flat);
        let y: Vec<f64> = rows.iter().map(|r| 3.0 + 2.0 * r[0] - r[1]).collect();
        let visible = vec![true; 6];
        let settings = FitSettings {
            lambda: 1e-8,
            ..Default::default()
        };
        let fit = fit_censored_regression(&features, &y, &visible, -100.0, &settings).unwrap();
        let (coef, intercept) = fit.original_coefficients();
        assert!((coef[0] - 2.0).abs() < 1e-3, "coef0 = {}", coef[0]);
        assert!((coef[1] + 1.0).abs() < 1e-3);
        assert!((intercept - 3.0).abs() < 1e-3);
        // predict agrees with the generating line
        for r in &rows {
            let p = fit.predict(r);
            assert!((p - (3.0 + 2.0 * r[0] - r[1])).abs() < 1e-3);
        }
    }

    #[test]
    fn imputations_fall_below_the_limit() {
        let features = Mat::from_vec(6, 1, vec![0.1, 0.9, 1.7, 2.2, 3.1, 4.0]);
        let y = vec![1.1, 1.6, 2.4, 2.6, 0.0, 0.0];
        let visible = vec![true, true, true, true, false, false];
        let theta = 1.0;
        let fit =
            fit_censored_regression(&features, &y, &visible, theta, &FitSettings::default())
                .unwrap();
        let complete = fit.impute_series(&features, &y, &visible, theta).unwrap();
        assert_eq!(&complete[..4], &y[..4]);
        assert!(complete[4] < theta && complete[5] < theta);
    }

    #[test]
    fn all_censored_is_rejected() {
        let features = Mat::from_vec(2, 1, vec![1.0, 2.0]);
        let err = fit_censored_regression(
            &features,
            &[0.0, 0.0],
            &[false, false],
            0.5,
            &FitSettings::default(),
        )
        .unwrap_err();
        assert_eq!(err, TobitError::NoVisibleRows);
    }
}
