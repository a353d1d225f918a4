//! Two-step mixed-effects prediction on reduced coordinates, the pooled
//! regression baseline, and marginal feature screening.
//!
//! The mixed predictor mirrors the reduction's decomposition. Step one
//! regresses subject mean outcomes on the fixed (between-subject) scores,
//! giving a population-level prediction per subject. Step two regresses
//! each subject's within-subject residuals on that subject's random
//! scores, giving a subject-specific correction. A test block predicts
//! as fixed part plus, when the subject was seen in training, its random
//! part; unknown subjects fall back to the fixed part alone.
//!
//! Both steps solve ordinary least squares through the normal equations
//! with an optional ridge on the non-intercept coefficients. When a
//! design is numerically singular (constant scores, more coefficients
//! than rows), a small automatic ridge is escalated until the system
//! factors, so degenerate subjects degrade to intercept-only corrections
//! instead of failing the whole fit.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::reduce::{project_fixed, project_random, SkpcaModel, SklpcaModel};

/// Relative scale of the automatic ridge applied when a least-squares
/// design is singular.
const AUTO_RIDGE_SCALE: f64 = 1e-8;
const AUTO_RIDGE_ESCALATION: f64 = 100.0;
const MAX_AUTO_RIDGE_ESCALATIONS: usize = 3;

/// Two-step mixed predictor fit on an sklPCA reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedPredictor {
    /// Step-one coefficients: intercept followed by one weight per fixed
    /// score dimension.
    pub fixed_coefs: Vec<f64>,
    /// Step-two coefficients per training subject: intercept followed by
    /// one weight per random score dimension.
    pub subject_coefs: BTreeMap<String, Vec<f64>>,
    /// Largest ridge actually applied in any solve (the requested value,
    /// or the automatic fallback where a design was singular).
    pub ridge_lambda: f64,
}

/// Pooled regression baseline fit on skPCA scores.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselinePredictor {
    /// Intercept followed by one weight per score dimension.
    pub coefs: Vec<f64>,
    /// Largest ridge actually applied.
    pub ridge_lambda: f64,
}

/// Prediction for one test block.
#[derive(Clone, Debug)]
pub struct MixedPrediction {
    /// One predicted outcome per test row.
    pub values: Vec<f64>,
    /// True when the subject was unknown and only the fixed part was used.
    pub fixed_only: bool,
}

struct LsSolution {
    coefs: Vec<f64>,
    ridge_used: f64,
}

/// Solves min ‖design·β − target‖² + λ‖β₁..‖² through the normal
/// equations, never penalizing the intercept (column zero). Escalates an
/// automatic ridge only when the penalized system fails to factor.
fn solve_ls(design: &Array2<f64>, target: &[f64], requested_lambda: f64) -> Result<LsSolution> {
    let rows = design.nrows();
    let cols = design.ncols();
    if rows != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows but target has {} entries",
            rows,
            target.len()
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InsufficientData(
            "least squares needs at least one row and one column".into(),
        ));
    }
    if !requested_lambda.is_finite() || requested_lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ridge parameter must be finite and non-negative, got {}",
            requested_lambda
        )));
    }
    let y = Array1::from_iter(target.iter().copied());
    let mut normal = design.t().dot(design);
    linalg::symmetrize(&mut normal);
    let rhs = design.t().dot(&y);

    let diag_mean = (0..cols).map(|j| normal[(j, j)]).sum::<f64>() / cols as f64;
    let auto_base = AUTO_RIDGE_SCALE * diag_mean.max(f64::MIN_POSITIVE);

    let mut lambda = requested_lambda;
    for attempt in 0..=MAX_AUTO_RIDGE_ESCALATIONS {
        let mut a = normal.clone();
        for j in 1..cols {
            a[(j, j)] += lambda;
        }
        if let Some(chol) = linalg::cholesky(&a) {
            let rhs_mat = rhs
                .clone()
                .into_shape_with_order((cols, 1))
                .expect("rhs is a column");
            let z = linalg::solve_lower(&chol, &rhs_mat);
            let beta = linalg::solve_lower_transpose(&chol, &z);
            return Ok(LsSolution {
                coefs: beta.column(0).to_vec(),
                ridge_used: lambda,
            });
        }
        let next = if lambda <= requested_lambda {
            auto_base.max(requested_lambda)
        } else {
            lambda * AUTO_RIDGE_ESCALATION
        };
        if attempt == MAX_AUTO_RIDGE_ESCALATIONS {
            break;
        }
        lambda = if next > lambda { next } else { auto_base };
    }
    Err(Error::Numerical(format!(
        "normal equations failed to factor even with ridge {}",
        lambda
    )))
}

/// Design matrix [1 | scores].
fn with_intercept(scores: &Array2<f64>) -> Array2<f64> {
    let rows = scores.nrows();
    let cols = scores.ncols();
    let mut design = Array2::<f64>::ones((rows, cols + 1));
    design.slice_mut(ndarray::s![.., 1..]).assign(scores);
    design
}

fn linear_predict(coefs: &[f64], scores: &[f64]) -> f64 {
    debug_assert_eq!(coefs.len(), scores.len() + 1);
    coefs[0]
        + coefs[1..]
            .iter()
            .zip(scores)
            .map(|(c, s)| c * s)
            .sum::<f64>()
}

impl MixedPredictor {
    /// Fixed (population) part of the prediction from a fixed score row.
    pub fn fixed_part(&self, fixed_scores: &[f64]) -> f64 {
        linear_predict(&self.fixed_coefs, fixed_scores)
    }

    /// Random (subject-specific) part from one random score row; `None`
    /// when the subject was not in training.
    pub fn random_part(&self, subject_id: &str, random_scores: &[f64]) -> Option<f64> {
        self.subject_coefs
            .get(subject_id)
            .map(|coefs| linear_predict(coefs, random_scores))
    }
}

impl BaselinePredictor {
    pub fn predict_row(&self, scores: &[f64]) -> f64 {
        linear_predict(&self.coefs, scores)
    }
}

/// Fits the two-step mixed predictor on a reduction's training scores.
///
/// Step one runs at the subject level (fixed scores against subject mean
/// outcomes); step two runs per subject (random scores against the
/// residuals of step one).
///
/// # Errors
/// Grouping mismatch between `reduction` and `data`, or an unrecoverable
/// least-squares failure.
pub fn fit_mixed(
    reduction: &SklpcaModel,
    data: &LongitudinalDataset,
    ridge: f64,
) -> Result<MixedPredictor> {
    if reduction.train.groups() != data.groups() {
        return Err(Error::DimensionMismatch(
            "mixed predictor needs the same subjects (and row order) the reduction was fit on"
                .into(),
        ));
    }
    let m = data.num_subjects();
    let subject_means: Vec<f64> = (0..m)
        .map(|i| {
            let ys = data.subject_outcomes(i);
            ys.iter().sum::<f64>() / ys.len() as f64
        })
        .collect();

    let fixed_design = with_intercept(&reduction.train_fixed_scores);
    let fixed_fit = solve_ls(&fixed_design, &subject_means, ridge)?;
    let mut max_ridge = fixed_fit.ridge_used;

    let mut subject_coefs = BTreeMap::new();
    for (i, sub) in reduction.subjects.iter().enumerate() {
        let fixed_scores: Vec<f64> = reduction.train_fixed_scores.row(i).to_vec();
        let fixed_part = linear_predict(&fixed_fit.coefs, &fixed_scores);
        let residuals: Vec<f64> = data
            .subject_outcomes(i)
            .iter()
            .map(|&y| y - fixed_part)
            .collect();
        let design = with_intercept(&sub.train_scores);
        let fit = solve_ls(&design, &residuals, ridge)?;
        max_ridge = max_ridge.max(fit.ridge_used);
        subject_coefs.insert(sub.subject_id.clone(), fit.coefs);
    }

    Ok(MixedPredictor {
        fixed_coefs: fixed_fit.coefs,
        subject_coefs,
        ridge_lambda: max_ridge,
    })
}

/// Predicts a test block: subject-level fixed part plus, for known
/// subjects, the per-row random correction.
///
/// A subject seen in training keeps its training fixed score (the
/// subject-level effect is a property of the subject, estimated from all
/// of its training rows), so known-subject blocks may be any size
/// including a single row. Unknown subjects get their fixed score from
/// the block's averaged kernel row, which needs at least two rows;
/// single-row strategies for unknown subjects live with the caller,
/// which can combine [`MixedPredictor::fixed_part`] and
/// [`MixedPredictor::random_part`] directly.
pub fn predict_mixed(
    predictor: &MixedPredictor,
    reduction: &SklpcaModel,
    x_test: &Array2<f64>,
    subject: Option<&str>,
) -> Result<MixedPrediction> {
    let known = subject.and_then(|id| reduction.subject(id)).map(|(i, _)| i);
    let fixed_part = match known {
        Some(index) => predictor.fixed_part(&reduction.train_fixed_scores.row(index).to_vec()),
        None => {
            let fixed_scores = project_fixed(reduction, x_test)?;
            predictor.fixed_part(&fixed_scores)
        }
    };

    if known.is_some() {
        let id = subject.expect("a known subject implies an id was given");
        let random_scores = project_random(reduction, x_test, id)?;
        let values = (0..x_test.nrows())
            .map(|r| {
                let row: Vec<f64> = random_scores.row(r).to_vec();
                let correction = predictor
                    .random_part(id, &row)
                    .expect("the subject index came from the model's own group index");
                fixed_part + correction
            })
            .collect();
        return Ok(MixedPrediction {
            values,
            fixed_only: false,
        });
    }
    Ok(MixedPrediction {
        values: vec![fixed_part; x_test.nrows()],
        fixed_only: true,
    })
}

/// Fits the pooled baseline: outcomes regressed on skPCA training scores.
pub fn fit_baseline(
    model: &SkpcaModel,
    outcomes: &[f64],
    ridge: f64,
) -> Result<BaselinePredictor> {
    if outcomes.len() != model.train_scores.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes for {} training score rows",
            outcomes.len(),
            model.train_scores.nrows()
        )));
    }
    let design = with_intercept(&model.train_scores);
    let fit = solve_ls(&design, outcomes, ridge)?;
    Ok(BaselinePredictor {
        coefs: fit.coefs,
        ridge_lambda: fit.ridge_used,
    })
}

/// Predicts test rows through the pooled baseline.
pub fn predict_baseline(
    predictor: &BaselinePredictor,
    model: &SkpcaModel,
    x_test: &Array2<f64>,
) -> Result<Vec<f64>> {
    let scores = crate::reduce::project_skpca(model, x_test)?;
    if scores.ncols() + 1 != predictor.coefs.len() {
        return Err(Error::DimensionMismatch(format!(
            "predictor has {} coefficients for {} score dimensions",
            predictor.coefs.len(),
            scores.ncols()
        )));
    }
    Ok((0..scores.nrows())
        .map(|r| predictor.predict_row(&scores.row(r).to_vec()))
        .collect())
}

/// Marginal screening: two-sided t-test p-value of each feature's Pearson
/// correlation with the outcome, thresholded by Benjamini-Hochberg.
///
/// Returns the selected column indices in ascending order.
///
/// # Errors
/// Fewer than three rows, a constant outcome ([`Error::DegenerateData`]),
/// or an empty selection ([`Error::ScreeningEmpty`], which callers may
/// treat as "skip screening").
pub fn screen_features(data: &LongitudinalDataset, fdr: f64) -> Result<Vec<usize>> {
    if !(fdr > 0.0 && fdr < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "false discovery rate must lie in (0, 1), got {}",
            fdr
        )));
    }
    let n = data.n();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "screening needs at least three rows for the t-test, got {}",
            n
        )));
    }
    let y = data.outcomes();
    let nf = n as f64;
    let mean_y = y.iter().sum::<f64>() / nf;
    let var_y = y.iter().map(|&v| (v - mean_y) * (v - mean_y)).sum::<f64>();
    if var_y <= 0.0 {
        return Err(Error::DegenerateData(
            "outcome is constant; screening cannot rank features".into(),
        ));
    }

    let df = nf - 2.0;
    let t_dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numerical(format!("t distribution with {} df: {}", df, e)))?;
    let pvals: Vec<f64> = (0..data.p())
        .map(|j| {
            let col = data.features().column(j);
            let mean_x = col.sum() / nf;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for (&x, &yv) in col.iter().zip(y) {
                sxx += (x - mean_x) * (x - mean_x);
                sxy += (x - mean_x) * (yv - mean_y);
            }
            if sxx <= 0.0 {
                return 1.0;
            }
            let r = sxy / (sxx * var_y).sqrt();
            let denom = 1.0 - r * r;
            if denom <= f64::EPSILON {
                return 0.0;
            }
            let t = r * (df / denom).sqrt();
            2.0 * (1.0 - t_dist.cdf(t.abs()))
        })
        .collect();

    let selected = benjamini_hochberg(&pvals, fdr);
    if selected.is_empty() {
        return Err(Error::ScreeningEmpty);
    }
    Ok(selected)
}

/// Benjamini-Hochberg step-up selection at false discovery rate `fdr`:
/// with p-values sorted ascending, keep everything up to the largest k
/// where p₍ₖ₎ ≤ k/n·fdr. Returns selected original indices, ascending.
pub(crate) fn benjamini_hochberg(pvals: &[f64], fdr: f64) -> Vec<usize> {
    let n = pvals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut cutoff = None;
    for (rank, &idx) in order.iter().enumerate() {
        if pvals[idx] <= (rank + 1) as f64 / n as f64 * fdr {
            cutoff = Some(rank);
        }
    }
    match cutoff {
        None => Vec::new(),
        Some(k) => {
            let mut selected: Vec<usize> = order[..=k].to_vec();
            selected.sort_unstable();
            selected
        }
    }
}
