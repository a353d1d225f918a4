//! Empirical HSIC and its decomposition over clustered data.
//!
//! The empirical estimator on `n` pooled rows is `(n-1)⁻² tr(K H L H)`.
//! For repeated-measure data grouped by subject, the dependence splits
//! into a between-subject (fixed) part, estimated from subject-mean
//! kernels, and a within-subject (random) part, estimated by averaging
//! per-subject empirical HSIC values. The mixed estimator is their sum.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{double_center, GramMatrix};

/// One subject's contiguous block of rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupBoundary {
    pub subject_id: String,
    pub start: usize,
    pub count: usize,
}

/// Subject membership as ordered contiguous row ranges covering `0..n`.
///
/// Every subject must contribute at least two rows: the `(n_i - 1)⁻¹`
/// normalization of the subject-mean kernel is undefined otherwise, and
/// silently dropping single-row subjects would hide data loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupIndex {
    boundaries: Vec<GroupBoundary>,
    n: usize,
}

impl GroupIndex {
    /// Builds a group index from `(subject_id, count)` pairs in row order.
    pub fn from_counts<S: Into<String>>(counts: Vec<(S, usize)>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidGroups("no subjects".into()));
        }
        let mut boundaries = Vec::with_capacity(counts.len());
        let mut start = 0;
        for (id, count) in counts {
            let subject_id = id.into();
            if count < 2 {
                return Err(Error::InvalidGroups(format!(
                    "subject {:?} has {} row(s); at least 2 are required",
                    subject_id, count
                )));
            }
            boundaries.push(GroupBoundary {
                subject_id,
                start,
                count,
            });
            start += count;
        }
        let index = GroupIndex {
            boundaries,
            n: start,
        };
        index.check_unique_ids()?;
        Ok(index)
    }

    /// Builds a group index from one label per row; rows of a subject must
    /// be contiguous (a subject reappearing later is rejected).
    pub fn from_labels(labels: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidGroups("no rows".into()));
        }
        let mut counts: Vec<(String, usize)> = Vec::new();
        for label in labels {
            match counts.last_mut() {
                Some((current, count)) if current == label => *count += 1,
                _ => counts.push((label.clone(), 1)),
            }
        }
        let index = Self::from_counts(counts)?;
        Ok(index)
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut ids: Vec<&str> = self
            .boundaries
            .iter()
            .map(|b| b.subject_id.as_str())
            .collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidGroups(format!(
                    "subject {:?} appears in more than one row range",
                    pair[0]
                )));
            }
        }
        Ok(())
    }

    /// Number of subjects m.
    pub fn num_subjects(&self) -> usize {
        self.boundaries.len()
    }

    /// Total number of rows n.
    pub fn n_total(&self) -> usize {
        self.n
    }

    pub fn boundaries(&self) -> &[GroupBoundary] {
        &self.boundaries
    }

    /// Row range of subject `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        let b = &self.boundaries[i];
        b.start..b.start + b.count
    }

    pub fn count(&self, i: usize) -> usize {
        self.boundaries[i].count
    }

    pub fn subject_id(&self, i: usize) -> &str {
        &self.boundaries[i].subject_id
    }

    /// Position of a subject id, if present.
    pub fn find(&self, subject_id: &str) -> Option<usize> {
        self.boundaries
            .iter()
            .position(|b| b.subject_id == subject_id)
    }

    fn check_rows(&self, rows: usize, what: &str) -> Result<()> {
        if self.n != rows {
            return Err(Error::DimensionMismatch(format!(
                "group index covers {} rows but {} has {}",
                self.n, what, rows
            )));
        }
        Ok(())
    }
}

/// Normalization of subject-mean kernel block sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanNormalization {
    /// Divide the block sum by `(n_i - 1)(n_i' - 1)`.
    #[default]
    DegreesOfFreedom,
    /// Divide the block sum by `n_i · n_i'` (a plain mean), for
    /// sensitivity analysis.
    Count,
}

/// Matrix of normalized between-subject kernel block sums; `m x m` when
/// rows and columns carry the same subjects, rectangular for cross
/// kernels.
#[derive(Clone, Debug)]
pub struct SubjectMeanKernel {
    pub values: Array2<f64>,
    pub symmetric: bool,
}

/// The decomposed estimates returned by [`hsic_mixed`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsicDecomposition {
    pub fixed: f64,
    pub random: f64,
    pub mixed: f64,
}

fn normalizer(norm: MeanNormalization, count: usize) -> f64 {
    match norm {
        MeanNormalization::DegreesOfFreedom => (count - 1) as f64,
        MeanNormalization::Count => count as f64,
    }
}

/// Subject-mean kernel: entry `(i, i')` is the sum of the kernel block of
/// subjects `i` (rows) and `i'` (columns) divided by the product of the
/// per-subject normalizers (`(n_i - 1)(n_i' - 1)` by default).
pub fn subject_mean_kernel(
    k: &GramMatrix,
    groups_rows: &GroupIndex,
    groups_cols: &GroupIndex,
) -> Result<SubjectMeanKernel> {
    subject_mean_kernel_with(k, groups_rows, groups_cols, MeanNormalization::default())
}

/// [`subject_mean_kernel`] with an explicit normalization choice.
pub fn subject_mean_kernel_with(
    k: &GramMatrix,
    groups_rows: &GroupIndex,
    groups_cols: &GroupIndex,
    norm: MeanNormalization,
) -> Result<SubjectMeanKernel> {
    groups_rows.check_rows(k.nrows(), "kernel row count")?;
    groups_cols.check_rows(k.ncols(), "kernel column count")?;
    let mr = groups_rows.num_subjects();
    let mc = groups_cols.num_subjects();
    let mut values = Array2::<f64>::zeros((mr, mc));
    for i in 0..mr {
        let ri = groups_rows.range(i);
        let wi = normalizer(norm, groups_rows.count(i));
        for j in 0..mc {
            let rj = groups_cols.range(j);
            let block = k.values.slice(ndarray::s![ri.clone(), rj.clone()]);
            values[(i, j)] = block.sum() / (wi * normalizer(norm, groups_cols.count(j)));
        }
    }
    let symmetric = k.symmetric && groups_rows == groups_cols;
    Ok(SubjectMeanKernel { values, symmetric })
}

/// Empirical HSIC on pooled rows: `(n-1)⁻² tr(K H L H)`.
///
/// # Errors
/// Size mismatch, non-symmetric inputs, or fewer than two rows.
pub fn hsic_empirical(k: &GramMatrix, l: &GramMatrix) -> Result<f64> {
    if !k.symmetric || !l.symmetric {
        return Err(Error::InvalidConfig(
            "hsic_empirical needs symmetric Gram matrices".into(),
        ));
    }
    let n = k.nrows();
    if l.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "K is {}x{} but L is {}x{}",
            n,
            n,
            l.nrows(),
            l.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData(
            "empirical HSIC needs at least two rows".into(),
        ));
    }
    Ok(centered_trace(&k.values, &l.values)? / ((n - 1) as f64).powi(2))
}

/// `tr(K · H L H)` computed as the elementwise sum `Σ K ∘ (H L H)`.
fn centered_trace(k: &Array2<f64>, l: &Array2<f64>) -> Result<f64> {
    let hlh = double_center(l)?;
    Ok(k.iter().zip(hlh.iter()).map(|(a, b)| a * b).sum())
}

/// Between-subject estimator: `(m-1)⁻² tr(K̄ H L̄ H)`.
pub fn hsic_fixed(kbar: &SubjectMeanKernel, lbar: &SubjectMeanKernel) -> Result<f64> {
    if !kbar.symmetric || !lbar.symmetric {
        return Err(Error::InvalidConfig(
            "hsic_fixed needs symmetric subject-mean kernels".into(),
        ));
    }
    let m = kbar.values.nrows();
    if lbar.values.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "subject-mean kernels have {} and {} subjects",
            m,
            lbar.values.nrows()
        )));
    }
    if m < 2 {
        return Err(Error::InsufficientData(
            "fixed-component HSIC needs at least two subjects".into(),
        ));
    }
    Ok(centered_trace(&kbar.values, &lbar.values)? / ((m - 1) as f64).powi(2))
}

/// Within-subject estimator: the average over subjects of
/// `(n_i-1)⁻² tr(K_i H L_i H)` on each subject's diagonal block.
pub fn hsic_random(k: &GramMatrix, l: &GramMatrix, groups: &GroupIndex) -> Result<f64> {
    if !k.symmetric || !l.symmetric {
        return Err(Error::InvalidConfig(
            "hsic_random needs symmetric Gram matrices".into(),
        ));
    }
    if l.nrows() != k.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "K is {}x{} but L is {}x{}",
            k.nrows(),
            k.nrows(),
            l.nrows(),
            l.ncols()
        )));
    }
    groups.check_rows(k.nrows(), "kernel row count")?;
    let m = groups.num_subjects();
    let mut total = 0.0;
    for i in 0..m {
        let r = groups.range(i);
        let ki = k.values.slice(ndarray::s![r.clone(), r.clone()]).to_owned();
        let li = l.values.slice(ndarray::s![r.clone(), r.clone()]).to_owned();
        let scale = ((groups.count(i) - 1) as f64).powi(2);
        total += centered_trace(&ki, &li)? / scale;
    }
    Ok(total / m as f64)
}

/// Fixed, random, and mixed estimates in one pass; `mixed` is exactly the
/// sum of the two components.
pub fn hsic_mixed(k: &GramMatrix, l: &GramMatrix, groups: &GroupIndex) -> Result<HsicDecomposition> {
    let kbar = subject_mean_kernel(k, groups, groups)?;
    let lbar = subject_mean_kernel(l, groups, groups)?;
    let fixed = hsic_fixed(&kbar, &lbar)?;
    let random = hsic_random(k, l, groups)?;
    Ok(HsicDecomposition {
        fixed,
        random,
        mixed: fixed + random,
    })
}

/// Per-subject diagonal bias corrections `(n_i-1)⁻² tr(K_i)`, the terms
/// subtracted from the subject-mean kernel diagonal by its unbiased
/// variant. Exposed for diagnostics; no estimator applies it by default.
pub fn diag_bias_correction(k: &GramMatrix, groups: &GroupIndex) -> Result<Vec<f64>> {
    groups.check_rows(k.nrows(), "kernel row count")?;
    let mut out = Vec::with_capacity(groups.num_subjects());
    for i in 0..groups.num_subjects() {
        let r = groups.range(i);
        let trace: f64 = r.clone().map(|idx| k.values[(idx, idx)]).sum();
        out.push(trace / ((groups.count(i) - 1) as f64).powi(2));
    }
    Ok(out)
}
