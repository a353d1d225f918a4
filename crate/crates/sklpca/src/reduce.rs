//! Supervised kernel dimension reduction: the pooled skPCA baseline and
//! the longitudinal sklPCA decomposition.
//!
//! skPCA treats all rows as exchangeable: with feature Gram matrix K and
//! outcome Gram matrix L, it takes the top generalized eigenvectors of
//! (K H L H K, K), so projected coordinates maximize dependence with the
//! outcome under a K-orthonormality constraint.
//!
//! sklPCA splits that objective along the grouping. The fixed component
//! solves the same pencil built from the m×m subject-mean kernels (K̄, L̄),
//! capturing between-subject structure; the random component solves one
//! pencil per subject on that subject's own block (K_i, L_i), capturing
//! within-subject structure. Test data maps into the fixed space through
//! the averaged test kernel row (one vector per test block) and into a
//! subject's random space through the kernel against that subject's
//! training rows.
//!
//! The subject-mean kernels here use plain block means (the `Count`
//! normalization), not the (n−1)-normalized sums the HSIC estimators
//! use. With equal block sizes the two pencils differ only by a global
//! scale, but the plain mean keeps a held-out block's fixed score on the
//! training scale for any block size, which matters when held-out blocks
//! are smaller than training trajectories.
//!
//! Pooled pencils are solved densely up to [`DENSE_EIG_MAX_N`] rows.
//! Above that, an exact low-rank route factors the centered outcome
//! kernel H L H = R Rᵀ (its rank is tiny for scalar outcomes), reduces
//! the pencil to the r×r matrix Rᵀ K R, and maps eigenvectors back as
//! v = R z / √λ, which satisfies Q v = λ K v and vᵀKv = 1 exactly. The
//! two routes agree to solver precision for dimensions within the pencil
//! rank; beyond the rank the dense route pads with null-space directions
//! and the low-rank route with zero columns, both under a warning flag.

use std::path::Path;

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::geneig::generalized_eig;
use crate::hsic::{subject_mean_kernel_with, MeanNormalization};
use crate::kernels::{
    double_center, gram, gram_cross, resolve_bandwidth, GramMatrix, KernelSpec,
};
use crate::linalg;

/// Largest pooled pencil solved by the dense generalized eigensolver
/// under [`EigMode::Auto`]; larger problems take the low-rank route.
pub const DENSE_EIG_MAX_N: usize = 256;

/// Relative pivot tolerance for the low-rank factorization of H L H.
const LOW_RANK_PIVOT_TOL: f64 = 1e-12;

/// Relative eigenvalue threshold used when counting informative
/// dimensions for automatic q selection.
const AUTO_DIM_REL_TOL: f64 = 1e-8;

/// Eigensolver route for the pooled skPCA pencil.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigMode {
    /// Dense up to [`DENSE_EIG_MAX_N`] rows, low-rank beyond.
    #[default]
    Auto,
    Dense,
    LowRank,
}

/// Requested fixed-component dimension q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedDim {
    /// q = min(m−1, number of pencil eigenvalues above 1e-8·λ_max),
    /// floored at one (with the rank warning set when even the top
    /// eigenvalue is at noise scale).
    Auto,
    Fixed(usize),
}

/// Requested random-component dimensions q_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubjectDim {
    /// Uniform q_i = min_i(n_i − 1).
    Auto,
    Uniform(usize),
    PerSubject(Vec<usize>),
}

/// Fitted pooled skPCA reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkpcaModel {
    /// Resolved feature kernel.
    pub kernel_spec: KernelSpec,
    pub train_features: Array2<f64>,
    /// Generalized eigenvectors, n×q.
    pub v: Array2<f64>,
    /// Pencil eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Ridge ε added to K by the dense solver (zero on the low-rank route).
    pub regularization: f64,
    /// Set when q exceeded the pencil's numerical rank.
    pub rank_warning: bool,
    /// Training projections K·V, n×q.
    pub train_scores: Array2<f64>,
}

impl SkpcaModel {
    pub fn q(&self) -> usize {
        self.v.ncols()
    }
}

/// One subject's random-component reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubjectReduction {
    pub subject_id: String,
    /// Generalized eigenvectors of (K_i H L_i H K_i, K_i), n_i×q_i.
    pub v: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    pub regularization: f64,
    /// Set when q_i exceeded this subject's pencil rank — in particular
    /// when the subject's outcomes are constant, which makes every
    /// random direction carry zero information.
    pub rank_warning: bool,
    /// Training projections K_i·V_i, n_i×q_i.
    pub train_scores: Array2<f64>,
}

impl SubjectReduction {
    pub fn q_i(&self) -> usize {
        self.v.ncols()
    }
}

/// Fitted sklPCA reduction: fixed (between-subject) eigenvectors over the
/// subject-mean kernel plus one random (within-subject) reduction per
/// training subject.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SklpcaModel {
    /// Resolved feature kernel k.
    pub feature_spec: KernelSpec,
    /// Resolved outcome kernel ℓ.
    pub outcome_spec: KernelSpec,
    /// Training data (projection needs its feature blocks and grouping).
    pub train: LongitudinalDataset,
    /// Fixed-component eigenvectors, m×q.
    pub vbar: Array2<f64>,
    pub fixed_eigenvalues: Vec<f64>,
    pub fixed_regularization: f64,
    pub fixed_rank_warning: bool,
    /// Fixed training scores K̄·V̄, one row per subject (m×q).
    pub train_fixed_scores: Array2<f64>,
    pub subjects: Vec<SubjectReduction>,
}

impl SklpcaModel {
    pub fn q(&self) -> usize {
        self.vbar.ncols()
    }

    pub fn num_subjects(&self) -> usize {
        self.subjects.len()
    }

    /// Looks up a training subject by id.
    pub fn subject(&self, subject_id: &str) -> Option<(usize, &SubjectReduction)> {
        self.train
            .groups()
            .find(subject_id)
            .map(|i| (i, &self.subjects[i]))
    }

    /// Fixed scores of a test block given its kernel against all training
    /// rows (n'×n). Entry i of the averaged test kernel row is the plain
    /// mean of the block against subject i (block sum over n_i·n'), the
    /// same normalization the training subject-mean kernel uses, so the
    /// score lands on the training scale for any block size; the score
    /// vector is that row times V̄.
    pub fn fixed_scores_from_cross(&self, cross: &Array2<f64>) -> Result<Vec<f64>> {
        let n_prime = cross.nrows();
        if n_prime < 2 {
            return Err(Error::InsufficientData(format!(
                "fixed projection needs at least two test rows, got {}",
                n_prime
            )));
        }
        if cross.ncols() != self.train.n() {
            return Err(Error::DimensionMismatch(format!(
                "cross kernel has {} columns but training has {} rows",
                cross.ncols(),
                self.train.n()
            )));
        }
        let groups = self.train.groups();
        let m = groups.num_subjects();
        let mut row = Array1::<f64>::zeros(m);
        for i in 0..m {
            let block = cross.slice(s![.., groups.range(i)]);
            let norm = groups.count(i) as f64 * n_prime as f64;
            row[i] = block.sum() / norm;
        }
        Ok(row.dot(&self.vbar).to_vec())
    }

    /// Random scores of a test block given its kernel against one
    /// subject's training rows (n'×n_i).
    pub fn random_scores_from_cross(
        &self,
        subject_index: usize,
        cross_block: &Array2<f64>,
    ) -> Result<Array2<f64>> {
        let sub = self.subjects.get(subject_index).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "subject index {} out of range (m = {})",
                subject_index,
                self.subjects.len()
            ))
        })?;
        if cross_block.ncols() != sub.v.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "cross block has {} columns but subject {:?} has {} training rows",
                cross_block.ncols(),
                sub.subject_id,
                sub.v.nrows()
            )));
        }
        Ok(cross_block.dot(&sub.v))
    }
}

/// Symmetrized product K·M·K.
fn sandwich(k: &Array2<f64>, m: &Array2<f64>) -> Array2<f64> {
    let mut q = k.dot(m).dot(k);
    linalg::symmetrize(&mut q);
    q
}

/// Flips eigenvector columns so the largest-magnitude entry of each
/// *score* column is positive. Coefficient vectors are only determined
/// up to null(K) components (which never change the fitted function),
/// so a convention on the coefficients themselves would not be stable
/// across eigensolver routes; the scores are.
fn align_signs_to_scores(v: &mut Array2<f64>, scores: &mut Array2<f64>) {
    for j in 0..scores.ncols() {
        let mut best = 0.0_f64;
        let mut best_val = 0.0_f64;
        for &s in scores.column(j).iter() {
            if s.abs() > best {
                best = s.abs();
                best_val = s;
            }
        }
        if best_val < 0.0 {
            v.column_mut(j).mapv_inplace(|x| -x);
            scores.column_mut(j).mapv_inplace(|x| -x);
        }
    }
}

/// Counts pencil eigenvalues of (K·HLH·K, K) that stand above noise,
/// computed from the exact reduced spectrum RᵀKR (HLH = RRᵀ), which is
/// free of the ridge amplification the dense route suffers in null(K)
/// directions.
fn informative_dimension(k: &Array2<f64>, hlh: &Array2<f64>) -> usize {
    let rf = linalg::pivoted_cholesky(hlh, LOW_RANK_PIVOT_TOL);
    if rf.ncols() == 0 {
        return 0;
    }
    let mut g = rf.t().dot(&k.dot(&rf));
    linalg::symmetrize(&mut g);
    match linalg::sym_eig(&g) {
        Ok(eig) => {
            let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
            eig.values
                .iter()
                .filter(|&&v| v > AUTO_DIM_REL_TOL * lam_max && v > 0.0)
                .count()
        }
        Err(_) => 0,
    }
}

/// Centered outcome kernel H L H, rejecting outcomes whose kernel
/// carries no variation (constant outcomes center to zero).
fn centered_outcome_kernel(l: &GramMatrix) -> Result<Array2<f64>> {
    let hlh = double_center(&l.values)?;
    let scale = l.values.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let max_centered = hlh.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if max_centered <= 1e-12 * scale.max(1.0) {
        return Err(Error::DegenerateData(
            "outcome kernel centers to zero (constant outcomes); supervision is degenerate"
                .into(),
        ));
    }
    Ok(hlh)
}

struct PencilSolution {
    v: Array2<f64>,
    eigenvalues: Vec<f64>,
    regularization: f64,
    rank_warning: bool,
}

/// Dense route: geneig on (K·HLH·K, K).
fn solve_pooled_dense(k: &Array2<f64>, hlh: &Array2<f64>, q: usize) -> Result<PencilSolution> {
    let q_mat = sandwich(k, hlh);
    let res = generalized_eig(&q_mat, k, q)?;
    Ok(PencilSolution {
        v: res.vectors,
        eigenvalues: res.eigenvalues,
        regularization: res.regularization_used,
        rank_warning: res.rank_warning,
    })
}

/// Low-rank route: factor HLH = RRᵀ, eigendecompose RᵀKR, map back.
fn solve_pooled_low_rank(k: &Array2<f64>, hlh: &Array2<f64>, q: usize) -> Result<PencilSolution> {
    let n = k.nrows();
    let rf = linalg::pivoted_cholesky(hlh, LOW_RANK_PIVOT_TOL);
    let r = rf.ncols();
    if r == 0 {
        return Err(Error::DegenerateData(
            "centered outcome kernel has numerical rank zero".into(),
        ));
    }
    let kr = k.dot(&rf);
    let mut g = rf.t().dot(&kr);
    linalg::symmetrize(&mut g);
    let eig = linalg::sym_eig(&g)?;
    let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let tol = lam_max * 1e-12;

    let mut v = Array2::<f64>::zeros((n, q));
    let mut eigenvalues = vec![0.0; q];
    let mut kept = 0;
    for j in 0..q.min(r) {
        let src = r - 1 - j;
        let lam = eig.values[src];
        if lam <= tol {
            break;
        }
        let z = eig.vectors.column(src);
        let scale = 1.0 / lam.sqrt();
        let col = rf.dot(&z.to_owned()) * scale;
        v.column_mut(j).assign(&col);
        eigenvalues[j] = lam;
        kept += 1;
    }
    Ok(PencilSolution {
        v,
        eigenvalues,
        regularization: 0.0,
        rank_warning: kept < q,
    })
}

fn solve_pooled(
    k: &Array2<f64>,
    hlh: &Array2<f64>,
    q: usize,
    mode: EigMode,
) -> Result<PencilSolution> {
    let dense = match mode {
        EigMode::Dense => true,
        EigMode::LowRank => false,
        EigMode::Auto => k.nrows() <= DENSE_EIG_MAX_N,
    };
    if dense {
        solve_pooled_dense(k, hlh, q)
    } else {
        solve_pooled_low_rank(k, hlh, q)
    }
}

/// Number of informative dimensions of the pooled pencil built from the
/// given feature and outcome Gram matrices (used to resolve automatic
/// dimension requests), floored at one.
pub fn informative_pooled_dimension(k: &GramMatrix, l: &GramMatrix) -> Result<usize> {
    let hlh = centered_outcome_kernel(l)?;
    Ok(informative_dimension(&k.values, &hlh).max(1))
}

/// Fits pooled skPCA with the automatic eigensolver route.
///
/// # Errors
/// Invalid q, degenerate (constant) outcomes, kernel resolution failures.
pub fn fit_skpca(
    data: &LongitudinalDataset,
    k: &KernelSpec,
    l: &KernelSpec,
    q: usize,
) -> Result<SkpcaModel> {
    fit_skpca_opts(data, k, l, q, EigMode::Auto)
}

/// [`fit_skpca`] with an explicit eigensolver route.
pub fn fit_skpca_opts(
    data: &LongitudinalDataset,
    k: &KernelSpec,
    l: &KernelSpec,
    q: usize,
    mode: EigMode,
) -> Result<SkpcaModel> {
    let k_spec = resolve_bandwidth(k, data.features())?;
    let y_mat = outcome_matrix(data);
    let l_spec = resolve_bandwidth(l, &y_mat)?;
    let kg = gram(&k_spec, data.features())?;
    let lg = gram(&l_spec, &y_mat)?;
    fit_skpca_from_kernels(data.features(), k_spec, &kg, &lg, q, mode)
}

/// Core skPCA fit against precomputed Gram matrices. `k_spec` must be the
/// resolved kernel that produced `k`, since the model reuses it for test
/// projection.
pub fn fit_skpca_from_kernels(
    features: &Array2<f64>,
    k_spec: KernelSpec,
    k: &GramMatrix,
    l: &GramMatrix,
    q: usize,
    mode: EigMode,
) -> Result<SkpcaModel> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "skPCA needs at least two rows, got {}",
            n
        )));
    }
    if k.nrows() != n || k.ncols() != n || l.nrows() != n || l.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrices must be {}x{}; got K {}x{}, L {}x{}",
            n,
            n,
            k.nrows(),
            k.ncols(),
            l.nrows(),
            l.ncols()
        )));
    }
    if q == 0 || q > n {
        return Err(Error::InvalidConfig(format!(
            "q must satisfy 1 ≤ q ≤ n = {}, got {}",
            n, q
        )));
    }
    if !k_spec.is_resolved() {
        return Err(Error::InvalidConfig(
            "feature kernel must be resolved before fitting from Gram matrices".into(),
        ));
    }
    let hlh = centered_outcome_kernel(l)?;
    let mut sol = solve_pooled(&k.values, &hlh, q, mode)?;
    let mut train_scores = k.values.dot(&sol.v);
    align_signs_to_scores(&mut sol.v, &mut train_scores);
    Ok(SkpcaModel {
        kernel_spec: k_spec,
        train_features: features.clone(),
        v: sol.v,
        eigenvalues: sol.eigenvalues,
        regularization: sol.regularization,
        rank_warning: sol.rank_warning,
        train_scores,
    })
}

/// Projects test rows through a fitted skPCA model: k(X_test, X_train)·V.
pub fn project_skpca(model: &SkpcaModel, x_test: &Array2<f64>) -> Result<Array2<f64>> {
    if x_test.ncols() != model.train_features.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "test features have {} columns, training had {}",
            x_test.ncols(),
            model.train_features.ncols()
        )));
    }
    let cross = gram_cross(&model.kernel_spec, x_test, &model.train_features)?;
    Ok(cross.values.dot(&model.v))
}

/// Fits sklPCA: the fixed pencil on subject-mean kernels plus one random
/// pencil per subject.
///
/// # Errors
/// Dimension requests outside their valid ranges and kernel resolution
/// failures. Per-subject degenerate outcomes are not errors; they
/// surface as that subject's `rank_warning` with eigenvalues at noise
/// scale.
pub fn fit_sklpca(
    data: &LongitudinalDataset,
    k: &KernelSpec,
    l: &KernelSpec,
    q: FixedDim,
    q_i: SubjectDim,
) -> Result<SklpcaModel> {
    let k_spec = resolve_bandwidth(k, data.features())?;
    let y_mat = outcome_matrix(data);
    let l_spec = resolve_bandwidth(l, &y_mat)?;
    let kg = gram(&k_spec, data.features())?;
    let lg = gram(&l_spec, &y_mat)?;
    fit_sklpca_from_kernels(data, k_spec, l_spec, &kg, &lg, q, q_i)
}

/// Core sklPCA fit against precomputed Gram matrices.
pub fn fit_sklpca_from_kernels(
    data: &LongitudinalDataset,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    k: &GramMatrix,
    l: &GramMatrix,
    q: FixedDim,
    q_i: SubjectDim,
) -> Result<SklpcaModel> {
    let n = data.n();
    if k.nrows() != n || l.nrows() != n || k.ncols() != n || l.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrices must be {}x{}; got K {}x{}, L {}x{}",
            n,
            n,
            k.nrows(),
            k.ncols(),
            l.nrows(),
            l.ncols()
        )));
    }
    if !k_spec.is_resolved() || !l_spec.is_resolved() {
        return Err(Error::InvalidConfig(
            "kernels must be resolved before fitting from Gram matrices".into(),
        ));
    }
    let groups = data.groups();
    let m = groups.num_subjects();

    let kbar = subject_mean_kernel_with(k, groups, groups, MeanNormalization::Count)?;
    let lbar = subject_mean_kernel_with(l, groups, groups, MeanNormalization::Count)?;
    let hlh_bar = double_center(&lbar.values)?;
    let qbar = sandwich(&kbar.values, &hlh_bar);

    let (vbar, fixed_eigenvalues, fixed_regularization, fixed_rank_warning) = match q {
        FixedDim::Fixed(qv) => {
            if qv == 0 || qv > m {
                return Err(Error::InvalidConfig(format!(
                    "fixed dimension must satisfy 1 ≤ q ≤ m = {}, got {}",
                    m, qv
                )));
            }
            let res = generalized_eig(&qbar, &kbar.values, qv)?;
            (
                res.vectors,
                res.eigenvalues,
                res.regularization_used,
                res.rank_warning,
            )
        }
        FixedDim::Auto => {
            let informative = informative_dimension(&kbar.values, &hlh_bar);
            let qv = informative.min(m.saturating_sub(1)).max(1);
            let res = generalized_eig(&qbar, &kbar.values, qv)?;
            (
                res.vectors,
                res.eigenvalues,
                res.regularization_used,
                res.rank_warning || qv > informative,
            )
        }
    };
    let mut vbar = vbar;
    let mut train_fixed_scores = kbar.values.dot(&vbar);
    align_signs_to_scores(&mut vbar, &mut train_fixed_scores);

    let min_n_i = (0..m).map(|i| groups.count(i)).min().expect("m ≥ 1");
    let dims: Vec<usize> = match &q_i {
        SubjectDim::Auto => vec![min_n_i - 1; m],
        SubjectDim::Uniform(v) => {
            if *v == 0 || *v > min_n_i {
                return Err(Error::InvalidConfig(format!(
                    "uniform q_i must satisfy 1 ≤ q_i ≤ min n_i = {}, got {}",
                    min_n_i, v
                )));
            }
            vec![*v; m]
        }
        SubjectDim::PerSubject(list) => {
            if list.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "per-subject dimensions list has {} entries for {} subjects",
                    list.len(),
                    m
                )));
            }
            for (i, &v) in list.iter().enumerate() {
                if v == 0 || v > groups.count(i) {
                    return Err(Error::InvalidConfig(format!(
                        "q_i for subject {:?} must satisfy 1 ≤ q_i ≤ n_i = {}, got {}",
                        groups.subject_id(i),
                        groups.count(i),
                        v
                    )));
                }
            }
            list.clone()
        }
    };

    let subjects: Vec<SubjectReduction> = (0..m)
        .into_par_iter()
        .map(|i| -> Result<SubjectReduction> {
            let r = groups.range(i);
            let k_i = k.values.slice(s![r.clone(), r.clone()]).to_owned();
            let l_i = l.values.slice(s![r.clone(), r.clone()]).to_owned();
            let hlh_i = double_center(&l_i)?;
            let q_mat = sandwich(&k_i, &hlh_i);
            let res = generalized_eig(&q_mat, &k_i, dims[i])?;
            let mut v = res.vectors;
            let mut train_scores = k_i.dot(&v);
            align_signs_to_scores(&mut v, &mut train_scores);
            Ok(SubjectReduction {
                subject_id: groups.subject_id(i).to_string(),
                v,
                eigenvalues: res.eigenvalues,
                regularization: res.regularization_used,
                rank_warning: res.rank_warning,
                train_scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SklpcaModel {
        feature_spec: k_spec,
        outcome_spec: l_spec,
        train: data.clone(),
        vbar,
        fixed_eigenvalues,
        fixed_regularization,
        fixed_rank_warning,
        train_fixed_scores,
        subjects,
    })
}

/// Projects a test block (n' ≥ 2 rows) into the fixed space, returning
/// the 1×q score row as a vector.
pub fn project_fixed(model: &SklpcaModel, x_test: &Array2<f64>) -> Result<Vec<f64>> {
    check_test_width(x_test, model.train.p())?;
    if x_test.nrows() < 2 {
        return Err(Error::InsufficientData(format!(
            "fixed projection needs at least two test rows, got {}",
            x_test.nrows()
        )));
    }
    let cross = gram_cross(&model.feature_spec, x_test, model.train.features())?;
    model.fixed_scores_from_cross(&cross.values)
}

/// Projects test rows into a known subject's random space (n'×q_i).
///
/// # Errors
/// [`Error::UnknownSubject`] when the id was not in training; callers
/// fall back to fixed-only prediction.
pub fn project_random(
    model: &SklpcaModel,
    x_test: &Array2<f64>,
    subject_id: &str,
) -> Result<Array2<f64>> {
    check_test_width(x_test, model.train.p())?;
    let (index, _) = model
        .subject(subject_id)
        .ok_or_else(|| Error::UnknownSubject(subject_id.to_string()))?;
    let block = model.train.subject_features(index);
    let cross = gram_cross(&model.feature_spec, x_test, &block)?;
    model.random_scores_from_cross(index, &cross.values)
}

fn check_test_width(x_test: &Array2<f64>, p: usize) -> Result<()> {
    if x_test.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "test features have {} columns, training had {}",
            x_test.ncols(),
            p
        )));
    }
    Ok(())
}

/// Outcomes as an n×1 matrix for outcome-kernel computations.
pub fn outcome_matrix(data: &LongitudinalDataset) -> Array2<f64> {
    Array2::from_shape_vec((data.n(), 1), data.outcomes().to_vec())
        .expect("outcome length equals n")
}

/// A serializable reduction model of either kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Skpca(SkpcaModel),
    Sklpca(SklpcaModel),
}

pub const MODEL_FORMAT: &str = "sklpca-reduction";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    model: ModelKind,
}

/// Writes a reduction model as self-describing JSON. Reals use shortest
/// round-trip decimal form, so loading reproduces them bit-exactly.
pub fn save_model(path: &Path, model: &ModelKind) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let out = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(out), &file)
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))
}

/// Loads a model written by [`save_model`], validating format and version.
pub fn load_model(path: &Path) -> Result<ModelKind> {
    let input = std::fs::File::open(path)?;
    let file: ModelFile = serde_json::from_reader(std::io::BufReader::new(input))
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Parse(format!(
            "{}: not a reduction model file (format {:?})",
            path.display(),
            file.format
        )));
    }
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "{}: unsupported model format version {} (this build reads {})",
            path.display(),
            file.format_version,
            MODEL_FORMAT_VERSION
        )));
    }
    Ok(file.model)
}
