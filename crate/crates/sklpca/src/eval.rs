//! Grouped cross-validation, the simulation experiment harness, and the
//! results table writer.
//!
//! Folds are drawn within subjects: every subject contributes rows to
//! every fold, so each held-out block has the rest of that subject's
//! trajectory available for the subject-specific (random) correction.
//! Bandwidths are resolved per fold from training rows only; kernel
//! entries are pairwise, so slicing cached inner products by row index
//! is exactly the kernel computed from scratch on the subset, with no
//! leakage from held-out rows.
//!
//! A fold's training side drops subjects left with fewer than two rows
//! (the subject-mean kernel divides by n_i − 1). Their held-out rows are
//! still predicted, through the fixed component alone; a single held-out
//! row of a known subject borrows the subject's training fixed score,
//! and a single row of an unknown subject falls back to the training
//! mean and marks the report degenerate.
//!
//! The experiment harness runs a grid of simulation cells for several
//! replicates, sharing one dataset, kernel cache, and fold plan between
//! both methods per replicate. Replicates are independent, so they run
//! in parallel and deterministically: each replicate's generator seed is
//! the base seed XOR the replicate index, regardless of thread count.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::kernels::{
    gaussian_from_inner, median_sigma_from_sq_dists, sq_dists_from_gram, Bandwidth, GramMatrix,
    KernelFamily, KernelSpec,
};
use crate::linalg;
use crate::mixed_model::{fit_baseline, fit_mixed};
use crate::reduce::{
    fit_sklpca_from_kernels, fit_skpca_from_kernels, informative_pooled_dimension, EigMode,
    FixedDim, SubjectDim,
};
use crate::sim::{simulate, simulate_lattice, LatticeConfig, SimConfig, SimFamily};

/// Mixing constant separating the fold-shuffle stream from the data
/// generator stream derived from the same replicate seed.
const FOLD_SEED_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// How a subject's rows are split across folds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldStrategy {
    /// Rows shuffled once per subject, then dealt round-robin.
    WithinSubjectRandom,
    /// Consecutive blocks of the (time-ordered) trajectory.
    WithinSubjectContiguous,
}

impl FoldStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            FoldStrategy::WithinSubjectRandom => "random",
            FoldStrategy::WithinSubjectContiguous => "contiguous",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(FoldStrategy::WithinSubjectRandom),
            "contiguous" => Ok(FoldStrategy::WithinSubjectContiguous),
            other => Err(Error::InvalidConfig(format!(
                "unknown fold strategy {:?} (expected \"random\" or \"contiguous\")",
                other
            ))),
        }
    }
}

/// Assignment of every row to a fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub strategy: FoldStrategy,
    /// One entry per row: the fold holding the row out, or the sentinel
    /// value `k` for rows that train in every fold.
    pub assignments: Vec<usize>,
    /// Subjects with fewer rows than folds, kept train-only.
    pub train_only_subjects: Vec<String>,
}

/// Splits each subject's rows across `k` folds.
///
/// Subjects with fewer than `k` rows are not split; their rows train in
/// every fold and the subject is listed in `train_only_subjects`.
///
/// # Errors
/// `k < 2`.
pub fn make_folds(
    data: &LongitudinalDataset,
    k: usize,
    strategy: FoldStrategy,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "cross-validation needs at least two folds, got {}",
            k
        )));
    }
    let groups = data.groups();
    let mut assignments = vec![k; data.n()];
    let mut train_only = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..groups.num_subjects() {
        let range = groups.range(i);
        let n_i = range.len();
        if n_i < k {
            train_only.push(groups.subject_id(i).to_string());
            continue;
        }
        match strategy {
            FoldStrategy::WithinSubjectContiguous => {
                for b in 0..k {
                    let lo = range.start + b * n_i / k;
                    let hi = range.start + (b + 1) * n_i / k;
                    for slot in assignments.iter_mut().take(hi).skip(lo) {
                        *slot = b;
                    }
                }
            }
            FoldStrategy::WithinSubjectRandom => {
                let mut local: Vec<usize> = (0..n_i).collect();
                local.shuffle(&mut rng);
                for (j, &offset) in local.iter().enumerate() {
                    assignments[range.start + offset] = j % k;
                }
            }
        }
    }
    Ok(FoldPlan {
        k,
        strategy,
        assignments,
        train_only_subjects: train_only,
    })
}

/// The two methods the harness compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Sklpca,
    Skpca,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sklpca => "sklpca",
            Method::Skpca => "skpca",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sklpca" => Ok(Method::Sklpca),
            "skpca" => Ok(Method::Skpca),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {:?} (expected \"sklpca\" or \"skpca\")",
                other
            ))),
        }
    }
}

/// Modeling choices shared by both methods in one cross-validation run.
#[derive(Clone, Debug)]
pub struct CvParams {
    pub feature_spec: KernelSpec,
    pub outcome_spec: KernelSpec,
    /// Fixed dimension (sklPCA) and pooled dimension (skPCA).
    pub q: FixedDim,
    pub q_i: SubjectDim,
    pub ridge: f64,
    pub eig_mode: EigMode,
}

/// Outcome of one cross-validated evaluation.
#[derive(Clone, Debug)]
pub struct CvReport {
    /// Pearson correlation between pooled held-out predictions and truth
    /// (zero when the correlation is undefined; see `degenerate`).
    pub correlation: f64,
    /// Set when the pooled correlation was undefined (zero variance) or
    /// any prediction fell back to the training mean.
    pub degenerate: bool,
    /// Held-out blocks predicted without a subject-specific correction.
    pub fixed_only_blocks: usize,
    /// Single-row blocks of unknown subjects, predicted as the training
    /// mean.
    pub mean_fallbacks: usize,
    /// Subjects dropped from any fold's training side, sorted.
    pub dropped_subjects: Vec<String>,
    /// Total held-out predictions pooled into the correlation.
    pub n_predictions: usize,
}

/// Reusable per-dataset matrices shared across folds and methods.
pub struct KernelCache {
    feature_inner: Array2<f64>,
    feature_sq: Option<Array2<f64>>,
    outcome_sq: Option<Array2<f64>>,
}

impl KernelCache {
    pub fn new(
        data: &LongitudinalDataset,
        feature_spec: &KernelSpec,
        outcome_spec: &KernelSpec,
    ) -> Result<KernelCache> {
        let x = data.features();
        let feature_inner = x.dot(&x.t());
        let feature_sq = if feature_spec.family() == KernelFamily::Gaussian {
            Some(sq_dists_from_gram(&feature_inner)?)
        } else {
            None
        };
        let outcome_sq = if outcome_spec.family() == KernelFamily::Gaussian {
            let y = data.outcomes();
            let n = y.len();
            let mut sq = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = y[i] - y[j];
                    sq[(i, j)] = d * d;
                    sq[(j, i)] = d * d;
                }
            }
            Some(sq)
        } else {
            None
        };
        Ok(KernelCache {
            feature_inner,
            feature_sq,
            outcome_sq,
        })
    }
}

fn slice_square(source: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| {
        source[(idx[a], idx[b])]
    })
}

/// Everything one fold needs, assembled once and shared by both methods.
struct FoldKernels {
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    k_train: GramMatrix,
    l_train: GramMatrix,
    /// Feature kernel of held-out rows against training rows.
    k_cross: Array2<f64>,
    train_data: LongitudinalDataset,
    test_rows: Vec<usize>,
    dropped: Vec<String>,
    assembly_secs: f64,
}

fn assemble_fold(
    data: &LongitudinalDataset,
    cache: &KernelCache,
    params: &CvParams,
    fold_id: usize,
    folds: &FoldPlan,
) -> Result<Option<FoldKernels>> {
    let started = Instant::now();
    let groups = data.groups();
    let test_rows: Vec<usize> = (0..data.n())
        .filter(|&r| folds.assignments[r] == fold_id)
        .collect();
    if test_rows.is_empty() {
        return Ok(None);
    }

    let mut train_counts = vec![0usize; groups.num_subjects()];
    let mut subject_of_row = vec![0usize; data.n()];
    for i in 0..groups.num_subjects() {
        for r in groups.range(i) {
            subject_of_row[r] = i;
        }
    }
    for r in 0..data.n() {
        if folds.assignments[r] != fold_id {
            train_counts[subject_of_row[r]] += 1;
        }
    }
    let mut dropped = Vec::new();
    for i in 0..groups.num_subjects() {
        if train_counts[i] < 2 {
            dropped.push(groups.subject_id(i).to_string());
        }
    }
    let train_rows: Vec<usize> = (0..data.n())
        .filter(|&r| folds.assignments[r] != fold_id && train_counts[subject_of_row[r]] >= 2)
        .collect();
    if train_rows.len() < 2 || train_rows.len() == data.n() {
        return Err(Error::InsufficientData(format!(
            "fold {} leaves {} trainable rows",
            fold_id,
            train_rows.len()
        )));
    }
    let train_data = data.select_rows(&train_rows)?;

    // Feature kernel: resolve the bandwidth from training rows only, then
    // map cached inner products, which matches computing the kernel from
    // scratch on those rows.
    let (k_spec, k_train_values, k_cross) = match params.feature_spec.family() {
        KernelFamily::Linear => {
            let k_train = slice_square(&cache.feature_inner, &train_rows);
            let cross = Array2::from_shape_fn((test_rows.len(), train_rows.len()), |(t, b)| {
                cache.feature_inner[(test_rows[t], train_rows[b])]
            });
            (params.feature_spec.clone(), k_train, cross)
        }
        KernelFamily::Gaussian => {
            let sq = cache
                .feature_sq
                .as_ref()
                .expect("cache built for a Gaussian feature kernel");
            let sigma = match params.feature_spec.bandwidth() {
                Bandwidth::Fixed(s) => s,
                Bandwidth::MedianHeuristic => median_sigma_from_sq_dists(sq, &train_rows)?,
            };
            let spec = params.feature_spec.with_sigma(sigma);
            let inner_train = slice_square(&cache.feature_inner, &train_rows);
            let mut k_train = gaussian_from_inner(&inner_train, sigma);
            linalg::mirror_upper(&mut k_train);
            let denom = 2.0 * sigma * sigma;
            let cross = Array2::from_shape_fn((test_rows.len(), train_rows.len()), |(t, b)| {
                let (gt, gb) = (test_rows[t], train_rows[b]);
                let d2 = (cache.feature_inner[(gt, gt)] + cache.feature_inner[(gb, gb)]
                    - 2.0 * cache.feature_inner[(gt, gb)])
                    .max(0.0);
                (-d2 / denom).exp()
            });
            (spec, k_train, cross)
        }
    };

    let y = data.outcomes();
    let (l_spec, l_train_values) = match params.outcome_spec.family() {
        KernelFamily::Linear => {
            let l = Array2::from_shape_fn((train_rows.len(), train_rows.len()), |(a, b)| {
                y[train_rows[a]] * y[train_rows[b]]
            });
            (params.outcome_spec.clone(), l)
        }
        KernelFamily::Gaussian => {
            let sq = cache
                .outcome_sq
                .as_ref()
                .expect("cache built for a Gaussian outcome kernel");
            let sigma = match params.outcome_spec.bandwidth() {
                Bandwidth::Fixed(s) => s,
                Bandwidth::MedianHeuristic => median_sigma_from_sq_dists(sq, &train_rows)?,
            };
            let denom = 2.0 * sigma * sigma;
            let l = Array2::from_shape_fn((train_rows.len(), train_rows.len()), |(a, b)| {
                if a == b {
                    1.0
                } else {
                    (-sq[(train_rows[a], train_rows[b])] / denom).exp()
                }
            });
            (params.outcome_spec.with_sigma(sigma), l)
        }
    };

    Ok(Some(FoldKernels {
        k_spec,
        l_spec,
        k_train: GramMatrix {
            values: k_train_values,
            symmetric: true,
        },
        l_train: GramMatrix {
            values: l_train_values,
            symmetric: true,
        },
        k_cross,
        train_data,
        test_rows,
        dropped,
        assembly_secs: started.elapsed().as_secs_f64(),
    }))
}

#[derive(Default)]
struct FoldPart {
    preds: Vec<f64>,
    truths: Vec<f64>,
    fixed_only_blocks: usize,
    mean_fallbacks: usize,
}

fn skpca_fold(fk: &FoldKernels, data: &LongitudinalDataset, params: &CvParams) -> Result<FoldPart> {
    let q = match params.q {
        FixedDim::Fixed(v) => v,
        FixedDim::Auto => informative_pooled_dimension(&fk.k_train, &fk.l_train)?,
    };
    let model = fit_skpca_from_kernels(
        fk.train_data.features(),
        fk.k_spec.clone(),
        &fk.k_train,
        &fk.l_train,
        q,
        params.eig_mode,
    )?;
    let baseline = fit_baseline(&model, fk.train_data.outcomes(), params.ridge)?;
    let scores = fk.k_cross.dot(&model.v);
    let mut part = FoldPart::default();
    for (t, &row) in fk.test_rows.iter().enumerate() {
        part.preds.push(baseline.predict_row(&scores.row(t).to_vec()));
        part.truths.push(data.outcomes()[row]);
    }
    Ok(part)
}

fn sklpca_fold(
    fk: &FoldKernels,
    data: &LongitudinalDataset,
    params: &CvParams,
) -> Result<FoldPart> {
    let model = fit_sklpca_from_kernels(
        &fk.train_data,
        fk.k_spec.clone(),
        fk.l_spec.clone(),
        &fk.k_train,
        &fk.l_train,
        params.q,
        params.q_i.clone(),
    )?;
    let predictor = fit_mixed(&model, &fk.train_data, params.ridge)?;
    let train_outcomes = fk.train_data.outcomes();
    let train_mean = train_outcomes.iter().sum::<f64>() / train_outcomes.len() as f64;

    let mut part = FoldPart::default();
    let groups = data.groups();
    let mut cursor = 0usize;
    for i in 0..groups.num_subjects() {
        let range = groups.range(i);
        let lo = cursor;
        while cursor < fk.test_rows.len() && fk.test_rows[cursor] < range.end {
            cursor += 1;
        }
        if cursor == lo {
            continue;
        }
        let hi = cursor;
        let n_prime = hi - lo;
        let id = groups.subject_id(i);
        let known = model.subject(id).map(|(ti, _)| ti);

        // A subject seen in training keeps its training fixed score: the
        // subject-level effect is a property of the subject, and the
        // training estimate pools every training row rather than the few
        // held-out ones. Re-estimating from the held-out block is reserved
        // for subjects the model has never seen.
        let fixed_part = match known {
            Some(ti) => predictor.fixed_part(&model.train_fixed_scores.row(ti).to_vec()),
            None if n_prime >= 2 => {
                let block = fk.k_cross.slice(s![lo..hi, ..]).to_owned();
                let scores = model.fixed_scores_from_cross(&block)?;
                predictor.fixed_part(&scores)
            }
            None => {
                part.mean_fallbacks += 1;
                train_mean
            }
        };

        match known {
            Some(ti) => {
                let cols = model.train.groups().range(ti);
                let sub_cross = fk.k_cross.slice(s![lo..hi, cols]).to_owned();
                let random = model.random_scores_from_cross(ti, &sub_cross)?;
                for r in 0..n_prime {
                    let correction = predictor
                        .random_part(id, &random.row(r).to_vec())
                        .expect("subject came from the model's own index");
                    part.preds.push(fixed_part + correction);
                    part.truths.push(data.outcomes()[fk.test_rows[lo + r]]);
                }
            }
            None => {
                part.fixed_only_blocks += 1;
                for r in 0..n_prime {
                    part.preds.push(fixed_part);
                    part.truths.push(data.outcomes()[fk.test_rows[lo + r]]);
                }
            }
        }
    }
    Ok(part)
}

struct MethodRun {
    method: Method,
    parts: Vec<FoldPart>,
    dropped: BTreeSet<String>,
    secs: f64,
    error: Option<Error>,
}

impl MethodRun {
    fn new(method: Method) -> Self {
        MethodRun {
            method,
            parts: Vec::new(),
            dropped: BTreeSet::new(),
            secs: 0.0,
            error: None,
        }
    }

    fn finalize(self) -> (Result<CvReport>, f64) {
        if let Some(e) = self.error {
            return (Err(e), self.secs);
        }
        let mut preds = Vec::new();
        let mut truths = Vec::new();
        let mut report = CvReport {
            correlation: 0.0,
            degenerate: false,
            fixed_only_blocks: 0,
            mean_fallbacks: 0,
            dropped_subjects: self.dropped.into_iter().collect(),
            n_predictions: 0,
        };
        for part in self.parts {
            preds.extend(part.preds);
            truths.extend(part.truths);
            report.fixed_only_blocks += part.fixed_only_blocks;
            report.mean_fallbacks += part.mean_fallbacks;
        }
        if preds.len() < 2 {
            return (
                Err(Error::InsufficientData(format!(
                    "cross-validation produced {} held-out predictions",
                    preds.len()
                ))),
                self.secs,
            );
        }
        report.n_predictions = preds.len();
        match pearson(&preds, &truths) {
            Some(r) => report.correlation = r,
            None => {
                report.correlation = 0.0;
                report.degenerate = true;
            }
        }
        report.degenerate |= report.mean_fallbacks > 0;
        (Ok(report), self.secs)
    }
}

/// Runs the fold loop once, evaluating every requested method on shared
/// per-fold kernels. Fold assembly time is charged to every method (each
/// would have to do that work alone); fit and prediction time is charged
/// to the method that spent it.
fn run_cv_multi(
    data: &LongitudinalDataset,
    cache: &KernelCache,
    params: &CvParams,
    methods: &[Method],
    folds: &FoldPlan,
) -> Vec<(Result<CvReport>, f64)> {
    let mut runs: Vec<MethodRun> = methods.iter().map(|&m| MethodRun::new(m)).collect();
    for b in 0..folds.k {
        if runs.iter().all(|r| r.error.is_some()) {
            break;
        }
        match assemble_fold(data, cache, params, b, folds) {
            Err(e) => {
                let msg = e.to_string();
                for run in runs.iter_mut().filter(|r| r.error.is_none()) {
                    run.error = Some(clone_error(&e, &msg));
                }
                break;
            }
            Ok(None) => continue,
            Ok(Some(fk)) => {
                for run in runs.iter_mut().filter(|r| r.error.is_none()) {
                    run.secs += fk.assembly_secs;
                    run.dropped.extend(fk.dropped.iter().cloned());
                    let started = Instant::now();
                    let outcome = match run.method {
                        Method::Skpca => skpca_fold(&fk, data, params),
                        Method::Sklpca => sklpca_fold(&fk, data, params),
                    };
                    run.secs += started.elapsed().as_secs_f64();
                    match outcome {
                        Ok(part) => run.parts.push(part),
                        Err(e) => run.error = Some(e),
                    }
                }
            }
        }
    }
    runs.into_iter().map(|r| r.finalize()).collect()
}

/// An [`Error`] is not clonable (it can wrap I/O errors), so a shared
/// fold-assembly failure is duplicated per method by kind and message.
fn clone_error(e: &Error, msg: &str) -> Error {
    match e {
        Error::InsufficientData(_) => Error::InsufficientData(msg.to_string()),
        Error::DegenerateData(_) => Error::DegenerateData(msg.to_string()),
        Error::Numerical(_) => Error::Numerical(msg.to_string()),
        Error::InvalidConfig(_) => Error::InvalidConfig(msg.to_string()),
        _ => Error::Numerical(msg.to_string()),
    }
}

/// Cross-validated correlation of one method under a fold plan.
///
/// # Errors
/// Invalid fold plans, folds whose training side loses every subject,
/// or an unrecoverable fit failure in any fold.
pub fn cv_correlation(
    data: &LongitudinalDataset,
    method: Method,
    params: &CvParams,
    folds: &FoldPlan,
) -> Result<CvReport> {
    if folds.assignments.len() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "fold plan covers {} rows but the dataset has {}",
            folds.assignments.len(),
            data.n()
        )));
    }
    let cache = KernelCache::new(data, &params.feature_spec, &params.outcome_spec)?;
    let mut out = run_cv_multi(data, &cache, params, &[method], folds);
    out.remove(0).0
}

/// Pearson correlation; `None` when undefined (fewer than two points or
/// zero variance on either side).
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Data-generating design of one experiment cell.
#[derive(Clone, Debug)]
pub enum CellDesign {
    Factorial(SimConfig),
    Lattice(LatticeConfig),
}

impl CellDesign {
    fn dataset(&self, seed: u64) -> Result<LongitudinalDataset> {
        match self {
            CellDesign::Factorial(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                Ok(simulate(&cfg)?.dataset)
            }
            CellDesign::Lattice(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                Ok(simulate_lattice(&cfg)?.dataset)
            }
        }
    }

    fn ratio(&self) -> f64 {
        match self {
            CellDesign::Factorial(cfg) => cfg.sigma_b / cfg.sigma_w,
            CellDesign::Lattice(cfg) => cfg.sigma_b / cfg.sigma_w,
        }
    }

    fn latent_rank(&self) -> usize {
        match self {
            CellDesign::Factorial(cfg) => cfg.latent_rank,
            CellDesign::Lattice(_) => 1,
        }
    }

    fn ambient_dim(&self) -> usize {
        match self {
            CellDesign::Factorial(cfg) => cfg.ambient_dim,
            CellDesign::Lattice(_) => 1,
        }
    }
}

/// One cell of an experiment grid: a data design plus the modeling
/// choices both methods share.
#[derive(Clone, Debug)]
pub struct ExperimentCell {
    pub label: String,
    pub design: CellDesign,
    pub feature_spec: KernelSpec,
    pub outcome_spec: KernelSpec,
    pub q: FixedDim,
    pub q_i: SubjectDim,
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub ridge: f64,
    pub eig_mode: EigMode,
}

impl ExperimentCell {
    fn params(&self) -> CvParams {
        CvParams {
            feature_spec: self.feature_spec.clone(),
            outcome_spec: self.outcome_spec.clone(),
            q: self.q,
            q_i: self.q_i.clone(),
            ridge: self.ridge,
            eig_mode: self.eig_mode,
        }
    }
}

/// Aggregate result of one method on one cell.
#[derive(Clone, Debug)]
pub struct MethodSummary {
    pub cell_index: usize,
    pub label: String,
    pub ratio: f64,
    pub latent_rank: usize,
    pub ambient_dim: usize,
    pub method: Method,
    pub reps_attempted: usize,
    pub reps_succeeded: usize,
    /// Mean held-out correlation over successful replicates (NaN when
    /// none succeeded).
    pub mean_corr: f64,
    /// Sample standard deviation over successful replicates (zero for a
    /// single replicate, NaN when none succeeded).
    pub sd_corr: f64,
    pub degenerate_count: usize,
    pub failures: usize,
    /// Total method compute seconds across replicates (fits, predictions,
    /// and per-fold kernel assembly; excludes data generation).
    pub runtime_s: f64,
    /// True when exactly one replicate succeeded, so `sd_corr` carries no
    /// information.
    pub small_sample: bool,
}

/// The factorial simulation grid: family × (σ_b/σ_w ratio) × latent rank
/// × ambient dimension, at 50 subjects with 50 rows each.
pub fn paper_grid() -> Vec<ExperimentCell> {
    let mut cells = Vec::new();
    for family in [SimFamily::Linear, SimFamily::Radial] {
        for ratio in [0.1, 1.0] {
            for latent_rank in [1usize, 5] {
                for ambient_dim in [10usize, 1000] {
                    let (feature_spec, outcome_spec) = match family {
                        SimFamily::Linear => (KernelSpec::linear(), KernelSpec::linear()),
                        SimFamily::Radial => (
                            KernelSpec::gaussian_median_heuristic(),
                            KernelSpec::gaussian_median_heuristic(),
                        ),
                    };
                    cells.push(ExperimentCell {
                        label: family.name().to_string(),
                        design: CellDesign::Factorial(SimConfig {
                            m: 50,
                            n_per_subject: 50,
                            latent_rank,
                            ambient_dim,
                            sigma_b: ratio,
                            sigma_w: 1.0,
                            sigma_eps: 1e-5_f64.sqrt(),
                            family,
                            seed: 0,
                        }),
                        feature_spec,
                        outcome_spec,
                        q: FixedDim::Fixed(latent_rank),
                        q_i: SubjectDim::Uniform(latent_rank),
                        folds: 5,
                        strategy: FoldStrategy::WithinSubjectRandom,
                        ridge: 0.0,
                        eig_mode: EigMode::Auto,
                    });
                }
            }
        }
    }
    cells
}

/// The lattice grid: four (σ_b, σ_w) pairs at 15 subjects with 15 rows
/// each and observation noise 0.01.
pub fn lattice_grid() -> Vec<ExperimentCell> {
    [(1.0, 1.0), (1.0, 5.0), (5.0, 1.0), (5.0, 5.0)]
        .into_iter()
        .map(|(sigma_b, sigma_w)| ExperimentCell {
            label: "lattice".to_string(),
            design: CellDesign::Lattice(LatticeConfig {
                m: 15,
                n_per_subject: 15,
                sigma_b,
                sigma_w,
                sigma_eps: 0.01,
                seed: 0,
            }),
            feature_spec: KernelSpec::linear(),
            outcome_spec: KernelSpec::linear(),
            q: FixedDim::Fixed(1),
            q_i: SubjectDim::Uniform(1),
            folds: 5,
            strategy: FoldStrategy::WithinSubjectRandom,
            ridge: 0.0,
            eig_mode: EigMode::Auto,
        })
        .collect()
}

struct RepOutcome {
    sklpca: Option<(f64, bool)>,
    skpca: Option<(f64, bool)>,
    sklpca_secs: f64,
    skpca_secs: f64,
}

fn run_rep(cell: &ExperimentCell, sim_seed: u64) -> RepOutcome {
    let failed = RepOutcome {
        sklpca: None,
        skpca: None,
        sklpca_secs: 0.0,
        skpca_secs: 0.0,
    };
    let data = match cell.design.dataset(sim_seed) {
        Ok(d) => d,
        Err(_) => return failed,
    };
    let params = cell.params();
    let cache = match KernelCache::new(&data, &params.feature_spec, &params.outcome_spec) {
        Ok(c) => c,
        Err(_) => return failed,
    };
    let folds = match make_folds(&data, cell.folds, cell.strategy, sim_seed ^ FOLD_SEED_GAMMA) {
        Ok(f) => f,
        Err(_) => return failed,
    };
    let mut out = run_cv_multi(
        &data,
        &cache,
        &params,
        &[Method::Sklpca, Method::Skpca],
        &folds,
    );
    let (skp_res, skp_secs) = out.remove(1);
    let (skl_res, skl_secs) = out.remove(0);
    RepOutcome {
        sklpca: skl_res.ok().map(|r| (r.correlation, r.degenerate)),
        skpca: skp_res.ok().map(|r| (r.correlation, r.degenerate)),
        sklpca_secs: skl_secs,
        skpca_secs: skp_secs,
    }
}

/// Runs every cell for `reps` replicates and aggregates per method.
///
/// Replicate r of every cell draws its data with seed `base_seed ^ r`
/// (and a fold-shuffle seed derived from that), so results are
/// reproducible and independent of thread count. Replicates run in
/// parallel on the global thread pool.
///
/// Summaries come back in cell order, the sklPCA row before the skPCA
/// row for each cell.
pub fn run_experiment(
    cells: &[ExperimentCell],
    reps: usize,
    base_seed: u64,
) -> Result<Vec<MethodSummary>> {
    if reps == 0 {
        return Err(Error::InvalidConfig(
            "experiment needs at least one replicate".into(),
        ));
    }
    if cells.is_empty() {
        return Err(Error::InvalidConfig("experiment grid is empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<RepOutcome> = jobs
        .par_iter()
        .map(|&(c, r)| run_rep(&cells[c], base_seed ^ (r as u64)))
        .collect();

    let mut summaries = Vec::with_capacity(cells.len() * 2);
    for (c, cell) in cells.iter().enumerate() {
        let cell_outcomes = &outcomes[c * reps..(c + 1) * reps];
        for method in [Method::Sklpca, Method::Skpca] {
            let picked: Vec<(f64, bool)> = cell_outcomes
                .iter()
                .filter_map(|o| match method {
                    Method::Sklpca => o.sklpca,
                    Method::Skpca => o.skpca,
                })
                .collect();
            let secs: f64 = cell_outcomes
                .iter()
                .map(|o| match method {
                    Method::Sklpca => o.sklpca_secs,
                    Method::Skpca => o.skpca_secs,
                })
                .sum();
            let n_ok = picked.len();
            let (mean, sd) = if n_ok == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = picked.iter().map(|p| p.0).sum::<f64>() / n_ok as f64;
                let sd = if n_ok < 2 {
                    0.0
                } else {
                    let ss: f64 = picked.iter().map(|p| (p.0 - mean) * (p.0 - mean)).sum();
                    (ss / (n_ok - 1) as f64).sqrt()
                };
                (mean, sd)
            };
            summaries.push(MethodSummary {
                cell_index: c,
                label: cell.label.clone(),
                ratio: cell.design.ratio(),
                latent_rank: cell.design.latent_rank(),
                ambient_dim: cell.design.ambient_dim(),
                method,
                reps_attempted: reps,
                reps_succeeded: n_ok,
                mean_corr: mean,
                sd_corr: sd,
                degenerate_count: picked.iter().filter(|p| p.1).count(),
                failures: reps - n_ok,
                runtime_s: secs,
                small_sample: n_ok == 1,
            });
        }
    }
    Ok(summaries)
}

/// Writes the results table: one row per cell and method.
///
/// Floating-point fields print in shortest round-trip form, so reruns
/// with the same seed produce byte-identical files except for
/// `runtime_s`, which reports measured wall time.
pub fn write_results_csv(path: &Path, rows: &[MethodSummary]) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(
        out,
        "config,ratio,R,D,method,reps,mean_corr,sd_corr,degenerate_count,runtime_s"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.label,
            row.ratio,
            row.latent_rank,
            row.ambient_dim,
            row.method.name(),
            row.reps_succeeded,
            row.mean_corr,
            row.sd_corr,
            row.degenerate_count,
            row.runtime_s
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsic::GroupIndex;
    use rand::Rng;

    fn linked_dataset(m: usize, n_i: usize, p: usize, seed: u64) -> LongitudinalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m * n_i;
        let mut features = Array2::<f64>::zeros((n, p));
        let mut outcomes = Vec::with_capacity(n);
        for i in 0..m {
            let center: f64 = rng.gen_range(-1.0..1.0);
            for j in 0..n_i {
                let r = i * n_i + j;
                let within: f64 = rng.gen_range(-0.5..0.5);
                features[(r, 0)] = center + within;
                for c in 1..p {
                    features[(r, c)] = rng.gen_range(-1.0..1.0);
                }
                outcomes.push(center + within + 0.01 * rng.gen_range(-1.0..1.0));
                let _ = j;
            }
        }
        let time: Vec<f64> = (0..n).map(|r| (r % n_i) as f64).collect();
        let groups =
            GroupIndex::from_counts((0..m).map(|i| (format!("s{:02}", i), n_i)).collect())
                .unwrap();
        LongitudinalDataset::new(groups, features, outcomes, time).unwrap()
    }

    fn default_params() -> CvParams {
        CvParams {
            feature_spec: KernelSpec::linear(),
            outcome_spec: KernelSpec::linear(),
            q: FixedDim::Fixed(1),
            q_i: SubjectDim::Uniform(1),
            ridge: 0.0,
            eig_mode: EigMode::Auto,
        }
    }

    #[test]
    fn contiguous_folds_split_each_trajectory_in_order() {
        let data = linked_dataset(2, 5, 1, 1);
        let plan = make_folds(&data, 2, FoldStrategy::WithinSubjectContiguous, 0).unwrap();
        assert_eq!(plan.assignments, vec![0, 0, 1, 1, 1, 0, 0, 1, 1, 1]);
        assert!(plan.train_only_subjects.is_empty());
    }

    #[test]
    fn random_folds_are_balanced_within_subjects() {
        let data = linked_dataset(4, 10, 1, 2);
        let plan = make_folds(&data, 3, FoldStrategy::WithinSubjectRandom, 7).unwrap();
        for i in 0..4 {
            let mut counts = [0usize; 3];
            for r in data.groups().range(i) {
                counts[plan.assignments[r]] += 1;
            }
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "unbalanced counts {:?}", counts);
        }
    }

    #[test]
    fn random_folds_are_seed_deterministic() {
        let data = linked_dataset(3, 8, 1, 3);
        let a = make_folds(&data, 4, FoldStrategy::WithinSubjectRandom, 11).unwrap();
        let b = make_folds(&data, 4, FoldStrategy::WithinSubjectRandom, 11).unwrap();
        assert_eq!(a, b);
        let c = make_folds(&data, 4, FoldStrategy::WithinSubjectRandom, 12).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn short_subjects_stay_train_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let features = Array2::from_shape_fn((7, 1), |_| rng.gen_range(-1.0..1.0));
        let outcomes: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let time = vec![0.0, 1.0, 2.0, 3.0, 4.0, 0.0, 1.0];
        let groups = GroupIndex::from_counts(vec![("long", 5), ("short", 2)]).unwrap();
        let data = LongitudinalDataset::new(groups, features, outcomes, time).unwrap();
        let plan = make_folds(&data, 3, FoldStrategy::WithinSubjectRandom, 5).unwrap();
        assert_eq!(plan.train_only_subjects, vec!["short".to_string()]);
        for r in 5..7 {
            assert_eq!(plan.assignments[r], 3, "sentinel fold id is k");
        }
        for r in 0..5 {
            assert!(plan.assignments[r] < 3);
        }
    }

    #[test]
    fn make_folds_rejects_k_below_two() {
        let data = linked_dataset(2, 4, 1, 6);
        assert!(make_folds(&data, 1, FoldStrategy::WithinSubjectRandom, 0).is_err());
        assert!(make_folds(&data, 0, FoldStrategy::WithinSubjectContiguous, 0).is_err());
    }

    #[test]
    fn cv_recovers_strong_signal() {
        let data = linked_dataset(6, 9, 2, 8);
        let params = default_params();
        let folds = make_folds(&data, 3, FoldStrategy::WithinSubjectRandom, 17).unwrap();
        let skl = cv_correlation(&data, Method::Sklpca, &params, &folds).unwrap();
        assert!(
            skl.correlation > 0.95,
            "sklpca correlation {} too weak",
            skl.correlation
        );
        assert!(!skl.degenerate);
        assert_eq!(skl.n_predictions, 54);
        let skp = cv_correlation(&data, Method::Skpca, &params, &folds).unwrap();
        assert!(
            skp.correlation > 0.8,
            "skpca correlation {} too weak",
            skp.correlation
        );
    }

    #[test]
    fn cv_is_invariant_to_subject_relabeling() {
        let data = linked_dataset(5, 6, 2, 9);
        let renamed_labels: Vec<String> = (0..data.num_subjects())
            .flat_map(|i| {
                let id = format!("zz{}", 9 - i);
                std::iter::repeat(id).take(data.groups().count(i))
            })
            .collect();
        let renamed = LongitudinalDataset::new(
            GroupIndex::from_labels(&renamed_labels).unwrap(),
            data.features().clone(),
            data.outcomes().to_vec(),
            data.time().to_vec(),
        )
        .unwrap();

        let params = default_params();
        let folds = make_folds(&data, 3, FoldStrategy::WithinSubjectRandom, 23).unwrap();
        for method in [Method::Sklpca, Method::Skpca] {
            let a = cv_correlation(&data, method, &params, &folds).unwrap();
            let b = cv_correlation(&renamed, method, &params, &folds).unwrap();
            assert_eq!(
                a.correlation, b.correlation,
                "{:?} correlation changed under relabeling",
                method
            );
        }
    }

    #[test]
    fn dropped_training_subjects_predict_fixed_only() {
        // The two-row subject splits 1/1 under k = 2, so each fold leaves
        // it one training row and it must be dropped and predicted from
        // the fixed component alone (single-row unknown blocks fall back
        // to the training mean).
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 4 * 6 + 2;
        let features = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0));
        let outcomes: Vec<f64> = features.column(0).to_vec();
        let mut time = Vec::new();
        for _ in 0..4 {
            time.extend((0..6).map(|t| t as f64));
        }
        time.extend([0.0, 1.0]);
        let groups = GroupIndex::from_counts(vec![
            ("a", 6),
            ("b", 6),
            ("c", 6),
            ("d", 6),
            ("tiny", 2),
        ])
        .unwrap();
        let data = LongitudinalDataset::new(groups, features, outcomes, time).unwrap();

        let params = default_params();
        let folds = make_folds(&data, 2, FoldStrategy::WithinSubjectContiguous, 0).unwrap();
        let report = cv_correlation(&data, Method::Sklpca, &params, &folds).unwrap();
        assert_eq!(report.dropped_subjects, vec!["tiny".to_string()]);
        assert_eq!(report.fixed_only_blocks, 2);
        assert_eq!(report.mean_fallbacks, 2);
        assert!(report.degenerate);
        assert_eq!(report.n_predictions, data.n());
    }

    #[test]
    fn all_subjects_dropped_is_an_error() {
        let data = linked_dataset(3, 2, 1, 11);
        let params = default_params();
        let folds = make_folds(&data, 2, FoldStrategy::WithinSubjectContiguous, 0).unwrap();
        let err = cv_correlation(&data, Method::Sklpca, &params, &folds).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "got {:?}", err);
    }

    #[test]
    fn fold_training_side_ignores_held_out_rows() {
        // Perturbing held-out rows must not change the training kernel,
        // the resolved bandwidth, or the training data for that fold.
        let data = linked_dataset(4, 6, 2, 12);
        let params = CvParams {
            feature_spec: KernelSpec::gaussian_median_heuristic(),
            outcome_spec: KernelSpec::gaussian_median_heuristic(),
            ..default_params()
        };
        let folds = make_folds(&data, 3, FoldStrategy::WithinSubjectRandom, 31).unwrap();

        let mut perturbed_features = data.features().clone();
        let mut perturbed_outcomes = data.outcomes().to_vec();
        for r in 0..data.n() {
            if folds.assignments[r] == 0 {
                for c in 0..perturbed_features.ncols() {
                    perturbed_features[(r, c)] += 100.0;
                }
                perturbed_outcomes[r] -= 42.0;
            }
        }
        let perturbed = LongitudinalDataset::new(
            data.groups().clone(),
            perturbed_features,
            perturbed_outcomes,
            data.time().to_vec(),
        )
        .unwrap();

        let cache_a = KernelCache::new(&data, &params.feature_spec, &params.outcome_spec).unwrap();
        let cache_b =
            KernelCache::new(&perturbed, &params.feature_spec, &params.outcome_spec).unwrap();
        let fka = assemble_fold(&data, &cache_a, &params, 0, &folds)
            .unwrap()
            .unwrap();
        let fkb = assemble_fold(&perturbed, &cache_b, &params, 0, &folds)
            .unwrap()
            .unwrap();
        assert_eq!(fka.k_spec, fkb.k_spec, "bandwidth leaked from test rows");
        assert_eq!(fka.l_spec, fkb.l_spec);
        assert_eq!(fka.k_train.values, fkb.k_train.values);
        assert_eq!(fka.l_train.values, fkb.l_train.values);
        assert_eq!(fka.train_data.features(), fkb.train_data.features());
        assert_ne!(fka.k_cross, fkb.k_cross, "cross kernel should change");
    }

    #[test]
    fn fold_kernels_match_from_scratch_computation() {
        // The cached-slice assembly must agree with directly evaluating
        // the kernel on the fold's training rows.
        let data = linked_dataset(3, 6, 2, 13);
        let params = CvParams {
            feature_spec: KernelSpec::gaussian_median_heuristic(),
            outcome_spec: KernelSpec::linear(),
            ..default_params()
        };
        let folds = make_folds(&data, 3, FoldStrategy::WithinSubjectContiguous, 0).unwrap();
        let cache = KernelCache::new(&data, &params.feature_spec, &params.outcome_spec).unwrap();
        let fk = assemble_fold(&data, &cache, &params, 1, &folds)
            .unwrap()
            .unwrap();

        let direct = crate::kernels::gram(&fk.k_spec, fk.train_data.features()).unwrap();
        let mut max_diff = 0.0_f64;
        for (a, b) in fk.k_train.values.iter().zip(direct.values.iter()) {
            max_diff = max_diff.max((a - b).abs());
        }
        assert!(max_diff <= 1e-12, "kernel assembly diverges: {}", max_diff);
    }

    #[test]
    fn pearson_basics() {
        assert!(pearson(&[1.0], &[2.0]).is_none());
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn paper_grid_has_sixteen_distinct_cells() {
        let cells = paper_grid();
        assert_eq!(cells.len(), 16);
        let mut keys = BTreeSet::new();
        for cell in &cells {
            let key = format!(
                "{}|{}|{}|{}",
                cell.label,
                cell.design.ratio(),
                cell.design.latent_rank(),
                cell.design.ambient_dim()
            );
            assert!(keys.insert(key), "duplicate cell");
            match &cell.design {
                CellDesign::Factorial(cfg) => {
                    assert_eq!(cfg.m, 50);
                    assert_eq!(cfg.n_per_subject, 50);
                    assert!((cfg.sigma_eps * cfg.sigma_eps - 1e-5).abs() < 1e-18);
                }
                CellDesign::Lattice(_) => panic!("paper grid is factorial"),
            }
        }
        assert_eq!(lattice_grid().len(), 4);
    }

    #[test]
    fn experiment_is_reproducible_and_ordered() {
        let cells = vec![ExperimentCell {
            label: "lattice".to_string(),
            design: CellDesign::Lattice(LatticeConfig {
                m: 6,
                n_per_subject: 6,
                sigma_b: 1.0,
                sigma_w: 1.0,
                sigma_eps: 0.01,
                seed: 0,
            }),
            feature_spec: KernelSpec::linear(),
            outcome_spec: KernelSpec::linear(),
            q: FixedDim::Fixed(1),
            q_i: SubjectDim::Uniform(1),
            folds: 3,
            strategy: FoldStrategy::WithinSubjectRandom,
            ridge: 0.0,
            eig_mode: EigMode::Auto,
        }];
        let a = run_experiment(&cells, 3, 42).unwrap();
        let b = run_experiment(&cells, 3, 42).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].method, Method::Sklpca);
        assert_eq!(a[1].method, Method::Skpca);
        assert_eq!(a[0].mean_corr, b[0].mean_corr, "not reproducible");
        assert_eq!(a[0].sd_corr, b[0].sd_corr);
        assert_eq!(a[1].mean_corr, b[1].mean_corr);
        assert_eq!(a[0].reps_succeeded, 3);
        assert_eq!(a[0].failures, 0);
        assert!(a[0].mean_corr > 0.8, "lattice sklpca {}", a[0].mean_corr);

        let c = run_experiment(&cells, 3, 43).unwrap();
        assert_ne!(a[0].mean_corr, c[0].mean_corr, "seed had no effect");
    }

    #[test]
    fn experiment_counts_failures_honestly() {
        // σ_b = σ_w = 0 collapses the lattice to constant outcomes: the
        // pooled method cannot fit (degenerate supervision) while the
        // decomposed method fits with warnings and reports a degenerate
        // zero correlation.
        let cells = vec![ExperimentCell {
            label: "flat".to_string(),
            design: CellDesign::Lattice(LatticeConfig {
                m: 5,
                n_per_subject: 6,
                sigma_b: 0.0,
                sigma_w: 0.0,
                sigma_eps: 0.0,
                seed: 0,
            }),
            feature_spec: KernelSpec::linear(),
            outcome_spec: KernelSpec::linear(),
            q: FixedDim::Fixed(1),
            q_i: SubjectDim::Uniform(1),
            folds: 3,
            strategy: FoldStrategy::WithinSubjectRandom,
            ridge: 0.0,
            eig_mode: EigMode::Auto,
        }];
        let rows = run_experiment(&cells, 2, 1).unwrap();
        let skl = &rows[0];
        let skp = &rows[1];
        assert_eq!(skl.method, Method::Sklpca);
        assert_eq!(skl.reps_succeeded, 2);
        assert_eq!(skl.degenerate_count, 2);
        assert_eq!(skl.mean_corr, 0.0);
        assert_eq!(skp.method, Method::Skpca);
        assert_eq!(skp.reps_succeeded, 0);
        assert_eq!(skp.failures, 2);
        assert!(skp.mean_corr.is_nan());
    }

    #[test]
    fn results_csv_has_expected_shape() {
        let cells = vec![ExperimentCell {
            label: "lattice".to_string(),
            design: CellDesign::Lattice(LatticeConfig {
                m: 5,
                n_per_subject: 5,
                sigma_b: 1.0,
                sigma_w: 1.0,
                sigma_eps: 0.01,
                seed: 0,
            }),
            feature_spec: KernelSpec::linear(),
            outcome_spec: KernelSpec::linear(),
            q: FixedDim::Fixed(1),
            q_i: SubjectDim::Uniform(1),
            folds: 2,
            strategy: FoldStrategy::WithinSubjectRandom,
            ridge: 0.0,
            eig_mode: EigMode::Auto,
        }];
        let rows = run_experiment(&cells, 1, 3).unwrap();
        assert!(rows[0].small_sample);
        assert_eq!(rows[0].sd_corr, 0.0);

        let dir = std::env::temp_dir().join("sklpca-eval-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("results.csv");
        write_results_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "config,ratio,R,D,method,reps,mean_corr,sd_corr,degenerate_count,runtime_s"
        );
        assert!(lines[1].starts_with("lattice,1,1,1,sklpca,1,"));
        assert!(lines[2].starts_with("lattice,1,1,1,skpca,1,"));
    }

    #[test]
    fn method_and_strategy_names_round_trip() {
        for m in [Method::Sklpca, Method::Skpca] {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        for s in [
            FoldStrategy::WithinSubjectRandom,
            FoldStrategy::WithinSubjectContiguous,
        ] {
            assert_eq!(FoldStrategy::parse(s.name()).unwrap(), s);
        }
        assert!(Method::parse("pca").is_err());
        assert!(FoldStrategy::parse("loo").is_err());
    }
}
