//! Kernel evaluation, Gram-matrix construction, and the centering
//! primitive shared by every estimator in the crate.
//!
//! Two kernel families are supported: the linear kernel `k(w, w') = wᵀw'`
//! and the Gaussian radial kernel `k(w, w') = exp(-‖w - w'‖² / (2σ²))`.
//! The Gaussian bandwidth may be fixed or resolved from data with the
//! median pairwise-distance heuristic.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    Linear,
    Gaussian,
}

/// Gaussian bandwidth: a fixed positive σ, or a marker asking for the
/// median heuristic to be resolved against training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

/// A kernel function specification. Linear kernels carry no parameters;
/// Gaussian kernels carry a bandwidth in one of the two modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: Bandwidth,
}

impl KernelSpec {
    /// The linear kernel `wᵀw'`.
    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            bandwidth: Bandwidth::Fixed(1.0),
        }
    }

    /// Gaussian kernel with a fixed bandwidth σ > 0.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "Gaussian bandwidth must be a positive finite real, got {}",
                sigma
            )));
        }
        Ok(KernelSpec {
            family: KernelFamily::Gaussian,
            bandwidth: Bandwidth::Fixed(sigma),
        })
    }

    /// Gaussian kernel whose bandwidth is resolved from data by
    /// [`resolve_bandwidth`] before use.
    pub fn gaussian_median_heuristic() -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    /// True when the spec can be evaluated directly (linear, or Gaussian
    /// with a fixed bandwidth).
    pub fn is_resolved(&self) -> bool {
        self.family == KernelFamily::Linear || matches!(self.bandwidth, Bandwidth::Fixed(_))
    }

    fn fixed_sigma(&self) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(s) => Ok(s),
            Bandwidth::MedianHeuristic => Err(Error::InvalidConfig(
                "Gaussian bandwidth not resolved; call resolve_bandwidth first".into(),
            )),
        }
    }

    /// Copy of this spec with the given fixed bandwidth.
    pub(crate) fn with_sigma(&self, sigma: f64) -> KernelSpec {
        KernelSpec {
            family: self.family,
            bandwidth: Bandwidth::Fixed(sigma),
        }
    }
}

/// A dense kernel matrix. `symmetric` is true exactly when the matrix was
/// built from a single row set (and is therefore square, symmetric, and
/// positive semidefinite up to rounding).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramMatrix {
    pub values: Array2<f64>,
    pub symmetric: bool,
}

impl GramMatrix {
    /// Wraps an externally built symmetric kernel matrix.
    pub fn from_symmetric(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric Gram matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if linalg::relative_asymmetry(&values) > 1e-12 {
            return Err(Error::InvalidConfig(
                "matrix is not symmetric within 1e-12 relative tolerance".into(),
            ));
        }
        Ok(GramMatrix {
            values,
            symmetric: true,
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Debug-mode sanity check: symmetry and (for small matrices, where an
    /// eigendecomposition is affordable) positive semidefiniteness with
    /// smallest eigenvalue ≥ -1e-8·trace/n.
    #[cfg(debug_assertions)]
    fn debug_validate(&self) {
        if !self.symmetric {
            return;
        }
        debug_assert!(linalg::relative_asymmetry(&self.values) <= 1e-12);
        let n = self.nrows();
        if n == 0 || n > 128 {
            return;
        }
        let trace: f64 = (0..n).map(|i| self.values[(i, i)]).sum();
        let eig = linalg::sym_eig(&self.values).expect("Gram eigendecomposition");
        debug_assert!(
            eig.values[0] >= -1e-8 * trace.abs().max(1.0) / n as f64,
            "Gram matrix is not PSD: min eigenvalue {}",
            eig.values[0]
        );
    }

    #[cfg(not(debug_assertions))]
    fn debug_validate(&self) {}
}

/// Evaluates the kernel on a single pair of feature vectors.
///
/// # Errors
/// Length mismatch, or a Gaussian spec whose bandwidth is unresolved.
pub fn kernel_eval(spec: &KernelSpec, w: &[f64], w2: &[f64]) -> Result<f64> {
    if w.len() != w2.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments have lengths {} and {}",
            w.len(),
            w2.len()
        )));
    }
    match spec.family {
        KernelFamily::Linear => Ok(w.iter().zip(w2).map(|(a, b)| a * b).sum()),
        KernelFamily::Gaussian => {
            let sigma = spec.fixed_sigma()?;
            let sq: f64 = w.iter().zip(w2).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((-sq / (2.0 * sigma * sigma)).exp())
        }
    }
}

/// Gram matrix over a single row set: entry `(i, j)` is the kernel of rows
/// `i` and `j` of `a`. The result is exactly symmetric with the
/// `symmetric` flag set.
pub fn gram(spec: &KernelSpec, a: &Array2<f64>) -> Result<GramMatrix> {
    check_features(a)?;
    let mut values = match spec.family {
        KernelFamily::Linear => a.dot(&a.t()),
        KernelFamily::Gaussian => {
            let sigma = spec.fixed_sigma()?;
            let g = a.dot(&a.t());
            gaussian_from_inner(&g, sigma)
        }
    };
    linalg::mirror_upper(&mut values);
    let gm = GramMatrix {
        values,
        symmetric: true,
    };
    gm.debug_validate();
    Ok(gm)
}

/// Gram matrix between two row sets: entry `(i, j)` is the kernel of row
/// `i` of `a` and row `j` of `b`.
pub fn gram_cross(spec: &KernelSpec, a: &Array2<f64>, b: &Array2<f64>) -> Result<GramMatrix> {
    check_features(a)?;
    check_features(b)?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "row sets have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let values = match spec.family {
        KernelFamily::Linear => a.dot(&b.t()),
        KernelFamily::Gaussian => {
            let sigma = spec.fixed_sigma()?;
            let cross = a.dot(&b.t());
            let sq_a: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
            let sq_b: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
            let denom = 2.0 * sigma * sigma;
            let mut out = cross;
            for i in 0..out.nrows() {
                for j in 0..out.ncols() {
                    let d2 = (sq_a[i] + sq_b[j] - 2.0 * out[(i, j)]).max(0.0);
                    out[(i, j)] = (-d2 / denom).exp();
                }
            }
            out
        }
    };
    Ok(GramMatrix {
        values,
        symmetric: false,
    })
}

/// Maps a symmetric inner-product matrix to Gaussian kernel values using
/// the squared-distance identity; the diagonal is exactly 1.
pub(crate) fn gaussian_from_inner(g: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let n = g.nrows();
    let denom = 2.0 * sigma * sigma;
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        out[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let d2 = (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0);
            out[(i, j)] = (-d2 / denom).exp();
        }
    }
    out
}

fn check_features(a: &Array2<f64>) -> Result<()> {
    if a.ncols() == 0 {
        return Err(Error::DimensionMismatch(
            "feature matrix needs at least one column".into(),
        ));
    }
    Ok(())
}

/// Rows retained by the deterministic subsample used for the median
/// heuristic: an even stride bringing the count to at most `cap`.
pub(crate) fn heuristic_subsample(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let stride = n.div_ceil(cap);
    (0..n).step_by(stride).collect()
}

/// Median of a set of values; the midpoint of the two central order
/// statistics for even counts.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN distances"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Maximum number of rows entering the median-heuristic distance scan.
pub(crate) const HEURISTIC_ROW_CAP: usize = 2000;

/// Resolves a median-heuristic bandwidth against the rows of `a`:
/// σ = median Euclidean distance over distinct row pairs. Rows are
/// subsampled with a deterministic even stride when there are more than
/// 2000 of them. Fixed specs pass through unchanged.
///
/// # Errors
/// Fewer than two rows, or all sampled rows identical (median distance 0).
pub fn resolve_bandwidth(spec: &KernelSpec, a: &Array2<f64>) -> Result<KernelSpec> {
    if spec.is_resolved() {
        return Ok(*spec);
    }
    if a.nrows() < 2 {
        return Err(Error::InsufficientData(
            "median heuristic needs at least two rows".into(),
        ));
    }
    let rows = heuristic_subsample(a.nrows(), HEURISTIC_ROW_CAP);
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (ai, &i) in rows.iter().enumerate() {
        for &j in rows.iter().skip(ai + 1) {
            let ri = a.row(i);
            let rj = a.row(j);
            let sq: f64 = ri
                .iter()
                .zip(rj.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    let sigma = median(&mut dists);
    if sigma <= 0.0 {
        return Err(Error::DegenerateData(
            "median pairwise distance is zero; all rows identical".into(),
        ));
    }
    Ok(spec.with_sigma(sigma))
}

/// Squared Euclidean distances recovered from an inner-product matrix:
/// d²(i,j) = g_ii + g_jj − 2g_ij, clamped at zero.
pub fn sq_dists_from_gram(g: &Array2<f64>) -> Result<Array2<f64>> {
    let n = g.nrows();
    if n != g.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "inner-product matrix must be square, got {}x{}",
            n,
            g.ncols()
        )));
    }
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0);
            out[(i, j)] = d2;
            out[(j, i)] = d2;
        }
    }
    Ok(out)
}

/// Median-heuristic bandwidth computed from a precomputed squared-distance
/// matrix, restricted to the given rows. Semantics match
/// [`resolve_bandwidth`]: the row list is subsampled with the same
/// deterministic stride cap, σ is the median Euclidean distance over
/// distinct retained pairs, and a zero median is an error. Used by
/// harnesses that share one distance matrix across many training subsets.
pub fn median_sigma_from_sq_dists(sq: &Array2<f64>, rows: &[usize]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData(
            "median heuristic needs at least two rows".into(),
        ));
    }
    let keep = heuristic_subsample(rows.len(), HEURISTIC_ROW_CAP);
    let mut dists = Vec::with_capacity(keep.len() * (keep.len() - 1) / 2);
    for (pos, &a) in keep.iter().enumerate() {
        for &b in keep.iter().skip(pos + 1) {
            dists.push(sq[(rows[a], rows[b])].sqrt());
        }
    }
    let sigma = median(&mut dists);
    if sigma <= 0.0 {
        return Err(Error::DegenerateData(
            "median pairwise distance is zero; all rows identical".into(),
        ));
    }
    Ok(sigma)
}

/// Double centering `H K H` with `H = I - n⁻¹11ᵀ`: subtracts row means and
/// column means and adds back the grand mean. Output rows and columns sum
/// to zero.
///
/// # Errors
/// Non-square input.
pub fn double_center(k: &Array2<f64>) -> Result<Array2<f64>> {
    let n = k.nrows();
    if n != k.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "double_center needs a square matrix, got {}x{}",
            n,
            k.ncols()
        )));
    }
    if n == 0 {
        return Ok(k.clone());
    }
    let inv = 1.0 / n as f64;
    let row_means: Vec<f64> = k.rows().into_iter().map(|r| r.sum() * inv).collect();
    let col_means: Vec<f64> = k.columns().into_iter().map(|c| c.sum() * inv).collect();
    let grand = row_means.iter().sum::<f64>() * inv;
    let mut out = k.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = k[(i, j)] - row_means[i] - col_means[j] + grand;
        }
    }
    Ok(out)
}
