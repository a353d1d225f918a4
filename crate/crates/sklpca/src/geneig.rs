//! Symmetric generalized eigensolver for pencils (Q, K) with K positive
//! semidefinite.
//!
//! Solves Q v = λ (K + εI) v by Cholesky reduction: factor K + εI = LLᵀ,
//! eigendecompose the symmetric matrix L⁻¹QL⁻ᵀ, and back-transform the
//! eigenvectors by L⁻ᵀ. The returned vectors satisfy Vᵀ(K+εI)V = I. The
//! ridge ε = 1e-10·tr(K)/n guards against the rank deficiency that is
//! routine here (a linear-kernel Gram matrix with fewer features than
//! rows has rank at most p); it escalates a hundredfold, at most three
//! times, if the factorization still fails, and the value actually used
//! is reported in the result.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, relative_asymmetry};

/// Tolerance on relative asymmetry of the inputs before they are rejected.
const ASYMMETRY_TOL: f64 = 1e-8;

/// Base ridge scale: ε = `RIDGE_SCALE` · tr(K)/n.
const RIDGE_SCALE: f64 = 1e-10;

/// Factor applied to ε after each Cholesky failure.
const RIDGE_ESCALATION: f64 = 100.0;

/// Number of escalations attempted after the initial ε fails.
const MAX_ESCALATIONS: usize = 3;

/// Relative eigenvalue threshold below which the pencil is treated as
/// numerically rank deficient.
const RANK_REL_TOL: f64 = 1e-8;

/// Top eigenpairs of the pencil (Q, K + εI).
#[derive(Clone, Debug)]
pub struct GenEigResult {
    /// Eigenvalues in descending order, ties kept in solver order.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors, one column per eigenvalue, normalized so that
    /// Vᵀ(K+εI)V = I and the largest-magnitude entry of each column is
    /// positive.
    pub vectors: Array2<f64>,
    /// The ridge ε that was actually added to K.
    pub regularization_used: f64,
    /// Set when more pairs were requested than the pencil's numerical
    /// rank supports; the surplus vectors carry eigenvalues at ε scale
    /// and their directions are arbitrary within the null space.
    pub rank_warning: bool,
}

/// Solves Q v = λ (K + εI) v for the `top_q` largest eigenvalues.
///
/// # Errors
/// Mismatched or non-square shapes and `top_q > n` are input errors, as
/// is relative asymmetry beyond 1e-8 in either matrix. A Cholesky
/// failure that survives ridge escalation, or a non-converging QL sweep,
/// is a numerical error.
pub fn generalized_eig(
    q_mat: &Array2<f64>,
    k_mat: &Array2<f64>,
    top_q: usize,
) -> Result<GenEigResult> {
    let n = k_mat.nrows();
    if k_mat.ncols() != n || q_mat.nrows() != n || q_mat.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "pencil needs square matrices of one size; Q is {}x{}, K is {}x{}",
            q_mat.nrows(),
            q_mat.ncols(),
            n,
            k_mat.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InsufficientData("empty pencil".into()));
    }
    if top_q > n {
        return Err(Error::InvalidConfig(format!(
            "top_q = {} exceeds pencil size n = {}",
            top_q, n
        )));
    }
    let asym_q = relative_asymmetry(q_mat);
    if asym_q > ASYMMETRY_TOL {
        return Err(Error::InvalidConfig(format!(
            "Q is not symmetric (relative asymmetry {:.3e})",
            asym_q
        )));
    }
    let asym_k = relative_asymmetry(k_mat);
    if asym_k > ASYMMETRY_TOL {
        return Err(Error::InvalidConfig(format!(
            "K is not symmetric (relative asymmetry {:.3e})",
            asym_k
        )));
    }

    let mut q_sym = q_mat.clone();
    linalg::symmetrize(&mut q_sym);
    let mut k_sym = k_mat.clone();
    linalg::symmetrize(&mut k_sym);

    let trace: f64 = k_sym.diag().sum();
    // An identically zero K (a PSD matrix with zero trace) has no scale of
    // its own, so the proportional ridge degenerates; an absolute floor
    // keeps the pencil solvable and returns all-zero eigenvalues under a
    // rank warning instead of failing.
    let eps0 = if trace > 0.0 {
        RIDGE_SCALE * trace / n as f64
    } else {
        RIDGE_SCALE
    };
    let mut eps = eps0;
    let mut chol = None;
    for attempt in 0..=MAX_ESCALATIONS {
        if attempt > 0 {
            eps *= RIDGE_ESCALATION;
        }
        let mut regularized = k_sym.clone();
        for i in 0..n {
            regularized[(i, i)] += eps;
        }
        if let Some(l) = linalg::cholesky(&regularized) {
            chol = Some(l);
            break;
        }
    }
    let l = chol.ok_or_else(|| {
        Error::Numerical(format!(
            "Cholesky of K + εI failed up to ε = {:.3e} (tr(K) = {:.3e}, n = {}); \
             K appears indefinite beyond ridge repair",
            eps, trace, n
        ))
    })?;

    // A = L⁻¹ Q L⁻ᵀ, formed as L⁻¹ (L⁻¹Q)ᵀ, which equals A because Q is
    // symmetric; averaged afterwards to keep tred2's input exactly
    // symmetric.
    let b = linalg::solve_lower(&l, &q_sym);
    let mut a = linalg::solve_lower(&l, &b.t().to_owned());
    linalg::symmetrize(&mut a);

    let eig = linalg::sym_eig(&a)?;

    let threshold = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        * RANK_REL_TOL;
    let rank = eig.values.iter().filter(|&&v| v > threshold).count();
    let rank_warning = top_q > rank;

    // sym_eig is ascending; take the trailing columns in reverse.
    let mut u = Array2::<f64>::zeros((n, top_q));
    let mut eigenvalues = Vec::with_capacity(top_q);
    for j in 0..top_q {
        let src = n - 1 - j;
        eigenvalues.push(eig.values[src]);
        u.column_mut(j).assign(&eig.vectors.column(src));
    }

    let mut vectors = linalg::solve_lower_transpose(&l, &u);
    linalg::sign_fix_columns(&mut vectors);

    Ok(GenEigResult {
        eigenvalues,
        vectors,
        regularization_used: eps,
        rank_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let mut spd = b.dot(&b.t());
        for i in 0..n {
            spd[(i, i)] += 0.5;
        }
        spd
    }

    #[test]
    fn diagonal_pencil_standard_problem() {
        let q = array![[2.0, 0.0], [0.0, 1.0]];
        let k = Array2::eye(2);
        let r = generalized_eig(&q, &k, 2).unwrap();
        assert!((r.eigenvalues[0] - 2.0).abs() < 1e-8);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-8);
        assert!((r.vectors[(0, 0)] - 1.0).abs() < 1e-6);
        assert!(r.vectors[(1, 0)].abs() < 1e-6);
        assert!((r.vectors[(1, 1)] - 1.0).abs() < 1e-6);
        assert!(r.vectors[(0, 1)].abs() < 1e-6);
        assert!(!r.rank_warning);
    }

    #[test]
    fn q_equal_k_gives_unit_eigenvalues() {
        let k = random_spd(6, 11);
        let r = generalized_eig(&k, &k, 6).unwrap();
        for &v in &r.eigenvalues {
            assert!((v - 1.0).abs() < 1e-8, "eigenvalue {} should be 1", v);
        }
    }

    #[test]
    fn hand_solved_two_by_two() {
        let q = array![[2.0, 0.0], [0.0, 0.0]];
        let k = array![[4.0, 0.0], [0.0, 1.0]];
        let r = generalized_eig(&q, &k, 1).unwrap();
        assert!((r.eigenvalues[0] - 0.5).abs() < 1e-8);
        assert!((r.vectors[(0, 0)] - 0.5).abs() < 1e-6);
        assert!(r.vectors[(1, 0)].abs() < 1e-6);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let q = array![[1.0, 2.0], [0.0, 1.0]];
        let k = Array2::eye(2);
        assert!(generalized_eig(&q, &k, 1).is_err());
        assert!(generalized_eig(&k, &q, 1).is_err());
    }

    #[test]
    fn rejects_top_q_beyond_n() {
        let k = Array2::eye(2);
        assert!(generalized_eig(&k, &k, 3).is_err());
    }

    #[test]
    fn top_q_zero_returns_empty() {
        let k = Array2::eye(2);
        let r = generalized_eig(&k, &k, 0).unwrap();
        assert!(r.eigenvalues.is_empty());
        assert_eq!(r.vectors.dim(), (2, 0));
    }

    #[test]
    fn k_orthonormality_and_q_diagonalization() {
        let n = 8;
        let q = random_spd(n, 3);
        let k = random_spd(n, 4);
        let r = generalized_eig(&q, &k, n).unwrap();
        let mut k_reg = k.clone();
        for i in 0..n {
            k_reg[(i, i)] += r.regularization_used;
        }
        let gram = r.vectors.t().dot(&k_reg).dot(&r.vectors);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - want).abs() < 1e-8,
                    "Vᵀ(K+εI)V deviates at ({}, {}): {}",
                    i,
                    j,
                    gram[(i, j)]
                );
            }
        }
        let vqv = r.vectors.t().dot(&q).dot(&r.vectors);
        let scale = vqv.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(
                        vqv[(i, j)].abs() <= 1e-6 * scale,
                        "VᵀQV off-diagonal ({}, {}) = {}",
                        i,
                        j,
                        vqv[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn residual_invariant_holds() {
        let n = 7;
        let q = random_spd(n, 21);
        let k = random_spd(n, 22);
        let r = generalized_eig(&q, &k, n).unwrap();
        let qf = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let kf = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut k_reg = k.clone();
        for i in 0..n {
            k_reg[(i, i)] += r.regularization_used;
        }
        for (j, &lambda) in r.eigenvalues.iter().enumerate() {
            let v = r.vectors.column(j).to_owned();
            let resid = q.dot(&v) - lambda * k_reg.dot(&v);
            let norm = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                norm <= 1e-6 * (qf + lambda.abs() * kf),
                "residual {} too large for eigenvalue {}",
                norm,
                lambda
            );
        }
    }

    #[test]
    fn rank_deficient_pencil_sets_warning() {
        // Q has rank 1; asking for two pairs must warn, not fail.
        let x = array![[1.0], [2.0]];
        let q = x.dot(&x.t());
        let k = Array2::eye(2);
        let r = generalized_eig(&q, &k, 2).unwrap();
        assert!(r.rank_warning);
        assert!((r.eigenvalues[0] - 5.0).abs() < 1e-8);
        assert!(r.eigenvalues[1].abs() < 1e-8);
        let full = generalized_eig(&q, &k, 1).unwrap();
        assert!(!full.rank_warning);
    }

    #[test]
    fn singular_k_succeeds_with_base_ridge() {
        let x = array![[1.0], [2.0], [-1.0]];
        let k = x.dot(&x.t());
        let q = k.dot(&k);
        let n = 3;
        let r = generalized_eig(&q, &k, n).unwrap();
        let expected = 1e-10 * k.diag().sum() / n as f64;
        assert_eq!(r.regularization_used, expected);
    }

    #[test]
    fn ridge_escalates_on_slightly_indefinite_k() {
        let k = array![[1.0, 0.0], [0.0, -1e-8]];
        let q = Array2::eye(2);
        let r = generalized_eig(&q, &k, 1).unwrap();
        let eps0 = 1e-10 * k.diag().sum() / 2.0;
        assert!((r.regularization_used / eps0 - 1e4).abs() < 1e-6);
    }

    #[test]
    fn hopelessly_indefinite_k_is_numerical_error() {
        let k = array![[1.0, 0.0], [0.0, -1.0]];
        let q = Array2::eye(2);
        let err = generalized_eig(&q, &k, 1).unwrap_err();
        assert!(err.is_numerical(), "got {:?}", err);
    }

    #[test]
    fn deterministic_bits() {
        let q = random_spd(9, 5);
        let k = random_spd(9, 6);
        let a = generalized_eig(&q, &k, 4).unwrap();
        let b = generalized_eig(&q, &k, 4).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.vectors, b.vectors);
        assert_eq!(a.regularization_used, b.regularization_used);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let q = random_spd(6, 77);
        let k = random_spd(6, 78);
        let r = generalized_eig(&q, &k, 6).unwrap();
        for col in r.vectors.columns() {
            let mut lead = 0;
            let mut best = 0.0_f64;
            for (i, &v) in col.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    lead = i;
                }
            }
            assert!(col[lead] >= 0.0);
        }
    }
}
