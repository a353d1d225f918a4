//! Dense symmetric linear algebra: eigensolver, Cholesky factorizations,
//! and triangular solves.
//!
//! The eigensolver is the classic Householder tridiagonalization followed
//! by implicit-shift QL iteration (the EISPACK `tred2`/`tql2` pair), which
//! is deterministic and has no external dependencies. Problem sizes here
//! are at most a few hundred, where this pair is entirely adequate.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix: `values` ascending,
/// `vectors` orthonormal columns in matching order.
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Iteration cap per eigenvalue in the QL sweep.
const QL_MAX_ITER: usize = 60;

/// Eigendecomposition of a symmetric `n x n` matrix.
///
/// The input is assumed symmetric; only its full storage is read (no
/// triangle convention). Eigenvalues are returned ascending with
/// eigenvectors as columns of an orthogonal matrix.
///
/// # Errors
/// [`Error::Numerical`] if the QL iteration fails to converge within the
/// per-eigenvalue iteration cap.
pub fn sym_eig(a: &Array2<f64>) -> Result<SymEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(SymEig {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v: Vec<f64> = a.iter().copied().collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;
    let vectors = Array2::from_shape_vec((n, n), v).expect("shape preserved");
    Ok(SymEig { values: d, vectors })
}

/// Householder reduction to tridiagonal form with accumulated
/// transformations (EISPACK `tred2`). `v` is the matrix in row-major
/// order; on exit it holds the orthogonal accumulation, `d` the diagonal,
/// `e` the subdiagonal (in `e[1..]`).
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let ix = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
                v[ix(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[ix(j, i)] = f;
                g = e[j] + v[ix(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[ix(k, j)] * d[k];
                    e[k] += v[ix(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[ix(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[ix(n - 1, i)] = v[ix(i, i)];
        v[ix(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[ix(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[ix(k, i + 1)] * v[ix(k, j)];
                }
                for k in 0..=i {
                    v[ix(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[ix(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
        v[ix(n - 1, j)] = 0.0;
    }
    v[ix(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on the tridiagonal form (EISPACK `tql2`),
/// with eigenvalues sorted ascending and eigenvector columns permuted to
/// match.
#[allow(unused_assignments)]
fn tql2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    let ix = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = 2.0_f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::Numerical(format!(
                        "QL iteration did not converge: eigenvalue {} of {}, {} sweeps",
                        l, n, QL_MAX_ITER
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[ix(k, i + 1)];
                        v[ix(k, i + 1)] = s * v[ix(k, i)] + c * h;
                        v[ix(k, i)] = c * v[ix(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort eigenvalues ascending, permuting eigenvector columns.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                v.swap(ix(row, i), ix(row, k));
            }
        }
    }
    Ok(())
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or
/// `None` when a non-positive pivot is met (matrix not numerically PD).
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Pivoted Cholesky factorization of a symmetric PSD matrix.
///
/// Returns `C` (n x r) with `C Cᵀ ≈ A`; the factorization stops once the
/// largest remaining diagonal falls to `rel_tol` times the largest initial
/// diagonal (or exactly zero). Pivots are chosen greedily by largest
/// remaining diagonal, ties resolved to the lowest index, so the result is
/// deterministic.
pub fn pivoted_cholesky(a: &Array2<f64>, rel_tol: f64) -> Array2<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let max0 = d.iter().cloned().fold(0.0_f64, f64::max);
    let tol = (rel_tol * max0).max(0.0);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];

    for _ in 0..n {
        let mut p = usize::MAX;
        let mut best = tol;
        for i in 0..n {
            if !used[i] && d[i] > best {
                best = d[i];
                p = i;
            }
        }
        if p == usize::MAX {
            break;
        }
        used[p] = true;
        let piv = d[p].sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            col[i] = a[(i, p)];
        }
        for prev in &cols {
            let cp = prev[p];
            for i in 0..n {
                col[i] -= prev[i] * cp;
            }
        }
        for (i, item) in col.iter_mut().enumerate() {
            *item = if used[i] && i != p { 0.0 } else { *item / piv };
        }
        col[p] = piv;
        for i in 0..n {
            d[i] -= col[i] * col[i];
        }
        d[p] = 0.0;
        cols.push(col);
    }

    let r = cols.len();
    let mut c = Array2::<f64>::zeros((n, r));
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    c
}

/// Solves `L X = B` for lower-triangular `L` by forward substitution.
pub fn solve_lower(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    debug_assert_eq!(n, b.nrows());
    let mut x = b.clone();
    for j in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᵀ X = B` for lower-triangular `L` by back substitution.
pub fn solve_lower_transpose(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    debug_assert_eq!(n, b.nrows());
    let mut x = b.clone();
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
    }
    x
}

/// Averages a nearly symmetric matrix with its transpose in place.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// Copies the upper triangle onto the lower triangle in place, making the
/// matrix exactly symmetric.
pub fn mirror_upper(a: &mut Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)];
        }
    }
}

/// Flips each column's sign so its largest-magnitude entry is positive
/// (ties resolved to the earliest index; all-zero columns untouched).
pub fn sign_fix_columns(v: &mut Array2<f64>) {
    for mut col in v.columns_mut() {
        let mut lead = 0;
        let mut best = 0.0_f64;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
}

/// Largest absolute asymmetry relative to the largest absolute entry;
/// zero for an exactly symmetric (or zero) matrix.
pub fn relative_asymmetry(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut max_abs = 0.0_f64;
    let mut max_gap = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            max_abs = max_abs.max(a[(i, j)].abs()).max(a[(j, i)].abs());
            max_gap = max_gap.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if max_abs == 0.0 {
        0.0
    } else {
        max_gap / max_abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    fn random_spd(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut a = s.t().dot(&s);
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        a
    }

    #[test]
    fn sym_eig_diagonal_matrix() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        assert!(eig.vectors[(1, 0)].abs() > 0.999);
        assert!(eig.vectors[(0, 1)].abs() > 0.999);
    }

    #[test]
    fn sym_eig_known_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        let inv = 1.0 / 2.0_f64.sqrt();
        let v0 = (eig.vectors[(0, 0)].abs() - inv).abs();
        let v1 = (eig.vectors[(1, 1)].abs() - inv).abs();
        assert!(v0 < 1e-12 && v1 < 1e-12);
    }

    #[test]
    fn sym_eig_residual_and_orthogonality() {
        for seed in 0..5 {
            let a = random_symmetric(24, seed);
            let eig = sym_eig(&a).unwrap();
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            for j in 0..24 {
                let v = eig.vectors.column(j);
                let av = a.dot(&v);
                let mut res = 0.0_f64;
                for i in 0..24 {
                    res += (av[i] - eig.values[j] * v[i]).powi(2);
                }
                assert!(
                    res.sqrt() <= 1e-10 * norm.max(1.0),
                    "residual too large for eigenpair {}",
                    j
                );
            }
            let vtv = eig.vectors.t().dot(&eig.vectors);
            for i in 0..24 {
                for j in 0..24 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[(i, j)] - want).abs() < 1e-10);
                }
            }
            for j in 1..24 {
                assert!(eig.values[j] >= eig.values[j - 1]);
            }
        }
    }

    #[test]
    fn sym_eig_is_deterministic() {
        let a = random_symmetric(16, 9);
        let e1 = sym_eig(&a).unwrap();
        let e2 = sym_eig(&a).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = random_spd(12, 3);
        let l = cholesky(&a).expect("SPD input must factor");
        let back = l.dot(&l.t());
        for i in 0..12 {
            for j in 0..12 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn pivoted_cholesky_low_rank_exact() {
        // Rank-2 PSD matrix built from two columns.
        let mut b = Array2::<f64>::zeros((8, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..8 {
            for j in 0..2 {
                b[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let a = b.dot(&b.t());
        let c = pivoted_cholesky(&a, 1e-12);
        assert_eq!(c.ncols(), 2, "numerical rank must be detected");
        let back = c.dot(&c.t());
        for i in 0..8 {
            for j in 0..8 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pivoted_cholesky_full_rank() {
        let a = random_spd(10, 11);
        let c = pivoted_cholesky(&a, 1e-14);
        assert_eq!(c.ncols(), 10);
        let back = c.dot(&c.t());
        for i in 0..10 {
            for j in 0..10 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn triangular_solves_invert() {
        let a = random_spd(9, 7);
        let l = cholesky(&a).unwrap();
        let b = random_symmetric(9, 8);
        let y = solve_lower(&l, &b);
        let back = l.dot(&y);
        for i in 0..9 {
            for j in 0..9 {
                assert!((back[(i, j)] - b[(i, j)]).abs() < 1e-9);
            }
        }
        let z = solve_lower_transpose(&l, &b);
        let back_t = l.t().dot(&z);
        for i in 0..9 {
            for j in 0..9 {
                assert!((back_t[(i, j)] - b[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn asymmetry_measures() {
        let mut a = array![[1.0, 2.0], [2.0 + 1e-6, 1.0]];
        assert!(relative_asymmetry(&a) > 1e-7);
        symmetrize(&mut a);
        assert_eq!(relative_asymmetry(&a), 0.0);
    }
}
