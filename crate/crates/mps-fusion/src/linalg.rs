//! Small dense linear-algebra helpers shared by all modules.
//!
//! Everything here operates on `ndarray` arrays of `Complex64`. Matrices are
//! row-major throughout; `vec_r` flattens a matrix row by row, so that
//! `vec_r(X A Y) = (X (x) Y^T) vec_r(A)` with [`kron`] taking the left factor
//! as most significant.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, Eig, Inverse, SVD, UPLO};
use num_complex::Complex64;

use crate::{Error, Result};

/// Complex matrix alias used throughout the crate.
pub type CMat = Array2<Complex64>;
/// Complex vector alias used throughout the crate.
pub type CVec = Array1<Complex64>;

/// Shorthand complex constructor.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real number as a complex scalar.
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `n x n` identity matrix.
pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

/// `n x n` zero matrix.
pub fn zeros(n: usize, m: usize) -> CMat {
    Array2::zeros((n, m))
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Largest entry modulus of a matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of a vector.
pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |(ab - ba)_{ij}|`.
pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    let ab = a.dot(b);
    let ba = b.dot(a);
    max_abs(&(&ab - &ba))
}

/// Kronecker product with the left factor most significant.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Row-major flattening of a matrix into a vector.
pub fn vec_r(m: &CMat) -> CVec {
    CVec::from_iter(m.iter().cloned())
}

/// Inverse of [`vec_r`] for a `rows x cols` matrix.
pub fn unvec_r(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_shape_vec((rows, cols), v.to_vec()).expect("length mismatch in unvec_r")
}

/// Deviation of `m` from unitarity, `max |(m^dag m - 1)_{ij}|`.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let (r, cols) = m.dim();
    if r != cols {
        return f64::INFINITY;
    }
    let prod = dagger(m).dot(m);
    max_abs(&(&prod - &identity(r)))
}

/// Error unless `m` is unitary within `tol`.
pub fn require_unitary(m: &CMat, tol: f64) -> Result<()> {
    let res = unitarity_residual(m);
    if res > tol {
        return Err(Error::NotUnitary(res));
    }
    Ok(())
}

/// Hilbert-Schmidt inner product `tr(a^dag b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Scalar `c` minimizing `|b - c a|` in the Hilbert-Schmidt norm.
pub fn phase_fit(a: &CMat, b: &CMat) -> Complex64 {
    let denom = hs_inner(a, a);
    hs_inner(a, b) / denom
}

/// Eigenvalues sorted by decreasing modulus (ties broken by real part, then
/// imaginary part, for reproducibility).
pub fn eigenvalues_sorted(m: &CMat) -> Result<Vec<Complex64>> {
    let (vals, _) = m.eig()?;
    let mut out: Vec<Complex64> = vals.to_vec();
    out.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    Ok(out)
}

/// Eigen decomposition with access to eigenvectors, sorted by decreasing
/// eigenvalue modulus. Returns `(values, columns)`.
pub fn eig_sorted(m: &CMat) -> Result<(Vec<Complex64>, Vec<CVec>)> {
    let (vals, vecs) = m.eig()?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| {
        vals[j]
            .norm()
            .partial_cmp(&vals[i].norm())
            .unwrap()
            .then(vals[j].re.partial_cmp(&vals[i].re).unwrap())
            .then(vals[j].im.partial_cmp(&vals[i].im).unwrap())
    });
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = order.iter().map(|&i| vecs.column(i).to_owned()).collect();
    Ok((sorted_vals, sorted_vecs))
}

/// Thin singular value decomposition `m = u diag(s) vt`.
pub fn svd_thin(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (u, s, vt) = m.svd(true, true)?;
    Ok((u.unwrap(), s.to_vec(), vt.unwrap()))
}

/// Matrix inverse.
pub fn inverse(m: &CMat) -> Result<CMat> {
    Ok(m.inv()?)
}

/// Cholesky factor `l` with `m = l l^dag` for a positive-definite `m`.
pub fn cholesky_lower(m: &CMat) -> Result<CMat> {
    Ok(m.cholesky(UPLO::Lower)?)
}

/// Completes a set of orthonormal columns to a full unitary by deterministic
/// Gram-Schmidt against the standard basis, in basis order.
pub fn complete_unitary(cols: &[CVec], dim: usize) -> Result<CMat> {
    let mut basis: Vec<CVec> = Vec::with_capacity(dim);
    for (idx, col) in cols.iter().enumerate() {
        if col.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "column {idx} has length {}, expected {dim}",
                col.len()
            )));
        }
        basis.push(col.clone());
    }
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v: CVec = Array1::zeros(dim);
        v[k] = cr(1.0);
        for b in &basis {
            let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            v = &v - &b.mapv(|z| z * overlap);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.mapv(|z| z / cr(norm)));
        }
    }
    if basis.len() != dim {
        return Err(Error::RankDeficient);
    }
    let mut out = Array2::zeros((dim, dim));
    for (j, b) in basis.iter().enumerate() {
        for i in 0..dim {
            out[[i, j]] = b[i];
        }
    }
    require_unitary(&out, 1e-10)?;
    Ok(out)
}

/// Orthonormal basis of the span of the given vectors, by modified
/// Gram-Schmidt with a fixed drop tolerance.
pub fn orthonormalize(vecs: &[CVec], tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    for v0 in vecs {
        let mut v = v0.clone();
        for _ in 0..2 {
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v = &v - &b.mapv(|z| z * overlap);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            basis.push(v.mapv(|z| z / cr(norm)));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMat {
        ndarray::array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]
    }

    fn pauli_z() -> CMat {
        ndarray::array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]]
    }

    #[test]
    fn kron_left_factor_most_significant() {
        let k = kron(&pauli_x(), &identity(2));
        assert_abs_diff_eq!(k[[0, 2]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k[[1, 3]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k[[0, 1]].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vec_r_sandwich_identity() {
        let a = ndarray::array![[c(1.0, 2.0), c(0.5, 0.0)], [c(-1.0, 0.3), c(0.0, 1.0)]];
        let x = pauli_x();
        let y = pauli_z();
        let lhs = vec_r(&x.dot(&a).dot(&y));
        let op = kron(&x, &y.t().to_owned());
        let rhs = op.dot(&vec_r(&a));
        assert!(max_abs_vec(&(&lhs - &rhs)) < 1e-14);
    }

    #[test]
    fn unvec_round_trip() {
        let a = ndarray::array![[c(1.0, 2.0), c(0.5, 0.0)], [c(-1.0, 0.3), c(0.0, 1.0)]];
        let back = unvec_r(&vec_r(&a), 2, 2);
        assert!(max_abs(&(&a - &back)) < 1e-16);
    }

    #[test]
    fn eigenvalues_of_pauli_z() {
        let vals = eigenvalues_sorted(&pauli_z()).unwrap();
        assert_abs_diff_eq!(vals[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1].re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn completion_produces_unitary() {
        let col = CVec::from_vec(vec![cr(1.0 / 2.0_f64.sqrt()), cr(0.0), cr(0.0), cr(1.0 / 2.0_f64.sqrt())]);
        let u = complete_unitary(&[col], 4).unwrap();
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn cholesky_of_identity() {
        let l = cholesky_lower(&identity(3)).unwrap();
        assert!(max_abs(&(&l - &identity(3))) < 1e-12);
    }

    #[test]
    fn phase_fit_recovers_scalar() {
        let a = pauli_x();
        let b = a.mapv(|z| z * c(0.0, 1.0));
        let fit = phase_fit(&a, &b);
        assert_abs_diff_eq!(fit.im, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.re, 0.0, epsilon = 1e-14);
    }
}
