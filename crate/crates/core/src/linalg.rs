//! Small dense complex linear-algebra helpers shared by the beamforming,
//! oracle and conic modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Re(wᴴ M w) for Hermitian `m`.
pub fn quad_form(m: &CMatrix, w: &CVector) -> f64 {
    w.dotc(&(m * w)).re
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order.
pub fn hermitian_eig_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (values, _) = hermitian_eig_desc(m);
    values.last().copied().unwrap_or(0.0)
}

/// Largest eigenvalue and its unit eigenvector of a Hermitian matrix.
pub fn principal_eig(m: &CMatrix) -> (f64, CVector) {
    let (values, vectors) = hermitian_eig_desc(m);
    (values[0], vectors.column(0).into_owned())
}

pub fn cholesky(m: &CMatrix, what: &str) -> Result<Cholesky<C64, Dyn>> {
    let fail = || Error::Numeric(format!("{what} is not positive definite"));
    let chol = Cholesky::new(hermitian_part(m)).ok_or_else(fail)?;
    // Complex square roots accept negative pivots, so check the factor.
    let l = chol.l_dirty();
    if (0..l.nrows()).all(|i| l[(i, i)].re > 0.0 && l[(i, i)].im == 0.0 && l[(i, i)].re.is_finite()) {
        Ok(chol)
    } else {
        Err(fail())
    }
}

/// Principal generalized eigenpair of the pencil (`a`, `b`) with `b ≻ 0`,
/// i.e. the largest λ with `a v = λ b v`.
///
/// Reduced to a standard Hermitian problem through the Cholesky factor of
/// `b`; the returned vector is normalized to unit Euclidean norm.
pub fn generalized_principal(a: &CMatrix, b: &CMatrix) -> Result<(f64, CVector)> {
    let chol = cholesky(b, "interference-plus-noise correlation")?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let (value, y) = principal_eig(&reduced);
    let v = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let norm = v.norm();
    if !(norm.is_finite() && norm > 0.0) || !value.is_finite() {
        return Err(Error::Numeric("generalized eigensolver did not converge".into()));
    }
    Ok((value, v / C64::new(norm, 0.0)))
}

/// Rotates `w` so that its first entry of non-negligible magnitude is real
/// and positive.
pub fn canonicalize_phase(w: &mut CVector) {
    let peak = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    if let Some(first) = w.iter().find(|z| z.norm() > 1e-9 * peak).copied() {
        let rot = first.conj() / first.norm();
        w.apply(|z| *z *= rot);
    }
}

/// Exchange (flip) operator applied to a vector.
pub fn flip(w: &CVector) -> CVector {
    let n = w.len();
    CVector::from_fn(n, |i, _| w[n - 1 - i])
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn real_diag(m: &CMatrix) -> DVector<f64> {
    DVector::from_fn(m.nrows(), |i, _| m[(i, i)].re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        assert!(cholesky(&m, "m").is_err());
        assert!(cholesky(&CMatrix::identity(2, 2), "m").is_ok());
    }

    #[test]
    fn generalized_matches_inverse_product() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (lambda, v) = generalized_principal(&a, &b).unwrap();
        let lhs = &a * &v;
        let rhs = (&b * &v) * c(lambda, 0.0);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn canonical_phase_is_real_positive() {
        let mut w = CVector::from_vec(vec![c(0.0, 0.0), c(0.0, -2.0), c(1.0, 1.0)]);
        canonicalize_phase(&mut w);
        assert!(w[1].im.abs() < 1e-15 && w[1].re > 0.0);
        assert!((w[1].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn eig_sorted_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(5.0, 0.0), c(3.0, 0.0)]));
        let (vals, _) = hermitian_eig_desc(&m);
        assert_eq!(vals, vec![5.0, 3.0, 1.0]);
    }
}
