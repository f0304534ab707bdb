//! Small dense complex linear-algebra toolkit on top of `nalgebra`.
//!
//! Everything here works on `DMatrix<Complex64>` / `DVector<Complex64>`.
//! Hermitian inputs are symmetrized before factorization so that rounding
//! noise in the lower triangle never leaks into eigenvalues or Cholesky
//! factors.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative cutoff on Gram-matrix eigenvalues below which a direction is
/// treated as numerically absent from a row space.
pub const PINV_CUTOFF: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `x^H A y`.
pub fn bilinear(x: &CVec, a: &CMat, y: &CVec) -> Complex64 {
    x.dotc(&(a * y))
}

/// Real part of `x^H A x`; exact for Hermitian `A` up to rounding.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    bilinear(x, a, x).re
}

/// `x y^H`.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// `diag(d) * A` without forming the diagonal matrix.
pub fn scale_rows(a: &CMat, d: &CVec) -> CMat {
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// `A * diag(d)` without forming the diagonal matrix.
pub fn scale_cols(a: &CMat, d: &CVec) -> CMat {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Elementwise `exp(j arg(x_i))`; entries with `|x_i| <= tiny` keep the
/// phase of `fallback`.
pub fn unit_modulus(x: &CVec, fallback: &CVec, tiny: f64) -> CVec {
    CVec::from_iterator(
        x.len(),
        x.iter().zip(fallback.iter()).map(|(xi, fi)| {
            if xi.norm() > tiny {
                xi / xi.norm()
            } else {
                fi / fi.norm()
            }
        }),
    )
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn hermitian_eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(a: &CMat) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    let fail = || {
        let min = hermitian_eigenvalues(a).first().copied().unwrap_or(f64::NAN);
        Error::SingularDenominator(min)
    };
    let chol = Cholesky::new(hermitian_part(a)).ok_or_else(fail)?;
    // Complex square roots never fail, so a negative pivot shows up as an
    // imaginary diagonal entry instead of a `None`.
    let l = chol.l_dirty();
    let ok = (0..a.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    if ok {
        Ok(chol)
    } else {
        Err(fail())
    }
}

/// `log2 det(A)` for Hermitian positive-definite `A`, from its Cholesky factor.
pub fn log2_det_hpd(a: &CMat) -> Result<f64> {
    let chol = cholesky(a)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc / std::f64::consts::LN_2)
}

/// Inverse of a Hermitian positive-definite matrix, re-symmetrized.
pub fn inv_hpd(a: &CMat) -> Result<CMat> {
    Ok(hermitian_part(&cholesky(a)?.inverse()))
}

/// Orthonormal basis (as columns) of the row space of `h`, using the
/// relative cutoff [`PINV_CUTOFF`] on the eigenvalues of `h^H h`.
pub fn row_space_basis(h: &CMat) -> CMat {
    let n = h.ncols();
    if h.nrows() == 0 || n == 0 {
        return CMat::zeros(n, 0);
    }
    let gram = h.adjoint() * h;
    let (values, vectors) = hermitian_eigh(&gram);
    let top = values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return CMat::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] > PINV_CUTOFF * top).collect();
    let mut basis = CMat::zeros(n, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &vectors.column(src));
    }
    basis
}

/// `I - h^H (h h^H)^+ h`, the orthogonal projector onto the null space of
/// `h`, together with the numerical rank of `h`.
pub fn nullspace_projector(h: &CMat) -> (CMat, usize) {
    let n = h.ncols();
    let basis = row_space_basis(h);
    let rank = basis.ncols();
    let proj = identity(n) - &basis * basis.adjoint();
    (hermitian_part(&proj), rank)
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.norm()
}
