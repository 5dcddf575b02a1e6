//! Thin wrappers around nalgebra's SVD and symmetric/Hermitian eigensolvers.
//!
//! Every routine returns spectra in nonincreasing order together with a
//! deterministic sign (or phase) convention: the largest-magnitude entry of
//! each left singular vector or eigenvector is made real and nonnegative, ties
//! going to the lowest index. Identical inputs therefore give bit-identical
//! factors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::{lit, tiny, tol, Real};

/// Relative gap below which a spectrum is flagged as nearly degenerate.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-8;

/// Relative asymmetry accepted before symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Thin singular value decomposition `A = U diag(s) Vᵀ` of a `k × r` matrix, `k ≥ r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T: Real> {
    pub singular_values: DVector<T>,
    /// `k × r`, orthonormal columns.
    pub left: DMatrix<T>,
    /// `r × r` orthogonal; column `j` pairs with `left` column `j`.
    pub right: DMatrix<T>,
    pub min_gap: T,
    pub near_degenerate: bool,
}

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
    pub min_gap: T,
    pub near_degenerate: bool,
}

/// Eigendecomposition of a complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<Complex<T>>,
    pub min_gap: T,
    pub near_degenerate: bool,
}

impl<T: Real> Svd<T> {
    /// `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.left.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.right.transpose()
    }
}

impl<T: Real> SymEigen<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut qd = self.vectors.clone();
        for (j, l) in self.values.iter().enumerate() {
            qd.column_mut(j).scale_mut(*l);
        }
        qd * self.vectors.transpose()
    }
}

impl<T: Real> HermEigen<T> {
    pub fn reconstruct(&self) -> DMatrix<Complex<T>> {
        let mut ud = self.vectors.clone();
        for (j, l) in self.values.iter().enumerate() {
            ud.column_mut(j).scale_mut(*l);
        }
        ud * self.vectors.adjoint()
    }
}

fn check_finite<T: Real>(it: impl IntoIterator<Item = T>) -> Result<()> {
    if it.into_iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid("matrix has non-finite entries")
    }
}

fn gap_summary<T: Real>(values: &DVector<T>) -> (T, bool) {
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut min_gap = T::max_value().unwrap_or_else(|| lit(f64::MAX));
    for w in values.as_slice().windows(2) {
        min_gap = min_gap.min(w[0] - w[1]);
    }
    if values.len() < 2 {
        return (min_gap, false);
    }
    let flagged = min_gap < tol::<T>(NEAR_DEGENERATE_GAP) * scale.max(tiny::<T>());
    (min_gap, flagged)
}

/// Index of the largest-magnitude entry, ties to the lowest index.
fn pivot_index<T: Real>(mags: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_mag = -T::one();
    for (i, m) in mags.enumerate() {
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    best
}

fn descending_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Largest entrywise asymmetry relative to the largest entry.
fn relative_asymmetry<T: Real, F: Fn(usize, usize) -> T>(k: usize, diff: F, scale: T) -> T {
    let mut worst = T::zero();
    for j in 0..k {
        for i in j + 1..k {
            worst = worst.max(diff(i, j));
        }
    }
    worst / scale.max(T::one())
}

/// Thin SVD of a `k × r` matrix with `k ≥ r ≥ 1`.
pub fn svd<T: Real>(a: &DMatrix<T>) -> Result<Svd<T>> {
    let (k, r) = a.shape();
    if r == 0 || k < r {
        return invalid(format!("svd expects k >= r >= 1, got {k}x{r}"));
    }
    check_finite(a.iter().copied())?;
    let dec = a.clone().svd(true, true);
    let u = dec.u.expect("left vectors requested");
    let vt = dec.v_t.expect("right vectors requested");
    let order = descending_order(dec.singular_values.as_slice());
    let mut left = DMatrix::zeros(k, r);
    let mut right = DMatrix::zeros(r, r);
    let mut s = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = dec.singular_values[src];
        let mut ucol = u.column(src).into_owned();
        let mut vcol = vt.row(src).transpose();
        let p = pivot_index(ucol.iter().map(|x| x.abs()));
        if ucol[p] < T::zero() {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        left.set_column(dst, &ucol);
        right.set_column(dst, &vcol);
    }
    let (min_gap, near_degenerate) = gap_summary(&s);
    Ok(Svd { singular_values: s, left, right, min_gap, near_degenerate })
}

/// Eigendecomposition of a symmetric matrix (symmetry checked to a relative `1e-10`).
pub fn sym_eig<T: Real>(a: &DMatrix<T>) -> Result<SymEigen<T>> {
    let (k, c) = a.shape();
    if k == 0 || k != c {
        return invalid(format!("sym_eig expects a nonempty square matrix, got {k}x{c}"));
    }
    check_finite(a.iter().copied())?;
    let scale = a.amax();
    let asym = relative_asymmetry(k, |i, j| (a[(i, j)] - a[(j, i)]).abs(), scale);
    if asym > tol(SYMMETRY_TOL) {
        return invalid(format!("matrix is not symmetric (relative asymmetry {asym})"));
    }
    let sym = (a + a.transpose()) * lit::<T>(0.5);
    let dec = sym.symmetric_eigen();
    let order = descending_order(dec.eigenvalues.as_slice());
    let mut values = DVector::zeros(k);
    let mut vectors = DMatrix::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = dec.eigenvalues[src];
        let mut col = dec.eigenvectors.column(src).into_owned();
        let p = pivot_index(col.iter().map(|x| x.abs()));
        if col[p] < T::zero() {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    let (min_gap, near_degenerate) = gap_summary(&values);
    Ok(SymEigen { values, vectors, min_gap, near_degenerate })
}

/// Eigendecomposition of a Hermitian matrix (Hermitian within a relative `1e-10`).
pub fn herm_eig<T: Real>(a: &DMatrix<Complex<T>>) -> Result<HermEigen<T>> {
    let (k, c) = a.shape();
    if k == 0 || k != c {
        return invalid(format!("herm_eig expects a nonempty square matrix, got {k}x{c}"));
    }
    check_finite(a.iter().flat_map(|z| [z.re, z.im]))?;
    let scale = a.iter().fold(T::zero(), |m, z| m.max(z.re.abs()).max(z.im.abs()));
    let asym = relative_asymmetry(k, |i, j| {
        let d = a[(i, j)] - a[(j, i)].conj();
        d.re.abs().max(d.im.abs())
    }, scale);
    let diag_im = (0..k).fold(T::zero(), |m, i| m.max(a[(i, i)].im.abs())) / scale.max(T::one());
    if asym.max(diag_im) > tol(SYMMETRY_TOL) {
        return invalid(format!("matrix is not Hermitian (relative asymmetry {})", asym.max(diag_im)));
    }
    let half = Complex::new(lit::<T>(0.5), T::zero());
    let herm = (a + a.adjoint()).map(|z| z * half);
    let dec = herm.symmetric_eigen();
    let order = descending_order(dec.eigenvalues.as_slice());
    let mut values = DVector::zeros(k);
    let mut vectors = DMatrix::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = dec.eigenvalues[src];
        let col = dec.eigenvectors.column(src).into_owned();
        vectors.set_column(dst, &normalize_phase(col));
    }
    let (min_gap, near_degenerate) = gap_summary(&values);
    Ok(HermEigen { values, vectors, min_gap, near_degenerate })
}

/// Rotates a complex vector so its largest-modulus entry is real and nonnegative.
pub fn normalize_phase<T: Real>(v: DVector<Complex<T>>) -> DVector<Complex<T>> {
    let p = pivot_index(v.iter().map(|z| z.re * z.re + z.im * z.im));
    let m = v[p].re.hypot(v[p].im);
    if m == T::zero() {
        return v;
    }
    let phase = Complex::new(v[p].re / m, -v[p].im / m);
    let mut out = v.map(|z| z * phase);
    out[p] = Complex::new(m, T::zero());
    out
}

/// Extends the orthonormal columns of `u` (`k × r`) to an orthonormal basis of `Rᵏ`.
///
/// The first `r` columns of the result equal `u`; the rest are the eigenvectors
/// of `I - u uᵀ` with eigenvalue one, under the usual sign convention.
pub fn orthonormal_completion<T: Real>(u: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (k, r) = u.shape();
    if r > k {
        return invalid("more columns than rows");
    }
    let mut out = DMatrix::zeros(k, k);
    out.columns_mut(0, r).copy_from(u);
    if r == k {
        return Ok(out);
    }
    let comp = DMatrix::<T>::identity(k, k) - u * u.transpose();
    let eig = sym_eig(&comp)?;
    out.columns_mut(r, k - r).copy_from(&eig.vectors.columns(0, k - r));
    Ok(out)
}

/// Complex analogue of [`orthonormal_completion`] for a single unit vector.
pub fn unitary_completion<T: Real>(u: &DVector<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let k = u.len();
    let comp = DMatrix::<Complex<T>>::identity(k, k) - u * u.adjoint();
    let eig = herm_eig(&comp)?;
    let mut out = DMatrix::zeros(k, k);
    out.set_column(0, u);
    out.columns_mut(1, k - 1).copy_from(&eig.vectors.columns(0, k - 1));
    Ok(out)
}
