//! Isometric vectorizations of the ambient matrix spaces.
//!
//! * general `k × r` matrices: column stacking (`vec`);
//! * symmetric matrices: lower triangle in column-major order with the
//!   off-diagonal entries scaled by `√2` (`vech_sqrt2`);
//! * Hermitian matrices: `vech_sqrt2` of the real part followed by `√2` times
//!   the strict lower triangle of the imaginary part (`vec_hermitian`);
//! * tuples of symmetric matrices: concatenation of the component vectors.
//!
//! In each case the Euclidean norm of the vector equals the Frobenius norm of
//! the matrix, so spatial medians of the vectors are Frobenius medians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, PfmError, Result};
use crate::scalar::{lit, tol, Real};
use crate::spectral::SYMMETRY_TOL;

/// Matrix class of an ambient point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    General,
    Symmetric,
    Hermitian,
    SymmetricTuple,
}

/// Structure plus dimensions; enough to invert a vectorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    pub structure: Structure,
    pub rows: usize,
    pub cols: usize,
    /// Number of tuple components (1 unless `SymmetricTuple`).
    pub parts: usize,
}

impl Layout {
    /// Length of the vectorized representation.
    pub fn dim(&self) -> usize {
        match self.structure {
            Structure::General => self.rows * self.cols,
            Structure::Symmetric => tri(self.rows),
            Structure::Hermitian => self.rows * self.rows,
            Structure::SymmetricTuple => self.parts * tri(self.rows),
        }
    }
}

/// A point of one of the ambient Euclidean spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum AmbientMatrix<T: Real> {
    General(DMatrix<T>),
    Symmetric(DMatrix<T>),
    Hermitian(DMatrix<Complex<T>>),
    SymmetricTuple(Vec<DMatrix<T>>),
}

#[inline]
fn tri(k: usize) -> usize {
    k * (k + 1) / 2
}

fn check_symmetric<T: Real>(a: &DMatrix<T>) -> Result<()> {
    let k = a.nrows();
    if k != a.ncols() {
        return invalid("symmetric matrix must be square");
    }
    let scale = a.amax().max(T::one());
    for j in 0..k {
        for i in j + 1..k {
            if (a[(i, j)] - a[(j, i)]).abs() > tol::<T>(SYMMETRY_TOL) * scale {
                return invalid(format!("matrix not symmetric at ({i},{j})"));
            }
        }
    }
    Ok(())
}

fn check_hermitian<T: Real>(a: &DMatrix<Complex<T>>) -> Result<()> {
    let k = a.nrows();
    if k != a.ncols() {
        return invalid("Hermitian matrix must be square");
    }
    let scale = a.iter().fold(T::one(), |m, z| m.max(z.re.abs()).max(z.im.abs()));
    let t = tol::<T>(SYMMETRY_TOL) * scale;
    for j in 0..k {
        if a[(j, j)].im.abs() > t {
            return invalid(format!("diagonal entry {j} not real"));
        }
        for i in j + 1..k {
            let d = a[(i, j)] - a[(j, i)].conj();
            if d.re.abs() > t || d.im.abs() > t {
                return invalid(format!("matrix not Hermitian at ({i},{j})"));
            }
        }
    }
    Ok(())
}

fn all_finite<T: Real>(mut it: impl Iterator<Item = T>) -> bool {
    it.all(|x| x.is_finite())
}

/// Column stacking.
pub fn vec<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec<T: Real>(v: &DVector<T>, rows: usize, cols: usize) -> Result<DMatrix<T>> {
    if v.len() != rows * cols {
        return invalid(format!("vector of length {} cannot fill {rows}x{cols}", v.len()));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Plain half-vectorization (lower triangle, column-major, no scaling).
pub fn vech<T: Real>(a: &DMatrix<T>) -> Result<DVector<T>> {
    check_symmetric(a)?;
    let k = a.nrows();
    let mut out = Vec::with_capacity(tri(k));
    for j in 0..k {
        for i in j..k {
            out.push(a[(i, j)]);
        }
    }
    Ok(DVector::from_vec(out))
}

/// Half-vectorization with off-diagonals scaled by `√2`.
pub fn vech_sqrt2<T: Real>(a: &DMatrix<T>) -> Result<DVector<T>> {
    check_symmetric(a)?;
    Ok(vech_sqrt2_unchecked(a))
}

fn vech_sqrt2_unchecked<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    let k = a.nrows();
    let s2 = lit::<T>(2.0).sqrt();
    let mut out = Vec::with_capacity(tri(k));
    for j in 0..k {
        out.push(a[(j, j)]);
        for i in j + 1..k {
            out.push(s2 * a[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Dimension `k` with `k(k+1)/2 = len`, if any.
fn tri_root(len: usize) -> Option<usize> {
    let k = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (k..=k + 1).find(|&c| tri(c) == len)
}

/// Inverse of [`vech_sqrt2`].
pub fn unvech_sqrt2<T: Real>(v: &DVector<T>) -> Result<DMatrix<T>> {
    let k = tri_root(v.len()).ok_or_else(|| {
        PfmError::InvalidInput(format!("length {} is not triangular", v.len()))
    })?;
    let s2 = lit::<T>(2.0).sqrt();
    let mut a = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        a[(j, j)] = v[idx];
        idx += 1;
        for i in j + 1..k {
            let x = v[idx] / s2;
            a[(i, j)] = x;
            a[(j, i)] = x;
            idx += 1;
        }
    }
    Ok(a)
}

/// Strict lower triangle, column-major.
pub fn vecl<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    let k = a.nrows();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for j in 0..k {
        for i in j + 1..k {
            out.push(a[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// `(vech_sqrt2(Re A), √2 vecl(Im A))`, a real vector of length `k²`.
pub fn vec_hermitian<T: Real>(a: &DMatrix<Complex<T>>) -> Result<DVector<T>> {
    check_hermitian(a)?;
    Ok(vec_hermitian_unchecked(a))
}

fn vec_hermitian_unchecked<T: Real>(a: &DMatrix<Complex<T>>) -> DVector<T> {
    let k = a.nrows();
    let s2 = lit::<T>(2.0).sqrt();
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        out.push(a[(j, j)].re);
        for i in j + 1..k {
            out.push(s2 * a[(i, j)].re);
        }
    }
    for j in 0..k {
        for i in j + 1..k {
            out.push(s2 * a[(i, j)].im);
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vec_hermitian`]; `v` must have length `k²`.
pub fn unvec_hermitian<T: Real>(v: &DVector<T>) -> Result<DMatrix<Complex<T>>> {
    let k = (v.len() as f64).sqrt().round() as usize;
    if k * k != v.len() || k == 0 {
        return invalid(format!("length {} is not a nonzero square", v.len()));
    }
    let re = unvech_sqrt2(&v.rows(0, tri(k)).into_owned())?;
    let s2 = lit::<T>(2.0).sqrt();
    let mut a = re.map(|x| Complex::new(x, T::zero()));
    let mut idx = tri(k);
    for j in 0..k {
        for i in j + 1..k {
            let y = v[idx] / s2;
            a[(i, j)].im = y;
            a[(j, i)].im = -y;
            idx += 1;
        }
    }
    Ok(a)
}

/// Duplication matrices `(D_k, D̃_k, G_k)`.
///
/// * `D_k` (`k² × k(k+1)/2`) maps `vech(A)` to `vec(A)` for symmetric `A`;
/// * `D̃_k` (`k² × k(k−1)/2`) maps `vecl(B)` to `vec(B)` for skew-symmetric `B`;
/// * `G_k` is diagonal with ones at the diagonal positions of `vech` and `√2`
///   elsewhere, so `vech_sqrt2(A) = G_k vech(A)`.
pub fn duplication_matrices<T: Real>(k: usize) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    let half = tri(k);
    let strict = k * k.saturating_sub(1) / 2;
    let s2 = lit::<T>(2.0).sqrt();
    let mut d = DMatrix::zeros(k * k, half);
    let mut dt = DMatrix::zeros(k * k, strict);
    let mut g = DMatrix::zeros(half, half);
    let mut col = 0;
    let mut lcol = 0;
    for j in 0..k {
        for i in j..k {
            d[(i + j * k, col)] = T::one();
            d[(j + i * k, col)] = T::one();
            g[(col, col)] = if i == j { T::one() } else { s2 };
            col += 1;
            if i > j {
                dt[(i + j * k, lcol)] = T::one();
                dt[(j + i * k, lcol)] = -T::one();
                lcol += 1;
            }
        }
    }
    (d, dt, g)
}

impl<T: Real> AmbientMatrix<T> {
    pub fn structure(&self) -> Structure {
        match self {
            Self::General(_) => Structure::General,
            Self::Symmetric(_) => Structure::Symmetric,
            Self::Hermitian(_) => Structure::Hermitian,
            Self::SymmetricTuple(_) => Structure::SymmetricTuple,
        }
    }

    pub fn layout(&self) -> Layout {
        let (rows, cols, parts) = match self {
            Self::General(a) | Self::Symmetric(a) => (a.nrows(), a.ncols(), 1),
            Self::Hermitian(a) => (a.nrows(), a.ncols(), 1),
            Self::SymmetricTuple(v) => {
                let k = v.first().map_or(0, |a| a.nrows());
                (k, k, v.len())
            }
        };
        Layout { structure: self.structure(), rows, cols, parts }
    }

    /// Validates the structural constraints of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::General(a) => {
                if a.is_empty() || !all_finite(a.iter().copied()) {
                    return invalid("general matrix must be nonempty and finite");
                }
                Ok(())
            }
            Self::Symmetric(a) => {
                if a.is_empty() || !all_finite(a.iter().copied()) {
                    return invalid("symmetric matrix must be nonempty and finite");
                }
                check_symmetric(a)
            }
            Self::Hermitian(a) => {
                if a.is_empty() || !all_finite(a.iter().flat_map(|z| [z.re, z.im])) {
                    return invalid("Hermitian matrix must be nonempty and finite");
                }
                check_hermitian(a)
            }
            Self::SymmetricTuple(parts) => {
                let k = match parts.first() {
                    Some(a) => a.nrows(),
                    None => return invalid("empty tuple"),
                };
                for a in parts {
                    if a.nrows() != k || a.ncols() != k || !all_finite(a.iter().copied()) {
                        return invalid("tuple components must be finite k x k matrices");
                    }
                    check_symmetric(a)?;
                }
                Ok(())
            }
        }
    }

    /// Isometric vectorization after validating the structure.
    pub fn vectorize(&self) -> Result<DVector<T>> {
        self.validate()?;
        Ok(self.vectorize_unchecked())
    }

    pub(crate) fn vectorize_unchecked(&self) -> DVector<T> {
        match self {
            Self::General(a) => vec(a),
            Self::Symmetric(a) => vech_sqrt2_unchecked(a),
            Self::Hermitian(a) => vec_hermitian_unchecked(a),
            Self::SymmetricTuple(parts) => {
                let mut out = Vec::new();
                for a in parts {
                    out.extend_from_slice(vech_sqrt2_unchecked(a).as_slice());
                }
                DVector::from_vec(out)
            }
        }
    }

    /// Inverse of [`AmbientMatrix::vectorize`] for the given layout.
    pub fn from_vector(layout: &Layout, v: &DVector<T>) -> Result<Self> {
        if v.len() != layout.dim() {
            return invalid(format!(
                "vector length {} does not match layout dimension {}",
                v.len(),
                layout.dim()
            ));
        }
        Ok(match layout.structure {
            Structure::General => Self::General(unvec(v, layout.rows, layout.cols)?),
            Structure::Symmetric => Self::Symmetric(unvech_sqrt2(v)?),
            Structure::Hermitian => Self::Hermitian(unvec_hermitian(v)?),
            Structure::SymmetricTuple => {
                let m = tri(layout.rows);
                let parts = (0..layout.parts)
                    .map(|p| unvech_sqrt2(&v.rows(p * m, m).into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                Self::SymmetricTuple(parts)
            }
        })
    }

    /// Frobenius norm (summed over tuple components).
    pub fn frobenius_norm(&self) -> T {
        match self {
            Self::General(a) | Self::Symmetric(a) => a.norm(),
            Self::Hermitian(a) => a.iter().fold(T::zero(), |s, z| s + z.re * z.re + z.im * z.im).sqrt(),
            Self::SymmetricTuple(parts) => parts.iter().fold(T::zero(), |s, a| s + a.norm_squared()).sqrt(),
        }
    }

    /// `self - other`, requiring identical layouts.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.layout() != other.layout() {
            return invalid("layout mismatch");
        }
        Ok(match (self, other) {
            (Self::General(a), Self::General(b)) => Self::General(a - b),
            (Self::Symmetric(a), Self::Symmetric(b)) => Self::Symmetric(a - b),
            (Self::Hermitian(a), Self::Hermitian(b)) => Self::Hermitian(a - b),
            (Self::SymmetricTuple(a), Self::SymmetricTuple(b)) => {
                Self::SymmetricTuple(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            _ => unreachable!("layouts already compared"),
        })
    }

    /// Entrywise scaling.
    pub fn scale(&self, c: T) -> Self {
        match self {
            Self::General(a) => Self::General(a * c),
            Self::Symmetric(a) => Self::Symmetric(a * c),
            Self::Hermitian(a) => Self::Hermitian(a.map(|z| z * c)),
            Self::SymmetricTuple(v) => Self::SymmetricTuple(v.iter().map(|a| a * c).collect()),
        }
    }
}
