//! Frames of axes: the projective Stiefel manifold `PV_{k,r}`.
//!
//! A frame `X = [x₁ … x_r]` is identified with every `X diag(ε)`, `ε ∈ {±1}ʳ`.
//! It is embedded as the tuple `(x₁x₁ᵀ, …, x_r x_rᵀ)`, the tuple median is
//! taken in the product space, each component is reduced to its leading
//! eigenvector, and the resulting axes are orthonormalized by the polar
//! factor. The polar factor commutes with column sign flips, so the `2ʳ`
//! sign choices give one coset of representatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, PfmError, Result};
use crate::manifolds::{axial_angle, project_stiefel, StiefelPoint, EIGENGAP_TOL};
use crate::median::{weighted_frobenius_median, MedianOptions, MedianResult};
use crate::scalar::{tiny, tol, Real};
use crate::spectral::{svd, sym_eig};
use crate::vectorize::AmbientMatrix;

/// Smallest singular value of the leading-eigenvector matrix accepted as independent.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

/// A frame of axes, stored through one representative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjStiefelPoint<T: Real> {
    representative: StiefelPoint<T>,
    canonicalized: bool,
}

impl<T: Real> ProjStiefelPoint<T> {
    /// Validates orthonormality and stores the canonical representative.
    pub fn new(x: DMatrix<T>) -> Result<Self> {
        let st = StiefelPoint::new(x)?;
        Ok(Self::from_stiefel(&st))
    }

    /// Canonical representative of the class of `x`.
    pub fn from_stiefel(x: &StiefelPoint<T>) -> Self {
        Self {
            representative: StiefelPoint::new_unchecked(canonicalize(x.matrix())),
            canonicalized: true,
        }
    }

    /// Keeps `x` as given, without sign normalization.
    pub fn from_representative(x: StiefelPoint<T>) -> Self {
        Self { representative: x, canonicalized: false }
    }

    pub fn representative(&self) -> &StiefelPoint<T> {
        &self.representative
    }

    pub fn canonicalized(&self) -> bool {
        self.canonicalized
    }

    /// Axis `j` of the representative.
    pub fn axis(&self, j: usize) -> DVector<T> {
        self.representative.matrix().column(j).into_owned()
    }
}

/// Flips column signs so each column's largest-magnitude entry is nonnegative.
pub fn canonicalize<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mut p = 0;
        let mut best = -T::one();
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                p = i;
            }
        }
        if col[p] < T::zero() {
            col.neg_mut();
        }
    }
    out
}

/// `(x₁x₁ᵀ, …, x_r x_rᵀ)`; identical for every sign choice.
pub fn embed_frame<T: Real>(x: &ProjStiefelPoint<T>) -> Vec<DMatrix<T>> {
    let m = x.representative.matrix();
    (0..m.ncols())
        .map(|j| {
            let c = m.column(j);
            &c * c.transpose()
        })
        .collect()
}

/// Leading eigenvectors extracted from a tuple of symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingAxes<T: Real> {
    /// `k × r`, column `j` the leading unit eigenvector of component `j`.
    pub axes: DMatrix<T>,
    /// Smallest singular value of `axes`.
    pub min_singular_value: T,
}

/// Orthonormal frame closest to the leading eigenvectors of each tuple component.
pub fn project_to_rank1_tuple<T: Real>(parts: &[DMatrix<T>]) -> Result<(ProjStiefelPoint<T>, LeadingAxes<T>)> {
    let leaders = leading_axes(parts)?;
    let frame = project_stiefel(&leaders.axes)?;
    Ok((ProjStiefelPoint::from_stiefel(&frame), leaders))
}

fn leading_axes<T: Real>(parts: &[DMatrix<T>]) -> Result<LeadingAxes<T>> {
    let Some(first) = parts.first() else {
        return invalid("empty tuple");
    };
    let k = first.nrows();
    let r = parts.len();
    if r > k {
        return invalid(format!("{r} axes cannot be independent in dimension {k}"));
    }
    let mut axes = DMatrix::zeros(k, r);
    for (j, b) in parts.iter().enumerate() {
        let e = sym_eig(b)?;
        let gap = e.values[0] - e.values.get(1).copied().unwrap_or(T::min_value().unwrap_or(-T::one()));
        let scale = e.values.amax().max(tiny::<T>());
        if k > 1 && gap <= tol::<T>(EIGENGAP_TOL) * scale {
            return Err(PfmError::DegenerateProjection(format!(
                "component {j} has leading eigengap {gap}"
            )));
        }
        axes.set_column(j, &e.vectors.column(0));
    }
    let min_sv = svd(&axes)?.singular_values[r - 1];
    if min_sv <= tol::<T>(INDEPENDENCE_TOL) {
        return Err(PfmError::DegenerateFrame(min_sv.to_f64().unwrap_or(0.0)));
    }
    Ok(LeadingAxes { axes, min_singular_value: min_sv })
}

/// All `2ʳ` sign vectors, in binary order (bit `j` set means axis `j` flipped).
pub fn sign_vectors(r: usize) -> Vec<Vec<i8>> {
    (0..1usize << r)
        .map(|mask| (0..r).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect())
        .collect()
}

/// `Σⱼ sⱼ tⱼ(ε)ᵀ`, where `Q = Σⱼ ρⱼ sⱼ tⱼᵀ` and `tⱼ(ε)` multiplies the `l`-th
/// coordinate of `tⱼ` by `ε_l`.
pub fn project_frame<T: Real>(q: &DMatrix<T>, signs: &[i8]) -> Result<StiefelPoint<T>> {
    let r = q.ncols();
    if signs.len() != r || signs.iter().any(|s| *s != 1 && *s != -1) {
        return invalid("sign vector must contain r entries equal to +1 or -1");
    }
    let d = svd(q)?;
    let top = d.singular_values[0];
    if d.singular_values[r - 1] <= tol::<T>(crate::manifolds::STIEFEL_RANK_TOL) * top {
        return Err(PfmError::DegenerateProjection("rank deficient axes".into()));
    }
    let mut twisted = d.right.clone();
    for (l, s) in signs.iter().enumerate() {
        if *s < 0 {
            twisted.row_mut(l).neg_mut();
        }
    }
    Ok(StiefelPoint::new_unchecked(&d.left * twisted.transpose()))
}

/// Projected Frobenius median of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjStiefelPfm<T: Real> {
    pub estimate: ProjStiefelPoint<T>,
    /// The `2ʳ` representatives `π(Q_ε)`, in [`sign_vectors`] order.
    pub coset: Vec<StiefelPoint<T>>,
    pub leading: LeadingAxes<T>,
    pub ambient: MedianResult<Vec<DMatrix<T>>, T>,
    /// `max_ε ‖π(Q_ε) − π(Q diag ε)‖_F`; zero up to rounding.
    pub coset_identity_residual: T,
}

/// PFM of a sample of frames, optionally weighted.
pub fn pfm_proj_stiefel<T: Real>(
    data: &[ProjStiefelPoint<T>],
    weights: Option<&[T]>,
    opts: &MedianOptions<T>,
) -> Result<ProjStiefelPfm<T>> {
    let Some(first) = data.first() else {
        return invalid("empty sample");
    };
    let shape = first.representative.matrix().shape();
    if data.iter().any(|x| x.representative.matrix().shape() != shape) {
        return invalid("frames have differing dimensions");
    }
    let amb: Vec<_> = data.iter().map(|x| AmbientMatrix::SymmetricTuple(embed_frame(x))).collect();
    let med = weighted_frobenius_median(&amb, weights, opts)?;
    if !med.converged {
        return Err(PfmError::NotConverged {
            iterations: med.iterations,
            gap: med.gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    let med = med.map(|m| match m {
        AmbientMatrix::SymmetricTuple(parts) => parts,
        _ => unreachable!("tuple layout preserved"),
    });
    let leading = leading_axes(&med.median)?;
    let base = project_stiefel(&leading.axes)?;
    let mut coset = Vec::new();
    let mut residual = T::zero();
    for eps in sign_vectors(shape.1) {
        let via_formula = project_frame(&leading.axes, &eps)?;
        let mut flipped = leading.axes.clone();
        for (j, s) in eps.iter().enumerate() {
            if *s < 0 {
                flipped.column_mut(j).neg_mut();
            }
        }
        let direct = project_stiefel(&flipped)?;
        residual = residual.max((via_formula.matrix() - direct.matrix()).norm());
        coset.push(via_formula);
    }
    if residual > tol::<T>(1e-10) {
        log::warn!("coset identity residual {residual} exceeds 1e-10");
    }
    Ok(ProjStiefelPfm {
        estimate: ProjStiefelPoint::from_stiefel(&base),
        coset,
        leading,
        ambient: med,
        coset_identity_residual: residual,
    })
}

/// Per-axis angles `arccos |x̂ⱼᵀ xⱼ|` between two frames.
pub fn frame_angular_errors<T: Real>(est: &ProjStiefelPoint<T>, truth: &ProjStiefelPoint<T>) -> Result<Vec<T>> {
    let a = est.representative.matrix();
    let b = truth.representative.matrix();
    if a.shape() != b.shape() {
        return invalid("frames have differing dimensions");
    }
    Ok((0..a.ncols())
        .map(|j| axial_angle(&a.column(j).into_owned(), &b.column(j).into_owned()))
        .collect())
}

/// Embedded distance `(Σⱼ ‖xⱼxⱼᵀ − yⱼyⱼᵀ‖²)^{1/2}`.
pub fn frame_distance<T: Real>(a: &ProjStiefelPoint<T>, b: &ProjStiefelPoint<T>) -> T {
    embed_frame(a)
        .iter()
        .zip(embed_frame(b))
        .fold(T::zero(), |s, (x, y)| s + (x - y).norm_squared())
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(theta: f64) -> DMatrix<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn embedding_ignores_signs() {
        let x = rot(0.4);
        let mut y = x.clone();
        y.column_mut(1).neg_mut();
        let a = embed_frame(&ProjStiefelPoint::from_representative(StiefelPoint::new(x).unwrap()));
        let b = embed_frame(&ProjStiefelPoint::from_representative(StiefelPoint::new(y).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn coset_has_all_sign_patterns() {
        let data: Vec<_> = [0.1, 0.2, -0.05, 0.15]
            .iter()
            .map(|t| ProjStiefelPoint::new(rot(*t)).unwrap())
            .collect();
        let res = pfm_proj_stiefel(&data, None, &MedianOptions::default()).unwrap();
        assert_eq!(res.coset.len(), 8);
        assert!(res.coset_identity_residual < 1e-12);
        let base = res.coset[0].matrix();
        for (eps, member) in sign_vectors(3).iter().zip(&res.coset) {
            let expect = DMatrix::from_fn(3, 3, |i, j| base[(i, j)] * f64::from(eps[j]));
            assert!((member.matrix() - expect).amax() < 1e-12);
        }
    }

    #[test]
    fn dependent_axes_fail() {
        let e = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = &e * e.transpose();
        let res = project_to_rank1_tuple(&[b.clone(), b]);
        assert!(matches!(res, Err(PfmError::DegenerateFrame(_))));
    }

    #[test]
    fn rejects_bad_signs() {
        assert!(project_frame(&rot(0.1), &[1, 0, 1]).is_err());
        assert!(project_frame(&rot(0.1), &[1, 1]).is_err());
    }

    #[test]
    fn canonical_signs() {
        let mut x = rot(2.0);
        x.column_mut(0).neg_mut();
        let c = canonicalize(&x);
        for col in c.column_iter() {
            let m = col.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(m >= 0.0);
        }
    }
}
