//! Manifold point types, nearest-point projections and the projected Frobenius median.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, PfmError, Result};
use crate::median::{weighted_frobenius_median, MedianOptions, MedianResult};
use crate::proj_stiefel::{self, ProjStiefelPoint};
use crate::scalar::{lit, tiny, tol, Real};
use crate::spectral::{herm_eig, svd, sym_eig};
use crate::vectorize::AmbientMatrix;

/// Orthonormality tolerance for constructing points.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Smallest singular value (relative to the largest) accepted by the Stiefel projection.
pub const STIEFEL_RANK_TOL: f64 = 1e-12;
/// Eigengap (relative to the spectral radius) required by the Grassmann and CP projections.
pub const EIGENGAP_TOL: f64 = 1e-10;

/// Which manifold, with dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Stiefel { k: usize, r: usize },
    Grassmann { k: usize, r: usize },
    ComplexProjective { k: usize },
    ProjectiveStiefel { k: usize, r: usize },
}

impl ManifoldKind {
    /// Real dimension of the manifold.
    pub fn dimension(&self) -> usize {
        match *self {
            Self::Stiefel { k, r } => k * r - r * (r + 1) / 2,
            Self::Grassmann { k, r } => r * (k - r),
            Self::ComplexProjective { k } => 2 * (k - 1),
            Self::ProjectiveStiefel { k, r } => k * r - r * (r + 1) / 2,
        }
    }
}

/// `k × r` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint<T: Real>(DMatrix<T>);

/// Rank-`r` orthogonal projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint<T: Real> {
    matrix: DMatrix<T>,
    rank: usize,
}

/// Rank-one Hermitian projector `z z*` together with a unit representative `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpPoint<T: Real> {
    matrix: DMatrix<Complex<T>>,
    vector: DVector<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldPoint<T: Real> {
    Stiefel(StiefelPoint<T>),
    Grassmann(GrassmannPoint<T>),
    ComplexProjective(CpPoint<T>),
    ProjectiveStiefel(ProjStiefelPoint<T>),
}

impl<T: Real> StiefelPoint<T> {
    pub fn new(x: DMatrix<T>) -> Result<Self> {
        let (k, r) = x.shape();
        if r == 0 || k < r {
            return invalid(format!("Stiefel point needs k >= r >= 1, got {k}x{r}"));
        }
        let err = (x.transpose() * &x - DMatrix::identity(r, r)).amax();
        if !(err <= tol::<T>(MEMBERSHIP_TOL)) {
            return invalid(format!("columns not orthonormal (error {err})"));
        }
        Ok(Self(x))
    }

    pub(crate) fn new_unchecked(x: DMatrix<T>) -> Self {
        Self(x)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.0
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }
}

impl<T: Real> GrassmannPoint<T> {
    /// Checks symmetry, idempotence and trace `r`.
    pub fn new(p: DMatrix<T>, rank: usize) -> Result<Self> {
        let k = p.nrows();
        if k != p.ncols() || rank == 0 || rank > k {
            return invalid("Grassmann point must be square with 1 <= rank <= k");
        }
        let t = tol::<T>(MEMBERSHIP_TOL);
        let sym = (&p - p.transpose()).amax();
        let idem = (&p * &p - &p).amax();
        let tr = (p.trace() - lit::<T>(rank as f64)).abs();
        if !(sym <= t && idem <= t && tr <= t * lit(k as f64)) {
            return invalid("matrix is not a rank-r orthogonal projector");
        }
        Ok(Self { matrix: p, rank })
    }

    /// `Q Qᵀ` for orthonormal `Q` (`k × r`).
    pub fn from_basis(q: &DMatrix<T>) -> Result<Self> {
        StiefelPoint::new(q.clone())?;
        let p = q * q.transpose();
        let p = (&p + p.transpose()) * lit::<T>(0.5);
        Ok(Self { matrix: p, rank: q.ncols() })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl<T: Real> CpPoint<T> {
    /// `z z*` for a unit vector `z`; the stored representative is phase-normalized.
    pub fn from_vector(z: &DVector<Complex<T>>) -> Result<Self> {
        if z.len() < 2 {
            return invalid("complex projective points need k >= 2");
        }
        let n = z.iter().fold(T::zero(), |s, c| s + c.re * c.re + c.im * c.im).sqrt();
        if !((n - T::one()).abs() <= tol::<T>(MEMBERSHIP_TOL)) {
            return invalid(format!("vector not unit (norm {n})"));
        }
        let v = crate::spectral::normalize_phase(z.clone());
        Ok(Self { matrix: &v * v.adjoint(), vector: v })
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    /// Unit representative with its largest-modulus entry real and positive.
    pub fn vector(&self) -> &DVector<Complex<T>> {
        &self.vector
    }

    pub fn k(&self) -> usize {
        self.vector.len()
    }
}

impl<T: Real> ManifoldPoint<T> {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            Self::Stiefel(x) => ManifoldKind::Stiefel { k: x.k(), r: x.r() },
            Self::Grassmann(p) => ManifoldKind::Grassmann { k: p.matrix.nrows(), r: p.rank },
            Self::ComplexProjective(z) => ManifoldKind::ComplexProjective { k: z.k() },
            Self::ProjectiveStiefel(x) => {
                let m = x.representative();
                ManifoldKind::ProjectiveStiefel { k: m.k(), r: m.r() }
            }
        }
    }

    /// Image under the embedding into the ambient Euclidean space.
    pub fn embed(&self) -> AmbientMatrix<T> {
        match self {
            Self::Stiefel(x) => AmbientMatrix::General(x.0.clone()),
            Self::Grassmann(p) => AmbientMatrix::Symmetric(p.matrix.clone()),
            Self::ComplexProjective(z) => AmbientMatrix::Hermitian(z.matrix.clone()),
            Self::ProjectiveStiefel(x) => AmbientMatrix::SymmetricTuple(proj_stiefel::embed_frame(x)),
        }
    }
}

/// Polar factor `U Vᵀ` of a full-column-rank `k × r` matrix.
pub fn project_stiefel<T: Real>(a: &DMatrix<T>) -> Result<StiefelPoint<T>> {
    let d = svd(a)?;
    let r = a.ncols();
    let top = d.singular_values[0];
    let bottom = d.singular_values[r - 1];
    if !(top > T::zero()) || bottom <= tol::<T>(STIEFEL_RANK_TOL) * top {
        return Err(PfmError::DegenerateProjection(format!(
            "rank deficient: smallest singular value {bottom} vs largest {top}"
        )));
    }
    Ok(StiefelPoint(&d.left * d.right.transpose()))
}

/// Orthogonal projector onto the top-`r` eigenspace of a symmetric matrix.
pub fn project_grassmann<T: Real>(a: &DMatrix<T>, r: usize) -> Result<GrassmannPoint<T>> {
    let k = a.nrows();
    if r == 0 || r > k {
        return invalid(format!("rank {r} outside 1..={k}"));
    }
    let e = sym_eig(a)?;
    if r < k {
        let gap = e.values[r - 1] - e.values[r];
        let scale = e.values.amax().max(tiny::<T>());
        if gap <= tol::<T>(EIGENGAP_TOL) * scale {
            return Err(PfmError::DegenerateProjection(format!(
                "eigengap {gap} between positions {r} and {}",
                r + 1
            )));
        }
    }
    let q = e.vectors.columns(0, r);
    let p = &q * q.transpose();
    Ok(GrassmannPoint { matrix: (&p + p.transpose()) * lit::<T>(0.5), rank: r })
}

/// Projector `u₁ u₁*` onto the leading eigenvector of a Hermitian matrix.
pub fn project_cp<T: Real>(a: &DMatrix<Complex<T>>) -> Result<CpPoint<T>> {
    let e = herm_eig(a)?;
    if e.values.len() < 2 {
        return invalid("complex projective projection needs k >= 2");
    }
    let gap = e.values[0] - e.values[1];
    let scale = e.values.amax().max(tiny::<T>());
    if gap <= tol::<T>(EIGENGAP_TOL) * scale {
        return Err(PfmError::DegenerateProjection(format!("leading eigengap {gap}")));
    }
    let u = e.vectors.column(0).into_owned();
    Ok(CpPoint { matrix: &u * u.adjoint(), vector: u })
}

/// Projects an ambient matrix onto the manifold of the given kind.
pub fn project<T: Real>(a: &AmbientMatrix<T>, kind: ManifoldKind) -> Result<ManifoldPoint<T>> {
    match (kind, a) {
        (ManifoldKind::Stiefel { .. }, AmbientMatrix::General(m)) => Ok(ManifoldPoint::Stiefel(project_stiefel(m)?)),
        (ManifoldKind::Grassmann { r, .. }, AmbientMatrix::Symmetric(m)) => {
            Ok(ManifoldPoint::Grassmann(project_grassmann(m, r)?))
        }
        (ManifoldKind::ComplexProjective { .. }, AmbientMatrix::Hermitian(m)) => {
            Ok(ManifoldPoint::ComplexProjective(project_cp(m)?))
        }
        (ManifoldKind::ProjectiveStiefel { .. }, AmbientMatrix::SymmetricTuple(parts)) => {
            let (frame, _) = proj_stiefel::project_to_rank1_tuple(parts)?;
            Ok(ManifoldPoint::ProjectiveStiefel(frame))
        }
        _ => invalid("ambient structure does not match manifold kind"),
    }
}

/// Projected Frobenius median and the ambient median it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmResult<T: Real> {
    pub estimate: ManifoldPoint<T>,
    pub ambient: MedianResult<AmbientMatrix<T>, T>,
}

/// Projected Frobenius median of a homogeneous sample.
pub fn pfm<T: Real>(data: &[ManifoldPoint<T>], opts: &MedianOptions<T>) -> Result<PfmResult<T>> {
    pfm_weighted(data, None, opts)
}

/// Weighted projected Frobenius median.
pub fn pfm_weighted<T: Real>(
    data: &[ManifoldPoint<T>],
    weights: Option<&[T]>,
    opts: &MedianOptions<T>,
) -> Result<PfmResult<T>> {
    let Some(first) = data.first() else {
        return invalid("empty sample");
    };
    let kind = first.kind();
    if data.iter().any(|p| p.kind() != kind) {
        return invalid("sample mixes manifolds or dimensions");
    }
    let ambient: Vec<_> = data.iter().map(ManifoldPoint::embed).collect();
    let med = weighted_frobenius_median(&ambient, weights, opts)?;
    if !med.converged {
        return Err(PfmError::NotConverged {
            iterations: med.iterations,
            gap: med.gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    let estimate = project(&med.median, kind)?;
    Ok(PfmResult { estimate, ambient: med })
}

/// Frobenius distance between the embedded images of two points.
pub fn extrinsic_distance<T: Real>(a: &ManifoldPoint<T>, b: &ManifoldPoint<T>) -> Result<T> {
    if a.kind() != b.kind() {
        return invalid("points live on different manifolds");
    }
    Ok(a.embed().sub(&b.embed())?.frobenius_norm())
}

/// `arccos |z₀* ẑ|` for unit vectors.
pub fn angular_error<T: Real>(z_hat: &DVector<Complex<T>>, z0: &DVector<Complex<T>>) -> Result<T> {
    if z_hat.len() != z0.len() {
        return invalid("dimension mismatch");
    }
    let n0 = z0.iter().fold(T::zero(), |s, c| s + c.re * c.re + c.im * c.im).sqrt();
    let nh = z_hat.iter().fold(T::zero(), |s, c| s + c.re * c.re + c.im * c.im).sqrt();
    let ip = z0.dotc(z_hat);
    let scale = Complex::new(T::one() / (n0 * n0), T::zero());
    let residual = z_hat - z0.map(|c| c * ip * scale);
    let r = residual.iter().fold(T::zero(), |s, c| s + c.re * c.re + c.im * c.im).sqrt();
    Ok((r / nh).atan2(ip.re.hypot(ip.im) / (n0 * nh)))
}

/// `arccos |aᵀ b|`, the angle between two axes.
pub fn axial_angle<T: Real>(a: &DVector<T>, b: &DVector<T>) -> T {
    let (na, nb) = (a.norm(), b.norm());
    let d = a.dot(b);
    let residual = b - a * (d / (na * na));
    (residual.norm() / nb).atan2(d.abs() / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stiefel_projection_of_diagonal() {
        let a = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let x = project_stiefel(&a).unwrap();
        let expect = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((x.matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn stiefel_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        assert!(matches!(project_stiefel(&a), Err(PfmError::DegenerateProjection(_))));
    }

    #[test]
    fn grassmann_projection() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let p = project_grassmann(&a, 2).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0]));
        assert!((p.matrix() - expect).amax() < 1e-14);
        let flat = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        assert!(project_grassmann(&flat, 1).is_err());
    }

    #[test]
    fn cp_projection_and_phase() {
        let z = DVector::from_vec(vec![Complex::new(0.0, 0.6), Complex::new(0.8, 0.0), Complex::new(0.0, 0.0)]);
        let p = CpPoint::from_vector(&z).unwrap();
        let two = AmbientMatrix::Hermitian(p.matrix().map(|c| c * 2.0));
        let proj = project(&two, ManifoldKind::ComplexProjective { k: 3 }).unwrap();
        let ManifoldPoint::ComplexProjective(q) = proj else { panic!() };
        assert!(angular_error(q.vector(), &z).unwrap() < 1e-7);
        assert!(q.vector()[1].im == 0.0 && q.vector()[1].re > 0.0);
        let degenerate = DMatrix::<Complex<f64>>::identity(3, 3);
        assert!(project_cp(&degenerate).is_err());
    }

    #[test]
    fn pfm_of_identical_points() {
        let x = StiefelPoint::new(DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0])).unwrap();
        let data = vec![ManifoldPoint::Stiefel(x.clone()); 5];
        let r = pfm(&data, &MedianOptions::default()).unwrap();
        let d = extrinsic_distance(&r.estimate, &ManifoldPoint::Stiefel(x)).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let a = ManifoldPoint::Stiefel(StiefelPoint::new(DMatrix::<f64>::identity(3, 1)).unwrap());
        let b = ManifoldPoint::Stiefel(StiefelPoint::new(DMatrix::<f64>::identity(4, 1)).unwrap());
        assert!(pfm(&[a.clone(), b.clone()], &MedianOptions::default()).is_err());
        assert!(extrinsic_distance(&a, &b).is_err());
    }

    #[test]
    fn dimensions() {
        assert_eq!(ManifoldKind::Stiefel { k: 3, r: 3 }.dimension(), 3);
        assert_eq!(ManifoldKind::Grassmann { k: 5, r: 2 }.dimension(), 6);
        assert_eq!(ManifoldKind::ComplexProjective { k: 3 }.dimension(), 4);
    }
}
