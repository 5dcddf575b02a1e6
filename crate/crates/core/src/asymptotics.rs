//! Influence functions and limiting covariances of projected Frobenius medians.
//!
//! With `u(x) = vec(x − A)/‖x − A‖` the ambient median `A` solves
//! `E u = 0`; its influence function is `H⁻¹ u(z)` and its limiting
//! covariance `V = H⁻¹ J H⁻¹`, where `H = E[(I − u uᵀ)/‖x − A‖]` and
//! `J = E[u uᵀ]`. The manifold versions follow by pushing these through the
//! differential of the projection at `A`, expressed in the eigen/singular
//! basis of `A`:
//!
//! * Stiefel, `A = Σ ρ_a s_a t_aᵀ`:
//!   `dπ(E) = Σ_{a<b≤r} (M_ab − M_ba)/(ρ_a+ρ_b) (s_a t_bᵀ − s_b t_aᵀ) + Σ_{a≤r<j} M_ja/ρ_a s_j t_aᵀ`
//!   with `M = Sᵀ E T`;
//! * Grassmann: `dπ(E) = Σ_{a≤r<b} M_ab/(λ_a−λ_b) (q_a q_bᵀ + q_b q_aᵀ)`, `M = Qᵀ E Q`;
//! * complex projective: `dπ(E) = Σ_{b>1} (c_b u_b u₁* + c̄_b u₁ u_b*)`,
//!   `c_b = u_b* E u₁/(λ₁−λ_b)`.
//!
//! Tangent coordinates are taken against orthonormal bases of the tangent
//! space, so the covariance matrices here describe `√n` times those
//! coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, PfmError, Result};
use crate::manifolds::ManifoldKind;
use crate::scalar::{lit, tol, Real};
use crate::spectral::{herm_eig, orthonormal_completion, svd, sym_eig};
use crate::vectorize::{duplication_matrices, AmbientMatrix, Layout, Structure};

/// Condition number above which `H` is inverted by pseudo-inverse.
pub const CONDITION_WARN: f64 = 1e12;

/// Plug-in estimates of `H` and `J` in the vectorized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HjPair<T: Real> {
    pub h: DMatrix<T>,
    pub j: DMatrix<T>,
}

/// `H⁻¹` together with its conditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct HInverse<T: Real> {
    pub inverse: DMatrix<T>,
    pub condition: T,
    /// A pseudo-inverse was used because the condition number exceeded `1e12`.
    pub pseudo: bool,
}

/// `H` and `J` evaluated at `a0` under the (weighted) empirical distribution.
pub fn empirical_hj<T: Real>(
    data: &[AmbientMatrix<T>],
    weights: Option<&[T]>,
    a0: &AmbientMatrix<T>,
) -> Result<HjPair<T>> {
    if data.is_empty() {
        return invalid("empty sample");
    }
    let layout = a0.layout();
    let center = a0.vectorize()?;
    let p = center.len();
    let n = data.len();
    let uniform = T::one() / lit::<T>(n as f64);
    if let Some(w) = weights {
        if w.len() != n {
            return invalid("one weight per point required");
        }
    }
    let mut h = DMatrix::zeros(p, p);
    let mut j = DMatrix::zeros(p, p);
    for (i, x) in data.iter().enumerate() {
        if x.layout() != layout {
            return invalid("layout mismatch between data and center");
        }
        let w = weights.map_or(uniform, |w| w[i]);
        let d = x.vectorize()? - &center;
        let r = d.norm();
        if r == T::zero() {
            return Err(PfmError::AnchorResidual(i));
        }
        let u = d / r;
        let uu = &u * u.transpose();
        j += &uu * w;
        h += (DMatrix::identity(p, p) - uu) * (w / r);
    }
    Ok(HjPair { h, j })
}

/// Inverts `H`, switching to a pseudo-inverse when the condition number exceeds `1e12`.
pub fn invert_h<T: Real>(h: &DMatrix<T>) -> Result<HInverse<T>> {
    let e = sym_eig(h)?;
    let p = e.values.len();
    let top = e.values[0];
    let bottom = e.values[p - 1];
    let condition = if bottom > T::zero() { top / bottom } else { T::max_value().unwrap_or(top) };
    let cond64 = condition.to_f64().unwrap_or(f64::INFINITY);
    if !(top > T::zero()) || bottom <= top * T::default_epsilon() {
        return Err(PfmError::SingularH(cond64));
    }
    let pseudo = cond64 > CONDITION_WARN;
    if pseudo {
        log::warn!("H has condition number {cond64:e}; using a pseudo-inverse");
    }
    let cut = if pseudo { top * lit::<T>(1.0 / CONDITION_WARN) } else { T::zero() };
    let mut inv = DMatrix::zeros(p, p);
    for (idx, l) in e.values.iter().enumerate() {
        if *l > cut {
            let q = e.vectors.column(idx);
            inv += &q * q.transpose() / *l;
        }
    }
    Ok(HInverse { inverse: inv, condition, pseudo })
}

/// `V = H⁻¹ J H⁻¹`.
pub fn ambient_covariance<T: Real>(hj: &HjPair<T>, h_inv: &HInverse<T>) -> DMatrix<T> {
    let v = &h_inv.inverse * &hj.j * &h_inv.inverse;
    (&v + v.transpose()) * lit::<T>(0.5)
}

/// Ambient influence function `H⁻¹ u(z)` at `z`.
pub fn influence_ambient<T: Real>(
    z: &AmbientMatrix<T>,
    a0: &AmbientMatrix<T>,
    h_inv: &HInverse<T>,
) -> Result<AmbientMatrix<T>> {
    let d = z.sub(a0)?.vectorize()?;
    let r = d.norm();
    if r == T::zero() {
        return invalid("influence function undefined at the median itself");
    }
    AmbientMatrix::from_vector(&a0.layout(), &(&h_inv.inverse * (d / r)))
}

/// Spectral data of an ambient point needed to differentiate the projection.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFrame<T: Real> {
    Stiefel {
        /// `k × k`: left singular vectors completed to an orthonormal basis.
        s: DMatrix<T>,
        /// `r × r` right singular vectors.
        t: DMatrix<T>,
        rho: DVector<T>,
    },
    Grassmann {
        q: DMatrix<T>,
        lambda: DVector<T>,
        r: usize,
    },
    ComplexProjective {
        u: DMatrix<Complex<T>>,
        lambda: DVector<T>,
    },
}

impl<T: Real> SpectralFrame<T> {
    /// Decomposes `a0` and checks the gap conditions of the projection.
    pub fn at(a0: &AmbientMatrix<T>, kind: ManifoldKind) -> Result<Self> {
        match (kind, a0) {
            (ManifoldKind::Stiefel { r, .. }, AmbientMatrix::General(a)) if a.ncols() == r => {
                let d = svd(a)?;
                if d.singular_values[r - 1] <= T::zero() {
                    return Err(PfmError::DegenerateSpectrum("smallest singular value is zero".into()));
                }
                Ok(Self::Stiefel { s: orthonormal_completion(&d.left)?, t: d.right, rho: d.singular_values })
            }
            (ManifoldKind::Grassmann { r, .. }, AmbientMatrix::Symmetric(a)) => {
                let e = sym_eig(a)?;
                let k = e.values.len();
                if r == 0 || r >= k {
                    return invalid("Grassmann rank must satisfy 1 <= r < k");
                }
                if e.values[r - 1] - e.values[r] <= tol::<T>(1e-10) * e.values.amax() {
                    return Err(PfmError::DegenerateSpectrum("eigengap at position r vanishes".into()));
                }
                Ok(Self::Grassmann { q: e.vectors, lambda: e.values, r })
            }
            (ManifoldKind::ComplexProjective { .. }, AmbientMatrix::Hermitian(a)) => {
                let e = herm_eig(a)?;
                if e.values[0] - e.values[1] <= tol::<T>(1e-10) * e.values.amax() {
                    return Err(PfmError::DegenerateSpectrum("leading eigengap vanishes".into()));
                }
                Ok(Self::ComplexProjective { u: e.vectors, lambda: e.values })
            }
            _ => invalid("ambient structure does not match manifold kind"),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            Self::Stiefel { s, t, .. } => ManifoldKind::Stiefel { k: s.nrows(), r: t.nrows() },
            Self::Grassmann { q, r, .. } => ManifoldKind::Grassmann { k: q.nrows(), r: *r },
            Self::ComplexProjective { u, .. } => ManifoldKind::ComplexProjective { k: u.nrows() },
        }
    }
}

/// Differential of the projection at the frame's base point, applied to `e`.
pub fn projection_differential<T: Real>(frame: &SpectralFrame<T>, e: &AmbientMatrix<T>) -> Result<AmbientMatrix<T>> {
    match (frame, e) {
        (SpectralFrame::Stiefel { s, t, rho }, AmbientMatrix::General(e)) => {
            let (k, r) = (s.nrows(), t.nrows());
            if e.shape() != (k, r) {
                return invalid("direction has wrong shape");
            }
            let m = s.transpose() * e * t;
            let mut out = DMatrix::zeros(k, r);
            for a in 0..r {
                for b in a + 1..r {
                    let c = (m[(a, b)] - m[(b, a)]) / (rho[a] + rho[b]);
                    out += (s.column(a) * t.column(b).transpose() - s.column(b) * t.column(a).transpose()) * c;
                }
                for j in r..k {
                    let c = m[(j, a)] / rho[a];
                    out += s.column(j) * t.column(a).transpose() * c;
                }
            }
            Ok(AmbientMatrix::General(out))
        }
        (SpectralFrame::Grassmann { q, lambda, r }, AmbientMatrix::Symmetric(e)) => {
            let k = q.nrows();
            if e.shape() != (k, k) {
                return invalid("direction has wrong shape");
            }
            let m = q.transpose() * e * q;
            let mut out = DMatrix::zeros(k, k);
            for a in 0..*r {
                for b in *r..k {
                    let c = m[(a, b)] / (lambda[a] - lambda[b]);
                    let qa = q.column(a);
                    let qb = q.column(b);
                    out += (&qa * qb.transpose() + &qb * qa.transpose()) * c;
                }
            }
            Ok(AmbientMatrix::Symmetric(out))
        }
        (SpectralFrame::ComplexProjective { u, lambda }, AmbientMatrix::Hermitian(e)) => {
            let k = u.nrows();
            if e.shape() != (k, k) {
                return invalid("direction has wrong shape");
            }
            let u1 = u.column(0);
            let eu1 = e * u1;
            let mut out = DMatrix::zeros(k, k);
            for b in 1..k {
                let ub = u.column(b);
                let c = ub.dotc(&eu1) / Complex::new(lambda[0] - lambda[b], T::zero());
                let x = &ub * u1.adjoint() * c;
                out += &x + x.adjoint();
            }
            Ok(AmbientMatrix::Hermitian(out))
        }
        _ => invalid("direction structure does not match frame"),
    }
}

/// Manifold influence function: the projection differential applied to the ambient IF.
pub fn influence_manifold<T: Real>(if_ambient: &AmbientMatrix<T>, frame: &SpectralFrame<T>) -> Result<AmbientMatrix<T>> {
    projection_differential(frame, if_ambient)
}

/// Identifies a tangent basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentLabel {
    /// `(t_b⊗s_a − t_a⊗s_b)/√2`, `a < b ≤ r`.
    StiefelSkew { a: usize, b: usize },
    /// `t_a⊗s_b`, `a ≤ r < b`.
    StiefelNormal { a: usize, b: usize },
    /// `(q_a⊗q_b + q_b⊗q_a)/√2`, `a ≤ r < b`.
    Grassmann { a: usize, b: usize },
    /// `(ū₁⊗u_b + ū_b⊗u₁)/√2` with its companion `i(ū₁⊗u_b − ū_b⊗u₁)/√2`.
    ComplexProjective { b: usize },
}

/// Orthonormal basis of the tangent space at the projected point.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentBasis<T: Real> {
    /// Columns live in `vec` coordinates (`kr` rows for Stiefel, `k²` for Grassmann).
    Real { columns: DMatrix<T>, labels: Vec<TangentLabel> },
    /// `k² × (k−1)` pair whose real span is the tangent space of `CP^{k−1}`.
    Complex {
        primary: DMatrix<Complex<T>>,
        companion: DMatrix<Complex<T>>,
        labels: Vec<TangentLabel>,
    },
}

/// Coordinates of an ambient difference against a tangent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoordinates<T: Real> {
    /// Real coordinates; for `CP` the real parts followed by the imaginary parts.
    pub real: DVector<T>,
    /// Complex coordinates `y_b` for `CP`.
    pub complex: Option<DVector<Complex<T>>>,
}

fn kron_vec<T: Real>(x: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(x.as_slice())
}

/// Tangent basis at the point obtained by projecting the frame's base.
pub fn tangent_basis<T: Real>(frame: &SpectralFrame<T>) -> TangentBasis<T> {
    let inv_s2 = T::one() / lit::<T>(2.0).sqrt();
    match frame {
        SpectralFrame::Stiefel { s, t, .. } => {
            let (k, r) = (s.nrows(), t.nrows());
            let mut cols = Vec::new();
            let mut labels = Vec::new();
            for a in 0..r {
                for b in a + 1..r {
                    let x = (s.column(a) * t.column(b).transpose() - s.column(b) * t.column(a).transpose()) * inv_s2;
                    cols.push(kron_vec(&x));
                    labels.push(TangentLabel::StiefelSkew { a, b });
                }
            }
            for a in 0..r {
                for b in r..k {
                    cols.push(kron_vec(&(s.column(b) * t.column(a).transpose())));
                    labels.push(TangentLabel::StiefelNormal { a, b });
                }
            }
            TangentBasis::Real { columns: columns_or_empty(cols, k * r), labels }
        }
        SpectralFrame::Grassmann { q, r, .. } => {
            let k = q.nrows();
            let mut cols = Vec::new();
            let mut labels = Vec::new();
            for a in 0..*r {
                for b in *r..k {
                    let x = (q.column(a) * q.column(b).transpose() + q.column(b) * q.column(a).transpose()) * inv_s2;
                    cols.push(kron_vec(&x));
                    labels.push(TangentLabel::Grassmann { a, b });
                }
            }
            TangentBasis::Real { columns: columns_or_empty(cols, k * k), labels }
        }
        SpectralFrame::ComplexProjective { u, .. } => {
            let k = u.nrows();
            let c = Complex::new(inv_s2, T::zero());
            let ic = Complex::new(T::zero(), inv_s2);
            let mut primary = DMatrix::zeros(k * k, k - 1);
            let mut companion = DMatrix::zeros(k * k, k - 1);
            let u1 = u.column(0);
            for b in 1..k {
                let ub = u.column(b);
                let x = &ub * u1.adjoint();
                let e = (&x + x.adjoint()).map(|z| z * c);
                let f = (&x - x.adjoint()).map(|z| z * ic);
                primary.set_column(b - 1, &DVector::from_column_slice(e.as_slice()));
                companion.set_column(b - 1, &DVector::from_column_slice(f.as_slice()));
            }
            TangentBasis::Complex {
                primary,
                companion,
                labels: (1..k).map(|b| TangentLabel::ComplexProjective { b }).collect(),
            }
        }
    }
}

fn columns_or_empty<T: Real>(cols: Vec<DVector<T>>, rows: usize) -> DMatrix<T> {
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

impl<T: Real> TangentBasis<T> {
    /// Real dimension of the tangent space.
    pub fn dim(&self) -> usize {
        match self {
            Self::Real { columns, .. } => columns.ncols(),
            Self::Complex { primary, .. } => 2 * primary.ncols(),
        }
    }

    pub fn labels(&self) -> &[TangentLabel] {
        match self {
            Self::Real { labels, .. } | Self::Complex { labels, .. } => labels,
        }
    }

    /// Coordinates of `delta` (typically `M̂ − M₀`) against this basis.
    pub fn coordinates(&self, delta: &AmbientMatrix<T>) -> Result<TangentCoordinates<T>> {
        match (self, delta) {
            (Self::Real { columns, .. }, AmbientMatrix::General(d) | AmbientMatrix::Symmetric(d)) => {
                let v = kron_vec(d);
                if v.len() != columns.nrows() {
                    return invalid("difference has wrong dimension");
                }
                Ok(TangentCoordinates { real: columns.transpose() * v, complex: None })
            }
            (Self::Complex { primary, companion, .. }, AmbientMatrix::Hermitian(d)) => {
                let v = DVector::from_column_slice(d.as_slice());
                if v.len() != primary.nrows() {
                    return invalid("difference has wrong dimension");
                }
                let m = primary.ncols();
                let re = primary.adjoint() * &v;
                let im = companion.adjoint() * &v;
                let y = DVector::from_fn(m, |b, _| Complex::new(re[b].re, im[b].re));
                let mut real = DVector::zeros(2 * m);
                for b in 0..m {
                    real[b] = y[b].re;
                    real[m + b] = y[b].im;
                }
                Ok(TangentCoordinates { real, complex: Some(y) })
            }
            _ => invalid("difference structure does not match tangent basis"),
        }
    }
}

/// Limiting covariance of `√n` times the tangent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T: Real> {
    /// Covariance of the real coordinates.
    pub real: DMatrix<T>,
    /// Hermitian covariance `E[y y*]` of the complex coordinates (`CP` only).
    pub hermitian: Option<DMatrix<Complex<T>>>,
    /// Negative eigenvalues were raised to zero.
    pub floored: bool,
    pub rank_deficient: bool,
}

/// Closed-form limiting covariance built from `V = H⁻¹ J H⁻¹`.
pub fn clt_covariance<T: Real>(
    frame: &SpectralFrame<T>,
    v: &DMatrix<T>,
    basis: &TangentBasis<T>,
) -> Result<CovarianceEstimate<T>> {
    let (real, hermitian) = match (frame, basis) {
        (SpectralFrame::Stiefel { s, t, rho }, TangentBasis::Real { columns, labels }) => {
            let (k, r) = (s.nrows(), t.nrows());
            if v.shape() != (k * r, k * r) {
                return invalid("V has wrong dimension for this frame");
            }
            let weights: Vec<T> = labels
                .iter()
                .map(|l| match *l {
                    TangentLabel::StiefelSkew { a, b } => lit::<T>(2.0) / (rho[a] + rho[b]),
                    TangentLabel::StiefelNormal { a, .. } => T::one() / rho[a],
                    _ => T::zero(),
                })
                .collect();
            (weighted_sandwich(columns, v, &weights), None)
        }
        (SpectralFrame::Grassmann { q, lambda, .. }, TangentBasis::Real { columns, labels }) => {
            let k = q.nrows();
            if v.nrows() != k * (k + 1) / 2 {
                return invalid("V has wrong dimension for this frame");
            }
            let (d, _, g) = duplication_matrices::<T>(k);
            let mut dg = d;
            for c in 0..dg.ncols() {
                let gi = g[(c, c)];
                dg.column_mut(c).unscale_mut(gi);
            }
            let full = &dg * v * dg.transpose();
            let weights: Vec<T> = labels
                .iter()
                .map(|l| match *l {
                    TangentLabel::Grassmann { a, b } => T::one() / (lambda[a] - lambda[b]),
                    _ => T::zero(),
                })
                .collect();
            (weighted_sandwich(columns, &full, &weights), None)
        }
        (SpectralFrame::ComplexProjective { u, lambda }, TangentBasis::Complex { .. }) => {
            let k = u.nrows();
            if v.nrows() != k * k {
                return invalid("V has wrong dimension for this frame");
            }
            let (d, dt, g) = duplication_matrices::<T>(k);
            let half = k * (k + 1) / 2;
            let strict = k * k - half;
            let s2 = lit::<T>(2.0).sqrt();
            // (vec Re A, vec Im A) = diag{D G⁻¹, D̃/√2} vec_H(A)
            let mut p = DMatrix::zeros(2 * k * k, k * k);
            for c in 0..half {
                let col = d.column(c) / g[(c, c)];
                p.view_mut((0, c), (k * k, 1)).copy_from(&col);
            }
            for c in 0..strict {
                let col = dt.column(c) / s2;
                p.view_mut((k * k, half + c), (k * k, 1)).copy_from(&col);
            }
            let m = k - 1;
            let mut l = DMatrix::zeros(2 * m, 2 * k * k);
            let u1 = u.column(0);
            for b in 1..k {
                let x = u.column(b) * u1.adjoint();
                let w = s2 / (lambda[0] - lambda[b]);
                for (idx, z) in x.iter().enumerate() {
                    l[(b - 1, idx)] = z.re * w;
                    l[(b - 1, k * k + idx)] = z.im * w;
                    l[(m + b - 1, idx)] = -z.im * w;
                    l[(m + b - 1, k * k + idx)] = z.re * w;
                }
            }
            let lp = l * p;
            let c = &lp * v * lp.transpose();
            let c = (&c + c.transpose()) * lit::<T>(0.5);
            let herm = DMatrix::from_fn(m, m, |i, j| {
                Complex::new(c[(i, j)] + c[(m + i, m + j)], c[(m + i, j)] - c[(i, m + j)])
            });
            (c, Some(herm))
        }
        _ => return invalid("tangent basis does not match frame"),
    };
    let (real, floored, rank_deficient) = floor_psd(real)?;
    Ok(CovarianceEstimate { real, hermitian, floored, rank_deficient })
}

fn weighted_sandwich<T: Real>(xi: &DMatrix<T>, v: &DMatrix<T>, w: &[T]) -> DMatrix<T> {
    let mut xw = xi.clone();
    for (c, wc) in w.iter().enumerate() {
        xw.column_mut(c).scale_mut(*wc);
    }
    let c = xw.transpose() * v * &xw;
    (&c + c.transpose()) * lit::<T>(0.5)
}

fn floor_psd<T: Real>(c: DMatrix<T>) -> Result<(DMatrix<T>, bool, bool)> {
    if c.is_empty() {
        return Ok((c, false, false));
    }
    let e = sym_eig(&c)?;
    let top = e.values[0].max(T::zero());
    let bottom = e.values[e.values.len() - 1];
    let rank_deficient = bottom <= tol::<T>(1e-12) * top;
    if bottom >= T::zero() {
        return Ok((c, false, rank_deficient));
    }
    if -bottom > tol::<T>(1e-10) * top {
        log::warn!("covariance had eigenvalue {bottom}; floored at zero");
    }
    let mut out = DMatrix::zeros(c.nrows(), c.ncols());
    for (i, l) in e.values.iter().enumerate() {
        if *l > T::zero() {
            let q = e.vectors.column(i);
            out += &q * q.transpose() * *l;
        }
    }
    Ok((out, true, rank_deficient))
}

/// `n yᵀ C⁻¹ y`, the asymptotically `χ²` statistic for tangent coordinates `y`.
pub fn wald_statistic<T: Real>(y: &DVector<T>, cov: &DMatrix<T>, n: usize) -> Result<T> {
    let inv = cov
        .clone()
        .try_inverse()
        .ok_or_else(|| PfmError::SingularH(f64::INFINITY))?;
    Ok((y.transpose() * inv * y)[0] * lit::<T>(n as f64))
}

/// Everything needed for first-order inference about a PFM at a plug-in center.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization<T: Real> {
    pub center: AmbientMatrix<T>,
    pub frame: SpectralFrame<T>,
    pub hj: HjPair<T>,
    pub h_inv: HInverse<T>,
    pub ambient_covariance: DMatrix<T>,
    pub basis: TangentBasis<T>,
    pub covariance: CovarianceEstimate<T>,
}

impl<T: Real> Linearization<T> {
    /// Evaluates `H`, `J`, the frame, tangent basis and covariance at `center`.
    pub fn new(
        data: &[AmbientMatrix<T>],
        weights: Option<&[T]>,
        center: &AmbientMatrix<T>,
        kind: ManifoldKind,
    ) -> Result<Self> {
        let hj = empirical_hj(data, weights, center)?;
        let h_inv = invert_h(&hj.h)?;
        let v = ambient_covariance(&hj, &h_inv);
        let frame = SpectralFrame::at(center, kind)?;
        let basis = tangent_basis(&frame);
        let covariance = clt_covariance(&frame, &v, &basis)?;
        Ok(Self { center: center.clone(), frame, hj, h_inv, ambient_covariance: v, basis, covariance })
    }

    pub fn influence_ambient(&self, z: &AmbientMatrix<T>) -> Result<AmbientMatrix<T>> {
        influence_ambient(z, &self.center, &self.h_inv)
    }

    pub fn influence_manifold(&self, z: &AmbientMatrix<T>) -> Result<AmbientMatrix<T>> {
        influence_manifold(&self.influence_ambient(z)?, &self.frame)
    }

    pub fn layout(&self) -> Layout {
        self.center.layout()
    }
}

/// Checks that a vectorization layout belongs to a manifold kind.
pub fn layout_matches(layout: &Layout, kind: ManifoldKind) -> bool {
    matches!(
        (layout.structure, kind),
        (Structure::General, ManifoldKind::Stiefel { .. })
            | (Structure::Symmetric, ManifoldKind::Grassmann { .. })
            | (Structure::Hermitian, ManifoldKind::ComplexProjective { .. })
            | (Structure::SymmetricTuple, ManifoldKind::ProjectiveStiefel { .. })
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stiefel_basis_orthonormal() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, 0.1, 0.8, -0.3, 0.1, 0.05, 0.4]);
        let frame = SpectralFrame::at(&AmbientMatrix::General(a), ManifoldKind::Stiefel { k: 4, r: 2 }).unwrap();
        let TangentBasis::Real { columns, .. } = tangent_basis(&frame) else { panic!() };
        assert_eq!(columns.ncols(), 4 * 2 - 3);
        assert!((columns.transpose() * &columns - DMatrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn cp_basis_orthonormal_and_hermitian() {
        let k = 3;
        let a = DMatrix::from_fn(k, k, |i, j| {
            let re = if i == j { 3.0 - i as f64 } else { 0.1 };
            let im = if i > j { 0.2 } else if i < j { -0.2 } else { 0.0 };
            Complex::new(re, im)
        });
        let frame = SpectralFrame::at(&AmbientMatrix::Hermitian(a), ManifoldKind::ComplexProjective { k }).unwrap();
        let TangentBasis::Complex { primary, companion, .. } = tangent_basis(&frame) else { panic!() };
        let all = DMatrix::from_columns(&[
            primary.column(0).into_owned(),
            primary.column(1).into_owned(),
            companion.column(0).into_owned(),
            companion.column(1).into_owned(),
        ]);
        let gram = all.adjoint() * &all;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)].re - expect).abs() < 1e-12);
            }
        }
        let m = DMatrix::from_column_slice(k, k, primary.column(0).as_slice());
        assert!((&m - m.adjoint()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn invert_identity() {
        let h = DMatrix::<f64>::identity(3, 3) * 2.0;
        let inv = invert_h(&h).unwrap();
        assert!(!inv.pseudo);
        assert!((inv.inverse - DMatrix::identity(3, 3) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn anchor_residual_detected() {
        let x = AmbientMatrix::General(DMatrix::from_element(2, 1, 1.0));
        let y = AmbientMatrix::General(DMatrix::from_element(2, 1, 0.0));
        assert_eq!(empirical_hj(&[x.clone(), y], None, &x), Err(PfmError::AnchorResidual(0)));
    }
}
