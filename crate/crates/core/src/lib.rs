//! Projected Frobenius medians.
//!
//! A sample on a matrix manifold is embedded in a Euclidean space of
//! matrices, its spatial (Frobenius) median is computed there, and the result
//! is projected back to the nearest point of the manifold. Supported
//! manifolds are the Stiefel manifold `V_{k,r}`, the Grassmannian `G_{k,r}`,
//! complex projective space `CP^{k−1}` (planar shapes) and the projective
//! Stiefel manifold `PV_{k,r}` (frames of axes).
//!
//! The deterministic layers ([`spectral`], [`vectorize`], [`median`],
//! [`manifolds`], [`proj_stiefel`], [`asymptotics`], [`baselines`]) are
//! generic over [`Real`] (`f32` or `f64`). The stochastic layers
//! ([`samplers`], [`bootstrap`]) work in `f64`.
//!
//! ```
//! use nalgebra::DMatrix;
//! use pfm_core::{pfm, ManifoldPoint, MedianOptions, StiefelPoint};
//!
//! let axis = |t: f64| StiefelPoint::new(DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()])).unwrap();
//! let data: Vec<_> = [0.1, -0.1, 0.05, 2.0].iter().map(|&t| ManifoldPoint::Stiefel(axis(t))).collect();
//! let fit = pfm(&data, &MedianOptions::default()).unwrap();
//! let ManifoldPoint::Stiefel(m) = fit.estimate else { unreachable!() };
//! assert!(m.matrix()[(1, 0)].abs() < 0.1);
//! ```

pub mod asymptotics;
pub mod baselines;
pub mod bootstrap;
pub mod error;
pub mod manifolds;
pub mod median;
pub mod proj_stiefel;
pub mod samplers;
pub mod scalar;
pub mod spectral;
pub mod vectorize;

pub use error::{PfmError, Result};
pub use manifolds::{
    extrinsic_distance, pfm, pfm_weighted, project, project_cp, project_grassmann, project_stiefel, CpPoint,
    GrassmannPoint, ManifoldKind, ManifoldPoint, PfmResult, StiefelPoint,
};
pub use median::{frobenius_median, spatial_median, MedianOptions, MedianResult, WeightedSample};
pub use proj_stiefel::{pfm_proj_stiefel, ProjStiefelPfm, ProjStiefelPoint};
pub use scalar::Real;
pub use vectorize::{AmbientMatrix, Layout, Structure};

pub type StiefelPointF64 = StiefelPoint<f64>;
pub type StiefelPointF32 = StiefelPoint<f32>;
pub type GrassmannPointF64 = GrassmannPoint<f64>;
pub type GrassmannPointF32 = GrassmannPoint<f32>;
pub type CpPointF64 = CpPoint<f64>;
pub type CpPointF32 = CpPoint<f32>;
pub type FrameF64 = ProjStiefelPoint<f64>;
pub type FrameF32 = ProjStiefelPoint<f32>;
pub type AmbientMatrixF64 = AmbientMatrix<f64>;
pub type AmbientMatrixF32 = AmbientMatrix<f32>;
pub type ManifoldPointF64 = ManifoldPoint<f64>;
pub type ManifoldPointF32 = ManifoldPoint<f32>;
