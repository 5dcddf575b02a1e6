//! Nonparametric bootstrap for frame and shape estimators.
//!
//! Replicate `b` resamples with the generator `rng(seed, b)`, and replicates
//! run in parallel but are collected in index order, so results do not
//! depend on the thread count.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::baselines::{cp_distance, frame_mean, procrustes_align, IterativeOptions};
use crate::error::{invalid, Result};
use crate::manifolds::axial_angle;
use crate::median::MedianOptions;
use crate::proj_stiefel::{pfm_proj_stiefel, ProjStiefelPoint};
use crate::samplers::{rng, SimRng};
use crate::spectral::orthonormal_completion;
use rand::Rng;

/// Estimators available for frame data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameEstimator {
    /// Least-squares frame mean.
    Mean,
    /// Projected Frobenius median.
    Median,
}

impl FrameEstimator {
    pub fn estimate(&self, data: &[ProjStiefelPoint<f64>]) -> Result<ProjStiefelPoint<f64>> {
        match self {
            Self::Mean => Ok(frame_mean(data, &IterativeOptions::default())?.estimate),
            Self::Median => Ok(pfm_proj_stiefel(data, None, &MedianOptions::default())?.estimate),
        }
    }
}

/// Resampled replicate estimates; failed replicates are counted and dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRun<E> {
    pub estimates: Vec<E>,
    pub failures: usize,
}

fn resample_indices(n: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Runs `estimator` on `replicates` resamples of `data`.
pub fn bootstrap<D, E, F>(data: &[D], estimator: F, replicates: usize, seed: u64) -> Result<BootstrapRun<E>>
where
    D: Clone + Sync,
    E: Send,
    F: Fn(&[D]) -> Result<E> + Sync,
{
    if data.is_empty() {
        return invalid("cannot bootstrap an empty sample");
    }
    if replicates == 0 {
        return invalid("at least one bootstrap replicate required");
    }
    let results: Vec<Result<E>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut r = rng(seed, b as u64);
            let idx = resample_indices(data.len(), &mut r);
            let resample: Vec<D> = idx.iter().map(|&i| data[i].clone()).collect();
            estimator(&resample)
        })
        .collect();
    let mut estimates = Vec::with_capacity(replicates);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(e) => estimates.push(e),
            Err(err) => {
                log::debug!("bootstrap replicate failed: {err}");
                failures += 1;
            }
        }
    }
    Ok(BootstrapRun { estimates, failures })
}

/// How the pivotal confidence region for each axis is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotStrategy {
    /// Bootstrap axes are sign-aligned to the estimate, log-mapped to its
    /// tangent plane, and the region is the Mahalanobis ellipse (second moment
    /// about the estimate) whose radius is the level quantile of the
    /// replicates' own Mahalanobis distances.
    #[default]
    TangentMahalanobis,
}

/// Below this many usable replicates the ellipse is replaced by an angular disc.
pub const MIN_ELLIPSE_REPLICATES: usize = 20;

/// Confidence region for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisEllipse {
    pub center: DVector<f64>,
    /// Orthonormal basis of the tangent plane at `center` (`3 × 2`).
    pub tangent_basis: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    /// Squared Mahalanobis radius.
    pub radius2: f64,
    pub level: f64,
    /// Too few replicates or a singular covariance; `contains` uses `angular_radius`.
    pub degenerate: bool,
    /// Level quantile of the replicates' angles to the center.
    pub angular_radius: f64,
}

impl AxisEllipse {
    /// Tangent coordinates of an axis after sign alignment.
    pub fn tangent_coordinates(&self, axis: &DVector<f64>) -> DVector<f64> {
        log_axis(&self.center, axis, &self.tangent_basis)
    }

    pub fn contains(&self, axis: &DVector<f64>) -> bool {
        if self.degenerate {
            return axial_angle(&self.center, axis) <= self.angular_radius;
        }
        let w = self.tangent_coordinates(axis);
        mahalanobis(&self.covariance, &w).is_some_and(|d| d <= self.radius2)
    }
}

fn log_axis(center: &DVector<f64>, axis: &DVector<f64>, basis: &DMatrix<f64>) -> DVector<f64> {
    let a = axis / axis.norm();
    let a = if center.dot(&a) < 0.0 { -a } else { a };
    let c = center.dot(&a);
    let perp = &a - center * c;
    let pn = perp.norm();
    let theta = pn.atan2(c);
    if pn < 1e-15 {
        return DVector::zeros(basis.ncols());
    }
    basis.transpose() * (perp * (theta / pn))
}

fn mahalanobis(cov: &DMatrix<f64>, w: &DVector<f64>) -> Option<f64> {
    let inv = cov.clone().try_inverse()?;
    Some((w.transpose() * inv * w)[0])
}

/// Order statistic `⌈level·n⌉` of `xs`.
fn upper_quantile(mut xs: Vec<f64>, level: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let idx = ((level * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1;
    xs[idx]
}

/// Per-axis pivotal regions around `point` from bootstrap replicates.
pub fn pivotal_ellipses(
    point: &ProjStiefelPoint<f64>,
    replicates: &[ProjStiefelPoint<f64>],
    level: f64,
    strategy: PivotStrategy,
) -> Result<Vec<AxisEllipse>> {
    if !(0.0 < level && level < 1.0) {
        return invalid("confidence level must lie in (0, 1)");
    }
    let PivotStrategy::TangentMahalanobis = strategy;
    let (k, r) = point.representative().matrix().shape();
    if k != 3 {
        return invalid("pivotal ellipses are defined for axes in R^3");
    }
    let mut out = Vec::with_capacity(r);
    for j in 0..r {
        let center = point.axis(j);
        let basis = orthonormal_completion(&DMatrix::from_column_slice(3, 1, center.as_slice()))?
            .columns(1, 2)
            .into_owned();
        let ws: Vec<DVector<f64>> = replicates.iter().map(|x| log_axis(&center, &x.axis(j), &basis)).collect();
        let angles: Vec<f64> = replicates.iter().map(|x| axial_angle(&center, &x.axis(j))).collect();
        let angular_radius = upper_quantile(angles, level);
        let mut cov = DMatrix::zeros(2, 2);
        for w in &ws {
            cov += w * w.transpose();
        }
        let b = ws.len().max(1) as f64;
        cov /= b;
        let singular = cov.determinant() <= 1e-12 * cov.trace().powi(2).max(1e-300);
        let degenerate = ws.len() < MIN_ELLIPSE_REPLICATES || singular;
        let radius2 = if degenerate {
            f64::NAN
        } else {
            upper_quantile(ws.iter().filter_map(|w| mahalanobis(&cov, w)).collect(), level)
        };
        out.push(AxisEllipse { center, tangent_basis: basis, covariance: cov, radius2, level, degenerate, angular_radius });
    }
    Ok(out)
}

/// Standard deviation of `arccos |m̂ⱼᵀ m̂ⱼ⁽ᵇ⁾|` over replicates, per axis.
pub fn frame_standard_errors(point: &ProjStiefelPoint<f64>, replicates: &[ProjStiefelPoint<f64>]) -> Vec<f64> {
    let r = point.representative().r();
    (0..r)
        .map(|j| {
            let angles: Vec<f64> = replicates.iter().map(|x| axial_angle(&point.axis(j), &x.axis(j))).collect();
            sample_sd(&angles)
        })
        .collect()
}

/// Standard deviation of `arccos |ẑ* ẑ⁽ᵇ⁾|` after Procrustes alignment.
pub fn shape_standard_error(point: &DVector<Complex64>, replicates: &[DVector<Complex64>]) -> f64 {
    let angles: Vec<f64> = replicates
        .iter()
        .filter_map(|z| procrustes_align(z, point).ok())
        .map(|z| cp_distance(point, &z))
        .collect();
    sample_sd(&angles)
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    // Shifted by the first value so constant input gives exactly zero.
    let n = xs.len() as f64;
    let shift = xs[0];
    let m = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    (xs.iter().map(|x| (x - shift - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Bootstrap summary for a frame estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub point: ProjStiefelPoint<f64>,
    pub replicates: Vec<ProjStiefelPoint<f64>>,
    pub per_axis_se: Vec<f64>,
    pub failures: usize,
    pub ellipses: Option<Vec<AxisEllipse>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    /// Confidence level of the pivotal regions; `None` skips them.
    pub level: Option<f64>,
    pub strategy: PivotStrategy,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { replicates: 1000, seed: 0, level: Some(0.95), strategy: PivotStrategy::TangentMahalanobis }
    }
}

/// Point estimate, replicate estimates, standard errors and pivotal regions.
pub fn frame_bootstrap(
    data: &[ProjStiefelPoint<f64>],
    estimator: FrameEstimator,
    opts: &BootstrapOptions,
) -> Result<BootstrapReport> {
    let point = estimator.estimate(data)?;
    let run = bootstrap(data, |d| estimator.estimate(d), opts.replicates, opts.seed)?;
    let per_axis_se = frame_standard_errors(&point, &run.estimates);
    let ellipses = match opts.level {
        Some(level) => Some(pivotal_ellipses(&point, &run.estimates, level, opts.strategy)?),
        None => None,
    };
    Ok(BootstrapReport { point, replicates: run.estimates, per_axis_se, failures: run.failures, ellipses })
}
