//! Planar-shape simulation: extrinsic median against intrinsic baselines.

use nalgebra::DVector;
use num_complex::Complex64;
use pfm_core::baselines::{frechet_mean_cp, frechet_median_cp, median_of_means_cp, procrustes_align, IterativeOptions};
use pfm_core::manifolds::angular_error;
use pfm_core::samplers::{
    contaminate, helmert_submatrix, preshape, rng, sample_complex_bingham, shape_outliers, ComplexBingham, SimRng,
};
use pfm_core::{pfm, CpPoint, ManifoldPoint, MedianOptions};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ShapeConfig, ShapeEstimator};
use crate::error::{config_err, Result};
use crate::report::{Cell, ExperimentReport, FailureRecord, Table};
use crate::stats::{mean, median, sample_sd};

/// Landmark configurations `c⁽¹⁾, c⁽²⁾, c⁽³⁾`.
pub fn configuration(id: u8) -> DVector<Complex64> {
    let pts: &[(f64, f64)] = match id {
        1 => &[(0.29, -0.29), (0.29, 0.57), (-0.01, 0.01), (-0.57, -0.29)],
        2 => &[(0.32, 0.00), (0.13, 0.06), (-0.06, 0.57), (-0.44, 0.00), (-0.06, -0.57), (0.13, -0.06)],
        3 => &[
            (-0.17, 0.36),
            (-0.03, 0.41),
            (0.10, 0.33),
            (0.13, 0.17),
            (0.05, 0.09),
            (-0.03, 0.02),
            (-0.11, -0.01),
            (-0.03, -0.01),
            (0.05, -0.09),
            (0.13, -0.17),
            (0.10, -0.33),
            (-0.03, -0.40),
            (-0.17, -0.36),
        ],
        _ => panic!("shape id {id} out of range"),
    };
    DVector::from_iterator(pts.len(), pts.iter().map(|&(a, b)| Complex64::new(a, b)))
}

/// Outcome of one estimator on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFit {
    pub estimate: DVector<Complex64>,
    pub error: f64,
    pub objective: Option<f64>,
    pub converged: bool,
}

/// One replicate: Bingham sample, contamination, then each estimator from an initial value orthogonal to `z₀`.
pub fn shape_replicate(
    z0: &DVector<Complex64>,
    kappa: f64,
    n: usize,
    n_outliers: usize,
    estimators: &[ShapeEstimator],
    mom_groups: usize,
    r: &mut SimRng,
) -> pfm_core::Result<Vec<pfm_core::Result<ShapeFit>>> {
    let dist = ComplexBingham::with_mode(z0, kappa)?;
    let mut data = sample_complex_bingham(&dist, n, r)?;
    let outliers = shape_outliers(z0, n_outliers, r)?;
    contaminate(&mut data, outliers, r)?;
    let init = shape_outliers(z0, 1, r)?.remove(0);
    let opts = IterativeOptions::default();
    let mut fits = Vec::with_capacity(estimators.len());
    for est in estimators {
        let fit = match est {
            ShapeEstimator::EMedian => extrinsic_median(&data).map(|z| (z, None, true)),
            ShapeEstimator::IMean => frechet_mean_cp(&data, &init, &opts).map(|b| (b.estimate, Some(b.objective), b.converged)),
            ShapeEstimator::IMedian => {
                frechet_median_cp(&data, &init, &opts).map(|b| (b.estimate, Some(b.objective), b.converged))
            }
            ShapeEstimator::MoM => median_of_means_cp(&data, mom_groups, &init, &opts, r)
                .map(|b| (b.estimate, Some(b.objective), b.converged)),
        };
        fits.push(fit.and_then(|(z, objective, converged)| {
            Ok(ShapeFit { error: angular_error(&z, z0)?, estimate: z, objective, converged })
        }));
    }
    Ok(fits)
}

/// PFM on `CP^{k−2}`: Frobenius median of `x x*`, then its leading eigenvector.
pub fn extrinsic_median(data: &[DVector<Complex64>]) -> pfm_core::Result<DVector<Complex64>> {
    let pts: Vec<_> = data
        .iter()
        .map(|x| CpPoint::from_vector(x).map(ManifoldPoint::ComplexProjective))
        .collect::<pfm_core::Result<_>>()?;
    let fit = pfm(&pts, &MedianOptions::default())?;
    if !fit.ambient.converged {
        return Err(pfm_core::PfmError::NotConverged {
            iterations: fit.ambient.iterations,
            gap: fit.ambient.gap,
        });
    }
    match fit.estimate {
        ManifoldPoint::ComplexProjective(p) => Ok(p.vector().clone()),
        _ => unreachable!("CP data projects to CP"),
    }
}

/// Landmark coordinates `Hᵀ ẑ` after rotating `ẑ` onto `z₀`.
pub fn aligned_configuration(z: &DVector<Complex64>, z0: &DVector<Complex64>) -> pfm_core::Result<DVector<Complex64>> {
    let a = procrustes_align(z, z0)?;
    let h = helmert_submatrix::<f64>(z.len() + 1).map(|x| Complex64::new(x, 0.0));
    Ok(h.transpose() * a)
}

fn stream(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

pub fn run_shape_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let Some(s) = &config.shape else {
        return config_err("shape-table scenario without a [shape] section");
    };
    let mut report = ExperimentReport::new(config.scenario, config.seed, config.replicates);
    let cells = grid(s);
    let reps = config.replicates;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let cell = &cells[c];
            let mut r = rng(config.seed, stream(c, rep));
            shape_replicate(&cell.z0, cell.kappa, s.n, cell.outliers, &s.estimators, s.mom_groups, &mut r)
        })
        .collect();

    let mut summary = Table::new(
        "summary",
        &["shape", "k", "kappa", "n", "outliers", "estimator", "ok", "failed", "not_converged", "median_error", "sd_error", "mean_error"],
    );
    let mut errors = Table::new("errors", &["shape", "outliers", "replicate", "estimator", "error", "objective", "converged"]);
    let mut configs = Table::new("configurations", &["shape", "outliers", "estimator", "landmark", "x", "y"]);
    for (c, cell) in cells.iter().enumerate() {
        let label = format!("shape{}/outliers{}", cell.shape, cell.outliers);
        let mut per_est: Vec<Vec<f64>> = vec![Vec::new(); s.estimators.len()];
        let mut failed = vec![0usize; s.estimators.len()];
        let mut not_converged = vec![0usize; s.estimators.len()];
        for rep in 0..reps {
            let fits = match &outcomes[c * reps + rep] {
                Ok(f) => f.clone(),
                Err(e) => {
                    for (j, est) in s.estimators.iter().enumerate() {
                        failed[j] += 1;
                        report.failures.push(FailureRecord {
                            cell: label.clone(),
                            replicate: rep,
                            estimator: est.name().into(),
                            message: format!("sampling: {e}"),
                        });
                    }
                    continue;
                }
            };
            for (j, (est, fit)) in s.estimators.iter().zip(fits).enumerate() {
                match fit {
                    Ok(f) => {
                        per_est[j].push(f.error);
                        if !f.converged {
                            not_converged[j] += 1;
                        }
                        errors.push(vec![
                            (cell.shape as usize).into(),
                            cell.outliers.into(),
                            rep.into(),
                            est.name().into(),
                            f.error.into(),
                            f.objective.map_or(Cell::Null, Cell::float),
                            Cell::Text(f.converged.to_string()),
                        ]);
                        if rep == 0 {
                            if let Ok(conf) = aligned_configuration(&f.estimate, &cell.z0) {
                                push_configuration(&mut configs, cell, est.name(), &conf);
                            }
                        }
                    }
                    Err(e) => {
                        failed[j] += 1;
                        report.failures.push(FailureRecord {
                            cell: label.clone(),
                            replicate: rep,
                            estimator: est.name().into(),
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
        if reps > 0 {
            let truth = aligned_configuration(&cell.z0, &cell.z0)?;
            push_configuration(&mut configs, cell, "truth", &truth);
        }
        for (j, est) in s.estimators.iter().enumerate() {
            let e = &per_est[j];
            summary.push(vec![
                (cell.shape as usize).into(),
                (cell.z0.len() + 1).into(),
                cell.kappa.into(),
                s.n.into(),
                cell.outliers.into(),
                est.name().into(),
                e.len().into(),
                failed[j].into(),
                not_converged[j].into(),
                Cell::float(median(e)),
                Cell::float(sample_sd(e)),
                Cell::float(mean(e)),
            ]);
        }
    }
    report.tables = vec![summary, errors, configs];
    Ok(report)
}

fn push_configuration(t: &mut Table, cell: &ShapeCell, estimator: &str, conf: &DVector<Complex64>) {
    for (l, z) in conf.iter().enumerate() {
        t.push(vec![
            (cell.shape as usize).into(),
            cell.outliers.into(),
            estimator.into(),
            (l + 1).into(),
            z.re.into(),
            z.im.into(),
        ]);
    }
}

struct ShapeCell {
    shape: u8,
    outliers: usize,
    kappa: f64,
    z0: DVector<Complex64>,
}

fn grid(s: &ShapeConfig) -> Vec<ShapeCell> {
    let mut cells = Vec::new();
    for (pos, &shape) in s.shapes.iter().enumerate() {
        let z0 = preshape(&configuration(shape)).expect("shipped configurations are nondegenerate");
        for &outliers in &s.outliers {
            cells.push(ShapeCell { shape, outliers, kappa: s.kappa_for(pos), z0: z0.clone() });
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configurations_have_the_listed_sizes() {
        assert_eq!(configuration(1).len(), 4);
        assert_eq!(configuration(2).len(), 6);
        assert_eq!(configuration(3).len(), 13);
    }

    #[test]
    fn aligned_truth_is_the_centred_configuration() {
        let c = configuration(2);
        let z0 = preshape(&c).unwrap();
        let back = aligned_configuration(&z0, &z0).unwrap();
        let mean = c.sum() / Complex64::new(c.len() as f64, 0.0);
        let centred = c.map(|x| x - mean);
        let scale = centred.norm();
        assert!((back - centred / Complex64::new(scale, 0.0)).norm() < 1e-12);
    }
}
