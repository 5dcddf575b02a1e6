//! Frame-of-axes simulation: least-squares frame mean against the frame PFM.

use nalgebra::DMatrix;
use pfm_core::bootstrap::{frame_bootstrap, BootstrapOptions, BootstrapReport, FrameEstimator};
use pfm_core::proj_stiefel::frame_angular_errors;
use pfm_core::samplers::{contaminate, frame_outlier, rng, sample_frame_watson, FrameWatson, FrameWatsonMethod, SimRng};
use pfm_core::ProjStiefelPoint;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, FrameBootstrapConfig, FrameConfig, FrameEstimatorName, SamplerName};
use crate::error::{config_err, Result};
use crate::report::{Cell, ExperimentReport, FailureRecord, Table};
use crate::stats::{mean, sample_sd};

pub fn identity_frame() -> ProjStiefelPoint<f64> {
    ProjStiefelPoint::new(DMatrix::identity(3, 3)).expect("identity is orthonormal")
}

fn method(f: &FrameConfig) -> FrameWatsonMethod {
    match f.sampler {
        SamplerName::Rejection => FrameWatsonMethod::Rejection,
        SamplerName::Metropolis => FrameWatsonMethod::Metropolis { burn_in: f.burn_in },
    }
}

/// A frame Watson sample around the identity with `n_outliers` entries replaced by the outlier frame.
pub fn contaminated_frames(
    kappa: [f64; 3],
    n: usize,
    n_outliers: usize,
    method: FrameWatsonMethod,
    r: &mut SimRng,
) -> pfm_core::Result<Vec<ProjStiefelPoint<f64>>> {
    let dist = FrameWatson::new(kappa, identity_frame())?;
    let mut data = sample_frame_watson(&dist, n, r, method)?.frames;
    contaminate(&mut data, vec![frame_outlier(); n_outliers], r)?;
    Ok(data)
}

/// Per-axis errors of each estimator on one replicate.
pub fn frame_replicate(
    kappa: [f64; 3],
    n: usize,
    n_outliers: usize,
    estimators: &[FrameEstimatorName],
    method: FrameWatsonMethod,
    r: &mut SimRng,
) -> pfm_core::Result<Vec<pfm_core::Result<Vec<f64>>>> {
    let data = contaminated_frames(kappa, n, n_outliers, method, r)?;
    let truth = identity_frame();
    Ok(estimators
        .iter()
        .map(|e| e.core().estimate(&data).and_then(|est| frame_angular_errors(&est, &truth)))
        .collect())
}

fn stream(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

const BOOTSTRAP_STREAM: u64 = 1 << 48;

fn bootstrap_seed(seed: u64, run: usize) -> u64 {
    seed ^ (run as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_frame_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let Some(f) = &config.frame else {
        return config_err("frame-table scenario without a [frame] section");
    };
    let mut report = ExperimentReport::new(config.scenario, config.seed, config.replicates);
    let reps = config.replicates;
    let cells: Vec<(usize, usize)> =
        (0..f.cases.len()).flat_map(|c| f.outliers.iter().map(move |&o| (c, o))).collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let m = method(f);
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let (case, o) = cells[c];
            frame_replicate(f.cases[case], f.n, o, &f.estimators, m, &mut rng(config.seed, stream(c, rep)))
        })
        .collect();

    let mut summary = Table::new(
        "summary",
        &[
            "case", "kappa1", "kappa2", "kappa3", "n", "outliers", "estimator", "ok", "failed", "mean_error1",
            "mean_error2", "mean_error3", "sd_error1", "sd_error2", "sd_error3",
        ],
    );
    let mut errors = Table::new("errors", &["case", "outliers", "replicate", "estimator", "error1", "error2", "error3"]);
    for (c, &(case, o)) in cells.iter().enumerate() {
        let label = format!("case{}/outliers{o}", case + 1);
        let mut per_est: Vec<[Vec<f64>; 3]> = vec![Default::default(); f.estimators.len()];
        let mut failed = vec![0usize; f.estimators.len()];
        for rep in 0..reps {
            let fits = match &outcomes[c * reps + rep] {
                Ok(fits) => fits,
                Err(e) => {
                    for (j, est) in f.estimators.iter().enumerate() {
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
            for (j, (est, fit)) in f.estimators.iter().zip(fits).enumerate() {
                match fit {
                    Ok(err) => {
                        for a in 0..3 {
                            per_est[j][a].push(err[a]);
                        }
                        errors.push(vec![
                            (case + 1).into(),
                            o.into(),
                            rep.into(),
                            est.name().into(),
                            err[0].into(),
                            err[1].into(),
                            err[2].into(),
                        ]);
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
        let k = f.cases[case];
        for (j, est) in f.estimators.iter().enumerate() {
            let e = &per_est[j];
            let mut row: Vec<Cell> = vec![
                (case + 1).into(),
                k[0].into(),
                k[1].into(),
                k[2].into(),
                f.n.into(),
                o.into(),
                est.name().into(),
                e[0].len().into(),
                failed[j].into(),
            ];
            row.extend(e.iter().map(|v| Cell::float(mean(v))));
            row.extend(e.iter().map(|v| Cell::float(sample_sd(v))));
            summary.push(row);
        }
    }
    report.tables = vec![summary, errors];
    if let Some(b) = &f.bootstrap {
        if reps > 0 {
            bootstrap_study(config, f, b, &mut report)?;
        }
    }
    Ok(report)
}

/// Coverage of the pivotal regions for the true axes over repeated datasets.
fn bootstrap_study(config: &ExperimentConfig, f: &FrameConfig, b: &FrameBootstrapConfig, report: &mut ExperimentReport) -> Result<()> {
    let kappa = f.cases[b.case - 1];
    let m = method(f);
    let truth = identity_frame();
    let runs: Vec<pfm_core::Result<(Vec<ProjStiefelPoint<f64>>, BootstrapReport)>> = (0..b.runs)
        .into_par_iter()
        .map(|run| {
            let mut r = rng(config.seed, BOOTSTRAP_STREAM | run as u64);
            let data = contaminated_frames(kappa, f.n, b.outliers, m, &mut r)?;
            let opts = BootstrapOptions {
                replicates: b.resamples,
                seed: bootstrap_seed(config.seed, run),
                level: Some(b.level),
                ..Default::default()
            };
            let rep = frame_bootstrap(&data, FrameEstimator::Median, &opts)?;
            Ok((data, rep))
        })
        .collect();

    let mut covered = [0usize; 3];
    let mut joint = 0usize;
    let mut degenerate = [0usize; 3];
    let mut ses: [Vec<f64>; 3] = Default::default();
    let mut ok = 0usize;
    let label = format!("bootstrap/case{}/outliers{}", b.case, b.outliers);
    for (run, res) in runs.iter().enumerate() {
        let (_, rep) = match res {
            Ok(x) => x,
            Err(e) => {
                report.failures.push(FailureRecord {
                    cell: label.clone(),
                    replicate: run,
                    estimator: "median".into(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        ok += 1;
        let ellipses = rep.ellipses.as_ref().expect("level requested");
        let mut all = true;
        for a in 0..3 {
            let inside = ellipses[a].contains(&truth.axis(a));
            covered[a] += inside as usize;
            all &= inside;
            degenerate[a] += ellipses[a].degenerate as usize;
            if rep.per_axis_se[a].is_finite() {
                ses[a].push(rep.per_axis_se[a]);
            }
        }
        joint += all as usize;
    }
    let mut coverage = Table::new(
        "bootstrap_coverage",
        &["case", "outliers", "runs", "resamples", "level", "axis", "covered", "coverage", "mean_se", "degenerate"],
    );
    let frac = |c: usize| if ok == 0 { f64::NAN } else { c as f64 / ok as f64 };
    for a in 0..3 {
        coverage.push(vec![
            b.case.into(),
            b.outliers.into(),
            ok.into(),
            b.resamples.into(),
            b.level.into(),
            format!("m{}", a + 1).into(),
            covered[a].into(),
            Cell::float(frac(covered[a])),
            Cell::float(mean(&ses[a])),
            degenerate[a].into(),
        ]);
    }
    coverage.push(vec![
        b.case.into(),
        b.outliers.into(),
        ok.into(),
        b.resamples.into(),
        b.level.into(),
        "joint".into(),
        joint.into(),
        Cell::float(frac(joint)),
        Cell::Null,
        Cell::Null,
    ]);
    report.tables.push(coverage);

    if let Some(Ok((data, rep))) = runs.first() {
        let mean_est = FrameEstimator::Mean.estimate(data)?;
        report.tables.extend(example_tables(&mean_est, rep));
    }
    Ok(())
}

/// Point estimates, replicate axes and regions of one bootstrapped dataset.
pub fn example_tables(mean_est: &ProjStiefelPoint<f64>, rep: &BootstrapReport) -> Vec<Table> {
    let mut est = Table::new("bootstrap_estimates", &["estimator", "axis", "x", "y", "z", "se"]);
    for a in 0..3 {
        let v = mean_est.axis(a);
        est.push(vec!["mean".into(), (a + 1).into(), v[0].into(), v[1].into(), v[2].into(), Cell::Null]);
    }
    for a in 0..3 {
        let v = rep.point.axis(a);
        est.push(vec![
            "median".into(),
            (a + 1).into(),
            v[0].into(),
            v[1].into(),
            v[2].into(),
            Cell::float(rep.per_axis_se[a]),
        ]);
    }
    let mut reps = Table::new("bootstrap_replicates", &["replicate", "axis", "x", "y", "z"]);
    for (i, x) in rep.replicates.iter().enumerate() {
        for a in 0..3 {
            let v = x.axis(a);
            reps.push(vec![i.into(), (a + 1).into(), v[0].into(), v[1].into(), v[2].into()]);
        }
    }
    vec![est, reps, ellipse_table(rep)]
}

pub fn ellipse_table(rep: &BootstrapReport) -> Table {
    let mut t = Table::new(
        "bootstrap_ellipses",
        &[
            "axis", "cx", "cy", "cz", "u1x", "u1y", "u1z", "u2x", "u2y", "u2z", "s11", "s12", "s22", "radius2", "level",
            "degenerate", "angular_radius",
        ],
    );
    if let Some(ellipses) = &rep.ellipses {
        for (a, e) in ellipses.iter().enumerate() {
            let mut row: Vec<Cell> = vec![(a + 1).into()];
            row.extend(e.center.iter().map(|x| Cell::float(*x)));
            row.extend(e.tangent_basis.iter().map(|x| Cell::float(*x)));
            row.extend([e.covariance[(0, 0)], e.covariance[(0, 1)], e.covariance[(1, 1)], e.radius2, e.level].map(Cell::float));
            row.push(Cell::Text(e.degenerate.to_string()));
            row.push(Cell::float(e.angular_radius));
            t.push(row);
        }
    }
    t
}
