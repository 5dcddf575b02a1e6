//! Wall-clock timings of the estimators. Not part of the reproducibility contract.

use std::time::Instant;

use pfm_core::baselines::{frechet_median_cp, IterativeOptions};
use pfm_core::bootstrap::FrameEstimator;
use pfm_core::samplers::{preshape, rng, sample_complex_bingham, shape_outliers, ComplexBingham};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::frame::contaminated_frames;
use crate::report::{ExperimentReport, Table};
use crate::shape::{configuration, extrinsic_median};
use crate::stats::{mean, median};

fn time<F: FnMut() -> pfm_core::Result<()>>(repeats: usize, mut f: F) -> pfm_core::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        f()?;
        out.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(out)
}

pub fn run_bench(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.scenario, config.seed, config.replicates);
    let mut t = Table::new("timings", &["workload", "n", "repeats", "mean_ms", "median_ms"]);
    let repeats = config.replicates;
    if repeats > 0 {
        for shape in 1..=3u8 {
            let z0 = preshape(&configuration(shape))?;
            let mut r = rng(config.seed, shape as u64);
            let dist = ComplexBingham::with_mode(&z0, 150.0)?;
            let data = sample_complex_bingham(&dist, 200, &mut r)?;
            let init = shape_outliers(&z0, 1, &mut r)?.remove(0);
            let ms = time(repeats, || extrinsic_median(&data).map(|_| ()))?;
            t.push(vec![format!("pfm-cp{}", z0.len() - 1).into(), 200usize.into(), repeats.into(), mean(&ms).into(), median(&ms).into()]);
            let ms = time(repeats, || frechet_median_cp(&data, &init, &IterativeOptions::default()).map(|_| ()))?;
            t.push(vec![format!("frechet-median-cp{}", z0.len() - 1).into(), 200usize.into(), repeats.into(), mean(&ms).into(), median(&ms).into()]);
        }
        for n in [50usize, 500] {
            let data = contaminated_frames([5.0; 3], n, n / 10, Default::default(), &mut rng(config.seed, 100 + n as u64))?;
            for (name, est) in [("frame-median", FrameEstimator::Median), ("frame-mean", FrameEstimator::Mean)] {
                let ms = time(repeats, || est.estimate(&data).map(|_| ()))?;
                t.push(vec![name.into(), n.into(), repeats.into(), mean(&ms).into(), median(&ms).into()]);
            }
        }
    }
    report.tables.push(t);
    Ok(report)
}
