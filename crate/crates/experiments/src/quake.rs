//! Principal-axis frames of one seismic region, with dataset edits.

use pfm_core::bootstrap::{frame_bootstrap, BootstrapOptions, BootstrapReport};
use pfm_core::proj_stiefel::frame_angular_errors;
use pfm_core::{PfmError, ProjStiefelPoint};

use crate::config::{EarthquakeConfig, ExperimentConfig, FrameEstimatorName};
use crate::error::{config_err, ExperimentError, Result};
use crate::frame::ellipse_table;
use crate::report::{Cell, ExperimentReport, FailureRecord, Table};
use crate::tensors::{extract_tbp_frame, ingest_moment_tensors, MomentTensorRecord, AXIS_LABELS};

/// A region's events after an edit, in catalogue order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: &'static str,
    pub event_ids: Vec<String>,
    pub frames: Vec<ProjStiefelPoint<f64>>,
}

/// `full`, `sub` (dropped events removed) and `cont` (`sub` plus `copies` extra copies of duplicated events).
pub fn dataset_variants(
    events: &[(String, ProjStiefelPoint<f64>)],
    drop: &[String],
    duplicate: &[String],
    copies: usize,
) -> Result<Vec<Dataset>> {
    for id in drop.iter().chain(duplicate) {
        if !events.iter().any(|(e, _)| e == id) {
            return config_err(format!("event {id:?} is not in the selected region"));
        }
    }
    let full = Dataset {
        name: "full",
        event_ids: events.iter().map(|(e, _)| e.clone()).collect(),
        frames: events.iter().map(|(_, f)| f.clone()).collect(),
    };
    let kept: Vec<&(String, ProjStiefelPoint<f64>)> = events.iter().filter(|(e, _)| !drop.contains(e)).collect();
    let sub = Dataset {
        name: "sub",
        event_ids: kept.iter().map(|(e, _)| e.clone()).collect(),
        frames: kept.iter().map(|(_, f)| f.clone()).collect(),
    };
    let mut cont = sub.clone();
    cont.name = "cont";
    for id in duplicate {
        let (_, f) = events.iter().find(|(e, _)| e == id).expect("checked above");
        for _ in 0..copies {
            cont.event_ids.push(id.clone());
            cont.frames.push(f.clone());
        }
    }
    let mut out = vec![full];
    if !drop.is_empty() {
        out.push(sub);
    }
    if !drop.is_empty() || !duplicate.is_empty() {
        out.push(cont);
    }
    Ok(out)
}

/// Events of `region` with their frames; tensors with repeated eigenvalues are reported, not used.
pub fn region_frames(
    records: &[MomentTensorRecord],
    region: &str,
    failures: &mut Vec<FailureRecord>,
) -> Vec<(String, ProjStiefelPoint<f64>)> {
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate().filter(|(_, r)| r.region.as_deref() == Some(region)) {
        match extract_tbp_frame(r) {
            Ok(f) => out.push((r.event_id.clone(), f)),
            Err(e) => failures.push(FailureRecord {
                cell: format!("region{region}"),
                replicate: i,
                estimator: "frame".into(),
                message: e.to_string(),
            }),
        }
    }
    out
}

fn variant_seed(seed: u64, variant: usize, estimator: usize) -> u64 {
    seed ^ ((variant as u64) << 8 | estimator as u64).wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

pub fn run_earthquake_analysis(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let Some(q) = &config.earthquake else {
        return config_err("earthquake scenario without an [earthquake] section");
    };
    let records = ingest_moment_tensors(&config.resolve(&q.input))?;
    analyse_records(config, q, &records)
}

pub fn analyse_records(config: &ExperimentConfig, q: &EarthquakeConfig, records: &[MomentTensorRecord]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.scenario, config.seed, config.replicates);
    let events = region_frames(records, &q.region, &mut report.failures);
    if events.len() < 2 {
        return Err(ExperimentError::Estimation(PfmError::InvalidInput(format!(
            "region {:?} has {} usable events; at least 2 are needed",
            q.region,
            events.len()
        ))));
    }
    let variants = dataset_variants(&events, &q.drop, &q.duplicate, q.copies)?;

    let mut datasets = Table::new("datasets", &["variant", "events", "distinct_events"]);
    let mut axes = Table::new("axes", &["event_id", "axis", "x", "y", "z"]);
    for (id, f) in &events {
        for (a, label) in AXIS_LABELS.iter().enumerate() {
            let v = f.axis(a);
            axes.push(vec![id.as_str().into(), (*label).into(), v[0].into(), v[1].into(), v[2].into()]);
        }
    }
    for v in &variants {
        let mut ids = v.event_ids.clone();
        ids.sort();
        ids.dedup();
        datasets.push(vec![v.name.into(), v.frames.len().into(), ids.len().into()]);
    }
    if config.replicates == 0 {
        report.tables = vec![datasets, axes];
        return Ok(report);
    }

    let mut estimates = Table::new("estimates", &["variant", "estimator", "axis", "x", "y", "z", "se"]);
    let mut shifts = Table::new("shifts", &["variant", "estimator", "axis", "shift"]);
    let mut ellipses = Table::new("ellipses", &[]);
    let mut points: Vec<[Option<ProjStiefelPoint<f64>>; 2]> = Vec::new();
    for (vi, v) in variants.iter().enumerate() {
        let mut pair: [Option<ProjStiefelPoint<f64>>; 2] = [None, None];
        for (ei, est) in [FrameEstimatorName::Mean, FrameEstimatorName::Median].iter().enumerate() {
            let opts = BootstrapOptions {
                replicates: config.replicates,
                seed: variant_seed(config.seed, vi, ei),
                level: (*est == FrameEstimatorName::Median).then_some(q.level),
                ..Default::default()
            };
            let rep: BootstrapReport = match frame_bootstrap(&v.frames, est.core(), &opts) {
                Ok(r) => r,
                Err(e) => {
                    report.failures.push(FailureRecord {
                        cell: v.name.into(),
                        replicate: 0,
                        estimator: est.name().into(),
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            if rep.failures > 0 {
                report.failures.push(FailureRecord {
                    cell: v.name.into(),
                    replicate: rep.failures,
                    estimator: est.name().into(),
                    message: format!("{} of {} bootstrap resamples failed", rep.failures, config.replicates),
                });
            }
            for (a, label) in AXIS_LABELS.iter().enumerate() {
                let x = rep.point.axis(a);
                estimates.push(vec![
                    v.name.into(),
                    est.name().into(),
                    (*label).into(),
                    x[0].into(),
                    x[1].into(),
                    x[2].into(),
                    Cell::float(rep.per_axis_se[a]),
                ]);
            }
            if rep.ellipses.is_some() {
                let mut t = ellipse_table(&rep);
                t.columns.insert(0, "variant".into());
                for row in &mut t.rows {
                    row.insert(0, v.name.into());
                }
                if ellipses.columns.is_empty() {
                    ellipses.columns = t.columns.clone();
                }
                ellipses.rows.extend(t.rows);
            }
            pair[ei] = Some(rep.point);
        }
        points.push(pair);
    }
    ellipses.name = "ellipses".into();
    for (vi, v) in variants.iter().enumerate().skip(1) {
        for (ei, est) in ["mean", "median"].iter().enumerate() {
            if let (Some(base), Some(p)) = (&points[0][ei], &points[vi][ei]) {
                let d = frame_angular_errors(p, base)?;
                for (a, label) in AXIS_LABELS.iter().enumerate() {
                    shifts.push(vec![v.name.into(), (*est).into(), (*label).into(), d[a].into()]);
                }
            }
        }
    }
    report.tables = vec![datasets, axes, estimates, shifts, ellipses];
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn frames(n: usize) -> Vec<(String, ProjStiefelPoint<f64>)> {
        (0..n)
            .map(|i| (format!("e{i}"), ProjStiefelPoint::new(DMatrix::<f64>::identity(3, 3)).unwrap()))
            .collect()
    }

    #[test]
    fn edits_follow_the_protocol() {
        let ev = frames(21);
        let drop = vec!["e4".to_string(), "e12".to_string()];
        let dup = vec!["e8".to_string(), "e16".to_string()];
        let v = dataset_variants(&ev, &drop, &dup, 2).unwrap();
        assert_eq!(v.iter().map(|d| d.frames.len()).collect::<Vec<_>>(), vec![21, 19, 23]);
        assert_eq!(v[2].event_ids.iter().filter(|e| *e == "e8").count(), 3);
        assert!(!v[1].event_ids.contains(&"e4".to_string()));
    }

    #[test]
    fn unknown_event_is_a_config_error() {
        let err = dataset_variants(&frames(3), &["x".to_string()], &[], 2).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
