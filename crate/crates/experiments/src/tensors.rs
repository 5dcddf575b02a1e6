//! Moment-tensor files and principal-axis frames.
//!
//! The CSV layout is fixed: UTF-8, `.` as decimal separator, header
//!
//! ```text
//! event_id,m11,m22,m33,m12,m13,m23,region
//! ```
//!
//! with one event per line. `region` may be empty.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Matrix3};
use pfm_core::samplers::{rng, sample_frame_watson, FrameWatson, FrameWatsonMethod};
use pfm_core::spectral::sym_eig;
use pfm_core::{project_stiefel, PfmError, ProjStiefelPoint};
use rand::Rng;

use crate::error::{ExperimentError, Result};
use crate::report::fmt_f64;

pub const HEADER: [&str; 8] = ["event_id", "m11", "m22", "m33", "m12", "m13", "m23", "region"];

/// Axis names in descending-eigenvalue order.
pub const AXIS_LABELS: [&str; 3] = ["T", "B", "P"];

/// Relative trace above which a tensor is reported as not deviatoric.
pub const TRACE_WARNING: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensorRecord {
    pub event_id: String,
    /// `m11, m22, m33, m12, m13, m23`.
    pub components: [f64; 6],
    pub region: Option<String>,
}

impl MomentTensorRecord {
    pub fn matrix(&self) -> Matrix3<f64> {
        let [m11, m22, m33, m12, m13, m23] = self.components;
        Matrix3::new(m11, m12, m13, m12, m22, m23, m13, m23, m33)
    }

    pub fn from_matrix(event_id: &str, m: &Matrix3<f64>, region: Option<&str>) -> Self {
        Self {
            event_id: event_id.to_owned(),
            components: [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]],
            region: region.map(str::to_owned),
        }
    }

    pub fn trace(&self) -> f64 {
        self.components[0] + self.components[1] + self.components[2]
    }

    pub fn trace_warning(&self) -> bool {
        self.trace().abs() > TRACE_WARNING * self.matrix().norm()
    }
}

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Parse { line, column, message: message.into() }
}

/// Parses moment tensors from CSV text.
pub fn read_moment_tensors<R: Read>(input: R) -> Result<Vec<MomentTensorRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = Vec::new();
    let mut seen_header = false;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, 1, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if !seen_header {
            for (j, expected) in HEADER.iter().enumerate() {
                match row.get(j) {
                    Some(name) if name.trim() == *expected => {}
                    Some(name) => return Err(parse_error(line, j + 1, format!("expected column {expected:?}, found {name:?}"))),
                    None => return Err(parse_error(line, j + 1, format!("missing column {expected:?}"))),
                }
            }
            if row.len() > HEADER.len() {
                return Err(parse_error(line, HEADER.len() + 1, "unexpected extra column"));
            }
            seen_header = true;
            continue;
        }
        if row.len() != HEADER.len() {
            return Err(parse_error(line, row.len().min(HEADER.len()) + 1, format!("expected 8 fields, found {}", row.len())));
        }
        let event_id = row[0].trim();
        if event_id.is_empty() {
            return Err(parse_error(line, 1, "empty event_id"));
        }
        let mut components = [0.0; 6];
        for (j, c) in components.iter_mut().enumerate() {
            let text = row[j + 1].trim();
            let v: f64 = text.parse().map_err(|_| parse_error(line, j + 2, format!("{:?} is not a number", text)))?;
            if !v.is_finite() {
                return Err(parse_error(line, j + 2, format!("non-finite entry {text:?}")));
            }
            *c = v;
        }
        let region = row[7].trim();
        let rec = MomentTensorRecord {
            event_id: event_id.to_owned(),
            components,
            region: (!region.is_empty()).then(|| region.to_owned()),
        };
        if rec.trace_warning() {
            log::warn!("line {line}: event {} has trace {} (not deviatoric)", rec.event_id, rec.trace());
        }
        records.push(rec);
    }
    if !seen_header {
        return Err(parse_error(1, 1, "missing header"));
    }
    Ok(records)
}

pub fn ingest_moment_tensors(path: &Path) -> Result<Vec<MomentTensorRecord>> {
    let file = File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    read_moment_tensors(file)
}

/// Writes records in the format read by [`read_moment_tensors`]; floats round-trip bit-exactly.
pub fn write_moment_tensors<W: Write>(records: &[MomentTensorRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| ExperimentError::Runtime(format!("writing moment tensors: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        let mut fields = vec![r.event_id.clone()];
        fields.extend(r.components.iter().map(|x| fmt_f64(*x)));
        fields.push(r.region.clone().unwrap_or_default());
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| ExperimentError::Runtime(format!("writing moment tensors: {e}")))?;
    Ok(())
}

/// Principal axes `(±t, ±b, ±p)` ordered by descending eigenvalue.
pub fn extract_tbp_frame(record: &MomentTensorRecord) -> pfm_core::Result<ProjStiefelPoint<f64>> {
    let m = record.matrix();
    let scale = m.norm();
    let e = sym_eig(&DMatrix::from_column_slice(3, 3, m.as_slice()))?;
    if e.min_gap <= 1e-10 * scale {
        return Err(PfmError::DegenerateSpectrum(format!(
            "event {}: eigenvalues {:?} are not distinct",
            record.event_id,
            e.values.as_slice()
        )));
    }
    ProjStiefelPoint::new(e.vectors)
}

/// Axes of the region-2 frame median, used as the centre of the synthetic catalogue.
pub const REFERENCE_AXES: [[f64; 3]; 3] =
    [[0.384, -0.477, -0.791], [0.705, 0.704, -0.082], [0.596, -0.526, 0.607]];

pub fn reference_frame() -> ProjStiefelPoint<f64> {
    let m = DMatrix::from_fn(3, 3, |i, j| REFERENCE_AXES[j][i]);
    ProjStiefelPoint::from_stiefel(&project_stiefel(&m).expect("reference axes are nearly orthonormal"))
}

/// Recipe for a synthetic region: frame Watson events plus rotated outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRegion {
    pub region: String,
    pub prefix: String,
    pub inliers: usize,
    pub kappa: [f64; 3],
    /// `(position, rotation vector)`: the outlier frame is the centre rotated by `exp([ω]×)`.
    pub outliers: Vec<(usize, [f64; 3])>,
}

fn rotation(omega: [f64; 3]) -> Matrix3<f64> {
    nalgebra::Rotation3::new(nalgebra::Vector3::from(omega)).into_inner()
}

/// Builds moment tensors `F diag(λ) Fᵀ` with deviatoric eigenvalues and journal-style rounding.
pub fn synthetic_region(spec: &SyntheticRegion, center: &ProjStiefelPoint<f64>, seed: u64) -> Result<Vec<MomentTensorRecord>> {
    let mut r = rng(seed, 0);
    let dist = FrameWatson::new(spec.kappa, center.clone())?;
    let draws = sample_frame_watson(&dist, spec.inliers, &mut r, FrameWatsonMethod::Rejection)?.frames;
    let c = center.representative().matrix();
    let c3 = Matrix3::from_column_slice(c.as_slice());
    let mut frames: Vec<Matrix3<f64>> = draws.iter().map(|f| Matrix3::from_column_slice(f.representative().matrix().as_slice())).collect();
    for (pos, omega) in &spec.outliers {
        frames.insert((*pos).min(frames.len()), rotation(*omega) * c3);
    }
    let mut out = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let mw: f64 = r.random_range(5.0..6.5);
        let m0 = 10f64.powf(1.5 * mw + 9.1);
        let b: f64 = r.random_range(-0.25..0.25);
        let lambda = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, b, -(1.0 + b)));
        let m = f * lambda * f.transpose() * m0;
        let round = |x: f64| {
            let unit = 10f64.powi(m0.log10().floor() as i32 - 3);
            (x / unit).round() * unit
        };
        let m = m.map(round);
        out.push(MomentTensorRecord::from_matrix(&format!("{}-{:02}", spec.prefix, i + 1), &m, Some(&spec.region)));
    }
    Ok(out)
}

/// The shipped sample catalogue: region 2 (21 events, four outliers) and two small neighbours.
pub fn sample_catalogue() -> Result<Vec<MomentTensorRecord>> {
    let region2 = SyntheticRegion {
        region: "2".into(),
        prefix: "R2".into(),
        inliers: 17,
        kappa: [15.0, 15.0, 15.0],
        outliers: vec![(4, [0.0, 0.0, 0.9]), (8, [0.9, 0.0, 0.0]), (12, [-0.9, 0.0, 0.0]), (16, [0.0, 0.0, -0.9])],
    };
    let mut out = synthetic_region(&region2, &reference_frame(), 2)?;
    for (id, prefix, seed) in [("1", "R1", 1u64), ("5", "R5", 5)] {
        let spec = SyntheticRegion { region: id.into(), prefix: prefix.into(), inliers: 6, kappa: [20.0; 3], outliers: vec![] };
        let center = ProjStiefelPoint::new(pfm_core::samplers::haar_orthogonal(&mut rng(seed, 1), 3))?;
        out.extend(synthetic_region(&spec, &center, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_mismatch_reports_the_column() {
        let text = "event_id,m11,m22,m33,m12,m31,m23,region\n";
        match read_moment_tensors(text.as_bytes()) {
            Err(ExperimentError::Parse { line: 1, column: 6, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line_and_column() {
        let text = "event_id,m11,m22,m33,m12,m13,m23,region\na,1,0,-1,0,0,0,2\nb,1,0,-1,x,0,0,2\n";
        match read_moment_tensors(text.as_bytes()) {
            Err(ExperimentError::Parse { line: 3, column: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_rows_are_rejected() {
        let text = "event_id,m11,m22,m33,m12,m13,m23,region\na,1,0,-1,0,NaN,0,\n";
        match read_moment_tensors(text.as_bytes()) {
            Err(ExperimentError::Parse { line: 2, column: 6, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_rows_are_rejected() {
        let text = "event_id,m11,m22,m33,m12,m13,m23,region\na,1,0,-1\n";
        assert!(matches!(read_moment_tensors(text.as_bytes()), Err(ExperimentError::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_region_is_none() {
        let text = "event_id,m11,m22,m33,m12,m13,m23,region\na,1,0,-1,0,0,0,\n";
        let r = read_moment_tensors(text.as_bytes()).unwrap();
        assert_eq!(r[0].region, None);
        assert!(!r[0].trace_warning());
    }

    #[test]
    fn diagonal_tensor_has_canonical_axes() {
        let r = MomentTensorRecord { event_id: "x".into(), components: [1.0, 0.0, -1.0, 0.0, 0.0, 0.0], region: None };
        let f = extract_tbp_frame(&r).unwrap();
        let m = f.representative().matrix();
        assert!((m.abs() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn zero_and_repeated_spectra_are_degenerate() {
        let zero = MomentTensorRecord { event_id: "z".into(), components: [0.0; 6], region: None };
        assert!(matches!(extract_tbp_frame(&zero), Err(PfmError::DegenerateSpectrum(_))));
        let double = MomentTensorRecord { event_id: "d".into(), components: [1.0, 1.0, -2.0, 0.0, 0.0, 0.0], region: None };
        assert!(matches!(extract_tbp_frame(&double), Err(PfmError::DegenerateSpectrum(_))));
    }
}
