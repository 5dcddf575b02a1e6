mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use pfm_core::manifolds::{pfm, ManifoldPoint};
use pfm_core::median::tuple_frobenius_median;
use pfm_core::proj_stiefel::embed_frame;
use pfm_core::samplers::{rng, uniform_stiefel};
use pfm_core::{frobenius_median, spatial_median, AmbientMatrix, MedianOptions, ProjStiefelPoint, WeightedSample};
use rand::Rng;

fn planar(points: &[[f64; 2]]) -> WeightedSample<f64> {
    let cols: Vec<_> = points.iter().map(|p| DVector::from_vec(p.to_vec())).collect();
    WeightedSample::from_vectors(&cols, None).unwrap()
}

fn objective(points: &[[f64; 2]], x: f64, y: f64) -> f64 {
    points.iter().map(|p| (p[0] - x).hypot(p[1] - y)).sum()
}

/// Successively refined 21×21 grids around the incumbent minimum.
fn nested_grid(points: &[[f64; 2]]) -> (f64, f64) {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        lo_x = lo_x.min(p[0]);
        hi_x = hi_x.max(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_y = hi_y.max(p[1]);
    }
    let (mut cx, mut cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
    let mut half = (hi_x - lo_x).max(hi_y - lo_y);
    while half > 1e-9 {
        let step = half / 10.0;
        let mut best = (f64::INFINITY, cx, cy);
        for i in -10..=10 {
            for j in -10..=10 {
                let (x, y) = (cx + i as f64 * step, cy + j as f64 * step);
                let f = objective(points, x, y);
                if f < best.0 {
                    best = (f, x, y);
                }
            }
        }
        cx = best.1;
        cy = best.2;
        half = 4.0 * step;
    }
    (cx, cy)
}

#[test]
fn matches_nested_grid_on_random_planar_instances() {
    let mut r = rng(31, 0);
    let opts = MedianOptions::default();
    for _ in 0..50 {
        let n = r.random_range(4..=9);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let m = spatial_median(&planar(&pts), &opts).unwrap();
        let (gx, gy) = nested_grid(&pts);
        let err = (m.median[0] - gx).hypot(m.median[1] - gy);
        assert!(err <= 1e-5, "median {:?} vs grid ({gx}, {gy})", m.median.as_slice());
    }
}

#[test]
fn fermat_point_sees_vertices_at_120_degrees() {
    let pts = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]];
    let m = spatial_median(&planar(&pts), &MedianOptions::default()).unwrap();
    let dirs: Vec<DVector<f64>> = pts
        .iter()
        .map(|p| {
            let d = DVector::from_vec(vec![p[0] - m.median[0], p[1] - m.median[1]]);
            d.normalize()
        })
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            let angle = dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0).acos();
            assert!((angle - 2.0 * std::f64::consts::FRAC_PI_3).abs() <= 1e-4);
        }
    }
}

#[test]
fn gross_outliers_do_not_break_the_median() {
    let mut r = rng(32, 0);
    let delta = 1e-2;
    let center = DVector::from_vec(vec![0.5, -0.25, 2.0]);
    let mut pts = Vec::new();
    for _ in 0..20 {
        let g = gauss(&mut r, 3, 1).column(0).normalize() * (delta * r.random::<f64>());
        pts.push(&center + g);
    }
    for _ in 0..9 {
        pts.push(&center + gauss(&mut r, 3, 1).column(0).normalize() * 1e3);
    }
    let m = spatial_median(&WeightedSample::from_vectors(&pts, None).unwrap(), &MedianOptions::default()).unwrap();
    assert!((m.median - center).norm() <= 5.0 * delta);
}

#[test]
fn majority_atom_absorbs_the_median() {
    let mut r = rng(33, 0);
    let a = sym(&mut r, 3);
    let b = sym(&mut r, 3);
    let data = vec![AmbientMatrix::Symmetric(a.clone()), AmbientMatrix::Symmetric(a.clone()), AmbientMatrix::Symmetric(b.clone())];
    let m = frobenius_median(&data, &MedianOptions::default()).unwrap();
    let AmbientMatrix::Symmetric(med) = &m.median else { panic!("structure lost") };
    assert!((med - &a).norm() <= 1e-9);
    // One-dimensional oracle along the segment: f(t) = 2t‖d‖ + (1 − t)‖d‖ grows with t.
    let d = (&b - &a).norm();
    let f = |t: f64| 2.0 * t * d + (1.0 - t) * d;
    for i in 1..=100 {
        assert!(f(i as f64 / 100.0) > f(0.0));
    }
}

#[test]
fn stiefel_majority_gives_that_point() {
    let mut r = rng(34, 0);
    let x = uniform_stiefel(&mut r, 3, 2).unwrap();
    let y = uniform_stiefel(&mut r, 3, 2).unwrap();
    let data = vec![
        ManifoldPoint::Stiefel(x.clone()),
        ManifoldPoint::Stiefel(x.clone()),
        ManifoldPoint::Stiefel(x.clone()),
        ManifoldPoint::Stiefel(y),
    ];
    let est = pfm(&data, &MedianOptions::default()).unwrap().estimate;
    let ManifoldPoint::Stiefel(e) = est else { panic!() };
    assert!((e.matrix() - x.matrix()).norm() <= 1e-9);
}

#[test]
fn weiszfeld_descent_is_monotone() {
    let mut r = rng(35, 0);
    for _ in 0..30 {
        let n = r.random_range(5..40);
        let pts: Vec<_> = (0..n).map(|_| gauss(&mut r, 4, 1).column(0).into_owned()).collect();
        let m = spatial_median(&WeightedSample::from_vectors(&pts, None).unwrap(), &MedianOptions::default().with_trace())
            .unwrap();
        let trace = m.trace.unwrap();
        assert!(!trace.is_empty());
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 64.0 * f64::EPSILON), "objective rose {} -> {}", w[0], w[1]);
        }
        assert!(m.converged && m.gap <= 1e-10);
    }
}

#[test]
fn tuple_median_is_locally_optimal() {
    let mut r = rng(36, 0);
    let frames: Vec<_> = (0..5).map(|_| ProjStiefelPoint::new(uniform_stiefel(&mut r, 3, 3).unwrap().into_matrix()).unwrap()).collect();
    let data: Vec<Vec<DMatrix<f64>>> = frames.iter().map(embed_frame).collect();
    let m = tuple_frobenius_median(&data, &MedianOptions::default()).unwrap();
    let obj = |b: &[DMatrix<f64>]| -> f64 {
        data.iter().map(|t| t.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt()).sum()
    };
    let at = obj(&m.median);
    let mean: Vec<DMatrix<f64>> =
        (0..3).map(|j| data.iter().map(|t| t[j].clone()).fold(DMatrix::zeros(3, 3), |a, b| a + b) / 5.0).collect();
    assert!(at <= obj(&mean));
    for _ in 0..20 {
        let dir: Vec<DMatrix<f64>> = (0..3).map(|_| sym(&mut r, 3)).collect();
        for step in [-1e-2, -1e-3, -1e-4, 1e-4, 1e-3, 1e-2] {
            let moved: Vec<_> = m.median.iter().zip(&dir).map(|(b, d)| b + d * step).collect();
            assert!(obj(&moved) >= at - 1e-9);
        }
    }
}

#[test]
fn median_matrix_objective_equals_vectorized_objective() {
    let mut r = rng(37, 0);
    let data: Vec<AmbientMatrix<f64>> = grassmann_sample(&mut r, 4, 2, 12, 0.5).iter().map(ManifoldPoint::embed).collect();
    let m = frobenius_median(&data, &MedianOptions::default()).unwrap();
    let direct: f64 = data.iter().map(|x| x.sub(&m.median).unwrap().frobenius_norm()).sum::<f64>() / 12.0;
    assert!((direct - m.objective).abs() <= 1e-12, "{direct} vs {}", m.objective);
}

