mod common;

use common::{random_basis, stiefel_near, unit_complex};
use nalgebra::DVector;
use num_complex::Complex64;
use pfm_core::baselines::*;
use pfm_core::manifolds::project_stiefel;
use pfm_core::samplers::rng;
use pfm_core::ProjStiefelPoint;

fn geodesic(z: &DVector<Complex64>, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
    let p = (z * Complex64::new(t.cos(), 0.0)) + v * Complex64::new(t.sin(), 0.0);
    let n = p.norm();
    p / Complex64::new(n, 0.0)
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / 2.0
}

#[test]
fn frechet_mean_of_symmetric_pair_is_the_midpoint() {
    let mut r = rng(81, 0);
    let z = unit_complex(&mut r, 3);
    let w = unit_complex(&mut r, 3);
    let v = &w - &z * z.dotc(&w);
    let v = &v / Complex64::new(v.norm(), 0.0);
    let half = 0.3;
    let data = vec![geodesic(&z, &v, -half), geodesic(&z, &v, half)];
    let init = geodesic(&z, &v, 0.05);
    let m = frechet_mean_cp(&data, &init, &IterativeOptions::default()).unwrap();
    assert!(cp_distance(&m.estimate, &z) < 1e-7);
    let obj = |t: f64| data.iter().map(|x| cp_distance(&geodesic(&z, &v, t), x).powi(2)).sum::<f64>() / 2.0;
    let t = golden(obj, -half, half);
    assert!(t.abs() < 1e-6);
    assert!((m.objective - obj(t)).abs() < 1e-12);
}

#[test]
fn single_group_median_of_means_is_the_mean() {
    let mut r = rng(82, 0);
    let z0 = unit_complex(&mut r, 3);
    let data: Vec<_> = (0..30)
        .map(|_| {
            let p = &z0 + common::unit_complex(&mut r, 3) * Complex64::new(0.2, 0.0);
            let n = p.norm();
            p / Complex64::new(n, 0.0)
        })
        .collect();
    let opts = IterativeOptions::default();
    let mean = frechet_mean_cp(&data, &z0, &opts).unwrap();
    let mom = median_of_means_cp(&data, 1, &z0, &opts, &mut rng(82, 1)).unwrap();
    assert!(cp_distance(&mean.estimate, &mom.estimate) < 1e-7);
}

#[test]
fn objectives_ignore_data_phases() {
    let mut r = rng(83, 0);
    let z0 = unit_complex(&mut r, 4);
    let data: Vec<_> = (0..25)
        .map(|_| {
            let p = &z0 + unit_complex(&mut r, 4) * Complex64::new(0.3, 0.0);
            let n = p.norm();
            p / Complex64::new(n, 0.0)
        })
        .collect();
    let spun: Vec<_> = data.iter().enumerate().map(|(j, x)| x * Complex64::from_polar(1.0, j as f64 * 0.37)).collect();
    let opts = IterativeOptions::default();
    let a = frechet_median_cp(&data, &z0, &opts).unwrap();
    let b = frechet_median_cp(&spun, &z0, &opts).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-10);
    assert!(cp_distance(&a.estimate, &b.estimate) < 1e-7);
    let a = frechet_mean_cp(&data, &z0, &opts).unwrap();
    let b = frechet_mean_cp(&spun, &z0, &opts).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-12);
}

#[test]
fn orthogonal_initialization_still_converges_for_clean_data() {
    let mut r = rng(84, 0);
    let z0 = unit_complex(&mut r, 3);
    let data: Vec<_> = (0..50)
        .map(|_| {
            let p = &z0 + unit_complex(&mut r, 3) * Complex64::new(0.1, 0.0);
            let n = p.norm();
            p / Complex64::new(n, 0.0)
        })
        .collect();
    let g = unit_complex(&mut r, 3);
    let orth = &g - &z0 * z0.dotc(&g);
    let orth = &orth / Complex64::new(orth.norm(), 0.0);
    let m = frechet_mean_cp(&data, &orth, &IterativeOptions::default()).unwrap();
    assert!(m.converged);
    assert!(cp_distance(&m.estimate, &z0) < 0.1);
}

#[test]
fn frame_mean_improves_on_its_start_and_is_a_frame() {
    let mut r = rng(85, 0);
    let c = random_basis(&mut r, 3, 3);
    let data: Vec<_> = (0..40).map(|_| ProjStiefelPoint::new(stiefel_near(&mut r, &c, 0.5).into_matrix()).unwrap()).collect();
    let m = frame_mean(&data, &IterativeOptions::default()).unwrap();
    let u = m.estimate.representative().matrix();
    assert!((u.transpose() * u - nalgebra::DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
    let fit = |u: &nalgebra::DMatrix<f64>| -> f64 {
        data.iter()
            .map(|x| (0..3).map(|j| x.representative().matrix().column(j).dot(&u.column(j)).powi(2)).sum::<f64>())
            .sum::<f64>()
            / data.len() as f64
    };
    let mut leaders = nalgebra::DMatrix::zeros(3, 3);
    for j in 0..3 {
        let mut s = nalgebra::DMatrix::<f64>::zeros(3, 3);
        for x in &data {
            let col = x.representative().matrix().column(j).into_owned();
            s += &col * col.transpose();
        }
        let e = pfm_core::spectral::sym_eig(&s).unwrap();
        leaders.set_column(j, &e.vectors.column(0));
    }
    let start = project_stiefel(&leaders).unwrap();
    assert!(m.objective >= fit(start.matrix()) - 1e-12);
    assert!((m.objective - fit(u)).abs() < 1e-12);
}

#[test]
fn procrustes_leaves_a_real_inner_product() {
    let mut r = rng(86, 0);
    for _ in 0..100 {
        let z0 = unit_complex(&mut r, 5);
        let u = unit_complex(&mut r, 5);
        let a = procrustes_align(&u, &z0).unwrap();
        let ip = z0.dotc(&a);
        assert!(ip.im.abs() < 1e-12 && ip.re > 0.0);
        assert!((ip.norm() - z0.dotc(&u).norm()).abs() < 1e-14);
    }
}
