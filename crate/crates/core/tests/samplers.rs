mod common;

use common::unit_complex;
use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use pfm_core::manifolds::axial_angle;
use pfm_core::samplers::*;
use pfm_core::ProjStiefelPoint;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn flat_bingham_is_uniform() {
    let p = 3;
    let n = 10_000;
    let dist = ComplexBingham::new(DMatrix::zeros(p, p)).unwrap();
    let xs = sample_complex_bingham(&dist, n, &mut rng(61, 0)).unwrap();
    let mut m = DMatrix::<Complex64>::zeros(p, p);
    for x in &xs {
        m += x * x.adjoint();
    }
    m /= Complex64::new(n as f64, 0.0);
    let target = DMatrix::<Complex64>::identity(p, p) / Complex64::new(p as f64, 0.0);
    assert!((m - target).iter().all(|z| z.norm() <= 5.0 / (n as f64).sqrt()));
}

#[test]
fn concentrated_bingham_hugs_its_mode() {
    let mut r = rng(62, 0);
    let z0 = unit_complex(&mut r, 3);
    let dist = ComplexBingham::with_mode(&z0, 150.0).unwrap();
    let xs = sample_complex_bingham(&dist, 5000, &mut r).unwrap();
    let mean: f64 = xs.iter().map(|x| z0.dotc(x).norm_sqr()).sum::<f64>() / xs.len() as f64;
    assert!(mean >= 0.95, "mean |z0* x|^2 = {mean}");
    assert!(xs.iter().all(|x| (x.norm() - 1.0).abs() <= 1e-10));
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn bingham_law_follows_its_mode_under_unitary_maps() {
    let mut r = rng(63, 0);
    let z0 = unit_complex(&mut r, 4);
    let u = haar_unitary(&mut r, 4);
    let uz = &u * &z0;
    let a = sample_complex_bingham(&ComplexBingham::with_mode(&z0, 30.0).unwrap(), 3000, &mut rng(63, 1)).unwrap();
    let b = sample_complex_bingham(&ComplexBingham::with_mode(&uz, 30.0).unwrap(), 3000, &mut rng(63, 2)).unwrap();
    let sa: Vec<f64> = a.iter().map(|x| z0.dotc(x).norm()).collect();
    let sb: Vec<f64> = b.iter().map(|x| uz.dotc(x).norm()).collect();
    let d = ks_statistic(sa, sb);
    // 0.1% critical value of the two-sample statistic.
    assert!(d <= 1.95 * (2.0 / 3000.0f64).sqrt(), "KS statistic {d}");
}

fn identity_frame() -> ProjStiefelPoint<f64> {
    ProjStiefelPoint::new(DMatrix::identity(3, 3)).unwrap()
}

#[test]
fn weak_frame_watson_is_nearly_uniform() {
    let n = 10_000;
    let dist = FrameWatson::new([1e-9; 3], identity_frame()).unwrap();
    let draw = sample_frame_watson(&dist, n, &mut rng(64, 0), FrameWatsonMethod::Rejection).unwrap();
    for j in 0..3 {
        let mut m = DMatrix::<f64>::zeros(3, 3);
        for f in &draw.frames {
            let x = f.axis(j);
            m += &x * x.transpose();
        }
        m /= n as f64;
        assert!((m - DMatrix::identity(3, 3) / 3.0).amax() <= 5.0 / (n as f64).sqrt());
    }
}

fn axis_moments(frames: &[ProjStiefelPoint<f64>]) -> Vec<f64> {
    (0..3)
        .map(|j| frames.iter().map(|f| f.axis(j)[j].powi(2)).sum::<f64>() / frames.len() as f64)
        .collect()
}

/// The exact rejection sampler and the Metropolis chain target the same law.
#[test]
fn rejection_and_metropolis_agree_on_moments() {
    let dist = FrameWatson::new([5.0, 3.0, 1.0], identity_frame()).unwrap();
    let n = 6000;
    let exact = sample_frame_watson(&dist, n, &mut rng(65, 0), FrameWatsonMethod::Rejection).unwrap();
    let chain = sample_frame_watson(&dist, n, &mut rng(65, 1), FrameWatsonMethod::Metropolis { burn_in: 1000 }).unwrap();
    assert!(chain.lag1_autocorrelation.unwrap() < 0.1);
    assert!(!chain.poorly_mixed);
    let a = axis_moments(&exact.frames);
    let b = axis_moments(&chain.frames);
    for j in 0..3 {
        assert!((a[j] - b[j]).abs() <= 0.03, "axis {j}: {} vs {}", a[j], b[j]);
    }
}

fn within(f: &ProjStiefelPoint<f64>, g: &DMatrix<f64>, delta: f64) -> bool {
    (0..3).all(|j| axial_angle(&f.axis(j), &g.column(j).into_owned()) <= delta)
}

#[test]
fn frame_watson_visit_ratio_matches_density_ratio() {
    let kappas = [2.0, 1.0, 0.5];
    let dist = FrameWatson::new(kappas, identity_frame()).unwrap();
    let draws = sample_frame_watson(&dist, 1_000_000, &mut rng(66, 0), FrameWatsonMethod::Rejection).unwrap();
    let f1 = DMatrix::<f64>::identity(3, 3);
    let t: f64 = 0.9;
    let rot = Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
    let f2 = DMatrix::from_column_slice(3, 3, rot.as_slice());
    let delta = 0.15;
    let c1 = draws.frames.iter().filter(|f| within(f, &f1, delta)).count() as f64;
    let c2 = draws.frames.iter().filter(|f| within(f, &f2, delta)).count() as f64;
    let ld = |g: &DMatrix<f64>| (0..3).map(|j| kappas[j] * g[(j, j)].powi(2)).sum::<f64>();
    let expect = (ld(&f1) - ld(&f2)).exp();
    let ratio = c1 / c2;
    assert!((ratio / expect - 1.0).abs() <= 0.2, "visit ratio {ratio} vs density ratio {expect}");
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let dist = FrameWatson::new([5.0; 3], identity_frame()).unwrap();
    let a = sample_frame_watson(&dist, 20, &mut rng(67, 3), FrameWatsonMethod::Rejection).unwrap();
    let b = sample_frame_watson(&dist, 20, &mut rng(67, 3), FrameWatsonMethod::Rejection).unwrap();
    let c = sample_frame_watson(&dist, 20, &mut rng(67, 4), FrameWatsonMethod::Rejection).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.frames, c.frames);
}

#[test]
fn sampled_frames_are_orthonormal() {
    let dist = FrameWatson::new([50.0, 25.0, 5.0], identity_frame()).unwrap();
    for method in [FrameWatsonMethod::Rejection, FrameWatsonMethod::Metropolis { burn_in: 200 }] {
        let d = sample_frame_watson(&dist, 200, &mut rng(68, 0), method).unwrap();
        for f in &d.frames {
            let m = f.representative().matrix();
            assert!((m.transpose() * m - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-10);
        }
    }
}

#[test]
fn shape_outliers_span_the_complement() {
    let mut r = rng(69, 0);
    let k = 5;
    let z0 = unit_complex(&mut r, k);
    let out = shape_outliers(&z0, 2 * (k - 2), &mut r).unwrap();
    let mut s = DMatrix::<Complex64>::zeros(k, k);
    for x in &out {
        assert!(z0.dotc(x).norm() <= 1e-10);
        assert!((pfm_core::manifolds::angular_error(x, &z0).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        s += x * x.adjoint();
    }
    let e = pfm_core::spectral::herm_eig(&s).unwrap();
    assert!(e.values[k - 2] > 1e-6, "complement not spanned: {}", e.values);
    assert!(e.values[k - 1].abs() < 1e-10);
}

#[test]
fn contamination_indices_are_uniform() {
    let n = 10;
    let reps = 3000;
    let mut counts = vec![0.0; n];
    let mut r = rng(70, 0);
    for _ in 0..reps {
        let mut sample = vec![0u8; n];
        let idx = contaminate(&mut sample, vec![1u8; 3], &mut r).unwrap();
        assert_eq!(sample.iter().filter(|x| **x == 1).count(), 3);
        for i in idx {
            counts[i] += 1.0;
        }
    }
    let expect = reps as f64 * 3.0 / n as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
    let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi-square {chi2}, p = {p}");
}

#[test]
fn contamination_edges() {
    let mut r = rng(71, 0);
    let mut s = vec![0u8; 4];
    assert!(contaminate(&mut s, vec![], &mut r).unwrap().is_empty());
    assert_eq!(s, vec![0; 4]);
    assert_eq!(contaminate(&mut s, vec![1; 4], &mut r).unwrap(), vec![0, 1, 2, 3]);
    assert!(contaminate(&mut s, vec![1; 5], &mut r).is_err());
}

#[test]
fn shape_one_preshape_is_unit() {
    let c = [(0.29, -0.29), (0.29, 0.57), (-0.01, 0.01), (-0.57, -0.29)];
    let v = DVector::from_iterator(4, c.iter().map(|&(a, b)| Complex64::new(a, b)));
    let z = preshape(&v).unwrap();
    assert_eq!(z.len(), 3);
    assert!((z.norm() - 1.0).abs() < 1e-14);
    let rotated = preshape(&v.map(|x| x * Complex64::from_polar(1.0, 0.7))).unwrap();
    assert!((rotated - z.map(|x| x * Complex64::from_polar(1.0, 0.7))).norm() < 1e-14);
}
