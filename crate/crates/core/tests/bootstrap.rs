use nalgebra::DMatrix;
use pfm_core::bootstrap::*;
use pfm_core::samplers::{frame_outlier, rng, sample_frame_watson, FrameWatson, FrameWatsonMethod};
use pfm_core::ProjStiefelPoint;

fn watson_sample(seed: u64, n: usize) -> Vec<ProjStiefelPoint<f64>> {
    let mode = ProjStiefelPoint::new(DMatrix::identity(3, 3)).unwrap();
    let dist = FrameWatson::new([5.0; 3], mode).unwrap();
    sample_frame_watson(&dist, n, &mut rng(seed, 0), FrameWatsonMethod::Rejection).unwrap().frames
}

#[test]
fn fixed_seed_reports_are_bit_identical() {
    let data = watson_sample(91, 40);
    let opts = BootstrapOptions { replicates: 60, seed: 5, ..Default::default() };
    let a = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    let b = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let other = frame_bootstrap(&data, FrameEstimator::Median, &BootstrapOptions { seed: 6, ..opts }).unwrap();
    assert_ne!(a.per_axis_se, other.per_axis_se);
}

#[test]
fn identical_data_have_zero_standard_errors() {
    let x = frame_outlier();
    let data = vec![x; 10];
    let opts = BootstrapOptions { replicates: 25, ..Default::default() };
    for est in [FrameEstimator::Mean, FrameEstimator::Median] {
        let rep = frame_bootstrap(&data, est, &opts).unwrap();
        assert_eq!(rep.failures, 0);
        assert!(rep.per_axis_se.iter().all(|s| *s == 0.0), "{:?}", rep.per_axis_se);
        assert!(rep.ellipses.unwrap().iter().all(|e| e.degenerate));
    }
}

#[test]
fn two_replicates_give_a_flagged_region() {
    let data = watson_sample(92, 30);
    let opts = BootstrapOptions { replicates: 2, ..Default::default() };
    let rep = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    let ellipses = rep.ellipses.unwrap();
    assert_eq!(ellipses.len(), 3);
    assert!(ellipses.iter().all(|e| e.degenerate));
}

#[test]
fn regions_contain_replicates_at_the_nominal_rate() {
    let data = watson_sample(93, 60);
    let opts = BootstrapOptions { replicates: 200, seed: 1, ..Default::default() };
    let rep = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    for (j, e) in rep.ellipses.as_ref().unwrap().iter().enumerate() {
        assert!(!e.degenerate);
        let inside = rep.replicates.iter().filter(|x| e.contains(&x.axis(j))).count();
        assert!(inside as f64 / rep.replicates.len() as f64 >= 0.95);
        let c = &e.covariance;
        assert!(c[(0, 0)] >= 0.0 && c.determinant() >= 0.0);
    }
}

#[test]
fn sign_alignment_does_not_change_errors() {
    let data = watson_sample(94, 30);
    let flipped: Vec<_> = data
        .iter()
        .map(|x| ProjStiefelPoint::new(-x.representative().matrix()).unwrap())
        .collect();
    let opts = BootstrapOptions { replicates: 30, seed: 3, level: None, ..Default::default() };
    let a = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    let b = frame_bootstrap(&flipped, FrameEstimator::Median, &opts).unwrap();
    assert_eq!(a.per_axis_se, b.per_axis_se);
}

fn ellipse_area(n: usize, seed: u64) -> f64 {
    let data = watson_sample(seed, n);
    let opts = BootstrapOptions { replicates: 100, seed, ..Default::default() };
    let rep = frame_bootstrap(&data, FrameEstimator::Median, &opts).unwrap();
    let e = &rep.ellipses.unwrap()[0];
    std::f64::consts::PI * e.radius2 * e.covariance.determinant().sqrt()
}

#[test]
fn regions_shrink_with_sample_size() {
    let mut small: Vec<f64> = (0..9).map(|s| ellipse_area(50, 100 + s)).collect();
    let mut large: Vec<f64> = (0..9).map(|s| ellipse_area(200, 200 + s)).collect();
    small.sort_by(f64::total_cmp);
    large.sort_by(f64::total_cmp);
    assert!(large[4] < small[4]);
}
