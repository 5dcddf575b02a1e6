#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pfm_core::manifolds::{project_stiefel, CpPoint, GrassmannPoint, ManifoldPoint, StiefelPoint};
use pfm_core::samplers::{complex_normal, haar_orthogonal, SimRng};
use rand_distr::{Distribution, StandardNormal};

pub fn gauss(rng: &mut SimRng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

pub fn sym(rng: &mut SimRng, k: usize) -> DMatrix<f64> {
    let g = gauss(rng, k, k);
    (&g + g.transpose()) * 0.5
}

pub fn herm(rng: &mut SimRng, k: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(k, k, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    (&g + g.adjoint()).map(|z| z * 0.5)
}

pub fn cgauss(rng: &mut SimRng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

pub fn unit_complex(rng: &mut SimRng, p: usize) -> DVector<Complex64> {
    let z = complex_normal(rng, p);
    let n = z.norm();
    z / Complex64::new(n, 0.0)
}

/// Stiefel point near `center`, spread `sigma`.
pub fn stiefel_near(rng: &mut SimRng, center: &DMatrix<f64>, sigma: f64) -> StiefelPoint<f64> {
    let (k, r) = center.shape();
    project_stiefel(&(center + gauss(rng, k, r) * sigma)).unwrap()
}

pub fn grassmann_near(rng: &mut SimRng, basis: &DMatrix<f64>, sigma: f64) -> GrassmannPoint<f64> {
    let q = stiefel_near(rng, basis, sigma);
    GrassmannPoint::from_basis(q.matrix()).unwrap()
}

pub fn cp_near(rng: &mut SimRng, z0: &DVector<Complex64>, sigma: f64) -> CpPoint<f64> {
    let g = complex_normal(rng, z0.len()) * Complex64::new(sigma, 0.0);
    let z = z0 + g;
    let n = z.norm();
    CpPoint::from_vector(&(z / Complex64::new(n, 0.0))).unwrap()
}

pub fn first_columns(k: usize, r: usize) -> DMatrix<f64> {
    DMatrix::identity(k, r)
}

pub fn random_basis(rng: &mut SimRng, k: usize, r: usize) -> DMatrix<f64> {
    haar_orthogonal(rng, k).columns(0, r).into_owned()
}

pub fn stiefel_sample(rng: &mut SimRng, k: usize, r: usize, n: usize, sigma: f64) -> Vec<ManifoldPoint<f64>> {
    let c = random_basis(rng, k, r);
    (0..n).map(|_| ManifoldPoint::Stiefel(stiefel_near(rng, &c, sigma))).collect()
}

pub fn grassmann_sample(rng: &mut SimRng, k: usize, r: usize, n: usize, sigma: f64) -> Vec<ManifoldPoint<f64>> {
    let c = random_basis(rng, k, r);
    (0..n).map(|_| ManifoldPoint::Grassmann(grassmann_near(rng, &c, sigma))).collect()
}

pub fn cp_sample(rng: &mut SimRng, k: usize, n: usize, sigma: f64) -> Vec<ManifoldPoint<f64>> {
    let z0 = unit_complex(rng, k);
    (0..n).map(|_| ManifoldPoint::ComplexProjective(cp_near(rng, &z0, sigma))).collect()
}
