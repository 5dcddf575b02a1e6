//! Random generation: complex Bingham shapes, frame Watson frames and outliers.
//!
//! All randomness flows through [`SimRng`], a ChaCha8 generator addressed by a
//! `(seed, stream)` pair. ChaCha is counter based, so each stream is an
//! independent sequence and parallel replicates can be given their own stream
//! without coordinating.

use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, UnitQuaternion};
use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, PfmError, Result};
use crate::manifolds::StiefelPoint;
use crate::proj_stiefel::ProjStiefelPoint;
use crate::scalar::{lit, Real};
use crate::spectral::{herm_eig, unitary_completion};

pub type SimRng = ChaCha8Rng;

/// Acceptance rate below which rejection samplers give up.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard complex normal vector (`E|zᵢ|² = 1`).
pub fn complex_normal(rng: &mut SimRng, p: usize) -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(p, |_, _| Complex64::new(s * normal(rng), s * normal(rng)))
}

/// Uniform point of the complex unit sphere in `Cᵖ`.
pub fn uniform_complex_sphere(rng: &mut SimRng, p: usize) -> DVector<Complex64> {
    loop {
        let z = complex_normal(rng, p);
        let n = z.norm();
        if n > 1e-300 {
            return z / Complex64::new(n, 0.0);
        }
    }
}

/// Haar-distributed orthogonal `k × k` matrix.
pub fn haar_orthogonal(rng: &mut SimRng, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar-distributed unitary `k × k` matrix.
pub fn haar_unitary(rng: &mut SimRng, k: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(k, k, |_, _| Complex64::new(normal(rng), normal(rng)));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let m = d.norm();
        if m > 0.0 {
            let phase = d / m;
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}

/// Uniform point of `V_{k,r}`.
pub fn uniform_stiefel(rng: &mut SimRng, k: usize, r: usize) -> Result<StiefelPoint<f64>> {
    if r == 0 || r > k {
        return invalid("uniform_stiefel needs 1 <= r <= k");
    }
    StiefelPoint::new(haar_orthogonal(rng, k).columns(0, r).into_owned())
}

/// Uniform rotation of `R³` via a uniform unit quaternion.
fn uniform_rotation3(rng: &mut SimRng) -> Matrix3<f64> {
    let q = Quaternion::new(normal(rng), normal(rng), normal(rng), normal(rng));
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

/// Helmert submatrix `H` (`(k−1) × k`): row `j` holds `j` entries `1/√(j(j+1))`,
/// then `−j/√(j(j+1))`, then zeros. Rows are orthonormal and orthogonal to `1`.
pub fn helmert_submatrix<T: Real>(k: usize) -> DMatrix<T> {
    let mut h = DMatrix::zeros(k.saturating_sub(1), k);
    for j in 1..k {
        let d = lit::<T>((j * (j + 1)) as f64).sqrt();
        for c in 0..j {
            h[(j - 1, c)] = T::one() / d;
        }
        h[(j - 1, j)] = -lit::<T>(j as f64) / d;
    }
    h
}

/// Pre-shape `H c / ‖H c‖` of a landmark configuration `c ∈ Cᵏ`.
pub fn preshape(c: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let k = c.len();
    if k < 3 {
        return invalid("a planar configuration needs at least three landmarks");
    }
    let h = helmert_submatrix::<f64>(k).map(|x| Complex64::new(x, 0.0));
    let z = h * c;
    let n = z.norm();
    if n <= 1e-12 {
        return invalid("configuration is degenerate (all landmarks coincide)");
    }
    Ok(z / Complex64::new(n, 0.0))
}

/// Complex Bingham distribution on the unit sphere of `Cᵖ`, density `∝ exp(z* A z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBingham {
    parameter: DMatrix<Complex64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl ComplexBingham {
    pub fn new(parameter: DMatrix<Complex64>) -> Result<Self> {
        let e = herm_eig(&parameter)?;
        if e.values.len() < 2 {
            return invalid("complex Bingham needs dimension >= 2");
        }
        Ok(Self { parameter, eigenvalues: e.values, eigenvectors: e.vectors })
    }

    /// `A = κ z₀ z₀*`: mode `[z₀]`, every other eigenvalue zero.
    pub fn with_mode(z0: &DVector<Complex64>, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return invalid("concentration must be finite and nonnegative");
        }
        if (z0.norm() - 1.0).abs() > 1e-10 {
            return invalid("mode must be a unit vector");
        }
        let basis = unitary_completion(z0)?;
        let p = z0.len();
        let mut values = DVector::zeros(p);
        values[0] = kappa;
        Ok(Self {
            parameter: z0 * z0.adjoint() * Complex64::new(kappa, 0.0),
            eigenvalues: values,
            eigenvectors: basis,
        })
    }

    pub fn parameter(&self) -> &DMatrix<Complex64> {
        &self.parameter
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Leading eigenvector of the parameter.
    pub fn mode(&self) -> DVector<Complex64> {
        self.eigenvectors.column(0).into_owned()
    }
}

/// Exponential with rate `kappa` truncated to `[0, 1]`, by inversion.
fn truncated_exponential(rng: &mut SimRng, kappa: f64) -> f64 {
    let u: f64 = rng.random();
    if kappa < 1e-12 {
        return u;
    }
    -(u * (-kappa).exp_m1()).ln_1p() / kappa
}

/// Exact draws by the simplex rejection method.
///
/// In the eigenbasis of `A`, the squared moduli `sⱼ` of the coordinates are
/// uniform on the simplex with density tilted by `exp(−Σ_{j≥2} (λ₁−λⱼ) sⱼ)`; the
/// sampler draws `s₂…s_p` as independent truncated exponentials, accepts when
/// their sum is at most one, and attaches independent uniform phases.
pub fn sample_complex_bingham(dist: &ComplexBingham, n: usize, rng: &mut SimRng) -> Result<Vec<DVector<Complex64>>> {
    let p = dist.dim();
    let gaps: Vec<f64> = (1..p).map(|j| dist.eigenvalues[0] - dist.eigenvalues[j]).collect();
    let mut out = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    let mut s = vec![0.0; p];
    while out.len() < n {
        attempts += 1;
        let mut total = 0.0;
        for (j, g) in gaps.iter().enumerate() {
            s[j + 1] = truncated_exponential(rng, *g);
            total += s[j + 1];
        }
        if total <= 1.0 {
            s[0] = 1.0 - total;
            let mut coords = DVector::zeros(p);
            for j in 0..p {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                coords[j] = Complex64::from_polar(s[j].sqrt(), theta);
            }
            out.push(&dist.eigenvectors * coords);
        } else if attempts % 1_000_000 == 0 && (out.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(PfmError::SamplerStalled(out.len() as f64 / attempts as f64));
        }
    }
    Ok(out)
}

/// Frame Watson distribution on `PV_{3,3}`, density `∝ exp(Σⱼ κⱼ (xⱼᵀ mⱼ)²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameWatson {
    kappas: [f64; 3],
    mode: ProjStiefelPoint<f64>,
}

impl FrameWatson {
    pub fn new(kappas: [f64; 3], mode: ProjStiefelPoint<f64>) -> Result<Self> {
        if kappas.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return invalid("frame Watson concentrations must be positive and finite");
        }
        if mode.representative().matrix().shape() != (3, 3) {
            return invalid("frame Watson is implemented for 3 x 3 frames");
        }
        Ok(Self { kappas, mode })
    }

    pub fn kappas(&self) -> [f64; 3] {
        self.kappas
    }

    pub fn mode(&self) -> &ProjStiefelPoint<f64> {
        &self.mode
    }

    /// Log density up to the normalizing constant, for a rotation `R = Mᵀ X`.
    fn log_density_rel(&self, r: &Matrix3<f64>) -> f64 {
        (0..3).map(|j| self.kappas[j] * r[(j, j)] * r[(j, j)]).sum()
    }
}

/// How frame Watson samples are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameWatsonMethod {
    /// Exact: uniform rotations accepted with probability `exp(Σκⱼ((xⱼᵀmⱼ)² − 1))`.
    Rejection,
    /// Random-walk Metropolis with Givens-rotation proposals.
    Metropolis { burn_in: usize },
}

impl Default for FrameWatsonMethod {
    fn default() -> Self {
        Self::Rejection
    }
}

/// Draws plus sampler diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameWatsonDraw {
    pub frames: Vec<ProjStiefelPoint<f64>>,
    pub acceptance_rate: f64,
    /// Thinning interval (Metropolis only; 1 for rejection).
    pub thin: usize,
    /// Lag-one autocorrelation of the log density along the retained chain (Metropolis only).
    pub lag1_autocorrelation: Option<f64>,
    /// The retained chain still shows lag-one autocorrelation above 0.5.
    pub poorly_mixed: bool,
}

pub fn sample_frame_watson(
    dist: &FrameWatson,
    n: usize,
    rng: &mut SimRng,
    method: FrameWatsonMethod,
) -> Result<FrameWatsonDraw> {
    match method {
        FrameWatsonMethod::Rejection => frame_watson_rejection(dist, n, rng),
        FrameWatsonMethod::Metropolis { burn_in } => frame_watson_metropolis(dist, n, rng, burn_in),
    }
}

fn to_frame(dist: &FrameWatson, r: &Matrix3<f64>) -> ProjStiefelPoint<f64> {
    let m = dist.mode.representative().matrix();
    let x = m * DMatrix::from_column_slice(3, 3, r.as_slice());
    ProjStiefelPoint::from_stiefel(&StiefelPoint::new_unchecked(x))
}

fn frame_watson_rejection(dist: &FrameWatson, n: usize, rng: &mut SimRng) -> Result<FrameWatsonDraw> {
    let bound: f64 = dist.kappas.iter().sum();
    let mut frames = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    while frames.len() < n {
        attempts += 1;
        let r = uniform_rotation3(rng);
        let log_accept = dist.log_density_rel(&r) - bound;
        let u: f64 = rng.random();
        if u.ln() <= log_accept {
            frames.push(to_frame(dist, &r));
        } else if attempts % 10_000_000 == 0 && (frames.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(PfmError::SamplerStalled(frames.len() as f64 / attempts as f64));
        }
    }
    Ok(FrameWatsonDraw {
        frames,
        acceptance_rate: n as f64 / attempts.max(1) as f64,
        thin: 1,
        lag1_autocorrelation: None,
        poorly_mixed: false,
    })
}

fn givens_step(rng: &mut SimRng, step: f64) -> Matrix3<f64> {
    let plane = rng.random_range(0..3usize);
    let (i, j) = [(0, 1), (0, 2), (1, 2)][plane];
    let theta = step * normal(rng);
    let (c, s) = (theta.cos(), theta.sin());
    let mut g = Matrix3::identity();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

fn lag1(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

fn frame_watson_metropolis(dist: &FrameWatson, n: usize, rng: &mut SimRng, burn_in: usize) -> Result<FrameWatsonDraw> {
    let kmax = dist.kappas.iter().cloned().fold(0.0, f64::max);
    let mut step = (1.0 / kmax.max(1.0)).sqrt().min(1.0);
    let mut current = Matrix3::identity();
    let mut logp = dist.log_density_rel(&current);
    let mut accepted = 0usize;
    let mut total = 0usize;
    let advance = |cur: &mut Matrix3<f64>, lp: &mut f64, step: f64, rng: &mut SimRng| -> bool {
        let proposal = givens_step(rng, step) * *cur;
        let lq = dist.log_density_rel(&proposal);
        let u: f64 = rng.random();
        if u.ln() <= lq - *lp {
            *cur = proposal;
            *lp = lq;
            true
        } else {
            false
        }
    };
    // Burn-in with step adaptation toward roughly 30% acceptance.
    let mut window_acc = 0;
    for t in 1..=burn_in {
        if advance(&mut current, &mut logp, step, rng) {
            window_acc += 1;
        }
        if t % 100 == 0 {
            let rate = window_acc as f64 / 100.0;
            step *= if rate > 0.3 { 1.2 } else { 0.8 };
            step = step.clamp(1e-4, std::f64::consts::PI);
            window_acc = 0;
        }
    }
    let pilot_len = 2000;
    let mut pilot = Vec::with_capacity(pilot_len);
    for _ in 0..pilot_len {
        total += 1;
        if advance(&mut current, &mut logp, step, rng) {
            accepted += 1;
        }
        pilot.push(logp);
    }
    let rho = lag1(&pilot).clamp(0.0, 0.999);
    let thin = if rho <= 0.05 { 1 } else { ((0.05f64).ln() / rho.ln()).ceil() as usize }.max(1);
    let mut frames = Vec::with_capacity(n);
    let mut kept = Vec::with_capacity(n);
    while frames.len() < n {
        for _ in 0..thin {
            total += 1;
            if advance(&mut current, &mut logp, step, rng) {
                accepted += 1;
            }
        }
        kept.push(logp);
        frames.push(to_frame(dist, &current));
    }
    let retained = lag1(&kept);
    if retained > 0.5 {
        log::warn!("frame Watson chain poorly mixed (lag-1 autocorrelation {retained:.3})");
    }
    Ok(FrameWatsonDraw {
        frames,
        acceptance_rate: accepted as f64 / total.max(1) as f64,
        thin,
        lag1_autocorrelation: Some(retained),
        poorly_mixed: retained > 0.5,
    })
}

/// Outlying shapes: complex normal draws projected onto the orthogonal complement of `z₀`.
pub fn shape_outliers(z0: &DVector<Complex64>, n: usize, rng: &mut SimRng) -> Result<Vec<DVector<Complex64>>> {
    if (z0.norm() - 1.0).abs() > 1e-10 {
        return invalid("mode must be a unit vector");
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g = complex_normal(rng, z0.len());
        let v = &g - z0 * z0.dotc(&g);
        let m = v.norm();
        if m > 1e-12 {
            out.push(v / Complex64::new(m, 0.0));
        }
    }
    Ok(out)
}

/// The fixed outlier frame `[m̃₁, m̃₂, m̃₃]`, with `m̃₁ = (1,1,1)/√3`.
pub fn frame_outlier() -> ProjStiefelPoint<f64> {
    let s3 = 3f64.sqrt();
    let cols = [
        [1.0 / s3, 1.0 / s3, 1.0 / s3],
        [-2.0 * s3 / 6.0, (s3 + 3.0) / 6.0, (s3 - 3.0) / 6.0],
        [-2.0 * s3 / 6.0, (s3 - 3.0) / 6.0, (s3 + 3.0) / 6.0],
    ];
    let m = DMatrix::from_fn(3, 3, |i, j| cols[j][i]);
    ProjStiefelPoint::new(m).expect("outlier frame is orthonormal")
}

/// Replaces a uniformly chosen subset of `outliers.len()` entries of `sample`.
///
/// Returns the replaced positions in increasing order.
pub fn contaminate<X>(sample: &mut [X], outliers: Vec<X>, rng: &mut SimRng) -> Result<Vec<usize>> {
    let n = sample.len();
    let n1 = outliers.len();
    if n1 > n {
        return invalid(format!("cannot place {n1} outliers in a sample of {n}"));
    }
    let mut idx = sample_indices(rng, n, n1).into_vec();
    idx.sort_unstable();
    for (pos, x) in idx.iter().zip(outliers) {
        sample[*pos] = x;
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmert_rows_orthonormal() {
        for k in 3..8 {
            let h = helmert_submatrix::<f64>(k);
            assert!((&h * h.transpose() - DMatrix::identity(k - 1, k - 1)).amax() < 1e-14);
            assert!((&h * DVector::from_element(k, 1.0)).amax() < 1e-14);
        }
    }

    #[test]
    fn preshape_invariances() {
        let c = DVector::from_vec(vec![
            Complex64::new(0.29, -0.29),
            Complex64::new(0.29, 0.57),
            Complex64::new(-0.01, 0.01),
            Complex64::new(-0.57, -0.29),
        ]);
        let z = preshape(&c).unwrap();
        let moved = c.map(|x| x * Complex64::new(2.5, 0.0) + Complex64::new(1.0, -3.0));
        let z2 = preshape(&moved).unwrap();
        assert!((z - z2).norm() < 1e-12);
        let flat = DVector::from_element(4, Complex64::new(1.0, 2.0));
        assert!(preshape(&flat).is_err());
    }

    #[test]
    fn outlier_frame_is_rotated_identity() {
        let m = frame_outlier();
        let x = m.representative().matrix();
        assert!((x.transpose() * x - DMatrix::identity(3, 3)).amax() < 1e-15);
        assert!((x[(0, 0)] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn outliers_are_orthogonal_to_mode() {
        let mut r = rng(7, 0);
        let z0 = uniform_complex_sphere(&mut r, 5);
        for z in shape_outliers(&z0, 20, &mut r).unwrap() {
            assert!(z0.dotc(&z).norm() < 1e-12);
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bingham_concentrates() {
        let mut r = rng(1, 2);
        let z0 = uniform_complex_sphere(&mut r, 3);
        let dist = ComplexBingham::with_mode(&z0, 150.0).unwrap();
        let draws = sample_complex_bingham(&dist, 2000, &mut r).unwrap();
        let mean_gap: f64 = draws.iter().map(|z| 1.0 - z0.dotc(z).norm_sqr()).sum::<f64>() / 2000.0;
        // E(1 − |z₀*z|²) = E Σ_{j≥2} sⱼ; each sⱼ is a truncated Exp(150) with mean ≈ 1/150.
        assert!((mean_gap - 2.0 / 150.0).abs() < 0.1 * 2.0 / 150.0, "{mean_gap}");
    }

    #[test]
    fn contaminate_replaces_exactly() {
        let mut r = rng(3, 0);
        let mut xs: Vec<i32> = (0..10).collect();
        let idx = contaminate(&mut xs, vec![-1; 4], &mut r).unwrap();
        assert_eq!(idx.len(), 4);
        assert_eq!(xs.iter().filter(|x| **x == -1).count(), 4);
        assert!(contaminate(&mut xs, vec![0; 11], &mut r).is_err());
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<f64> = (0..5).map(|_| rng(9, 4).random()).collect();
        let b: Vec<f64> = (0..5).map(|_| rng(9, 4).random()).collect();
        assert_eq!(a, b);
        let mut r1 = rng(9, 4);
        let mut r2 = rng(9, 5);
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }
}
