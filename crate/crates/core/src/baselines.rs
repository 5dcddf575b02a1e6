//! Competing estimators: intrinsic shape means and medians, median of means,
//! Procrustes alignment and the least-squares frame mean.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, PfmError, Result};
use crate::manifolds::project_stiefel;
use crate::proj_stiefel::ProjStiefelPoint;
use crate::scalar::{lit, tol, Real};
use crate::spectral::sym_eig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions<T: Real> {
    pub tolerance: T,
    pub max_iter: usize,
}

impl<T: Real> Default for IterativeOptions<T> {
    fn default() -> Self {
        Self { tolerance: tol(1e-10), max_iter: 10_000 }
    }
}

/// Output of an iterative baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult<X, T: Real> {
    pub estimate: X,
    /// Final objective (mean squared distance, mean distance, or mean fit).
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

type CVec<T> = DVector<Complex<T>>;

fn cnorm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |s, z| s + z.re * z.re + z.im * z.im).sqrt()
}

fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

fn rscale<T: Real>(v: &CVec<T>, c: T) -> CVec<T> {
    v.map(|z| Complex::new(z.re * c, z.im * c))
}

fn check_unit_sample<T: Real>(data: &[CVec<T>], init: &CVec<T>) -> Result<()> {
    if data.is_empty() {
        return invalid("empty sample");
    }
    let p = init.len();
    for z in data.iter().chain(std::iter::once(init)) {
        if z.len() != p {
            return invalid("pre-shapes have differing dimensions");
        }
        if (cnorm(z) - T::one()).abs() > tol::<T>(1e-8) {
            return invalid("pre-shapes must be unit vectors");
        }
    }
    Ok(())
}

/// Riemannian distance `arccos |z*x|` on `CP^{p−1}`.
pub fn cp_distance<T: Real>(z: &CVec<T>, x: &CVec<T>) -> T {
    let p = z.dotc(x);
    let residual = x - z.map(|c| c * p);
    cnorm(&residual).atan2(modulus(p))
}

/// Horizontal log map at `z` toward `[x]`, and the distance.
fn cp_log<T: Real>(z: &CVec<T>, x: &CVec<T>) -> (CVec<T>, T) {
    let p = z.dotc(x);
    let m = modulus(p);
    let aligned = if m > T::zero() {
        let phase = Complex::new(p.re / m, -p.im / m);
        x.map(|c| c * phase)
    } else {
        x.clone()
    };
    let v = aligned - rscale(z, m);
    let vn = cnorm(&v);
    let theta = vn.atan2(m);
    if vn <= T::default_epsilon() || theta == T::zero() {
        return (CVec::zeros(z.len()), theta);
    }
    (rscale(&v, theta / vn), theta)
}

fn cp_exp<T: Real>(z: &CVec<T>, v: &CVec<T>) -> CVec<T> {
    let t = cnorm(v);
    if t == T::zero() {
        return z.clone();
    }
    let out = rscale(z, t.cos()) + rscale(v, t.sin() / t);
    let n = cnorm(&out);
    rscale(&out, T::one() / n)
}

fn mean_sq<T: Real>(data: &[CVec<T>], z: &CVec<T>) -> T {
    data.iter().fold(T::zero(), |s, x| {
        let d = cp_distance(z, x);
        s + d * d
    }) / lit::<T>(data.len() as f64)
}

fn mean_abs<T: Real>(data: &[CVec<T>], z: &CVec<T>) -> T {
    data.iter().fold(T::zero(), |s, x| s + cp_distance(z, x)) / lit::<T>(data.len() as f64)
}

/// Intrinsic (Fréchet) mean on `CP^{p−1}` by Riemannian gradient descent with Armijo backtracking.
pub fn frechet_mean_cp<T: Real>(
    data: &[CVec<T>],
    init: &CVec<T>,
    opts: &IterativeOptions<T>,
) -> Result<BaselineResult<CVec<T>, T>> {
    check_unit_sample(data, init)?;
    let n = lit::<T>(data.len() as f64);
    let armijo = lit::<T>(1e-4);
    let mut z = init.clone();
    let mut f = mean_sq(data, &z);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut v = CVec::zeros(z.len());
        for x in data {
            v += cp_log(&z, x).0;
        }
        let v = rscale(&v, T::one() / n);
        let g2 = cnorm(&v).powi(2);
        if cnorm(&v) <= opts.tolerance {
            converged = true;
            break;
        }
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand = cp_exp(&z, &rscale(&v, alpha));
            let fc = mean_sq(data, &cand);
            if fc <= f - armijo * alpha * lit::<T>(2.0) * g2 {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= lit::<T>(0.5);
        }
        iterations += 1;
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let step = alpha * cnorm(&v);
        z = cand;
        f = fc;
        if step <= opts.tolerance {
            converged = true;
            break;
        }
    }
    Ok(BaselineResult { estimate: z, objective: f, iterations, converged })
}

/// Intrinsic (Fréchet) median on `CP^{p−1}` by a manifold Weiszfeld iteration.
///
/// Steps follow `exp_z(Σ logᵢ/dᵢ / Σ 1/dᵢ)`, damped in the Vardi–Zhang manner
/// when the iterate sits on data points, and halved while the objective
/// would increase.
pub fn frechet_median_cp<T: Real>(
    data: &[CVec<T>],
    init: &CVec<T>,
    opts: &IterativeOptions<T>,
) -> Result<BaselineResult<CVec<T>, T>> {
    check_unit_sample(data, init)?;
    let guard = tol::<T>(1e-12);
    let n = lit::<T>(data.len() as f64);
    let mut z = init.clone();
    let mut f = mean_abs(data, &z);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut num = CVec::zeros(z.len());
        let mut den = T::zero();
        let mut anchors = T::zero();
        for x in data {
            let (lg, d) = cp_log(&z, x);
            if d <= guard {
                anchors += T::one();
            } else {
                num += rscale(&lg, T::one() / d);
                den += T::one() / d;
            }
        }
        if den == T::zero() {
            converged = true;
            break;
        }
        let mut v = rscale(&num, T::one() / den);
        if anchors > T::zero() {
            let r = cnorm(&num) / n;
            let eta = anchors / n;
            if r <= eta {
                converged = true;
                break;
            }
            v = rscale(&v, T::one() - eta / r);
        }
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand = cp_exp(&z, &rscale(&v, alpha));
            let fc = mean_abs(data, &cand);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= lit::<T>(0.5);
        }
        iterations += 1;
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let step = alpha * cnorm(&v);
        z = cand;
        f = fc;
        if step <= opts.tolerance {
            converged = true;
            break;
        }
    }
    Ok(BaselineResult { estimate: z, objective: f, iterations, converged })
}

/// Splits `0..n` into `m` shuffled groups whose sizes differ by at most one.
pub fn random_partition<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if m == 0 || n < m {
        return invalid(format!("cannot split {n} points into {m} nonempty groups"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let base = n / m;
    let extra = n % m;
    let mut groups = Vec::with_capacity(m);
    let mut start = 0;
    for g in 0..m {
        let len = base + usize::from(g < extra);
        groups.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(groups)
}

/// Median of means: Fréchet means of `m` random groups, then their Fréchet median.
pub fn median_of_means_cp<T: Real, R: Rng + ?Sized>(
    data: &[CVec<T>],
    groups: usize,
    init: &CVec<T>,
    opts: &IterativeOptions<T>,
    rng: &mut R,
) -> Result<BaselineResult<CVec<T>, T>> {
    check_unit_sample(data, init)?;
    let parts = random_partition(data.len(), groups, rng)?;
    let mut means = Vec::with_capacity(groups);
    let mut iterations = 0;
    let mut converged = true;
    for part in &parts {
        let sub: Vec<_> = part.iter().map(|&i| data[i].clone()).collect();
        let m = frechet_mean_cp(&sub, init, opts)?;
        iterations += m.iterations;
        converged &= m.converged;
        means.push(m.estimate);
    }
    let med = frechet_median_cp(&means, init, opts)?;
    Ok(BaselineResult {
        estimate: med.estimate,
        objective: med.objective,
        iterations: iterations + med.iterations,
        converged: converged && med.converged,
    })
}

/// `û e^{−i arg(z₀* û)}`: the representative of `[û]` closest to `z₀`.
pub fn procrustes_align<T: Real>(u: &CVec<T>, z0: &CVec<T>) -> Result<CVec<T>> {
    if u.len() != z0.len() {
        return invalid("dimension mismatch");
    }
    let p = z0.dotc(u);
    let m = modulus(p);
    if m <= tol::<T>(1e-12) {
        return Err(PfmError::AlignmentUndefined);
    }
    let phase = Complex::new(p.re / m, -p.im / m);
    Ok(u.map(|c| c * phase))
}

fn frame_fit<T: Real>(s: &[DMatrix<T>], u: &DMatrix<T>) -> T {
    s.iter().enumerate().fold(T::zero(), |acc, (j, sj)| {
        let c = u.column(j);
        acc + (c.transpose() * sj * c)[0]
    })
}

/// Least-squares frame mean: maximizes `Σⱼ ūⱼᵀ S̄ⱼ uⱼ` with `S̄ⱼ = mean(xⱼxⱼᵀ)`.
///
/// Uses the minorize–maximize update `U ← polar([S̄₁u₁ … S̄_r u_r])`, which
/// never decreases the fit, started from the polar factor of the per-axis
/// leading eigenvectors and from the best-fitting data frame; the better
/// endpoint is returned.
pub fn frame_mean<T: Real>(data: &[ProjStiefelPoint<T>], opts: &IterativeOptions<T>) -> Result<BaselineResult<ProjStiefelPoint<T>, T>> {
    let Some(first) = data.first() else {
        return invalid("empty sample");
    };
    let (k, r) = first.representative().matrix().shape();
    if data.iter().any(|x| x.representative().matrix().shape() != (k, r)) {
        return invalid("frames have differing dimensions");
    }
    let n = lit::<T>(data.len() as f64);
    let mut s = vec![DMatrix::<T>::zeros(k, k); r];
    for x in data {
        let m = x.representative().matrix();
        for (j, sj) in s.iter_mut().enumerate() {
            let c = m.column(j);
            *sj += &c * c.transpose() / n;
        }
    }
    let mut leaders = DMatrix::zeros(k, r);
    for (j, sj) in s.iter().enumerate() {
        leaders.set_column(j, &sym_eig(sj)?.vectors.column(0));
    }
    let mut starts = Vec::new();
    if let Ok(p) = project_stiefel(&leaders) {
        starts.push(p.into_matrix());
    }
    let best_data = data
        .iter()
        .map(|x| x.representative().matrix().clone())
        .max_by(|a, b| frame_fit(&s, a).partial_cmp(&frame_fit(&s, b)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("nonempty sample");
    starts.push(best_data);
    let mut best: Option<BaselineResult<DMatrix<T>, T>> = None;
    for start in starts {
        let run = frame_mean_from(&s, start, opts);
        if best.as_ref().map_or(true, |b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let b = best.expect("at least one start");
    Ok(BaselineResult {
        estimate: ProjStiefelPoint::new(b.estimate)?,
        objective: b.objective,
        iterations: b.iterations,
        converged: b.converged,
    })
}

fn frame_mean_from<T: Real>(s: &[DMatrix<T>], start: DMatrix<T>, opts: &IterativeOptions<T>) -> BaselineResult<DMatrix<T>, T> {
    let (k, r) = start.shape();
    let mut u = start;
    let mut f = frame_fit(s, &u);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut g = DMatrix::zeros(k, r);
        for (j, sj) in s.iter().enumerate() {
            g.set_column(j, &(sj * u.column(j)));
        }
        let Ok(next) = project_stiefel(&g) else {
            converged = true;
            break;
        };
        let next = next.into_matrix();
        let fnext = frame_fit(s, &next);
        iterations += 1;
        let change = (&next - &u).norm();
        if fnext < f {
            converged = true;
            break;
        }
        u = next;
        let gain = fnext - f;
        f = fnext;
        if change <= opts.tolerance || gain <= opts.tolerance * opts.tolerance {
            converged = true;
            break;
        }
    }
    BaselineResult { estimate: u, objective: f, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[(f64, f64)]) -> CVec<f64> {
        let z = DVector::from_iterator(v.len(), v.iter().map(|&(a, b)| Complex::new(a, b)));
        let n = z.norm();
        z / Complex::new(n, 0.0)
    }

    #[test]
    fn procrustes_aligns_phase() {
        let z0 = unit(&[(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]);
        let rotated = z0.map(|c| c * Complex::from_polar(1.0, 1.1));
        let a = procrustes_align(&rotated, &z0).unwrap();
        assert!((a - &z0).norm() < 1e-12);
        let e1 = unit(&[(1.0, 0.0), (0.0, 0.0)]);
        let e2 = unit(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(procrustes_align(&e1, &e2), Err(PfmError::AlignmentUndefined));
    }

    #[test]
    fn mean_of_identical_shapes() {
        let z = unit(&[(1.0, 0.2), (0.3, -0.4), (0.0, 0.5)]);
        let data: Vec<_> = (0..5).map(|j| z.map(|c| c * Complex::from_polar(1.0, j as f64))).collect();
        let init = unit(&[(1.0, 0.0), (0.0, 0.0), (0.1, 0.0)]);
        let m = frechet_mean_cp(&data, &init, &IterativeOptions::default()).unwrap();
        assert!(cp_distance(&m.estimate, &z) < 1e-8);
        let med = frechet_median_cp(&data, &init, &IterativeOptions::default()).unwrap();
        assert!(cp_distance(&med.estimate, &z) < 1e-8);
    }

    #[test]
    fn partition_sizes() {
        let mut rng = crate::samplers::rng(1, 0);
        let parts = random_partition(200, 7, &mut rng).unwrap();
        let mut sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes.first(), Some(&28));
        assert_eq!(sizes.last(), Some(&29));
        let mut all: Vec<usize> = parts.concat();
        all.sort();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
        assert!(random_partition(3, 7, &mut rng).is_err());
    }

    #[test]
    fn frame_mean_of_identical_frames() {
        let x = ProjStiefelPoint::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        let m = frame_mean(&vec![x.clone(); 4], &IterativeOptions::default()).unwrap();
        assert!((m.estimate.representative().matrix() - x.representative().matrix()).amax() < 1e-12);
        assert!((m.objective - 3.0).abs() < 1e-12);
    }
}
