//! Weighted spatial (Frobenius) medians via the Vardi–Zhang modified Weiszfeld iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::scalar::{lit, tol, Real};
use crate::vectorize::AmbientMatrix;

/// Distances below this (relative to the data scale) mark an iterate as sitting on a data point.
pub const ANCHOR_GUARD: f64 = 1e-14;

/// Weighted point cloud stored column-wise (`dim × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<T: Real> {
    points: DMatrix<T>,
    weights: Vec<T>,
}

impl<T: Real> WeightedSample<T> {
    /// Weights must be nonnegative and sum to one within `1e-12`, or within
    /// `n·ε` when rounding in the sum of `n` weights is larger.
    pub fn new(points: DMatrix<T>, weights: Vec<T>) -> Result<Self> {
        if points.ncols() == 0 || points.nrows() == 0 {
            return invalid("sample must contain at least one point of positive dimension");
        }
        if weights.len() != points.ncols() {
            return invalid("one weight per point required");
        }
        if !points.iter().all(|x| x.is_finite()) {
            return invalid("sample has non-finite coordinates");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return invalid("weights must be finite and nonnegative");
        }
        let total = weights.iter().fold(T::zero(), |s, w| s + *w);
        let slack = tol::<T>(1e-12).max(T::default_epsilon() * lit::<T>(weights.len() as f64));
        if (total - T::one()).abs() > slack {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: DMatrix<T>) -> Result<Self> {
        let n = points.ncols();
        if n == 0 {
            return invalid("empty sample");
        }
        let w = T::one() / lit::<T>(n as f64);
        Self::new(points, vec![w; n])
    }

    pub fn from_vectors(points: &[DVector<T>], weights: Option<Vec<T>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return invalid("empty sample");
        };
        if points.iter().any(|p| p.len() != first.len()) {
            return invalid("points have differing dimensions");
        }
        let m = DMatrix::from_columns(points);
        match weights {
            Some(w) => Self::new(m, w),
            None => Self::uniform(m),
        }
    }

    pub fn points(&self) -> &DMatrix<T> {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    /// `Σ wᵢ ‖xᵢ − y‖`.
    pub fn objective(&self, y: &DVector<T>) -> T {
        let mut f = T::zero();
        for (i, w) in self.weights.iter().enumerate() {
            f += *w * (self.points.column(i) - y).norm();
        }
        f
    }

    fn mean(&self) -> DVector<T> {
        let mut m = DVector::zeros(self.dim());
        for (i, w) in self.weights.iter().enumerate() {
            m.axpy(*w, &self.points.column(i), T::one());
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianOptions<T: Real> {
    /// Relative iterate-change tolerance.
    pub tolerance: T,
    pub max_iter: usize,
    /// Keep the objective after every iteration.
    pub record_trace: bool,
}

impl<T: Real> Default for MedianOptions<T> {
    fn default() -> Self {
        Self { tolerance: tol(1e-10), max_iter: 10_000, record_trace: false }
    }
}

impl<T: Real> MedianOptions<T> {
    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// Outcome of a median computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult<M, T: Real> {
    pub median: M,
    pub iterations: usize,
    /// Length of the final Weiszfeld step relative to the data scale.
    ///
    /// The step is the objective gradient preconditioned by `1/Σ wᵢ/dᵢ`, so
    /// it vanishes exactly at the median. When the iteration stops on a data
    /// point that satisfies the anchor optimality condition the gap is zero.
    pub gap: T,
    pub converged: bool,
    pub objective: T,
    /// All points colinear and the weighted one-dimensional median is an interval.
    pub nonunique: bool,
    pub trace: Option<Vec<T>>,
}

impl<M, T: Real> MedianResult<M, T> {
    pub fn map<N>(self, f: impl FnOnce(M) -> N) -> MedianResult<N, T> {
        MedianResult {
            median: f(self.median),
            iterations: self.iterations,
            gap: self.gap,
            converged: self.converged,
            objective: self.objective,
            nonunique: self.nonunique,
            trace: self.trace,
        }
    }
}

/// Weighted spatial median by the Vardi–Zhang modified Weiszfeld iteration.
///
/// Starts at the weighted coordinatewise mean. When the iterate lands on data
/// points of total weight `η`, the step is damped by `η/‖R‖` (with `R` the
/// resultant of the unit vectors to the other points), and the iteration stops
/// if `‖R‖ ≤ η`, which is the optimality condition at a data point. The
/// objective never increases.
pub fn spatial_median<T: Real>(
    sample: &WeightedSample<T>,
    opts: &MedianOptions<T>,
) -> Result<MedianResult<DVector<T>, T>> {
    let x = &sample.points;
    let w = &sample.weights;
    let n = sample.len();
    let mut y = sample.mean();
    let spread = sample.objective(&y);
    let nonunique = colinear_interval(sample);
    let mut trace = opts.record_trace.then(Vec::new);
    if spread == T::zero() {
        if let Some(t) = trace.as_mut() {
            t.push(T::zero());
        }
        return Ok(MedianResult {
            median: y,
            iterations: 0,
            gap: T::zero(),
            converged: true,
            objective: T::zero(),
            nonunique,
            trace,
        });
    }
    let guard = tol::<T>(ANCHOR_GUARD) * (spread + y.norm());
    // Rounding in a sum of n distances.
    let slack = lit::<T>(64.0 + n as f64) * T::default_epsilon();
    let mut dist = vec![T::zero(); n];
    let mut iterations = 0;
    let mut gap = T::max_value().unwrap_or_else(|| lit(f64::MAX));
    let mut converged = false;
    let mut prev_obj: Option<T> = None;
    while iterations < opts.max_iter {
        let mut f = T::zero();
        for i in 0..n {
            dist[i] = (x.column(i) - &y).norm();
            f += w[i] * dist[i];
        }
        if let Some(p) = prev_obj {
            debug_assert!(f <= p + slack * p, "Weiszfeld objective increased: {p} -> {f}");
        }
        prev_obj = Some(f);
        if let Some(t) = trace.as_mut() {
            t.push(f);
        }
        let mut eta = T::zero();
        let mut s = T::zero();
        let mut num = DVector::zeros(sample.dim());
        for i in 0..n {
            if dist[i] <= guard {
                eta += w[i];
            } else if w[i] > T::zero() {
                let c = w[i] / dist[i];
                s += c;
                num.axpy(c, &x.column(i), T::one());
            }
        }
        if s == T::zero() {
            gap = T::zero();
            converged = true;
            break;
        }
        let target = num / s;
        let next = if eta > T::zero() {
            let r = (&target - &y).norm() * s;
            if r <= eta {
                gap = T::zero();
                converged = true;
                break;
            }
            let g = eta / r;
            &target * (T::one() - g) + &y * g
        } else {
            target
        };
        let step = (&next - &y).norm();
        y = next;
        iterations += 1;
        gap = step / (spread + y.norm());
        if gap <= opts.tolerance {
            converged = true;
            break;
        }
    }
    let objective = sample.objective(&y);
    if let Some(t) = trace.as_mut() {
        if t.last() != Some(&objective) {
            t.push(objective);
        }
    }
    Ok(MedianResult { median: y, iterations, gap, converged, objective, nonunique, trace })
}

/// Points colinear with a tie in the cumulative weight, so the minimizer is a segment.
fn colinear_interval<T: Real>(sample: &WeightedSample<T>) -> bool {
    let x = &sample.points;
    let n = sample.len();
    if n < 2 {
        return false;
    }
    let base = x.column(0).into_owned();
    let (far, far_d) = (0..n)
        .map(|i| (i, (x.column(i) - &base).norm()))
        .fold((0, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
    if far_d == T::zero() {
        return false;
    }
    let dir = (x.column(far) - &base) / far_d;
    let line_tol = tol::<T>(1e-10) * far_d;
    let mut proj = Vec::with_capacity(n);
    for i in 0..n {
        let d = x.column(i) - &base;
        let t = d.dot(&dir);
        if (d - &dir * t).norm() > line_tol {
            return false;
        }
        proj.push((t, sample.weights[i]));
    }
    proj.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let half = lit::<T>(0.5);
    let mut cum = T::zero();
    for (idx, (t, w)) in proj.iter().enumerate() {
        cum += *w;
        if (cum - half).abs() <= tol::<T>(1e-12) {
            if let Some((t_next, _)) = proj.get(idx + 1) {
                return *t_next - *t > line_tol;
            }
        }
    }
    false
}

fn stack<T: Real>(data: &[AmbientMatrix<T>], weights: Option<&[T]>) -> Result<WeightedSample<T>> {
    let Some(first) = data.first() else {
        return invalid("empty sample");
    };
    let layout = first.layout();
    let mut cols = Vec::with_capacity(data.len());
    for d in data {
        if d.layout() != layout {
            return invalid("ambient matrices have mixed structure or dimensions");
        }
        cols.push(d.vectorize()?);
    }
    WeightedSample::from_vectors(&cols, weights.map(<[T]>::to_vec))
}

/// Frobenius median of structured matrices.
pub fn frobenius_median<T: Real>(
    data: &[AmbientMatrix<T>],
    opts: &MedianOptions<T>,
) -> Result<MedianResult<AmbientMatrix<T>, T>> {
    weighted_frobenius_median(data, None, opts)
}

/// Frobenius median with explicit point weights (uniform when `None`).
pub fn weighted_frobenius_median<T: Real>(
    data: &[AmbientMatrix<T>],
    weights: Option<&[T]>,
    opts: &MedianOptions<T>,
) -> Result<MedianResult<AmbientMatrix<T>, T>> {
    let sample = stack(data, weights)?;
    let layout = data[0].layout();
    let res = spatial_median(&sample, opts)?;
    let median = AmbientMatrix::from_vector(&layout, &res.median)?;
    Ok(res.map(|_| median))
}

/// Median of tuples of symmetric matrices, computed in the product space.
pub fn tuple_frobenius_median<T: Real>(
    data: &[Vec<DMatrix<T>>],
    opts: &MedianOptions<T>,
) -> Result<MedianResult<Vec<DMatrix<T>>, T>> {
    let amb: Vec<_> = data.iter().map(|t| AmbientMatrix::SymmetricTuple(t.clone())).collect();
    let res = frobenius_median(&amb, opts)?;
    Ok(res.map(|m| match m {
        AmbientMatrix::SymmetricTuple(parts) => parts,
        _ => unreachable!("tuple layout preserved"),
    }))
}
