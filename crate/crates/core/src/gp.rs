//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Inference is exact: the regularized Gram matrix `K + (noise + jitter) I` is
//! Cholesky-factorized once per fit, and predictions reuse the factor. Targets are
//! shifted and scaled to zero mean and unit variance before fitting unless the
//! dataset opts out with [`TargetScaling::Raw`].

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use thiserror::Error;

use crate::bounds::Bounds;
use crate::simplex::{self, SimplexOptions};

/// First jitter level, relative to the signal variance.
pub const JITTER_START: f64 = 1e-8;
/// Largest jitter level tried before a fit is declared failed.
pub const JITTER_MAX: f64 = 1e-2;
/// Lengthscales below this fraction of the domain range are flagged as vanishing.
pub const VANISHING_LENGTHSCALE_FRACTION: f64 = 1e-3;
pub const DEFAULT_HYPER_RESTARTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyData,
    #[error("{targets} targets supplied for {points} points")]
    TargetCount { points: usize, targets: usize },
    #[error("point {index} lies outside the bounds")]
    OutOfBounds { index: usize },
    #[error("non-finite target at index {index}")]
    NonFiniteTarget { index: usize },
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("Gram matrix not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("no hyperparameter restart produced a usable model")]
    AllRestartsFailed,
}

/// How targets are transformed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetScaling {
    /// Zero mean, unit variance. Scaling is skipped when `n < 2` or the
    /// targets are constant; the shift still applies.
    #[default]
    Standardize,
    /// Targets are used as given.
    Raw,
}

/// Affine map between problem units and the model's internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Self = Self {
        mean: 0.0,
        scale: 1.0,
    };

    pub fn to_internal(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn to_problem(&self, z: f64) -> f64 {
        self.mean + self.scale * z
    }
}

/// Observed inputs and targets inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    bounds: Bounds,
    scaling: TargetScaling,
}

impl Dataset {
    pub fn new(bounds: Bounds) -> Self {
        Self {
            points: Vec::new(),
            targets: Vec::new(),
            bounds,
            scaling: TargetScaling::default(),
        }
    }

    pub fn from_observations(
        points: Vec<Vec<f64>>,
        targets: Vec<f64>,
        bounds: Bounds,
    ) -> Result<Self, GpError> {
        if points.len() != targets.len() {
            return Err(GpError::TargetCount {
                points: points.len(),
                targets: targets.len(),
            });
        }
        let mut data = Self::new(bounds);
        for (x, y) in points.into_iter().zip(targets) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn with_scaling(mut self, scaling: TargetScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<(), GpError> {
        let index = self.points.len();
        if x.len() != self.bounds.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.bounds.dim(),
                found: x.len(),
            });
        }
        if !self.bounds.contains(&x) {
            return Err(GpError::OutOfBounds { index });
        }
        if !y.is_finite() {
            return Err(GpError::NonFiniteTarget { index });
        }
        self.points.push(x);
        self.targets.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    pub fn standardization(&self) -> Standardization {
        if self.scaling == TargetScaling::Raw || self.targets.is_empty() {
            return Standardization::IDENTITY;
        }
        let n = self.targets.len() as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        let var = self.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let scale = if self.targets.len() < 2 || var <= 0.0 {
            1.0
        } else {
            var.sqrt()
        };
        Standardization { mean, scale }
    }

    pub fn standardized_targets(&self) -> Vec<f64> {
        let s = self.standardization();
        self.targets.iter().map(|&y| s.to_internal(y)).collect()
    }
}

/// Squared-exponential ARD kernel hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        let p = Self {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Lengthscales at a fixed fraction of each range, unit signal, small noise.
    pub fn default_for(bounds: &Bounds) -> Self {
        Self {
            lengthscales: (0..bounds.dim()).map(|i| 0.25 * bounds.range(i)).collect(),
            signal_variance: 1.0,
            noise_variance: 1e-4,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.lengthscales.is_empty() {
            return Err(GpError::InvalidParams("no lengthscales".into()));
        }
        if let Some(i) = self
            .lengthscales
            .iter()
            .position(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(GpError::InvalidParams(format!(
                "lengthscale {i} must be positive and finite"
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(GpError::InvalidParams(
                "signal variance must be positive".into(),
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(GpError::InvalidParams(
                "noise variance must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `[ln l_1, .., ln l_d, ln sf2, ln sn2]`
    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.max(f64::MIN_POSITIVE).ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            lengthscales: v[..d].iter().map(|x| x.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
        }
    }
}

#[inline]
fn se_ard(a: &[f64], b: &[f64], lengthscales: &[f64], signal_variance: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| {
            let t = (x - y) / l;
            t * t
        })
        .sum();
    signal_variance * (-0.5 * r2).exp()
}

/// `sf2 * exp(-1/2 * sum_i (a_i - b_i)^2 / l_i^2)`
pub fn kernel_eval(a: &[f64], b: &[f64], params: &KernelParams) -> Result<f64, GpError> {
    let d = params.dim();
    for found in [a.len(), b.len()] {
        if found != d {
            return Err(GpError::DimensionMismatch { expected: d, found });
        }
    }
    Ok(se_ard(a, b, &params.lengthscales, params.signal_variance))
}

/// Factorizes `gram + jitter I`, escalating jitter by 10x on failure.
fn factorize(gram: &DMatrix<f64>, signal_variance: f64) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let mut jitter = JITTER_START * signal_variance;
    let max = JITTER_MAX * signal_variance * (1.0 + 1e-9);
    loop {
        let mut m = gram.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        let next = jitter * 10.0;
        if next > max {
            return Err(GpError::NotPositiveDefinite { jitter });
        }
        jitter = next;
    }
}

fn gram_matrix(points: &[Vec<f64>], params: &KernelParams) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance + params.noise_variance;
        for j in 0..i {
            let v = se_ard(
                &points[i],
                &points[j],
                &params.lengthscales,
                params.signal_variance,
            );
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Posterior mean and variance per query.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

/// A fitted GP. Immutable once built; safe to share across threads.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    data: Dataset,
    params: KernelParams,
    standardization: Standardization,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    y: DVector<f64>,
}

pub fn fit_posterior(data: &Dataset, params: &KernelParams) -> Result<GpPosterior, GpError> {
    if data.is_empty() {
        return Err(GpError::EmptyData);
    }
    params.validate()?;
    if params.dim() != data.dim() {
        return Err(GpError::DimensionMismatch {
            expected: data.dim(),
            found: params.dim(),
        });
    }
    let standardization = data.standardization();
    let y = DVector::from_vec(data.standardized_targets());
    let gram = gram_matrix(data.points(), params);
    let (chol, jitter) = factorize(&gram, params.signal_variance)?;
    let alpha = chol.solve(&y);
    Ok(GpPosterior {
        data: data.clone(),
        params: params.clone(),
        standardization,
        chol,
        alpha,
        jitter,
        y,
    })
}

impl GpPosterior {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Jitter that was finally added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular Cholesky factor of the regularized Gram matrix.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    /// Upper bound on any predictive variance, in internal units.
    pub fn prior_variance(&self) -> f64 {
        self.params.signal_variance + self.params.noise_variance
    }

    /// Mean and variance at `x` in internal (standardized) units, without a
    /// dimension check.
    pub fn predict_point_standardized(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.data.dim());
        let ks = DVector::from_iterator(
            self.data.len(),
            self.data.points().iter().map(|p| {
                se_ard(
                    x,
                    p,
                    &self.params.lengthscales,
                    self.params.signal_variance,
                )
            }),
        );
        let mean = ks.dot(&self.alpha);
        let mut v = ks;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = (self.prior_variance() - v.norm_squared()).max(0.0);
        (mean, var)
    }

    fn check_queries(&self, queries: &[Vec<f64>]) -> Result<(), GpError> {
        match queries.iter().find(|q| q.len() != self.data.dim()) {
            Some(q) => Err(GpError::DimensionMismatch {
                expected: self.data.dim(),
                found: q.len(),
            }),
            None => Ok(()),
        }
    }

    /// Predictions in internal units.
    pub fn predict_standardized(&self, queries: &[Vec<f64>]) -> Result<Prediction, GpError> {
        self.check_queries(queries)?;
        let (means, variances) = queries
            .iter()
            .map(|q| self.predict_point_standardized(q))
            .unzip();
        Ok(Prediction { means, variances })
    }

    /// Predictions in problem units.
    pub fn predict(&self, queries: &[Vec<f64>]) -> Result<Prediction, GpError> {
        let mut p = self.predict_standardized(queries)?;
        let s = self.standardization;
        p.means.iter_mut().for_each(|m| *m = s.to_problem(*m));
        p.variances
            .iter_mut()
            .for_each(|v| *v *= s.scale * s.scale);
        Ok(p)
    }

    /// `-1/2 y^T alpha - sum ln L_ii - n/2 ln 2pi` over internal targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.y.len() as f64;
        let l = self.chol.l_dirty();
        let half_logdet: f64 = (0..l.nrows()).map(|i| l[(i, i)].ln()).sum();
        -0.5 * self.y.dot(&self.alpha) - half_logdet - 0.5 * n * (2.0 * PI).ln()
    }
}

pub fn log_marginal_likelihood(data: &Dataset, params: &KernelParams) -> Result<f64, GpError> {
    Ok(fit_posterior(data, params)?.log_marginal_likelihood())
}

/// Box on log-hyperparameters used by [`optimize_hyperparameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperBox {
    pub log_bounds: Bounds,
}

impl HyperBox {
    pub fn for_domain(bounds: &Bounds) -> Self {
        let mut pairs: Vec<(f64, f64)> = (0..bounds.dim())
            .map(|i| {
                let r = bounds.range(i);
                ((1e-4 * r).ln(), (1e4 * r).ln())
            })
            .collect();
        pairs.push((-10.0, 10.0));
        pairs.push((-12.0, 2.0));
        Self {
            log_bounds: Bounds::new(pairs).expect("hyperparameter box is valid"),
        }
    }
}

/// Caches pairwise squared differences so repeated LML evaluations only pay
/// for the exponentials and the factorization.
struct LmlObjective {
    n: usize,
    d: usize,
    sq_diffs: Vec<f64>,
    y: DVector<f64>,
}

impl LmlObjective {
    fn new(data: &Dataset) -> Self {
        let n = data.len();
        let d = data.dim();
        let pts = data.points();
        let mut sq_diffs = vec![0.0; n * n * d];
        for i in 0..n {
            for j in 0..i {
                for k in 0..d {
                    let t = pts[i][k] - pts[j][k];
                    sq_diffs[(i * n + j) * d + k] = t * t;
                }
            }
        }
        Self {
            n,
            d,
            sq_diffs,
            y: DVector::from_vec(data.standardized_targets()),
        }
    }

    fn eval(&self, log_params: &[f64]) -> f64 {
        let p = KernelParams::from_log(log_params);
        if p.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let inv_l2: Vec<f64> = p.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let (n, d) = (self.n, self.d);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = p.signal_variance + p.noise_variance;
            for j in 0..i {
                let s = &self.sq_diffs[(i * n + j) * d..(i * n + j + 1) * d];
                let r2: f64 = s.iter().zip(&inv_l2).map(|(a, b)| a * b).sum();
                let v = p.signal_variance * (-0.5 * r2).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let Ok((chol, _)) = factorize(&k, p.signal_variance) else {
            return f64::NEG_INFINITY;
        };
        let alpha = chol.solve(&self.y);
        let l = chol.l_dirty();
        let half_logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
        let v = -0.5 * self.y.dot(&alpha) - half_logdet - 0.5 * n as f64 * (2.0 * PI).ln();
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Maximizes the log marginal likelihood over log-hyperparameters with
/// multi-start bounded simplex search. The first start is `init` (clamped into
/// the search box); the remaining `restarts - 1` are drawn from `rng`.
///
/// With fewer than two observations `init` is returned unchanged. The result is
/// never worse than `init` itself when `init` is fit-able.
pub fn optimize_hyperparameters<R: Rng + ?Sized>(
    data: &Dataset,
    init: &KernelParams,
    restarts: usize,
    rng: &mut R,
) -> Result<KernelParams, GpError> {
    init.validate()?;
    if init.dim() != data.dim() {
        return Err(GpError::DimensionMismatch {
            expected: data.dim(),
            found: init.dim(),
        });
    }
    if data.len() < 2 {
        return Ok(init.clone());
    }

    let objective = LmlObjective::new(data);
    let hyper = HyperBox::for_domain(data.bounds());
    let d = data.dim();

    let mut best: Option<(f64, KernelParams)> = log_marginal_likelihood(data, init)
        .ok()
        .filter(|v| v.is_finite())
        .map(|v| (v, init.clone()));

    let mut starts = Vec::with_capacity(restarts.max(1));
    let mut warm = init.to_log();
    hyper.log_bounds.clip(&mut warm);
    starts.push(warm);
    for _ in 1..restarts.max(1) {
        let mut s: Vec<f64> = (0..d)
            .map(|i| {
                let r = data.bounds().range(i);
                rng.random_range((0.05 * r).ln()..(2.0 * r).ln())
            })
            .collect();
        s.push(rng.random_range(-1.0..1.0));
        s.push(rng.random_range(-12.0..-2.0));
        starts.push(s);
    }

    let opts = SimplexOptions {
        max_evals: 80 * (d + 2),
        initial_step: 0.05,
        f_tol: 1e-6,
        x_tol: 1e-5,
    };
    for start in starts {
        let r = simplex::minimize(|v| -objective.eval(v), &start, &hyper.log_bounds, &opts);
        if !r.value.is_finite() {
            continue;
        }
        let lml = -r.value;
        let params = KernelParams::from_log(&r.x);
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, params));
        }
    }

    best.map(|(_, p)| p).ok_or(GpError::AllRestartsFailed)
}

/// Dimensions whose lengthscale collapsed below a fraction of the domain range.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KernelValidity {
    pub vanishing: Vec<usize>,
}

impl KernelValidity {
    pub fn is_valid(&self) -> bool {
        self.vanishing.is_empty()
    }
}

pub fn check_kernel_validity(params: &KernelParams, bounds: &Bounds) -> KernelValidity {
    let vanishing = params
        .lengthscales
        .iter()
        .enumerate()
        .filter(|(i, l)| *i < bounds.dim() && **l < VANISHING_LENGTHSCALE_FRACTION * bounds.range(*i))
        .map(|(i, _)| i)
        .collect();
    KernelValidity { vanishing }
}

/// Resets every flagged lengthscale to its dimension's full range.
pub fn reset_vanishing_lengthscales(
    params: &KernelParams,
    bounds: &Bounds,
    report: &KernelValidity,
) -> KernelParams {
    let mut p = params.clone();
    for &i in &report.vanishing {
        p.lengthscales[i] = bounds.range(i);
    }
    p
}
