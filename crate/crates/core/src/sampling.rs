//! Sobol candidate generation and acquisition maximization.

use thiserror::Error;

use crate::acquisition::{AcquisitionSpec, PosteriorSummary};
use crate::bounds::Bounds;
use crate::gp::GpPosterior;
use crate::simplex::{self, SimplexOptions};

/// Dimensions covered by the built-in direction-number table.
pub const MAX_SOBOL_DIMENSION: usize = 21;

const BITS: usize = 32;

// Primitive-polynomial degree `s`, coefficient bits `a` and initial direction
// numbers `m` for dimensions 2..=21 (new-joe-kuo-6.21201). Dimension 1 is the
// van der Corput sequence.
const JOE_KUO: [(u32, u32, &[u32]); MAX_SOBOL_DIMENSION - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("Sobol dimension {0} is outside the supported range 1..={MAX_SOBOL_DIMENSION}")]
    UnsupportedDimension(usize),
    #[error("requested zero points")]
    ZeroCount,
    #[error("stream dimension {stream} does not match bounds dimension {bounds}")]
    DimensionMismatch { stream: usize, bounds: usize },
    #[error("Sobol stream exhausted after 2^32 - 1 points")]
    Exhausted,
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// An unscrambled Sobol sequence in Gray-code order. The all-zeros point at
/// index 0 is never emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SobolStream {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u32,
}

impl SobolStream {
    pub fn new(dimension: usize) -> Result<Self, SamplingError> {
        if dimension == 0 || dimension > MAX_SOBOL_DIMENSION {
            return Err(SamplingError::UnsupportedDimension(dimension));
        }
        Ok(Self {
            directions: (0..dimension).map(direction_numbers).collect(),
            state: vec![0; dimension],
            index: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Raw sequence index of the last emitted point (0 before the first call).
    pub fn index(&self) -> u64 {
        self.index as u64
    }

    /// Next point of `[0, 1)^d`.
    pub fn next_unit(&mut self) -> Result<Vec<f64>, SamplingError> {
        if self.index == u32::MAX {
            return Err(SamplingError::Exhausted);
        }
        let c = self.index.trailing_ones() as usize;
        self.index += 1;
        Ok(self
            .state
            .iter_mut()
            .zip(&self.directions)
            .map(|(x, v)| {
                *x ^= v[c];
                *x as f64 / 4_294_967_296.0
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    Sobol,
    Refined,
}

/// Points in problem units, all inside the bounds they were generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub points: Vec<Vec<f64>>,
    pub source: CandidateSource,
}

/// Takes the next `m` points from `stream` and maps them onto `bounds`.
pub fn sobol_points(
    stream: &mut SobolStream,
    m: usize,
    bounds: &Bounds,
) -> Result<CandidateSet, SamplingError> {
    if m == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if stream.dimension() != bounds.dim() {
        return Err(SamplingError::DimensionMismatch {
            stream: stream.dimension(),
            bounds: bounds.dim(),
        });
    }
    let points = (0..m)
        .map(|_| stream.next_unit().map(|u| bounds.from_unit(&u)))
        .collect::<Result<_, _>>()?;
    Ok(CandidateSet {
        points,
        source: CandidateSource::Sobol,
    })
}

/// Average predictive variance over `probes`, in the model's internal units.
pub fn mean_posterior_variance(model: &GpPosterior, probes: &CandidateSet) -> f64 {
    if probes.points.is_empty() {
        return 0.0;
    }
    let total: f64 = probes
        .points
        .iter()
        .map(|p| model.predict_point_standardized(p).1)
        .sum();
    total / probes.points.len() as f64
}

/// Candidate count and local-refinement effort for one acquisition step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub candidates: usize,
    pub refine_starts: usize,
    pub refine_evals: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            candidates: 2048,
            refine_starts: 5,
            refine_evals: 100,
        }
    }
}

/// Outcome of one acquisition maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: Vec<f64>,
    pub score: f64,
    /// Best raw Sobol-candidate score, before refinement.
    pub best_candidate_score: f64,
    pub source: CandidateSource,
    /// Incumbent in internal units.
    pub incumbent: f64,
    pub mean_posterior_variance: f64,
    /// Margin actually applied: the user margin, or `c_v` for AEI.
    pub effective_margin: f64,
    /// The candidate with the largest predictive variance.
    pub max_variance_point: Vec<f64>,
}

/// Scores the next `budget.candidates` Sobol points, then refines the best
/// `budget.refine_starts` of them with a bounded simplex search. The candidate
/// set doubles as the probe set for the mean posterior variance.
pub fn maximize_acquisition(
    model: &GpPosterior,
    spec: &AcquisitionSpec,
    bounds: &Bounds,
    budget: &SearchBudget,
    stream: &mut SobolStream,
) -> Result<Proposal, SamplingError> {
    let candidates = sobol_points(stream, budget.candidates, bounds)?;
    let predictions: Vec<(f64, f64)> = candidates
        .points
        .iter()
        .map(|p| model.predict_point_standardized(p))
        .collect();

    let mpv = predictions.iter().map(|(_, v)| v).sum::<f64>() / predictions.len() as f64;
    let incumbent = model
        .data()
        .standardized_targets()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = spec.effective_margin(incumbent, mpv);
    let score_at = |mean: f64, var: f64| {
        spec.score_with_margin(
            &PosteriorSummary {
                mean,
                sigma: var.sqrt(),
                incumbent,
                mean_posterior_variance: mpv,
            },
            margin,
        )
    };

    let scores: Vec<f64> = predictions.iter().map(|&(m, v)| score_at(m, v)).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let max_var = (0..predictions.len())
        .max_by(|&a, &b| predictions[a].1.total_cmp(&predictions[b].1).then(b.cmp(&a)))
        .expect("candidate set is non-empty");

    let top = order[0];
    let mut best_point = candidates.points[top].clone();
    let mut best_score = scores[top];
    let mut source = CandidateSource::Sobol;

    let opts = SimplexOptions {
        max_evals: budget.refine_evals,
        initial_step: 0.02,
        f_tol: 1e-12,
        x_tol: 1e-7,
    };
    for &i in order.iter().take(budget.refine_starts) {
        if budget.refine_evals == 0 {
            break;
        }
        let r = simplex::minimize(
            |x| {
                let (m, v) = model.predict_point_standardized(x);
                -score_at(m, v)
            },
            &candidates.points[i],
            bounds,
            &opts,
        );
        if -r.value > best_score {
            best_score = -r.value;
            best_point = r.x;
            source = CandidateSource::Refined;
        }
    }

    Ok(Proposal {
        point: best_point,
        score: best_score,
        best_candidate_score: scores[top],
        source,
        incumbent,
        mean_posterior_variance: mpv,
        effective_margin: margin,
        max_variance_point: candidates.points[max_var].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_two_dimensional_points() {
        let mut s = SobolStream::new(2).unwrap();
        let pts = sobol_points(&mut s, 3, &Bounds::unit(2)).unwrap();
        assert_eq!(
            pts.points,
            vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]]
        );
        assert_eq!(s.index(), 3);
    }

    #[test]
    fn affine_scaling() {
        let mut s = SobolStream::new(1).unwrap();
        let b = Bounds::new(vec![(0.0, 10.0)]).unwrap();
        assert_eq!(sobol_points(&mut s, 1, &b).unwrap().points, vec![vec![5.0]]);
    }

    #[test]
    fn dyadic_cells_are_balanced() {
        let mut s = SobolStream::new(2).unwrap();
        // indices 1..1024 plus the skipped origin form a full (0, 10, 2)-net
        let pts = sobol_points(&mut s, 1023, &Bounds::unit(2)).unwrap();
        let mut counts = [[0usize; 4]; 4];
        counts[0][0] = 1;
        for p in &pts.points {
            counts[(p[0] * 4.0) as usize][(p[1] * 4.0) as usize] += 1;
        }
        assert!(counts.iter().flatten().all(|&c| c == 64), "{counts:?}");
    }

    #[test]
    fn unsupported_dimensions() {
        assert_eq!(
            SobolStream::new(22).unwrap_err(),
            SamplingError::UnsupportedDimension(22)
        );
        assert!(SobolStream::new(0).is_err());
        assert!(SobolStream::new(21).is_ok());
    }

    #[test]
    fn zero_count_and_dimension_mismatch() {
        let mut s = SobolStream::new(2).unwrap();
        assert_eq!(
            sobol_points(&mut s, 0, &Bounds::unit(2)),
            Err(SamplingError::ZeroCount)
        );
        assert!(matches!(
            sobol_points(&mut s, 1, &Bounds::unit(3)),
            Err(SamplingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn streams_are_deterministic() {
        let mut a = SobolStream::new(6).unwrap();
        let mut b = SobolStream::new(6).unwrap();
        for _ in 0..500 {
            let (x, y) = (a.next_unit().unwrap(), b.next_unit().unwrap());
            assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }
}
