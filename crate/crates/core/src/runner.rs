//! The optimization loop and the repeated-run evaluation protocol.
//!
//! A study runs every strategy for the same number of repeats. Repeat `i` of
//! every strategy uses the same run seed, so all strategies start from the same
//! random initial design. Robustness is reported as `delta_ci`, the spread
//! between the 10th and 90th percentiles of the bootstrapped mean final result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::acquisition::{self, AcquisitionError, AcquisitionSpec};
use crate::gp::{self, Dataset, GpError, KernelParams};
use crate::objectives::{Direction, EvalError, Objective};
use crate::sampling::{self, SamplingError, SearchBudget, SobolStream};

/// Consecutive failed evaluations after which a run is aborted.
pub const MAX_CONSECUTIVE_FAILURES: usize = 3;
/// Percentiles used for every confidence band.
pub const CI_PERCENTILES: (f64, f64) = (10.0, 90.0);
/// Proposals closer than this fraction of the domain diagonal to an existing
/// point are replaced by the highest-variance candidate.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Surviving repeats a strategy needs for its summary to be reported.
pub const MIN_SURVIVING_REPEATS: usize = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error("run aborted after {MAX_CONSECUTIVE_FAILURES} consecutive evaluation failures: {source}")]
    Aborted {
        trace: Box<Trace>,
        #[source]
        source: EvalError,
    },
    #[error("strategy {label}: only {survivors} of {repeats} repeats survived")]
    TooFewSurvivors {
        label: String,
        survivors: usize,
        repeats: usize,
    },
}

/// Everything that defines one strategy's repeated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub objective: Objective,
    pub acquisition: AcquisitionSpec,
    pub n_init: usize,
    /// Sequential acquisitions after the initial design.
    pub budget: usize,
    pub repeats: usize,
    pub master_seed: u64,
    pub search: SearchBudget,
    pub hyper_restarts: usize,
    pub bootstrap_resamples: usize,
}

impl ExperimentConfig {
    pub fn new(objective: Objective, acquisition: AcquisitionSpec) -> Self {
        Self {
            objective,
            acquisition,
            n_init: 3,
            budget: 50,
            repeats: 10,
            master_seed: 0,
            search: SearchBudget::default(),
            hyper_restarts: gp::DEFAULT_HYPER_RESTARTS,
            bootstrap_resamples: 1000,
        }
    }

    pub fn with_acquisition(&self, acquisition: AcquisitionSpec) -> Self {
        Self {
            acquisition,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::InvalidConfig(m.to_string()));
        if self.n_init < 1 {
            return bad("n_init must be at least 1");
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1");
        }
        if self.search.candidates < 1 {
            return bad("candidate count must be at least 1");
        }
        if self.bootstrap_resamples < 1 {
            return bad("bootstrap_resamples must be at least 1");
        }
        if self.hyper_restarts < 1 {
            return bad("hyper_restarts must be at least 1");
        }
        if self.objective.dim() > sampling::MAX_SOBOL_DIMENSION {
            return bad("objective dimension exceeds the Sobol table");
        }
        Ok(())
    }

    /// Seed of repeat `index`. Independent of the acquisition, which is what
    /// makes strategy comparisons paired.
    pub fn repeat_seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, &[index as u64])
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices into an independent seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(1))))
}

/// One evaluated point. Values are in problem units.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub best_so_far: f64,
    /// Contextual variance of the model that proposed this point; `None` for
    /// the initial design.
    pub contextual_variance: Option<f64>,
    pub mean_posterior_variance: Option<f64>,
    pub kernel_valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalFailure {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub message: String,
}

/// Per-iteration history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub direction: Direction,
    pub records: Vec<TraceRecord>,
    pub failures: Vec<EvalFailure>,
}

impl Trace {
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    pub fn initial_points(&self, n_init: usize) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .take(n_init)
            .map(|r| r.point.clone())
            .collect()
    }
}

struct Model {
    proposal: sampling::Proposal,
    kernel_valid: bool,
}

/// Runs one Bayesian-optimization search.
///
/// `n_init` uniform random points are evaluated first, then `budget` rounds of:
/// fit the GP (hyperparameters by marginal likelihood), score Sobol candidates,
/// refine, evaluate the winner. Failed evaluations are logged in
/// [`Trace::failures`] and retried; three in a row abort the run.
pub fn run_bo(config: &ExperimentConfig, run_seed: u64) -> Result<Trace, RunError> {
    config.validate()?;
    let objective = config.objective.as_internal_max();
    let bounds = objective.bounds().clone();
    let direction = config.objective.problem_direction();
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut stream = SobolStream::new(bounds.dim())?;
    let mut session = objective.session();

    let mut data = Dataset::new(bounds.clone());
    let mut params = KernelParams::default_for(&bounds);
    let mut trace = Trace {
        seed: run_seed,
        direction,
        records: Vec::with_capacity(config.n_init + config.budget),
        failures: Vec::new(),
    };
    let mut consecutive_failures = 0;
    let total = config.n_init + config.budget;

    while trace.records.len() < total {
        let iteration = trace.records.len();
        let (point, model) = if iteration < config.n_init {
            let x: Vec<f64> = bounds
                .pairs()
                .iter()
                .map(|(l, u)| rng.random_range(*l..=*u))
                .collect();
            (x, None)
        } else {
            params = gp::optimize_hyperparameters(&data, &params, config.hyper_restarts, &mut rng)?;
            let validity = gp::check_kernel_validity(&params, &bounds);
            if !validity.is_valid() {
                params = gp::reset_vanishing_lengthscales(&params, &bounds, &validity);
            }
            let posterior = gp::fit_posterior(&data, &params)?;
            let proposal = sampling::maximize_acquisition(
                &posterior,
                &config.acquisition,
                &bounds,
                &config.search,
                &mut stream,
            )?;
            let too_close = DUPLICATE_TOLERANCE * bounds.diagonal();
            let is_duplicate = |x: &[f64]| {
                data.points().iter().any(|p| {
                    p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= too_close
                })
            };
            let point = if is_duplicate(&proposal.point) {
                proposal.max_variance_point.clone()
            } else {
                proposal.point.clone()
            };
            (
                point,
                Some(Model {
                    proposal,
                    kernel_valid: validity.is_valid(),
                }),
            )
        };

        match session.evaluate(&point) {
            Ok(internal) => {
                consecutive_failures = 0;
                data.push(point.clone(), internal)?;
                let value = objective.to_problem_units(internal);
                let best_so_far = trace
                    .records
                    .last()
                    .map_or(value, |r| direction.best(r.best_so_far, value));
                trace.records.push(TraceRecord {
                    iteration,
                    point,
                    value,
                    best_so_far,
                    contextual_variance: model.as_ref().map(|m| {
                        acquisition::contextual_variance(
                            m.proposal.mean_posterior_variance,
                            m.proposal.incumbent,
                        )
                    }),
                    mean_posterior_variance: model
                        .as_ref()
                        .map(|m| m.proposal.mean_posterior_variance),
                    kernel_valid: model.as_ref().map(|m| m.kernel_valid),
                });
            }
            Err(e) => {
                consecutive_failures += 1;
                trace.failures.push(EvalFailure {
                    iteration,
                    point,
                    message: e.to_string(),
                });
                if consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
                    return Err(RunError::Aborted {
                        trace: Box::new(trace),
                        source: e,
                    });
                }
            }
        }
    }
    Ok(trace)
}

fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Percentile bootstrap of the sample mean. `percentiles` are in percent;
/// quantiles interpolate linearly between order statistics.
pub fn bootstrap_ci(values: &[f64], resamples: usize, percentiles: (f64, f64), seed: u64) -> (f64, f64) {
    match values.len() {
        0 => return (f64::NAN, f64::NAN),
        1 => return (values[0], values[0]),
        _ => {}
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    (
        percentile_sorted(&means, percentiles.0),
        percentile_sorted(&means, percentiles.1),
    )
}

/// Spread of the bootstrap band on the final best-so-far values.
pub fn delta_ci(final_values: &[f64], resamples: usize, seed: u64) -> f64 {
    let (lo, hi) = bootstrap_ci(final_values, resamples, CI_PERCENTILES, seed);
    (hi - lo).max(0.0)
}

/// Range-normalized ranking: the best result scores 0, the worst 1. All zeros
/// when every result is equal.
pub fn z_score(results: &[f64], better: Direction) -> Vec<f64> {
    let max = results.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = results.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if results.len() < 2 || !(range > 0.0) {
        return vec![0.0; results.len()];
    }
    let best = match better {
        Direction::Minimize => min,
        Direction::Maximize => max,
    };
    results.iter().map(|s| (s - best).abs() / range).collect()
}

/// Cross-repeat statistics for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub label: String,
    pub repeats: usize,
    pub mean_trace: Vec<f64>,
    pub band_low: Vec<f64>,
    pub band_high: Vec<f64>,
    pub final_mean: f64,
    pub delta_ci: f64,
}

impl StudySummary {
    /// Mean best-so-far after `k` total samples, counting the initial design.
    pub fn mean_at_sample(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.mean_trace.get(i)).copied()
    }
}

/// Builds a summary from traces of equal length.
pub fn summarize(label: &str, traces: &[Trace], resamples: usize, seed: u64) -> StudySummary {
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let mut mean_trace = Vec::with_capacity(len);
    let mut band_low = Vec::with_capacity(len);
    let mut band_high = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(traces.len());
    for i in 0..len {
        column.clear();
        column.extend(traces.iter().map(|t| t.records[i].best_so_far));
        mean_trace.push(mean(&column));
        let (lo, hi) = bootstrap_ci(&column, resamples, CI_PERCENTILES, derive_seed(seed, &[i as u64]));
        band_low.push(lo);
        band_high.push(hi);
    }
    let final_mean = mean_trace.last().copied().unwrap_or(f64::NAN);
    let delta_ci = match (band_low.last(), band_high.last()) {
        (Some(lo), Some(hi)) => (hi - lo).max(0.0),
        _ => 0.0,
    };
    StudySummary {
        label: label.to_string(),
        repeats: traces.len(),
        mean_trace,
        band_low,
        band_high,
        final_mean,
        delta_ci,
    }
}

#[derive(Debug)]
pub struct DroppedRepeat {
    pub repeat: usize,
    pub error: RunError,
}

/// All repeats of one strategy.
#[derive(Debug)]
pub struct StrategyOutcome {
    pub spec: AcquisitionSpec,
    /// `(repeat index, trace)` for every surviving repeat.
    pub traces: Vec<(usize, Trace)>,
    pub dropped: Vec<DroppedRepeat>,
    pub summary: StudySummary,
}

/// Normalized ranking of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub label: String,
    pub search: f64,
    pub delta_ci: f64,
    pub overall: f64,
}

#[derive(Debug)]
pub struct Study {
    pub objective: String,
    pub direction: Direction,
    pub n_init: usize,
    pub budget: usize,
    pub repeats: usize,
    pub master_seed: u64,
    pub repeat_seeds: Vec<u64>,
    pub outcomes: Vec<StrategyOutcome>,
    pub z: Vec<ZScores>,
}

impl Study {
    pub fn summaries(&self) -> impl Iterator<Item = &StudySummary> {
        self.outcomes.iter().map(|o| &o.summary)
    }

    pub fn outcome(&self, label: &str) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.summary.label == label)
    }
}

fn check_variants(configs: &[ExperimentConfig]) -> Result<(), RunError> {
    let Some(first) = configs.first() else {
        return Err(RunError::InvalidConfig("study has no strategies".into()));
    };
    for c in configs {
        c.validate()?;
        let same = c.objective.name() == first.objective.name()
            && c.objective.bounds() == first.objective.bounds()
            && c.objective.direction() == first.objective.direction()
            && c.n_init == first.n_init
            && c.budget == first.budget
            && c.repeats == first.repeats
            && c.master_seed == first.master_seed
            && c.search == first.search
            && c.hyper_restarts == first.hyper_restarts
            && c.bootstrap_resamples == first.bootstrap_resamples;
        if !same {
            return Err(RunError::InvalidConfig(
                "study variants may differ only in their acquisition".into(),
            ));
        }
    }
    let mut labels: Vec<String> = configs.iter().map(|c| c.acquisition.label()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != configs.len() {
        return Err(RunError::InvalidConfig("duplicate strategy in study".into()));
    }
    Ok(())
}

/// Runs every strategy for every repeat with a shared seed schedule, then
/// aggregates means, bootstrap bands, `delta_ci` and Z scores.
///
/// Repeats that abort are dropped; a strategy needs at least
/// `min(3, repeats)` survivors.
pub fn run_study(configs: &[ExperimentConfig]) -> Result<Study, RunError> {
    check_variants(configs)?;
    let base = &configs[0];
    let repeat_seeds: Vec<u64> = (0..base.repeats).map(|i| base.repeat_seed(i)).collect();

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|s| (0..base.repeats).map(move |r| (s, r)))
        .collect();
    let mut results: Vec<(usize, usize, Result<Trace, RunError>)> = jobs
        .into_par_iter()
        .map(|(s, r)| (s, r, run_bo(&configs[s], repeat_seeds[r])))
        .collect();
    results.sort_by_key(|(s, r, _)| (*s, *r));

    let direction = base.objective.problem_direction();
    let mut per_strategy: Vec<(Vec<(usize, Trace)>, Vec<DroppedRepeat>)> =
        (0..configs.len()).map(|_| (Vec::new(), Vec::new())).collect();
    for (s, repeat, res) in results {
        match res {
            Ok(t) => per_strategy[s].0.push((repeat, t)),
            Err(error) => per_strategy[s].1.push(DroppedRepeat { repeat, error }),
        }
    }

    let mut outcomes = Vec::with_capacity(configs.len());
    for (s, (traces, dropped)) in per_strategy.into_iter().enumerate() {
        let spec = configs[s].acquisition;
        let label = spec.label();
        let needed = MIN_SURVIVING_REPEATS.min(base.repeats);
        if traces.len() < needed {
            return Err(RunError::TooFewSurvivors {
                label,
                survivors: traces.len(),
                repeats: base.repeats,
            });
        }
        let plain: Vec<Trace> = traces.iter().map(|(_, t)| t.clone()).collect();
        let summary = summarize(
            &label,
            &plain,
            base.bootstrap_resamples,
            derive_seed(base.master_seed, &[u64::MAX, s as u64]),
        );
        outcomes.push(StrategyOutcome {
            spec,
            traces,
            dropped,
            summary,
        });
    }

    let z = study_z_scores(
        outcomes.iter().map(|o| &o.summary).collect::<Vec<_>>().as_slice(),
        direction,
    );
    Ok(Study {
        objective: base.objective.name().to_string(),
        direction,
        n_init: base.n_init,
        budget: base.budget,
        repeats: base.repeats,
        master_seed: base.master_seed,
        repeat_seeds,
        outcomes,
        z,
    })
}

/// Z scores within one experiment: search on the final mean, robustness on
/// `delta_ci` (smaller is better), overall as their average.
pub fn study_z_scores(summaries: &[&StudySummary], direction: Direction) -> Vec<ZScores> {
    let finals: Vec<f64> = summaries.iter().map(|s| s.final_mean).collect();
    let cis: Vec<f64> = summaries.iter().map(|s| s.delta_ci).collect();
    let zs = z_score(&finals, direction);
    let zc = z_score(&cis, Direction::Minimize);
    summaries
        .iter()
        .zip(zs.iter().zip(&zc))
        .map(|(s, (a, b))| ZScores {
            label: s.label.clone(),
            search: *a,
            delta_ci: *b,
            overall: 0.5 * (a + b),
        })
        .collect()
}

/// Averages per-experiment Z scores over several studies, matching strategies
/// by label. Strategies missing from any study are left out.
pub fn overall_z(studies: &[&Study]) -> Vec<ZScores> {
    let Some(first) = studies.first() else {
        return Vec::new();
    };
    first
        .z
        .iter()
        .filter_map(|z0| {
            let rows: Vec<&ZScores> = studies
                .iter()
                .filter_map(|s| s.z.iter().find(|z| z.label == z0.label))
                .collect();
            (rows.len() == studies.len()).then(|| {
                let k = rows.len() as f64;
                ZScores {
                    label: z0.label.clone(),
                    search: rows.iter().map(|z| z.search).sum::<f64>() / k,
                    delta_ci: rows.iter().map(|z| z.delta_ci).sum::<f64>() / k,
                    overall: rows.iter().map(|z| z.overall).sum::<f64>() / k,
                }
            })
        })
        .collect()
}

/// Mean traces of fixed-margin EI over a grid of margins, next to AEI.
#[derive(Debug)]
pub struct Sweep {
    pub epsilons: Vec<f64>,
    pub eps_traces: Vec<Vec<f64>>,
    pub aei_trace: Vec<f64>,
    pub direction: Direction,
    pub study: Study,
}

impl Sweep {
    pub fn risk_area(&self) -> RiskArea {
        risk_area(&self.eps_traces, &self.aei_trace, self.direction)
    }
}

/// Runs EI at every margin in `eps_grid` and AEI, each for `repeats` repeats
/// from the shared seed schedule.
pub fn epsilon_sweep(base: &ExperimentConfig, eps_grid: &[f64], repeats: usize) -> Result<Sweep, RunError> {
    if eps_grid.is_empty() {
        return Err(RunError::InvalidConfig("epsilon grid is empty".into()));
    }
    let convention = base.acquisition.convention();
    let mut configs = Vec::with_capacity(eps_grid.len() + 1);
    for &eps in eps_grid {
        let spec = AcquisitionSpec::ei(eps)?.with_convention(convention);
        configs.push(ExperimentConfig {
            repeats,
            ..base.with_acquisition(spec)
        });
    }
    configs.push(ExperimentConfig {
        repeats,
        ..base.with_acquisition(AcquisitionSpec::aei().with_convention(convention))
    });
    let study = run_study(&configs)?;
    let mut traces: Vec<Vec<f64>> = study
        .outcomes
        .iter()
        .map(|o| o.summary.mean_trace.clone())
        .collect();
    let aei_trace = traces.pop().expect("AEI strategy present");
    Ok(Sweep {
        epsilons: eps_grid.to_vec(),
        eps_traces: traces,
        aei_trace,
        direction: study.direction,
        study,
    })
}

/// `0.0, 0.1, ..., 1.0`.
pub fn desk_epsilon_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// `0.00, 0.01, ..., 0.99`: one hundred margins at 0.01 resolution.
pub fn full_epsilon_grid() -> Vec<f64> {
    (0..100).map(|i| i as f64 / 100.0).collect()
}

/// Parses `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_epsilon_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got {s:?}"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(start >= 0.0 && stop >= start && step > 0.0) || !stop.is_finite() {
        return Err(format!("grid needs 0 <= start <= stop and step > 0, got {s:?}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // round to the step's decimal precision so 0.1 * 3 prints as 0.3
    let digits = step_decimals(step);
    let scale = 10f64.powi(digits as i32);
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * scale).round() / scale)
        .collect())
}

fn step_decimals(step: f64) -> u32 {
    (0..=12u32)
        .find(|&d| {
            let s = step * 10f64.powi(d as i32);
            (s - s.round()).abs() < 1e-9
        })
        .unwrap_or(12)
}

/// Total disadvantage (`loss`) and advantage (`gain`) of fixed-margin traces
/// relative to the adaptive trace, summed over margins and iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskArea {
    pub loss: f64,
    pub gain: f64,
}

/// # Panics
/// If any trace length differs from `aei_trace`.
pub fn risk_area(eps_traces: &[Vec<f64>], aei_trace: &[f64], direction: Direction) -> RiskArea {
    let mut area = RiskArea {
        loss: 0.0,
        gain: 0.0,
    };
    for t in eps_traces {
        assert_eq!(t.len(), aei_trace.len(), "traces must have equal length");
        for (e, a) in t.iter().zip(aei_trace) {
            let disadvantage = match direction {
                Direction::Minimize => e - a,
                Direction::Maximize => a - e,
            };
            if disadvantage > 0.0 {
                area.loss += disadvantage;
            } else {
                area.gain -= disadvantage;
            }
        }
    }
    area
}
