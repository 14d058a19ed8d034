//! Improvement-based acquisition functions, stated for maximization.
//!
//! `PI` and `EI` take a fixed, user-chosen margin `epsilon`. `AEI` replaces the
//! margin with the contextual variance `c_v = mean_posterior_variance / |f*|`,
//! so the exploration pressure follows the model's current average uncertainty
//! instead of a constant chosen up front.
//!
//! All quantities here live in the GP's internal (standardized) output units.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Floor on `|f*|` in the contextual-variance denominator.
pub const INCUMBENT_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcquisitionError {
    #[error("margin must be finite and non-negative, got {0}")]
    NegativeMargin(f64),
    #[error("batch entry {index} has a different incumbent or mean posterior variance")]
    InconsistentBatch { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    /// Probability of improvement.
    Pi,
    /// Expected improvement with a fixed margin.
    Ei,
    /// Expected improvement driven by contextual improvement.
    Aei,
}

/// Where the margin enters the improvement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MarginConvention {
    /// `(mu - f* - margin) / sigma`: the margin raises the target, so larger
    /// margins explore more.
    #[default]
    RaiseTarget,
    /// `(mu - f* + margin) / sigma`, the sign as printed in the original
    /// formulation. Kept for reproduction studies.
    PaperLiteral,
}

impl MarginConvention {
    pub fn name(self) -> &'static str {
        match self {
            Self::RaiseTarget => "raise-target",
            Self::PaperLiteral => "paper-literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raise-target" => Some(Self::RaiseTarget),
            "paper-literal" => Some(Self::PaperLiteral),
            _ => None,
        }
    }

    /// Amount subtracted from `mu - f*` for a non-negative margin.
    #[inline]
    fn offset(self, margin: f64) -> f64 {
        match self {
            Self::RaiseTarget => margin,
            Self::PaperLiteral => -margin,
        }
    }
}

/// Which acquisition rule to apply and how.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    kind: AcquisitionKind,
    margin: f64,
    convention: MarginConvention,
}

impl AcquisitionSpec {
    pub fn pi(margin: f64) -> Result<Self, AcquisitionError> {
        Self::with_margin(AcquisitionKind::Pi, margin)
    }

    pub fn ei(margin: f64) -> Result<Self, AcquisitionError> {
        Self::with_margin(AcquisitionKind::Ei, margin)
    }

    pub fn aei() -> Self {
        Self {
            kind: AcquisitionKind::Aei,
            margin: 0.0,
            convention: MarginConvention::default(),
        }
    }

    fn with_margin(kind: AcquisitionKind, margin: f64) -> Result<Self, AcquisitionError> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(AcquisitionError::NegativeMargin(margin));
        }
        Ok(Self {
            kind,
            margin,
            convention: MarginConvention::default(),
        })
    }

    pub fn with_convention(mut self, convention: MarginConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    /// User margin; always zero for AEI.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn convention(&self) -> MarginConvention {
        self.convention
    }

    /// Margin actually used for a batch sharing this incumbent and mean
    /// posterior variance.
    pub fn effective_margin(&self, incumbent: f64, mean_posterior_variance: f64) -> f64 {
        match self.kind {
            AcquisitionKind::Aei => contextual_variance(mean_posterior_variance, incumbent),
            _ => self.margin,
        }
    }

    /// Scores one posterior summary given a precomputed effective margin.
    #[inline]
    pub fn score_with_margin(&self, s: &PosteriorSummary, margin: f64) -> f64 {
        match self.kind {
            AcquisitionKind::Pi => pi_with_margin(s, margin, self.convention),
            AcquisitionKind::Ei | AcquisitionKind::Aei => ei_with_margin(s, margin, self.convention),
        }
    }

    /// Short label such as `AEI`, `EI-0.3` or `PI-0.0`.
    pub fn label(&self) -> String {
        let base = match self.kind {
            AcquisitionKind::Aei => return "AEI".to_string(),
            AcquisitionKind::Ei => "EI",
            AcquisitionKind::Pi => "PI",
        };
        format!("{base}-{:?}", self.margin)
    }
}

impl fmt::Display for AcquisitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// GP output at one candidate plus the batch-level context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sigma: f64,
    pub incumbent: f64,
    pub mean_posterior_variance: f64,
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    (0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// `(mu - f* -/+ margin) / sigma` depending on `convention`. With `sigma == 0`
/// the result is `+-inf` by the sign of the numerator, or zero.
pub fn improvement(s: &PosteriorSummary, margin: f64, convention: MarginConvention) -> f64 {
    let num = s.mean - s.incumbent - convention.offset(margin);
    if s.sigma > 0.0 {
        num / s.sigma
    } else if num > 0.0 {
        f64::INFINITY
    } else if num < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

fn pi_with_margin(s: &PosteriorSummary, margin: f64, convention: MarginConvention) -> f64 {
    if s.sigma > 0.0 {
        normal_cdf(improvement(s, margin, convention))
    } else if s.mean - s.incumbent - convention.offset(margin) > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn ei_with_margin(s: &PosteriorSummary, margin: f64, convention: MarginConvention) -> f64 {
    let diff = s.mean - s.incumbent - convention.offset(margin);
    if s.sigma > 0.0 {
        let z = diff / s.sigma;
        (diff * normal_cdf(z) + s.sigma * normal_pdf(z)).max(0.0)
    } else {
        diff.max(0.0)
    }
}

/// `Phi(gamma)` with the given margin and convention.
pub fn probability_of_improvement(s: &PosteriorSummary, spec: &AcquisitionSpec) -> f64 {
    let m = spec.effective_margin(s.incumbent, s.mean_posterior_variance);
    pi_with_margin(s, m, spec.convention)
}

/// `(mu - f* - m) Phi(gamma) + sigma phi(gamma)`, clamped at zero; `m` is the
/// user margin for EI and the contextual variance for AEI.
pub fn expected_improvement(s: &PosteriorSummary, spec: &AcquisitionSpec) -> f64 {
    let m = spec.effective_margin(s.incumbent, s.mean_posterior_variance);
    ei_with_margin(s, m, spec.convention)
}

/// `mean_posterior_variance / max(|f*|, 1e-3)`.
pub fn contextual_variance(mean_posterior_variance: f64, incumbent: f64) -> f64 {
    mean_posterior_variance.max(0.0) / incumbent.abs().max(INCUMBENT_FLOOR)
}

pub fn contextual_improvement(s: &PosteriorSummary, convention: MarginConvention) -> f64 {
    let cv = contextual_variance(s.mean_posterior_variance, s.incumbent);
    improvement(s, cv, convention)
}

/// Scores a batch that shares one incumbent and mean posterior variance.
pub fn score(
    batch: &[PosteriorSummary],
    spec: &AcquisitionSpec,
) -> Result<Vec<f64>, AcquisitionError> {
    let Some(first) = batch.first() else {
        return Ok(Vec::new());
    };
    if let Some(index) = batch.iter().position(|s| {
        s.incumbent.to_bits() != first.incumbent.to_bits()
            || s.mean_posterior_variance.to_bits() != first.mean_posterior_variance.to_bits()
    }) {
        return Err(AcquisitionError::InconsistentBatch { index });
    }
    let m = spec.effective_margin(first.incumbent, first.mean_posterior_variance);
    Ok(batch.iter().map(|s| spec.score_with_margin(s, m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(mean: f64, sigma: f64, incumbent: f64, mpv: f64) -> PosteriorSummary {
        PosteriorSummary {
            mean,
            sigma,
            incumbent,
            mean_posterior_variance: mpv,
        }
    }

    #[test]
    fn normal_reference_values() {
        assert!((normal_pdf(0.0) - 0.3989423).abs() < 1e-7);
        assert_eq!(normal_cdf(0.0), 0.5);
        // Phi(1.96) from the series expansion oracle in tests/oracles.rs
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-7);
        assert_eq!(normal_cdf(-40.0), 0.0);
        assert_eq!(normal_pdf(-40.0), 0.0);
        assert_eq!(normal_cdf(40.0), 1.0);
    }

    #[test]
    fn improvement_substitution() {
        let rt = MarginConvention::RaiseTarget;
        assert_eq!(improvement(&summary(0.5, 1.0, 0.5, 0.0), 0.0, rt), 0.0);
        assert_eq!(improvement(&summary(1.0, 0.5, 0.5, 0.0), 0.0, rt), 1.0);
        let g = improvement(&summary(1.0, 0.5, 0.5, 0.0), 0.3, rt);
        assert!((g - 0.4).abs() < 1e-12);
        let g = improvement(
            &summary(1.0, 0.5, 0.5, 0.0),
            0.3,
            MarginConvention::PaperLiteral,
        );
        assert!((g - 1.6).abs() < 1e-12);
    }

    #[test]
    fn pi_values() {
        let pi0 = AcquisitionSpec::pi(0.0).unwrap();
        assert_eq!(probability_of_improvement(&summary(0.2, 1.0, 0.2, 0.0), &pi0), 0.5);
        let v = probability_of_improvement(&summary(1.0, 1.0, 0.5, 0.0), &pi0);
        assert!((v - 0.691462461274013).abs() < 1e-7);
        let det = probability_of_improvement(&summary(1.0, 0.0, 0.5, 0.0), &AcquisitionSpec::pi(0.1).unwrap());
        assert_eq!(det, 1.0);
        let det = probability_of_improvement(&summary(1.0, 0.0, 0.5, 0.0), &AcquisitionSpec::pi(0.6).unwrap());
        assert_eq!(det, 0.0);
    }

    #[test]
    fn ei_values() {
        let ei0 = AcquisitionSpec::ei(0.0).unwrap();
        let v = expected_improvement(&summary(0.5, 1.0, 0.5, 0.0), &ei0);
        assert!((v - normal_pdf(0.0)).abs() < 1e-15);
        let v = expected_improvement(&summary(1.0, 1.0, 0.5, 0.0), &ei0);
        assert!((v - 0.6978).abs() < 1e-4, "{v}");
        assert_eq!(expected_improvement(&summary(-0.5, 0.0, 0.5, 0.0), &ei0), 0.0);
        assert_eq!(expected_improvement(&summary(1.5, 0.0, 0.5, 0.0), &ei0), 1.0);
    }

    #[test]
    fn contextual_variance_cases() {
        assert!((contextual_variance(0.04, 2.0) - 0.02).abs() < 1e-15);
        assert!((contextual_variance(0.04, -2.0) - 0.02).abs() < 1e-15);
        assert_eq!(contextual_variance(0.0, 2.0), 0.0);
        assert_eq!(contextual_variance(0.5, 0.0), 500.0);
    }

    #[test]
    fn contextual_improvement_conventions() {
        let s = summary(1.0, 0.5, 0.5, 0.1);
        let rt = contextual_improvement(&s, MarginConvention::RaiseTarget);
        assert!((rt - 0.6).abs() < 1e-12);
        let lit = contextual_improvement(&s, MarginConvention::PaperLiteral);
        assert!((lit - 1.4).abs() < 1e-12);

        let s0 = summary(1.0, 0.5, 0.5, 0.0);
        assert_eq!(
            contextual_improvement(&s0, MarginConvention::RaiseTarget),
            improvement(&s0, 0.0, MarginConvention::RaiseTarget)
        );
    }

    #[test]
    fn aei_reduces_to_ei_without_uncertainty() {
        let s = summary(0.3, 0.7, 0.9, 0.0);
        let a = expected_improvement(&s, &AcquisitionSpec::aei());
        let e = expected_improvement(&s, &AcquisitionSpec::ei(0.0).unwrap());
        assert_eq!(a.to_bits(), e.to_bits());
    }

    #[test]
    fn negative_margin_rejected() {
        assert_eq!(
            AcquisitionSpec::ei(-0.1),
            Err(AcquisitionError::NegativeMargin(-0.1))
        );
        assert!(AcquisitionSpec::pi(f64::NAN).is_err());
    }

    #[test]
    fn batch_scoring() {
        let spec = AcquisitionSpec::aei();
        let one = [summary(0.1, 0.4, 0.5, 0.2)];
        assert_eq!(score(&one, &spec).unwrap()[0], expected_improvement(&one[0], &spec));
        let bad = [summary(0.1, 0.4, 0.5, 0.2), summary(0.1, 0.4, 0.6, 0.2)];
        assert_eq!(
            score(&bad, &spec),
            Err(AcquisitionError::InconsistentBatch { index: 1 })
        );
        assert!(score(&[], &spec).unwrap().is_empty());
    }

    #[test]
    fn labels() {
        assert_eq!(AcquisitionSpec::aei().label(), "AEI");
        assert_eq!(AcquisitionSpec::ei(0.0).unwrap().label(), "EI-0.0");
        assert_eq!(AcquisitionSpec::ei(0.3).unwrap().label(), "EI-0.3");
        assert_eq!(AcquisitionSpec::pi(0.05).unwrap().label(), "PI-0.05");
    }
}
