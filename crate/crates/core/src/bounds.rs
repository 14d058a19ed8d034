//! Axis-aligned search boxes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("bounds must have at least one dimension")]
    Empty,
    #[error("dimension {dim}: lower bound {lower} is not below upper bound {upper}")]
    Inverted { dim: usize, lower: f64, upper: f64 },
    #[error("dimension {dim}: bound is not finite")]
    NonFinite { dim: usize },
}

/// Box bounds `[lower_i, upper_i]` per dimension, with `lower_i < upper_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pairs: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, BoundsError> {
        if pairs.is_empty() {
            return Err(BoundsError::Empty);
        }
        for (dim, &(lower, upper)) in pairs.iter().enumerate() {
            if !lower.is_finite() || !upper.is_finite() {
                return Err(BoundsError::NonFinite { dim });
            }
            if lower >= upper {
                return Err(BoundsError::Inverted { dim, lower, upper });
            }
        }
        Ok(Self { pairs })
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![(0.0, 1.0); dim.max(1)]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn lower(&self, dim: usize) -> f64 {
        self.pairs[dim].0
    }

    pub fn upper(&self, dim: usize) -> f64 {
        self.pairs[dim].1
    }

    pub fn range(&self, dim: usize) -> f64 {
        self.pairs[dim].1 - self.pairs[dim].0
    }

    /// Length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.pairs
            .iter()
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.pairs)
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Clamps `x` into the box in place.
    pub fn clip(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(&self.pairs) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Maps a point of the unit cube affinely onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.pairs)
            .map(|(t, (l, up))| (l + t * (up - l)).clamp(*l, *up))
            .collect()
    }
}

impl fmt::Display for Bounds {
    /// Renders as `l:u, l:u, ...`, the same form the config parser reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, u)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l:?}:{u:?}")?;
        }
        Ok(())
    }
}
