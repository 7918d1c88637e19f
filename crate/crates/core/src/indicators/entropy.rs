//! Birth distributions over a class's samples and their feature entropy.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{ActivationUnit, ClassUnitStack};
use crate::error::{Error, Result};
use crate::filtration::{build_adjacency, build_filtration};
use crate::homology::{characterize, check_degree, Characterization};
use crate::scalar::Scalar;

/// Default selective-rate threshold below which the entropy is replaced by
/// `(1 − ε) · log N`.
pub const DEFAULT_SELECTIVE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Histogram of per-sample birth ranks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BirthDistribution {
    /// Birth rank → number of samples born there.
    pub counts: BTreeMap<usize, usize>,
    pub defined_count: usize,
    pub sample_count: usize,
}

impl BirthDistribution {
    /// Tallies per-sample outcomes; `None` marks a sample without a birth.
    pub fn from_outcomes<I: IntoIterator<Item = Option<usize>>>(outcomes: I) -> Self {
        let mut counts = BTreeMap::new();
        let (mut defined_count, mut sample_count) = (0, 0);
        for outcome in outcomes {
            sample_count += 1;
            if let Some(rank) = outcome {
                *counts.entry(rank).or_insert(0) += 1;
                defined_count += 1;
            }
        }
        BirthDistribution {
            counts,
            defined_count,
            sample_count,
        }
    }

    /// Fraction of samples with a birth time, 0 for an empty distribution.
    pub fn selective_rate(&self) -> f64 {
        if self.sample_count == 0 {
            0.0
        } else {
            self.defined_count as f64 / self.sample_count as f64
        }
    }
}

pub fn selective_rate(dist: &BirthDistribution) -> f64 {
    dist.selective_rate()
}

/// Characterization of one unit's graph filtration.
pub fn unit_outcome<T: Scalar>(unit: &ActivationUnit<T>, k: usize, characterization: Characterization) -> Result<Option<usize>> {
    let filtration = build_filtration(&build_adjacency(unit));
    characterize(&filtration, k, characterization)
}

/// Per-sample characterizations of a stack, in sample order.
pub fn stack_outcomes<T: Scalar>(
    stack: &ClassUnitStack<T>,
    k: usize,
    characterization: Characterization,
) -> Result<Vec<Option<usize>>> {
    check_degree(k)?;
    stack
        .units()
        .par_iter()
        .map(|u| unit_outcome(u, k, characterization))
        .collect()
}

pub fn birth_distribution<T: Scalar>(stack: &ClassUnitStack<T>, k: usize) -> Result<BirthDistribution> {
    birth_distribution_with(stack, k, Characterization::BirthTime)
}

pub fn birth_distribution_with<T: Scalar>(
    stack: &ClassUnitStack<T>,
    k: usize,
    characterization: Characterization,
) -> Result<BirthDistribution> {
    Ok(BirthDistribution::from_outcomes(stack_outcomes(stack, k, characterization)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    /// Selective-rate threshold p, in (0, 1).
    pub threshold: f64,
    pub base: LogBase,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            threshold: DEFAULT_SELECTIVE_THRESHOLD,
            base: LogBase::Natural,
        }
    }
}

impl EntropyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold > 0.0 && self.threshold < 1.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("threshold p must lie in (0, 1), got {}", self.threshold)))
        }
    }
}

/// Entropy of the birth distribution normalized over samples that have a
/// birth; `(1 − ε) · log N` when the selective rate ε falls below p.
pub fn feature_entropy(dist: &BirthDistribution, config: &EntropyConfig) -> Result<f64> {
    config.validate()?;
    if dist.sample_count == 0 {
        return Err(Error::invalid("feature entropy of an empty sample set"));
    }
    let rate = dist.selective_rate();
    if rate < config.threshold {
        return Ok((1.0 - rate) * config.base.log(dist.sample_count as f64));
    }
    let total = dist.defined_count as f64;
    let h: f64 = dist
        .counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / total;
            -q * config.base.log(q)
        })
        .sum();
    // a single bin gives -1·log 1 = -0.0
    Ok(h.max(0.0))
}
