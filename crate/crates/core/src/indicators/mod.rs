//! Per-unit indicators: feature entropy and the magnitude-based baselines.

mod baselines;
mod entropy;

pub use baselines::{
    apoz, class_selectivity, fpgm_score, fpgm_scores, l1_norm, mean_activation, nisp_backprop, nisp_score,
};
pub use entropy::{
    birth_distribution, birth_distribution_with, feature_entropy, selective_rate, stack_outcomes, unit_outcome,
    BirthDistribution, EntropyConfig, LogBase, DEFAULT_SELECTIVE_THRESHOLD,
};

use crate::activation::ClassUnitStack;
use crate::error::Result;
use crate::homology::{check_degree, Characterization};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    /// Homology degree, 0 or 1.
    pub k: usize,
    pub entropy: EntropyConfig,
    pub characterization: Characterization,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            k: 1,
            entropy: EntropyConfig::default(),
            characterization: Characterization::BirthTime,
        }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<()> {
        check_degree(self.k)?;
        self.entropy.validate()
    }
}

/// Optional cross-unit inputs for the indicators that are not a function of
/// one stack alone.
#[derive(Debug, Clone)]
pub struct UnitContext<'a, T> {
    /// Mean activation of this unit for every class.
    pub class_means: Option<&'a [T]>,
    /// All filters of the layer and this unit's index among them.
    pub filters: Option<(&'a [Vec<T>], usize)>,
    /// Weights to the next layer, next-layer scores and this unit's row.
    pub nisp: Option<(&'a [Vec<T>], &'a [T], usize)>,
}

impl<T> Default for UnitContext<'_, T> {
    fn default() -> Self {
        UnitContext {
            class_means: None,
            filters: None,
            nisp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorReport<T: Scalar> {
    pub distribution: BirthDistribution,
    pub feature_entropy: f64,
    pub selective_rate: f64,
    pub l1_norm: T,
    pub apoz: f64,
    pub class_selectivity: Option<T>,
    pub fpgm: Option<T::Length>,
    pub nisp: Option<T>,
}

pub fn unit_report<T: Scalar>(
    stack: &ClassUnitStack<T>,
    config: &ReportConfig,
    context: &UnitContext<'_, T>,
) -> Result<IndicatorReport<T>> {
    config.validate()?;
    let distribution = birth_distribution_with(stack, config.k, config.characterization)?;
    let feature_entropy = feature_entropy(&distribution, &config.entropy)?;
    let class_selectivity = context.class_means.map(class_selectivity).transpose()?;
    let fpgm = context.filters.map(|(f, i)| fpgm_score(f, i)).transpose()?;
    let nisp = context.nisp.map(|(w, s, i)| nisp_score(w, s, i)).transpose()?;
    Ok(IndicatorReport {
        selective_rate: distribution.selective_rate(),
        feature_entropy,
        distribution,
        l1_norm: l1_norm(stack),
        apoz: apoz(stack),
        class_selectivity,
        fpgm,
        nisp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_synthetic, SyntheticKind, SyntheticSpec};

    #[test]
    fn planted_report() {
        let stack: ClassUnitStack<f64> =
            generate_synthetic(&SyntheticSpec::new(SyntheticKind::PlantedCycle, 4, 20, 0.0, 7)).unwrap();
        let r = unit_report(&stack, &ReportConfig::default(), &UnitContext::default()).unwrap();
        assert_eq!(r.feature_entropy, 0.0);
        assert_eq!(r.selective_rate, 1.0);
        assert_eq!(r.distribution.counts.get(&4), Some(&20));
        // 4 planted cells out of 16
        assert_eq!(r.apoz, 0.75);
        assert!(r.fpgm.is_none() && r.nisp.is_none() && r.class_selectivity.is_none());
    }

    #[test]
    fn all_zero_report_uses_low_rate_branch() {
        let stack: ClassUnitStack<f64> =
            generate_synthetic(&SyntheticSpec::new(SyntheticKind::AllZero, 4, 30, 0.0, 1)).unwrap();
        let r = unit_report(&stack, &ReportConfig::default(), &UnitContext::default()).unwrap();
        assert_eq!(r.selective_rate, 0.0);
        assert!((r.feature_entropy - 30f64.ln()).abs() < 1e-12);
        assert_eq!(r.apoz, 1.0);
    }

    #[test]
    fn context_fills_optional_scores() {
        let stack: ClassUnitStack<f64> =
            generate_synthetic(&SyntheticSpec::new(SyntheticKind::UniformRandom, 4, 5, 1.0, 3)).unwrap();
        let means = [4.0, 1.0, 1.0];
        let filters = vec![vec![0.0], vec![1.0], vec![2.0]];
        let w = vec![vec![1.0, -2.0], vec![3.0, 4.0]];
        let ctx = UnitContext {
            class_means: Some(&means),
            filters: Some((&filters, 1)),
            nisp: Some((&w, &[1.0, 1.0], 1)),
        };
        let r = unit_report(&stack, &ReportConfig::default(), &ctx).unwrap();
        assert!((r.class_selectivity.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(r.fpgm, Some(2.0));
        assert_eq!(r.nisp, Some(7.0));
    }

    #[test]
    fn rejects_bad_config() {
        let stack: ClassUnitStack<f64> =
            generate_synthetic(&SyntheticSpec::new(SyntheticKind::AllZero, 4, 1, 0.0, 1)).unwrap();
        let bad_k = ReportConfig { k: 2, ..Default::default() };
        assert!(unit_report(&stack, &bad_k, &UnitContext::default()).is_err());
    }
}
