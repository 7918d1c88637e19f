//! Layer-level experiments built from per-unit indicators.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{rescale_stack, ClassUnitStack};
use crate::error::{Error, Result};
use crate::indicators::{
    apoz, feature_entropy, l1_norm, stack_outcomes, unit_report, BirthDistribution, ReportConfig, UnitContext,
};
use crate::scalar::Scalar;
use crate::synthetic::{child_seed, generate_synthetic, SyntheticKind, SyntheticSpec};

/// Feature entropy and selective rate of one (class, layer, channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub class_id: String,
    pub layer_id: String,
    pub channel: usize,
    pub feature_entropy: f64,
    pub selective_rate: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Values are shifted by the first one before summing, so a run of
    /// identical values gives exactly that value and sd 0.
    pub fn of(values: &[f64]) -> Result<MeanSd> {
        let Some(&origin) = values.first() else {
            return Err(Error::invalid("mean of an empty sequence"));
        };
        let n = values.len() as f64;
        let shift = values.iter().map(|v| v - origin).sum::<f64>() / n;
        let var = values.iter().map(|v| (v - origin - shift).powi(2)).sum::<f64>() / n;
        Ok(MeanSd {
            mean: origin + shift,
            sd: var.sqrt(),
        })
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer_id: String,
    pub mean_feature_entropy: f64,
    pub mean_selective_rate: f64,
    pub unit_count: usize,
    pub class_count: usize,
}

/// Averages over every (class, channel) pair of one layer. Scores are summed
/// in (class, channel) order whatever order they arrive in.
pub fn layer_summary(scores: &[UnitScore]) -> Result<LayerSummary> {
    let first = scores.first().ok_or_else(|| Error::invalid("layer summary of no units"))?;
    if let Some(other) = scores.iter().find(|s| s.layer_id != first.layer_id) {
        return Err(Error::invalid(format!(
            "layer summary mixes layers {} and {}",
            first.layer_id, other.layer_id
        )));
    }
    let mut ordered: Vec<&UnitScore> = scores.iter().collect();
    ordered.sort_by(|a, b| (&a.class_id, a.channel).cmp(&(&b.class_id, b.channel)));
    let entropies: Vec<f64> = ordered.iter().map(|s| s.feature_entropy).collect();
    let rates: Vec<f64> = ordered.iter().map(|s| s.selective_rate).collect();
    Ok(LayerSummary {
        layer_id: first.layer_id.clone(),
        mean_feature_entropy: MeanSd::of(&entropies)?.mean,
        mean_selective_rate: MeanSd::of(&rates)?.mean,
        unit_count: ordered.iter().map(|s| s.channel).collect::<BTreeSet<_>>().len(),
        class_count: ordered.iter().map(|s| &s.class_id).collect::<BTreeSet<_>>().len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScatterPoint {
    pub class_id: String,
    pub feature_entropy: f64,
    pub selective_rate: f64,
}

/// One point per class for a single unit, ordered by class id.
pub fn class_scatter(scores: &[UnitScore]) -> Result<Vec<ClassScatterPoint>> {
    if let Some(first) = scores.first() {
        if let Some(other) = scores
            .iter()
            .find(|s| s.layer_id != first.layer_id || s.channel != first.channel)
        {
            return Err(Error::invalid(format!(
                "scatter mixes units {}:{} and {}:{}",
                first.layer_id, first.channel, other.layer_id, other.channel
            )));
        }
    }
    let mut points: Vec<ClassScatterPoint> = scores
        .iter()
        .map(|s| ClassScatterPoint {
            class_id: s.class_id.clone(),
            feature_entropy: s.feature_entropy,
            selective_rate: s.selective_rate,
        })
        .collect();
    points.sort_by(|a, b| a.class_id.cmp(&b.class_id));
    if let Some(w) = points.windows(2).find(|w| w[0].class_id == w[1].class_id) {
        return Err(Error::invalid(format!("class {} appears twice", w[0].class_id)));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Ascending => "ascending",
            Direction::Descending => "descending",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" | "asc" => Ok(Direction::Ascending),
            "descending" | "desc" => Ok(Direction::Descending),
            other => Err(Error::invalid(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRanking {
    pub layer_id: String,
    pub indicator: String,
    pub direction: Direction,
    /// Channel indices, first to be removed first.
    pub order: Vec<usize>,
}

/// Stable sort of channels by score; ties keep ascending channel order.
pub fn rank_units(layer_id: &str, indicator: &str, scores: &[f64], direction: Direction) -> Result<UnitRanking> {
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::invalid(format!("score of channel {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    match direction {
        Direction::Ascending => order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b])),
        Direction::Descending => order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a])),
    }
    Ok(UnitRanking {
        layer_id: layer_id.to_owned(),
        indicator: indicator.to_owned(),
        direction,
        order,
    })
}

/// Cumulative removal sets: step `t` holds the first `t` ranked channels.
pub fn ablation_plan(ranking: &UnitRanking, steps: usize) -> Result<Vec<Vec<usize>>> {
    if steps > ranking.order.len() {
        return Err(Error::invalid(format!(
            "{steps} ablation steps for {} channels",
            ranking.order.len()
        )));
    }
    Ok((1..=steps).map(|t| ranking.order[..t].to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePlan {
    /// Per-channel fused score, higher meaning less effective.
    pub fused: Vec<f64>,
    pub keep: Vec<usize>,
    pub drop: Vec<usize>,
}

/// Number of channels dropped at `ratio`: the ceiling of `ratio · n`, where
/// products within 1e-9 of an integer count as that integer.
pub fn prune_count(ratio: f64, channels: usize) -> usize {
    let exact = ratio * channels as f64;
    let nearest = exact.round();
    let count = if (exact - nearest).abs() < 1e-9 { nearest } else { exact.ceil() };
    count as usize
}

/// Drops the channels with the highest fused scores.
pub fn prune_by_scores(fused: &[f64], ratio: f64) -> Result<PrunePlan> {
    if fused.is_empty() {
        return Err(Error::invalid("pruning an empty layer"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("prune ratio must lie in (0, 1), got {ratio}")));
    }
    let ranking = rank_units("", "fused", fused, Direction::Descending)?;
    let count = prune_count(ratio, fused.len());
    let mut drop = ranking.order[..count].to_vec();
    let mut keep = ranking.order[count..].to_vec();
    drop.sort_unstable();
    keep.sort_unstable();
    Ok(PrunePlan {
        fused: fused.to_vec(),
        keep,
        drop,
    })
}

/// Fuses class-averaged feature entropy (`entropy[channel][class]`) with
/// per-channel selective rates as `H̄ / ε̄` and drops the highest. Channels
/// with ε̄ = 0 score +∞.
pub fn prune_selection(entropy: &[Vec<f64>], rates: &[f64], ratio: f64) -> Result<PrunePlan> {
    if entropy.is_empty() || entropy.iter().any(|row| row.is_empty()) {
        return Err(Error::invalid("empty entropy matrix"));
    }
    let classes = entropy[0].len();
    if let Some(i) = entropy.iter().position(|row| row.len() != classes) {
        return Err(Error::DimensionMismatch(format!(
            "channel {i} has {} class entries, channel 0 has {classes}",
            entropy[i].len()
        )));
    }
    if rates.len() != entropy.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} selective rates for {} channels",
            rates.len(),
            entropy.len()
        )));
    }
    let fused = entropy
        .iter()
        .zip(rates)
        .map(|(row, &rate)| {
            let mean = MeanSd::of(row)?.mean;
            Ok(if rate > 0.0 { mean / rate } else { f64::INFINITY })
        })
        .collect::<Result<Vec<f64>>>()?;
    prune_by_scores(&fused, ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeRow {
    pub size: usize,
    pub trials: usize,
    pub feature_entropy: MeanSd,
}

/// Feature entropy of random subsamples (without replacement) of each size.
/// Trial `t` at size `s` draws from SplitMix64 seeded with
/// `child_seed(child_seed(seed, s), t)`.
pub fn sample_size_study<T: Scalar>(
    stack: &ClassUnitStack<T>,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    config: &ReportConfig,
) -> Result<Vec<SampleSizeRow>> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::invalid("sample-size study needs at least one trial"));
    }
    let n = stack.sample_count();
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::invalid(format!("subsample size {s} outside 1..={n}")));
    }
    let outcomes = stack_outcomes(stack, config.k, config.characterization)?;
    sizes
        .iter()
        .map(|&size| {
            let entropies = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = SplitMix64::seed_from_u64(child_seed(child_seed(seed, size as u64), t as u64));
                    let picked = rand::seq::index::sample(&mut rng, n, size);
                    let dist = BirthDistribution::from_outcomes(picked.iter().map(|i| outcomes[i]));
                    feature_entropy(&dist, &config.entropy)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(SampleSizeRow {
                size,
                trials,
                feature_entropy: MeanSd::of(&entropies)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValues {
    pub feature_entropy: f64,
    pub selective_rate: f64,
    pub l1_norm: f64,
    pub apoz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub trained: IndicatorValues,
    pub trials: usize,
    pub random_feature_entropy: MeanSd,
    pub random_selective_rate: MeanSd,
    pub random_l1_norm: MeanSd,
    pub random_apoz: MeanSd,
}

fn indicator_values<T: Scalar>(stack: &ClassUnitStack<T>, config: &ReportConfig) -> Result<IndicatorValues> {
    let r = unit_report(stack, config, &UnitContext::default())?;
    Ok(IndicatorValues {
        feature_entropy: r.feature_entropy,
        selective_rate: r.selective_rate,
        l1_norm: r.l1_norm.to_f64(),
        apoz: r.apoz,
    })
}

/// Compares a unit against `trials` uniform_random stacks of the same shape.
/// With `scale_spread > 0` each random stack is also multiplied by a factor
/// in `[1, 1 + scale_spread]` on a 1/256 grid, the per-model magnitude drift
/// that destabilizes magnitude-based indicators.
pub fn randomness_comparison<T: Scalar>(
    trained: &ClassUnitStack<T>,
    trials: usize,
    seed: u64,
    scale_spread: f64,
    config: &ReportConfig,
) -> Result<RandomnessReport> {
    if trials == 0 {
        return Err(Error::invalid("randomness comparison needs at least one trial"));
    }
    if !(scale_spread >= 0.0 && scale_spread.is_finite()) {
        return Err(Error::invalid(format!("scale spread must be finite and >= 0, got {scale_spread}")));
    }
    let trained_values = indicator_values(trained, config)?;
    let random = (0..trials)
        .into_par_iter()
        .map(|t| {
            let spec = SyntheticSpec::new(
                SyntheticKind::UniformRandom,
                trained.side(),
                trained.sample_count(),
                1.0,
                child_seed(seed, t as u64),
            );
            let mut stack: ClassUnitStack<T> = generate_synthetic(&spec)?;
            if scale_spread > 0.0 {
                let u = (child_seed(seed ^ 0x5ca1e, t as u64) >> 56) as f64 / 255.0;
                let factor = 1.0 + (scale_spread * u * 256.0).round() / 256.0;
                let factor = T::from_f64(factor).ok_or_else(|| Error::invalid("scale factor not representable"))?;
                stack = rescale_stack(&stack, &factor)?;
            }
            indicator_values(&stack, config)
        })
        .collect::<Result<Vec<IndicatorValues>>>()?;
    let column = |f: fn(&IndicatorValues) -> f64| MeanSd::of(&random.iter().map(f).collect::<Vec<_>>());
    Ok(RandomnessReport {
        trained: trained_values,
        trials,
        random_feature_entropy: column(|v| v.feature_entropy)?,
        random_selective_rate: column(|v| v.selective_rate)?,
        random_l1_norm: column(|v| v.l1_norm)?,
        random_apoz: column(|v| v.apoz)?,
    })
}

/// One row of a rescaling audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub indicator: String,
    pub before: f64,
    pub after: f64,
    /// `(after − before) / before`, 0 when both vanish.
    pub relative_change: f64,
    pub identical: bool,
}

/// Indicators of a stack before and after multiplying it by `factor`.
pub fn rescale_audit<T: Scalar>(stack: &ClassUnitStack<T>, factor: &T, config: &ReportConfig) -> Result<Vec<AuditRow>> {
    config.validate()?;
    let scaled = rescale_stack(stack, factor)?;
    let outcomes = |s: &ClassUnitStack<T>| stack_outcomes(s, config.k, config.characterization);
    let (before_births, after_births) = (outcomes(stack)?, outcomes(&scaled)?);
    let (d0, d1) = (
        BirthDistribution::from_outcomes(before_births.iter().copied()),
        BirthDistribution::from_outcomes(after_births.iter().copied()),
    );
    let row = |name: &str, before: f64, after: f64, identical: bool| AuditRow {
        indicator: name.to_owned(),
        before,
        after,
        relative_change: if before == after {
            0.0
        } else {
            (after - before) / before
        },
        identical,
    };
    let (h0, h1) = (feature_entropy(&d0, &config.entropy)?, feature_entropy(&d1, &config.entropy)?);
    let (l0, l1) = (l1_norm(stack), l1_norm(&scaled));
    let (z0, z1) = (apoz(stack), apoz(&scaled));
    Ok(vec![
        row(
            "birth_distribution",
            d0.defined_count as f64,
            d1.defined_count as f64,
            before_births == after_births,
        ),
        row("feature_entropy", h0, h1, h0.to_bits() == h1.to_bits()),
        row("selective_rate", d0.selective_rate(), d1.selective_rate(), d0 == d1),
        row("l1_norm", l0.to_f64(), l1.to_f64(), l0 == l1),
        row("apoz", z0, z1, z0.to_bits() == z1.to_bits()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(class: &str, channel: usize, h: f64, e: f64) -> UnitScore {
        UnitScore {
            class_id: class.into(),
            layer_id: "L".into(),
            channel,
            feature_entropy: h,
            selective_rate: e,
        }
    }

    #[test]
    fn mean_sd_is_exact_on_constants() {
        let m = MeanSd::of(&[0.1; 7]).unwrap();
        assert_eq!((m.mean, m.sd), (0.1, 0.0));
        let m = MeanSd::of(&[1.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.sd), (2.0, 1.0));
        assert!(MeanSd::of(&[]).is_err());
    }

    #[test]
    fn layer_summary_examples() {
        let s = layer_summary(&[score("a", 0, 1.0, 0.5), score("a", 1, 3.0, 1.0)]).unwrap();
        assert_eq!(s.mean_feature_entropy, 2.0);
        assert_eq!(s.mean_selective_rate, 0.75);
        assert_eq!((s.unit_count, s.class_count), (2, 1));
        let one = layer_summary(&[score("a", 4, 0.3, 0.2)]).unwrap();
        assert_eq!((one.mean_feature_entropy, one.mean_selective_rate), (0.3, 0.2));
        let mut mixed = score("a", 0, 1.0, 1.0);
        mixed.layer_id = "M".into();
        assert!(layer_summary(&[score("a", 0, 1.0, 1.0), mixed]).is_err());
        assert!(layer_summary(&[]).is_err());
    }

    #[test]
    fn scatter_orders_by_class() {
        let pts = class_scatter(&[score("c", 0, 1.0, 0.1), score("a", 0, 2.0, 0.2), score("b", 0, 3.0, 0.3)]).unwrap();
        let ids: Vec<&str> = pts.iter().map(|p| p.class_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(pts[0].feature_entropy, 2.0);
        assert!(class_scatter(&[]).unwrap().is_empty());
        assert!(class_scatter(&[score("a", 0, 1.0, 0.1), score("a", 0, 1.0, 0.1)]).is_err());
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_units("L", "h", &[2.0, 1.0, 3.0], Direction::Ascending).unwrap().order, [1, 0, 2]);
        assert_eq!(rank_units("L", "h", &[2.0, 1.0, 3.0], Direction::Descending).unwrap().order, [2, 0, 1]);
        for d in [Direction::Ascending, Direction::Descending] {
            assert_eq!(rank_units("L", "h", &[5.0; 4], d).unwrap().order, [0, 1, 2, 3]);
        }
        assert!(rank_units("L", "h", &[f64::NAN], Direction::Ascending).is_err());
        assert_eq!("desc".parse::<Direction>().unwrap(), Direction::Descending);
    }

    #[test]
    fn ablation_examples() {
        let r = UnitRanking {
            layer_id: "L".into(),
            indicator: "h".into(),
            direction: Direction::Ascending,
            order: vec![1, 0, 2],
        };
        assert_eq!(ablation_plan(&r, 2).unwrap(), vec![vec![1], vec![1, 0]]);
        assert!(ablation_plan(&r, 0).unwrap().is_empty());
        let full = ablation_plan(&r, 3).unwrap();
        let last: BTreeSet<usize> = full.last().unwrap().iter().copied().collect();
        assert_eq!(last, (0..3).collect());
        assert!(ablation_plan(&r, 4).is_err());
    }

    #[test]
    fn prune_examples() {
        let plan = prune_by_scores(&[0.1, 0.9, 0.5, 0.7], 0.5).unwrap();
        assert_eq!(plan.drop, [1, 3]);
        assert_eq!(plan.keep, [0, 2]);
        assert_eq!(prune_by_scores(&[1.0, 2.0, 3.0], 0.5).unwrap().drop.len(), 2);
        assert_eq!(prune_count(0.6, 5), 3);
        assert_eq!(prune_count(0.4, 10), 4);
        // one class: fused score is H / ε
        let plan = prune_selection(&[vec![0.2], vec![1.8], vec![1.0], vec![1.4]], &[2.0, 2.0, 2.0, 2.0], 0.5).unwrap();
        assert_eq!(plan.drop, [1, 3]);
        assert_eq!(plan.fused, [0.1, 0.9, 0.5, 0.7]);
        let plan = prune_selection(&[vec![1.0, 3.0], vec![0.0, 0.0]], &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(plan.fused, [2.0, f64::INFINITY]);
        assert_eq!(plan.drop, [1]);
        assert!(prune_selection(&[], &[], 0.5).is_err());
        assert!(prune_by_scores(&[1.0], 1.0).is_err());
    }

    fn planted(samples: usize, noise: f64, seed: u64) -> ClassUnitStack<f32> {
        generate_synthetic(&SyntheticSpec::new(SyntheticKind::PlantedCycle, 6, samples, noise, seed)).unwrap()
    }

    #[test]
    fn sample_size_full_and_single_trial() {
        let mixed = crate::synthetic::corrupt_stack(&planted(60, 0.3, 2), 0.5, 9).unwrap();
        let cfg = ReportConfig::default();
        let rows = sample_size_study(&mixed, &[10, 60], 5, 4, &cfg).unwrap();
        let full = unit_report(&mixed, &cfg, &UnitContext::default()).unwrap().feature_entropy;
        assert_eq!(rows[1].feature_entropy.mean, full);
        assert_eq!(rows[1].feature_entropy.sd, 0.0);
        assert!(rows[0].feature_entropy.sd > 0.0);
        let single = sample_size_study(&mixed, &[10], 1, 4, &cfg).unwrap();
        assert_eq!(single[0].feature_entropy.sd, 0.0);
        assert_eq!(rows, sample_size_study(&mixed, &[10, 60], 5, 4, &cfg).unwrap());
        assert!(sample_size_study(&mixed, &[61], 1, 4, &cfg).is_err());
        assert!(sample_size_study(&mixed, &[10], 0, 4, &cfg).is_err());
    }

    #[test]
    fn randomness_single_trial() {
        let r = randomness_comparison(&planted(20, 0.2, 1), 1, 3, 0.0, &ReportConfig::default()).unwrap();
        assert_eq!(r.random_feature_entropy.sd, 0.0);
        assert_eq!(r.trained.feature_entropy, 0.0);
    }

    #[test]
    fn rescale_audit_halves_l1() {
        let rows = rescale_audit(&planted(10, 0.3, 5), &0.5f32, &ReportConfig::default()).unwrap();
        let get = |n: &str| rows.iter().find(|r| r.indicator == n).unwrap();
        assert!(get("feature_entropy").identical && get("feature_entropy").relative_change == 0.0);
        assert!(get("birth_distribution").identical);
        assert!(get("apoz").identical);
        assert_eq!(get("l1_norm").relative_change, -0.5);
    }
}
