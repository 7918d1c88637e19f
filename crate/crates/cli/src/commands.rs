use std::path::PathBuf;

use feature_entropy::analysis::{
    ablation_plan, class_scatter, layer_summary, prune_selection, rank_units, rescale_audit, sample_size_study,
    Direction, UnitScore,
};
use feature_entropy::indicators::{class_selectivity, mean_activation};
use feature_entropy::io::{load_class_stack, load_layer_stacks, load_manifest, DatasetManifest, LayerSpec};
use feature_entropy::synthetic::{child_seed, generate_synthetic, SyntheticKind, SyntheticSpec};
use feature_entropy::{
    betti_curve, brute_force_betti, build_adjacency, build_filtration, unit_report, ActivationUnit, DatasetWriter,
    IndicatorReport, Stack32, Stack64, UnitContext,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{file_stem, fmt_g, write_json, Table};
use crate::{CliError, RunConfig};

/// Everything computed for one (class, channel) of a layer.
struct UnitRow {
    class_id: String,
    channel: usize,
    samples: usize,
    report: IndicatorReport<f64>,
    mean: f64,
}

struct LayerScores {
    layer: LayerSpec,
    classes: Vec<String>,
    /// Class-major: all channels of the first class, then the next class.
    rows: Vec<UnitRow>,
    /// Per-channel class selectivity, `None` with fewer than two classes.
    selectivity: Vec<Option<f64>>,
}

impl LayerScores {
    fn unit_scores(&self) -> Vec<UnitScore> {
        self.rows
            .iter()
            .map(|r| UnitScore {
                class_id: r.class_id.clone(),
                layer_id: self.layer.id.clone(),
                channel: r.channel,
                feature_entropy: r.report.feature_entropy,
                selective_rate: r.report.selective_rate,
            })
            .collect()
    }

    /// Per-channel class average of `f`.
    fn channel_means(&self, f: impl Fn(&UnitRow) -> f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.layer.channels];
        for r in &self.rows {
            sums[r.channel] += f(r);
        }
        let k = self.classes.len() as f64;
        sums.into_iter().map(|s| s / k).collect()
    }

    /// Fused H̄/ε̄ per channel, +∞ when ε̄ = 0.
    fn fused(&self) -> Vec<f64> {
        let h = self.channel_means(|r| r.report.feature_entropy);
        let e = self.channel_means(|r| r.report.selective_rate);
        h.iter().zip(&e).map(|(h, e)| if *e > 0.0 { h / e } else { f64::INFINITY }).collect()
    }
}

fn manifest(cfg: &RunConfig) -> Result<DatasetManifest, CliError> {
    let path = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::Validation("--manifest is required for this command".into()))?;
    Ok(load_manifest(path)?)
}

fn selected<'a>(all: &'a [String], wanted: &'a [String], kind: &str) -> Result<Vec<&'a String>, CliError> {
    if wanted.is_empty() {
        return Ok(all.iter().collect());
    }
    wanted
        .iter()
        .map(|w| {
            if all.contains(w) {
                Ok(w)
            } else {
                Err(CliError::Validation(format!("unknown {kind} `{w}`")))
            }
        })
        .collect()
}

fn selected_layers<'a>(m: &'a DatasetManifest, cfg: &RunConfig) -> Result<Vec<&'a LayerSpec>, CliError> {
    let ids: Vec<String> = m.layers.iter().map(|l| l.id.clone()).collect();
    let chosen = selected(&ids, &cfg.layers, "layer")?;
    Ok(chosen.into_iter().map(|id| m.layer(id).expect("checked above")).collect())
}

fn score_layer(m: &DatasetManifest, layer: &LayerSpec, classes: &[&String], cfg: &RunConfig) -> Result<LayerScores, CliError> {
    let report_cfg = cfg.report();
    let mut rows = Vec::with_capacity(classes.len() * layer.channels);
    for class in classes {
        let stacks = load_layer_stacks(m, class, &layer.id)?;
        let mut class_rows = stacks
            .par_iter()
            .map(|s| {
                let wide: Stack64 = s.convert()?;
                let report = unit_report(&wide, &report_cfg, &UnitContext::default())?;
                Ok(UnitRow {
                    class_id: (*class).clone(),
                    channel: s.channel_id,
                    samples: s.sample_count(),
                    mean: mean_activation(&wide),
                    report,
                })
            })
            .collect::<Result<Vec<UnitRow>, feature_entropy::Error>>()?;
        rows.append(&mut class_rows);
    }
    let selectivity = (0..layer.channels)
        .map(|ch| {
            if classes.len() < 2 {
                return Ok(None);
            }
            let means: Vec<f64> = rows.iter().filter(|r| r.channel == ch).map(|r| r.mean).collect();
            class_selectivity(&means).map(Some)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LayerScores {
        layer: layer.clone(),
        classes: classes.iter().map(|c| (*c).clone()).collect(),
        rows,
        selectivity,
    })
}

fn score_all(cfg: &RunConfig) -> Result<Vec<LayerScores>, CliError> {
    let m = manifest(cfg)?;
    let classes = selected(&m.classes, &cfg.classes, "class")?;
    selected_layers(&m, cfg)?
        .into_iter()
        .map(|layer| score_layer(&m, layer, &classes, cfg))
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct Histogram<'a> {
    class: &'a str,
    channel: usize,
    samples: usize,
    defined: usize,
    /// (birth rank, count), rank ascending.
    counts: Vec<(usize, usize)>,
}

pub fn analyze(cfg: &RunConfig) -> Result<(), CliError> {
    let mut written = Vec::new();
    for layer in score_all(cfg)? {
        let mut t = Table::new(
            "analyze",
            &[
                "class",
                "layer",
                "channel",
                "samples",
                "defined",
                "selective_rate",
                "feature_entropy",
                "l1_norm",
                "apoz",
                "class_selectivity",
            ],
        );
        for r in &layer.rows {
            t.push(vec![
                r.class_id.clone(),
                layer.layer.id.clone(),
                r.channel.to_string(),
                r.samples.to_string(),
                r.report.distribution.defined_count.to_string(),
                fmt_g(r.report.selective_rate),
                fmt_g(r.report.feature_entropy),
                fmt_g(r.report.l1_norm),
                fmt_g(r.report.apoz),
                opt(layer.selectivity[r.channel]),
            ]);
        }
        let stem = file_stem(&layer.layer.id);
        written.push(t.write(&cfg.out, &format!("analyze_{stem}.csv"))?);
        let hist: Vec<Histogram> = layer
            .rows
            .iter()
            .map(|r| Histogram {
                class: &r.class_id,
                channel: r.channel,
                samples: r.samples,
                defined: r.report.distribution.defined_count,
                counts: r.report.distribution.counts.iter().map(|(&k, &v)| (k, v)).collect(),
            })
            .collect();
        written.push(write_json(&cfg.out, &format!("analyze_{stem}.json"), "analyze", &hist)?);
    }
    announce(&written);
    Ok(())
}

pub fn summary(cfg: &RunConfig) -> Result<(), CliError> {
    let mut t = Table::new(
        "layer-summary",
        &["layer", "side", "channels", "classes", "mean_feature_entropy", "mean_selective_rate"],
    );
    for layer in score_all(cfg)? {
        let s = layer_summary(&layer.unit_scores())?;
        t.push(vec![
            s.layer_id,
            layer.layer.side.to_string(),
            s.unit_count.to_string(),
            s.class_count.to_string(),
            fmt_g(s.mean_feature_entropy),
            fmt_g(s.mean_selective_rate),
        ]);
    }
    announce(&[t.write(&cfg.out, "layer_summary.csv")?]);
    Ok(())
}

pub fn scatter(cfg: &RunConfig, channel: Option<usize>) -> Result<(), CliError> {
    let mut written = Vec::new();
    for layer in score_all(cfg)? {
        let channels: Vec<usize> = match channel {
            Some(c) if c >= layer.layer.channels => {
                return Err(CliError::Validation(format!(
                    "channel {c} out of range for layer `{}` ({} channels)",
                    layer.layer.id, layer.layer.channels
                )))
            }
            Some(c) => vec![c],
            None => (0..layer.layer.channels).collect(),
        };
        let scores = layer.unit_scores();
        let mut t = Table::new("scatter", &["layer", "channel", "class", "feature_entropy", "selective_rate"]);
        for ch in channels {
            let unit: Vec<UnitScore> = scores.iter().filter(|s| s.channel == ch).cloned().collect();
            for p in class_scatter(&unit)? {
                t.push(vec![
                    layer.layer.id.clone(),
                    ch.to_string(),
                    p.class_id,
                    fmt_g(p.feature_entropy),
                    fmt_g(p.selective_rate),
                ]);
            }
        }
        written.push(t.write(&cfg.out, &format!("scatter_{}.csv", file_stem(&layer.layer.id)))?);
    }
    announce(&written);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Indicator {
    FeatureEntropy,
    SelectiveRate,
    Fused,
    L1Norm,
    Apoz,
    ClassSelectivity,
}

impl Indicator {
    fn name(self) -> &'static str {
        match self {
            Indicator::FeatureEntropy => "feature_entropy",
            Indicator::SelectiveRate => "selective_rate",
            Indicator::Fused => "fused",
            Indicator::L1Norm => "l1_norm",
            Indicator::Apoz => "apoz",
            Indicator::ClassSelectivity => "class_selectivity",
        }
    }

    fn scores(self, layer: &LayerScores) -> Result<Vec<f64>, CliError> {
        Ok(match self {
            Indicator::FeatureEntropy => layer.channel_means(|r| r.report.feature_entropy),
            Indicator::SelectiveRate => layer.channel_means(|r| r.report.selective_rate),
            Indicator::Fused => layer.fused(),
            Indicator::L1Norm => layer.channel_means(|r| r.report.l1_norm),
            Indicator::Apoz => layer.channel_means(|r| r.report.apoz),
            Indicator::ClassSelectivity => layer
                .selectivity
                .iter()
                .map(|s| s.ok_or_else(|| CliError::Validation("class selectivity needs at least two classes".into())))
                .collect::<Result<_, _>>()?,
        })
    }
}

pub fn rank(cfg: &RunConfig, indicator: Indicator, direction: Direction) -> Result<(), CliError> {
    let mut written = Vec::new();
    for layer in score_all(cfg)? {
        let scores = indicator.scores(&layer)?;
        let ranking = rank_units(&layer.layer.id, indicator.name(), &scores, direction)?;
        let mut t = Table::new("rank", &["layer", "indicator", "direction", "position", "channel", "score"]);
        for (pos, &ch) in ranking.order.iter().enumerate() {
            t.push(vec![
                layer.layer.id.clone(),
                indicator.name().into(),
                direction.name().into(),
                (pos + 1).to_string(),
                ch.to_string(),
                fmt_g(scores[ch]),
            ]);
        }
        written.push(t.write(&cfg.out, &format!("rank_{}.csv", file_stem(&layer.layer.id)))?);
    }
    announce(&written);
    Ok(())
}

pub fn ablation(cfg: &RunConfig, indicator: Indicator, direction: Direction, steps: Option<usize>) -> Result<(), CliError> {
    let mut written = Vec::new();
    for layer in score_all(cfg)? {
        let scores = indicator.scores(&layer)?;
        let ranking = rank_units(&layer.layer.id, indicator.name(), &scores, direction)?;
        let plan = ablation_plan(&ranking, steps.unwrap_or(ranking.order.len()))?;
        let mut t = Table::new("ablation-plan", &["layer", "step", "channel", "removed"]);
        for (i, set) in plan.iter().enumerate() {
            let removed: Vec<String> = set.iter().map(|c| c.to_string()).collect();
            t.push(vec![
                layer.layer.id.clone(),
                (i + 1).to_string(),
                set.last().expect("non-empty step").to_string(),
                removed.join(" "),
            ]);
        }
        let stem = file_stem(&layer.layer.id);
        written.push(t.write(&cfg.out, &format!("ablation_{stem}.csv"))?);
        written.push(write_json(&cfg.out, &format!("ablation_{stem}.json"), "ablation-plan", &(&ranking, &plan))?);
    }
    announce(&written);
    Ok(())
}

pub fn prune(cfg: &RunConfig, ratio: f64) -> Result<(), CliError> {
    let mut written = Vec::new();
    for layer in score_all(cfg)? {
        let mut entropy = vec![Vec::with_capacity(layer.classes.len()); layer.layer.channels];
        for r in &layer.rows {
            entropy[r.channel].push(r.report.feature_entropy);
        }
        let rates = layer.channel_means(|r| r.report.selective_rate);
        let plan = prune_selection(&entropy, &rates, ratio)?;
        let h = layer.channel_means(|r| r.report.feature_entropy);
        let mut t = Table::new(
            "prune-plan",
            &["layer", "channel", "mean_feature_entropy", "mean_selective_rate", "fused", "action"],
        );
        for ch in 0..layer.layer.channels {
            t.push(vec![
                layer.layer.id.clone(),
                ch.to_string(),
                fmt_g(h[ch]),
                fmt_g(rates[ch]),
                fmt_g(plan.fused[ch]),
                if plan.drop.contains(&ch) { "drop" } else { "keep" }.into(),
            ]);
        }
        let stem = file_stem(&layer.layer.id);
        written.push(t.write(&cfg.out, &format!("prune_{stem}.csv"))?);
        written.push(write_json(&cfg.out, &format!("prune_{stem}.json"), "prune-plan", &plan)?);
    }
    announce(&written);
    Ok(())
}

pub fn sample_size(cfg: &RunConfig, sizes: &[usize], trials: usize, channel: usize) -> Result<(), CliError> {
    let m = manifest(cfg)?;
    let classes = selected(&m.classes, &cfg.classes, "class")?;
    let mut written = Vec::new();
    for layer in selected_layers(&m, cfg)? {
        let mut t = Table::new(
            "sample-size",
            &["class", "layer", "channel", "size", "trials", "mean_feature_entropy", "sd_feature_entropy"],
        );
        for class in &classes {
            let stack = load_class_stack(&m, class, &layer.id, channel)?;
            for row in sample_size_study(&stack, sizes, trials, cfg.seed, &cfg.report())? {
                t.push(vec![
                    (*class).clone(),
                    layer.id.clone(),
                    channel.to_string(),
                    row.size.to_string(),
                    row.trials.to_string(),
                    fmt_g(row.feature_entropy.mean),
                    fmt_g(row.feature_entropy.sd),
                ]);
            }
        }
        written.push(t.write(&cfg.out, &format!("sample_size_{}.csv", file_stem(&layer.id)))?);
    }
    announce(&written);
    Ok(())
}

pub struct SyntheticArgs<'a> {
    pub kinds: &'a [SyntheticKind],
    pub side: usize,
    pub samples: usize,
    pub channels: usize,
    pub noise: f64,
}

/// Writes one class per kind; every (class, layer, channel) gets its own
/// derived seed.
pub fn synthetic(cfg: &RunConfig, args: &SyntheticArgs) -> Result<(), CliError> {
    if args.kinds.is_empty() || args.channels == 0 {
        return Err(CliError::Validation("need at least one kind and one channel".into()));
    }
    let layers: Vec<String> = if cfg.layers.is_empty() { vec!["synthetic".into()] } else { cfg.layers.clone() };
    let mut writer = DatasetWriter::create(&cfg.out)?;
    for (ki, kind) in args.kinds.iter().enumerate() {
        for (li, layer) in layers.iter().enumerate() {
            let base = child_seed(child_seed(cfg.seed, ki as u64), li as u64);
            let stacks = (0..args.channels)
                .into_par_iter()
                .map(|ch| {
                    let spec = SyntheticSpec::new(*kind, args.side, args.samples, args.noise, child_seed(base, ch as u64));
                    generate_synthetic::<f32>(&spec)
                })
                .collect::<Result<Vec<Stack32>, _>>()?;
            writer.add_tensor(kind.name(), layer, &stacks)?;
        }
    }
    announce(&[writer.finish()?]);
    Ok(())
}

fn random_graph(seed: u64, max_vertices: usize) -> (usize, Vec<(usize, usize)>) {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let n = rng.random_range(2..=max_vertices);
    let density: f64 = rng.random();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    for i in (1..edges.len()).rev() {
        edges.swap(i, rng.random_range(0..=i));
    }
    (n, edges)
}

/// Number of instances (out of `instances`) on which the incremental engine
/// agrees with the brute-force oracle at every rank, for β₀ and β₁.
pub fn oracle_matches(instances: usize, max_vertices: usize, seed: u64) -> Result<usize, CliError> {
    if !(2..=feature_entropy::homology::BRUTE_FORCE_VERTEX_CAP).contains(&max_vertices) {
        return Err(CliError::Validation(format!(
            "--max-vertices must lie in 2..={}",
            feature_entropy::homology::BRUTE_FORCE_VERTEX_CAP
        )));
    }
    let results = (0..instances)
        .into_par_iter()
        .map(|i| {
            let (n, edges) = random_graph(child_seed(seed, i as u64), max_vertices);
            let mut grid = vec![vec![0.0f64; n]; n];
            for (r, &(a, b)) in edges.iter().enumerate() {
                grid[a][b] = (edges.len() - r) as f64;
            }
            let f = build_filtration(&build_adjacency(&ActivationUnit::from_rows(grid)?));
            for k in 0..=1 {
                let curve = betti_curve(&f, k)?;
                for v in 1..=f.total_ranks() {
                    if curve.values[v - 1] != brute_force_betti(&edges[..v], n, k)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>, feature_entropy::Error>>()?;
    Ok(results.into_iter().filter(|&ok| ok).count())
}

pub fn oracle_check(cfg: &RunConfig, instances: usize, max_vertices: usize) -> Result<(), CliError> {
    let ok = oracle_matches(instances, max_vertices, cfg.seed)?;
    println!("{ok}/{instances} match");
    if ok == instances {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("{} oracle mismatches", instances - ok)))
    }
}

pub fn rescale_check(cfg: &RunConfig, factor: f64) -> Result<(), CliError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(CliError::Validation(format!("--factor must be positive and finite, got {factor}")));
    }
    let m = manifest(cfg)?;
    let classes = selected(&m.classes, &cfg.classes, "class")?;
    let mut written = Vec::new();
    let mut broken = Vec::new();
    for layer in selected_layers(&m, cfg)? {
        let mut t = Table::new(
            "rescale-check",
            &["class", "layer", "channel", "indicator", "before", "after", "relative_change", "identical"],
        );
        for class in &classes {
            let stacks = load_layer_stacks(&m, class, &layer.id)?;
            // widened to f64, where distinct f32 values stay distinct after
            // any in-range rescaling
            let audits = stacks
                .par_iter()
                .map(|s| {
                    let wide: Stack64 = s.convert()?;
                    rescale_audit(&wide, &factor, &cfg.report())
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (ch, rows) in audits.into_iter().enumerate() {
                for row in rows {
                    if row.indicator != "l1_norm" && !row.identical {
                        broken.push(format!("{class}/{}/{ch}: {}", layer.id, row.indicator));
                    }
                    t.push(vec![
                        (*class).clone(),
                        layer.id.clone(),
                        ch.to_string(),
                        row.indicator,
                        fmt_g(row.before),
                        fmt_g(row.after),
                        fmt_g(row.relative_change),
                        row.identical.to_string(),
                    ]);
                }
            }
        }
        written.push(t.write(&cfg.out, &format!("rescale_check_{}.csv", file_stem(&layer.id)))?);
    }
    announce(&written);
    if broken.is_empty() {
        println!("rescale-check: topological indicators identical at factor {}", fmt_g(factor));
        Ok(())
    } else {
        Err(CliError::Invariant(format!("not invariant under rescaling: {}", broken.join(", "))))
    }
}

