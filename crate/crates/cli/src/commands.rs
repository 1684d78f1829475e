//! Subcommand implementations.

use std::path::{Path, PathBuf};

use keyshot_core::{
    activity_recall, exact_select, f_measure_frames, f_measure_shot, fit_pattern, lazy_greedy,
    mixing_coefficients_excluding_zero, train, Budget, FrameSummary, Objective, PropertyEvaluator, PropertyVector,
    PropertyWeight, Representativeness, SummarySet, TrainReport, TrainingExample, VideoClass, EXACT_MAX_SHOTS,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BudgetChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{read_json, to_json, write_json};
use crate::manifest::{LoadedVideo, Manifest, Split};
use crate::synth::{self, SynthSpec};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const MIXING_SCHEMA_VERSION: u32 = 1;
pub const EVALUATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub schema_version: u32,
    pub video: String,
    pub method: Method,
    pub weights: PropertyWeight,
    pub representativeness: Representativeness,
    pub budget: BudgetChoice,
    pub indices: Vec<usize>,
    pub properties: PropertyVector,
    pub score: f64,
    pub evaluations: usize,
}

/// Writes to `out`, or prints to stdout when no path is given.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            print!("{}", to_json(value));
            Ok(())
        }
    }
}

/// Weights from a train report (picked by class), a `{w, class}` object or a
/// bare 4-array, plus the representativeness the report was trained with.
fn load_weights(path: &Path, class: Option<VideoClass>) -> CliResult<(PropertyWeight, Option<Representativeness>)> {
    let value: serde_json::Value = read_json(path)?;
    let bad = |e: String| CliError::invariant(path, e);
    if value.get("w_e").is_some() {
        let report: TrainReport = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        let class = class.ok_or_else(|| bad("a train report needs a video with a class".into()))?;
        let w = report.weight_for(class);
        return Ok((PropertyWeight::new(w.w, w.class_tag)?, Some(report.config.representativeness)));
    }
    let w = if value.is_array() {
        PropertyWeight::custom(serde_json::from_value(value).map_err(|e| bad(e.to_string()))?)
    } else {
        let w: PropertyWeight = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        PropertyWeight::new(w.w, w.class_tag)
    };
    Ok((w?, None))
}

fn core_budget(video: &LoadedVideo, budget: BudgetChoice) -> CliResult<Budget> {
    Ok(match budget {
        BudgetChoice::Count(c) => Budget::Count(c),
        BudgetChoice::Ratio(r) => Budget::duration_ratio(video.shot_durations(), r)?,
    })
}

pub struct SelectArgs<'a> {
    pub manifest: &'a Path,
    pub video: &'a str,
    pub weights: &'a Path,
    pub budget: Option<BudgetChoice>,
    pub config: Option<&'a Path>,
    pub representativeness: Option<Representativeness>,
    pub out: Option<&'a Path>,
}

fn prepare_selection(a: &SelectArgs<'_>) -> CliResult<(LoadedVideo, PropertyWeight, Representativeness, BudgetChoice)> {
    let manifest = Manifest::load(a.manifest)?;
    let entry = manifest.video(a.video)?;
    let config_budget = match a.config {
        Some(p) => RunConfig::load(p)?.budget,
        None => None,
    };
    let budget = a
        .budget
        .or(config_budget)
        .or(manifest.defaults.budget)
        .unwrap_or_default();
    budget.validate().map_err(CliError::usage)?;
    let video = manifest.load_video(entry)?;
    let (weight, trained_mode) = load_weights(a.weights, video.entry.class)?;
    let mode = a.representativeness.or(trained_mode).unwrap_or_default();
    Ok((video, weight, mode, budget))
}

pub fn summarize(a: &SelectArgs<'_>) -> CliResult<()> {
    let (video, weight, mode, budget) = prepare_selection(a)?;
    let evaluator = PropertyEvaluator::new(&video.matrix, mode)?;
    let objective = Objective::new(&evaluator, weight);
    let sel = lazy_greedy(&objective, &core_budget(&video, budget)?)?;
    if sel.set.is_empty() {
        return Err(keyshot_core::Error::EmptySummary.into());
    }
    let report = SummaryReport {
        schema_version: SUMMARY_SCHEMA_VERSION,
        video: video.entry.id.clone(),
        method: Method::Greedy,
        weights: weight,
        representativeness: mode,
        budget,
        indices: sel.set.indices().to_vec(),
        properties: objective.properties(&sel.set)?,
        score: sel.score,
        evaluations: sel.evaluations,
    };
    info!("{}: {} shots, score {}", report.video, report.indices.len(), report.score);
    emit(a.out, &report)
}

pub fn oracle(a: &SelectArgs<'_>) -> CliResult<()> {
    let (video, weight, mode, budget) = prepare_selection(a)?;
    let BudgetChoice::Count(c) = budget else {
        return Err(CliError::usage("oracle needs a shot-count budget"));
    };
    let q = video.matrix.num_shots();
    if q > EXACT_MAX_SHOTS {
        return Err(keyshot_core::Error::InstanceTooLarge { shots: q, cap: EXACT_MAX_SHOTS }.into());
    }
    let evaluator = PropertyEvaluator::new(&video.matrix, mode)?;
    let objective = Objective::new(&evaluator, weight);
    let set = exact_select(&objective, c)?;
    let report = SummaryReport {
        schema_version: SUMMARY_SCHEMA_VERSION,
        video: video.entry.id.clone(),
        method: Method::Exact,
        weights: weight,
        representativeness: mode,
        budget,
        indices: set.indices().to_vec(),
        properties: objective.properties(&set)?,
        score: objective.score(&set)?,
        evaluations: binomial(q, c),
    };
    emit(a.out, &report)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn load_split(manifest: &Manifest, split: Split) -> CliResult<Vec<LoadedVideo>> {
    manifest
        .videos
        .par_iter()
        .filter(|e| e.split == split)
        .map(|e| manifest.load_video(e))
        .collect()
}

pub fn train_cmd(manifest: &Path, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let manifest = Manifest::load(manifest)?;
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let videos = load_split(&manifest, Split::Train)?;
    if videos.is_empty() {
        return Err(CliError::new("empty-set", "manifest has no training videos"));
    }
    let examples = videos
        .into_iter()
        .map(|v| {
            let class = v.class()?;
            let gt = v.gt_set()?.clone();
            let mut ex = TrainingExample::new(v.entry.id.clone(), class, v.matrix, gt)?;
            ex.gamma = v.entry.gamma;
            Ok(ex)
        })
        .collect::<CliResult<Vec<_>>>()?;
    info!("training on {} videos", examples.len());
    let report = train(&examples, &cfg.train)?;
    for f in &report.failures {
        warn!("{} excluded: [{}] {}", f.id, f.category, f.message);
    }
    emit(out, &report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingRow {
    pub id: String,
    pub class: VideoClass,
    pub pattern_nonzeros: usize,
    /// `None` when the video's pattern is zero and it was left out.
    pub b_e: Option<f64>,
    pub b_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub schema_version: u32,
    pub l1_weight: f64,
    pub videos: Vec<MixingRow>,
}

pub fn mixcoef(manifest: &Path, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let manifest = Manifest::load(manifest)?;
    let l1 = match config {
        Some(p) => RunConfig::load(p)?.train.lasso.l1_weight,
        None => keyshot_core::learning::LassoConfig::default().l1_weight,
    };
    let videos = load_split(&manifest, Split::Train)?;
    let fitted = videos
        .par_iter()
        .map(|v| {
            let gt = v.gt_set()?;
            Ok((fit_pattern(&v.matrix, &gt.labels(), l1)?, v.class()?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let pairs = mixing_coefficients_excluding_zero(&fitted)?;
    let rows = videos
        .iter()
        .zip(&fitted)
        .zip(pairs)
        .map(|((v, (p, class)), pair)| MixingRow {
            id: v.entry.id.clone(),
            class: *class,
            pattern_nonzeros: p.nonzeros(),
            b_e: pair.map(|m| m.b_e),
            b_r: pair.map(|m| m.b_r),
        })
        .collect();
    emit(
        out,
        &MixingReport {
            schema_version: MIXING_SCHEMA_VERSION,
            l1_weight: l1,
            videos: rows,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    ShotF1,
    FrameF1,
    Recall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub metric: Metric,
    pub rows: Vec<MetricRow>,
    pub mean: f64,
}

pub struct EvaluateArgs<'a> {
    pub manifest: &'a Path,
    pub summaries: &'a Path,
    pub metric: Metric,
    pub split: Option<Split>,
    pub min_overlap_frames: u64,
    pub out: Option<&'a Path>,
}

pub fn evaluate(a: &EvaluateArgs<'_>) -> CliResult<()> {
    let manifest = Manifest::load(a.manifest)?;
    let mut rows = Vec::new();
    for entry in manifest.videos.iter().filter(|e| a.split.is_none_or(|s| e.split == s)) {
        let path: PathBuf = a.summaries.join(format!("{}.json", entry.id));
        if !path.is_file() {
            continue;
        }
        let summary: SummaryReport = read_json(&path)?;
        let video = manifest.load_video(entry)?;
        let s = SummarySet::new(summary.indices.clone(), video.matrix.num_shots())
            .map_err(|e| CliError::invariant(&path, e))?;
        rows.push(metric_row(&video, &s, a.metric, a.min_overlap_frames)?);
    }
    if rows.is_empty() {
        return Err(CliError::new(
            "empty-set",
            format!("no summaries for manifest videos in {}", a.summaries.display()),
        ));
    }
    let mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;
    emit(
        a.out,
        &EvaluationReport {
            schema_version: EVALUATION_SCHEMA_VERSION,
            metric: a.metric,
            rows,
            mean,
        },
    )
}

fn metric_row(video: &LoadedVideo, s: &SummarySet, metric: Metric, min_overlap: u64) -> CliResult<MetricRow> {
    let id = video.entry.id.clone();
    match metric {
        Metric::ShotF1 => {
            let pr = f_measure_shot(s, video.gt_set()?)?;
            Ok(MetricRow { id, value: pr.f, precision: Some(pr.precision), recall: Some(pr.recall) })
        }
        Metric::FrameF1 => {
            let frames = video.matrix.shot_frames().ok_or(keyshot_core::Error::MissingFrameMap)?;
            let auto = FrameSummary::from_shots(s, frames)?;
            let gt = video.gt.as_ref();
            let humans = match gt.map(|g| g.humans.clone()).filter(|h| !h.is_empty()) {
                Some(h) => h,
                None => vec![FrameSummary::from_shots(video.gt_set()?, frames)?],
            };
            Ok(MetricRow { id, value: f_measure_frames(&auto, &humans)?, precision: None, recall: None })
        }
        Metric::Recall => {
            let ann = video.activities.as_ref().ok_or_else(|| {
                CliError::new("missing-activities", format!("video {id:?} has no activity annotation"))
            })?;
            let r = activity_recall(s, video.matrix.shot_frames(), ann, min_overlap)?;
            Ok(MetricRow { id, value: r, precision: None, recall: None })
        }
    }
}

pub fn synth_cmd(seed: u64, spec: Option<&Path>, out: &Path) -> CliResult<()> {
    let spec = match spec {
        Some(p) => toml::from_str::<SynthSpec>(&crate::manifest::read_text(p)?)
            .map_err(|e| CliError::new("config-error", format!("{}: {e}", p.display())))?,
        None => SynthSpec::default(),
    };
    let report = synth::generate(seed, &spec, out)?;
    info!("wrote {} videos to {}", report.videos.len(), out.display());
    Ok(())
}
