//! Property-weight learning.
//!
//! Each training video gets its own weight vector from projected subgradient
//! descent on the regularized structured hinge loss. The per-video vectors are
//! then averaged with the mixing-coefficients as weights: `b_e` for the edited
//! weight `w_e`, `b_r` for the raw weight `w_r`. Setting
//! [`TrainConfig::algorithm1_literal`] swaps that pairing.
//!
//! A joint mode, which descends the pooled weighted objective directly, is run
//! alongside for comparison when [`TrainConfig::compare_joint`] is set.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{exact_select, greedy_select};
use crate::objective::{Objective, PropertyWeight, WeightClass};
use crate::pattern::{fit_pattern, mixing_from_similarities, similarity_matrix, MixingPair, VideoClass};
use crate::properties::{PropertyEvaluator, Representativeness};
use crate::video::{FeatureMatrix, SummarySet};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Videos up to this size use exhaustive inner maximization under `auto`.
pub const EXACT_AUTO_MAX_SHOTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactInner {
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    #[default]
    Constant,
    /// `γ / √t` at iteration t.
    InvSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaConfig {
    pub schedule: StepSchedule,
    pub value: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            schedule: StepSchedule::Constant,
            value: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub l1_weight: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { l1_weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda: f64,
    pub iterations: usize,
    pub repeats: usize,
    /// Share of each class drawn (without replacement) for every repeat.
    pub subsample_fraction: f64,
    pub seed: u64,
    pub loss_augment: bool,
    pub algorithm1_literal: bool,
    pub exact_inner: ExactInner,
    pub representativeness: Representativeness,
    pub compare_joint: bool,
    pub gamma: GammaConfig,
    pub lasso: LassoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            iterations: 100,
            repeats: 50,
            subsample_fraction: 0.8,
            seed: 0,
            loss_augment: true,
            algorithm1_literal: false,
            exact_inner: ExactInner::Auto,
            representativeness: Representativeness::Adjacent,
            compare_joint: true,
            gamma: GammaConfig::default(),
            lasso: LassoConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("config: {what}")));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1");
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad("subsample_fraction must lie in (0, 1]");
        }
        if !(self.gamma.value >= 0.0 && self.gamma.value.is_finite()) {
            return bad("gamma must be finite and >= 0");
        }
        if !(self.lasso.l1_weight > 0.0 && self.lasso.l1_weight.is_finite()) {
            return bad("lasso.l1_weight must be positive");
        }
        Ok(())
    }

    fn step_size(&self, gamma: f64, t: usize) -> f64 {
        match self.gamma.schedule {
            StepSchedule::Constant => gamma,
            StepSchedule::InvSqrt => gamma / (t as f64).sqrt(),
        }
    }
}

/// Inner maximizer used for loss-augmented inference during learning.
pub fn inner_argmax(obj: &Objective<'_, '_>, budget: usize, mode: ExactInner) -> Result<SummarySet> {
    let q = obj.evaluator().num_shots();
    let exact = match mode {
        ExactInner::Always => true,
        ExactInner::Never => false,
        ExactInner::Auto => q <= EXACT_AUTO_MAX_SHOTS,
    };
    if exact {
        exact_select(obj, budget)
    } else {
        greedy_select(obj, budget)
    }
}

/// `L_V(w) + λ/2‖w‖²` for a single video.
pub fn regularized_hinge(
    evaluator: &PropertyEvaluator<'_>,
    w: [f64; 4],
    gt: &SummarySet,
    lambda: f64,
    mode: ExactInner,
) -> Result<f64> {
    let weight = PropertyWeight::custom(w)?;
    let hinge = crate::objective::hinge_loss(evaluator, weight, gt, |obj, c| inner_argmax(obj, c, mode))?;
    Ok(hinge + 0.5 * lambda * norm_sq(&w))
}

fn norm_sq(w: &[f64; 4]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub id: String,
    pub class: VideoClass,
    pub video: FeatureMatrix,
    pub gt: SummarySet,
    /// Supplied mixing pair; computed from summarization patterns when absent.
    pub mixing: Option<MixingPair>,
    /// Per-video learning rate overriding the configured one.
    pub gamma: Option<f64>,
}

impl TrainingExample {
    pub fn new(id: impl Into<String>, class: VideoClass, video: FeatureMatrix, gt: SummarySet) -> Result<Self> {
        gt.check_video(video.num_shots())?;
        if gt.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        Ok(Self {
            id: id.into(),
            class,
            video,
            gt,
            mixing: None,
            gamma: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdOutcome {
    pub w: [f64; 4],
    /// `w^(0)`, …, `w^(I)`.
    pub iterates: Vec<[f64; 4]>,
    /// Regularized hinge at each iterate.
    pub trace: Vec<f64>,
}

/// Projected subgradient descent from `w = 0` for one video.
pub fn psd_fit(example: &TrainingExample, cfg: &TrainConfig) -> Result<PsdOutcome> {
    let evaluator = PropertyEvaluator::new(&example.video, cfg.representativeness)?;
    psd_with(&evaluator, &example.gt, example.gamma.unwrap_or(cfg.gamma.value), cfg)
}

fn psd_with(evaluator: &PropertyEvaluator<'_>, gt: &SummarySet, gamma: f64, cfg: &TrainConfig) -> Result<PsdOutcome> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("learning rate must be finite and >= 0, got {gamma}")));
    }
    let f_gt = evaluator.evaluate(gt)?.to_array();
    let mut w = [0.0; 4];
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut iterates = Vec::with_capacity(cfg.iterations + 1);
    iterates.push(w);
    for t in 1..=cfg.iterations {
        let plain = Objective::new(evaluator, PropertyWeight::custom(w)?);
        let (s_star, hinge) = if cfg.loss_augment {
            let obj = plain.with_loss_augment(gt)?;
            let s = inner_argmax(&obj, gt.len(), cfg.exact_inner)?;
            let h = obj.score(&s)? - plain.score(gt)?;
            (s, h)
        } else {
            let s = inner_argmax(&plain, gt.len(), cfg.exact_inner)?;
            let h = regularized_hinge(evaluator, w, gt, 0.0, cfg.exact_inner)?;
            (s, h)
        };
        trace.push(hinge + 0.5 * cfg.lambda * norm_sq(&w));
        let f_star = evaluator.evaluate(&s_star)?.to_array();
        let step = cfg.step_size(gamma, t);
        for i in 0..4 {
            let g = cfg.lambda * w[i] + f_star[i] - f_gt[i];
            w[i] = (w[i] - step * g).max(0.0);
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NaNGuard { iteration: t });
        }
        iterates.push(w);
    }
    trace.push(regularized_hinge(evaluator, w, gt, cfg.lambda, cfg.exact_inner)?);
    Ok(PsdOutcome { w, iterates, trace })
}

/// Mixing-weighted means of per-video weights, returned as `(w_e, w_r)`.
pub fn aggregate_weights(
    per_video_w: &[[f64; 4]],
    pairs: &[MixingPair],
    algorithm1_literal: bool,
) -> Result<(PropertyWeight, PropertyWeight)> {
    if per_video_w.is_empty() || per_video_w.len() != pairs.len() {
        return Err(Error::InvalidInput(format!(
            "{} weight vectors for {} mixing pairs",
            per_video_w.len(),
            pairs.len()
        )));
    }
    let weighted_mean = |coef: &dyn Fn(&MixingPair) -> f64, name: &str| -> Result<[f64; 4]> {
        let total: f64 = pairs.iter().map(coef).sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateWeights(format!("sum of {name} is {total}")));
        }
        let mut acc = [0.0; 4];
        for (w, p) in per_video_w.iter().zip(pairs) {
            let b = coef(p);
            for i in 0..4 {
                acc[i] += b * w[i];
            }
        }
        Ok(acc.map(|a| a / total))
    };
    let by_e = weighted_mean(&|p| p.b_e, "b_e")?;
    let by_r = weighted_mean(&|p| p.b_r, "b_r")?;
    let (we, wr) = if algorithm1_literal { (by_r, by_e) } else { (by_e, by_r) };
    Ok((
        PropertyWeight::new(we, WeightClass::Edited)?,
        PropertyWeight::new(wr, WeightClass::Raw)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFit {
    pub id: String,
    pub class: VideoClass,
    pub w: [f64; 4],
    /// Mixing pair over the full training set.
    pub mixing: MixingPair,
    pub pattern_nonzeros: Option<usize>,
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub videos: Vec<String>,
    pub w_e: [f64; 4],
    pub w_r: [f64; 4],
    /// Weighted regularized objectives on the full training set.
    pub objective_e: f64,
    pub objective_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub w_e: [f64; 4],
    pub w_r: [f64; 4],
    pub objective_e: f64,
    pub objective_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFailure {
    pub id: String,
    pub category: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub config: TrainConfig,
    pub w_e: PropertyWeight,
    pub w_r: PropertyWeight,
    pub videos: Vec<VideoFit>,
    pub repeats: Vec<RepeatSummary>,
    pub joint: Option<JointSummary>,
    pub failures: Vec<VideoFailure>,
}

impl TrainReport {
    pub fn weight_for(&self, class: VideoClass) -> PropertyWeight {
        match class {
            VideoClass::Edited => self.w_e,
            VideoClass::Raw => self.w_r,
        }
    }
}

struct Prepared<'a> {
    example: &'a TrainingExample,
    evaluator: PropertyEvaluator<'a>,
    psd: PsdOutcome,
    pattern: Option<crate::pattern::SummarizationPattern>,
}

fn prepare<'a>(example: &'a TrainingExample, cfg: &TrainConfig, fit_patterns: bool) -> Result<Prepared<'a>> {
    let evaluator = PropertyEvaluator::new(&example.video, cfg.representativeness)?;
    let psd = psd_with(&evaluator, &example.gt, example.gamma.unwrap_or(cfg.gamma.value), cfg)?;
    let pattern = if fit_patterns {
        let p = fit_pattern(&example.video, &example.gt.labels(), cfg.lasso.l1_weight)?;
        if p.norm() == 0.0 {
            return Err(Error::ZeroPattern { index: 0 });
        }
        Some(p)
    } else {
        None
    };
    Ok(Prepared {
        example,
        evaluator,
        psd,
        pattern,
    })
}

/// `(1/|T|) Σ b_V L_V(w) + λ/2‖w‖²` over the given videos.
fn weighted_objective(videos: &[Prepared<'_>], coef: &[f64], w: [f64; 4], cfg: &TrainConfig) -> Result<f64> {
    let losses = videos
        .par_iter()
        .map(|v| regularized_hinge(&v.evaluator, w, &v.example.gt, 0.0, cfg.exact_inner))
        .collect::<Result<Vec<f64>>>()?;
    let mean = losses.iter().zip(coef).map(|(l, b)| b * l).sum::<f64>() / videos.len() as f64;
    Ok(mean + 0.5 * cfg.lambda * norm_sq(&w))
}

/// Stratified draw of `subsample_fraction` of each class, keeping at least two
/// videos per class when available. Returned positions are sorted.
fn draw_subset(classes: &[VideoClass], fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut picked = Vec::new();
    for class in [VideoClass::Edited, VideoClass::Raw] {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let take = ((fraction * members.len() as f64).ceil() as usize)
            .max(members.len().min(2))
            .min(members.len());
        members.shuffle(rng);
        picked.extend_from_slice(&members[..take]);
    }
    picked.sort_unstable();
    picked
}

fn joint_descent(videos: &[Prepared<'_>], coef: &[f64], cfg: &TrainConfig) -> Result<[f64; 4]> {
    let f_gt: Vec<[f64; 4]> = videos
        .iter()
        .map(|v| v.evaluator.evaluate(&v.example.gt).map(|f| f.to_array()))
        .collect::<Result<_>>()?;
    let n = videos.len() as f64;
    let mut w = [0.0; 4];
    for t in 1..=cfg.iterations {
        let weight = PropertyWeight::custom(w)?;
        let f_star = videos
            .par_iter()
            .map(|v| {
                let plain = Objective::new(&v.evaluator, weight);
                let s = if cfg.loss_augment {
                    inner_argmax(&plain.with_loss_augment(&v.example.gt)?, v.example.gt.len(), cfg.exact_inner)?
                } else {
                    inner_argmax(&plain, v.example.gt.len(), cfg.exact_inner)?
                };
                v.evaluator.evaluate(&s).map(|f| f.to_array())
            })
            .collect::<Result<Vec<[f64; 4]>>>()?;
        let step = cfg.step_size(cfg.gamma.value, t);
        let mut g = w.map(|x| cfg.lambda * x);
        for ((fs, fg), b) in f_star.iter().zip(&f_gt).zip(coef) {
            for i in 0..4 {
                g[i] += b * (fs[i] - fg[i]) / n;
            }
        }
        for i in 0..4 {
            w[i] = (w[i] - step * g[i]).max(0.0);
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NaNGuard { iteration: t });
        }
    }
    Ok(w)
}

fn mixing_for(
    subset: &[usize],
    videos: &[Prepared<'_>],
    similarities: Option<&Vec<Vec<f64>>>,
) -> Result<Vec<MixingPair>> {
    match similarities {
        Some(d) => {
            let sub: Vec<Vec<f64>> = subset
                .iter()
                .map(|&i| subset.iter().map(|&j| d[i][j]).collect())
                .collect();
            let classes: Vec<VideoClass> = subset.iter().map(|&i| videos[i].example.class).collect();
            mixing_from_similarities(&sub, &classes)
        }
        None => Ok(subset
            .iter()
            .map(|&i| videos[i].example.mixing.expect("supplied mixing"))
            .collect()),
    }
}

/// Full pipeline: per-video descent, mixing-coefficients and weighted
/// aggregation, averaged over seeded repeats.
pub fn train(dataset: &[TrainingExample], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let fit_patterns = !dataset.iter().all(|e| e.mixing.is_some());

    let outcomes: Vec<Result<Prepared<'_>>> = dataset
        .par_iter()
        .map(|example| prepare(example, cfg, fit_patterns))
        .collect();
    let mut videos = Vec::new();
    let mut failures = Vec::new();
    for (example, outcome) in dataset.iter().zip(outcomes) {
        match outcome {
            Ok(p) => videos.push(p),
            Err(e) => {
                warn!("video {} excluded from training: {e}", example.id);
                failures.push(VideoFailure {
                    id: example.id.clone(),
                    category: e.category().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    if videos.is_empty() {
        return Err(Error::AllVideosFailed(dataset.len()));
    }

    let similarities = if fit_patterns {
        let patterns: Vec<_> = videos.iter().map(|v| v.pattern.as_ref().expect("fitted")).collect();
        Some(similarity_matrix(&patterns)?)
    } else {
        None
    };
    let everyone: Vec<usize> = (0..videos.len()).collect();
    let full_mixing = mixing_for(&everyone, &videos, similarities.as_ref())?;
    let full_e: Vec<f64> = full_mixing.iter().map(|p| p.b_e).collect();
    let full_r: Vec<f64> = full_mixing.iter().map(|p| p.b_r).collect();
    let classes: Vec<VideoClass> = videos.iter().map(|v| v.example.class).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut repeats = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let subset = if cfg.repeats == 1 {
            everyone.clone()
        } else {
            draw_subset(&classes, cfg.subsample_fraction, &mut rng)
        };
        let pairs = mixing_for(&subset, &videos, similarities.as_ref())?;
        let ws: Vec<[f64; 4]> = subset.iter().map(|&i| videos[i].psd.w).collect();
        let (w_e, w_r) = aggregate_weights(&ws, &pairs, cfg.algorithm1_literal)?;
        repeats.push(RepeatSummary {
            videos: subset.iter().map(|&i| videos[i].example.id.clone()).collect(),
            w_e: w_e.w,
            w_r: w_r.w,
            objective_e: weighted_objective(&videos, &full_e, w_e.w, cfg)?,
            objective_r: weighted_objective(&videos, &full_r, w_r.w, cfg)?,
        });
    }
    let mean = |pick: &dyn Fn(&RepeatSummary) -> [f64; 4]| {
        let mut acc = [0.0; 4];
        for r in &repeats {
            let w = pick(r);
            for i in 0..4 {
                acc[i] += w[i];
            }
        }
        acc.map(|a| a / repeats.len() as f64)
    };
    let w_e = PropertyWeight::new(mean(&|r| r.w_e), WeightClass::Edited)?;
    let w_r = PropertyWeight::new(mean(&|r| r.w_r), WeightClass::Raw)?;

    let joint = if cfg.compare_joint {
        let (ce, cr) = if cfg.algorithm1_literal { (&full_r, &full_e) } else { (&full_e, &full_r) };
        let je = joint_descent(&videos, ce, cfg)?;
        let jr = joint_descent(&videos, cr, cfg)?;
        Some(JointSummary {
            w_e: je,
            w_r: jr,
            objective_e: weighted_objective(&videos, &full_e, je, cfg)?,
            objective_r: weighted_objective(&videos, &full_r, jr, cfg)?,
        })
    } else {
        None
    };

    let fits = videos
        .iter()
        .zip(&full_mixing)
        .map(|(v, m)| VideoFit {
            id: v.example.id.clone(),
            class: v.example.class,
            w: v.psd.w,
            mixing: *m,
            pattern_nonzeros: v.pattern.as_ref().map(|p| p.nonzeros()),
            loss_trace: v.psd.trace.clone(),
        })
        .collect();

    Ok(TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        w_e,
        w_r,
        videos: fits,
        repeats,
        joint,
        failures,
    })
}
