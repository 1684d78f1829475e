//! Seeded synthetic datasets with a planted optimum.
//!
//! Every video is a run of contiguous segments, one per budgeted key shot.
//! Shots in a segment scatter around a shared centre, and one shot per segment
//! carries most of the importance. Edited-style videos have even, loosely
//! clustered segments; raw-style videos have uneven runs of near-duplicates
//! with low importance outside the key shots. The ground truth is the
//! maximizer of the planted class weight, so a learner that recovers a
//! suitable weight reproduces it exactly.

use std::path::Path;

use keyshot_core::{
    exact_select, lazy_greedy, Budget, FeatureMatrix, FrameRange, Objective, PropertyEvaluator, PropertyWeight,
    Representativeness, SummarySet, VideoClass, WeightClass, EXACT_MAX_SHOTS,
};
use keyshot_core::{Activity, ActivityAnnotation};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::BudgetChoice;
use crate::error::{CliError, CliResult};
use crate::io::{encode_binary, encode_csv, write_atomic, write_json};
use crate::manifest::{Defaults, GroundTruthFile, ManifestFile, Split, VideoEntry, MANIFEST_SCHEMA_VERSION};

pub const PLANTED_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    #[default]
    Binary,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtMethod {
    /// Exhaustive up to the search cap, greedy above it.
    #[default]
    Auto,
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub edited: usize,
    pub raw: usize,
    pub heldout_edited: usize,
    pub heldout_raw: usize,
    pub q_min: usize,
    pub q_max: usize,
    pub k: usize,
    /// Spread of edited-style shots around their segment centre.
    pub edited_spread: f64,
    /// Spread of raw-style near-duplicates around their segment centre.
    pub raw_spread: f64,
    pub budget_ratio: f64,
    pub shot_seconds: f64,
    pub fps: u64,
    pub planted_edited: [f64; 4],
    pub planted_raw: [f64; 4],
    pub representativeness: Representativeness,
    pub format: FeatureFormat,
    pub gt: GtMethod,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            edited: 10,
            raw: 10,
            heldout_edited: 3,
            heldout_raw: 3,
            q_min: 20,
            q_max: 40,
            k: 8,
            edited_spread: 0.3,
            raw_spread: 0.05,
            budget_ratio: 0.15,
            shot_seconds: 2.0,
            fps: 30,
            planted_edited: [0.6, 0.2, 0.15, 0.05],
            planted_raw: [0.3, 0.6, 0.1, 0.0],
            representativeness: Representativeness::Adjacent,
            format: FeatureFormat::Binary,
            gt: GtMethod::Auto,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.edited + self.raw + self.heldout_edited + self.heldout_raw == 0 {
            return Err("no videos requested".into());
        }
        if self.q_min < 2 || self.q_min > self.q_max {
            return Err(format!("need 2 <= q_min <= q_max, got {}..{}", self.q_min, self.q_max));
        }
        if self.k == 0 {
            return Err("k must be >= 1".into());
        }
        for (name, v) in [("edited_spread", self.edited_spread), ("raw_spread", self.raw_spread)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        BudgetChoice::Ratio(self.budget_ratio).validate()?;
        if !(self.shot_seconds > 0.0 && self.shot_seconds.is_finite()) || self.fps == 0 {
            return Err("shot_seconds and fps must be positive".into());
        }
        for w in [self.planted_edited, self.planted_raw] {
            PropertyWeight::custom(w).map_err(|e| e.to_string())?;
        }
        if self.gt == GtMethod::Exact && self.q_max > EXACT_MAX_SHOTS {
            return Err(format!("exact ground truth needs q_max <= {EXACT_MAX_SHOTS}"));
        }
        Ok(())
    }

    fn planted(&self, class: VideoClass) -> [f64; 4] {
        match class {
            VideoClass::Edited => self.planted_edited,
            VideoClass::Raw => self.planted_raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedVideo {
    pub id: String,
    pub class: VideoClass,
    pub split: Split,
    pub shots: usize,
    /// The highest-importance shot of every segment.
    pub key_shots: Vec<usize>,
    pub gt: Vec<usize>,
    pub gt_method: GtMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedReport {
    pub schema_version: u32,
    pub seed: u64,
    pub spec: SynthSpec,
    pub planted_edited: PropertyWeight,
    pub planted_raw: PropertyWeight,
    pub videos: Vec<PlantedVideo>,
}

pub struct SyntheticVideo {
    pub matrix: FeatureMatrix,
    pub key_shots: Vec<usize>,
    pub gt: SummarySet,
    pub gt_method: GtMethod,
    pub activities: ActivityAnnotation,
}

/// Number of equal-length shots that fit in `ratio` of the video.
pub fn budget_shots(q: usize, ratio: f64) -> usize {
    let durations = vec![1.0; q];
    let limit = ratio * q as f64;
    let mut used = 0.0;
    let mut n = 0;
    // the same fit test greedy applies under a duration budget
    while n < q && used + durations[n] <= limit + 1e-9 * limit.max(1.0) {
        used += durations[n];
        n += 1;
    }
    n.max(1)
}

fn segment_lengths(rng: &mut ChaCha8Rng, q: usize, segments: usize, class: VideoClass) -> Vec<usize> {
    let min_len = if q >= 2 * segments { 2 } else { 1 };
    let weights: Vec<f64> = (0..segments)
        .map(|_| match class {
            VideoClass::Edited => rng.gen_range(0.8..1.2),
            VideoClass::Raw => rng.gen_range(0.15f64..1.0).powi(2),
        })
        .collect();
    let spare = q - min_len * segments;
    let total: f64 = weights.iter().sum();
    let mut lens: Vec<usize> = weights
        .iter()
        .map(|w| min_len + (spare as f64 * w / total).floor() as usize)
        .collect();
    let mut left = q - lens.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..segments).collect();
    order.shuffle(rng);
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        lens[j] += 1;
        left -= 1;
    }
    lens
}

pub fn generate_video(rng: &mut ChaCha8Rng, class: VideoClass, q: usize, spec: &SynthSpec) -> CliResult<SyntheticVideo> {
    let c = budget_shots(q, spec.budget_ratio).min(q);
    let lens = segment_lengths(rng, q, c, class);
    let spread = match class {
        VideoClass::Edited => spec.edited_spread,
        VideoClass::Raw => spec.raw_spread,
    };
    let mut features = Array2::zeros((q, spec.k));
    let mut importance = vec![0.0; q];
    let mut key_shots = Vec::with_capacity(c);
    let mut start = 0;
    for &len in &lens {
        let centre: Vec<f64> = (0..spec.k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let key = start + rng.gen_range(0..len);
        for i in start..start + len {
            for (d, &m) in centre.iter().enumerate() {
                features[[i, d]] = m + rng.gen_range(-spread..spread);
            }
            importance[i] = match (class, i == key) {
                (VideoClass::Edited, true) => rng.gen_range(0.7..1.0),
                (VideoClass::Edited, false) => rng.gen_range(0.1..0.5),
                (VideoClass::Raw, true) => rng.gen_range(0.6..1.0),
                (VideoClass::Raw, false) => rng.gen_range(0.0..0.15),
            };
        }
        key_shots.push(key);
        start += len;
    }
    let shot_frames = frame_ranges(q, spec);
    let matrix = FeatureMatrix::new(features, importance)?.with_shot_frames(shot_frames.clone())?;

    let evaluator = PropertyEvaluator::new(&matrix, spec.representativeness)?;
    let objective = Objective::new(&evaluator, PropertyWeight::custom(spec.planted(class))?);
    let exact = match spec.gt {
        GtMethod::Auto => q <= EXACT_MAX_SHOTS,
        GtMethod::Exact => true,
        GtMethod::Greedy => false,
    };
    let (gt, gt_method) = if exact {
        (exact_select(&objective, c)?, GtMethod::Exact)
    } else {
        (lazy_greedy(&objective, &Budget::Count(c))?.set, GtMethod::Greedy)
    };
    let activities = ActivityAnnotation::new(
        key_shots
            .iter()
            .enumerate()
            .map(|(j, &s)| Activity {
                label: format!("segment-{j}"),
                start: shot_frames[s].0,
                end: shot_frames[s].1,
            })
            .collect(),
    )?;
    Ok(SyntheticVideo {
        matrix,
        key_shots,
        gt,
        gt_method,
        activities,
    })
}

fn frame_ranges(q: usize, spec: &SynthSpec) -> Vec<FrameRange> {
    let per = ((spec.shot_seconds * spec.fps as f64).round() as u64).max(1);
    (0..q as u64).map(|i| (i * per, (i + 1) * per)).collect()
}

/// Writes `manifest.json`, `planted.json` and the per-video files under `out`.
pub fn generate(seed: u64, spec: &SynthSpec, out: &Path) -> CliResult<PlantedReport> {
    spec.validate().map_err(|m| CliError::new("config-error", m))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = [
        (VideoClass::Edited, Split::Train, spec.edited, "edited"),
        (VideoClass::Raw, Split::Train, spec.raw, "raw"),
        (VideoClass::Edited, Split::Test, spec.heldout_edited, "heldout-edited"),
        (VideoClass::Raw, Split::Test, spec.heldout_raw, "heldout-raw"),
    ];
    let ext = match spec.format {
        FeatureFormat::Binary => "sumf",
        FeatureFormat::Csv => "csv",
    };
    let mut entries = Vec::new();
    let mut planted = Vec::new();
    for (class, split, count, prefix) in plan {
        for n in 0..count {
            let id = format!("{prefix}-{n:03}");
            let q = rng.gen_range(spec.q_min..=spec.q_max);
            let video = generate_video(&mut rng, class, q, spec)?;
            let feat_rel = format!("features/{id}.{ext}");
            let bytes = match spec.format {
                FeatureFormat::Binary => encode_binary(&video.matrix),
                FeatureFormat::Csv => encode_csv(&video.matrix).into_bytes(),
            };
            write_atomic(&out.join(&feat_rel), &bytes)?;
            let gt_rel = format!("gt/{id}.json");
            write_json(
                &out.join(&gt_rel),
                &GroundTruthFile {
                    indices: Some(video.gt.indices().to_vec()),
                    ..GroundTruthFile::default()
                },
            )?;
            let frames_rel = format!("frames/{id}.json");
            write_json(&out.join(&frames_rel), &video.matrix.shot_frames().expect("synthetic frames"))?;
            let act_rel = format!("activities/{id}.json");
            write_json(&out.join(&act_rel), &video.activities)?;
            entries.push(VideoEntry {
                id: id.clone(),
                class: Some(class),
                split,
                features: feat_rel.into(),
                importance: None,
                gt: Some(gt_rel.into()),
                shot_frames: Some(frames_rel.into()),
                activities: Some(act_rel.into()),
                duration_seconds: Some(spec.shot_seconds * q as f64),
                gamma: None,
            });
            planted.push(PlantedVideo {
                id,
                class,
                split,
                shots: q,
                key_shots: video.key_shots,
                gt: video.gt.indices().to_vec(),
                gt_method: video.gt_method,
            });
        }
    }
    let manifest = ManifestFile {
        schema_version: MANIFEST_SCHEMA_VERSION,
        defaults: Defaults {
            budget: Some(BudgetChoice::Ratio(spec.budget_ratio)),
        },
        videos: entries,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let report = PlantedReport {
        schema_version: PLANTED_SCHEMA_VERSION,
        seed,
        spec: spec.clone(),
        planted_edited: PropertyWeight::new(spec.planted_edited, WeightClass::Edited)?,
        planted_raw: PropertyWeight::new(spec.planted_raw, WeightClass::Raw)?,
        videos: planted,
    };
    write_json(&out.join("planted.json"), &report)?;
    Ok(report)
}
