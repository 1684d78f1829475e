//! Dataset manifests: a JSON list of videos with their files, resolved
//! relative to the manifest's directory.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "defaults": { "budget": { "ratio": 0.15 } },
//!   "videos": [
//!     { "id": "v1", "class": "edited", "split": "train",
//!       "features": "v1.sumf", "gt": "v1.gt.json",
//!       "shot_frames": "v1.frames.json", "activities": "v1.act.json",
//!       "duration_seconds": 84.0 }
//!   ]
//! }
//! ```
//!
//! A ground-truth file holds any of `indices` (key-shot list), `scores`
//! (per-shot user scores, turned into the top ⌈r·q⌉ shots) and
//! `frame_summaries` (human summaries as frame intervals).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use keyshot_core::{ActivityAnnotation, FeatureMatrix, FrameRange, FrameSummary, SummarySet, VideoClass};
use serde::{Deserialize, Serialize};

use crate::config::BudgetChoice;
use crate::error::{CliError, CliResult};
use crate::io::{load_features, read_json};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Seconds per shot assumed when a video has no duration.
pub const DEFAULT_SHOT_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<VideoClass>,
    #[serde(default)]
    pub split: Split,
    pub features: PathBuf,
    /// JSON array overriding the importances embedded in the feature file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_frames: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activities: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    /// Per-video learning rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub schema_version: u32,
    #[serde(default)]
    pub defaults: Defaults,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_summaries: Option<Vec<FrameSummary>>,
}

/// A validated manifest: ids unique, training videos classed, every
/// referenced file present.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub path: PathBuf,
    pub dir: PathBuf,
    pub defaults: Defaults,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub set: Option<SummarySet>,
    pub humans: Vec<FrameSummary>,
}

#[derive(Debug, Clone)]
pub struct LoadedVideo {
    pub entry: VideoEntry,
    pub matrix: FeatureMatrix,
    pub gt: Option<GroundTruth>,
    pub activities: Option<ActivityAnnotation>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file: ManifestFile = read_json(path)?;
        if file.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(CliError::invariant(
                path,
                format!("unsupported manifest schema_version {}", file.schema_version),
            ));
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut seen = HashSet::new();
        for v in &file.videos {
            if !seen.insert(v.id.as_str()) {
                return Err(CliError::invariant(path, format!("duplicate video id {:?}", v.id)));
            }
            if v.split == Split::Train && v.class.is_none() {
                return Err(CliError::invariant(path, format!("training video {:?} has no class", v.id)));
            }
            if let Some(d) = v.duration_seconds {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(CliError::invariant(path, format!("video {:?}: duration must be positive", v.id)));
                }
            }
            let files = [Some(&v.features), v.importance.as_ref(), v.gt.as_ref(), v.shot_frames.as_ref(), v.activities.as_ref()];
            for f in files.into_iter().flatten() {
                let full = dir.join(f);
                if !full.is_file() {
                    return Err(CliError::new(
                        "missing-file",
                        format!("{}: video {:?} references missing file {}", path.display(), v.id, full.display()),
                    ));
                }
            }
        }
        if let Some(b) = &file.defaults.budget {
            b.validate().map_err(|e| CliError::invariant(path, e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            dir,
            defaults: file.defaults,
            videos: file.videos,
        })
    }

    pub fn video(&self, id: &str) -> CliResult<&VideoEntry> {
        self.videos
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| CliError::new("unknown-video", format!("no video {id:?} in {}", self.path.display())))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.dir.join(p)
    }

    /// Ratio used to turn per-shot scores into a ground-truth set.
    pub fn score_ratio(&self) -> f64 {
        match self.defaults.budget {
            Some(BudgetChoice::Ratio(r)) => r,
            _ => crate::config::DEFAULT_BUDGET_RATIO,
        }
    }

    pub fn load_video(&self, entry: &VideoEntry) -> CliResult<LoadedVideo> {
        let feat_path = self.resolve(&entry.features);
        let mut matrix = load_features(&feat_path)?;
        let q = matrix.num_shots();
        if let Some(p) = &entry.importance {
            let p = self.resolve(p);
            let imp: Vec<f64> = read_json(&p)?;
            if imp.len() != q {
                return Err(CliError::invariant(&p, format!("{} importances for {q} shots", imp.len())));
            }
            matrix = FeatureMatrix::new(matrix.features().clone(), imp).map_err(|e| CliError::invariant(&p, e))?;
        }
        if let Some(p) = &entry.shot_frames {
            let p = self.resolve(p);
            let frames: Vec<FrameRange> = read_json(&p)?;
            matrix = matrix.with_shot_frames(frames).map_err(|e| CliError::invariant(&p, e))?;
        }
        let gt = match &entry.gt {
            Some(p) => Some(self.load_gt(&self.resolve(p), q)?),
            None => None,
        };
        let activities = match &entry.activities {
            Some(p) => Some(read_json::<ActivityAnnotation>(&self.resolve(p))?),
            None => None,
        };
        Ok(LoadedVideo {
            entry: entry.clone(),
            matrix,
            gt,
            activities,
        })
    }

    fn load_gt(&self, path: &Path, q: usize) -> CliResult<GroundTruth> {
        let file: GroundTruthFile = read_json(path)?;
        let set = match (&file.indices, &file.scores) {
            (Some(_), Some(_)) => {
                return Err(CliError::invariant(path, "give either `indices` or `scores`, not both"));
            }
            (Some(idx), None) => Some(SummarySet::new(idx.clone(), q).map_err(|e| CliError::invariant(path, e))?),
            (None, Some(scores)) => Some(top_scored(scores, q, self.score_ratio()).map_err(|e| CliError::invariant(path, e))?),
            (None, None) => None,
        };
        if set.is_none() && file.frame_summaries.is_none() {
            return Err(CliError::invariant(path, "ground truth has no indices, scores or frame_summaries"));
        }
        Ok(GroundTruth {
            set,
            humans: file.frame_summaries.unwrap_or_default(),
        })
    }
}

/// The ⌈r·q⌉ highest-scored shots; equal scores prefer the lower index.
pub fn top_scored(scores: &[f64], q: usize, ratio: f64) -> Result<SummarySet, String> {
    if scores.len() != q {
        return Err(format!("{} scores for {q} shots", scores.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err("non-finite score".into());
    }
    let take = ((ratio * q as f64).ceil() as usize).clamp(1, q);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(take);
    SummarySet::new(order, q).map_err(|e| e.to_string())
}

impl LoadedVideo {
    /// Per-shot durations in seconds.
    pub fn shot_durations(&self) -> Vec<f64> {
        let q = self.matrix.num_shots();
        match (self.entry.duration_seconds, self.matrix.shot_frames()) {
            (Some(total), Some(frames)) => {
                let lens: Vec<f64> = frames.iter().map(|(s, e)| (e - s) as f64).collect();
                let sum: f64 = lens.iter().sum();
                lens.iter().map(|l| total * l / sum).collect()
            }
            (Some(total), None) => vec![total / q as f64; q],
            (None, _) => vec![DEFAULT_SHOT_SECONDS; q],
        }
    }

    pub fn class(&self) -> CliResult<VideoClass> {
        self.entry
            .class
            .ok_or_else(|| CliError::new("missing-class", format!("video {:?} has no class", self.entry.id)))
    }

    pub fn gt_set(&self) -> CliResult<&SummarySet> {
        self.gt
            .as_ref()
            .and_then(|g| g.set.as_ref())
            .ok_or_else(|| CliError::new("missing-ground-truth", format!("video {:?} has no ground-truth shots", self.entry.id)))
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
