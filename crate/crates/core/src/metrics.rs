//! Summary quality metrics: shot-exact F-measure, frame-overlap F-measure
//! averaged over human summaries, and activity recall.
//!
//! Activity recall counts an activity as captured when the selected shots
//! overlap its interval by at least `min_overlap_frames`. This is an automatic
//! stand-in for asking viewers whether they recognized the activity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::{FrameRange, SummarySet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl PrecisionRecall {
    fn from_counts(overlap: f64, predicted: f64, reference: f64) -> Self {
        let precision = overlap / predicted;
        let recall = overlap / reference;
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f }
    }
}

pub fn f_measure_shot(s: &SummarySet, gt: &SummarySet) -> Result<PrecisionRecall> {
    if s.is_empty() {
        return Err(Error::EmptySet("summary"));
    }
    if gt.is_empty() {
        return Err(Error::EmptySet("ground-truth"));
    }
    if s.video_len() != gt.video_len() {
        return Err(Error::InvalidInput(
            "summary and ground truth belong to different videos".into(),
        ));
    }
    let hit = s.intersection_len(gt) as f64;
    Ok(PrecisionRecall::from_counts(hit, s.len() as f64, gt.len() as f64))
}

/// Sorted, disjoint half-open frame intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FrameRange>", into = "Vec<FrameRange>")]
pub struct FrameSummary {
    intervals: Vec<FrameRange>,
}

impl FrameSummary {
    pub fn new(intervals: Vec<FrameRange>) -> Result<Self> {
        for (i, &(s, e)) in intervals.iter().enumerate() {
            if s >= e {
                return Err(Error::InvalidInput(format!("empty interval [{s}, {e})")));
            }
            if i > 0 && intervals[i - 1].1 > s {
                return Err(Error::InvalidInput(format!(
                    "interval [{s}, {e}) overlaps or precedes its predecessor"
                )));
            }
        }
        Ok(Self { intervals })
    }

    /// Union of the frame ranges of the selected shots; touching ranges merge.
    pub fn from_shots(s: &SummarySet, shot_frames: &[FrameRange]) -> Result<Self> {
        if shot_frames.len() != s.video_len() {
            return Err(Error::InvalidInput(format!(
                "{} frame ranges for {} shots",
                shot_frames.len(),
                s.video_len()
            )));
        }
        let mut out: Vec<FrameRange> = Vec::with_capacity(s.len());
        for &i in s.indices() {
            let (start, end) = shot_frames[i];
            match out.last_mut() {
                Some(last) if last.1 >= start => last.1 = last.1.max(end),
                _ => out.push((start, end)),
            }
        }
        Self::new(out)
    }

    pub fn intervals(&self) -> &[FrameRange] {
        &self.intervals
    }

    pub fn frames(&self) -> u64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn overlap(&self, other: &FrameSummary) -> u64 {
        overlap_frames(&self.intervals, &other.intervals)
    }
}

impl TryFrom<Vec<FrameRange>> for FrameSummary {
    type Error = Error;
    fn try_from(v: Vec<FrameRange>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrameSummary> for Vec<FrameRange> {
    fn from(f: FrameSummary) -> Self {
        f.intervals
    }
}

fn overlap_frames(a: &[FrameRange], b: &[FrameRange]) -> u64 {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Mean over human summaries of the frame-overlap F-measure.
pub fn f_measure_frames(auto: &FrameSummary, humans: &[FrameSummary]) -> Result<f64> {
    if auto.frames() == 0 {
        return Err(Error::EmptySummary);
    }
    if humans.is_empty() {
        return Err(Error::EmptySet("human summary"));
    }
    let total: f64 = humans
        .iter()
        .map(|h| {
            let o = auto.overlap(h) as f64;
            if h.frames() == 0 {
                return 0.0;
            }
            PrecisionRecall::from_counts(o, auto.frames() as f64, h.frames() as f64).f
        })
        .sum();
    Ok(total / humans.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub label: String,
    pub start: u64,
    pub end: u64,
}

/// Temporally annotated activities; repeated labels count as separate entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Activity>", into = "Vec<Activity>")]
pub struct ActivityAnnotation {
    activities: Vec<Activity>,
}

impl ActivityAnnotation {
    pub fn new(activities: Vec<Activity>) -> Result<Self> {
        if let Some(a) = activities.iter().find(|a| a.start >= a.end) {
            return Err(Error::InvalidInput(format!(
                "activity {:?} has empty interval [{}, {})",
                a.label, a.start, a.end
            )));
        }
        Ok(Self { activities })
    }

    pub fn activities(&self) -> &[Activity] {
        &self.activities
    }
}

impl TryFrom<Vec<Activity>> for ActivityAnnotation {
    type Error = Error;
    fn try_from(v: Vec<Activity>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActivityAnnotation> for Vec<Activity> {
    fn from(a: ActivityAnnotation) -> Self {
        a.activities
    }
}

pub fn activity_recall(
    s: &SummarySet,
    shot_frames: Option<&[FrameRange]>,
    ann: &ActivityAnnotation,
    min_overlap_frames: u64,
) -> Result<f64> {
    let frames = shot_frames.ok_or(Error::MissingFrameMap)?;
    if ann.activities.is_empty() {
        return Err(Error::EmptySet("activity annotation"));
    }
    let covered = FrameSummary::from_shots(s, frames)?;
    let need = min_overlap_frames.max(1);
    let captured = ann
        .activities
        .iter()
        .filter(|a| overlap_frames(covered.intervals(), &[(a.start, a.end)]) >= need)
        .count();
    Ok(captured as f64 / ann.activities.len() as f64)
}
