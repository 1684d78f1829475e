//! Domain types shared by every stage: shot features, candidate summaries and
//! the normalized property vector.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open frame range `[start, end)` covered by one shot.
pub type FrameRange = (u64, u64);

/// Per-video shot features (one row per shot) with per-shot importance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    features: Array2<f64>,
    importance: Vec<f64>,
    shot_frames: Option<Vec<FrameRange>>,
}

impl FeatureMatrix {
    pub fn new(features: Array2<f64>, importance: Vec<f64>) -> Result<Self> {
        let (q, k) = features.dim();
        if q == 0 || k == 0 {
            return Err(Error::InvalidInput(format!(
                "feature matrix must be non-empty, got {q}x{k}"
            )));
        }
        if importance.len() != q {
            return Err(Error::InvalidInput(format!(
                "{} importance scores for {q} shots",
                importance.len()
            )));
        }
        if let Some(((i, j), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature ({i}, {j}) is not finite: {v}"
            )));
        }
        if let Some((i, v)) = importance
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "importance of shot {i} must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self {
            features,
            importance,
            shot_frames: None,
        })
    }

    /// Builds a matrix from row-major shot vectors.
    pub fn from_rows(rows: &[Vec<f64>], importance: Vec<f64>) -> Result<Self> {
        let q = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((q, k), flat)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(features, importance)
    }

    /// Attaches shot frame ranges; they must be valid, ordered and disjoint.
    pub fn with_shot_frames(mut self, frames: Vec<FrameRange>) -> Result<Self> {
        if frames.len() != self.num_shots() {
            return Err(Error::InvalidInput(format!(
                "{} frame ranges for {} shots",
                frames.len(),
                self.num_shots()
            )));
        }
        for (i, &(start, end)) in frames.iter().enumerate() {
            if start >= end {
                return Err(Error::InvalidInput(format!(
                    "shot {i} has empty frame range [{start}, {end})"
                )));
            }
            if i > 0 && frames[i - 1].1 > start {
                return Err(Error::InvalidInput(format!(
                    "shot {i} overlaps or precedes shot {}",
                    i - 1
                )));
            }
        }
        self.shot_frames = Some(frames);
        Ok(self)
    }

    pub fn num_shots(&self) -> usize {
        self.features.nrows()
    }

    pub fn dims(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn shot(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub fn shot_frames(&self) -> Option<&[FrameRange]> {
        self.shot_frames.as_deref()
    }

    /// Euclidean distance between two shots. Symmetric bit-for-bit.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.shot(lo)
            .iter()
            .zip(self.shot(hi).iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// A candidate summary: strictly increasing shot indices of one video.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SummarySet {
    indices: Vec<usize>,
    video_len: usize,
}

impl SummarySet {
    /// Sorts the given indices; rejects duplicates and out-of-range shots.
    pub fn new(mut indices: Vec<usize>, video_len: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate shot index {}", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= video_len {
                return Err(Error::InvalidInput(format!(
                    "shot index {last} out of range for {video_len} shots"
                )));
            }
        }
        Ok(Self { indices, video_len })
    }

    pub fn empty(video_len: usize) -> Self {
        Self {
            indices: Vec::new(),
            video_len,
        }
    }

    pub fn full(video_len: usize) -> Self {
        Self {
            indices: (0..video_len).collect(),
            video_len,
        }
    }

    /// Shots whose label is set.
    pub fn from_labels(labels: &[bool]) -> Self {
        Self {
            indices: labels
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| l.then_some(i))
                .collect(),
            video_len: labels.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn video_len(&self) -> usize {
        self.video_len
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, shot: usize) -> bool {
        self.indices.binary_search(&shot).is_ok()
    }

    /// Adds a shot, keeping the order. Returns false if already present.
    pub fn insert(&mut self, shot: usize) -> bool {
        assert!(shot < self.video_len, "shot {shot} out of range");
        match self.indices.binary_search(&shot) {
            Ok(_) => false,
            Err(pos) => {
                self.indices.insert(pos, shot);
                true
            }
        }
    }

    pub fn intersection_len(&self, other: &SummarySet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// 0/1 label vector of length `video_len`.
    pub fn labels(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.video_len];
        for &i in &self.indices {
            y[i] = 1.0;
        }
        y
    }

    pub(crate) fn check_video(&self, q: usize) -> Result<()> {
        if self.video_len != q {
            return Err(Error::InvalidInput(format!(
                "summary built for {} shots used with a {q}-shot video",
                self.video_len
            )));
        }
        Ok(())
    }
}

/// The four normalized summary properties.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropertyVector {
    pub imp: f64,
    pub rep: f64,
    pub div: f64,
    pub sto: f64,
}

impl PropertyVector {
    pub fn to_array(self) -> [f64; 4] {
        [self.imp, self.rep, self.div, self.sto]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            imp: a[0],
            rep: a[1],
            div: a[2],
            sto: a[3],
        }
    }

    pub fn dot(&self, w: &[f64; 4]) -> f64 {
        self.imp * w[0] + self.rep * w[1] + self.div * w[2] + self.sto * w[3]
    }
}

/// Per-video normalization constants for importance, representativeness and
/// diversity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub m_imp: f64,
    pub m_rep: f64,
    pub m_div: f64,
}

impl Normalizers {
    pub fn compute(video: &FeatureMatrix) -> Result<Self> {
        let q = video.num_shots();
        if q < 2 {
            return Err(Error::DegenerateVideo(
                "a single shot has no consecutive pair to normalize diversity".into(),
            ));
        }
        let m_imp: f64 = video.importance().iter().sum();
        if m_imp <= 0.0 {
            return Err(Error::DegenerateVideo("total importance is zero".into()));
        }
        let m_div: f64 = (0..q - 1).map(|i| video.distance(i, i + 1)).sum();
        if m_div <= 0.0 {
            return Err(Error::DegenerateVideo("all shots are identical".into()));
        }
        Ok(Self {
            m_imp,
            m_rep: q as f64,
            m_div,
        })
    }
}
