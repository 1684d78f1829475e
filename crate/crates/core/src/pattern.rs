//! Summarization patterns and mixing-coefficients.
//!
//! A pattern is the sparse linear map from shot features to key-shot labels,
//! fitted by LASSO. Videos whose patterns point the same way summarize alike;
//! averaging pattern similarity against each class yields the per-video pair
//! `(b_e, b_r)` used to weight training.

use log::warn;
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::FeatureMatrix;

pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VideoClass {
    Edited,
    Raw,
}

impl VideoClass {
    pub fn name(self) -> &'static str {
        match self {
            VideoClass::Edited => "edited",
            VideoClass::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarizationPattern {
    pub p: Array1<f64>,
    /// Final value of `½‖Xp − y‖² + λ‖p‖₁`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SummarizationPattern {
    pub fn nonzeros(&self) -> usize {
        self.p.iter().filter(|v| **v != 0.0).count()
    }

    pub fn norm(&self) -> f64 {
        self.p.dot(&self.p).sqrt()
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Fits `min_p ½‖X p − y‖² + l1_weight·‖p‖₁` where X holds one shot per row,
/// by cyclic coordinate descent from zero.
pub fn fit_pattern(video: &FeatureMatrix, labels: &[f64], l1_weight: f64) -> Result<SummarizationPattern> {
    let x = video.features();
    let (q, k) = x.dim();
    if labels.len() != q {
        return Err(Error::InvalidInput(format!(
            "{} labels for {q} shots",
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    if labels.iter().all(|&y| y == 0.0) {
        return Err(Error::NoKeyShots);
    }
    if !(l1_weight > 0.0) {
        return Err(Error::InvalidInput(format!(
            "l1 weight must be positive, got {l1_weight}"
        )));
    }

    let y = ArrayView1::from(labels);
    let col_sq: Vec<f64> = x.columns().into_iter().map(|c| c.dot(&c)).collect();
    let mut p = Array1::<f64>::zeros(k);
    let mut r = y.to_owned();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = p[j];
            let rho = col.dot(&r) + col_sq[j] * old;
            let new = soft_threshold(rho, l1_weight) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                r.scaled_add(-delta, &col);
                p[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < LASSO_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("lasso stopped after {sweeps} sweeps without converging");
    }
    let fit = x.dot(&p) - &y;
    let residual = 0.5 * fit.dot(&fit) + l1_weight * p.iter().map(|v| v.abs()).sum::<f64>();
    Ok(SummarizationPattern {
        p,
        residual,
        iterations: sweeps,
        converged,
    })
}

/// `exp(cos θ)` between two pattern directions, in `[1/e, e]`.
pub fn pattern_similarity(a: &SummarizationPattern, b: &SummarizationPattern) -> Result<f64> {
    direction_similarity(&a.p, &b.p).ok_or(Error::ZeroPattern { index: 0 })
}

fn direction_similarity(a: &Array1<f64>, b: &Array1<f64>) -> Option<f64> {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    Some(cos.exp())
}

/// Per-video relevance to edited and raw summarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingPair {
    pub b_e: f64,
    pub b_r: f64,
}

impl MixingPair {
    pub fn new(b_e: f64, b_r: f64) -> Result<Self> {
        for b in [b_e, b_r] {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "mixing coefficient must lie in (0, 1], got {b}"
                )));
            }
        }
        Ok(Self { b_e, b_r })
    }
}

/// Full pairwise similarity table; `None` marks a zero pattern.
pub fn similarity_matrix(patterns: &[&SummarizationPattern]) -> Result<Vec<Vec<f64>>> {
    let n = patterns.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = direction_similarity(&patterns[i].p, &patterns[j].p).ok_or(
                Error::ZeroPattern {
                    index: if patterns[i].norm() == 0.0 { i } else { j },
                },
            )?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Mixing pairs from the similarity table of a training set.
pub fn mixing_from_similarities(d: &[Vec<f64>], classes: &[VideoClass]) -> Result<Vec<MixingPair>> {
    let n = classes.len();
    if d.len() != n {
        return Err(Error::InvalidInput("similarity table size mismatch".into()));
    }
    for class in [VideoClass::Edited, VideoClass::Raw] {
        let found = classes.iter().filter(|&&c| c == class).count();
        if found < 2 {
            return Err(Error::InsufficientClassMembers {
                class: class.name(),
                needed: 2,
                found,
            });
        }
    }
    let class_mean = |i: usize, class: VideoClass| {
        let (sum, count) = (0..n)
            .filter(|&j| j != i && classes[j] == class)
            .fold((0.0, 0usize), |(s, c), j| (s + d[i][j], c + 1));
        sum / count as f64
    };
    let raw_e: Vec<f64> = (0..n).map(|i| class_mean(i, VideoClass::Edited)).collect();
    let raw_r: Vec<f64> = (0..n).map(|i| class_mean(i, VideoClass::Raw)).collect();
    let max_e = raw_e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_r = raw_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // dividing (rather than multiplying by a reciprocal) makes the maximum exactly 1
    Ok(raw_e
        .iter()
        .zip(&raw_r)
        .map(|(e, r)| MixingPair {
            b_e: e / max_e,
            b_r: r / max_r,
        })
        .collect())
}

/// Mixing pairs for a training set; fails on any zero pattern.
pub fn mixing_coefficients(patterns: &[(SummarizationPattern, VideoClass)]) -> Result<Vec<MixingPair>> {
    let refs: Vec<&SummarizationPattern> = patterns.iter().map(|(p, _)| p).collect();
    let classes: Vec<VideoClass> = patterns.iter().map(|(_, c)| *c).collect();
    let d = similarity_matrix(&refs)?;
    mixing_from_similarities(&d, &classes)
}

/// Like [`mixing_coefficients`], but videos with a zero pattern are left out
/// (with a warning) and get `None`.
pub fn mixing_coefficients_excluding_zero(
    patterns: &[(SummarizationPattern, VideoClass)],
) -> Result<Vec<Option<MixingPair>>> {
    let kept: Vec<usize> = (0..patterns.len())
        .filter(|&i| {
            let ok = patterns[i].0.norm() > 0.0;
            if !ok {
                warn!("video {i} has a zero summarization pattern; excluded from mixing");
            }
            ok
        })
        .collect();
    let subset: Vec<(SummarizationPattern, VideoClass)> =
        kept.iter().map(|&i| patterns[i].clone()).collect();
    let pairs = mixing_coefficients(&subset)?;
    let mut out = vec![None; patterns.len()];
    for (slot, pair) in kept.into_iter().zip(pairs) {
        out[slot] = Some(pair);
    }
    Ok(out)
}
