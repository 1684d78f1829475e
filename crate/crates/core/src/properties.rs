//! The four property models scoring a candidate summary: importance,
//! representativeness, diversity and storyness. Each is normalized to `[0, 1]`.
//!
//! Only importance is modular (and hence submodular). Diversity and storyness
//! can violate diminishing gains, and so can representativeness in its default
//! [`Representativeness::Adjacent`] form: inserting a key shot between a shot
//! and its previous neighbour can move that shot's reconstruction further away.
//! The [`Representativeness::Nearest`] variant is the facility-location form and
//! is monotone submodular.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::{FeatureMatrix, Normalizers, PropertyVector, SummarySet};

/// Which key shots reconstruct an unselected shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representativeness {
    /// The closest key shot by position on each side (previous and next key shot).
    #[default]
    Adjacent,
    /// The closest key shot in feature space, anywhere in the video.
    Nearest,
}

/// Above this many shots the pairwise distance table is not cached.
const DISTANCE_CACHE_MAX_SHOTS: usize = 2048;

pub fn f_imp(video: &FeatureMatrix, s: &SummarySet, n: &Normalizers) -> f64 {
    imp_value(video.importance(), s.indices(), n)
}

pub fn f_rep(video: &FeatureMatrix, s: &SummarySet, n: &Normalizers) -> f64 {
    f_rep_with(video, s, n, Representativeness::Adjacent)
}

pub fn f_rep_with(
    video: &FeatureMatrix,
    s: &SummarySet,
    n: &Normalizers,
    mode: Representativeness,
) -> f64 {
    rep_value(video.num_shots(), s.indices(), n, mode, |a, b| {
        video.distance(a, b)
    })
}

pub fn f_div(video: &FeatureMatrix, s: &SummarySet, n: &Normalizers) -> f64 {
    div_value(s.indices(), n, |a, b| video.distance(a, b))
}

pub fn f_sto(s: &SummarySet) -> Result<f64> {
    sto_value(s.video_len(), s.indices())
}

/// All four properties with positional representativeness.
pub fn property_vector(
    video: &FeatureMatrix,
    s: &SummarySet,
    n: &Normalizers,
) -> Result<PropertyVector> {
    s.check_video(video.num_shots())?;
    Ok(PropertyVector {
        imp: f_imp(video, s, n),
        rep: f_rep(video, s, n),
        div: f_div(video, s, n),
        sto: f_sto(s)?,
    })
}

fn imp_value(importance: &[f64], sel: &[usize], n: &Normalizers) -> f64 {
    sel.iter().map(|&i| importance[i]).sum::<f64>() / n.m_imp
}

fn rep_value<D>(q: usize, sel: &[usize], n: &Normalizers, mode: Representativeness, dist: D) -> f64
where
    D: Fn(usize, usize) -> f64,
{
    if sel.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    match mode {
        Representativeness::Adjacent => {
            // `next` is the position in `sel` of the first key shot at or after x
            let mut next = 0;
            for x in 0..q {
                while next < sel.len() && sel[next] < x {
                    next += 1;
                }
                let right = sel.get(next).copied();
                let err = if right == Some(x) {
                    0.0
                } else {
                    let left = next.checked_sub(1).map(|p| sel[p]);
                    match (left, right) {
                        (Some(l), Some(r)) => dist(x, l).min(dist(x, r)),
                        (Some(l), None) => dist(x, l),
                        (None, Some(r)) => dist(x, r),
                        (None, None) => unreachable!("selection is non-empty"),
                    }
                };
                total += (-err).exp();
            }
        }
        Representativeness::Nearest => {
            for x in 0..q {
                let err = sel
                    .iter()
                    .map(|&s| if s == x { 0.0 } else { dist(x, s) })
                    .fold(f64::INFINITY, f64::min);
                total += (-err).exp();
            }
        }
    }
    total / n.m_rep
}

fn div_value<D>(sel: &[usize], n: &Normalizers, dist: D) -> f64
where
    D: Fn(usize, usize) -> f64,
{
    // a skipped shot can only shorten the path, but with collinear features the
    // two sums agree exactly and rounding may land one ulp above 1
    (sel.windows(2).map(|w| dist(w[0], w[1])).sum::<f64>() / n.m_div).min(1.0)
}

fn sto_value(q: usize, sel: &[usize]) -> Result<f64> {
    if sel.is_empty() {
        return Err(Error::EmptySummary);
    }
    let mean_gap = q as f64 / sel.len() as f64;
    let deviation: f64 = sel
        .windows(2)
        .map(|w| ((w[1] - w[0]) as f64 - mean_gap).abs())
        .sum();
    Ok((-deviation).exp())
}

/// Evaluates properties of many candidate summaries of one video, caching the
/// normalizers and (for moderately sized videos) all pairwise shot distances.
#[derive(Debug, Clone)]
pub struct PropertyEvaluator<'a> {
    video: &'a FeatureMatrix,
    normalizers: Normalizers,
    mode: Representativeness,
    distances: Option<Array2<f64>>,
}

impl<'a> PropertyEvaluator<'a> {
    pub fn new(video: &'a FeatureMatrix, mode: Representativeness) -> Result<Self> {
        let normalizers = Normalizers::compute(video)?;
        let q = video.num_shots();
        let distances = (q <= DISTANCE_CACHE_MAX_SHOTS)
            .then(|| Array2::from_shape_fn((q, q), |(a, b)| video.distance(a, b)));
        Ok(Self {
            video,
            normalizers,
            mode,
            distances,
        })
    }

    pub fn video(&self) -> &'a FeatureMatrix {
        self.video
    }

    pub fn normalizers(&self) -> &Normalizers {
        &self.normalizers
    }

    pub fn mode(&self) -> Representativeness {
        self.mode
    }

    pub fn num_shots(&self) -> usize {
        self.video.num_shots()
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        match &self.distances {
            Some(d) => d[[a, b]],
            None => self.video.distance(a, b),
        }
    }

    pub fn evaluate(&self, s: &SummarySet) -> Result<PropertyVector> {
        s.check_video(self.num_shots())?;
        self.evaluate_sorted(s.indices())
    }

    /// `sel` must be strictly increasing and in range.
    pub(crate) fn evaluate_sorted(&self, sel: &[usize]) -> Result<PropertyVector> {
        let n = &self.normalizers;
        let dist = |a, b| self.distance(a, b);
        Ok(PropertyVector {
            imp: imp_value(self.video.importance(), sel, n),
            rep: rep_value(self.num_shots(), sel, n, self.mode, dist),
            div: div_value(sel, n, dist),
            sto: sto_value(self.num_shots(), sel)?,
        })
    }
}
