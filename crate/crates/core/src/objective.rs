//! Linear score function over the property vector, the task loss and the
//! structured hinge loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::SetFunction;
use crate::properties::{PropertyEvaluator, Representativeness};
use crate::video::{PropertyVector, SummarySet};

/// Video class a weight vector was learned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightClass {
    Edited,
    Raw,
    Custom,
}

/// Non-negative emphasis on (importance, representativeness, diversity, storyness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyWeight {
    pub w: [f64; 4],
    #[serde(rename = "class")]
    pub class_tag: WeightClass,
}

impl PropertyWeight {
    pub fn new(w: [f64; 4], class_tag: WeightClass) -> Result<Self> {
        if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidInput(format!(
                "property weights must be finite and non-negative, got {x}"
            )));
        }
        Ok(Self { w, class_tag })
    }

    pub fn custom(w: [f64; 4]) -> Result<Self> {
        Self::new(w, WeightClass::Custom)
    }

    /// True if only components with diminishing gains carry weight.
    fn is_submodular(&self, mode: Representativeness) -> bool {
        let rep_ok = self.w[1] == 0.0 || mode == Representativeness::Nearest;
        rep_ok && self.w[2] == 0.0 && self.w[3] == 0.0
    }
}

/// Fraction of summary shots outside the ground truth, relative to its size.
pub fn task_loss(s: &SummarySet, gt: &SummarySet) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if s.video_len() != gt.video_len() {
        return Err(Error::InvalidInput(
            "summary and ground truth belong to different videos".into(),
        ));
    }
    let off = s.len() - s.intersection_len(gt);
    Ok(off as f64 / gt.len() as f64)
}

/// `F(V, S, w) = w·f(V, S)`, optionally augmented with the task loss against a
/// ground-truth summary.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'e, 'v> {
    evaluator: &'e PropertyEvaluator<'v>,
    weight: PropertyWeight,
    loss_augment: Option<&'e SummarySet>,
}

impl<'e, 'v> Objective<'e, 'v> {
    pub fn new(evaluator: &'e PropertyEvaluator<'v>, weight: PropertyWeight) -> Self {
        Self {
            evaluator,
            weight,
            loss_augment: None,
        }
    }

    /// Adds `Δ(S, gt)` to every score.
    pub fn with_loss_augment(mut self, gt: &'e SummarySet) -> Result<Self> {
        gt.check_video(self.evaluator.num_shots())?;
        if gt.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        self.loss_augment = Some(gt);
        Ok(self)
    }

    pub fn evaluator(&self) -> &'e PropertyEvaluator<'v> {
        self.evaluator
    }

    pub fn weight(&self) -> &PropertyWeight {
        &self.weight
    }

    pub fn properties(&self, s: &SummarySet) -> Result<PropertyVector> {
        self.evaluator.evaluate(s)
    }

    pub fn score(&self, s: &SummarySet) -> Result<f64> {
        s.check_video(self.evaluator.num_shots())?;
        self.value(s.indices())
    }

    fn augment_sorted(&self, sel: &[usize]) -> f64 {
        match self.loss_augment {
            Some(gt) => {
                let off = sel.iter().filter(|&&i| !gt.contains(i)).count();
                off as f64 / gt.len() as f64
            }
            None => 0.0,
        }
    }
}

impl SetFunction for Objective<'_, '_> {
    fn ground_size(&self) -> usize {
        self.evaluator.num_shots()
    }

    fn value(&self, sorted: &[usize]) -> Result<f64> {
        let f = self.evaluator.evaluate_sorted(sorted)?;
        Ok(f.dot(&self.weight.w) + self.augment_sorted(sorted))
    }

    fn diminishing_gains(&self) -> bool {
        self.weight.is_submodular(self.evaluator.mode())
    }
}

/// `max_S [F(S) + Δ(S, gt)] − F(gt)` where the maximum is taken by `argmax`
/// over the loss-augmented objective with budget `|gt|`.
pub fn hinge_loss<M>(
    evaluator: &PropertyEvaluator<'_>,
    weight: PropertyWeight,
    gt: &SummarySet,
    argmax: M,
) -> Result<f64>
where
    M: FnOnce(&Objective<'_, '_>, usize) -> Result<SummarySet>,
{
    let plain = Objective::new(evaluator, weight);
    let augmented = plain.with_loss_augment(gt)?;
    let best = argmax(&augmented, gt.len())?;
    Ok(augmented.score(&best)? - plain.score(gt)?)
}
