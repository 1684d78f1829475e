//! Budgeted subset maximization: Minoux-style lazy greedy, the plain greedy it
//! must agree with, and exhaustive search for small instances.
//!
//! Ties are always broken towards the lowest shot index. Gains within
//! [`TIE_TOLERANCE`] of the round maximum count as ties, so round-off in the
//! objective cannot make two implementations disagree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::SummarySet;

/// Gains closer than this to the best gain of a round are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Round-off allowance on cached gains of a submodular objective.
const CACHE_SLACK: f64 = 1e-12;

/// Largest ground set `exact_select` will enumerate.
pub const EXACT_MAX_SHOTS: usize = 20;

/// A real-valued function of a subset of `0..ground_size()`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;

    /// Value of the subset given as strictly increasing indices. May fail on the
    /// empty set; greedy never asks for it.
    fn value(&self, sorted: &[usize]) -> Result<f64>;

    /// True only if marginal gains never grow as the set grows. Lazy greedy
    /// trusts cached gains as upper bounds only when this holds.
    fn diminishing_gains(&self) -> bool {
        false
    }
}

/// Stopping rule for greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Budget {
    /// Select exactly this many shots.
    Count(usize),
    /// Keep adding shots while their summed durations stay within `limit`.
    Duration { durations: Vec<f64>, limit: f64 },
}

impl Budget {
    /// Duration budget as a fraction of the total duration.
    pub fn duration_ratio(durations: Vec<f64>, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "budget ratio must lie in (0, 1], got {ratio}"
            )));
        }
        if durations.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidInput(
                "shot durations must be positive".into(),
            ));
        }
        let limit = ratio * durations.iter().sum::<f64>();
        Ok(Budget::Duration { durations, limit })
    }

    fn validate(&self, q: usize) -> Result<()> {
        match self {
            Budget::Count(0) => Err(Error::InvalidInput("budget must be at least 1".into())),
            Budget::Count(c) if *c > q => Err(Error::BudgetTooLarge {
                budget: *c,
                shots: q,
            }),
            Budget::Count(_) => Ok(()),
            Budget::Duration { durations, .. } if durations.len() != q => {
                Err(Error::InvalidInput(format!(
                    "{} shot durations for {q} shots",
                    durations.len()
                )))
            }
            Budget::Duration { .. } => Ok(()),
        }
    }
}

/// Tracks what is spent of a budget during one greedy run.
struct Spend<'b> {
    budget: &'b Budget,
    count: usize,
    used: f64,
}

impl<'b> Spend<'b> {
    fn new(budget: &'b Budget) -> Self {
        Self {
            budget,
            count: 0,
            used: 0.0,
        }
    }

    fn exhausted(&self) -> bool {
        matches!(self.budget, Budget::Count(c) if self.count >= *c)
    }

    fn fits(&self, shot: usize) -> bool {
        match self.budget {
            Budget::Count(c) => self.count < *c,
            Budget::Duration { durations, limit } => {
                self.used + durations[shot] <= limit + 1e-9 * limit.max(1.0)
            }
        }
    }

    fn take(&mut self, shot: usize) {
        self.count += 1;
        if let Budget::Duration { durations, .. } = self.budget {
            self.used += durations[shot];
        }
    }
}

/// Result of a greedy or exhaustive run.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub set: SummarySet,
    pub score: f64,
    /// Calls made to [`SetFunction::value`].
    pub evaluations: usize,
    /// Objective value after each greedy round.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    value: f64,
    shot: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap: larger gain first, then lower shot index
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.shot.cmp(&self.shot))
    }
}

/// Lazy greedy state: the growing selection and a max-queue holding every
/// unselected shot that still fits the budget, keyed by the gain it had when
/// last evaluated. Entries evaluated in the current round are kept aside until
/// the round's pick is made.
pub struct GreedyState<'f, F: SetFunction + ?Sized> {
    objective: &'f F,
    selected: SummarySet,
    queue: BinaryHeap<Candidate>,
    evaluations: usize,
}

impl<'f, F: SetFunction + ?Sized> GreedyState<'f, F> {
    pub fn new(objective: &'f F) -> Self {
        let q = objective.ground_size();
        let queue = (0..q)
            .map(|shot| Candidate {
                gain: f64::INFINITY,
                value: f64::NAN,
                shot,
            })
            .collect();
        Self {
            objective,
            selected: SummarySet::empty(q),
            queue,
            evaluations: 0,
        }
    }

    pub fn selected(&self) -> &SummarySet {
        &self.selected
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn value_with(&mut self, shot: usize) -> Result<f64> {
        let mut s = self.selected.indices().to_vec();
        let pos = s.binary_search(&shot).unwrap_err();
        s.insert(pos, shot);
        self.evaluations += 1;
        self.objective.value(&s)
    }

    fn base_value(&mut self) -> Result<f64> {
        if self.selected.is_empty() {
            return Ok(0.0);
        }
        self.evaluations += 1;
        self.objective.value(self.selected.indices())
    }

    /// Runs one round and returns the accepted candidate, or `None` once no
    /// remaining shot fits.
    fn step(&mut self, spend: &Spend<'_>) -> Result<Option<Candidate>> {
        let base = self.base_value()?;
        let trust_cache = self.objective.diminishing_gains();
        let mut fresh: Vec<Candidate> = Vec::new();
        let mut best = f64::NEG_INFINITY;
        while let Some(top) = self.queue.peek() {
            // with diminishing gains a stale cached gain bounds the true one, so
            // nothing below this line can reach the tie band of `best`
            if trust_cache && !fresh.is_empty() && top.gain < best - TIE_TOLERANCE - CACHE_SLACK {
                break;
            }
            let cand = self.queue.pop().expect("peeked");
            if !spend.fits(cand.shot) {
                continue;
            }
            let value = self.value_with(cand.shot)?;
            let gain = value - base;
            best = best.max(gain);
            fresh.push(Candidate {
                gain,
                value,
                shot: cand.shot,
            });
        }
        let Some(pick) = choose(&fresh, best) else {
            return Ok(None);
        };
        for c in fresh {
            if c.shot != pick.shot {
                self.queue.push(c);
            }
        }
        self.selected.insert(pick.shot);
        Ok(Some(pick))
    }
}

/// Lowest-index candidate within the tie band of the best gain.
fn choose(fresh: &[Candidate], best: f64) -> Option<Candidate> {
    fresh
        .iter()
        .filter(|c| c.gain >= best - TIE_TOLERANCE)
        .min_by_key(|c| c.shot)
        .copied()
}

fn finish(set: SummarySet, trace: Vec<f64>, evaluations: usize) -> Selection {
    let score = trace.last().copied().unwrap_or(0.0);
    Selection {
        set,
        score,
        evaluations,
        trace,
    }
}

/// Accelerated (lazy) greedy under any budget.
pub fn lazy_greedy<F: SetFunction + ?Sized>(objective: &F, budget: &Budget) -> Result<Selection> {
    budget.validate(objective.ground_size())?;
    let mut state = GreedyState::new(objective);
    let mut spend = Spend::new(budget);
    let mut trace = Vec::new();
    while !spend.exhausted() {
        match state.step(&spend)? {
            Some(pick) => {
                spend.take(pick.shot);
                trace.push(pick.value);
            }
            None => break,
        }
    }
    let evaluations = state.evaluations;
    Ok(finish(state.selected, trace, evaluations))
}

/// Plain greedy: every remaining candidate is re-evaluated every round.
pub fn naive_greedy<F: SetFunction + ?Sized>(objective: &F, budget: &Budget) -> Result<Selection> {
    let q = objective.ground_size();
    budget.validate(q)?;
    let mut selected = SummarySet::empty(q);
    let mut spend = Spend::new(budget);
    let mut evaluations = 0;
    let mut trace = Vec::new();
    while !spend.exhausted() {
        let base = if selected.is_empty() {
            0.0
        } else {
            evaluations += 1;
            objective.value(selected.indices())?
        };
        let mut fresh = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for shot in (0..q).filter(|&s| !selected.contains(s) && spend.fits(s)) {
            let mut s = selected.indices().to_vec();
            s.insert(s.binary_search(&shot).unwrap_err(), shot);
            evaluations += 1;
            let value = objective.value(&s)?;
            best = best.max(value - base);
            fresh.push(Candidate {
                gain: value - base,
                value,
                shot,
            });
        }
        let Some(pick) = choose(&fresh, best) else {
            break;
        };
        selected.insert(pick.shot);
        spend.take(pick.shot);
        trace.push(pick.value);
    }
    Ok(finish(selected, trace, evaluations))
}

/// Greedy selection of exactly `budget` shots.
pub fn greedy_select<F: SetFunction + ?Sized>(objective: &F, budget: usize) -> Result<SummarySet> {
    lazy_greedy(objective, &Budget::Count(budget)).map(|s| s.set)
}

/// Subset sizes considered by exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMode {
    #[default]
    Exactly,
    AtMost,
}

/// Global maximizer over all subsets of exactly `budget` shots.
pub fn exact_select<F: SetFunction + ?Sized>(objective: &F, budget: usize) -> Result<SummarySet> {
    exact_search(objective, budget, ExactMode::Exactly).map(|s| s.set)
}

/// Exhaustive search; ties go to the lexicographically smallest index list.
pub fn exact_search<F: SetFunction + ?Sized>(
    objective: &F,
    budget: usize,
    mode: ExactMode,
) -> Result<Selection> {
    let q = objective.ground_size();
    if q > EXACT_MAX_SHOTS {
        return Err(Error::InstanceTooLarge {
            shots: q,
            cap: EXACT_MAX_SHOTS,
        });
    }
    Budget::Count(budget).validate(q)?;
    let sizes = match mode {
        ExactMode::Exactly => budget..=budget,
        ExactMode::AtMost => 1..=budget,
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluations = 0;
    for size in sizes {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            evaluations += 1;
            let v = objective.value(&combo)?;
            let better = match &best {
                None => true,
                Some((bv, bc)) => v > *bv || (v == *bv && combo < *bc),
            };
            if better {
                best = Some((v, combo.clone()));
            }
            if !next_combination(&mut combo, q) {
                break;
            }
        }
    }
    let (score, indices) = best.expect("at least one subset");
    Ok(Selection {
        set: SummarySet::new(indices, q)?,
        score,
        evaluations,
        trace: Vec::new(),
    })
}

/// Advances to the next k-combination of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// Greedy-to-optimum score ratios over a set of small instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub mean: f64,
}

pub fn greedy_ratio_report<F>(instances: &[F], budget: usize) -> Result<RatioReport>
where
    F: SetFunction + Sync,
{
    let ratios = instances
        .par_iter()
        .map(|f| {
            let greedy = lazy_greedy(f, &Budget::Count(budget))?;
            let exact = exact_search(f, budget, ExactMode::Exactly)?;
            Ok(if exact.score == 0.0 {
                if greedy.score == 0.0 { 1.0 } else { f64::INFINITY }
            } else {
                greedy.score / exact.score
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if ratios.is_empty() {
        return Err(Error::InvalidInput("no instances".into()));
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(RatioReport { ratios, min, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Weighted sum over the selected elements.
    struct Modular(Vec<f64>);

    impl SetFunction for Modular {
        fn ground_size(&self) -> usize {
            self.0.len()
        }
        fn value(&self, s: &[usize]) -> Result<f64> {
            Ok(s.iter().map(|&i| self.0[i]).sum())
        }
        fn diminishing_gains(&self) -> bool {
            true
        }
    }

    /// Coverage of small universes; monotone submodular.
    struct Coverage(Vec<Vec<usize>>);

    impl SetFunction for Coverage {
        fn ground_size(&self) -> usize {
            self.0.len()
        }
        fn value(&self, s: &[usize]) -> Result<f64> {
            let mut covered: Vec<usize> = s.iter().flat_map(|&i| self.0[i].clone()).collect();
            covered.sort_unstable();
            covered.dedup();
            Ok(covered.len() as f64)
        }
        fn diminishing_gains(&self) -> bool {
            true
        }
    }

    #[test]
    fn modular_picks_top_importance() {
        let f = Modular(vec![5.0, 1.0, 4.0, 2.0]);
        assert_eq!(greedy_select(&f, 2).unwrap().indices(), &[0, 2]);
        assert_eq!(exact_select(&f, 2).unwrap().indices(), &[0, 2]);
        assert_eq!(greedy_select(&f, 4).unwrap(), SummarySet::full(4));
    }

    #[test]
    fn budget_errors() {
        let f = Modular(vec![1.0; 3]);
        assert_eq!(
            greedy_select(&f, 4),
            Err(Error::BudgetTooLarge { budget: 4, shots: 3 })
        );
        assert!(greedy_select(&f, 0).is_err());
        let big = Modular(vec![1.0; 21]);
        assert_eq!(
            exact_select(&big, 2),
            Err(Error::InstanceTooLarge { shots: 21, cap: 20 })
        );
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let f = Modular(vec![1.0, 3.0, 3.0, 3.0]);
        assert_eq!(greedy_select(&f, 2).unwrap().indices(), &[1, 2]);
        assert_eq!(exact_select(&f, 2).unwrap().indices(), &[1, 2]);
        let flat = Modular(vec![2.0; 5]);
        assert_eq!(exact_select(&flat, 3).unwrap().indices(), &[0, 1, 2]);
        assert_eq!(greedy_select(&flat, 3).unwrap().indices(), &[0, 1, 2]);
    }

    #[test]
    fn full_budget_is_the_only_subset() {
        let f = Modular(vec![0.3, 0.1, 0.2]);
        assert_eq!(exact_select(&f, 3).unwrap(), SummarySet::full(3));
    }

    #[test]
    fn at_most_mode_prefers_shorter_on_ties() {
        // a zero-valued element makes {0} and {0,1} tie
        let f = Modular(vec![1.0, 0.0]);
        let s = exact_search(&f, 2, ExactMode::AtMost).unwrap();
        assert_eq!(s.set.indices(), &[0]);
    }

    #[test]
    fn lazy_matches_naive_on_coverage() {
        let sets = vec![
            vec![0, 1, 2],
            vec![2, 3],
            vec![4],
            vec![0, 4, 5, 6],
            vec![1, 3, 5],
            vec![6, 7],
            vec![7],
        ];
        let f = Coverage(sets);
        for c in 1..=7 {
            let lazy = lazy_greedy(&f, &Budget::Count(c)).unwrap();
            let naive = naive_greedy(&f, &Budget::Count(c)).unwrap();
            assert_eq!(lazy.set, naive.set);
            assert_eq!(lazy.trace, naive.trace);
            assert!(lazy.evaluations <= naive.evaluations);
        }
    }

    #[test]
    fn lazy_saves_evaluations_on_modular() {
        let f = Modular((0..60).map(|i| ((i * 37) % 61) as f64).collect());
        let lazy = lazy_greedy(&f, &Budget::Count(10)).unwrap();
        let naive = naive_greedy(&f, &Budget::Count(10)).unwrap();
        assert_eq!(lazy.set, naive.set);
        assert!(lazy.evaluations < naive.evaluations);
    }

    #[test]
    fn duration_budget_fills_until_nothing_fits() {
        let f = Modular(vec![5.0, 4.0, 3.0, 1.0]);
        let budget = Budget::Duration {
            durations: vec![3.0, 2.0, 2.0, 1.0],
            limit: 4.0,
        };
        let s = lazy_greedy(&f, &budget).unwrap();
        // 0 (3s) then only shot 3 (1s) still fits
        assert_eq!(s.set.indices(), &[0, 3]);
        assert_eq!(naive_greedy(&f, &budget).unwrap().set, s.set);
        assert!(Budget::duration_ratio(vec![2.0; 4], 0.0).is_err());
        assert!(Budget::duration_ratio(vec![2.0; 4], 1.5).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn ratio_report_is_one_for_modular() {
        let inst = vec![Modular(vec![1.0, 2.0, 3.0]), Modular(vec![2.0, 2.0, 2.0])];
        let r = greedy_ratio_report(&inst, 2).unwrap();
        assert_eq!(r.ratios, vec![1.0, 1.0]);
        assert_eq!(r.min, 1.0);
    }
}
