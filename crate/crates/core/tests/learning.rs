mod common;

use common::random_video;
use keyshot_core::learning::{regularized_hinge, GammaConfig};
use keyshot_core::{
    aggregate_weights, psd_fit, train, ExactInner, MixingPair, PropertyEvaluator, SummarySet, TrainConfig,
    TrainingExample, VideoClass,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn example(seed: u64, q: usize, class: VideoClass) -> TrainingExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let c = rng.gen_range(1..=q / 2);
    let mut idx: Vec<usize> = (0..q).collect();
    rand::seq::SliceRandom::shuffle(&mut idx[..], &mut rng);
    idx.truncate(c);
    let gt = SummarySet::new(idx, q).unwrap();
    TrainingExample::new(format!("v{seed}"), class, random_video(seed, q, 3), gt).unwrap()
}

#[test]
fn iterates_stay_nonnegative_and_finite() {
    for seed in 0..10u64 {
        let ex = example(seed, 6 + seed as usize % 5, VideoClass::Edited);
        let cfg = TrainConfig {
            iterations: 40,
            gamma: GammaConfig { value: 0.1, ..GammaConfig::default() },
            ..TrainConfig::default()
        };
        let out = psd_fit(&ex, &cfg).unwrap();
        assert!(out.w.iter().all(|x| *x >= 0.0 && x.is_finite()));
        assert!(out.trace.iter().all(|x| x.is_finite()));
        let ev = PropertyEvaluator::new(&ex.video, cfg.representativeness).unwrap();
        let last = regularized_hinge(&ev, out.w, &ex.gt, cfg.lambda, ExactInner::Auto).unwrap();
        assert_eq!(*out.trace.last().unwrap(), last);
    }
}

#[test]
fn training_reports_echo_config_and_repeat() {
    let data: Vec<_> = (0..6)
        .map(|i| {
            let mut e = example(40 + i, 8, if i % 2 == 0 { VideoClass::Edited } else { VideoClass::Raw });
            e.mixing = Some(MixingPair::new(0.5 + 0.05 * i as f64, 1.0 - 0.1 * i as f64).unwrap());
            e
        })
        .collect();
    let cfg = TrainConfig {
        iterations: 10,
        repeats: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train(&data, &cfg).unwrap();
    assert_eq!(a.config, cfg);
    assert_eq!(a, train(&data, &cfg).unwrap());
    let other = train(&data, &TrainConfig { seed: 10, ..cfg.clone() }).unwrap();
    assert_eq!(a.videos, other.videos);
}

proptest! {
    #[test]
    fn aggregation_is_a_convex_combination(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws: Vec<[f64; 4]> = (0..n).map(|_| [0; 4].map(|_| rng.gen_range(0.0..3.0))).collect();
        let pairs: Vec<MixingPair> = (0..n)
            .map(|_| MixingPair::new(rng.gen_range(0.01..=1.0), rng.gen_range(0.01..=1.0)).unwrap())
            .collect();
        let (we, wr) = aggregate_weights(&ws, &pairs, false).unwrap();
        for i in 0..4 {
            let lo = ws.iter().map(|w| w[i]).fold(f64::INFINITY, f64::min);
            let hi = ws.iter().map(|w| w[i]).fold(f64::NEG_INFINITY, f64::max);
            for x in [we.w[i], wr.w[i]] {
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
            }
        }
    }
}
