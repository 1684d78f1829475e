#![allow(dead_code)]

use keyshot_core::{FeatureMatrix, SummarySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random video with `q` shots of `k` dims; features in [-2, 2), importance in [0, 5).
pub fn random_video(seed: u64, q: usize, k: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let mut imp: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..5.0)).collect();
    imp[0] += 0.1;
    FeatureMatrix::from_rows(&rows, imp).unwrap()
}

/// 1-D video whose features increase with the shot index.
pub fn sorted_line_video(seed: u64, q: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    let rows: Vec<Vec<f64>> = (0..q)
        .map(|_| {
            x += rng.gen_range(0.01..1.5);
            vec![x]
        })
        .collect();
    let imp = (0..q).map(|_| rng.gen_range(0.1..5.0)).collect();
    FeatureMatrix::from_rows(&rows, imp).unwrap()
}

/// All non-empty subsets of `0..q` as summary sets.
pub fn all_subsets(q: usize) -> impl Iterator<Item = SummarySet> {
    (1u32..(1 << q)).map(move |mask| {
        let idx = (0..q).filter(|i| mask >> i & 1 == 1).collect();
        SummarySet::new(idx, q).unwrap()
    })
}

/// All subsets of `0..q` with exactly `c` elements, in lexicographic order.
pub fn subsets_of_size(q: usize, c: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, q: usize, c: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == c {
            out.push(cur.clone());
            return;
        }
        for i in start..q {
            cur.push(i);
            rec(i + 1, q, c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, q, c, &mut Vec::new(), &mut out);
    out
}

pub fn random_weight(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [0; 4].map(|_| rng.gen_range(0.0..2.0))
}
