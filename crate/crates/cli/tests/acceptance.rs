//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use keyshot::commands::EvaluationReport;
use keyshot_core::learning::{regularized_hinge, ExactInner, GammaConfig};
use keyshot_core::pattern::similarity_matrix;
use keyshot_core::{
    activity_recall, exact_select, f_measure_frames, f_measure_shot, fit_pattern, greedy_ratio_report, hinge_loss,
    lazy_greedy, mixing_coefficients, naive_greedy, pattern_similarity, property_vector, psd_fit, Activity,
    ActivityAnnotation, Budget, FeatureMatrix, FrameRange, FrameSummary, Normalizers, Objective, PropertyEvaluator,
    PropertyWeight, Representativeness, SummarySet, TrainConfig, TrainingExample, VideoClass,
};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_keyshot");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn video(rng: &mut ChaCha8Rng, q: usize, k: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = (0..q).map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let mut imp: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..5.0)).collect();
    imp[0] += 0.1;
    FeatureMatrix::from_rows(&rows, imp).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, q: usize, max: usize) -> SummarySet {
    let c = rng.gen_range(1..=max.min(q));
    let mut idx: Vec<usize> = (0..q).collect();
    idx.shuffle(rng);
    idx.truncate(c);
    SummarySet::new(idx, q).unwrap()
}

fn weight(w: [f64; 4]) -> PropertyWeight {
    PropertyWeight::custom(w).unwrap()
}

fn random_w(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [0; 4].map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) })
}

fn mode_of(rng: &mut ChaCha8Rng) -> Representativeness {
    if rng.gen_bool(0.5) { Representativeness::Adjacent } else { Representativeness::Nearest }
}

fn ac1_property_range() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut bad) = (0usize, 0usize);
    for i in 0..200 {
        let q = if i < 20 { rng.gen_range(2..=12) } else { rng.gen_range(2..=30) };
        let k = rng.gen_range(1..=8);
        let v = video(&mut rng, q, k);
        let n = Normalizers::compute(&v).unwrap();
        let near = PropertyEvaluator::new(&v, Representativeness::Nearest).unwrap();
        let subsets: Vec<SummarySet> = if i < 20 {
            (1u32..1 << q)
                .map(|m| SummarySet::new((0..q).filter(|b| m >> b & 1 == 1).collect(), q).unwrap())
                .collect()
        } else {
            (0..300).map(|_| random_set(&mut rng, q, q)).collect()
        };
        for s in &subsets {
            let mut vals = property_vector(&v, s, &n).unwrap().to_array().to_vec();
            vals.push(near.evaluate(s).unwrap().rep);
            checked += 1;
            if !vals.iter().all(|x| (0.0..=1.0).contains(x)) {
                bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(bad == 0 && secs < 60.0, format!("{checked} subsets, {bad} out of range, {secs:.2}s (limit 60s)"))
}

fn ac2_lazy_equals_naive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..500 {
        let q = rng.gen_range(2..=40);
        let v = { let k = rng.gen_range(1..=8); video(&mut rng, q, k) };
        let ev = PropertyEvaluator::new(&v, mode_of(&mut rng)).unwrap();
        let obj = Objective::new(&ev, weight(random_w(&mut rng)));
        let budget = Budget::Count(rng.gen_range(1..=q));
        let (a, b) = (lazy_greedy(&obj, &budget).unwrap(), naive_greedy(&obj, &budget).unwrap());
        if a.set != b.set || a.score.to_bits() != b.score.to_bits() {
            mismatches += 1;
        }
    }
    let mut savings = Vec::new();
    let mut no_saving = 0;
    for i in 0..20 {
        let q = rng.gen_range(50..=120);
        let v = { let k = rng.gen_range(1..=8); video(&mut rng, q, k) };
        let (w, mode) = if i % 2 == 0 {
            ([1.0, 0.0, 0.0, 0.0], Representativeness::Adjacent)
        } else {
            ([1.0, 1.0, 0.0, 0.0], Representativeness::Nearest)
        };
        let ev = PropertyEvaluator::new(&v, mode).unwrap();
        let obj = Objective::new(&ev, weight(w));
        let budget = Budget::Count((q as f64 * 0.15).ceil() as usize);
        let (a, b) = (lazy_greedy(&obj, &budget).unwrap(), naive_greedy(&obj, &budget).unwrap());
        if a.set != b.set || a.score.to_bits() != b.score.to_bits() {
            mismatches += 1;
        }
        if a.evaluations >= b.evaluations {
            no_saving += 1;
        }
        savings.push(a.evaluations as f64 / b.evaluations as f64);
    }
    let worst = savings.iter().copied().fold(0.0, f64::max);
    outcome(
        mismatches == 0 && no_saving == 0,
        format!(
            "500 + 20 instances, {mismatches} mismatches; lazy/naive evaluations on q>=50 monotone objectives at most {worst:.3}"
        ),
    )
}

fn ac3_greedy_ratio() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let videos: Vec<FeatureMatrix> = (0..100).map(|_| { let k = rng.gen_range(1..=8); video(&mut rng, 12, k) }).collect();
    let evs: Vec<_> = videos.iter().map(|v| PropertyEvaluator::new(v, Representativeness::Adjacent).unwrap()).collect();
    let mixed: Vec<_> = evs.iter().map(|e| Objective::new(e, weight([0.25; 4]))).collect();
    let modular: Vec<_> = evs.iter().map(|e| Objective::new(e, weight([1.0, 0.0, 0.0, 0.0]))).collect();
    let r = greedy_ratio_report(&mixed, 4).unwrap();
    let m = greedy_ratio_report(&modular, 4).unwrap();
    let bound = 1.0 - (-1.0f64).exp();
    let modular_exact = m.ratios.iter().all(|&x| x == 1.0);
    let below = r.ratios.iter().filter(|&&x| x < bound).count();
    outcome(
        r.min >= bound && modular_exact,
        format!(
            "mixed min ratio {:.4} (mean {:.4}, bound {bound:.4}, {below}/100 below); modular ratios all 1.0: {modular_exact}",
            r.min, r.mean
        ),
    )
}

fn orthonormal(rng: &mut ChaCha8Rng, q: usize, k: usize) -> Array2<f64> {
    let mut x = Array2::from_shape_fn((q, k), |_| rng.gen_range(-1.0..1.0));
    for j in 0..k {
        for i in 0..j {
            let proj: f64 = x.column(i).dot(&x.column(j));
            let ci = x.column(i).to_owned();
            x.column_mut(j).scaled_add(-proj, &ci);
        }
        let norm: f64 = x.column(j).dot(&x.column(j));
        let norm = norm.sqrt();
        x.column_mut(j).mapv_inplace(|v| v / norm);
    }
    x
}

fn labels(rng: &mut ChaCha8Rng, q: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..q).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect();
    y[rng.gen_range(0..q)] = 1.0;
    y
}

fn ac4_lasso() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_closed = 0.0f64;
    for k in 1..=16 {
        for _ in 0..4 {
            let q = k + rng.gen_range(0..10);
            let x = orthonormal(&mut rng, q, k);
            let y = labels(&mut rng, q);
            let l1 = rng.gen_range(0.01..1.0);
            let fit = fit_pattern(&FeatureMatrix::new(x.clone(), vec![1.0; q]).unwrap(), &y, l1).unwrap();
            let xty = x.t().dot(&Array1::from(y));
            for j in 0..k {
                let closed = xty[j].signum() * (xty[j].abs() - l1).max(0.0);
                worst_closed = worst_closed.max((fit.p[j] - closed).abs());
            }
        }
    }
    let mut worst_kkt = 0.0f64;
    for _ in 0..50 {
        let k = rng.gen_range(1..=16);
        let q = rng.gen_range(k + 1..=4 * k + 4);
        let x = Array2::from_shape_fn((q, k), |_| rng.gen_range(-2.0..2.0));
        let y = labels(&mut rng, q);
        let l1 = rng.gen_range(0.05..3.0);
        let fit = fit_pattern(&FeatureMatrix::new(x.clone(), vec![1.0; q]).unwrap(), &y, l1).unwrap();
        let grad = x.t().dot(&(x.dot(&fit.p) - Array1::from(y)));
        for j in 0..k {
            let viol = if fit.p[j] != 0.0 {
                (grad[j] + l1 * fit.p[j].signum()).abs()
            } else {
                (grad[j].abs() - l1).max(0.0)
            };
            worst_kkt = worst_kkt.max(viol);
        }
    }
    outcome(
        worst_closed < 1e-6 && worst_kkt < 1e-6,
        format!("closed-form max error {worst_closed:.2e}, KKT max violation {worst_kkt:.2e} (tolerance 1e-6)"),
    )
}

fn ac5_mixing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut sets, mut bad, mut worst_sym) = (0, 0, 0.0f64);
    while sets < 40 {
        let n = rng.gen_range(4..=14);
        let k = rng.gen_range(2..=8);
        let mut patterns = Vec::new();
        for i in 0..n {
            let q = rng.gen_range(10..=30);
            let rows: Vec<Vec<f64>> = (0..q).map(|_| (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect()).collect();
            let v = FeatureMatrix::from_rows(&rows, vec![1.0; q]).unwrap();
            let p = fit_pattern(&v, &labels(&mut rng, q), 1.0).unwrap();
            let class = if i % 2 == 0 { VideoClass::Edited } else { VideoClass::Raw };
            patterns.push((p, class));
        }
        // an all-zero pattern has no direction, so the set fails preconditions
        if patterns.iter().any(|(p, _)| p.norm() == 0.0) {
            continue;
        }
        sets += 1;
        let refs: Vec<_> = patterns.iter().map(|(p, _)| p).collect();
        let d = similarity_matrix(&refs).unwrap();
        for i in 0..n {
            for j in 0..n {
                let direct = pattern_similarity(refs[i], refs[j]).unwrap();
                worst_sym = worst_sym.max((d[i][j] - d[j][i]).abs()).max((direct - d[j][i]).abs());
            }
        }
        let pairs = mixing_coefficients(&patterns).unwrap();
        let max_e = pairs.iter().map(|m| m.b_e).fold(0.0, f64::max);
        let max_r = pairs.iter().map(|m| m.b_r).fold(0.0, f64::max);
        let in_range = pairs.iter().all(|m| m.b_e > 0.0 && m.b_e <= 1.0 && m.b_r > 0.0 && m.b_r <= 1.0);
        if max_e != 1.0 || max_r != 1.0 || !in_range {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && worst_sym <= 1e-12,
        format!("{sets} training sets, {bad} violating normalization, similarity asymmetry {worst_sym:.1e}"),
    )
}

fn ac6_hinge_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let exact = |ev: &PropertyEvaluator<'_>, w: [f64; 4], gt: &SummarySet| {
        hinge_loss(ev, weight(w), gt, |o, c| exact_select(o, c)).unwrap()
    };
    let mut negative = 0;
    let mut min_hinge = f64::INFINITY;
    for _ in 0..300 {
        let q = rng.gen_range(2..=10);
        let v = { let k = rng.gen_range(1..=5); video(&mut rng, q, k) };
        let ev = PropertyEvaluator::new(&v, mode_of(&mut rng)).unwrap();
        let gt = random_set(&mut rng, q, q);
        let h = exact(&ev, random_w(&mut rng), &gt);
        min_hinge = min_hinge.min(h);
        if h < 0.0 {
            negative += 1;
        }
    }
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..200 {
        let q = rng.gen_range(3..=10);
        let v = { let k = rng.gen_range(1..=5); video(&mut rng, q, k) };
        let ev = PropertyEvaluator::new(&v, Representativeness::Adjacent).unwrap();
        let gt = random_set(&mut rng, q, q / 2 + 1);
        let (w1, w2) = (random_w(&mut rng), random_w(&mut rng));
        let t: f64 = rng.gen_range(0.0..=1.0);
        let mid = [0, 1, 2, 3].map(|i| t * w1[i] + (1.0 - t) * w2[i]);
        let gap = exact(&ev, mid, &gt) - (t * exact(&ev, w1, &gt) + (1.0 - t) * exact(&ev, w2, &gt));
        worst_gap = worst_gap.max(gap);
    }
    outcome(
        negative == 0 && worst_gap <= 1e-9,
        format!("300 hinges, min {min_hinge:.3e}, {negative} negative; 200 convexity triples, worst excess {worst_gap:.2e} (tolerance 1e-9)"),
    )
}

/// Share of non-increasing steps of the training objective over 40 videos.
/// Planted ground truths are exact argmaxes under a random weight, so some
/// weight realizes them; unplanted ones are arbitrary random sets.
fn psd_corpus(planted: bool, cfg: &TrainConfig) -> (usize, usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut steps, mut non_increasing, mut negative, mut non_finite) = (0usize, 0usize, 0usize, 0usize);
    for n in 0..40 {
        let q = rng.gen_range(4..=10);
        let v = { let k = rng.gen_range(1..=5); video(&mut rng, q, k) };
        let gt = if planted {
            let w = random_w(&mut rng);
            let c = rng.gen_range(1..=q / 2);
            let ev = PropertyEvaluator::new(&v, cfg.representativeness).unwrap();
            exact_select(&Objective::new(&ev, weight(w)), c).unwrap()
        } else {
            random_set(&mut rng, q, q / 2)
        };
        let ex = TrainingExample::new(format!("c{n}"), VideoClass::Edited, v, gt).unwrap();
        let out = match psd_fit(&ex, cfg) {
            Ok(o) => o,
            Err(_) => {
                non_finite += 1;
                continue;
            }
        };
        negative += out.iterates.iter().flatten().filter(|x| **x < 0.0).count();
        non_finite += out.trace.iter().filter(|x| !x.is_finite()).count();
        let ev = PropertyEvaluator::new(&ex.video, cfg.representativeness).unwrap();
        let last = regularized_hinge(&ev, out.w, &ex.gt, cfg.lambda, ExactInner::Always).unwrap();
        if last != *out.trace.last().unwrap() {
            non_finite += 1;
        }
        for t in out.trace.windows(2) {
            steps += 1;
            if t[1] <= t[0] + 1e-12 {
                non_increasing += 1;
            }
        }
    }
    (steps, non_increasing, negative, non_finite)
}

fn ac7_psd() -> Outcome {
    let cfg = TrainConfig {
        lambda: 0.01,
        iterations: 100,
        gamma: GammaConfig { value: 0.05, ..GammaConfig::default() },
        exact_inner: ExactInner::Always,
        ..TrainConfig::default()
    };
    let (steps, non_increasing, negative, non_finite) = psd_corpus(true, &cfg);
    let (r_steps, r_ok, r_negative, r_non_finite) = psd_corpus(false, &cfg);
    let share = non_increasing as f64 / steps as f64;
    outcome(
        share >= 0.95 && negative + r_negative == 0 && non_finite + r_non_finite == 0,
        format!(
            "planted corpus {non_increasing}/{steps} steps non-increasing ({:.1}%, need 95%); \
             random-gt corpus {:.1}% (informational); {} negative weights, {} non-finite",
            100.0 * share,
            100.0 * r_ok as f64 / r_steps as f64,
            negative + r_negative,
            non_finite + r_non_finite
        ),
    )
}

fn run(args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("keyshot {}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()))
    }
}

/// synth → train → summarize held-out → evaluate, all through the binary.
fn pipeline(dir: &Path) -> Result<EvaluationReport, String> {
    let p = |s: &str| dir.join(s).to_string_lossy().into_owned();
    fs::write(dir.join("run.toml"), "repeats = 10\nseed = 42\n").map_err(|e| e.to_string())?;
    run(&["synth", "--seed", "42", "--out", &p("data")])?;
    let manifest = p("data/manifest.json");
    run(&["train", "--manifest", &manifest, "--config", &p("run.toml"), "--out", &p("report.json")])?;
    let planted: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("data/planted.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let held: Vec<String> = planted["videos"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["split"] == "test")
        .map(|v| v["id"].as_str().unwrap().to_string())
        .collect();
    if held.len() != 6 {
        return Err(format!("expected 6 held-out videos, found {}", held.len()));
    }
    for id in &held {
        let out = p(&format!("summaries/{id}.json"));
        run(&["summarize", "--manifest", &manifest, "--video", id, "--weights", &p("report.json"), "--out", &out])?;
    }
    run(&[
        "evaluate", "--manifest", &manifest, "--summaries", &p("summaries"), "--metric", "shot-f1", "--split", "test",
        "--out", &p("eval.json"),
    ])?;
    let text = fs::read_to_string(dir.join("eval.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn ac8_planted_recovery() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let result = pipeline(dir.path());
    let elapsed = start.elapsed();
    match result {
        Ok(report) => {
            let planted: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(dir.path().join("data/planted.json")).unwrap()).unwrap();
            let qs: Vec<u64> = planted["videos"].as_array().unwrap().iter().map(|v| v["shots"].as_u64().unwrap()).collect();
            let q_ok = qs.iter().all(|q| (20..=40).contains(q)) && qs.len() == 26;
            outcome(
                report.mean >= 0.9 && elapsed < Duration::from_secs(300) && q_ok,
                format!(
                    "held-out mean shot F {:.4} over {} videos (need 0.9), {:.1}s (limit 300s)",
                    report.mean,
                    report.rows.len(),
                    elapsed.as_secs_f64()
                ),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn ac9_metric_fixtures() -> Outcome {
    let set = |i: &[usize], q| SummarySet::new(i.to_vec(), q).unwrap();
    let shot = f_measure_shot(&set(&[0, 1, 2], 5), &set(&[1, 2, 3], 5)).unwrap().f;
    let auto = FrameSummary::new(vec![(0, 100)]).unwrap();
    let frame = f_measure_frames(&auto, &[FrameSummary::new(vec![(50, 150)]).unwrap()]).unwrap();
    let frames: Vec<FrameRange> = (0..11u64).map(|i| (i * 60, (i + 1) * 60)).collect();
    let ann = ActivityAnnotation::new(
        (0..11u64)
            .map(|i| Activity { label: format!("activity-{}", i % 6), start: i * 60 + 5, end: i * 60 + 50 })
            .collect(),
    )
    .unwrap();
    let s = SummarySet::new((0..11).filter(|i| *i != 2 && *i != 7).collect(), 11).unwrap();
    let recall = activity_recall(&s, Some(&frames), &ann, 1).unwrap();
    let ok = (shot - 2.0 / 3.0).abs() <= 1e-12 && frame == 0.5 && (recall - 9.0 / 11.0).abs() <= 1e-12;
    outcome(ok, format!("shot F {shot:.12}, frame F {frame}, activity recall {recall:.4}"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn ac10_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    if let Err(e) = pipeline(a.path()).and_then(|_| pipeline(b.path())) {
        return outcome(false, e);
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    let differing: Vec<&str> = sa
        .iter()
        .zip(&sb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        sa.len() == sb.len() && differing.is_empty(),
        format!("{} files compared, {} differ {:?}", sa.len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("property ranges", ac1_property_range),
        ("lazy greedy equals naive greedy", ac2_lazy_equals_naive),
        ("greedy optimality bound", ac3_greedy_ratio),
        ("LASSO correctness", ac4_lasso),
        ("mixing normalization", ac5_mixing),
        ("hinge and convexity", ac6_hinge_convexity),
        ("subgradient descent sanity", ac7_psd),
        ("planted end-to-end recovery", ac8_planted_recovery),
        ("metric fixtures", ac9_metric_fixtures),
        ("pipeline determinism", ac10_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "AC{:<2} {} {name}: {} [{:.1}s]",
            n + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
