//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{blobs, naive_gdv, permutation_with_rs, to_rows};
use layersep::gdv::{gdv, gdv_with, GdvOptions, LabeledPointCloud};
use layersep::pipeline::{analyze_bundles, report::render_csv, report::render_json, synth_bundle, AnalysisConfig, Metric, SynthSpec};
use layersep::probes::{evaluate, logistic_gradient, logistic_objective, train_linear_svm, train_logistic, ProbeConfig};
use layersep::stats::{spearman, spearman_with, t_approx_p, PValueMethod};
use layersep::textprep::LemmaInventory;
use layersep::{Level, VerbClass};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

fn gdv_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_invariance, mut worst_oracle) = (0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let classes = rng.random_range(2..=4);
        let n = rng.random_range(2 * classes.max(2)..=64);
        let d = rng.random_range(1..=8);
        let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        labels.shuffle(&mut rng);
        let mut points = gaussian(&mut rng, n, d);
        for (i, &l) in labels.iter().enumerate() {
            points[[i, 0]] += l as f64;
        }
        let cloud = LabeledPointCloud::new(points.clone(), labels.clone(), classes).unwrap();
        let base = gdv(&cloud).unwrap().gdv;

        let oracle = naive_gdv(&to_rows(&points), &labels, classes);
        worst_oracle = worst_oracle.max((base - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE));

        let scales: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..100.0)).collect();
        let shifts: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
        let affine = Array2::from_shape_fn((n, d), |(i, k)| scales[k] * points[[i, k]] + shifts[k]);
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let permuted = Array2::from_shape_fn((n, d), |(i, k)| points[[i, perm[k]]]);
        let mut relabel: Vec<usize> = (0..classes).collect();
        relabel.shuffle(&mut rng);
        let swapped: Vec<usize> = labels.iter().map(|&l| relabel[l]).collect();

        for variant in [
            LabeledPointCloud::new(affine, labels.clone(), classes).unwrap(),
            LabeledPointCloud::new(permuted, labels.clone(), classes).unwrap(),
            LabeledPointCloud::new(points.clone(), swapped, classes).unwrap(),
        ] {
            worst_invariance = worst_invariance.max((gdv(&variant).unwrap().gdv - base).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_invariance < 1e-9 && worst_oracle < 1e-12 && elapsed < Duration::from_secs(10),
        format!(
            "max invariance change {worst_invariance:.2e} (< 1e-9), max oracle rel. error {worst_oracle:.2e} (< 1e-12), {elapsed:.2?} (< 10 s)"
        ),
    )
}

fn gdv_anchors() -> Outcome {
    let anchor = LabeledPointCloud::new(Array2::from_shape_vec((4, 1), vec![0.0, 0.0, 1.0, 1.0]).unwrap(), vec![0, 0, 1, 1], 2)
        .unwrap();
    let value = gdv(&anchor).unwrap().gdv;
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = gaussian(&mut rng, 2000, 10);
        let labels = (0..2000).map(|i| i / 1000).collect();
        let cloud = LabeledPointCloud::new(points, labels, 2).unwrap();
        worst = worst.max(gdv(&cloud).unwrap().gdv.abs());
    }
    check(
        (value + 1.0).abs() <= 1e-12 && worst < 0.02,
        format!("separated anchor {value} (-1 ± 1e-12), overlapping max |GDV| {worst:.4} over 20 seeds (< 0.02)"),
    )
}

fn probe_sanity() -> Outcome {
    let config = ProbeConfig::default();
    let (x, y) = blobs(200, 2, 2.0, 0.3, 1);
    let (xt, yt) = blobs(200, 2, 2.0, 0.3, 2);
    let lr = evaluate(&train_logistic(x.view(), &y, &config).unwrap(), xt.view(), &yt).unwrap();
    let svm = evaluate(&train_linear_svm(x.view(), &y, &config).unwrap(), xt.view(), &yt).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut draw = |n: usize| {
        let x = gaussian(&mut rng, n, 2);
        let y: Vec<VerbClass> = (0..n)
            .map(|_| if rng.random_bool(0.5) { VerbClass::Phrasal } else { VerbClass::Prepositional })
            .collect();
        (x, y)
    };
    let (x, y) = draw(1000);
    let (xt, yt) = draw(1000);
    let lr_chance = evaluate(&train_logistic(x.view(), &y, &config).unwrap(), xt.view(), &yt).unwrap();
    let svm_chance = evaluate(&train_linear_svm(x.view(), &y, &config).unwrap(), xt.view(), &yt).unwrap();

    let mut worst_grad = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let n = rng.random_range(3..12);
        let d = rng.random_range(1..6);
        let x = gaussian(&mut rng, n, d);
        let t: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let b: f64 = rng.sample(StandardNormal);
        let lambda = rng.random_range(0.0..0.5);
        let (gw, gb) = logistic_gradient(&w, b, x.view(), &t, lambda);
        let f = |w: &[f64], b: f64| logistic_objective(w, b, x.view(), &t, lambda);
        let h = 1e-5;
        let mut rel = |analytic: f64, numeric: f64| {
            let scale = analytic.abs().max(numeric.abs()).max(1e-3);
            worst_grad = worst_grad.max((analytic - numeric).abs() / scale);
        };
        for k in 0..d {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[k] += h;
            minus[k] -= h;
            rel(gw[k], (f(&plus, b) - f(&minus, b)) / (2.0 * h));
        }
        rel(gb, (f(&w, b + h) - f(&w, b - h)) / (2.0 * h));
    }
    check(
        lr == 1.0 && svm == 1.0 && (lr_chance - 0.5).abs() <= 0.08 && (svm_chance - 0.5).abs() <= 0.08 && worst_grad < 1e-6,
        format!(
            "separable LR {lr} SVM {svm} (1.0), shuffled LR {lr_chance:.3} SVM {svm_chance:.3} (0.5 ± 0.08), gradient rel. error {worst_grad:.2e} (< 1e-6)"
        ),
    )
}

fn stats_cross_check() -> Outcome {
    let p1 = t_approx_p(0.32, 13);
    let p2 = t_approx_p(-0.52, 13);
    let mut worst = 0.0_f64;
    let xs: Vec<f64> = (0..13).map(|i| i as f64).collect();
    for (k, target) in (-9..=9).map(|k| k as f64 / 10.0).enumerate() {
        let ys = permutation_with_rs(13, target, k as u64);
        let t = spearman(&xs, &ys).unwrap();
        let mc = spearman_with(&xs, &ys, PValueMethod::monte_carlo(42)).unwrap();
        worst = worst.max((mc.p_value - t.p_value).abs());
    }
    check(
        (p1 - 0.285).abs() <= 0.02 && (p2 - 0.069).abs() <= 0.02 && worst <= 0.02,
        format!("p(0.32) = {p1:.4} (0.285 ± 0.02), p(-0.52) = {p2:.4} (0.069 ± 0.02), max |MC - t| {worst:.4} (≤ 0.02)"),
    )
}

fn end_to_end() -> Outcome {
    let separations = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 6.0, 3.0, 2.5, 2.0, 1.5, 1.0, 0.5];
    // Inventory proportions scaled to about 2000 rows.
    let spec = SynthSpec::from_inventory(Level::Token, 128, separations, LemmaInventory::builtin(), 0.39);
    let bundle = synth_bundle(&spec, 6).unwrap();
    let bundles = [(Level::Token, bundle)];
    let run = |workers| {
        let config = AnalysisConfig {
            workers,
            ..AnalysisConfig::default()
        };
        let report = analyze_bundles(&bundles, &config).unwrap();
        (render_json(&report).unwrap() + &render_csv(&report), report)
    };

    let start = Instant::now();
    let (first, report) = run(Some(1));
    let elapsed = start.elapsed();
    let (second, _) = run(Some(1));
    let (parallel, _) = run(Some(4));

    let lr = report.series(Level::Token, Metric::LrAccuracy);
    let svm = report.series(Level::Token, Metric::SvmAccuracy);
    let gdv = report.series(Level::Token, Metric::Gdv);
    let argmax = |v: &[f64]| (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
    let argmin = |v: &[f64]| (0..v.len()).fold(0, |best, i| if v[i] < v[best] { i } else { best });
    let (a_lr, a_svm, a_gdv) = (argmax(&lr), argmax(&svm), argmin(&gdv));
    let identical = first == second && first == parallel;
    check(
        a_lr == 6 && a_svm == 6 && a_gdv == 6 && identical && elapsed < Duration::from_secs(60),
        format!(
            "N = {}, D = 128: argmax LR {a_lr}, argmax SVM {a_svm}, argmin GDV {a_gdv} (all 6), byte-identical across runs and workers: {identical}, {elapsed:.2?} (< 60 s)",
            spec.count()
        ),
    )
}

fn performance() -> Outcome {
    let inventory = LemmaInventory::builtin();
    let n: usize = inventory.entries.iter().map(|e| e.count).sum();
    let mut labels = Vec::with_capacity(n);
    for e in &inventory.entries {
        labels.extend(std::iter::repeat_n(e.class.id(), e.count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5135);
    let mut points = gaussian(&mut rng, n, 768);
    for (i, &l) in labels.iter().enumerate() {
        points[[i, 0]] += l as f64;
    }
    let cloud = LabeledPointCloud::new(points, labels, 2).unwrap();
    let timed = |workers| {
        let options = GdvOptions {
            workers: Some(workers),
            ..GdvOptions::default()
        };
        let start = Instant::now();
        let breakdown = gdv_with(&cloud, &options).unwrap();
        let elapsed = start.elapsed();
        let summary = serde_json::json!({
            "per_class_intra": breakdown.per_class_intra,
            "pairwise_inter": breakdown.pairwise_inter.iter().collect::<Vec<_>>(),
            "mean_intra": breakdown.mean_intra,
            "mean_inter": breakdown.mean_inter,
            "gdv": breakdown.gdv,
        });
        (elapsed, serde_json::to_vec(&summary).unwrap())
    };
    let (serial, serial_bytes) = timed(1);
    let (parallel, parallel_bytes) = timed(4);
    let identical = serial_bytes == parallel_bytes;
    let speedup = serial.as_secs_f64() / parallel.as_secs_f64();
    check(
        serial < Duration::from_secs(30) && speedup >= 2.0 && identical,
        format!(
            "N = {n}, D = 768: 1 worker {serial:.2?} (< 30 s), 4 workers {parallel:.2?}, speedup {speedup:.2}x (≥ 2x), identical output: {identical}, available CPUs {}",
            std::thread::available_parallelism().map_or(0, |p| p.get())
        ),
    )
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("GDV invariance suite", gdv_invariance),
        ("GDV anchor values", gdv_anchors),
        ("Probe sanity", probe_sanity),
        ("Statistics cross-check", stats_cross_check),
        ("End-to-end trend reproduction", end_to_end),
        ("Performance", performance),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
