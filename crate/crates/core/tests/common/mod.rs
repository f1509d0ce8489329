#![allow(dead_code)]

use layersep::bundle::{Bundle, BundleManifest, LabelRecord};
use layersep::{Level, Split, VerbClass};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Textbook GDV: population z-score halved, explicit double loops over
/// every class and class pair. Shares no code with the library.
pub fn naive_gdv(points: &[Vec<f64>], labels: &[usize], classes: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut scaled = vec![vec![0.0; d]; n];
    for k in 0..d {
        let mu: f64 = points.iter().map(|p| p[k]).sum::<f64>() / n as f64;
        let var: f64 = points.iter().map(|p| (p[k] - mu).powi(2)).sum::<f64>() / n as f64;
        let sigma = var.sqrt();
        for i in 0..n {
            scaled[i][k] = if sigma > 0.0 { 0.5 * (points[i][k] - mu) / sigma } else { 0.0 };
        }
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let members = |c: usize| -> Vec<&Vec<f64>> { (0..n).filter(|&i| labels[i] == c).map(|i| &scaled[i]).collect() };

    let mut intra = 0.0;
    for c in 0..classes {
        let m = members(c);
        let mut s = 0.0;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                s += dist(m[i], m[j]);
            }
        }
        intra += 2.0 * s / (m.len() * (m.len() - 1)) as f64;
    }
    intra /= classes as f64;

    let mut inter = 0.0;
    for a in 0..classes {
        for b in a + 1..classes {
            let (ma, mb) = (members(a), members(b));
            let mut s = 0.0;
            for x in &ma {
                for y in &mb {
                    s += dist(x, y);
                }
            }
            inter += s / (ma.len() * mb.len()) as f64;
        }
    }
    inter *= 2.0 / (classes * (classes - 1)) as f64;

    (intra - inter) / (d as f64).sqrt()
}

pub fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Two isotropic Gaussian classes in `dim` dimensions with centres at
/// `±offset` along the first axis. Phrasal rows first.
pub fn blobs(per_class: usize, dim: usize, offset: f64, sigma: f64, seed: u64) -> (Array2<f64>, Vec<VerbClass>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((2 * per_class, dim));
    let mut y = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let class = if i < per_class { VerbClass::Phrasal } else { VerbClass::Prepositional };
        for k in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            x[[i, k]] = sigma * noise + if k == 0 { offset * class.sign() } else { 0.0 };
        }
        y.push(class);
    }
    (x, y)
}

/// Small bundle with random values: `count` rows split over four lemmas.
pub fn random_bundle(num_layers: usize, dim: usize, count: usize, seed: u64) -> Bundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = (0..num_layers)
        .map(|_| Array2::from_shape_fn((count, dim), |_| rng.sample::<f32, _>(StandardNormal)))
        .collect();
    let lemmas = [
        (VerbClass::Phrasal, "give_up", Split::Train),
        (VerbClass::Prepositional, "look_at", Split::Train),
        (VerbClass::Phrasal, "take_up", Split::Test),
        (VerbClass::Prepositional, "deal_with", Split::Test),
    ];
    let labels = (0..count)
        .map(|i| {
            let (c, l, s) = lemmas[i % 4];
            LabelRecord::new(c, l, s)
        })
        .collect();
    let manifest = BundleManifest::new(Level::Token, num_layers, dim, count, "random");
    Bundle::new(manifest, layers, labels).unwrap()
}

/// Permutation of 0..n whose Spearman correlation with the identity is as
/// close as possible to `target`, found by greedy random transpositions.
pub fn permutation_with_rs(n: usize, target: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rs = |p: &[usize]| {
        let d: usize = p.iter().enumerate().map(|(i, &v)| (i as i64 - v as i64).pow(2) as usize).sum();
        1.0 - 6.0 * d as f64 / (n * (n * n - 1)) as f64
    };
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    for _ in 0..20_000 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let mut q = p.clone();
        q.swap(i, j);
        if (rs(&q) - target).abs() <= (rs(&p) - target).abs() {
            p = q;
        }
    }
    p.into_iter().map(|v| v as f64).collect()
}
