//! Generalized Discrimination Value.
//!
//! Each dimension is z-scored with population statistics and halved, then the
//! mean Euclidean distance within each class is compared with the mean
//! distance between classes:
//!
//! ```text
//! GDV = (mean_intra - mean_inter) / sqrt(D)
//! ```
//!
//! Zero means the classes overlap completely; more negative values mean
//! stronger separation. The pairwise core is O(N²D) and runs over fixed row
//! blocks whose partial sums are combined in block order, so the result is
//! bit-identical for any number of worker threads.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

/// Rows per block in the pairwise-distance kernel. 32 rows of 768 f64 values
/// (192 KiB) stay resident in L2 while the column blocks stream past.
pub const DEFAULT_BLOCK_ROWS: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum GdvError {
    #[error("class {class} has {size} members; at least 2 are required")]
    DegenerateClass { class: usize, size: usize },
    #[error("class {0} has no members")]
    EmptyClass(usize),
    #[error("inter-class distance needs two different classes, got {0} twice")]
    SameClass(usize),
    #[error("point cloud needs at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("point cloud has zero dimensions")]
    NoDimensions,
    #[error("at least 2 classes are required, got {0}")]
    TooFewClasses(usize),
    #[error("label {label} at row {row} is outside 0..{class_count}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        class_count: usize,
    },
    #[error("{labels} labels for {rows} points")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

/// N points in D dimensions, each assigned to one of `class_count` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    pub points: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl LabeledPointCloud {
    pub fn new(points: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self, GdvError> {
        let cloud = LabeledPointCloud {
            points,
            labels,
            class_count,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        class_sizes(&self.labels, self.class_count)
    }

    /// Cloud restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> LabeledPointCloud {
        LabeledPointCloud {
            points: self.points.select(ndarray::Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_count: self.class_count,
        }
    }

    pub fn validate(&self) -> Result<(), GdvError> {
        let (n, d) = self.points.dim();
        if self.labels.len() != n {
            return Err(GdvError::LengthMismatch {
                rows: n,
                labels: self.labels.len(),
            });
        }
        if n < 4 {
            return Err(GdvError::TooFewPoints { needed: 4, found: n });
        }
        if d == 0 {
            return Err(GdvError::NoDimensions);
        }
        if self.class_count < 2 {
            return Err(GdvError::TooFewClasses(self.class_count));
        }
        check_labels(&self.labels, self.class_count)?;
        for (class, &size) in self.class_sizes().iter().enumerate() {
            if size < 2 {
                return Err(GdvError::DegenerateClass { class, size });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdvBreakdown {
    pub scaled_points: Array2<f64>,
    pub per_class_intra: Vec<f64>,
    /// Mean inter-class distance for class pairs `(l, m)` with `l < m`; other
    /// entries are zero.
    pub pairwise_inter: Array2<f64>,
    pub mean_intra: f64,
    pub mean_inter: f64,
    pub gdv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GdvOptions {
    pub block_rows: usize,
    /// Worker threads for the pairwise kernel; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl Default for GdvOptions {
    fn default() -> Self {
        GdvOptions {
            block_rows: DEFAULT_BLOCK_ROWS,
            workers: None,
        }
    }
}

/// Per-dimension z-score with population statistics, multiplied by ½.
/// Constant dimensions map to 0.
pub fn zscore_half(points: ArrayView2<f64>) -> Array2<f64> {
    let (n, d) = points.dim();
    let mut out = Array2::<f64>::zeros((n, d));
    if n == 0 {
        return out;
    }
    for (col, mut out_col) in points.columns().into_iter().zip(out.columns_mut()) {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std > 0.0 {
            for (o, x) in out_col.iter_mut().zip(col.iter()) {
                *o = 0.5 * (x - mean) / std;
            }
        }
    }
    out
}

/// Mean distance over all unordered pairs of members of `class_id`.
pub fn mean_intra_class_distance(
    scaled_points: ArrayView2<f64>,
    labels: &[usize],
    class_id: usize,
) -> Result<f64, GdvError> {
    let members = rows_of(scaled_points, labels, class_id)?;
    let k = members.len();
    if k < 2 {
        return Err(GdvError::DegenerateClass {
            class: class_id,
            size: k,
        });
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += euclidean(members[i], members[j]);
        }
    }
    Ok(sum / (k * (k - 1) / 2) as f64)
}

/// Mean distance over all pairs with one member in each class.
pub fn mean_inter_class_distance(
    scaled_points: ArrayView2<f64>,
    labels: &[usize],
    class_a: usize,
    class_b: usize,
) -> Result<f64, GdvError> {
    if class_a == class_b {
        return Err(GdvError::SameClass(class_a));
    }
    let a = rows_of(scaled_points, labels, class_a)?;
    let b = rows_of(scaled_points, labels, class_b)?;
    if a.is_empty() {
        return Err(GdvError::EmptyClass(class_a));
    }
    if b.is_empty() {
        return Err(GdvError::EmptyClass(class_b));
    }
    let mut sum = 0.0;
    for x in &a {
        for y in &b {
            sum += euclidean(x, y);
        }
    }
    Ok(sum / (a.len() * b.len()) as f64)
}

pub fn gdv(cloud: &LabeledPointCloud) -> Result<GdvBreakdown, GdvError> {
    gdv_with(cloud, &GdvOptions::default())
}

pub fn gdv_with(cloud: &LabeledPointCloud, options: &GdvOptions) -> Result<GdvBreakdown, GdvError> {
    cloud.validate()?;
    let scaled = zscore_half(cloud.points.view());
    let sums = match options.workers {
        None => pair_sums(scaled.view(), &cloud.labels, cloud.class_count, options.block_rows),
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| GdvError::Pool(e.to_string()))?
            .install(|| pair_sums(scaled.view(), &cloud.labels, cloud.class_count, options.block_rows)),
    };

    let l = cloud.class_count;
    let sizes = cloud.class_sizes();
    let per_class_intra: Vec<f64> = (0..l)
        .map(|c| {
            let pairs = (sizes[c] * (sizes[c] - 1) / 2) as f64;
            sums[c * l + c] / pairs
        })
        .collect();
    let mut pairwise_inter = Array2::<f64>::zeros((l, l));
    let mut inter_total = 0.0;
    for a in 0..l {
        for b in a + 1..l {
            let v = sums[a * l + b] / (sizes[a] * sizes[b]) as f64;
            pairwise_inter[[a, b]] = v;
            inter_total += v;
        }
    }
    let mean_intra = per_class_intra.iter().sum::<f64>() / l as f64;
    let mean_inter = inter_total / (l * (l - 1) / 2) as f64;
    let gdv = (mean_intra - mean_inter) / (cloud.dim() as f64).sqrt();

    Ok(GdvBreakdown {
        scaled_points: scaled,
        per_class_intra,
        pairwise_inter,
        mean_intra,
        mean_inter,
        gdv,
    })
}

/// Sums of pairwise distances keyed by class pair, as a flat `L × L` array
/// where entry `(min(l, m), max(l, m))` accumulates every unordered pair.
fn pair_sums(points: ArrayView2<f64>, labels: &[usize], class_count: usize, block_rows: usize) -> Vec<f64> {
    let points = points.as_standard_layout();
    let (n, d) = points.dim();
    let flat = points.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * d..(i + 1) * d];
    let block = block_rows.max(1);
    let blocks = n.div_ceil(block);
    let l = class_count;

    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|bi| {
            let mut acc = vec![0.0f64; l * l];
            let rows = bi * block..((bi + 1) * block).min(n);
            for bj in bi..blocks {
                let cols = bj * block..((bj + 1) * block).min(n);
                for i in rows.clone() {
                    let xi = row(i);
                    let li = labels[i];
                    for j in cols.start.max(i + 1)..cols.end {
                        let lj = labels[j];
                        let key = if li <= lj { li * l + lj } else { lj * l + li };
                        acc[key] += euclidean(xi, row(j));
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![0.0f64; l * l];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Euclidean distance with eight independent lanes so the loop vectorizes.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            let diff = x[k] - y[k];
            lanes[k] += diff * diff;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ta.iter().zip(tb) {
        let diff = x - y;
        tail += diff * diff;
    }
    let sum = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    (sum + tail).sqrt()
}

fn class_sizes(labels: &[usize], class_count: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; class_count];
    for &c in labels {
        if c < class_count {
            sizes[c] += 1;
        }
    }
    sizes
}

fn check_labels(labels: &[usize], class_count: usize) -> Result<(), GdvError> {
    match labels.iter().enumerate().find(|(_, &c)| c >= class_count) {
        Some((row, &label)) => Err(GdvError::LabelOutOfRange {
            row,
            label,
            class_count,
        }),
        None => Ok(()),
    }
}

fn rows_of<'a>(points: ArrayView2<'a, f64>, labels: &[usize], class_id: usize) -> Result<Vec<&'a [f64]>, GdvError> {
    if labels.len() != points.nrows() {
        return Err(GdvError::LengthMismatch {
            rows: points.nrows(),
            labels: labels.len(),
        });
    }
    let slice = points.to_slice().expect("scaled points must be in standard layout");
    let d = points.ncols();
    Ok(labels
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == class_id)
        .map(|(i, _)| &slice[i * d..(i + 1) * d])
        .collect())
}
