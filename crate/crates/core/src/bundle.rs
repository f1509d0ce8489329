//! Embedding bundle on-disk format.
//!
//! A bundle is a directory holding:
//!
//! * `manifest.json` describing shape and provenance,
//! * one raw file per layer with `count × dim` little-endian `f32` values in
//!   row-major order,
//! * a labels file with one `class<TAB>lemma<TAB>split` line per row.
//!
//! Everything is validated eagerly on read, so a [`Bundle`] in memory always
//! satisfies the manifest invariants.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gdv::LabeledPointCloud;
use crate::{Level, Split, VerbClass};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";
pub const ORDER: &str = "row-major";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing bundle file {0}")]
    MissingFile(PathBuf),
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unsupported bundle version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("format error: {0}")]
    Format(String),
    #[error("size mismatch for {file}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        file: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("labels file has {actual} rows but manifest count is {expected}")]
    LabelCount { expected: usize, actual: usize },
    #[error("labels line {line}: {message}")]
    LabelSyntax { line: usize, message: String },
    #[error("lemma {lemma:?} is labelled both {first} and {second}")]
    InconsistentLemma {
        lemma: String,
        first: VerbClass,
        second: VerbClass,
    },
    #[error("layer index {index} out of range (bundle has {num_layers} layers)")]
    LayerOutOfRange { index: usize, num_layers: usize },
}

impl BundleError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            BundleError::MissingFile(path.to_path_buf())
        } else {
            BundleError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub version: u32,
    pub level: Level,
    /// Number of representation points, the input embedding layer included.
    pub num_layers: usize,
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    pub order: String,
    pub layer_files: Vec<String>,
    pub labels_file: String,
    pub source_model: String,
}

impl BundleManifest {
    /// Manifest with conventional file names `layer_00.f32` ... and `labels.tsv`.
    pub fn new(level: Level, num_layers: usize, dim: usize, count: usize, source_model: &str) -> Self {
        BundleManifest {
            version: FORMAT_VERSION,
            level,
            num_layers,
            dim,
            count,
            dtype: DTYPE.to_string(),
            order: ORDER.to_string(),
            layer_files: (0..num_layers).map(|k| format!("layer_{k:02}.f32")).collect(),
            labels_file: "labels.tsv".to_string(),
            source_model: source_model.to_string(),
        }
    }

    /// Byte size every layer file must have.
    pub fn layer_bytes(&self) -> u64 {
        self.count as u64 * self.dim as u64 * 4
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        if self.version != FORMAT_VERSION {
            return Err(BundleError::UnsupportedVersion { found: self.version });
        }
        if self.dtype != DTYPE {
            return Err(BundleError::Format(format!("dtype must be {DTYPE:?}, got {:?}", self.dtype)));
        }
        if self.order != ORDER {
            return Err(BundleError::Format(format!("order must be {ORDER:?}, got {:?}", self.order)));
        }
        if self.num_layers == 0 || self.dim == 0 || self.count == 0 {
            return Err(BundleError::Format(format!(
                "num_layers, dim and count must be >= 1 (got {}, {}, {})",
                self.num_layers, self.dim, self.count
            )));
        }
        if self.layer_files.len() != self.num_layers {
            return Err(BundleError::Format(format!(
                "layer_files lists {} files but num_layers is {}",
                self.layer_files.len(),
                self.num_layers
            )));
        }
        for name in self.layer_files.iter().chain(std::iter::once(&self.labels_file)) {
            check_relative(name)?;
        }
        let mut seen = self.layer_files.clone();
        seen.push(self.labels_file.clone());
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(BundleError::Format("bundle file names must be distinct".into()));
        }
        Ok(())
    }
}

fn check_relative(name: &str) -> Result<(), BundleError> {
    let path = Path::new(name);
    let plain = !name.is_empty()
        && path.components().all(|c| matches!(c, Component::Normal(_)))
        && path.components().count() == 1;
    if plain {
        Ok(())
    } else {
        Err(BundleError::Format(format!("{name:?} is not a plain relative file name")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelRecord {
    pub class: VerbClass,
    pub lemma: String,
    pub split: Split,
}

impl LabelRecord {
    pub fn new(class: VerbClass, lemma: impl Into<String>, split: Split) -> Self {
        LabelRecord {
            class,
            lemma: lemma.into(),
            split,
        }
    }
}

/// A fully validated bundle held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub manifest: BundleManifest,
    pub layers: Vec<Array2<f32>>,
    pub labels: Vec<LabelRecord>,
}

/// One layer of a bundle as a point cloud, with the split of every row.
#[derive(Debug, Clone)]
pub struct LayerSlice {
    pub cloud: LabeledPointCloud,
    pub splits: Vec<Split>,
}

impl Bundle {
    pub fn new(
        manifest: BundleManifest,
        layers: Vec<Array2<f32>>,
        labels: Vec<LabelRecord>,
    ) -> Result<Self, BundleError> {
        manifest.validate()?;
        if layers.len() != manifest.num_layers {
            return Err(BundleError::Format(format!(
                "{} layer matrices given but num_layers is {}",
                layers.len(),
                manifest.num_layers
            )));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.dim() != (manifest.count, manifest.dim) {
                return Err(BundleError::Format(format!(
                    "layer {k} has shape {:?}, expected ({}, {})",
                    layer.dim(),
                    manifest.count,
                    manifest.dim
                )));
            }
        }
        if labels.len() != manifest.count {
            return Err(BundleError::LabelCount {
                expected: manifest.count,
                actual: labels.len(),
            });
        }
        check_lemma_classes(&labels)?;
        Ok(Bundle {
            manifest,
            layers,
            labels,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.manifest.num_layers
    }

    pub fn write(&self, dir: &Path) -> Result<(), BundleError> {
        fs::create_dir_all(dir).map_err(|e| BundleError::io(dir, e))?;
        for (layer, name) in self.layers.iter().zip(&self.manifest.layer_files) {
            let path = dir.join(name);
            fs::write(&path, encode_f32le(layer)).map_err(|e| BundleError::io(&path, e))?;
        }
        let path = dir.join(&self.manifest.labels_file);
        fs::write(&path, encode_labels(&self.labels)).map_err(|e| BundleError::io(&path, e))?;
        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| BundleError::Format(e.to_string()))?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| BundleError::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self, BundleError> {
        let manifest = read_manifest(dir)?;
        let expected = manifest.layer_bytes();

        // Sizes first so a bad file is reported before anything is decoded.
        for name in &manifest.layer_files {
            let path = dir.join(name);
            let actual = fs::metadata(&path).map_err(|e| BundleError::io(&path, e))?.len();
            if actual != expected {
                return Err(BundleError::SizeMismatch {
                    file: path,
                    expected,
                    actual,
                });
            }
        }

        let labels_path = dir.join(&manifest.labels_file);
        let text = fs::read_to_string(&labels_path).map_err(|e| BundleError::io(&labels_path, e))?;
        let labels = parse_labels(&text)?;
        if labels.len() != manifest.count {
            return Err(BundleError::LabelCount {
                expected: manifest.count,
                actual: labels.len(),
            });
        }
        check_lemma_classes(&labels)?;

        let mut layers = Vec::with_capacity(manifest.num_layers);
        for name in &manifest.layer_files {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| BundleError::io(&path, e))?;
            if bytes.len() as u64 != expected {
                return Err(BundleError::SizeMismatch {
                    file: path,
                    expected,
                    actual: bytes.len() as u64,
                });
            }
            layers.push(decode_f32le(&bytes, manifest.count, manifest.dim));
        }

        Ok(Bundle {
            manifest,
            layers,
            labels,
        })
    }

    /// Point cloud of one layer. Class ids follow [`VerbClass::id`].
    pub fn slice_layer(&self, layer_index: usize) -> Result<LayerSlice, BundleError> {
        let layer = self.layers.get(layer_index).ok_or(BundleError::LayerOutOfRange {
            index: layer_index,
            num_layers: self.manifest.num_layers,
        })?;
        let cloud = LabeledPointCloud {
            points: layer.mapv(f64::from),
            labels: self.labels.iter().map(|r| r.class.id()).collect(),
            class_count: VerbClass::ALL.len(),
        };
        Ok(LayerSlice {
            cloud,
            splits: self.labels.iter().map(|r| r.split).collect(),
        })
    }
}

pub fn write_bundle(
    manifest: &BundleManifest,
    layers: &[Array2<f32>],
    labels: &[LabelRecord],
    dir: &Path,
) -> Result<(), BundleError> {
    let bundle = Bundle::new(manifest.clone(), layers.to_vec(), labels.to_vec())?;
    bundle.write(dir)
}

pub fn read_bundle(dir: &Path) -> Result<Bundle, BundleError> {
    Bundle::read(dir)
}

pub fn read_manifest(dir: &Path) -> Result<BundleManifest, BundleError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| BundleError::io(&path, e))?;
    let manifest: BundleManifest = serde_json::from_str(&text).map_err(|e| BundleError::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn encode_f32le(matrix: &Array2<f32>) -> Vec<u8> {
    // Iteration over an Array2 is always logical row-major order.
    matrix.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn decode_f32le(bytes: &[u8], rows: usize, cols: usize) -> Array2<f32> {
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Array2::from_shape_vec((rows, cols), values).expect("byte length checked against manifest")
}

fn encode_labels(labels: &[LabelRecord]) -> String {
    let mut out = String::new();
    for r in labels {
        out.push_str(r.class.as_str());
        out.push('\t');
        out.push_str(&r.lemma);
        out.push('\t');
        out.push_str(r.split.as_str());
        out.push('\n');
    }
    out
}

fn parse_labels(text: &str) -> Result<Vec<LabelRecord>, BundleError> {
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let syntax = |message: String| BundleError::LabelSyntax {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(syntax(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let class = fields[0].parse::<VerbClass>().map_err(syntax)?;
        if fields[1].is_empty() {
            return Err(syntax("empty lemma".into()));
        }
        let split = fields[2].parse::<Split>().map_err(syntax)?;
        labels.push(LabelRecord::new(class, fields[1], split));
    }
    Ok(labels)
}

fn check_lemma_classes(labels: &[LabelRecord]) -> Result<(), BundleError> {
    let mut seen: BTreeMap<&str, VerbClass> = BTreeMap::new();
    for r in labels {
        match seen.get(r.lemma.as_str()) {
            Some(&first) if first != r.class => {
                return Err(BundleError::InconsistentLemma {
                    lemma: r.lemma.clone(),
                    first,
                    second: r.class,
                })
            }
            Some(_) => {}
            None => {
                seen.insert(&r.lemma, r.class);
            }
        }
    }
    Ok(())
}
