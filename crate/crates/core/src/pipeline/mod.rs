//! End-to-end layer-wise analysis.
//!
//! For every layer of each configured bundle: fit logistic regression and a
//! linear SVM on the train rows, score them on the lemma-disjoint test rows and
//! compute the GDV of the layer. The per-layer series are then tested for
//! normality and correlated with Spearman's r_s.

pub mod figures;
pub mod report;
mod synth;

use std::collections::BTreeSet;
use std::io;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{Bundle, BundleError};
use crate::gdv::{self, GdvError, GdvOptions};
use crate::probes::{self, ProbeConfig, ProbeError, Standardizer};
use crate::stats::{self, CorrelationMethod, PValueMethod, StatsError};
use crate::textprep::TextprepError;
use crate::{Level, Split, VerbClass};

pub use figures::{emit_figures, FIGURE_NAMES};
pub use report::{emit_report, format_sig, read_report_json, round_sig, ReportFormat};
pub use synth::{synth_bundle, write_synth_bundle, SynthLemma, SynthSpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Textprep(#[from] TextprepError),
    #[error("degenerate data: {0}")]
    Gdv(#[from] GdvError),
    #[error("degenerate data: {0}")]
    Probe(#[from] ProbeError),
    #[error("degenerate data: {0}")]
    Stats(#[from] StatsError),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// Process exit code: 2 validation, 3 degenerate data, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Bundle(BundleError::Io { .. }) => 4,
            PipelineError::Bundle(_) | PipelineError::Validation(_) | PipelineError::Json(_) => 2,
            PipelineError::Textprep(TextprepError::Io { .. }) => 4,
            PipelineError::Textprep(_) => 2,
            PipelineError::Gdv(GdvError::Pool(_)) => 4,
            PipelineError::Gdv(_)
            | PipelineError::Probe(_)
            | PipelineError::Stats(_)
            | PipelineError::Degenerate(_) => 3,
            PipelineError::Io { .. } => 4,
        }
    }
}

/// Which rows of a layer enter the GDV.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GdvSplit {
    #[default]
    All,
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub token_bundle: Option<PathBuf>,
    pub sentence_bundle: Option<PathBuf>,
    pub probes: ProbeConfig,
    pub gdv_split: GdvSplit,
    pub p_method: PValueMethod,
    /// Worker threads; results do not depend on it, so it is not echoed.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            token_bundle: None,
            sentence_bundle: None,
            probes: ProbeConfig::default(),
            gdv_split: GdvSplit::All,
            p_method: PValueMethod::TApprox,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Lr,
    Svm,
}

impl Classifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::Lr => "lr",
            Classifier::Svm => "svm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub level: Level,
    #[serde(rename = "layer")]
    pub layer_index: usize,
    pub lr_accuracy: f64,
    pub svm_accuracy: f64,
    pub gdv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub level: Level,
    pub source_model: String,
    pub num_layers: usize,
    pub dim: usize,
    pub count: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub gdv_rows: usize,
}

/// Normality test of one per-layer series. `error` is set instead of the
/// statistic when the test is undefined (constant or too-short series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityEntry {
    pub series: String,
    pub n: usize,
    pub test: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub normal_at_05: Option<bool>,
    pub error: Option<String>,
}

/// Spearman correlation of one accuracy series against the GDV series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub level: Level,
    pub classifier: Classifier,
    pub n: usize,
    pub method: CorrelationMethod,
    pub r_s: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub config: AnalysisConfig,
    pub inputs: Vec<InputSummary>,
    pub layers: Vec<LayerReport>,
    pub normality: Vec<NormalityEntry>,
    pub correlations: Vec<CorrelationEntry>,
}

impl AnalysisReport {
    pub fn levels(&self) -> Vec<Level> {
        self.inputs.iter().map(|i| i.level).collect()
    }

    pub fn layers_of(&self, level: Level) -> Vec<&LayerReport> {
        self.layers.iter().filter(|l| l.level == level).collect()
    }

    pub fn series(&self, level: Level, metric: Metric) -> Vec<f64> {
        self.layers_of(level).iter().map(|l| metric.of(l)).collect()
    }

    pub fn correlation(&self, level: Level, classifier: Classifier) -> Option<&CorrelationEntry> {
        self.correlations
            .iter()
            .find(|c| c.level == level && c.classifier == classifier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    LrAccuracy,
    SvmAccuracy,
    Gdv,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::LrAccuracy, Metric::SvmAccuracy, Metric::Gdv];

    pub fn of(self, layer: &LayerReport) -> f64 {
        match self {
            Metric::LrAccuracy => layer.lr_accuracy,
            Metric::SvmAccuracy => layer.svm_accuracy,
            Metric::Gdv => layer.gdv,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::LrAccuracy => "lr_accuracy",
            Metric::SvmAccuracy => "svm_accuracy",
            Metric::Gdv => "gdv",
        }
    }

    pub fn accuracy_of(classifier: Classifier) -> Metric {
        match classifier {
            Classifier::Lr => Metric::LrAccuracy,
            Classifier::Svm => Metric::SvmAccuracy,
        }
    }
}

pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisReport, PipelineError> {
    let mut loaded = Vec::new();
    for (level, path) in [
        (Level::Token, &config.token_bundle),
        (Level::Sentence, &config.sentence_bundle),
    ] {
        if let Some(path) = path {
            loaded.push((level, Bundle::read(path)?));
        }
    }
    analyze_bundles(&loaded, config)
}

/// Same as [`run_analysis`] on bundles already in memory.
pub fn analyze_bundles(bundles: &[(Level, Bundle)], config: &AnalysisConfig) -> Result<AnalysisReport, PipelineError> {
    if bundles.is_empty() {
        return Err(PipelineError::Validation("no bundle given".into()));
    }
    for (level, bundle) in bundles {
        if bundle.manifest.level != *level {
            return Err(PipelineError::Validation(format!(
                "bundle given as {level} level declares level {}",
                bundle.manifest.level
            )));
        }
    }
    if let [(_, first), (_, second)] = bundles {
        if first.labels != second.labels {
            return Err(PipelineError::Validation(
                "token and sentence bundles must carry identical label rows".into(),
            ));
        }
    }

    let row_sets: Vec<RowSets> = bundles
        .iter()
        .map(|(_, bundle)| RowSets::new(bundle, config.gdv_split))
        .collect::<Result<_, _>>()?;
    let mut inputs = Vec::new();
    let mut jobs = Vec::new();
    for (b, ((level, bundle), rows)) in bundles.iter().zip(&row_sets).enumerate() {
        inputs.push(InputSummary {
            level: *level,
            source_model: bundle.manifest.source_model.clone(),
            num_layers: bundle.num_layers(),
            dim: bundle.manifest.dim,
            count: bundle.manifest.count,
            train_rows: rows.train.len(),
            test_rows: rows.test.len(),
            gdv_rows: rows.gdv.len(),
        });
        jobs.extend((0..bundle.num_layers()).map(|layer| (b, layer)));
    }

    let run_jobs = || -> Result<Vec<LayerReport>, PipelineError> {
        jobs.par_iter()
            .map(|&(b, layer)| analyze_layer(bundles[b].0, &bundles[b].1, layer, &row_sets[b], config))
            .collect()
    };
    let layers = match config.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| PipelineError::Gdv(GdvError::Pool(e.to_string())))?
            .install(run_jobs)?,
        None => run_jobs()?,
    };

    let mut report = AnalysisReport {
        tool_version: TOOL_VERSION.to_string(),
        config: config.clone(),
        inputs,
        layers,
        normality: Vec::new(),
        correlations: Vec::new(),
    };
    report.normality = normality_entries(&report);
    report.correlations = correlation_entries(&report, config.p_method);
    Ok(report)
}

struct RowSets {
    train: Vec<usize>,
    test: Vec<usize>,
    gdv: Vec<usize>,
}

impl RowSets {
    fn new(bundle: &Bundle, gdv_split: GdvSplit) -> Result<Self, PipelineError> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, label) in bundle.labels.iter().enumerate() {
            match label.split {
                Split::Train => train.push(i),
                Split::Test => test.push(i),
            }
        }
        let lemmas = |rows: &[usize]| -> BTreeSet<&str> {
            rows.iter().map(|&i| bundle.labels[i].lemma.as_str()).collect()
        };
        let shared: Vec<&str> = lemmas(&train).intersection(&lemmas(&test)).copied().collect();
        if !shared.is_empty() {
            return Err(PipelineError::Validation(format!(
                "lemmas present in both train and test rows: {shared:?}"
            )));
        }
        if train.is_empty() || test.is_empty() {
            return Err(PipelineError::Degenerate(format!(
                "{} train rows and {} test rows; both splits are required",
                train.len(),
                test.len()
            )));
        }
        let gdv = match gdv_split {
            GdvSplit::All => (0..bundle.labels.len()).collect(),
            GdvSplit::Train => train.clone(),
            GdvSplit::Test => test.clone(),
        };
        Ok(RowSets { train, test, gdv })
    }
}

/// Probes fitted on the train rows of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProbes {
    pub standardizer: Standardizer,
    pub logistic: probes::LinearModel,
    pub svm: probes::LinearModel,
    pub lr_accuracy: f64,
    pub svm_accuracy: f64,
}

/// Fit the standardizer and both probes on the train rows of `layer` and
/// score them on its test rows. Test rows never reach the fitting code.
pub fn layer_probes(bundle: &Bundle, layer: usize, config: &ProbeConfig) -> Result<LayerProbes, PipelineError> {
    let rows = RowSets::new(bundle, GdvSplit::All)?;
    let slice = bundle.slice_layer(layer)?;
    fit_probes(bundle, &slice.cloud, &rows, config)
}

fn fit_probes(
    bundle: &Bundle,
    cloud: &gdv::LabeledPointCloud,
    rows: &RowSets,
    config: &ProbeConfig,
) -> Result<LayerProbes, PipelineError> {
    let classes = |idx: &[usize]| -> Vec<VerbClass> { idx.iter().map(|&i| bundle.labels[i].class).collect() };
    let train = cloud.select_rows(&rows.train);
    let standardizer = Standardizer::fit(train.points.view())?;
    let x_train = standardizer.apply(train.points.view())?;
    let y_train = classes(&rows.train);
    let logistic = probes::train_logistic(x_train.view(), &y_train, config)?;
    let svm = probes::train_linear_svm(x_train.view(), &y_train, config)?;

    let test = cloud.select_rows(&rows.test);
    let x_test = standardizer.apply(test.points.view())?;
    let y_test = classes(&rows.test);
    let lr_accuracy = probes::evaluate(&logistic, x_test.view(), &y_test)?;
    let svm_accuracy = probes::evaluate(&svm, x_test.view(), &y_test)?;
    Ok(LayerProbes {
        standardizer,
        logistic,
        svm,
        lr_accuracy,
        svm_accuracy,
    })
}

fn analyze_layer(
    level: Level,
    bundle: &Bundle,
    layer: usize,
    rows: &RowSets,
    config: &AnalysisConfig,
) -> Result<LayerReport, PipelineError> {
    let slice = bundle.slice_layer(layer)?;
    let fitted = fit_probes(bundle, &slice.cloud, rows, &config.probes)?;
    let breakdown = gdv::gdv_with(&slice.cloud.select_rows(&rows.gdv), &GdvOptions::default())?;

    Ok(LayerReport {
        level,
        layer_index: layer,
        lr_accuracy: round_sig(fitted.lr_accuracy),
        svm_accuracy: round_sig(fitted.svm_accuracy),
        gdv: round_sig(breakdown.gdv),
    })
}

fn normality_entries(report: &AnalysisReport) -> Vec<NormalityEntry> {
    let mut entries = Vec::new();
    for level in report.levels() {
        for metric in Metric::ALL {
            let series = report.series(level, metric);
            let mut entry = NormalityEntry {
                series: format!("{level}_{}", metric.name()),
                n: series.len(),
                test: stats::NORMALITY_TEST.to_string(),
                statistic: None,
                p_value: None,
                normal_at_05: None,
                error: None,
            };
            match stats::normality_test(&series) {
                Ok(r) => {
                    entry.statistic = Some(round_sig(r.statistic));
                    entry.p_value = Some(round_sig(r.p_value));
                    entry.normal_at_05 = Some(r.normal_at_05);
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            entries.push(entry);
        }
    }
    entries
}

fn correlation_entries(report: &AnalysisReport, p_method: PValueMethod) -> Vec<CorrelationEntry> {
    let method = match p_method {
        PValueMethod::TApprox => CorrelationMethod::TApprox,
        PValueMethod::MonteCarlo { .. } => CorrelationMethod::MonteCarlo,
    };
    let mut entries = Vec::new();
    for level in report.levels() {
        let gdv_series = report.series(level, Metric::Gdv);
        for classifier in [Classifier::Lr, Classifier::Svm] {
            let accuracy = report.series(level, Metric::accuracy_of(classifier));
            let mut entry = CorrelationEntry {
                level,
                classifier,
                n: accuracy.len(),
                method,
                r_s: None,
                p_value: None,
                error: None,
            };
            match stats::spearman_with(&accuracy, &gdv_series, p_method) {
                Ok(r) => {
                    entry.r_s = Some(round_sig(r.r_s));
                    entry.p_value = Some(round_sig(r.p_value));
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            entries.push(entry);
        }
    }
    entries
}
