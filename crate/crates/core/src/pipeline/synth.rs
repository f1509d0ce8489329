//! Synthetic bundles with a prescribed class separation per layer.
//!
//! At layer `k` phrasal rows are drawn from `N(+s_k/2 · u_k, σ²I)` and
//! prepositional rows from `N(-s_k/2 · u_k, σ²I)`, where `u_k` is a random unit
//! direction and `s_k = separations[k] · σ`. Rows follow the lemma list in
//! order, so splits are lemma-disjoint whenever the lemma list is.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bundle::{Bundle, BundleManifest, LabelRecord};
use crate::textprep::LemmaInventory;
use crate::{Level, Split, VerbClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLemma {
    pub lemma: String,
    pub class: VerbClass,
    pub split: Split,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub level: Level,
    pub dim: usize,
    /// Distance between class centres at each layer, in units of `noise_sd`.
    pub separations: Vec<f64>,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    pub lemmas: Vec<SynthLemma>,
    #[serde(default = "default_source")]
    pub source_model: String,
}

fn default_noise_sd() -> f64 {
    1.0
}

fn default_source() -> String {
    "synthetic".to_string()
}

impl SynthSpec {
    /// Lemma list taken from an inventory with every count multiplied by
    /// `scale` (rounded, at least 1).
    pub fn from_inventory(level: Level, dim: usize, separations: Vec<f64>, inventory: &LemmaInventory, scale: f64) -> Self {
        let lemmas = inventory
            .entries
            .iter()
            .map(|e| SynthLemma {
                lemma: e.lemma.clone(),
                class: e.class,
                split: e.split,
                count: ((e.count as f64 * scale).round() as usize).max(1),
            })
            .collect();
        SynthSpec {
            level,
            dim,
            separations,
            noise_sd: 1.0,
            lemmas,
            source_model: default_source(),
        }
    }

    pub fn count(&self) -> usize {
        self.lemmas.iter().map(|l| l.count).sum()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |msg: String| Err(PipelineError::Validation(format!("synth spec: {msg}")));
        if self.dim == 0 {
            return invalid("dim must be >= 1".into());
        }
        if self.separations.is_empty() {
            return invalid("at least one layer separation is required".into());
        }
        if let Some(s) = self.separations.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return invalid(format!("separation {s} is not a finite non-negative number"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return invalid(format!("noise_sd {} must be positive", self.noise_sd));
        }
        let mut classes: BTreeMap<&str, VerbClass> = BTreeMap::new();
        for l in &self.lemmas {
            if l.count == 0 {
                return invalid(format!("lemma {:?} has count 0", l.lemma));
            }
            if l.lemma.is_empty() || l.lemma.contains(['\t', '\n', '\r']) {
                return invalid(format!("lemma {:?} is not a valid label", l.lemma));
            }
            if let Some(prev) = classes.insert(&l.lemma, l.class) {
                if prev != l.class {
                    return invalid(format!("lemma {:?} listed under both classes", l.lemma));
                }
            }
        }
        for class in VerbClass::ALL {
            let n: usize = self.lemmas.iter().filter(|l| l.class == class).map(|l| l.count).sum();
            if n < 2 {
                return invalid(format!("class {class} has {n} samples; at least 2 are required"));
            }
        }
        Ok(())
    }
}

pub fn synth_bundle(spec: &SynthSpec, seed: u64) -> Result<Bundle, PipelineError> {
    spec.validate()?;
    let n = spec.count();
    let d = spec.dim;
    let labels: Vec<LabelRecord> = spec
        .lemmas
        .iter()
        .flat_map(|l| std::iter::repeat_n(LabelRecord::new(l.class, l.lemma.clone(), l.split), l.count))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(spec.separations.len());
    for &separation in &spec.separations {
        let mut direction: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        direction.iter_mut().for_each(|v| *v /= norm);
        let half = 0.5 * separation * spec.noise_sd;

        let mut layer = Array2::<f32>::zeros((n, d));
        for (mut row, label) in layer.rows_mut().into_iter().zip(&labels) {
            let offset = half * label.class.sign();
            for (value, u) in row.iter_mut().zip(&direction) {
                let noise: f64 = rng.sample(StandardNormal);
                *value = (offset * u + spec.noise_sd * noise) as f32;
            }
        }
        layers.push(layer);
    }

    let manifest = BundleManifest::new(spec.level, spec.separations.len(), d, n, &spec.source_model);
    Ok(Bundle::new(manifest, layers, labels)?)
}

pub fn write_synth_bundle(spec: &SynthSpec, seed: u64, dir: &Path) -> Result<Bundle, PipelineError> {
    let bundle = synth_bundle(spec, seed)?;
    bundle.write(dir)?;
    Ok(bundle)
}
