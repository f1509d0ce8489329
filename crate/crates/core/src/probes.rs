//! Binary linear probes: logistic regression and a Pegasos-style linear SVM.
//!
//! Phrasal is the positive class (+1), prepositional the negative (-1). A
//! decision value of exactly zero predicts phrasal. Training is a pure function
//! of the data and the [`ProbeConfig`]; logistic regression uses full-batch
//! gradient descent and the SVM shuffles with a seeded ChaCha stream.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::VerbClass;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("training data contains only {0} samples; both classes are required")]
    SingleClass(VerbClass),
    #[error("no samples")]
    Empty,
    #[error("{labels} labels for {rows} rows")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("regularization strength must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("training diverged to non-finite weights")]
    Diverged,
}

/// Column statistics from the training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: ArrayView2<f64>) -> Result<Self, ProbeError> {
        let n = train.nrows();
        if n == 0 {
            return Err(ProbeError::Empty);
        }
        let mut means = Vec::with_capacity(train.ncols());
        let mut stds = Vec::with_capacity(train.ncols());
        for col in train.columns() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Standardizer { means, stds })
    }

    /// Constant training columns map to 0.
    pub fn apply(&self, points: ArrayView2<f64>) -> Result<Array2<f64>, ProbeError> {
        if points.ncols() != self.means.len() {
            return Err(ProbeError::WidthMismatch {
                expected: self.means.len(),
                found: points.ncols(),
            });
        }
        let mut out = points.to_owned();
        for (mut col, (&mean, &std)) in out.columns_mut().into_iter().zip(self.means.iter().zip(&self.stds)) {
            if std > 0.0 {
                col.mapv_inplace(|x| (x - mean) / std);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

pub fn fit_standardizer(train: ArrayView2<f64>) -> Result<Standardizer, ProbeError> {
    Standardizer::fit(train)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Logistic,
    Svm,
}

/// Hyperparameters a model was actually trained with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub reg_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

/// Training settings shared by both probes. `lambda = None` means `1 / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub lambda: Option<f64>,
    pub lr_epochs: usize,
    pub lr_learning_rate: f64,
    pub svm_epochs: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            lambda: None,
            lr_epochs: 500,
            lr_learning_rate: 0.5,
            svm_epochs: 50,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    fn resolve_lambda(&self, n: usize) -> Result<f64, ProbeError> {
        let lambda = self.lambda.unwrap_or(1.0 / n as f64);
        if lambda > 0.0 && lambda.is_finite() {
            Ok(lambda)
        } else {
            Err(ProbeError::BadLambda(lambda))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: ProbeKind,
    pub hyperparams: Hyperparams,
}

impl LinearModel {
    pub fn decision(&self, x: ArrayView1<f64>) -> f64 {
        x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> VerbClass {
        if self.decision(x) >= 0.0 {
            VerbClass::Phrasal
        } else {
            VerbClass::Prepositional
        }
    }

    /// Same hyperplane with the orientation reversed.
    pub fn negated(&self) -> LinearModel {
        LinearModel {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
            ..self.clone()
        }
    }
}

/// Fraction of rows whose predicted class matches the label.
pub fn evaluate(model: &LinearModel, points: ArrayView2<f64>, labels: &[VerbClass]) -> Result<f64, ProbeError> {
    check_shapes(points, labels)?;
    if points.ncols() != model.weights.len() {
        return Err(ProbeError::WidthMismatch {
            expected: model.weights.len(),
            found: points.ncols(),
        });
    }
    let correct = points
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &label)| model.predict(*row) == label)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Mean logistic loss plus `(lambda / 2) * |w|^2`; the bias is not penalized.
pub fn logistic_objective(weights: &[f64], bias: f64, points: ArrayView2<f64>, targets: &[f64], lambda: f64) -> f64 {
    let w = ArrayView1::from(weights);
    let margins = (points.dot(&w) + bias) * ArrayView1::from(targets);
    let loss = margins.iter().map(|&m| softplus(-m)).sum::<f64>() / targets.len() as f64;
    loss + 0.5 * lambda * w.dot(&w)
}

/// Gradient of [`logistic_objective`] with respect to `(weights, bias)`.
pub fn logistic_gradient(
    weights: &[f64],
    bias: f64,
    points: ArrayView2<f64>,
    targets: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let w = ArrayView1::from(weights);
    let (grad_w, grad_b) = logistic_gradient_nd(w, bias, points, ArrayView1::from(targets), lambda);
    (grad_w.to_vec(), grad_b)
}

fn logistic_gradient_nd(
    w: ArrayView1<f64>,
    bias: f64,
    points: ArrayView2<f64>,
    targets: ArrayView1<f64>,
    lambda: f64,
) -> (Array1<f64>, f64) {
    let n = targets.len() as f64;
    let scores = points.dot(&w) + bias;
    let coef: Array1<f64> = scores
        .iter()
        .zip(targets)
        .map(|(&z, &y)| -y * sigmoid(-y * z) / n)
        .collect();
    let grad_w = points.t().dot(&coef) + &(&w * lambda);
    (grad_w, coef.sum())
}

pub fn train_logistic(points: ArrayView2<f64>, labels: &[VerbClass], config: &ProbeConfig) -> Result<LinearModel, ProbeError> {
    check_shapes(points, labels)?;
    check_both_classes(labels)?;
    let lambda = config.resolve_lambda(labels.len())?;
    let targets: Array1<f64> = labels.iter().map(|c| c.sign()).collect();

    let mut w = Array1::<f64>::zeros(points.ncols());
    let mut b = 0.0;
    for t in 0..config.lr_epochs {
        let step = config.lr_learning_rate / (1.0 + t as f64 / 100.0);
        let (grad_w, grad_b) = logistic_gradient_nd(w.view(), b, points, targets.view(), lambda);
        w.scaled_add(-step, &grad_w);
        b -= step * grad_b;
    }

    finish(w.to_vec(), b, ProbeKind::Logistic, Hyperparams {
        reg_lambda: lambda,
        epochs: config.lr_epochs,
        seed: config.seed,
    })
}

/// Pegasos on the hinge loss. The bias is handled as a weight on a constant
/// feature, so it shares the `1 / (lambda * t)` step and the projection onto
/// the ball of radius `1 / sqrt(lambda)`.
pub fn train_linear_svm(points: ArrayView2<f64>, labels: &[VerbClass], config: &ProbeConfig) -> Result<LinearModel, ProbeError> {
    check_shapes(points, labels)?;
    check_both_classes(labels)?;
    let n = labels.len();
    let lambda = config.resolve_lambda(n)?;
    let radius = 1.0 / lambda.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = Array1::<f64>::zeros(points.ncols());
    let mut b = 0.0;
    let mut t = 0u64;
    for _ in 0..config.svm_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let step = 1.0 / (lambda * t as f64);
            let x = points.row(i);
            let y = labels[i].sign();
            let margin = y * (x.dot(&w) + b);
            let shrink = 1.0 - step * lambda;
            w *= shrink;
            b *= shrink;
            if margin < 1.0 {
                w.scaled_add(step * y, &x);
                b += step * y;
            }
            let norm = (w.dot(&w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w *= s;
                b *= s;
            }
        }
    }

    finish(w.to_vec(), b, ProbeKind::Svm, Hyperparams {
        reg_lambda: lambda,
        epochs: config.svm_epochs,
        seed: config.seed,
    })
}

/// Mean hinge loss of a model on labelled data.
pub fn mean_hinge_loss(model: &LinearModel, points: ArrayView2<f64>, labels: &[VerbClass]) -> f64 {
    points
        .axis_iter(Axis(0))
        .zip(labels)
        .map(|(x, c)| (1.0 - c.sign() * model.decision(x)).max(0.0))
        .sum::<f64>()
        / labels.len() as f64
}

fn finish(weights: Vec<f64>, bias: f64, kind: ProbeKind, hyperparams: Hyperparams) -> Result<LinearModel, ProbeError> {
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(ProbeError::Diverged);
    }
    Ok(LinearModel {
        weights,
        bias,
        kind,
        hyperparams,
    })
}

fn check_shapes(points: ArrayView2<f64>, labels: &[VerbClass]) -> Result<(), ProbeError> {
    if points.nrows() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            rows: points.nrows(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(ProbeError::Empty);
    }
    Ok(())
}

fn check_both_classes(labels: &[VerbClass]) -> Result<(), ProbeError> {
    let first = labels[0];
    if labels.iter().all(|&c| c == first) {
        Err(ProbeError::SingleClass(first))
    } else {
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizer_two_values() {
        let s = Standardizer::fit(array![[0.0], [2.0]].view()).unwrap();
        assert_eq!(s.means, vec![1.0]);
        assert_eq!(s.stds, vec![1.0]);
        assert_eq!(s.apply(array![[0.0], [2.0]].view()).unwrap(), array![[-1.0], [1.0]]);
    }

    #[test]
    fn standardizer_constant_column() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]];
        let s = Standardizer::fit(x.view()).unwrap();
        let t = s.apply(x.view()).unwrap();
        assert!(t.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardizer_refit_is_centred() {
        let x = array![[1.0, 10.0], [2.0, -3.0], [7.5, 0.25], [-4.0, 8.0]];
        let t = Standardizer::fit(x.view()).unwrap().apply(x.view()).unwrap();
        let again = Standardizer::fit(t.view()).unwrap();
        assert!(again.means.iter().all(|m| m.abs() < 1e-12));
        assert!(again.stds.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn standardizer_width_checked() {
        let s = Standardizer::fit(array![[0.0], [2.0]].view()).unwrap();
        assert!(s.apply(array![[0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn zero_model_predicts_phrasal() {
        let model = LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            kind: ProbeKind::Logistic,
            hyperparams: Hyperparams { reg_lambda: 1.0, epochs: 0, seed: 0 },
        };
        let x = array![[1.0, 2.0], [-3.0, 0.5], [0.0, 0.0], [9.0, 9.0], [1.0, 1.0]];
        let labels = [
            VerbClass::Phrasal,
            VerbClass::Prepositional,
            VerbClass::Phrasal,
            VerbClass::Prepositional,
            VerbClass::Prepositional,
        ];
        assert_eq!(evaluate(&model, x.view(), &labels).unwrap(), 0.4);
    }

    #[test]
    fn zero_epoch_logistic_is_class_prior() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let labels = [VerbClass::Phrasal, VerbClass::Prepositional, VerbClass::Prepositional, VerbClass::Prepositional];
        let config = ProbeConfig { lr_epochs: 0, ..ProbeConfig::default() };
        let model = train_logistic(x.view(), &labels, &config).unwrap();
        assert_eq!(evaluate(&model, x.view(), &labels).unwrap(), 0.25);
    }

    #[test]
    fn three_of_four() {
        let model = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            kind: ProbeKind::Svm,
            hyperparams: Hyperparams { reg_lambda: 1.0, epochs: 0, seed: 0 },
        };
        let x = array![[2.0], [1.0], [-1.0], [-2.0]];
        let labels = [VerbClass::Phrasal, VerbClass::Phrasal, VerbClass::Prepositional, VerbClass::Phrasal];
        assert_eq!(evaluate(&model, x.view(), &labels).unwrap(), 0.75);
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[1.0], [2.0]];
        let labels = [VerbClass::Phrasal, VerbClass::Phrasal];
        let config = ProbeConfig::default();
        assert_eq!(
            train_logistic(x.view(), &labels, &config),
            Err(ProbeError::SingleClass(VerbClass::Phrasal))
        );
        assert_eq!(
            train_linear_svm(x.view(), &labels, &config),
            Err(ProbeError::SingleClass(VerbClass::Phrasal))
        );
    }

    #[test]
    fn bad_lambda_rejected() {
        let x = array![[1.0], [2.0]];
        let labels = [VerbClass::Phrasal, VerbClass::Prepositional];
        let config = ProbeConfig { lambda: Some(0.0), ..ProbeConfig::default() };
        assert_eq!(train_linear_svm(x.view(), &labels, &config), Err(ProbeError::BadLambda(0.0)));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
