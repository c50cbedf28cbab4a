//! Single-neuron logistic classifier over refined motifs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RefinedMotif;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    fn target(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "positive" | "pos" | "true" | "solar" => Ok(Label::Positive),
            "0" | "negative" | "neg" | "false" | "non-solar" | "nonsolar" => Ok(Label::Negative),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

/// Optional per-motif input scaling, applied identically in training and inference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputScaling {
    #[default]
    None,
    /// Divide by the motif's largest reading.
    Max,
}

impl InputScaling {
    fn apply(self, x: &[f64]) -> Vec<f64> {
        match self {
            InputScaling::None => x.to_vec(),
            InputScaling::Max => {
                let peak = x.iter().copied().fold(0.0, f64::max);
                if peak > 0.0 {
                    x.iter().map(|v| v / peak).collect()
                } else {
                    x.to_vec()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub decision_threshold: f64,
    #[serde(default)]
    pub scaling: InputScaling,
    /// Gradient steps taken; zero means untrained.
    #[serde(default)]
    pub epochs_trained: usize,
}

impl ClassifierModel {
    /// All-zero model of input length `m`.
    pub fn zeros(m: usize) -> Self {
        ClassifierModel {
            weights: vec![0.0; m],
            bias: 0.0,
            decision_threshold: 0.5,
            scaling: InputScaling::None,
            epochs_trained: 0,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    /// Probability of the positive class, and the resulting label.
    pub fn predict(&self, rm: &RefinedMotif) -> Result<(f64, Label)> {
        self.predict_values(&rm.pattern.values)
    }

    pub fn predict_values(&self, x: &[f64]) -> Result<(f64, Label)> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "motif has {} readings, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        let p = sigmoid(self.logit(&self.scaling.apply(x)));
        let label = if p >= self.decision_threshold {
            Label::Positive
        } else {
            Label::Negative
        };
        Ok((p, label))
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

pub fn sigmoid(z: f64) -> f64 {
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

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub scaling: InputScaling,
    pub decision_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 2000,
            scaling: InputScaling::None,
            decision_threshold: 0.5,
        }
    }
}

/// Mean logistic loss and its gradient with respect to `(weights, bias)`.
///
/// Inputs are taken as given (no scaling is applied here).
pub fn loss_and_gradient(model: &ClassifierModel, samples: &[(Vec<f64>, Label)]) -> (f64, Vec<f64>, f64) {
    let n = samples.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; model.weights.len()];
    let mut grad_b = 0.0;
    for (x, y) in samples {
        let z = model.logit(x);
        let t = y.target();
        // -t ln p - (1 - t) ln(1 - p) with p = sigmoid(z)
        loss += softplus(z) - t * z;
        let err = sigmoid(z) - t;
        for (g, v) in grad_w.iter_mut().zip(x) {
            *g += err * v;
        }
        grad_b += err;
    }
    grad_w.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad_w, grad_b / n)
}

/// Mean logistic loss of `model` on raw (unscaled) samples.
pub fn mean_loss(model: &ClassifierModel, samples: &[(Vec<f64>, Label)]) -> f64 {
    let scaled: Vec<_> = samples.iter().map(|(x, y)| (model.scaling.apply(x), *y)).collect();
    loss_and_gradient(model, &scaled).0
}

/// Full-batch gradient descent from a zero model.
pub fn train(samples: &[(RefinedMotif, Label)], cfg: &TrainConfig) -> Result<ClassifierModel> {
    let vectors: Vec<_> = samples.iter().map(|(rm, y)| (rm.pattern.values.clone(), *y)).collect();
    train_vectors(&vectors, cfg)
}

pub fn train_vectors(samples: &[(Vec<f64>, Label)], cfg: &TrainConfig) -> Result<ClassifierModel> {
    let m = samples
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::invalid("no training samples"))?;
    if samples.iter().any(|(x, _)| x.len() != m) {
        return Err(Error::invalid("training motifs differ in length"));
    }
    if samples.iter().any(|(x, _)| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("training motifs contain non-finite readings"));
    }
    let positives = samples.iter().filter(|(_, y)| *y == Label::Positive).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::invalid("training needs at least one sample of each class"));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::invalid(format!(
            "learning rate {} must be positive",
            cfg.learning_rate
        )));
    }
    if !(cfg.decision_threshold > 0.0 && cfg.decision_threshold < 1.0) {
        return Err(Error::invalid(format!(
            "decision threshold {} must lie in (0, 1)",
            cfg.decision_threshold
        )));
    }

    let scaled: Vec<_> = samples.iter().map(|(x, y)| (cfg.scaling.apply(x), *y)).collect();
    let mut model = ClassifierModel {
        scaling: cfg.scaling,
        decision_threshold: cfg.decision_threshold,
        ..ClassifierModel::zeros(m)
    };
    for _ in 0..cfg.epochs {
        let (_, gw, gb) = loss_and_gradient(&model, &scaled);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        model.bias -= cfg.learning_rate * gb;
    }
    model.epochs_trained = cfg.epochs;
    Ok(model)
}

/// Fraction of samples whose predicted label matches.
pub fn accuracy(model: &ClassifierModel, samples: &[(Vec<f64>, Label)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("accuracy of an empty sample set"));
    }
    let mut hits = 0;
    for (x, y) in samples {
        if model.predict_values(x)?.1 == *y {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
