//! Technique classification over the tokens of a single span.
//!
//! The encoder reads only the span's own tokens. The final forward state
//! and the final backward state (at the first token) are concatenated and
//! projected to 14 logits.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Technique;
use crate::error::ModelError;
use crate::nn::{self, Encoder, LstmShape};
use crate::tagger::{write_params, ByteReader};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PTC1";
pub const NUM_CLASSES: usize = 14;
const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub bidirectional: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Per-class loss weights in [`Technique::ALL`] order; empty means 1.
    pub class_weights: Vec<f64>,
    pub grad_clip: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            input_dim: 0,
            hidden_dim: 128,
            bidirectional: true,
            learning_rate: 1e-3,
            epochs: 20,
            seed: 0,
            class_weights: Vec::new(),
            grad_clip: None,
        }
    }
}

impl ClassifierConfig {
    pub fn new(input_dim: usize) -> Self {
        ClassifierConfig {
            input_dim,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        // written so that NaN fails
        let positive = |x: f64| x > 0.0;
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return bad("input_dim and hidden_dim must be positive");
        }
        if !positive(self.learning_rate) {
            return bad("learning_rate must be positive");
        }
        if !self.class_weights.is_empty()
            && (self.class_weights.len() != NUM_CLASSES || self.class_weights.iter().any(|&w| !positive(w)))
        {
            return bad("class_weights needs 14 positive values");
        }
        if self.grad_clip.is_some_and(|c| !positive(c)) {
            return bad("grad_clip must be positive");
        }
        Ok(())
    }

    fn encoder(&self) -> Encoder {
        Encoder {
            shape: LstmShape {
                input: self.input_dim,
                hidden: self.hidden_dim,
            },
            bidirectional: self.bidirectional,
        }
    }

    fn weight(&self, class: usize) -> f64 {
        self.class_weights.get(class).copied().unwrap_or(1.0)
    }
}

/// Input rows for the tokens of one span.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanInstance {
    pub inputs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub epoch_losses: Vec<f64>,
    pub trained_instances: usize,
    /// Indexes of instances rejected for having no tokens.
    pub rejected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    config: ClassifierConfig,
    params: Vec<f64>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl ClassifierModel {
    pub fn new(config: ClassifierConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = vec![0.0; Self::param_count_for(&config)];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        nn::init_uniform(&mut params, 1.0 / (config.hidden_dim as f64).sqrt(), &mut rng);
        Ok(ClassifierModel { config, params })
    }

    fn param_count_for(config: &ClassifierConfig) -> usize {
        let enc = config.encoder();
        enc.param_count() + NUM_CLASSES * enc.output_dim() + NUM_CLASSES
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check(&self, instance: &SpanInstance) -> Result<(), ModelError> {
        if let Some(row) = instance.inputs.iter().find(|r| r.len() != self.config.input_dim) {
            return Err(ModelError::DimensionMismatch {
                expected: self.config.input_dim,
                actual: row.len(),
            });
        }
        Ok(())
    }

    /// Span representation and its trace. An empty span encodes to zeros.
    fn encode(&self, inputs: &[Vec<f64>]) -> (Option<nn::EncoderTrace>, Vec<f64>) {
        let enc = self.config.encoder();
        if inputs.is_empty() {
            return (None, vec![0.0; enc.output_dim()]);
        }
        let trace = enc.forward(&self.params, inputs);
        let mut rep = trace.forward.final_hidden().to_vec();
        if let Some(b) = &trace.backward {
            rep.extend_from_slice(b.final_hidden());
        }
        (Some(trace), rep)
    }

    pub fn logits(&self, instance: &SpanInstance) -> Result<Vec<f64>, ModelError> {
        self.check(instance)?;
        let (_, rep) = self.encode(&instance.inputs);
        Ok(self.project(&rep))
    }

    fn project(&self, rep: &[f64]) -> Vec<f64> {
        let enc = self.config.encoder();
        let d = enc.output_dim();
        let w = &self.params[enc.param_count()..enc.param_count() + NUM_CLASSES * d];
        let b = &self.params[enc.param_count() + NUM_CLASSES * d..];
        (0..NUM_CLASSES)
            .map(|k| nn::dot(&w[k * d..(k + 1) * d], rep) + b[k])
            .collect()
    }

    fn class_loss(&self, logits: &[f64], class: usize) -> f64 {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        self.config.weight(class) * (log_sum - logits[class])
    }

    /// Weighted cross-entropy of the span against `label`.
    pub fn loss(&self, instance: &SpanInstance, label: Technique) -> Result<f64, ModelError> {
        let logits = self.logits(instance)?;
        Ok(self.class_loss(&logits, label.index()))
    }

    pub fn loss_and_gradient(&self, instance: &SpanInstance, label: Technique) -> Result<(f64, Vec<f64>), ModelError> {
        self.check(instance)?;
        let enc = self.config.encoder();
        let d = enc.output_dim();
        let h = self.config.hidden_dim;
        let (trace, rep) = self.encode(&instance.inputs);
        let logits = self.project(&rep);
        let class = label.index();
        let loss = self.class_loss(&logits, class);
        let weight = self.config.weight(class);
        let mut dlogits = softmax(&logits);
        dlogits[class] -= 1.0;
        dlogits.iter_mut().for_each(|g| *g *= weight);

        let mut grad = vec![0.0; self.params.len()];
        let w_off = enc.param_count();
        let b_off = w_off + NUM_CLASSES * d;
        let w = &self.params[w_off..b_off];
        let mut drep = vec![0.0; d];
        for (k, &g) in dlogits.iter().enumerate() {
            grad[b_off + k] += g;
            for j in 0..d {
                grad[w_off + k * d + j] += g * rep[j];
                drep[j] += g * w[k * d + j];
            }
        }
        if let Some(trace) = trace {
            let n = instance.inputs.len();
            let mut d_out = vec![vec![0.0; d]; n];
            d_out[trace.forward.final_position()][..h].copy_from_slice(&drep[..h]);
            if let Some(b) = &trace.backward {
                d_out[b.final_position()][h..].copy_from_slice(&drep[h..]);
            }
            enc.backward(&self.params, &instance.inputs, &trace, &d_out, &mut grad);
        }
        Ok((loss, grad))
    }

    /// Most probable technique and the full distribution over
    /// [`Technique::ALL`].
    pub fn predict(&self, instance: &SpanInstance) -> Result<(Technique, Vec<f64>), ModelError> {
        let probs = softmax(&self.logits(instance)?);
        let best = Technique::from_index(argmax(&probs)).expect("14 classes");
        Ok((best, probs))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(c.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(c.hidden_dim as u32).to_le_bytes());
        out.push(c.bidirectional as u8);
        out.extend_from_slice(&c.learning_rate.to_le_bytes());
        out.extend_from_slice(&(c.epochs as u32).to_le_bytes());
        out.extend_from_slice(&c.seed.to_le_bytes());
        out.extend_from_slice(&c.grad_clip.unwrap_or(0.0).to_le_bytes());
        out.push(c.class_weights.len() as u8);
        for w in &c.class_weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        write_params(&mut out, &self.params);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(MODEL_MAGIC)?;
        let version = r.u16()?;
        if version != MODEL_VERSION {
            return Err(r.error(format!("unsupported model version {version}")));
        }
        let mut config = ClassifierConfig {
            input_dim: r.u32()? as usize,
            hidden_dim: r.u32()? as usize,
            bidirectional: r.u8()? != 0,
            learning_rate: r.f64()?,
            epochs: r.u32()? as usize,
            seed: r.u64()?,
            grad_clip: Some(r.f64()?).filter(|&c| c > 0.0),
            class_weights: Vec::new(),
        };
        let n_weights = r.u8()?;
        for _ in 0..n_weights {
            config.class_weights.push(r.f64()?);
        }
        config.validate()?;
        let params = r.params(Self::param_count_for(&config))?;
        Ok(ClassifierModel { config, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

/// Per-span SGD in the given order. Zero-token spans are skipped and
/// listed in the report.
pub fn train_classifier(
    instances: &[(SpanInstance, Technique)],
    config: &ClassifierConfig,
) -> Result<(ClassifierModel, ClassifierReport), ModelError> {
    let mut model = ClassifierModel::new(config.clone())?;
    let mut rejected = Vec::new();
    let mut train = Vec::with_capacity(instances.len());
    for (i, (inst, label)) in instances.iter().enumerate() {
        model.check(inst)?;
        if inst.inputs.is_empty() {
            log::warn!("rejecting span instance {i}: no tokens");
            rejected.push(i);
        } else {
            train.push((inst, *label));
        }
    }
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        for (inst, label) in &train {
            let (_, mut grad) = model.loss_and_gradient(inst, *label)?;
            if let Some(max) = config.grad_clip {
                nn::clip_norm(&mut grad, max);
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
        }
        let total = train
            .iter()
            .map(|(inst, label)| model.loss(inst, *label))
            .sum::<Result<f64, _>>()?;
        epoch_losses.push(total / train.len() as f64);
    }
    nn::quantize_f32(&mut model.params);
    Ok((
        model,
        ClassifierReport {
            epoch_losses,
            trained_instances: train.len(),
            rejected,
        },
    ))
}

pub fn predict_technique(
    model: &ClassifierModel,
    instance: &SpanInstance,
) -> Result<(Technique, Vec<f64>), ModelError> {
    model.predict(instance)
}
