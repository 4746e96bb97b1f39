//! Span identification models.
//!
//! A single recurrent binary tagger covers both architectures: fed
//! embeddings concatenated with handcrafted features it is the LSTM model;
//! fed features plus one upstream probability per token (see
//! [`compose_upstream`]) it is the composed predictions-and-features model.
//! Probabilities are thresholded into token labels and turned back into
//! merged character spans by [`decode_spans`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledSpan;
use crate::error::ModelError;
use crate::eval::{token_scores, TokenScores};
use crate::features::{FeatureSet, TokenFeatures};
use crate::nn::{self, Encoder, LstmShape};
use crate::segment::{merge_spans, tokens_to_spans, AlignmentError, Sentence, TokenLabelSeq};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PTAG";
const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub bidirectional: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub class_weight_positive: f64,
    /// Fraction of instances (taken from the end) withheld from training
    /// and scored in the [`TrainReport`].
    pub holdout_fraction: f64,
    /// Optional L2 clip applied to each per-sentence gradient.
    pub grad_clip: Option<f64>,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            input_dim: 0,
            hidden_dim: 128,
            bidirectional: true,
            learning_rate: 1e-3,
            epochs: 20,
            seed: 0,
            threshold: 0.5,
            class_weight_positive: 1.0,
            holdout_fraction: 0.0,
            grad_clip: None,
        }
    }
}

impl TaggerConfig {
    pub fn new(input_dim: usize) -> Self {
        TaggerConfig {
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
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold must lie in [0, 1]");
        }
        if !positive(self.class_weight_positive) {
            return bad("class_weight_positive must be positive");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
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
}

/// One sentence: input rows (one per token) and gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerInstance {
    pub inputs: Vec<Vec<f64>>,
    pub labels: TokenLabelSeq,
}

/// Concatenate optional embedding vectors with the enabled feature groups.
pub fn build_inputs(vectors: Option<&[Vec<f32>]>, features: &[TokenFeatures], set: FeatureSet) -> Vec<Vec<f64>> {
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut row = Vec::new();
            if let Some(v) = vectors {
                row.extend(v[i].iter().map(|&x| x as f64));
            }
            f.extend_into(set, &mut row);
            row
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token training loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub holdout: Option<TokenScores>,
    pub trained_instances: usize,
}

/// Recurrent binary token tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    config: TaggerConfig,
    params: Vec<f64>,
}

impl TaggerModel {
    /// Fresh model with parameters drawn uniformly from ±1/√hidden_dim.
    pub fn new(config: TaggerConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = vec![0.0; Self::param_count_for(&config)];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        nn::init_uniform(&mut params, 1.0 / (config.hidden_dim as f64).sqrt(), &mut rng);
        Ok(TaggerModel { config, params })
    }

    fn param_count_for(config: &TaggerConfig) -> usize {
        let enc = config.encoder();
        enc.param_count() + enc.output_dim() + 1
    }

    pub fn config(&self) -> &TaggerConfig {
        &self.config
    }

    /// Flat parameter buffer: encoder directions, output weights, bias.
    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<(), ModelError> {
        match inputs.iter().find(|r| r.len() != self.config.input_dim) {
            Some(row) => Err(ModelError::DimensionMismatch {
                expected: self.config.input_dim,
                actual: row.len(),
            }),
            None => Ok(()),
        }
    }

    fn logits(&self, inputs: &[Vec<f64>]) -> (nn::EncoderTrace, Vec<f64>) {
        let enc = self.config.encoder();
        let trace = enc.forward(&self.params, inputs);
        let out_w = &self.params[enc.param_count()..enc.param_count() + enc.output_dim()];
        let out_b = self.params[enc.param_count() + enc.output_dim()];
        let mut h = Vec::with_capacity(enc.output_dim());
        let logits = (0..inputs.len())
            .map(|t| {
                enc.output_at(&trace, t, &mut h);
                nn::dot(out_w, &h) + out_b
            })
            .collect();
        (trace, logits)
    }

    fn token_loss(&self, logit: f64, label: u8) -> f64 {
        if label == 1 {
            -self.config.class_weight_positive * nn::log_sigmoid(logit)
        } else {
            -nn::log_sigmoid(-logit)
        }
    }

    /// Summed weighted binary cross-entropy over the sentence's tokens.
    pub fn loss(&self, instance: &TaggerInstance) -> Result<f64, ModelError> {
        self.check_instance(instance)?;
        let (_, logits) = self.logits(&instance.inputs);
        Ok(logits
            .iter()
            .zip(&instance.labels.0)
            .map(|(&z, &y)| self.token_loss(z, y))
            .sum())
    }

    /// Loss and its gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self, instance: &TaggerInstance) -> Result<(f64, Vec<f64>), ModelError> {
        self.check_instance(instance)?;
        let enc = self.config.encoder();
        let inputs = &instance.inputs;
        let (trace, logits) = self.logits(inputs);
        let mut grad = vec![0.0; self.params.len()];
        let w_off = enc.param_count();
        let d = enc.output_dim();
        let out_w = &self.params[w_off..w_off + d];
        let mut loss = 0.0;
        let mut h = Vec::with_capacity(d);
        let mut d_out = Vec::with_capacity(inputs.len());
        for (t, (&z, &y)) in logits.iter().zip(&instance.labels.0).enumerate() {
            loss += self.token_loss(z, y);
            let p = nn::sigmoid(z);
            let dz = if y == 1 {
                self.config.class_weight_positive * (p - 1.0)
            } else {
                p
            };
            enc.output_at(&trace, t, &mut h);
            for (g, &hv) in grad[w_off..w_off + d].iter_mut().zip(&h) {
                *g += dz * hv;
            }
            grad[w_off + d] += dz;
            d_out.push(out_w.iter().map(|&w| w * dz).collect::<Vec<_>>());
        }
        enc.backward(&self.params, inputs, &trace, &d_out, &mut grad);
        Ok((loss, grad))
    }

    fn check_instance(&self, instance: &TaggerInstance) -> Result<(), ModelError> {
        self.check_inputs(&instance.inputs)?;
        if instance.inputs.len() != instance.labels.len() {
            return Err(ModelError::LabelMismatch {
                tokens: instance.inputs.len(),
                labels: instance.labels.len(),
            });
        }
        Ok(())
    }

    /// Per-token propaganda probabilities.
    pub fn predict_probs(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        self.check_inputs(inputs)?;
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let (_, logits) = self.logits(inputs);
        Ok(logits.into_iter().map(nn::sigmoid).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::with_capacity(64 + 4 * self.params.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(c.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(c.hidden_dim as u32).to_le_bytes());
        out.push(c.bidirectional as u8);
        out.extend_from_slice(&c.learning_rate.to_le_bytes());
        out.extend_from_slice(&(c.epochs as u32).to_le_bytes());
        out.extend_from_slice(&c.seed.to_le_bytes());
        out.extend_from_slice(&c.threshold.to_le_bytes());
        out.extend_from_slice(&c.class_weight_positive.to_le_bytes());
        out.extend_from_slice(&c.holdout_fraction.to_le_bytes());
        out.extend_from_slice(&c.grad_clip.unwrap_or(0.0).to_le_bytes());
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
        let config = TaggerConfig {
            input_dim: r.u32()? as usize,
            hidden_dim: r.u32()? as usize,
            bidirectional: r.u8()? != 0,
            learning_rate: r.f64()?,
            epochs: r.u32()? as usize,
            seed: r.u64()?,
            threshold: r.f64()?,
            class_weight_positive: r.f64()?,
            holdout_fraction: r.f64()?,
            grad_clip: Some(r.f64()?).filter(|&c| c > 0.0),
        };
        config.validate()?;
        let params = r.params(Self::param_count_for(&config))?;
        Ok(TaggerModel { config, params })
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

pub(crate) fn write_params(out: &mut Vec<u8>, params: &[f64]) {
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for &p in params {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, offset: 0 }
    }

    pub fn error(&self, message: impl Into<String>) -> ModelError {
        ModelError::Format {
            offset: self.offset,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.offset + n > self.bytes.len() {
            return Err(self.error("unexpected end of file"));
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<(), ModelError> {
        if self.take(4)? != magic {
            self.offset = 0;
            return Err(self.error(format!("bad magic, expected {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Parameter block: count u64, then count f32 values; must end the file.
    pub fn params(&mut self, expected: usize) -> Result<Vec<f64>, ModelError> {
        let count = self.u64()? as usize;
        if count != expected {
            return Err(self.error(format!(
                "parameter count {count} does not match configuration ({expected})"
            )));
        }
        let raw = self.take(4 * count)?;
        let params = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if self.offset != self.bytes.len() {
            return Err(self.error("trailing bytes after parameters"));
        }
        Ok(params)
    }
}

/// Train with per-sentence SGD in the given instance order.
pub fn train_tagger(
    instances: &[TaggerInstance],
    config: &TaggerConfig,
) -> Result<(TaggerModel, TrainReport), ModelError> {
    let mut model = TaggerModel::new(config.clone())?;
    for inst in instances {
        model.check_instance(inst)?;
    }
    let holdout_len = (instances.len() as f64 * config.holdout_fraction).floor() as usize;
    let (train, holdout) = instances.split_at(instances.len() - holdout_len);
    let train: Vec<&TaggerInstance> = train.iter().filter(|i| !i.inputs.is_empty()).collect();
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let token_count: usize = train.iter().map(|i| i.labels.len()).sum();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        for inst in &train {
            let (_, mut grad) = model.loss_and_gradient(inst)?;
            if let Some(max) = config.grad_clip {
                nn::clip_norm(&mut grad, max);
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
        }
        let total: f64 = train.iter().map(|i| model.loss(i)).sum::<Result<f64, _>>()?;
        epoch_losses.push(total / token_count as f64);
    }
    nn::quantize_f32(&mut model.params);
    let holdout = if holdout.is_empty() {
        None
    } else {
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for inst in holdout {
            probs.push(model.predict_probs(&inst.inputs)?);
            labels.push(inst.labels.clone());
        }
        Some(token_scores(&probs, &labels, config.threshold))
    };
    Ok((
        model,
        TrainReport {
            epoch_losses,
            holdout,
            trained_instances: train.len(),
        },
    ))
}

pub fn predict_probs(model: &TaggerModel, inputs: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    model.predict_probs(inputs)
}

/// Threshold per-token probabilities (`p >= threshold` is positive).
pub fn threshold_labels(probs: &[f64], threshold: f64) -> TokenLabelSeq {
    TokenLabelSeq(probs.iter().map(|&p| (p >= threshold) as u8).collect())
}

/// Spans from per-sentence probabilities, merged per article.
pub fn decode_probs(
    article_id: u32,
    sentences: &[Sentence],
    probs: &[Vec<f64>],
    threshold: f64,
) -> Result<Vec<LabeledSpan>, AlignmentError> {
    let labels: Vec<TokenLabelSeq> = probs.iter().map(|p| threshold_labels(p, threshold)).collect();
    Ok(merge_spans(&tokens_to_spans(article_id, sentences, &labels)?))
}

/// Predict, threshold and merge the spans of one article.
pub fn decode_spans(
    model: &TaggerModel,
    article_id: u32,
    sentences: &[Sentence],
    inputs: &[Vec<Vec<f64>>],
    threshold: f64,
) -> Result<Vec<LabeledSpan>> {
    let probs = inputs
        .iter()
        .map(|rows| model.predict_probs(rows))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(decode_probs(article_id, sentences, &probs, threshold)?)
}

/// Attach one upstream probability to every token's features.
pub fn compose_upstream(
    features: &[Vec<TokenFeatures>],
    upstream_probs: &[Vec<f64>],
) -> Result<Vec<Vec<TokenFeatures>>, ModelError> {
    if features.len() != upstream_probs.len() {
        return Err(ModelError::LabelMismatch {
            tokens: features.len(),
            labels: upstream_probs.len(),
        });
    }
    features
        .iter()
        .zip(upstream_probs)
        .map(|(fs, ps)| {
            if fs.len() != ps.len() {
                return Err(ModelError::LabelMismatch {
                    tokens: fs.len(),
                    labels: ps.len(),
                });
            }
            Ok(fs
                .iter()
                .zip(ps)
                .map(|(f, &p)| TokenFeatures {
                    upstream_prob: Some(p),
                    ..*f
                })
                .collect())
        })
        .collect()
}

/// Per-token probabilities keyed by `(article_id, sentence_index, token_index)`,
/// stored as tab-separated lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpstreamProbs {
    probs: HashMap<(u32, usize, usize), f64>,
}

impl UpstreamProbs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, article_id: u32, sentence_index: usize, token_index: usize, prob: f64) {
        self.probs.insert((article_id, sentence_index, token_index), prob);
    }

    pub fn insert_sentence(&mut self, article_id: u32, sentence_index: usize, probs: &[f64]) {
        for (t, &p) in probs.iter().enumerate() {
            self.insert(article_id, sentence_index, t, p);
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, article_id: u32, sentence_index: usize, token_index: usize) -> Option<f64> {
        self.probs.get(&(article_id, sentence_index, token_index)).copied()
    }

    /// Probabilities for every token of `sentence`; errors on any gap.
    pub fn sentence(&self, article_id: u32, sentence: &Sentence) -> Result<Vec<f64>, AlignmentError> {
        sentence
            .tokens
            .iter()
            .map(|t| {
                self.get(article_id, sentence.index, t.token_index)
                    .ok_or(AlignmentError::TokenCount {
                        article_id,
                        sentence_index: sentence.index,
                        tokens: sentence.tokens.len(),
                        values: (0..sentence.tokens.len())
                            .filter(|&i| self.get(article_id, sentence.index, i).is_some())
                            .count(),
                    })
            })
            .collect()
    }

    /// Lines sorted by key; values use the shortest round-tripping decimal.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<_> = self.probs.keys().copied().collect();
        keys.sort_unstable();
        let mut out = String::new();
        for k in keys {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", k.0, k.1, k.2, self.probs[&k]);
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, AlignmentError> {
        let mut probs = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AlignmentError::TokenStream { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            }
            let idx = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad index {s:?}")));
            let article = cols[0]
                .trim()
                .parse::<u32>()
                .map_err(|_| err(format!("bad article id {:?}", cols[0])))?;
            let prob: f64 = cols[3]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad probability {:?}", cols[3])))?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(err(format!("probability {prob} outside [0, 1]")));
            }
            probs.insert((article, idx(cols[1])?, idx(cols[2])?), prob);
        }
        Ok(UpstreamProbs { probs })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_tsv(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{NerTag, PosTag};
    use crate::segment::segment_text;

    fn tiny_config(input_dim: usize) -> TaggerConfig {
        TaggerConfig {
            hidden_dim: 3,
            epochs: 3,
            learning_rate: 0.05,
            seed: 11,
            ..TaggerConfig::new(input_dim)
        }
    }

    fn instance(rows: &[&[f64]], labels: &[u8]) -> TaggerInstance {
        TaggerInstance {
            inputs: rows.iter().map(|r| r.to_vec()).collect(),
            labels: TokenLabelSeq(labels.to_vec()),
        }
    }

    #[test]
    fn config_validation() {
        assert!(TaggerConfig::new(0).validate().is_err());
        let mut c = TaggerConfig::new(2);
        assert!(c.validate().is_ok());
        c.threshold = 1.5;
        assert!(c.validate().is_err());
        c.threshold = 0.5;
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for bidirectional in [true, false] {
            let config = TaggerConfig {
                bidirectional,
                class_weight_positive: 2.5,
                ..tiny_config(2)
            };
            let model = TaggerModel::new(config).unwrap();
            let inst = instance(&[&[0.3, -0.7], &[1.1, 0.4]], &[1, 0]);
            let (_, grad) = model.loss_and_gradient(&inst).unwrap();
            let eps = 1e-5;
            for (i, &analytic) in grad.iter().enumerate() {
                let mut m = model.clone();
                m.parameters_mut()[i] += eps;
                let up = m.loss(&inst).unwrap();
                m.parameters_mut()[i] -= 2.0 * eps;
                let down = m.loss(&inst).unwrap();
                let numeric = (up - down) / (2.0 * eps);
                let scale = numeric.abs().max(analytic.abs());
                if scale > 1e-7 {
                    assert!(
                        (numeric - analytic).abs() / scale < 1e-4,
                        "param {i}: {analytic} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = vec![
            instance(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, 0]),
            instance(&[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]], &[0, 1, 1]),
        ];
        let (a, ra) = train_tagger(&data, &tiny_config(2)).unwrap();
        let (b, rb) = train_tagger(&data, &tiny_config(2)).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(ra, rb);
        assert_eq!(ra.epoch_losses.len(), 3);
    }

    #[test]
    fn all_negative_training_predicts_negative() {
        let data: Vec<_> = (0..20)
            .map(|i| instance(&[&[i as f64 / 20.0, 1.0], &[0.5, -1.0]], &[0, 0]))
            .collect();
        let config = TaggerConfig {
            epochs: 20,
            learning_rate: 0.05,
            ..tiny_config(2)
        };
        let (model, _) = train_tagger(&data, &config).unwrap();
        let max = data
            .iter()
            .flat_map(|i| model.predict_probs(&i.inputs).unwrap())
            .fold(0.0f64, f64::max);
        assert!(max < 0.5, "max prob {max}");
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_tagger(&[], &tiny_config(2)),
            Err(ModelError::EmptyTrainingSet)
        ));
        let bad = vec![instance(&[&[1.0]], &[1])];
        assert!(matches!(
            train_tagger(&bad, &tiny_config(2)),
            Err(ModelError::DimensionMismatch { expected: 2, actual: 1 })
        ));
        let misaligned = vec![instance(&[&[1.0, 0.0]], &[1, 0])];
        assert!(matches!(
            train_tagger(&misaligned, &tiny_config(2)),
            Err(ModelError::LabelMismatch { .. })
        ));
    }

    #[test]
    fn prediction_shape_and_range() {
        let model = TaggerModel::new(tiny_config(2)).unwrap();
        assert!(model.predict_probs(&[]).unwrap().is_empty());
        let rows = vec![vec![5.0, -3.0]; 4];
        let probs = model.predict_probs(&rows).unwrap();
        assert_eq!(probs.len(), 4);
        assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(model.predict_probs(&[vec![1.0]]).is_err());
    }

    #[test]
    fn model_file_roundtrip() {
        let config = TaggerConfig {
            grad_clip: Some(5.0),
            ..tiny_config(2)
        };
        let data = vec![instance(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, 0])];
        let (model, _) = train_tagger(&data, &config).unwrap();
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], b"PTAG");
        let back = TaggerModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_bytes(), bytes);
        assert!(TaggerModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(TaggerModel::from_bytes(b"PTC1").is_err());
    }

    #[test]
    fn decode_examples() {
        let sentences = segment_text("Stop them now");
        let probs = vec![vec![0.9, 0.6, 0.2]];
        assert_eq!(
            decode_probs(1, &sentences, &probs, 0.5).unwrap(),
            vec![LabeledSpan::new(1, 0, 9)]
        );
        assert!(decode_probs(1, &sentences, &probs, 1.0).unwrap().is_empty());
        assert_eq!(
            decode_probs(1, &sentences, &probs, 0.0).unwrap(),
            vec![LabeledSpan::new(1, 0, 13)]
        );
    }

    #[test]
    fn compose_adds_one_column() {
        let f = TokenFeatures {
            pos: PosTag::NOUN,
            ner: NerTag::NONE,
            kw_count: 0.0,
            upstream_prob: None,
        };
        let feats = vec![vec![f, f]];
        let composed = compose_upstream(&feats, &[vec![0.0, 0.0]]).unwrap();
        let plain = build_inputs(None, &feats[0], FeatureSet::ALL);
        let with = build_inputs(None, &composed[0], FeatureSet::ALL);
        assert_eq!(with[0].len(), plain[0].len() + 1);
        assert_eq!(*with[1].last().unwrap(), 0.0);
        assert!(compose_upstream(&feats, &[vec![0.0]]).is_err());
    }

    #[test]
    fn upstream_file_roundtrip() {
        let mut probs = UpstreamProbs::new();
        probs.insert_sentence(3, 0, &[0.1, 1.0 / 3.0, 0.999_999_999_7]);
        probs.insert(1, 2, 0, 0.0);
        let back = UpstreamProbs::from_tsv(&probs.to_tsv()).unwrap();
        assert_eq!(back, probs);
        assert_eq!(back.get(3, 0, 1), Some(1.0 / 3.0));
        let sentence = segment_text("a b c").remove(0);
        assert_eq!(back.sentence(3, &sentence).unwrap().len(), 3);
        assert!(back.sentence(4, &sentence).is_err());
        assert!(UpstreamProbs::from_tsv("1\t0\t0\t1.5\n").is_err());
    }
}
