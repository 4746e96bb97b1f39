//! Scorers for both subtasks, the feature ablation harness and the
//! decoding threshold sweep.
//!
//! Span identification has two scorers. [`score_si_exact`] counts a
//! prediction as correct only on identical offsets. [`score_si_overlap`]
//! gives proportional credit: with `S` the (merged) predictions and `T` the
//! gold spans,
//!
//! ```text
//! P = 1/|S| * sum_{s in S} sum_{t in T} |s ∩ t| / |s|
//! R = 1/|T| * sum_{t in T} sum_{s in S} |s ∩ t| / |t|
//! ```
//!
//! where intersections are character counts within the same article.
//! Gold spans are never merged.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::TcSample;
use crate::corpus::{LabeledSpan, Technique};
use crate::embeddings::{EmbeddingTable, OovPolicy};
use crate::features::{build_kw_table, FeatureSet};
use crate::pipeline::{self, AnnotatedArticle, InputSpec};
use crate::segment::{merge_spans, Sentence, TokenLabelSeq};
use crate::tagger::{decode_probs, train_tagger, TaggerConfig, UpstreamProbs};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction coverage mismatch: {} gold spans unpredicted {missing:?}, {} predictions without gold {extra:?}", missing.len(), extra.len())]
    Coverage {
        missing: Vec<(u32, usize, usize)>,
        extra: Vec<(u32, usize, usize)>,
    },
    #[error("span {0:?} has no technique")]
    MissingTechnique((u32, usize, usize)),
    #[error("{0} silver samples in an evaluation set")]
    SilverInEvaluation(usize),
}

/// Precision, recall and F1 with span counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub pred_count: usize,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl SiMetrics {
    fn new(precision: f64, recall: f64, gold_count: usize, pred_count: usize) -> Self {
        SiMetrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            gold_count,
            pred_count,
        }
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

fn by_article(spans: &[LabeledSpan]) -> BTreeMap<u32, Vec<LabeledSpan>> {
    let mut map: BTreeMap<u32, Vec<LabeledSpan>> = BTreeMap::new();
    for s in spans {
        map.entry(s.article_id).or_default().push(*s);
    }
    map
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Average over all spans of the collection.
    #[default]
    Global,
    /// Score each article, then average P and R over articles.
    PerArticle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiScorer {
    #[default]
    Overlap,
    Exact,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub scorer: SiScorer,
    pub normalization: Normalization,
}

/// Greedy one-to-one matching on identical offsets, in sorted order.
pub fn score_si_exact(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> SiMetrics {
    let tp = exact_matches(pred, gold);
    SiMetrics::new(
        ratio(tp as f64, pred.len()),
        ratio(tp as f64, gold.len()),
        gold.len(),
        pred.len(),
    )
}

fn exact_matches(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> usize {
    let mut pred_keys: Vec<_> = pred.iter().map(LabeledSpan::key).collect();
    let mut gold_keys: Vec<_> = gold.iter().map(LabeledSpan::key).collect();
    pred_keys.sort_unstable();
    gold_keys.sort_unstable();
    let (mut i, mut j, mut tp) = (0, 0, 0);
    while i < pred_keys.len() && j < gold_keys.len() {
        match pred_keys[i].cmp(&gold_keys[j]) {
            std::cmp::Ordering::Equal => {
                tp += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    tp
}

/// Sums of per-span credit: `(sum_s |s∩T|/|s|, sum_t |S∩t|/|t|)`.
fn overlap_credit(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> (f64, f64) {
    let gold = by_article(gold);
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    for (article, preds) in by_article(pred) {
        let Some(golds) = gold.get(&article) else { continue };
        for s in &preds {
            for t in golds {
                let inter = s.intersection(t) as f64;
                if inter > 0.0 {
                    p_sum += inter / s.len() as f64;
                    r_sum += inter / t.len() as f64;
                }
            }
        }
    }
    (p_sum, r_sum)
}

/// Proportional-overlap scoring. Predictions are merged first.
pub fn score_si_overlap(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> SiMetrics {
    let pred = merge_spans(pred);
    let (p_sum, r_sum) = overlap_credit(&pred, gold);
    SiMetrics::new(
        ratio(p_sum, pred.len()),
        ratio(r_sum, gold.len()),
        gold.len(),
        pred.len(),
    )
}

/// Score with the chosen scorer and normalization.
pub fn score_si(pred: &[LabeledSpan], gold: &[LabeledSpan], options: ScoreOptions) -> SiMetrics {
    let score = |p: &[LabeledSpan], g: &[LabeledSpan]| match options.scorer {
        SiScorer::Overlap => score_si_overlap(p, g),
        SiScorer::Exact => score_si_exact(p, g),
    };
    match options.normalization {
        Normalization::Global => score(pred, gold),
        Normalization::PerArticle => {
            let preds = by_article(pred);
            let golds = by_article(gold);
            let mut articles: Vec<u32> = preds.keys().chain(golds.keys()).copied().collect();
            articles.sort_unstable();
            articles.dedup();
            if articles.is_empty() {
                return SiMetrics::new(0.0, 0.0, 0, 0);
            }
            let empty = Vec::new();
            let (mut p, mut r) = (0.0, 0.0);
            for a in &articles {
                let m = score(preds.get(a).unwrap_or(&empty), golds.get(a).unwrap_or(&empty));
                p += m.precision;
                r += m.recall;
            }
            let n = articles.len() as f64;
            let pred_count = match options.scorer {
                SiScorer::Overlap => merge_spans(pred).len(),
                SiScorer::Exact => pred.len(),
            };
            SiMetrics::new(p / n, r / n, gold.len(), pred_count)
        }
    }
}

/// Token-level binary classification counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

pub fn token_scores(probs: &[Vec<f64>], labels: &[TokenLabelSeq], threshold: f64) -> TokenScores {
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (ps, ls) in probs.iter().zip(labels) {
        for (&p, &l) in ps.iter().zip(&ls.0) {
            match (p >= threshold, l == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
    }
    let precision = ratio(tp as f64, tp + fp);
    let recall = ratio(tp as f64, tp + fneg);
    TokenScores {
        precision,
        recall,
        f1: f1_score(precision, recall),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold spans of this class.
    pub support: usize,
    pub predicted: usize,
}

impl ClassScore {
    /// Neither gold nor predicted spans of this class.
    pub fn no_support(&self) -> bool {
        self.support == 0 && self.predicted == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcMetrics {
    pub micro_f1: f64,
    pub per_class: BTreeMap<Technique, ClassScore>,
    /// `confusion[gold][predicted]`, indexed in [`Technique::ALL`] order.
    pub confusion: [[usize; 14]; 14],
}

impl TcMetrics {
    pub fn per_class_f1(&self) -> BTreeMap<Technique, f64> {
        self.per_class.iter().map(|(&t, s)| (t, s.f1)).collect()
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        let correct: usize = (0..14).map(|i| self.confusion[i][i]).sum();
        ratio(correct as f64, total)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("technique\tprecision\trecall\tf1\tsupport\tpredicted\n");
        for (t, s) in &self.per_class {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}{}",
                t,
                s.precision,
                s.recall,
                s.f1,
                s.support,
                s.predicted,
                if s.no_support() { "\tno-support" } else { "" }
            );
        }
        let _ = writeln!(out, "micro\t\t\t{:.4}", self.micro_f1);
        out
    }
}

/// Micro and per-class F1 when every gold span is predicted exactly once.
///
/// Spans are matched by `(article_id, start, end)`; duplicate keys (gold
/// spans carrying several techniques) pair identical labels first.
type SpanKey = (u32, usize, usize);

pub fn score_tc(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Result<TcMetrics, EvalError> {
    let group = |spans: &[LabeledSpan]| -> Result<BTreeMap<SpanKey, Vec<Technique>>, EvalError> {
        let mut map: BTreeMap<_, Vec<Technique>> = BTreeMap::new();
        for s in spans {
            let t = s.technique.ok_or(EvalError::MissingTechnique(s.key()))?;
            map.entry(s.key()).or_default().push(t);
        }
        Ok(map)
    };
    let preds = group(pred)?;
    let golds = group(gold)?;
    let mut missing = Vec::new();
    let mut extra = Vec::new();
    for (k, g) in &golds {
        let n = preds.get(k).map_or(0, Vec::len);
        missing.extend(std::iter::repeat_n(*k, g.len().saturating_sub(n)));
    }
    for (k, p) in &preds {
        let n = golds.get(k).map_or(0, Vec::len);
        extra.extend(std::iter::repeat_n(*k, p.len().saturating_sub(n)));
    }
    if !missing.is_empty() || !extra.is_empty() {
        return Err(EvalError::Coverage { missing, extra });
    }

    let mut confusion = [[0usize; 14]; 14];
    for (k, gs) in &golds {
        let mut ps = preds[k].clone();
        let mut unmatched = Vec::new();
        for &g in gs {
            match ps.iter().position(|&p| p == g) {
                Some(i) => {
                    ps.remove(i);
                    confusion[g.index()][g.index()] += 1;
                }
                None => unmatched.push(g),
            }
        }
        for (g, p) in unmatched.into_iter().zip(ps) {
            confusion[g.index()][p.index()] += 1;
        }
    }
    let total = gold.len();
    let correct: usize = (0..14).map(|i| confusion[i][i]).sum();
    let per_class = Technique::ALL
        .iter()
        .map(|&t| {
            let c = t.index();
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = (0..14).map(|g| confusion[g][c]).sum();
            let tp = confusion[c][c] as f64;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            (
                t,
                ClassScore {
                    precision,
                    recall,
                    f1: f1_score(precision, recall),
                    support,
                    predicted,
                },
            )
        })
        .collect();
    Ok(TcMetrics {
        micro_f1: ratio(correct as f64, total),
        per_class,
        confusion,
    })
}

/// Gold spans for evaluation from a sample set; silver samples are refused.
pub fn tc_gold_from_samples(samples: &[TcSample]) -> Result<Vec<LabeledSpan>, EvalError> {
    let silver = samples.iter().filter(|s| s.is_silver()).count();
    if silver > 0 {
        return Err(EvalError::SilverInEvaluation(silver));
    }
    Ok(samples.iter().filter_map(TcSample::gold_span).collect())
}

/// Model variant of one ablation cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellModel {
    /// Recurrent tagger over (optionally) embeddings plus features.
    Lstm { use_embeddings: bool },
    /// Features plus one upstream probability per token, no embeddings.
    Composed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationCell {
    pub name: String,
    pub features: FeatureSet,
    pub model: CellModel,
}

impl AblationCell {
    pub fn input_spec(&self) -> InputSpec {
        match self.model {
            CellModel::Lstm { use_embeddings } => InputSpec {
                use_embeddings,
                features: self.features,
                upstream: false,
            },
            CellModel::Composed => InputSpec {
                use_embeddings: false,
                features: self.features,
                upstream: true,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub cells: Vec<AblationCell>,
}

impl AblationGrid {
    /// Embeddings only, all features, each feature removed in turn, and
    /// the composed predictions-and-features model.
    pub fn standard() -> Self {
        let lstm = |name: &str, features| AblationCell {
            name: name.to_string(),
            features,
            model: CellModel::Lstm { use_embeddings: true },
        };
        AblationGrid {
            cells: vec![
                lstm("LSTM (Embeddings only)", FeatureSet::NONE),
                lstm("LSTM (POS + NER + KW)", FeatureSet::ALL),
                lstm(
                    "LSTM - POS",
                    FeatureSet {
                        pos: false,
                        ..FeatureSet::ALL
                    },
                ),
                lstm(
                    "LSTM - NER",
                    FeatureSet {
                        ner: false,
                        ..FeatureSet::ALL
                    },
                ),
                lstm(
                    "LSTM - KW",
                    FeatureSet {
                        kw: false,
                        ..FeatureSet::ALL
                    },
                ),
                AblationCell {
                    name: "Upstream Predictions & Features".to_string(),
                    features: FeatureSet::ALL,
                    model: CellModel::Composed,
                },
            ],
        }
    }
}

/// Inputs shared by every ablation cell.
pub struct AblationData<'a> {
    pub train_docs: &'a [AnnotatedArticle],
    pub train_spans: &'a [LabeledSpan],
    pub dev_docs: &'a [AnnotatedArticle],
    pub dev_spans: &'a [LabeledSpan],
    pub embeddings: Option<&'a EmbeddingTable>,
    pub oov: OovPolicy,
    /// Upstream probabilities for composed cells. When absent, an
    /// embeddings-only tagger trained with the base configuration supplies
    /// them.
    pub upstream_train: Option<&'a UpstreamProbs>,
    pub upstream_dev: Option<&'a UpstreamProbs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub config_hash: String,
    pub metrics: Option<SiMetrics>,
    pub error: Option<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// Human-readable table with percentages.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:width$} | {:>5} {:>5} {:>5}\n", "Model", "P", "R", "F");
        let _ = writeln!(out, "{}", "-".repeat(width + 21));
        for r in &self.rows {
            match &r.metrics {
                Some(m) => {
                    let _ = writeln!(
                        out,
                        "{:width$} | {:>5.1} {:>5.1} {:>5.1}",
                        r.name,
                        100.0 * m.precision,
                        100.0 * m.recall,
                        100.0 * m.f1
                    );
                }
                None => {
                    let _ = writeln!(out, "{:width$} | failed: {}", r.name, r.error.as_deref().unwrap_or(""));
                }
            }
        }
        out
    }

    /// Tab-separated metrics, one row per cell.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tconfig_hash\tprecision\trecall\tf1\tgold_spans\tpred_spans\n");
        for r in &self.rows {
            match &r.metrics {
                Some(m) => {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                        r.name, r.config_hash, m.precision, m.recall, m.f1, m.gold_count, m.pred_count
                    );
                }
                None => {
                    let _ = writeln!(out, "{}\t{}\tNA\tNA\tNA\t\t", r.name, r.config_hash);
                }
            }
        }
        out
    }

    /// One JSON record per cell.
    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

/// Hex SHA-256 prefix of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn cell_tagger_config(base: &TaggerConfig, spec: InputSpec, emb_dim: usize) -> TaggerConfig {
    TaggerConfig {
        input_dim: spec.input_dim(emb_dim),
        ..base.clone()
    }
}

/// Train an embeddings-only tagger and return its probabilities on the
/// train and dev instances.
fn fallback_upstream(
    data: &AblationData<'_>,
    base: &TaggerConfig,
    kw: &crate::features::KwTable,
) -> crate::Result<(UpstreamProbs, UpstreamProbs)> {
    let embeddings = data
        .embeddings
        .ok_or_else(|| crate::Error::Config("composed cell needs upstream probabilities or embeddings".into()))?;
    let spec = InputSpec {
        use_embeddings: true,
        features: FeatureSet::NONE,
        upstream: false,
    };
    let train = pipeline::si_instances(
        data.train_docs,
        data.train_spans,
        kw,
        Some(embeddings),
        data.oov,
        spec,
        None,
    )?;
    let config = cell_tagger_config(base, spec, embeddings.dim());
    let (model, _) = train_tagger(&pipeline::tagger_instances(&train), &config)?;
    let dev = pipeline::si_instances(
        data.dev_docs,
        data.dev_spans,
        kw,
        Some(embeddings),
        data.oov,
        spec,
        None,
    )?;
    Ok((
        pipeline::predict_upstream(&model, &train)?,
        pipeline::predict_upstream(&model, &dev)?,
    ))
}

/// Train and score every cell. A failing cell is recorded and the rest
/// still run.
pub fn run_ablation(
    grid: &AblationGrid,
    data: &AblationData<'_>,
    base: &TaggerConfig,
    options: ScoreOptions,
) -> AblationReport {
    let kw = build_kw_table(
        data.train_docs.iter().map(|d| (d.article_id, d.sentences.as_slice())),
        data.train_spans,
    );
    let emb_dim = data.embeddings.map_or(0, EmbeddingTable::dim);
    let mut fallback: Option<(UpstreamProbs, UpstreamProbs)> = None;
    let mut rows = Vec::with_capacity(grid.cells.len());
    for cell in &grid.cells {
        let started = Instant::now();
        let spec = cell.input_spec();
        let config = cell_tagger_config(base, spec, emb_dim);
        let config_hash = config_hash(&(cell, &config));
        let result = (|| -> crate::Result<SiMetrics> {
            let (up_train, up_dev) = if spec.upstream {
                match (data.upstream_train, data.upstream_dev) {
                    (Some(t), Some(d)) => (Some(t), Some(d)),
                    _ => {
                        if fallback.is_none() {
                            fallback = Some(fallback_upstream(data, base, &kw)?);
                        }
                        let (t, d) = fallback.as_ref().unwrap();
                        (Some(t), Some(d))
                    }
                }
            } else {
                (None, None)
            };
            let embeddings = if spec.use_embeddings {
                Some(
                    data.embeddings
                        .ok_or_else(|| crate::Error::Config("cell needs an embedding table".into()))?,
                )
            } else {
                None
            };
            let train = pipeline::si_instances(
                data.train_docs,
                data.train_spans,
                &kw,
                embeddings,
                data.oov,
                spec,
                up_train,
            )?;
            let (model, _) = train_tagger(&pipeline::tagger_instances(&train), &config)?;
            let dev = pipeline::si_instances(data.dev_docs, data.dev_spans, &kw, embeddings, data.oov, spec, up_dev)?;
            let pred = pipeline::predict_spans(&model, data.dev_docs, &dev, base.threshold)?;
            Ok(score_si(&pred, data.dev_spans, options))
        })();
        let wall_time_secs = started.elapsed().as_secs_f64();
        let (metrics, error) = match result {
            Ok(m) => (Some(m), None),
            Err(e) => {
                log::warn!("ablation cell {:?} failed: {e}", cell.name);
                (None, Some(e.to_string()))
            }
        };
        rows.push(AblationRow {
            name: cell.name.clone(),
            config_hash,
            metrics,
            error,
            wall_time_secs,
        });
    }
    AblationReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub metrics: SiMetrics,
    /// Total characters covered by the merged predicted spans.
    pub predicted_chars: usize,
}

/// Probabilities for the sentences of one article.
pub struct ArticleProbs<'a> {
    pub article_id: u32,
    pub sentences: &'a [Sentence],
    pub probs: Vec<Vec<f64>>,
}

/// Decode at each threshold and score against `gold`.
pub fn sweep_thresholds(
    articles: &[ArticleProbs<'_>],
    gold: &[LabeledSpan],
    thresholds: &[f64],
    options: ScoreOptions,
) -> crate::Result<Vec<SweepRow>> {
    thresholds
        .iter()
        .map(|&threshold| {
            let mut pred = Vec::new();
            for a in articles {
                pred.extend(decode_probs(a.article_id, a.sentences, &a.probs, threshold)?);
            }
            Ok(SweepRow {
                threshold,
                metrics: score_si(&pred, gold, options),
                predicted_chars: pred.iter().map(LabeledSpan::len).sum(),
            })
        })
        .collect()
}

pub fn sweep_to_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("threshold\tprecision\trecall\tf1\tpred_spans\tpredicted_chars\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.3}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            r.threshold, r.metrics.precision, r.metrics.recall, r.metrics.f1, r.metrics.pred_count, r.predicted_chars
        );
    }
    out
}

/// Count spans per technique, in [`Technique::ALL`] order.
pub fn class_counts(spans: &[LabeledSpan]) -> [usize; 14] {
    let mut counts = [0; 14];
    for t in spans.iter().filter_map(|s| s.technique) {
        counts[t.index()] += 1;
    }
    counts
}

/// Populated lookups mapping the keys of `spans` to their technique.
pub fn technique_by_key(spans: &[LabeledSpan]) -> HashMap<(u32, usize, usize), Technique> {
    spans.iter().filter_map(|s| s.technique.map(|t| (s.key(), t))).collect()
}
