//! Turning a corpus into model instances and model output back into spans.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::augment::{SampleOrigin, TcSample};
use crate::classifier::SpanInstance;
use crate::corpus::{Article, LabeledSpan};
use crate::embeddings::{sentence_vectors, EmbeddingKey, EmbeddingTable, OovPolicy};
use crate::features::{
    annotate_ner, annotate_pos, featurize, AnnotationError, Annotator, FeatureSet, Gazetteer, KwTable, NerTag, PosTag,
    TokenFeatures,
};
use crate::segment::{project_labels_with_diagnostics, segment_article, segment_text, Sentence};
use crate::tagger::{build_inputs, decode_probs, TaggerInstance, TaggerModel, UpstreamProbs};
use crate::{Error, Result};

/// An article segmented and tagged once, reused by every model.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedArticle {
    pub article_id: u32,
    pub sentences: Vec<Sentence>,
    pub pos: Vec<Vec<PosTag>>,
    pub ner: Vec<Vec<NerTag>>,
}

impl AnnotatedArticle {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

pub fn annotate_article(article: &Article, annotator: &Annotator) -> Result<AnnotatedArticle, AnnotationError> {
    let sentences = segment_article(article);
    let mut pos = Vec::with_capacity(sentences.len());
    let mut ner = Vec::with_capacity(sentences.len());
    for s in &sentences {
        let (p, n) = annotator.annotate(article.id, s)?;
        pos.push(p);
        ner.push(n);
    }
    Ok(AnnotatedArticle {
        article_id: article.id,
        sentences,
        pos,
        ner,
    })
}

pub fn annotate_articles(
    articles: &[Article],
    annotator: &Annotator,
) -> Result<Vec<AnnotatedArticle>, AnnotationError> {
    articles.iter().map(|a| annotate_article(a, annotator)).collect()
}

/// KW table over annotated training articles.
pub fn kw_table(docs: &[AnnotatedArticle], spans: &[LabeledSpan]) -> KwTable {
    crate::features::build_kw_table(docs.iter().map(|d| (d.article_id, d.sentences.as_slice())), spans)
}

/// Which input blocks make up a token row, in order: embedding vector,
/// enabled feature groups, upstream probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub use_embeddings: bool,
    pub features: FeatureSet,
    pub upstream: bool,
}

impl InputSpec {
    pub fn input_dim(&self, embedding_dim: usize) -> usize {
        let emb = if self.use_embeddings { embedding_dim } else { 0 };
        emb + self.features.dim() + self.upstream as usize
    }
}

/// A tagger instance together with its position in the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SiSentence {
    pub article_id: u32,
    pub sentence_index: usize,
    pub instance: TaggerInstance,
}

fn require_embeddings(spec: InputSpec, embeddings: Option<&EmbeddingTable>) -> Result<Option<&EmbeddingTable>> {
    match (spec.use_embeddings, embeddings) {
        (true, None) => Err(Error::Config(
            "input spec uses embeddings but no table was given".into(),
        )),
        (true, e) => Ok(e),
        (false, _) => Ok(None),
    }
}

/// One tagger instance per sentence, labels projected from `spans`.
///
/// Pass an empty span list when building inputs for prediction.
pub fn si_instances(
    docs: &[AnnotatedArticle],
    spans: &[LabeledSpan],
    kw: &KwTable,
    embeddings: Option<&EmbeddingTable>,
    oov: OovPolicy,
    spec: InputSpec,
    upstream: Option<&UpstreamProbs>,
) -> Result<Vec<SiSentence>> {
    let embeddings = require_embeddings(spec, embeddings)?;
    if spec.upstream && upstream.is_none() {
        return Err(Error::Config(
            "input spec uses upstream probabilities but none were given".into(),
        ));
    }
    let mut by_article: HashMap<u32, Vec<LabeledSpan>> = HashMap::new();
    for s in spans {
        by_article.entry(s.article_id).or_default().push(*s);
    }
    let mut out = Vec::new();
    let mut unprojectable = 0;
    for doc in docs {
        let article_spans = by_article.remove(&doc.article_id).unwrap_or_default();
        let (labels, lost) = project_labels_with_diagnostics(&doc.sentences, &article_spans);
        unprojectable += lost;
        for ((sentence, labels), (pos, ner)) in doc.sentences.iter().zip(labels).zip(doc.pos.iter().zip(&doc.ner)) {
            let probs = match upstream.filter(|_| spec.upstream) {
                Some(u) => Some(u.sentence(doc.article_id, sentence)?),
                None => None,
            };
            let features = featurize(sentence, pos, ner, kw, probs.as_deref());
            let vectors = match embeddings {
                Some(table) => Some(sentence_vectors(table, doc.article_id, sentence, oov)?),
                None => None,
            };
            out.push(SiSentence {
                article_id: doc.article_id,
                sentence_index: sentence.index,
                instance: TaggerInstance {
                    inputs: build_inputs(vectors.as_deref(), &features, spec.features),
                    labels,
                },
            });
        }
    }
    if unprojectable > 0 {
        log::warn!("{unprojectable} spans cover no token and were not projected");
    }
    Ok(out)
}

pub fn tagger_instances(sentences: &[SiSentence]) -> Vec<TaggerInstance> {
    sentences.iter().map(|s| s.instance.clone()).collect()
}

/// Per-sentence probabilities grouped by article, in `docs` order.
pub fn article_probs(
    model: &TaggerModel,
    docs: &[AnnotatedArticle],
    sentences: &[SiSentence],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut probs: HashMap<(u32, usize), Vec<f64>> = HashMap::with_capacity(sentences.len());
    for s in sentences {
        probs.insert(
            (s.article_id, s.sentence_index),
            model.predict_probs(&s.instance.inputs)?,
        );
    }
    docs.iter()
        .map(|d| {
            d.sentences
                .iter()
                .map(|s| {
                    probs.remove(&(d.article_id, s.index)).ok_or_else(|| {
                        Error::Config(format!("no instance for article {} sentence {}", d.article_id, s.index))
                    })
                })
                .collect()
        })
        .collect()
}

/// Predict, threshold and merge spans for every article.
pub fn predict_spans(
    model: &TaggerModel,
    docs: &[AnnotatedArticle],
    sentences: &[SiSentence],
    threshold: f64,
) -> Result<Vec<LabeledSpan>> {
    let mut spans = Vec::new();
    for (doc, probs) in docs.iter().zip(article_probs(model, docs, sentences)?) {
        spans.extend(decode_probs(doc.article_id, &doc.sentences, &probs, threshold)?);
    }
    Ok(spans)
}

/// Model probabilities for every token, as an upstream file for a
/// composed model.
pub fn predict_upstream(model: &TaggerModel, sentences: &[SiSentence]) -> Result<UpstreamProbs> {
    let mut up = UpstreamProbs::new();
    for s in sentences {
        up.insert_sentence(
            s.article_id,
            s.sentence_index,
            &model.predict_probs(&s.instance.inputs)?,
        );
    }
    Ok(up)
}

fn token_row(vector: Option<Vec<f32>>, features: &TokenFeatures, set: FeatureSet) -> Vec<f64> {
    let mut row: Vec<f64> = vector
        .map(|v| v.into_iter().map(f64::from).collect())
        .unwrap_or_default();
    features.extend_into(set, &mut row);
    row
}

/// Classifier input for a span inside an annotated article: one row per
/// article token that overlaps the span.
pub fn span_instance(
    doc: &AnnotatedArticle,
    span: &LabeledSpan,
    kw: &KwTable,
    embeddings: Option<&EmbeddingTable>,
    oov: OovPolicy,
    spec: InputSpec,
) -> Result<SpanInstance> {
    let embeddings = require_embeddings(spec, embeddings)?;
    let mut inputs = Vec::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        if sentence.end <= span.start || span.end <= sentence.start {
            continue;
        }
        let features = featurize(sentence, &doc.pos[si], &doc.ner[si], kw, None);
        for (t, f) in sentence.tokens.iter().zip(&features) {
            if t.start >= span.end || span.start >= t.end {
                continue;
            }
            let vector = match embeddings {
                Some(table) => {
                    let key = EmbeddingKey::new(doc.article_id, sentence.index as u32, t.token_index as u32);
                    match (table.get(&key), oov) {
                        (Some(v), _) => Some(v.to_vec()),
                        (None, OovPolicy::Zero) => Some(vec![0.0; table.dim()]),
                        (None, OovPolicy::Error) => {
                            return Err(crate::embeddings::EmbeddingError::Missing {
                                article_id: doc.article_id,
                                sentence_index: sentence.index,
                                token_index: t.token_index,
                            }
                            .into())
                        }
                    }
                }
                None => None,
            };
            inputs.push(token_row(vector, f, spec.features));
        }
    }
    Ok(SpanInstance { inputs })
}

/// Classifier input for a detached text. The text is tokenized on its own,
/// tagged with the rule taggers, and given zero embedding vectors.
pub fn detached_instance(
    text: &str,
    gazetteer: &Gazetteer,
    kw: &KwTable,
    embedding_dim: usize,
    spec: InputSpec,
) -> SpanInstance {
    let mut inputs = Vec::new();
    for sentence in segment_text(text) {
        let pos = annotate_pos(&sentence);
        let ner = annotate_ner(&sentence, gazetteer);
        for f in featurize(&sentence, &pos, &ner, kw, None) {
            let vector = spec.use_embeddings.then(|| vec![0.0; embedding_dim]);
            inputs.push(token_row(vector, &f, spec.features));
        }
    }
    SpanInstance { inputs }
}

/// Classifier inputs for gold spans (looked up in `docs`) and silver texts.
pub fn tc_instances(
    docs: &[AnnotatedArticle],
    samples: &[TcSample],
    kw: &KwTable,
    embeddings: Option<&EmbeddingTable>,
    oov: OovPolicy,
    spec: InputSpec,
    gazetteer: &Gazetteer,
) -> Result<Vec<SpanInstance>> {
    let by_id: HashMap<u32, &AnnotatedArticle> = docs.iter().map(|d| (d.article_id, d)).collect();
    let dim = embeddings.map_or(0, EmbeddingTable::dim);
    samples
        .iter()
        .map(|sample| match &sample.origin {
            SampleOrigin::Gold(span) => {
                let doc = by_id
                    .get(&span.article_id)
                    .ok_or_else(|| Error::Config(format!("span {:?} refers to an unloaded article", span.key())))?;
                span_instance(doc, span, kw, embeddings, oov, spec)
            }
            SampleOrigin::Silver { .. } => {
                require_embeddings(spec, embeddings)?;
                Ok(detached_instance(&sample.text, gazetteer, kw, dim, spec))
            }
        })
        .collect()
}

/// Classifier inputs for spans to be labeled.
pub fn span_instances(
    docs: &[AnnotatedArticle],
    spans: &[LabeledSpan],
    kw: &KwTable,
    embeddings: Option<&EmbeddingTable>,
    oov: OovPolicy,
    spec: InputSpec,
) -> Result<Vec<SpanInstance>> {
    let by_id: HashMap<u32, &AnnotatedArticle> = docs.iter().map(|d| (d.article_id, d)).collect();
    spans
        .iter()
        .map(|span| {
            let doc = by_id
                .get(&span.article_id)
                .ok_or_else(|| Error::Config(format!("span {:?} refers to an unloaded article", span.key())))?;
            span_instance(doc, span, kw, embeddings, oov, spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::KwTable;

    fn doc(text: &str) -> AnnotatedArticle {
        annotate_article(&Article::new(7, text), &Annotator::default()).unwrap()
    }

    #[test]
    fn si_inputs_have_declared_width() {
        let d = doc("They lie to you.\nWe resist.");
        let spec = InputSpec {
            use_embeddings: false,
            features: FeatureSet::ALL,
            upstream: false,
        };
        let spans = [LabeledSpan::new(7, 5, 8)];
        let inst = si_instances(&[d], &spans, &KwTable::default(), None, OovPolicy::Zero, spec, None).unwrap();
        assert_eq!(inst.len(), 2);
        assert!(inst
            .iter()
            .all(|s| s.instance.inputs.iter().all(|r| r.len() == spec.input_dim(0))));
        assert_eq!(inst[0].instance.labels.0, vec![0, 1, 0, 0, 0]);
    }

    #[test]
    fn missing_inputs_are_config_errors() {
        let d = doc("a b");
        let spec = InputSpec {
            use_embeddings: true,
            features: FeatureSet::NONE,
            upstream: false,
        };
        assert!(si_instances(
            std::slice::from_ref(&d),
            &[],
            &KwTable::default(),
            None,
            OovPolicy::Zero,
            spec,
            None
        )
        .is_err());
        let spec = InputSpec {
            use_embeddings: false,
            features: FeatureSet::NONE,
            upstream: true,
        };
        assert!(si_instances(&[d], &[], &KwTable::default(), None, OovPolicy::Zero, spec, None).is_err());
    }

    #[test]
    fn span_instances_cover_overlapping_tokens() {
        let d = doc("They lie to you.\nWe resist.");
        let spec = InputSpec {
            use_embeddings: true,
            features: FeatureSet::NONE,
            upstream: false,
        };
        let mut table = EmbeddingTable::new(2);
        table.insert(EmbeddingKey::new(7, 1, 0), &[1.0, 2.0]).unwrap();
        // "you.\nWe" spans two sentences and three tokens.
        let span = LabeledSpan::new(7, 12, 19);
        let inst = span_instance(&d, &span, &KwTable::default(), Some(&table), OovPolicy::Zero, spec).unwrap();
        assert_eq!(inst.inputs, vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 2.0]]);

        let detached = detached_instance("they lie", &Gazetteer::default(), &KwTable::default(), 2, spec);
        assert_eq!(detached.inputs.len(), 2);
    }
}
