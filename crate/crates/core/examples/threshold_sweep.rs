//! Train a deliberately undertrained tagger and show how the decoding
//! threshold trades precision for recall.

use propspan::embeddings::OovPolicy;
use propspan::eval::{sweep_thresholds, sweep_to_tsv, ArticleProbs, ScoreOptions};
use propspan::features::{Annotator, FeatureSet};
use propspan::pipeline::{self, InputSpec};
use propspan::synthetic::{separable_si, SyntheticConfig};
use propspan::tagger::{train_tagger, TaggerConfig};

fn main() -> propspan::Result<()> {
    let corpus = separable_si(&SyntheticConfig {
        noise: 0.6,
        ..SyntheticConfig::default()
    });
    let (train, dev) = corpus.split(40);
    let annotator = Annotator::default();
    let train_docs = pipeline::annotate_articles(&train.articles, &annotator)?;
    let dev_docs = pipeline::annotate_articles(&dev.articles, &annotator)?;
    let kw = pipeline::kw_table(&train_docs, &train.spans);
    let spec = InputSpec {
        use_embeddings: true,
        features: FeatureSet::NONE,
        upstream: false,
    };
    let emb = Some(&corpus.embeddings);
    let train_inst = pipeline::si_instances(&train_docs, &train.spans, &kw, emb, OovPolicy::Error, spec, None)?;
    let dev_inst = pipeline::si_instances(&dev_docs, &dev.spans, &kw, emb, OovPolicy::Error, spec, None)?;
    let config = TaggerConfig {
        hidden_dim: 8,
        learning_rate: 0.01,
        epochs: 1,
        ..TaggerConfig::new(spec.input_dim(corpus.embeddings.dim()))
    };
    let (model, _) = train_tagger(&pipeline::tagger_instances(&train_inst), &config)?;

    let probs = pipeline::article_probs(&model, &dev_docs, &dev_inst)?;
    let articles: Vec<ArticleProbs<'_>> = dev_docs
        .iter()
        .zip(probs)
        .map(|(d, probs)| ArticleProbs {
            article_id: d.article_id,
            sentences: &d.sentences,
            probs,
        })
        .collect();
    let thresholds: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let rows = sweep_thresholds(&articles, &dev.spans, &thresholds, ScoreOptions::default())?;
    print!("{}", sweep_to_tsv(&rows));
    Ok(())
}
