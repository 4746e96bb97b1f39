//! Feed one tagger's per-token probabilities, with linguistic features,
//! into a second tagger.

use propspan::embeddings::OovPolicy;
use propspan::eval::score_si_overlap;
use propspan::features::{Annotator, FeatureSet};
use propspan::pipeline::{self, InputSpec};
use propspan::synthetic::{separable_si, SyntheticConfig};
use propspan::tagger::{train_tagger, TaggerConfig};

fn main() -> propspan::Result<()> {
    let corpus = separable_si(&SyntheticConfig::default());
    let (train, dev) = corpus.split(40);
    let annotator = Annotator::default();
    let train_docs = pipeline::annotate_articles(&train.articles, &annotator)?;
    let dev_docs = pipeline::annotate_articles(&dev.articles, &annotator)?;
    let kw = pipeline::kw_table(&train_docs, &train.spans);
    let emb = Some(&corpus.embeddings);
    let base = |input_dim| TaggerConfig {
        hidden_dim: 16,
        learning_rate: 0.05,
        epochs: 5,
        seed: 2,
        ..TaggerConfig::new(input_dim)
    };

    let upstream_spec = InputSpec {
        use_embeddings: true,
        features: FeatureSet::NONE,
        upstream: false,
    };
    let train_inst = pipeline::si_instances(
        &train_docs,
        &train.spans,
        &kw,
        emb,
        OovPolicy::Error,
        upstream_spec,
        None,
    )?;
    let dev_inst = pipeline::si_instances(&dev_docs, &dev.spans, &kw, emb, OovPolicy::Error, upstream_spec, None)?;
    let config = base(upstream_spec.input_dim(corpus.embeddings.dim()));
    let (upstream_model, _) = train_tagger(&pipeline::tagger_instances(&train_inst), &config)?;
    let pred = pipeline::predict_spans(&upstream_model, &dev_docs, &dev_inst, 0.5)?;
    println!("upstream tagger  F={:.3}", score_si_overlap(&pred, &dev.spans).f1);

    let up_train = pipeline::predict_upstream(&upstream_model, &train_inst)?;
    let up_dev = pipeline::predict_upstream(&upstream_model, &dev_inst)?;
    let spec = InputSpec {
        use_embeddings: false,
        features: FeatureSet::ALL,
        upstream: true,
    };
    let train_inst = pipeline::si_instances(
        &train_docs,
        &train.spans,
        &kw,
        None,
        OovPolicy::Error,
        spec,
        Some(&up_train),
    )?;
    let dev_inst = pipeline::si_instances(&dev_docs, &dev.spans, &kw, None, OovPolicy::Error, spec, Some(&up_dev))?;
    let config = base(spec.input_dim(0));
    println!("composed inputs per token: {}", config.input_dim);
    let (model, _) = train_tagger(&pipeline::tagger_instances(&train_inst), &config)?;
    let pred = pipeline::predict_spans(&model, &dev_docs, &dev_inst, 0.5)?;
    println!("composed tagger  F={:.3}", score_si_overlap(&pred, &dev.spans).f1);
    Ok(())
}
