//! Train the technique classifier on the three-class generated corpus and
//! print held-out micro F1 with the per-class breakdown.

use propspan::augment::gold_samples;
use propspan::classifier::{train_classifier, ClassifierConfig};
use propspan::embeddings::OovPolicy;
use propspan::eval::score_tc;
use propspan::features::{Annotator, FeatureSet, Gazetteer};
use propspan::pipeline::{self, InputSpec};
use propspan::synthetic::{three_class_tc, SyntheticConfig};

fn main() -> propspan::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(Ok(20), |s| s.parse()).expect("epochs");
    let hidden = args.next().map_or(Ok(128), |s| s.parse()).expect("hidden");
    let lr = args.next().map_or(Ok(1e-3), |s| s.parse()).expect("learning rate");

    let corpus = three_class_tc(&SyntheticConfig::default());
    let (train, dev) = corpus.split(40);
    let annotator = Annotator::default();
    let train_docs = pipeline::annotate_articles(&train.articles, &annotator)?;
    let dev_docs = pipeline::annotate_articles(&dev.articles, &annotator)?;
    let kw = pipeline::kw_table(&train_docs, &train.spans);
    let spec = InputSpec {
        use_embeddings: true,
        features: FeatureSet::ALL,
        upstream: false,
    };
    let emb = Some(&corpus.embeddings);

    let samples = gold_samples(&train.articles, &train.spans)?;
    let inputs = pipeline::tc_instances(
        &train_docs,
        &samples,
        &kw,
        emb,
        OovPolicy::Zero,
        spec,
        &Gazetteer::default(),
    )?;
    let pairs: Vec<_> = inputs.into_iter().zip(samples.iter().map(|s| s.technique)).collect();
    let config = ClassifierConfig {
        hidden_dim: hidden,
        learning_rate: lr,
        epochs,
        ..ClassifierConfig::new(spec.input_dim(corpus.embeddings.dim()))
    };
    let (model, report) = train_classifier(&pairs, &config)?;
    println!(
        "trained on {} spans, final loss {:.4}",
        report.trained_instances,
        report.epoch_losses.last().unwrap()
    );

    let dev_inputs = pipeline::span_instances(&dev_docs, &dev.spans, &kw, emb, OovPolicy::Zero, spec)?;
    let mut pred = Vec::new();
    for (span, inst) in dev.spans.iter().zip(&dev_inputs) {
        pred.push(span.with_technique(model.predict(inst)?.0));
    }
    let metrics = score_tc(&pred, &dev.spans)?;
    print!("{}", metrics.to_tsv());
    Ok(())
}
