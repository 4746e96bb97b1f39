//! Train the span tagger on the generated separable corpus and report
//! held-out token and span scores.
//!
//! ```text
//! cargo run --release --example train_tagger -- [epochs] [hidden] [learning_rate]
//! ```

use std::time::Instant;

use propspan::embeddings::OovPolicy;
use propspan::eval::{score_si_overlap, token_scores};
use propspan::features::{Annotator, FeatureSet};
use propspan::pipeline::{self, InputSpec};
use propspan::synthetic::{separable_si, SyntheticConfig};
use propspan::tagger::{train_tagger, TaggerConfig};

fn main() -> propspan::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(Ok(20), |s| s.parse()).expect("epochs");
    let hidden = args.next().map_or(Ok(16), |s| s.parse()).expect("hidden");
    let lr = args.next().map_or(Ok(0.05), |s| s.parse()).expect("learning rate");

    let corpus = separable_si(&SyntheticConfig::default());
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
        hidden_dim: hidden,
        learning_rate: lr,
        epochs,
        seed: 1,
        ..TaggerConfig::new(spec.input_dim(corpus.embeddings.dim()))
    };
    let started = Instant::now();
    let (model, report) = train_tagger(&pipeline::tagger_instances(&train_inst), &config)?;
    println!(
        "trained {} sentences in {:.2}s",
        report.trained_instances,
        started.elapsed().as_secs_f64()
    );
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        println!("epoch {:>2}  loss {loss:.5}", i + 1);
    }

    let probs: Vec<Vec<f64>> = dev_inst
        .iter()
        .map(|s| model.predict_probs(&s.instance.inputs))
        .collect::<Result<_, _>>()?;
    let labels: Vec<_> = dev_inst.iter().map(|s| s.instance.labels.clone()).collect();
    let tokens = token_scores(&probs, &labels, config.threshold);
    println!(
        "held-out tokens  P={:.3} R={:.3} F={:.3}",
        tokens.precision, tokens.recall, tokens.f1
    );

    let pred = pipeline::predict_spans(&model, &dev_docs, &dev_inst, config.threshold)?;
    let spans = score_si_overlap(&pred, &dev.spans);
    println!(
        "held-out spans   P={:.3} R={:.3} F={:.3} ({} predicted, {} gold)",
        spans.precision, spans.recall, spans.f1, spans.pred_count, spans.gold_count
    );
    Ok(())
}
