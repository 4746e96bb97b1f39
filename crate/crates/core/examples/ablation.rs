//! Train and score the six-cell feature ablation on the generated corpus.
//!
//! ```text
//! cargo run --release --example ablation -- [epochs]
//! ```

use propspan::embeddings::OovPolicy;
use propspan::eval::{run_ablation, AblationData, AblationGrid, ScoreOptions};
use propspan::features::Annotator;
use propspan::pipeline;
use propspan::synthetic::{separable_si, SyntheticConfig};
use propspan::tagger::TaggerConfig;

fn main() -> propspan::Result<()> {
    let epochs = std::env::args().nth(1).map_or(Ok(5), |s| s.parse()).expect("epochs");
    let corpus = separable_si(&SyntheticConfig::default());
    let (train, dev) = corpus.split(40);
    let annotator = Annotator::default();
    let train_docs = pipeline::annotate_articles(&train.articles, &annotator)?;
    let dev_docs = pipeline::annotate_articles(&dev.articles, &annotator)?;
    let data = AblationData {
        train_docs: &train_docs,
        train_spans: &train.spans,
        dev_docs: &dev_docs,
        dev_spans: &dev.spans,
        embeddings: Some(&corpus.embeddings),
        oov: OovPolicy::Error,
        upstream_train: None,
        upstream_dev: None,
    };
    let base = TaggerConfig {
        hidden_dim: 16,
        learning_rate: 0.05,
        epochs,
        seed: 1,
        ..TaggerConfig::default()
    };
    let report = run_ablation(&AblationGrid::standard(), &data, &base, ScoreOptions::default());
    print!("{}", report.to_table());
    for row in &report.rows {
        println!("{}\t{}\t{:.2}s", row.name, row.config_hash, row.wall_time_secs);
    }
    Ok(())
}
