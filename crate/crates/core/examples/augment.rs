//! Plan silver samples for the minority techniques and generate them by
//! synonym and name substitution.
//!
//! ```text
//! cargo run --example augment -- [total_new] [seed]
//! ```

use propspan::augment::{
    augment_corpus, class_proportion_variance, gold_samples, plan_targets, AugmentConfig, AugmentPlan,
    REFERENCE_TRAIN_COUNTS,
};
use propspan::corpus::Technique;
use propspan::eval::class_counts;
use propspan::synthetic::{demo_lexicon, three_class_tc, SyntheticConfig};

fn main() -> propspan::Result<()> {
    let mut args = std::env::args().skip(1);
    let total_new: i64 = args.next().map_or(Ok(3000), |s| s.parse()).expect("total_new");
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse()).expect("seed");

    let plan = plan_targets(&REFERENCE_TRAIN_COUNTS, total_new)?;
    println!("{:<38} {:>6} {:>6} {:>6}", "technique", "train", "new", "target");
    for t in Technique::ALL {
        let i = t.index();
        println!(
            "{:<38} {:>6} {:>6} {:>6}",
            t.prose(),
            plan.current[i],
            plan.additions[i],
            plan.targets()[i]
        );
    }
    println!(
        "proportion variance {:.5} -> {:.5}",
        class_proportion_variance(&plan.current),
        class_proportion_variance(&plan.targets())
    );

    let corpus = three_class_tc(&SyntheticConfig {
        articles: 10,
        ..SyntheticConfig::default()
    });
    let gold = gold_samples(&corpus.articles, &corpus.spans)?;
    let plan = AugmentPlan::empty(class_counts(&corpus.spans))
        .with_addition(Technique::Doubt, 5)
        .with_addition(Technique::Slogans, 5);
    let config = AugmentConfig {
        seed,
        ..AugmentConfig::default()
    };
    let outcome = augment_corpus(&gold, &demo_lexicon(), &plan, &config);
    for s in &outcome.silver {
        if let propspan::augment::SampleOrigin::Silver { source_index, .. } = s.origin {
            println!(
                "{:<10} {:?} <- {:?}",
                s.technique.to_string(),
                s.text,
                gold[source_index].text
            );
        }
    }
    let missing: usize = outcome.shortfall.iter().sum();
    if missing > 0 {
        println!("{missing} samples could not be generated");
    }
    Ok(())
}
