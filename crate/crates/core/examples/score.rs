//! Span and technique scoring on small hand-made cases.

use propspan::corpus::{LabeledSpan, Technique};
use propspan::eval::{score_si, score_si_exact, score_si_overlap, score_tc, Normalization, ScoreOptions, SiScorer};

fn show(label: &str, pred: &[LabeledSpan], gold: &[LabeledSpan]) {
    let o = score_si_overlap(pred, gold);
    let e = score_si_exact(pred, gold);
    println!(
        "{label:<22} overlap P={:.3} R={:.3} F={:.3} | exact P={:.3} R={:.3} F={:.3}",
        o.precision, o.recall, o.f1, e.precision, e.recall, e.f1
    );
}

fn main() {
    let gold = [LabeledSpan::new(1, 0, 10)];
    show("half of the gold span", &[LabeledSpan::new(1, 0, 5)], &gold);
    show("exact hit", &gold, &gold);
    show(
        "overlapping preds",
        &[LabeledSpan::new(1, 0, 6), LabeledSpan::new(1, 4, 12)],
        &gold,
    );
    show(
        "touching preds",
        &[LabeledSpan::new(1, 0, 5), LabeledSpan::new(1, 5, 10)],
        &gold,
    );
    show("wrong article", &[LabeledSpan::new(2, 0, 10)], &gold);

    let pred = [LabeledSpan::new(1, 0, 10), LabeledSpan::new(2, 0, 4)];
    let gold = [
        LabeledSpan::new(1, 0, 10),
        LabeledSpan::new(2, 0, 8),
        LabeledSpan::new(2, 10, 12),
    ];
    for normalization in [Normalization::Global, Normalization::PerArticle] {
        let m = score_si(
            &pred,
            &gold,
            ScoreOptions {
                scorer: SiScorer::Overlap,
                normalization,
            },
        );
        println!(
            "{normalization:?}: P={:.3} R={:.3} F={:.3}",
            m.precision, m.recall, m.f1
        );
    }

    let span = |start, t| LabeledSpan::new(1, start, start + 5).with_technique(t);
    let gold = [
        span(0, Technique::LoadedLanguage),
        span(10, Technique::Doubt),
        span(20, Technique::Slogans),
        span(30, Technique::LoadedLanguage),
    ];
    let pred = [
        span(0, Technique::LoadedLanguage),
        span(10, Technique::LoadedLanguage),
        span(20, Technique::Slogans),
        span(30, Technique::LoadedLanguage),
    ];
    let m = score_tc(&pred, &gold).expect("same span keys");
    print!("{}", m.to_tsv());
}
