//! Rule-based POS and NER tags, the single-token span table and the
//! resulting feature vectors.

use propspan::corpus::{Article, LabeledSpan};
use propspan::features::{featurize, Annotator, FeatureSet, Gazetteer, NerTag};
use propspan::pipeline;

fn main() -> propspan::Result<()> {
    let gazetteer = Gazetteer::new()
        .with("New York", NerTag::GPE)
        .with("Senate", NerTag::ORG);
    let annotator = Annotator::Rules(gazetteer);
    let articles = [
        Article::new(
            1,
            "Radical senators in New York betrayed voters on Tuesday.\nThe Senate met 3 times.",
        ),
        Article::new(2, "Those radical thugs never quit."),
    ];
    let spans = [
        LabeledSpan::new(1, 0, 7),
        LabeledSpan::new(2, 6, 13),
        LabeledSpan::new(2, 14, 19),
    ];
    let docs = pipeline::annotate_articles(&articles, &annotator)?;
    let kw = pipeline::kw_table(&docs, &spans);
    println!("single-token span counts:");
    for (token, n) in kw.iter() {
        println!("  {token}\t{n}");
    }

    let doc = &docs[0];
    for (i, sentence) in doc.sentences.iter().enumerate() {
        let features = featurize(sentence, &doc.pos[i], &doc.ner[i], &kw, None);
        for (t, f) in sentence.tokens.iter().zip(&features) {
            println!("{:<10} {:<6} {:<6} kw={}", t.text, f.pos, f.ner, f.kw_count);
        }
    }
    for set in ["pos", "ner", "kw", "pos,ner,kw"] {
        let set = FeatureSet::parse(set).expect("valid list");
        println!("{set:<11} adds {} inputs per token", set.dim());
    }
    Ok(())
}
