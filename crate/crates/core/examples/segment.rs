//! Tokenize an article, project character spans onto tokens and decode
//! them back.

use propspan::corpus::{char_to_utf16, Article, LabeledSpan};
use propspan::segment::{merge_spans, project_labels, segment_article, tokens_to_spans, write_token_stream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let article = Article::new(
        7,
        "The “corrupt” élite lied again!\nCitizens deserve better — now.\n\nThey won't stop.",
    );
    // "corrupt" and "élite lied", plus a span that starts mid-token
    let spans = [
        LabeledSpan::new(7, 5, 12),
        LabeledSpan::new(7, 14, 24),
        LabeledSpan::new(7, 34, 40),
    ];

    let sentences = segment_article(&article);
    let labels = project_labels(&sentences, &spans);
    for (sentence, seq) in sentences.iter().zip(&labels) {
        let marked: Vec<String> = sentence
            .tokens
            .iter()
            .zip(&seq.0)
            .map(|(t, &l)| {
                if l == 1 {
                    format!("[{}]", t.text)
                } else {
                    t.text.clone()
                }
            })
            .collect();
        println!("sentence {}: {}", sentence.index, marked.join(" "));
    }

    let decoded = merge_spans(&tokens_to_spans(article.id, &sentences, &labels)?);
    for s in &decoded {
        println!(
            "span {}..{} (utf-16 {}..{}) {:?}",
            s.start,
            s.end,
            char_to_utf16(&article.text, s.start),
            char_to_utf16(&article.text, s.end),
            article.slice(s.start, s.end)
        );
    }

    println!("token stream:");
    let mut out = std::io::stdout().lock();
    write_token_stream(&mut out, article.id, &sentences)?;
    Ok(())
}
