//! Offset-preserving segmentation and span/token label projection.
//!
//! Articles are already one sentence per line. Within a line a token is
//! either a maximal run of alphanumeric characters or a single
//! non-whitespace, non-alphanumeric character. Offsets are character
//! indexes into the article text.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Article, LabeledSpan};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignmentError {
    #[error("article {article_id}: {sentences} sentences but {labels} label sequences")]
    SentenceCount {
        article_id: u32,
        sentences: usize,
        labels: usize,
    },
    #[error("article {article_id} sentence {sentence_index}: {tokens} tokens but {values} values")]
    TokenCount {
        article_id: u32,
        sentence_index: usize,
        tokens: usize,
        values: usize,
    },
    #[error("token stream line {line}: {message}")]
    TokenStream { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub sentence_index: usize,
    pub token_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Binary propaganda labels, one per token of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenLabelSeq(pub Vec<u8>);

impl TokenLabelSeq {
    pub fn zeros(n: usize) -> Self {
        TokenLabelSeq(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&l| l == 1).count()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Space,
    Word,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() {
        CharClass::Word
    } else {
        CharClass::Other
    }
}

/// Token boundaries of `text` as `(start, end)` character offsets.
pub fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        match classify(c) {
            CharClass::Word => {
                word_start.get_or_insert(i);
            }
            class => {
                if let Some(s) = word_start.take() {
                    out.push((s, i));
                }
                if class == CharClass::Other {
                    out.push((i, i + 1));
                }
            }
        }
    }
    if let Some(s) = word_start {
        out.push((s, n));
    }
    out
}

/// Split an article into line sentences. Lines without tokens yield no
/// sentence; sentence indexes count emitted sentences only.
pub fn segment_article(article: &Article) -> Vec<Sentence> {
    segment_text(&article.text)
}

pub fn segment_text(text: &str) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    let mut offset = 0;
    for line in text.split('\n') {
        let line_chars: Vec<char> = line.chars().collect();
        let bounds = tokenize(line);
        if !bounds.is_empty() {
            let index = sentences.len();
            let tokens: Vec<Token> = bounds
                .iter()
                .enumerate()
                .map(|(token_index, &(s, e))| Token {
                    text: line_chars[s..e].iter().collect(),
                    start: offset + s,
                    end: offset + e,
                    sentence_index: index,
                    token_index,
                })
                .collect();
            sentences.push(Sentence {
                index,
                start: tokens[0].start,
                end: tokens[tokens.len() - 1].end,
                tokens,
            });
        }
        offset += line_chars.len() + 1;
    }
    sentences
}

/// Character ranges covered by `spans`, merged and sorted.
fn covered_ranges(spans: &[LabeledSpan]) -> Vec<(usize, usize)> {
    let mut ranges: Vec<(usize, usize)> = spans
        .iter()
        .filter(|s| s.end > s.start)
        .map(|s| (s.start, s.end))
        .collect();
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

fn intersects_any(ranges: &[(usize, usize)], start: usize, end: usize) -> bool {
    // First range whose end is past `start`.
    let i = ranges.partition_point(|&(_, e)| e <= start);
    i < ranges.len() && ranges[i].0 < end
}

/// Label each token 1 iff any of its characters falls inside a span.
///
/// `spans` must belong to the article the sentences came from.
pub fn project_labels(sentences: &[Sentence], spans: &[LabeledSpan]) -> Vec<TokenLabelSeq> {
    project_labels_with_diagnostics(sentences, spans).0
}

/// As [`project_labels`], also counting spans that cover no token at all
/// (for instance whitespace-only spans).
pub fn project_labels_with_diagnostics(sentences: &[Sentence], spans: &[LabeledSpan]) -> (Vec<TokenLabelSeq>, usize) {
    let ranges = covered_ranges(spans);
    let labels = sentences
        .iter()
        .map(|sentence| {
            TokenLabelSeq(
                sentence
                    .tokens
                    .iter()
                    .map(|t| intersects_any(&ranges, t.start, t.end) as u8)
                    .collect(),
            )
        })
        .collect();
    let unprojectable = spans
        .iter()
        .filter(|span| {
            !sentences
                .iter()
                .flat_map(|s| &s.tokens)
                .any(|t| t.start < span.end && span.start < t.end)
        })
        .count();
    (labels, unprojectable)
}

/// Turn each maximal run of 1-labeled tokens within a sentence into a span.
pub fn tokens_to_spans(
    article_id: u32,
    sentences: &[Sentence],
    label_seqs: &[TokenLabelSeq],
) -> Result<Vec<LabeledSpan>, AlignmentError> {
    if sentences.len() != label_seqs.len() {
        return Err(AlignmentError::SentenceCount {
            article_id,
            sentences: sentences.len(),
            labels: label_seqs.len(),
        });
    }
    let mut spans = Vec::new();
    for (sentence, labels) in sentences.iter().zip(label_seqs) {
        if sentence.tokens.len() != labels.len() {
            return Err(AlignmentError::TokenCount {
                article_id,
                sentence_index: sentence.index,
                tokens: sentence.tokens.len(),
                values: labels.len(),
            });
        }
        let mut run: Option<(usize, usize)> = None;
        for (token, &label) in sentence.tokens.iter().zip(&labels.0) {
            if label == 1 {
                run = Some(match run {
                    Some((s, _)) => (s, token.end),
                    None => (token.start, token.end),
                });
            } else if let Some((s, e)) = run.take() {
                spans.push(LabeledSpan::new(article_id, s, e));
            }
        }
        if let Some((s, e)) = run {
            spans.push(LabeledSpan::new(article_id, s, e));
        }
    }
    Ok(spans)
}

/// Union spans whose character ranges intersect, until no two overlap.
///
/// Touching spans (`a.end == b.start`) stay separate. Output is sorted by
/// `(article_id, start)`. A merged span keeps a technique only if all its
/// parts agree on it.
pub fn merge_spans(spans: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut sorted: Vec<LabeledSpan> = spans.iter().filter(|s| !s.is_empty()).copied().collect();
    sorted.sort_by_key(|s| (s.article_id, s.start, s.end));
    let mut merged: Vec<LabeledSpan> = Vec::with_capacity(sorted.len());
    for span in sorted {
        match merged.last_mut() {
            Some(last) if last.article_id == span.article_id && span.start < last.end => {
                last.end = last.end.max(span.end);
                if last.technique != span.technique {
                    last.technique = None;
                }
            }
            _ => merged.push(span),
        }
    }
    merged
}

/// One token of the line-delimited token stream export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub article_id: u32,
    pub sentence_index: usize,
    pub token_index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Write one JSON record per token.
pub fn write_token_stream<W: Write>(out: &mut W, article_id: u32, sentences: &[Sentence]) -> std::io::Result<()> {
    for token in sentences.iter().flat_map(|s| &s.tokens) {
        let record = TokenRecord {
            article_id,
            sentence_index: token.sentence_index,
            token_index: token.token_index,
            text: token.text.clone(),
            start: token.start,
            end: token.end,
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_token_stream<R: BufRead>(input: R) -> Result<Vec<TokenRecord>, AlignmentError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| AlignmentError::TokenStream {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| AlignmentError::TokenStream {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}
