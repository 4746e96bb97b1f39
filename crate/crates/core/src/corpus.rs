//! Data model and I/O for the official corpus layout.
//!
//! Articles live in `article<ID>.txt` files. Span identification labels are
//! three-column TSV rows (`article_id start end`), technique classification
//! labels are four-column rows (`article_id technique start end`). All
//! offsets are character indexes into the article text, end exclusive.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is not valid UTF-8")]
    InvalidUtf8 { path: PathBuf },
    #[error("{path}: cannot parse article id from file name")]
    BadArticleId { path: PathBuf },
    #[error("{path}: article text is empty")]
    EmptyArticle { path: PathBuf },
    #[error("duplicate article id {id} ({path})")]
    DuplicateArticle { id: u32, path: PathBuf },
    #[error("{path}: no files named article<ID>.txt")]
    NoArticles { path: PathBuf },
    #[error("{path}: {message} at line {line}")]
    Row {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("span {article_id}:{start}-{end} is invalid: {message}")]
    InvalidSpan {
        article_id: u32,
        start: usize,
        end: usize,
        message: String,
    },
}

/// A news article. Character offsets in label files index into `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: u32,
    pub text: String,
}

impl Article {
    pub fn new(id: u32, text: impl Into<String>) -> Self {
        Article { id, text: text.into() }
    }

    /// Length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// The characters in `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> String {
        self.text.chars().skip(start).take(end.saturating_sub(start)).collect()
    }
}

macro_rules! techniques {
    ($( $variant:ident => $canonical:literal, $prose:literal; )*) => {
        /// The 14 propaganda techniques of the technique classification task.
        ///
        /// Declaration order follows descending training-set frequency and is
        /// the class index order used by the classifier.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Technique {
            $( $variant, )*
        }

        impl Technique {
            pub const ALL: [Technique; 14] = [ $( Technique::$variant, )* ];

            /// Official underscore-separated label string.
            pub fn canonical(self) -> &'static str {
                match self { $( Technique::$variant => $canonical, )* }
            }

            /// Human-readable name.
            pub fn prose(self) -> &'static str {
                match self { $( Technique::$variant => $prose, )* }
            }
        }
    };
}

techniques! {
    LoadedLanguage => "Loaded_Language", "Loaded language";
    NameCallingLabeling => "Name_Calling,Labeling", "Name calling, labeling";
    Repetition => "Repetition", "Repetition";
    Doubt => "Doubt", "Doubt";
    ExaggerationMinimisation => "Exaggeration,Minimisation", "Exaggeration, minimisation";
    AppealToFearPrejudice => "Appeal_to_fear-prejudice", "Appeal to fear/prejudice";
    FlagWaving => "Flag-Waving", "Flag-waving";
    CausalOversimplification => "Causal_Oversimplification", "Causal oversimplification";
    AppealToAuthority => "Appeal_to_Authority", "Appeal to authority";
    Slogans => "Slogans", "Slogans";
    WhataboutismStrawManRedHerring => "Whataboutism,Straw_Men,Red_Herring", "Whataboutism, straw man, red herring";
    BlackAndWhiteFallacy => "Black-and-White_Fallacy", "Black-and-white fallacy";
    ThoughtTerminatingCliches => "Thought-terminating_Cliches", "Thought-terminating cliches";
    BandwagonReductioAdHitlerum => "Bandwagon,Reductio_ad_hitlerum", "Bandwagon, reductio ad hitlerum";
}

impl Technique {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Technique> {
        Technique::ALL.get(index).copied()
    }

    /// Parse a human-readable name, case-insensitively.
    pub fn from_prose(name: &str) -> Option<Technique> {
        let name = name.trim().to_lowercase();
        Technique::ALL.into_iter().find(|t| t.prose().to_lowercase() == name)
    }

    fn valid_names() -> String {
        Technique::ALL
            .iter()
            .map(|t| t.canonical())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown technique {given:?}; valid techniques: {valid}")]
pub struct UnknownTechnique {
    pub given: String,
    pub valid: String,
}

impl FromStr for Technique {
    type Err = UnknownTechnique;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .into_iter()
            .find(|t| t.canonical() == s)
            .ok_or_else(|| UnknownTechnique {
                given: s.to_string(),
                valid: Technique::valid_names(),
            })
    }
}

/// A character range `[start, end)` of one article, optionally labeled with
/// a technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub article_id: u32,
    pub start: usize,
    pub end: usize,
    pub technique: Option<Technique>,
}

impl LabeledSpan {
    pub fn new(article_id: u32, start: usize, end: usize) -> Self {
        LabeledSpan {
            article_id,
            start,
            end,
            technique: None,
        }
    }

    pub fn with_technique(mut self, technique: Technique) -> Self {
        self.technique = Some(technique);
        self
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Number of characters shared with `other` (0 across articles).
    pub fn intersection(&self, other: &LabeledSpan) -> usize {
        if self.article_id != other.article_id {
            return 0;
        }
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    pub fn key(&self) -> (u32, usize, usize) {
        (self.article_id, self.start, self.end)
    }

    /// Check `0 <= start < end <= text_len`.
    pub fn validate(&self, text_len: usize) -> Result<(), CorpusError> {
        let message = if self.end <= self.start {
            "inverted span"
        } else if self.end > text_len {
            "span extends past end of article"
        } else {
            return Ok(());
        };
        Err(CorpusError::InvalidSpan {
            article_id: self.article_id,
            start: self.start,
            end: self.end,
            message: message.to_string(),
        })
    }
}

/// How label-file offsets count characters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexConvention {
    /// Unicode scalar values (Rust `char`s).
    #[default]
    Chars,
    /// UTF-16 code units.
    Utf16,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip malformed rows with a warning instead of failing.
    pub lenient: bool,
    pub convention: IndexConvention,
}

/// Articles plus spans, with every span resolved against its article.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    spans: Vec<LabeledSpan>,
    index: HashMap<u32, usize>,
}

impl Corpus {
    pub fn new(articles: Vec<Article>, spans: Vec<LabeledSpan>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(articles.len());
        for (i, article) in articles.iter().enumerate() {
            if index.insert(article.id, i).is_some() {
                return Err(CorpusError::DuplicateArticle {
                    id: article.id,
                    path: PathBuf::new(),
                });
            }
        }
        let lengths: HashMap<u32, usize> = articles.iter().map(|a| (a.id, a.char_len())).collect();
        for span in &spans {
            let len = lengths.get(&span.article_id).ok_or(CorpusError::InvalidSpan {
                article_id: span.article_id,
                start: span.start,
                end: span.end,
                message: "unknown article id".into(),
            })?;
            span.validate(*len)?;
        }
        Ok(Corpus { articles, spans, index })
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn spans(&self) -> &[LabeledSpan] {
        &self.spans
    }

    pub fn article(&self, id: u32) -> Option<&Article> {
        self.index.get(&id).map(|&i| &self.articles[i])
    }

    /// Spans of one article, in file order.
    pub fn spans_of(&self, id: u32) -> impl Iterator<Item = &LabeledSpan> {
        self.spans.iter().filter(move |s| s.article_id == id)
    }
}

fn article_id_from_name(name: &str) -> Option<Option<u32>> {
    let digits = name.strip_prefix("article")?.strip_suffix(".txt")?;
    Some(digits.parse().ok())
}

/// Read every `article<ID>.txt` file in `dir`, sorted by id.
///
/// Other files are ignored, but a non-empty directory without a single
/// article file is an error (unless lenient).
pub fn load_articles(dir: impl AsRef<Path>) -> Result<Vec<Article>, CorpusError> {
    load_articles_with(dir, &LoadOptions::default())
}

pub fn load_articles_with(dir: impl AsRef<Path>, options: &LoadOptions) -> Result<Vec<Article>, CorpusError> {
    let dir = dir.as_ref();
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    let mut other_files = 0usize;
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        match article_id_from_name(&name) {
            Some(Some(id)) => paths.push((id, path)),
            Some(None) => {
                if options.lenient {
                    log::warn!("skipping {}: non-numeric article id", path.display());
                } else {
                    return Err(CorpusError::BadArticleId { path });
                }
            }
            None => {
                log::debug!("ignoring {}", path.display());
                other_files += 1;
            }
        }
    }
    if paths.is_empty() && other_files > 0 && !options.lenient {
        return Err(CorpusError::NoArticles {
            path: dir.to_path_buf(),
        });
    }
    paths.sort();

    let mut articles: Vec<Article> = Vec::with_capacity(paths.len());
    for (id, path) in paths {
        if articles.last().is_some_and(|a| a.id == id) {
            return Err(CorpusError::DuplicateArticle { id, path });
        }
        let bytes = fs::read(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| CorpusError::InvalidUtf8 { path: path.clone() })?;
        if text.is_empty() {
            if options.lenient {
                log::warn!("skipping empty article {}", path.display());
                continue;
            }
            return Err(CorpusError::EmptyArticle { path });
        }
        articles.push(Article { id, text });
    }
    Ok(articles)
}

/// Per-article text information needed to validate and convert offsets.
struct ArticleBounds<'a> {
    texts: HashMap<u32, (&'a str, usize)>,
}

impl<'a> ArticleBounds<'a> {
    fn new(articles: &'a [Article]) -> Self {
        ArticleBounds {
            texts: articles
                .iter()
                .map(|a| (a.id, (a.text.as_str(), a.char_len())))
                .collect(),
        }
    }
}

fn parse_rows<F>(
    path: &Path,
    articles: &[Article],
    options: &LoadOptions,
    mut parse: F,
) -> Result<Vec<LabeledSpan>, CorpusError>
where
    F: FnMut(&[&str]) -> Result<LabeledSpan, String>,
{
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::InvalidUtf8 {
        path: path.to_path_buf(),
    })?;
    let bounds = ArticleBounds::new(articles);
    let mut spans = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let columns: Vec<&str> = line.split('\t').collect();
        let parsed = parse(&columns).and_then(|span| {
            let (article_text, len) = bounds
                .texts
                .get(&span.article_id)
                .ok_or_else(|| format!("unknown article id {}", span.article_id))?;
            let span = match options.convention {
                IndexConvention::Chars => span,
                IndexConvention::Utf16 => utf16_span_to_chars(article_text, span)?,
            };
            if span.end <= span.start {
                return Err("inverted span".to_string());
            }
            if span.end > *len {
                return Err(format!("span end {} exceeds article length {}", span.end, len));
            }
            Ok(span)
        });
        match parsed {
            Ok(span) => spans.push(span),
            Err(message) if options.lenient => {
                log::warn!("{}: skipping line {}: {}", path.display(), line_no, message);
            }
            Err(message) => {
                return Err(CorpusError::Row {
                    path: path.to_path_buf(),
                    line: line_no,
                    message,
                })
            }
        }
    }
    Ok(spans)
}

fn parse_field<T: FromStr>(value: &str, what: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse {what} {value:?}"))
}

fn expect_columns(columns: &[&str], n: usize) -> Result<(), String> {
    if columns.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} columns, found {}", columns.len()))
    }
}

/// Load a three-column span identification label file.
pub fn load_si_labels(
    path: impl AsRef<Path>,
    articles: &[Article],
    options: &LoadOptions,
) -> Result<Vec<LabeledSpan>, CorpusError> {
    parse_rows(path.as_ref(), articles, options, |cols| {
        expect_columns(cols, 3)?;
        Ok(LabeledSpan::new(
            parse_field(cols[0], "article id")?,
            parse_field(cols[1], "start")?,
            parse_field(cols[2], "end")?,
        ))
    })
}

/// Load a four-column technique classification label file.
pub fn load_tc_labels(
    path: impl AsRef<Path>,
    articles: &[Article],
    options: &LoadOptions,
) -> Result<Vec<LabeledSpan>, CorpusError> {
    parse_rows(path.as_ref(), articles, options, |cols| {
        expect_columns(cols, 4)?;
        let technique: Technique = cols[1].parse().map_err(|e: UnknownTechnique| e.to_string())?;
        Ok(LabeledSpan::new(
            parse_field(cols[0], "article id")?,
            parse_field(cols[2], "start")?,
            parse_field(cols[3], "end")?,
        )
        .with_technique(technique))
    })
}

/// Load spans to be classified: either three-column rows, or four-column
/// rows whose technique column is ignored (task templates carry `?` there).
pub fn load_span_keys(
    path: impl AsRef<Path>,
    articles: &[Article],
    options: &LoadOptions,
) -> Result<Vec<LabeledSpan>, CorpusError> {
    parse_rows(path.as_ref(), articles, options, |cols| {
        let (start, end) = match cols.len() {
            3 => (cols[1], cols[2]),
            4 => (cols[2], cols[3]),
            n => return Err(format!("expected 3 or 4 columns, found {n}")),
        };
        Ok(LabeledSpan::new(
            parse_field(cols[0], "article id")?,
            parse_field(start, "start")?,
            parse_field(end, "end")?,
        ))
    })
}

/// Write spans in label-file format, sorted by `(article_id, start, end)`.
///
/// Spans without a technique cannot be written with `with_technique`.
pub fn write_predictions(
    spans: &[LabeledSpan],
    path: impl AsRef<Path>,
    with_technique: bool,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| (s.article_id, s.start, s.end, s.technique));
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for span in &sorted {
        if with_technique {
            let technique = span.technique.ok_or_else(|| CorpusError::InvalidSpan {
                article_id: span.article_id,
                start: span.start,
                end: span.end,
                message: "technique missing".into(),
            })?;
            writeln!(out, "{}\t{}\t{}\t{}", span.article_id, technique, span.start, span.end)
        } else {
            writeln!(out, "{}\t{}\t{}", span.article_id, span.start, span.end)
        }
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Convert a char index to a UTF-16 offset. Indexes past the end clamp.
pub fn char_to_utf16(text: &str, char_index: usize) -> usize {
    text.chars().take(char_index).map(char::len_utf16).sum()
}

/// Convert a UTF-16 offset to a char index; `None` inside a surrogate pair
/// or past the end.
pub fn utf16_to_char(text: &str, utf16_index: usize) -> Option<usize> {
    let mut units = 0;
    for (i, c) in text.chars().enumerate() {
        if units == utf16_index {
            return Some(i);
        }
        if units > utf16_index {
            return None;
        }
        units += c.len_utf16();
    }
    (units == utf16_index).then(|| text.chars().count())
}

fn utf16_span_to_chars(text: &str, span: LabeledSpan) -> Result<LabeledSpan, String> {
    let convert = |i| utf16_to_char(text, i).ok_or_else(|| format!("UTF-16 offset {i} is not a character boundary"));
    Ok(LabeledSpan {
        start: convert(span.start)?,
        end: convert(span.end)?,
        ..span
    })
}

/// Re-express char-indexed spans as UTF-16 offsets for writing.
pub fn spans_to_utf16(spans: &[LabeledSpan], articles: &[Article]) -> Vec<LabeledSpan> {
    let texts: HashMap<u32, &str> = articles.iter().map(|a| (a.id, a.text.as_str())).collect();
    spans
        .iter()
        .map(|s| match texts.get(&s.article_id) {
            Some(text) => LabeledSpan {
                start: char_to_utf16(text, s.start),
                end: char_to_utf16(text, s.end),
                ..*s
            },
            None => *s,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn stop_them() -> Vec<Article> {
        vec![Article::new(111, "Stop them.")]
    }

    #[test]
    fn technique_strings_are_a_bijection() {
        for t in Technique::ALL {
            assert_eq!(t.canonical().parse::<Technique>().unwrap(), t);
            assert_eq!(Technique::from_prose(t.prose()), Some(t));
            assert_eq!(Technique::from_index(t.index()), Some(t));
        }
        let mut names: Vec<_> = Technique::ALL.iter().map(|t| t.canonical()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 14);
    }

    #[test]
    fn load_articles_empty_dir() {
        let dir = TempDir::new().unwrap();
        assert!(load_articles(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn load_articles_reads_verbatim() {
        let dir = TempDir::new().unwrap();
        write(dir.path(), "article111.txt", "Stop them.");
        let articles = load_articles(dir.path()).unwrap();
        assert_eq!(articles, stop_them());
    }

    #[test]
    fn load_articles_rejects_dir_without_articles() {
        let dir = TempDir::new().unwrap();
        write(dir.path(), "notes.txt", "hello");
        assert!(matches!(load_articles(dir.path()), Err(CorpusError::NoArticles { .. })));
        let lenient = LoadOptions {
            lenient: true,
            ..Default::default()
        };
        assert!(load_articles_with(dir.path(), &lenient).unwrap().is_empty());
    }

    #[test]
    fn load_articles_rejects_bad_id_and_utf8() {
        let dir = TempDir::new().unwrap();
        write(dir.path(), "articleXY.txt", "x");
        let err = load_articles(dir.path()).unwrap_err();
        assert!(err.to_string().contains("articleXY.txt"));

        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("article1.txt"), [0xff, 0xfe]).unwrap();
        let err = load_articles(dir.path()).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidUtf8 { .. }));
        assert!(err.to_string().contains("article1.txt"));
    }

    #[test]
    fn si_labels_parse_and_validate() {
        let dir = TempDir::new().unwrap();
        let ok = write(dir.path(), "si.tsv", "111\t0\t4\n");
        let spans = load_si_labels(&ok, &stop_them(), &LoadOptions::default()).unwrap();
        assert_eq!(spans, vec![LabeledSpan::new(111, 0, 4)]);

        let empty = write(dir.path(), "empty.tsv", "");
        assert!(load_si_labels(&empty, &stop_them(), &LoadOptions::default())
            .unwrap()
            .is_empty());

        let inverted = write(dir.path(), "inv.tsv", "111\t9\t5\n");
        let err = load_si_labels(&inverted, &stop_them(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("inverted span at line 1"), "{err}");

        let long = write(dir.path(), "long.tsv", "111\t0\t4\n111\t0\t11\n");
        let err = load_si_labels(&long, &stop_them(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::Row { line: 2, .. }));

        let unknown = write(dir.path(), "unk.tsv", "7\t0\t1\n");
        let err = load_si_labels(&unknown, &stop_them(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("unknown article id 7"));
    }

    #[test]
    fn lenient_mode_skips_bad_rows() {
        let dir = TempDir::new().unwrap();
        let path = write(dir.path(), "si.tsv", "111\t9\t5\nnot a row\n111\t5\t9\n");
        let options = LoadOptions {
            lenient: true,
            ..Default::default()
        };
        let spans = load_si_labels(&path, &stop_them(), &options).unwrap();
        assert_eq!(spans, vec![LabeledSpan::new(111, 5, 9)]);
    }

    #[test]
    fn tc_labels_reject_unknown_technique() {
        let dir = TempDir::new().unwrap();
        let path = write(dir.path(), "tc.tsv", "111\tSarcasm\t0\t4\n");
        let err = load_tc_labels(&path, &stop_them(), &LoadOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Sarcasm"));
        assert!(msg.contains("Loaded_Language") && msg.contains("Bandwagon,Reductio_ad_hitlerum"));
    }

    #[test]
    fn write_predictions_formats() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("out.tsv");
        write_predictions(&[], &path, false).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");

        write_predictions(&[LabeledSpan::new(111, 0, 4)], &path, false).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "111\t0\t4\n");
        assert_eq!(
            load_si_labels(&path, &stop_them(), &LoadOptions::default()).unwrap(),
            vec![LabeledSpan::new(111, 0, 4)]
        );

        let tc = LabeledSpan::new(111, 0, 4).with_technique(Technique::LoadedLanguage);
        write_predictions(&[tc], &path, true).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "111\tLoaded_Language\t0\t4\n");
        assert_eq!(
            load_tc_labels(&path, &stop_them(), &LoadOptions::default()).unwrap(),
            vec![tc]
        );
        assert!(write_predictions(&[LabeledSpan::new(111, 0, 4)], &path, true).is_err());
    }

    #[test]
    fn span_keys_accept_both_layouts() {
        let dir = TempDir::new().unwrap();
        let path = write(dir.path(), "keys.tsv", "111\t?\t0\t4\n111\t5\t9\n");
        let spans = load_span_keys(&path, &stop_them(), &LoadOptions::default()).unwrap();
        assert_eq!(spans, vec![LabeledSpan::new(111, 0, 4), LabeledSpan::new(111, 5, 9)]);
    }

    #[test]
    fn utf16_convention() {
        // U+1F600 takes two UTF-16 units.
        let articles = vec![Article::new(1, "a\u{1F600}bc")];
        assert_eq!(utf16_to_char("a\u{1F600}bc", 3), Some(2));
        assert_eq!(utf16_to_char("a\u{1F600}bc", 2), None);
        assert_eq!(utf16_to_char("a\u{1F600}bc", 5), Some(4));
        assert_eq!(char_to_utf16("a\u{1F600}bc", 2), 3);

        let dir = TempDir::new().unwrap();
        let path = write(dir.path(), "si.tsv", "1\t3\t5\n");
        let options = LoadOptions {
            convention: IndexConvention::Utf16,
            ..Default::default()
        };
        let spans = load_si_labels(&path, &articles, &options).unwrap();
        assert_eq!(spans, vec![LabeledSpan::new(1, 2, 4)]);
        assert_eq!(spans_to_utf16(&spans, &articles), vec![LabeledSpan::new(1, 3, 5)]);
    }

    #[test]
    fn corpus_validates_spans() {
        assert!(Corpus::new(stop_them(), vec![LabeledSpan::new(111, 0, 4)]).is_ok());
        assert!(Corpus::new(stop_them(), vec![LabeledSpan::new(2, 0, 4)]).is_err());
        assert!(Corpus::new(stop_them(), vec![LabeledSpan::new(111, 4, 4)]).is_err());
        let dup = vec![Article::new(1, "a"), Article::new(1, "b")];
        assert!(Corpus::new(dup, vec![]).is_err());
    }
}
