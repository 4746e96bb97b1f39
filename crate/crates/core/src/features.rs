//! Handcrafted per-token features: part-of-speech and named-entity one-hots
//! plus the propaganda keyword frequency.
//!
//! Tags come either from the built-in rule taggers or from a sidecar file of
//! externally produced annotations aligned with the token stream export.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledSpan;
use crate::segment::{tokenize, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("article {article_id} sentence {sentence_index}: sidecar has {tags} tags for {tokens} tokens")]
    Misaligned {
        article_id: u32,
        sentence_index: usize,
        tokens: usize,
        tags: usize,
    },
    #[error("sidecar line {line}: {message}")]
    Sidecar { line: usize, message: String },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
}

macro_rules! tag_enum {
    ($(#[$meta:meta])* $name:ident { $( $variant:ident ),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[allow(clippy::upper_case_acronyms)]
        pub enum $name { $( $variant, )* }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant, )* ];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn as_str(self) -> &'static str {
                match self { $( $name::$variant => stringify!($variant), )* }
            }

            /// One-hot encoding over [`Self::ALL`].
            pub fn one_hot(self) -> Vec<f64> {
                let mut v = vec![0.0; Self::ALL.len()];
                v[self.index()] = 1.0;
                v
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = AnnotationError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|t| t.as_str() == s)
                    .ok_or_else(|| AnnotationError::UnknownTag(s.to_string()))
            }
        }
    };
}

tag_enum! {
    /// Coarse universal part-of-speech tags.
    PosTag { NOUN, PROPN, VERB, ADJ, ADV, PRON, DET, ADP, NUM, PUNCT, CONJ, PART, INTJ, SYM, X }
}

tag_enum! {
    /// Named-entity categories. `NONE` marks tokens outside any entity.
    NerTag { PERSON, ORG, GPE, LOC, DATE, NUM, OTHER, NONE }
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "every", "each", "some", "any", "no", "all", "both", "either",
    "neither", "another", "such",
];
const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "you",
    "your",
    "yours",
    "yourself",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "who",
    "whom",
    "whose",
    "what",
    "which",
    "someone",
    "something",
    "anyone",
    "anything",
    "everyone",
    "everything",
    "nobody",
    "nothing",
];
const ADPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "into", "onto", "about", "over", "under", "after", "before",
    "between", "through", "during", "without", "within", "against", "among", "around", "behind", "below", "above",
    "across", "toward", "towards", "upon", "via", "like", "than", "since",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "yet", "because", "although", "though", "if", "unless", "while", "whereas", "whether",
    "so",
];
const PARTICLES: &[&str] = &["not", "to", "n't", "up", "off", "out"];
const INTERJECTIONS: &[&str] = &["oh", "wow", "hey", "yes", "ah", "alas", "ouch", "hooray", "yeah"];
const ADVERBS: &[&str] = &[
    "very", "too", "also", "just", "never", "always", "often", "here", "there", "now", "then", "again", "still",
    "already", "soon", "even", "ever", "almost", "quite", "rather", "well", "how", "when", "where", "why", "once",
    "perhaps", "maybe",
];
const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "do", "does", "did", "will",
    "would", "can", "could", "should", "shall", "may", "might", "must", "say", "says", "said", "make", "makes", "made",
    "go", "goes", "went", "take", "takes", "took", "get", "gets", "got", "come", "came", "know", "knew", "think",
    "thought", "see", "saw", "want", "give", "gave", "tell", "told", "stop", "stops", "destroy", "destroys", "attack",
    "attacks", "kill", "kills", "lie", "lies", "fight", "fights", "let", "keep", "put", "become", "became",
];
const ADJECTIVES: &[&str] = &[
    "good",
    "bad",
    "new",
    "old",
    "great",
    "big",
    "small",
    "evil",
    "corrupt",
    "true",
    "false",
    "real",
    "fake",
    "best",
    "worst",
    "many",
    "much",
    "few",
    "other",
    "same",
    "high",
    "low",
    "strong",
    "weak",
    "dangerous",
    "radical",
    "free",
];
const MONTHS: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

fn closed_class(lower: &str) -> Option<PosTag> {
    let tables: [(&[&str], PosTag); 9] = [
        (DETERMINERS, PosTag::DET),
        (PRONOUNS, PosTag::PRON),
        (ADPOSITIONS, PosTag::ADP),
        (CONJUNCTIONS, PosTag::CONJ),
        (PARTICLES, PosTag::PART),
        (INTERJECTIONS, PosTag::INTJ),
        (ADVERBS, PosTag::ADV),
        (VERBS, PosTag::VERB),
        (ADJECTIVES, PosTag::ADJ),
    ];
    tables
        .iter()
        .find(|(words, _)| words.contains(&lower))
        .map(|&(_, tag)| tag)
}

fn is_capitalized(text: &str) -> bool {
    text.chars().next().is_some_and(char::is_uppercase)
}

fn is_numeric(text: &str) -> bool {
    !text.is_empty() && text.chars().all(char::is_numeric)
}

fn rule_pos(text: &str, sentence_initial: bool) -> PosTag {
    let mut chars = text.chars();
    let first = chars.next();
    if let (Some(c), None) = (first, chars.next()) {
        if !c.is_alphanumeric() {
            return if c.is_ascii_punctuation() && !"$%+<=>^|~#&*@".contains(c)
                || matches!(c, '—' | '–' | '“' | '”' | '‘' | '’' | '…' | '«' | '»')
            {
                PosTag::PUNCT
            } else {
                PosTag::SYM
            };
        }
    }
    if is_numeric(text) {
        return PosTag::NUM;
    }
    let lower = text.to_lowercase();
    if let Some(tag) = closed_class(&lower) {
        return tag;
    }
    if is_capitalized(text) && !sentence_initial {
        return PosTag::PROPN;
    }
    let len = lower.chars().count();
    if len > 3 && lower.ends_with("ly") {
        PosTag::ADV
    } else if (len > 4 && lower.ends_with("ing")) || (len > 3 && lower.ends_with("ed")) {
        PosTag::VERB
    } else {
        PosTag::NOUN
    }
}

/// Rule-based POS tags for one sentence.
///
/// Punctuation and symbols are tagged categorically, digit strings as
/// `NUM`, closed-class words from built-in lists, capitalized
/// non-initial words as `PROPN`, then `-ly` adverbs and `-ing`/`-ed`
/// verbs; everything else is a `NOUN`.
pub fn annotate_pos(sentence: &Sentence) -> Vec<PosTag> {
    sentence
        .tokens
        .iter()
        .map(|t| rule_pos(&t.text, t.token_index == 0))
        .collect()
}

/// Name lists for the rule-based entity tagger. Entries may span several
/// tokens and are matched on exact token text, longest match first.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, NerTag>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tag: NerTag) {
        let tokens: Vec<String> = tokenize(name)
            .into_iter()
            .map(|(s, e)| name.chars().skip(s).take(e - s).collect())
            .collect();
        if tokens.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(tokens.len());
        self.entries.insert(tokens, tag);
    }

    pub fn with(mut self, name: &str, tag: NerTag) -> Self {
        self.insert(name, tag);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry starting at `tokens[at]`, as `(token count, tag)`.
    pub fn longest_match<S: AsRef<str>>(&self, tokens: &[S], at: usize) -> Option<(usize, NerTag)> {
        let max = self.max_len.min(tokens.len() - at);
        (1..=max).rev().find_map(|n| {
            let key: Vec<String> = tokens[at..at + n].iter().map(|t| t.as_ref().to_string()).collect();
            self.entries.get(&key).map(|&tag| (n, tag))
        })
    }
}

/// Gazetteer-driven NER tags for one sentence.
///
/// Gazetteer matches win anywhere in the sentence. Unlisted tokens are
/// `NUM` when numeric, `DATE` for capitalized month and weekday names,
/// `OTHER` when capitalized and not sentence-initial, and `NONE` otherwise.
pub fn annotate_ner(sentence: &Sentence, gazetteer: &Gazetteer) -> Vec<NerTag> {
    let texts: Vec<&str> = sentence.tokens.iter().map(|t| t.text.as_str()).collect();
    let mut tags = vec![NerTag::NONE; texts.len()];
    let mut i = 0;
    while i < texts.len() {
        if let Some((n, tag)) = gazetteer.longest_match(&texts, i) {
            tags[i..i + n].fill(tag);
            i += n;
            continue;
        }
        let text = texts[i];
        tags[i] = if is_numeric(text) {
            NerTag::NUM
        } else if MONTHS.contains(&text) {
            NerTag::DATE
        } else if is_capitalized(text) && i > 0 {
            NerTag::OTHER
        } else {
            NerTag::NONE
        };
        i += 1;
    }
    tags
}

/// One line of a sidecar annotation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarRecord {
    pub article_id: u32,
    pub sentence_index: usize,
    pub token_index: usize,
    pub pos: PosTag,
    pub ner: NerTag,
}

type SidecarTag = (usize, PosTag, NerTag);

/// Externally produced tags keyed by `(article_id, sentence_index)`.
#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    sentences: HashMap<(u32, usize), Vec<SidecarTag>>,
}

impl Sidecar {
    pub fn from_records(records: impl IntoIterator<Item = SidecarRecord>) -> Self {
        let mut sentences: HashMap<(u32, usize), Vec<SidecarTag>> = HashMap::new();
        for r in records {
            sentences
                .entry((r.article_id, r.sentence_index))
                .or_default()
                .push((r.token_index, r.pos, r.ner));
        }
        for tags in sentences.values_mut() {
            tags.sort_by_key(|&(i, _, _)| i);
        }
        Sidecar { sentences }
    }

    /// Read JSON-lines sidecar records.
    pub fn read<R: BufRead>(input: R) -> Result<Self, AnnotationError> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let err = |message: String| AnnotationError::Sidecar { line: i + 1, message };
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
        }
        Ok(Self::from_records(records))
    }

    fn aligned(&self, article_id: u32, sentence: &Sentence) -> Result<&[(usize, PosTag, NerTag)], AnnotationError> {
        let tags = self
            .sentences
            .get(&(article_id, sentence.index))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let consistent = tags.len() == sentence.tokens.len() && tags.iter().enumerate().all(|(i, &(ti, _, _))| i == ti);
        if !consistent {
            return Err(AnnotationError::Misaligned {
                article_id,
                sentence_index: sentence.index,
                tokens: sentence.tokens.len(),
                tags: tags.len(),
            });
        }
        Ok(tags)
    }

    pub fn pos(&self, article_id: u32, sentence: &Sentence) -> Result<Vec<PosTag>, AnnotationError> {
        Ok(self.aligned(article_id, sentence)?.iter().map(|t| t.1).collect())
    }

    pub fn ner(&self, article_id: u32, sentence: &Sentence) -> Result<Vec<NerTag>, AnnotationError> {
        Ok(self.aligned(article_id, sentence)?.iter().map(|t| t.2).collect())
    }
}

/// Source of POS and NER tags.
#[derive(Debug, Clone)]
pub enum Annotator {
    Rules(Gazetteer),
    Sidecar(Sidecar),
}

impl Default for Annotator {
    fn default() -> Self {
        Annotator::Rules(Gazetteer::default())
    }
}

impl Annotator {
    pub fn annotate(
        &self,
        article_id: u32,
        sentence: &Sentence,
    ) -> Result<(Vec<PosTag>, Vec<NerTag>), AnnotationError> {
        match self {
            Annotator::Rules(gazetteer) => Ok((annotate_pos(sentence), annotate_ner(sentence, gazetteer))),
            Annotator::Sidecar(sidecar) => Ok((sidecar.pos(article_id, sentence)?, sidecar.ner(article_id, sentence)?)),
        }
    }
}

/// Case-folded counts of training spans that overlap exactly one token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KwTable {
    counts: BTreeMap<String, u32>,
}

impl KwTable {
    pub fn get(&self, token: &str) -> u32 {
        self.counts.get(&token.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn increment(&mut self, token: &str) {
        *self.counts.entry(token.to_lowercase()).or_insert(0) += 1;
    }

    /// `token<TAB>count` lines, sorted by token.
    pub fn to_tsv(&self) -> String {
        self.counts.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }

    pub fn from_tsv(text: &str) -> Result<Self, AnnotationError> {
        let mut counts = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || AnnotationError::Sidecar {
                line: i + 1,
                message: format!("malformed keyword row {line:?}"),
            };
            let (token, count) = line.rsplit_once('\t').ok_or_else(bad)?;
            counts.insert(token.to_string(), count.parse().map_err(|_| bad())?);
        }
        Ok(KwTable { counts })
    }
}

/// Count single-token training spans.
///
/// A span counts toward a token when it overlaps exactly one token of its
/// article; spans overlapping two or more tokens contribute nothing.
pub fn build_kw_table<'a, I>(articles: I, spans: &[LabeledSpan]) -> KwTable
where
    I: IntoIterator<Item = (u32, &'a [Sentence])>,
{
    let by_article: HashMap<u32, &[Sentence]> = articles.into_iter().collect();
    let mut table = KwTable::default();
    for span in spans {
        let Some(sentences) = by_article.get(&span.article_id) else {
            continue;
        };
        let mut hits = sentences
            .iter()
            .filter(|s| s.start < span.end && span.start < s.end)
            .flat_map(|s| &s.tokens)
            .filter(|t| t.start < span.end && span.start < t.end);
        if let (Some(token), None) = (hits.next(), hits.next()) {
            table.increment(&token.text);
        }
    }
    table
}

/// Which handcrafted feature groups enter the model input. Serialized as
/// the comma-separated list accepted by [`FeatureSet::parse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureSet {
    pub pos: bool,
    pub ner: bool,
    pub kw: bool,
}

impl FeatureSet {
    pub const ALL: FeatureSet = FeatureSet {
        pos: true,
        ner: true,
        kw: true,
    };
    pub const NONE: FeatureSet = FeatureSet {
        pos: false,
        ner: false,
        kw: false,
    };

    pub fn dim(&self) -> usize {
        self.pos as usize * PosTag::ALL.len() + self.ner as usize * NerTag::ALL.len() + self.kw as usize
    }

    /// Parse a comma-separated list such as `pos,ner,kw`; `none` or an
    /// empty string disables all groups.
    pub fn parse(list: &str) -> Result<Self, String> {
        let mut set = FeatureSet::NONE;
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.to_lowercase().as_str() {
                "pos" => set.pos = true,
                "ner" => set.ner = true,
                "kw" => set.kw = true,
                "none" => {}
                other => return Err(format!("unknown feature {other:?} (expected pos, ner, kw)")),
            }
        }
        Ok(set)
    }
}

impl TryFrom<String> for FeatureSet {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        FeatureSet::parse(&s)
    }
}

impl From<FeatureSet> for String {
    fn from(set: FeatureSet) -> String {
        set.to_string()
    }
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet::ALL
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.pos, "pos"), (self.ner, "ner"), (self.kw, "kw")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenFeatures {
    pub pos: PosTag,
    pub ner: NerTag,
    pub kw_count: f64,
    /// Upstream propaganda probability, present only for composed models.
    pub upstream_prob: Option<f64>,
}

impl TokenFeatures {
    pub fn pos_onehot(&self) -> Vec<f64> {
        self.pos.one_hot()
    }

    pub fn ner_onehot(&self) -> Vec<f64> {
        self.ner.one_hot()
    }

    /// Append the enabled groups, then the upstream probability if present.
    pub fn extend_into(&self, set: FeatureSet, out: &mut Vec<f64>) {
        if set.pos {
            let base = out.len();
            out.resize(base + PosTag::ALL.len(), 0.0);
            out[base + self.pos.index()] = 1.0;
        }
        if set.ner {
            let base = out.len();
            out.resize(base + NerTag::ALL.len(), 0.0);
            out[base + self.ner.index()] = 1.0;
        }
        if set.kw {
            out.push(self.kw_count);
        }
        if let Some(p) = self.upstream_prob {
            out.push(p);
        }
    }

    pub fn to_vec(&self, set: FeatureSet) -> Vec<f64> {
        let mut v = Vec::with_capacity(set.dim() + 1);
        self.extend_into(set, &mut v);
        v
    }
}

/// Assemble per-token features for a sentence.
pub fn featurize(
    sentence: &Sentence,
    pos: &[PosTag],
    ner: &[NerTag],
    kw_table: &KwTable,
    upstream_probs: Option<&[f64]>,
) -> Vec<TokenFeatures> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| TokenFeatures {
            pos: pos[i],
            ner: ner[i],
            kw_count: kw_table.get(&t.text) as f64,
            upstream_prob: upstream_probs.map(|p| p[i]),
        })
        .collect()
}
