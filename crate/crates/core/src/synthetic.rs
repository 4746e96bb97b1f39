//! Small generated corpora with known answers, for tests, examples and
//! smoke runs of the full pipeline.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::Lexicon;
use crate::corpus::{Article, LabeledSpan, Technique};
use crate::embeddings::{EmbeddingKey, EmbeddingTable};
use crate::features::NerTag;
use crate::segment::segment_article;

#[rustfmt::skip]
const LOADED: &[&str] = &[
    "traitors", "disgraceful", "evil", "corrupt", "shameful", "thugs", "treacherous", "vile", "sinister", "radical",
    "criminal", "crooked",
];

#[rustfmt::skip]
const NEUTRAL: &[&str] = &[
    "the", "council", "met", "on", "tuesday", "to", "discuss", "budget", "report", "and", "road", "repairs", "near",
    "station", "officials", "said", "plans", "were", "reviewed", "by", "staff", "a", "new", "school", "opened",
    "in", "town", "residents", "asked", "about", "water", "prices",
];

#[rustfmt::skip]
const DOUBT: &[&str] = &[
    "allegedly", "supposedly", "questionable", "dubious", "unproven", "claimed", "doubtful", "purported",
];

#[rustfmt::skip]
const SLOGAN: &[&str] = &[
    "united", "forever", "stand", "strong", "together", "freedom", "never", "surrender",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub articles: usize,
    pub sentences_per_article: usize,
    pub dim: usize,
    /// Uniform noise amplitude added to every token vector.
    pub noise: f32,
    pub seed: u64,
    /// First article id; later ones count up.
    pub first_id: u32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            articles: 50,
            sentences_per_article: 10,
            dim: 8,
            noise: 0.1,
            seed: 7,
            first_id: 1000,
        }
    }
}

/// Generated articles with gold spans and a vector for every token.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub articles: Vec<Article>,
    pub spans: Vec<LabeledSpan>,
    pub embeddings: EmbeddingTable,
}

impl SyntheticCorpus {
    /// Split by article: the first `n` articles and the rest.
    pub fn split(&self, n: usize) -> (SyntheticCorpus, SyntheticCorpus) {
        let ids: Vec<u32> = self.articles.iter().take(n).map(|a| a.id).collect();
        let part = |keep: bool| {
            let mut embeddings = EmbeddingTable::new(self.embeddings.dim());
            for (k, v) in self.embeddings.iter() {
                if ids.contains(&k.article_id) == keep {
                    embeddings.insert(k, v).expect("same dim");
                }
            }
            SyntheticCorpus {
                articles: self
                    .articles
                    .iter()
                    .filter(|a| ids.contains(&a.id) == keep)
                    .cloned()
                    .collect(),
                spans: self
                    .spans
                    .iter()
                    .filter(|s| ids.contains(&s.article_id) == keep)
                    .copied()
                    .collect(),
                embeddings,
            }
        };
        (part(true), part(false))
    }
}

struct Vectors {
    dim: usize,
    noise: f32,
    word: HashMap<String, Vec<f32>>,
}

impl Vectors {
    fn new(dim: usize, noise: f32) -> Self {
        Vectors {
            dim,
            noise,
            word: HashMap::new(),
        }
    }

    /// Fixed random vector for `word`, with `axis` (if any) set to 1.
    fn register(&mut self, word: &str, axis: Option<usize>, rng: &mut ChaCha8Rng) {
        let mut v: Vec<f32> = (0..self.dim).map(|_| rng.gen_range(-0.3..0.3)).collect();
        if let Some(a) = axis {
            v[a] = 1.0;
        }
        self.word.insert(word.to_string(), v);
    }

    fn table(&self, articles: &[Article], rng: &mut ChaCha8Rng) -> EmbeddingTable {
        let mut table = EmbeddingTable::new(self.dim);
        for article in articles {
            for sentence in segment_article(article) {
                for t in &sentence.tokens {
                    let base = self.word.get(&t.text.to_lowercase()).map(Vec::as_slice);
                    let v: Vec<f32> = (0..self.dim)
                        .map(|i| base.map_or(0.0, |b| b[i]) + rng.gen_range(-self.noise..=self.noise))
                        .collect();
                    let key = EmbeddingKey::new(article.id, sentence.index as u32, t.token_index as u32);
                    table.insert(key, &v).expect("fresh key");
                }
            }
        }
        table
    }
}

struct Builder {
    text: String,
    chars: usize,
}

impl Builder {
    fn new() -> Self {
        Builder {
            text: String::new(),
            chars: 0,
        }
    }

    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }

    /// Append space-separated words; returns their char range.
    fn words(&mut self, words: &[&str]) -> (usize, usize) {
        if self.chars > 0 && !self.text.ends_with('\n') {
            self.push(" ");
        }
        let start = self.chars;
        self.push(&words.join(" "));
        (start, self.chars)
    }
}

fn pick<'a>(vocab: &[&'a str], n: usize, rng: &mut ChaCha8Rng) -> Vec<&'a str> {
    (0..n)
        .map(|_| *vocab.choose(rng).expect("non-empty vocabulary"))
        .collect()
}

/// Span identification corpus. Loaded words only occur inside gold spans,
/// neutral words only outside, and the two sets differ on a dedicated
/// embedding axis.
pub fn separable_si(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut vectors = Vectors::new(config.dim, config.noise);
    for w in LOADED {
        vectors.register(w, Some(0), &mut rng);
    }
    for w in NEUTRAL {
        vectors.register(w, None, &mut rng);
    }
    let mut articles = Vec::with_capacity(config.articles);
    let mut spans = Vec::new();
    for a in 0..config.articles {
        let id = config.first_id + a as u32;
        let mut b = Builder::new();
        for s in 0..config.sentences_per_article {
            if s > 0 {
                b.push("\n");
            }
            let before = rng.gen_range(1..=4);
            b.words(&pick(NEUTRAL, before, &mut rng));
            let run = rng.gen_range(1..=3);
            let (start, end) = b.words(&pick(LOADED, run, &mut rng));
            spans.push(LabeledSpan::new(id, start, end));
            let after = rng.gen_range(1..=4);
            b.words(&pick(NEUTRAL, after, &mut rng));
            if rng.gen_bool(0.3) {
                let (start, end) = b.words(&pick(LOADED, 1, &mut rng));
                spans.push(LabeledSpan::new(id, start, end));
                b.words(&pick(NEUTRAL, 1, &mut rng));
            }
            b.push(".");
        }
        articles.push(Article::new(id, b.text));
    }
    let embeddings = vectors.table(&articles, &mut rng);
    SyntheticCorpus {
        articles,
        spans,
        embeddings,
    }
}

/// The three techniques of [`three_class_tc`].
pub const TC_CLASSES: [Technique; 3] = [Technique::LoadedLanguage, Technique::Doubt, Technique::Slogans];

/// Technique classification corpus with one span per sentence drawn from
/// a class-specific vocabulary.
pub fn three_class_tc(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocabularies = [LOADED, DOUBT, SLOGAN];
    let mut vectors = Vectors::new(config.dim, config.noise);
    for (c, vocab) in vocabularies.iter().enumerate() {
        for w in *vocab {
            vectors.register(w, Some(c % config.dim), &mut rng);
        }
    }
    for w in NEUTRAL {
        vectors.register(w, None, &mut rng);
    }
    let mut articles = Vec::with_capacity(config.articles);
    let mut spans = Vec::new();
    for a in 0..config.articles {
        let id = config.first_id + a as u32;
        let mut b = Builder::new();
        for s in 0..config.sentences_per_article {
            if s > 0 {
                b.push("\n");
            }
            let c = rng.gen_range(0..TC_CLASSES.len());
            b.words(&pick(NEUTRAL, rng.gen_range(1..=3), &mut rng));
            let (start, end) = b.words(&pick(vocabularies[c], rng.gen_range(1..=4), &mut rng));
            spans.push(LabeledSpan::new(id, start, end).with_technique(TC_CLASSES[c]));
            b.words(&pick(NEUTRAL, rng.gen_range(1..=3), &mut rng));
            b.push(".");
        }
        articles.push(Article::new(id, b.text));
    }
    let embeddings = vectors.table(&articles, &mut rng);
    SyntheticCorpus {
        articles,
        spans,
        embeddings,
    }
}

/// A handful of synonyms and names matching the synthetic vocabularies.
pub fn demo_lexicon() -> Lexicon {
    let mut lex = Lexicon::new()
        .with_synonyms("traitors", &["turncoats", "betrayers"])
        .with_synonyms("corrupt", &["crooked", "venal"])
        .with_synonyms("evil", &["wicked", "malevolent"])
        .with_synonyms("disgraceful", &["shameful", "scandalous"])
        .with_synonyms("dubious", &["questionable", "suspect"])
        .with_synonyms("claimed", &["alleged", "asserted"])
        .with_synonyms("freedom", &["liberty"])
        .with_synonyms("strong", &["firm", "steadfast"])
        .with_synonyms("stand", &["hold"])
        .with_synonyms("stop", &["halt", "end"])
        .with_synonyms("invasion", &["incursion", "attack"]);
    for name in ["John", "Mary", "Ahmed", "Li Wei"] {
        lex.add_name(NerTag::PERSON, name);
    }
    for name in ["Rome", "Paris", "Nairobi", "New York"] {
        lex.add_name(NerTag::GPE, name);
    }
    for name in ["the Senate", "Acme Corp"] {
        lex.add_name(NerTag::ORG, name);
    }
    lex
}
