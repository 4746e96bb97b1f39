//! Silver training data for the technique classifier.
//!
//! New samples are copies of gold span texts with some content words swapped
//! for synonyms and every recognized proper noun swapped for another name of
//! the same category. They are detached texts with no article offsets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, LabeledSpan, Technique};
use crate::features::{annotate_pos, Gazetteer, NerTag, PosTag};
use crate::segment::segment_text;
use crate::{Error, Result};

/// Span counts per technique on the official training set, in
/// [`Technique::ALL`] order, reconstructed from the published class
/// proportions of its 6,129 spans. Used when the real label files are not
/// available.
pub const REFERENCE_TRAIN_COUNTS: [usize; 14] = [2145, 1042, 613, 490, 490, 306, 245, 184, 123, 123, 92, 92, 92, 92];

pub const DEFAULT_TOTAL_NEW: usize = 3000;

/// Name categories with swappable entries.
pub const NAME_CATEGORIES: [NerTag; 4] = [NerTag::PERSON, NerTag::ORG, NerTag::GPE, NerTag::LOC];

/// Synonym lists and per-category name lists.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    synonyms: BTreeMap<String, Vec<String>>,
    names: BTreeMap<NerTag, Vec<(String, Vec<String>)>>,
    gazetteer: Gazetteer,
}

// The gazetteer is derived from `names`.
impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.synonyms == other.synonyms && self.names == other.names
    }
}

fn token_texts(text: &str) -> Vec<String> {
    segment_text(text)
        .into_iter()
        .flat_map(|s| s.tokens)
        .map(|t| t.text)
        .collect()
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add alternatives for `word` (matched case-insensitively). The word
    /// itself and duplicates are dropped.
    pub fn add_synonyms<S: AsRef<str>>(&mut self, word: &str, alternatives: &[S]) {
        let key = word.to_lowercase();
        let entry = self.synonyms.entry(key.clone()).or_default();
        for alt in alternatives {
            let alt = alt.as_ref().trim().to_lowercase();
            if !alt.is_empty() && alt != key && !entry.contains(&alt) {
                entry.push(alt);
            }
        }
        if entry.is_empty() {
            self.synonyms.remove(&key);
        }
    }

    pub fn add_name(&mut self, category: NerTag, name: &str) {
        let name = name.trim();
        let tokens = token_texts(name);
        if tokens.is_empty() {
            return;
        }
        let list = self.names.entry(category).or_default();
        if list.iter().any(|(_, t)| *t == tokens) {
            return;
        }
        list.push((name.to_string(), tokens));
        self.gazetteer.insert(name, category);
    }

    pub fn with_synonyms(mut self, word: &str, alternatives: &[&str]) -> Self {
        self.add_synonyms(word, alternatives);
        self
    }

    pub fn with_name(mut self, category: NerTag, name: &str) -> Self {
        self.add_name(category, name);
        self
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.synonyms.get(&word.to_lowercase()).map_or(&[], Vec::as_slice)
    }

    pub fn names(&self, category: NerTag) -> impl Iterator<Item = &str> {
        self.names.get(&category).into_iter().flatten().map(|(n, _)| n.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.synonyms.is_empty() && self.names.is_empty()
    }

    /// Gazetteer over every listed name, usable by the NER tagger.
    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    /// Parse synonym lines of the form `word<TAB>alt1,alt2`.
    pub fn parse_synonyms(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, alts) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("synonym line {}: expected word<TAB>alternatives", i + 1)))?;
            let alts: Vec<&str> = alts.split(',').collect();
            self.add_synonyms(word.trim(), &alts);
        }
        Ok(())
    }

    /// Load a synonym file and every `<CATEGORY>.txt` name list found in
    /// `names_dir` (for example `PERSON.txt`, one name per line).
    pub fn load(synonyms: Option<&Path>, names_dir: Option<&Path>) -> Result<Self> {
        let mut lexicon = Lexicon::new();
        if let Some(path) = synonyms {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            lexicon.parse_synonyms(&text)?;
        }
        if let Some(dir) = names_dir {
            for category in NAME_CATEGORIES {
                let path = dir.join(format!("{category}.txt"));
                if !path.exists() {
                    continue;
                }
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    lexicon.add_name(category, line);
                }
            }
        }
        Ok(lexicon)
    }
}

fn match_case(template: &str, word: &str) -> String {
    let mut chars = template.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let all_upper = first_upper && template.chars().count() > 1 && template.chars().all(|c| !c.is_lowercase());
    if all_upper {
        word.to_uppercase()
    } else if first_upper {
        let mut w = word.chars();
        w.next()
            .map(|c| c.to_uppercase().chain(w).collect())
            .unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// Result of one substitution pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub text: String,
    pub replaced_tokens: usize,
}

/// Rewrite `text`. Content words (noun, verb, adjective) with synonyms are
/// replaced with probability `replace_prob`; listed names are always
/// replaced when their category has another entry. Returns `None` when
/// nothing changed.
pub fn augment_span<R: Rng>(text: &str, lexicon: &Lexicon, replace_prob: f64, rng: &mut R) -> Option<Augmented> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    let mut replaced = 0;
    for sentence in segment_text(text) {
        let pos = annotate_pos(&sentence);
        let texts: Vec<&str> = sentence.tokens.iter().map(|t| t.text.as_str()).collect();
        let mut i = 0;
        while i < texts.len() {
            let token = &sentence.tokens[i];
            if let Some((n, category)) = lexicon.gazetteer.longest_match(&texts, i) {
                let matched = &texts[i..i + n];
                let alternatives: Vec<&str> = lexicon.names[&category]
                    .iter()
                    .filter(|(_, toks)| toks.iter().map(String::as_str).ne(matched.iter().copied()))
                    .map(|(name, _)| name.as_str())
                    .collect();
                if !alternatives.is_empty() {
                    let end = sentence.tokens[i + n - 1].end;
                    out.extend(&chars[cursor..token.start]);
                    out.push_str(alternatives[rng.gen_range(0..alternatives.len())]);
                    cursor = end;
                    replaced += n;
                }
                i += n;
                continue;
            }
            if matches!(pos[i], PosTag::NOUN | PosTag::VERB | PosTag::ADJ) {
                let alternatives = lexicon.synonyms(&token.text);
                if !alternatives.is_empty() && rng.gen_bool(replace_prob) {
                    let pick = &alternatives[rng.gen_range(0..alternatives.len())];
                    out.extend(&chars[cursor..token.start]);
                    out.push_str(&match_case(&token.text, pick));
                    cursor = token.end;
                    replaced += 1;
                }
            }
            i += 1;
        }
    }
    out.extend(&chars[cursor..]);
    (replaced > 0 && out != text).then_some(Augmented {
        text: out,
        replaced_tokens: replaced,
    })
}

/// Number of new samples per technique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub current: [usize; 14],
    pub additions: [usize; 14],
}

impl AugmentPlan {
    pub fn empty(current: [usize; 14]) -> Self {
        AugmentPlan {
            current,
            additions: [0; 14],
        }
    }

    pub fn with_addition(mut self, technique: Technique, n: usize) -> Self {
        self.additions[technique.index()] = n;
        self
    }

    /// Counts after the plan is carried out in full.
    pub fn targets(&self) -> [usize; 14] {
        std::array::from_fn(|i| self.current[i] + self.additions[i])
    }

    pub fn total(&self) -> usize {
        self.additions.iter().sum()
    }
}

/// Spread `total_new` samples over every class except the two largest,
/// proportionally to each class's shortfall against the second-largest
/// count. Rounding uses largest remainders, ties to the lower class index.
pub fn plan_targets(counts: &[usize; 14], total_new: i64) -> Result<AugmentPlan> {
    if total_new < 0 {
        return Err(Error::Config(format!(
            "total_new must be non-negative, got {total_new}"
        )));
    }
    let total_new = total_new as usize;
    let mut order: Vec<usize> = (0..14).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let reference = counts[order[1]];
    let mut deficits = [0usize; 14];
    for &c in &order[2..] {
        deficits[c] = reference - counts[c];
    }
    let sum: usize = deficits.iter().sum();
    let mut plan = AugmentPlan::empty(*counts);
    if sum == 0 || total_new == 0 {
        return Ok(plan);
    }
    let mut remainders = Vec::with_capacity(14);
    for (c, &deficit) in deficits.iter().enumerate() {
        let exact = total_new as u128 * deficit as u128;
        plan.additions[c] = (exact / sum as u128) as usize;
        remainders.push((exact % sum as u128, c));
    }
    let left = total_new - plan.total();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(left) {
        plan.additions[c] += 1;
    }
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub replace_prob: f64,
    /// Attempts allowed per requested sample.
    pub attempt_factor: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            replace_prob: 0.3,
            attempt_factor: 10,
            seed: 0,
        }
    }
}

/// Where a classifier sample came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOrigin {
    Gold(LabeledSpan),
    /// Generated from the gold sample at `source_index`.
    Silver {
        source_index: usize,
        replaced_tokens: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcSample {
    pub text: String,
    pub technique: Technique,
    pub origin: SampleOrigin,
}

impl TcSample {
    pub fn is_silver(&self) -> bool {
        matches!(self.origin, SampleOrigin::Silver { .. })
    }

    pub fn gold_span(&self) -> Option<LabeledSpan> {
        match self.origin {
            SampleOrigin::Gold(span) => Some(span.with_technique(self.technique)),
            SampleOrigin::Silver { .. } => None,
        }
    }
}

/// Gold samples for spans that carry a technique, with their article text.
pub fn gold_samples(articles: &[Article], spans: &[LabeledSpan]) -> Result<Vec<TcSample>> {
    let by_id: BTreeMap<u32, &Article> = articles.iter().map(|a| (a.id, a)).collect();
    spans
        .iter()
        .map(|s| {
            let technique = s
                .technique
                .ok_or_else(|| Error::Config(format!("span {:?} has no technique", s.key())))?;
            let article = by_id
                .get(&s.article_id)
                .ok_or_else(|| Error::Config(format!("span {:?} refers to an unloaded article", s.key())))?;
            Ok(TcSample {
                text: article.slice(s.start, s.end),
                technique,
                origin: SampleOrigin::Gold(*s),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentOutcome {
    pub silver: Vec<TcSample>,
    /// Requested minus produced, per class.
    pub shortfall: [usize; 14],
}

impl AugmentOutcome {
    pub fn produced(&self) -> [usize; 14] {
        let mut counts = [0; 14];
        for s in &self.silver {
            counts[s.technique.index()] += 1;
        }
        counts
    }
}

fn class_seed(seed: u64, class: usize) -> u64 {
    seed ^ (class as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Generate the silver samples requested by `plan` from the gold samples
/// of each class. Every class draws from its own seeded stream.
pub fn augment_corpus(
    gold: &[TcSample],
    lexicon: &Lexicon,
    plan: &AugmentPlan,
    config: &AugmentConfig,
) -> AugmentOutcome {
    let mut silver = Vec::new();
    let mut shortfall = [0; 14];
    for technique in Technique::ALL {
        let c = technique.index();
        let wanted = plan.additions[c];
        if wanted == 0 {
            continue;
        }
        let sources: Vec<usize> = gold
            .iter()
            .enumerate()
            .filter(|(_, s)| s.technique == technique && !s.is_silver())
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(class_seed(config.seed, c));
        let mut made = 0;
        let mut attempts = 0;
        while made < wanted && attempts < wanted * config.attempt_factor && !sources.is_empty() {
            attempts += 1;
            let source_index = sources[rng.gen_range(0..sources.len())];
            if let Some(aug) = augment_span(&gold[source_index].text, lexicon, config.replace_prob, &mut rng) {
                silver.push(TcSample {
                    text: aug.text,
                    technique,
                    origin: SampleOrigin::Silver {
                        source_index,
                        replaced_tokens: aug.replaced_tokens,
                    },
                });
                made += 1;
            }
        }
        if made < wanted {
            shortfall[c] = wanted - made;
            log::warn!("{technique}: produced {made} of {wanted} silver samples after {attempts} attempts");
        }
    }
    AugmentOutcome { silver, shortfall }
}

/// Population variance of the class proportions.
pub fn class_proportion_variance(counts: &[usize; 14]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let props: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let mean = 1.0 / 14.0;
    props.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 14.0
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Silver samples as `SILVER<TAB>technique<TAB>text<TAB>source<TAB>replaced`
/// lines. Gold samples are skipped.
pub fn silver_to_tsv(samples: &[TcSample]) -> String {
    let mut out = String::new();
    for s in samples {
        if let SampleOrigin::Silver {
            source_index,
            replaced_tokens,
        } = s.origin
        {
            let _ = writeln!(
                out,
                "SILVER\t{}\t{}\t{source_index}\t{replaced_tokens}",
                s.technique.canonical(),
                escape(&s.text)
            );
        }
    }
    out
}

pub fn silver_from_tsv(text: &str) -> Result<Vec<TcSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |m: String| Error::Config(format!("silver line {}: {m}", i + 1));
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 || cols[0] != "SILVER" {
                return Err(bad(
                    "expected SILVER<TAB>technique<TAB>text<TAB>source<TAB>replaced".into()
                ));
            }
            let technique: Technique = cols[1]
                .parse()
                .map_err(|e: crate::corpus::UnknownTechnique| bad(e.to_string()))?;
            Ok(TcSample {
                text: unescape(cols[2]).map_err(bad)?,
                technique,
                origin: SampleOrigin::Silver {
                    source_index: cols[3]
                        .parse()
                        .map_err(|_| bad(format!("bad source index {:?}", cols[3])))?,
                    replaced_tokens: cols[4].parse().map_err(|_| bad(format!("bad count {:?}", cols[4])))?,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gold(text: &str, t: Technique, i: u32) -> TcSample {
        TcSample {
            text: text.to_string(),
            technique: t,
            origin: SampleOrigin::Gold(LabeledSpan::new(i, 0, text.chars().count())),
        }
    }

    #[test]
    fn empty_lexicon_discards() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(augment_span("stop the invasion", &Lexicon::new(), 1.0, &mut rng), None);
    }

    #[test]
    fn forced_synonym() {
        let lex = Lexicon::new().with_synonyms("stop", &["halt"]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let aug = augment_span("stop the invasion", &lex, 1.0, &mut rng).unwrap();
        assert_eq!(aug.text, "halt the invasion");
        let aug = augment_span("Stop the invasion!", &lex, 1.0, &mut rng).unwrap();
        assert_eq!(aug.text, "Halt the invasion!");
    }

    #[test]
    fn name_swaps_never_keep_the_original() {
        let lex = Lexicon::new()
            .with_name(NerTag::PERSON, "John")
            .with_name(NerTag::PERSON, "Mary")
            .with_name(NerTag::GPE, "Rome")
            .with_name(NerTag::GPE, "Paris");
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let aug = augment_span("John attacked Rome", &lex, 0.3, &mut rng).unwrap();
            assert_eq!(aug.text, "Mary attacked Paris");
            assert_eq!(aug.replaced_tokens, 2);
        }
    }

    #[test]
    fn self_alternatives_are_dropped() {
        let lex = Lexicon::new().with_synonyms("war", &["war", "War"]);
        assert!(lex.synonyms("war").is_empty());
        assert!(lex.is_empty());
    }

    #[test]
    fn parse_synonym_file() {
        let mut lex = Lexicon::new();
        lex.parse_synonyms("stop\thalt,end\n\n# comment\nbig\tlarge\n").unwrap();
        assert_eq!(lex.synonyms("Stop"), ["halt", "end"]);
        assert!(lex.parse_synonyms("oops").is_err());
    }

    #[test]
    fn plan_examples() {
        let counts = REFERENCE_TRAIN_COUNTS;
        assert_eq!(plan_targets(&counts, 0).unwrap().total(), 0);
        assert!(plan_targets(&counts, -1).is_err());

        let plan = plan_targets(&counts, 3000).unwrap();
        assert_eq!(plan.total(), 3000);
        assert_eq!(plan.additions[0], 0);
        assert_eq!(plan.additions[1], 0);
        assert_eq!(plan.additions.iter().filter(|&&n| n > 0).count(), 12);
        assert!(class_proportion_variance(&plan.targets()) < class_proportion_variance(&counts));

        let mut counts = [90; 14];
        counts[0] = 100;
        counts[5] = 60;
        counts[9] = 80;
        let plan = plan_targets(&counts, 40).unwrap();
        assert_eq!(plan.additions[5], 30);
        assert_eq!(plan.additions[9], 10);
        assert_eq!(plan.total(), 40);
    }

    fn demo_lexicon() -> Lexicon {
        Lexicon::new()
            .with_synonyms("enemy", &["foe", "adversary"])
            .with_synonyms("destroy", &["ruin", "wreck"])
            .with_name(NerTag::GPE, "Rome")
            .with_name(NerTag::GPE, "Paris")
    }

    #[test]
    fn corpus_counts_and_determinism() {
        let samples = vec![
            gold("the enemy will destroy us", Technique::Slogans, 1),
            gold("Rome is next", Technique::Slogans, 2),
            gold("nothing to swap", Technique::Doubt, 3),
        ];
        let plan = AugmentPlan::empty([0; 14]).with_addition(Technique::Slogans, 5);
        let config = AugmentConfig::default();
        let out = augment_corpus(&samples, &demo_lexicon(), &plan, &config);
        assert_eq!(out.silver.len(), 5);
        assert!(out
            .silver
            .iter()
            .all(|s| s.is_silver() && s.technique == Technique::Slogans));
        assert_eq!(out.shortfall, [0; 14]);
        assert_eq!(out, augment_corpus(&samples, &demo_lexicon(), &plan, &config));

        let empty = augment_corpus(&samples, &demo_lexicon(), &AugmentPlan::empty([0; 14]), &config);
        assert!(empty.silver.is_empty());

        let plan = AugmentPlan::empty([0; 14]).with_addition(Technique::Doubt, 3);
        let out = augment_corpus(&samples, &demo_lexicon(), &plan, &config);
        assert!(out.silver.is_empty());
        assert_eq!(out.shortfall[Technique::Doubt.index()], 3);
    }

    #[test]
    fn silver_tsv_round_trip() {
        let samples = vec![TcSample {
            text: "tab\there\nand \\ slash".into(),
            technique: Technique::NameCallingLabeling,
            origin: SampleOrigin::Silver {
                source_index: 4,
                replaced_tokens: 2,
            },
        }];
        let tsv = silver_to_tsv(&samples);
        assert_eq!(tsv.lines().count(), 1);
        assert_eq!(tsv.trim_end().split('\t').count(), 5);
        assert_eq!(silver_from_tsv(&tsv).unwrap(), samples);
    }

    proptest! {
        #[test]
        fn silver_keeps_source_label(seed in 0u64..1000) {
            let samples = vec![
                gold("the enemy will destroy Rome", Technique::Slogans, 1),
                gold("destroy the enemy", Technique::FlagWaving, 2),
            ];
            let plan = AugmentPlan::empty([0; 14])
                .with_addition(Technique::Slogans, 3)
                .with_addition(Technique::FlagWaving, 2);
            let config = AugmentConfig { seed, ..Default::default() };
            let out = augment_corpus(&samples, &demo_lexicon(), &plan, &config);
            for s in &out.silver {
                let SampleOrigin::Silver { source_index, .. } = s.origin else { panic!() };
                prop_assert_eq!(s.technique, samples[source_index].technique);
                prop_assert_ne!(&s.text, &samples[source_index].text);
            }
        }
    }
}
