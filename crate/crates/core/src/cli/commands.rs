use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{
    augment_corpus, class_proportion_variance, gold_samples, plan_targets, silver_from_tsv, silver_to_tsv, Lexicon,
    REFERENCE_TRAIN_COUNTS,
};
use crate::classifier::{train_classifier, ClassifierModel};
use crate::corpus::{
    load_articles_with, load_span_keys, load_tc_labels, spans_to_utf16, write_predictions, Article, CorpusError,
    IndexConvention, LabeledSpan, LoadOptions, Technique,
};
use crate::embeddings::{load_embeddings, EmbeddingTable, OovPolicy};
use crate::eval::{
    class_counts, run_ablation, score_si, score_tc, sweep_thresholds, sweep_to_tsv, AblationData, AblationGrid,
    ArticleProbs, Normalization, SiScorer,
};
use crate::features::{Annotator, Gazetteer, KwTable, Sidecar};
use crate::pipeline::{self, AnnotatedArticle, InputSpec};
use crate::segment::{project_labels_with_diagnostics, write_token_stream};
use crate::synthetic::{separable_si, SyntheticConfig};
use crate::tagger::{train_tagger, TaggerModel, UpstreamProbs};
use crate::{Error, Result};

use super::config::RunConfig;
use super::manifest::Manifest;
use super::{Cli, Command, GlobalArgs, TrainArgs};

/// Input layout stored beside a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelInputs {
    spec: InputSpec,
    embedding_dim: usize,
    oov: OovPolicy,
}

const INPUTS_FILE: &str = "inputs.json";
const KW_FILE: &str = "kw.tsv";
const TAGGER_FILE: &str = "tagger.ptag";
const CLASSIFIER_FILE: &str = "classifier.ptc1";

struct Ctx {
    global: GlobalArgs,
    config: RunConfig,
    load: LoadOptions,
}

impl Ctx {
    fn new(global: &GlobalArgs) -> Result<Self> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.set_seed(global.seed.unwrap_or(config.seed));
        if let Some(t) = global.threshold {
            config.tagger.threshold = t;
        }
        if let Some(f) = global.features {
            config.features = f;
        }
        if let Some(s) = &global.sidecar {
            config.resources.sidecar = Some(s.clone());
        }
        let load = LoadOptions {
            lenient: global.lenient,
            convention: if global.utf16 {
                IndexConvention::Utf16
            } else {
                IndexConvention::Chars
            },
        };
        Ok(Ctx {
            global: global.clone(),
            config,
            load,
        })
    }

    fn apply_train(&mut self, train: &TrainArgs, classifier: bool) {
        if classifier {
            let c = &mut self.config.classifier;
            c.epochs = train.epochs.unwrap_or(c.epochs);
            c.hidden_dim = train.hidden.unwrap_or(c.hidden_dim);
            c.learning_rate = train.learning_rate.unwrap_or(c.learning_rate);
        } else {
            let t = &mut self.config.tagger;
            t.epochs = train.epochs.unwrap_or(t.epochs);
            t.hidden_dim = train.hidden.unwrap_or(t.hidden_dim);
            t.learning_rate = train.learning_rate.unwrap_or(t.learning_rate);
        }
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, &self.config)
    }

    fn out_dir(&self) -> Result<&Path> {
        let out = self.global.out.as_path();
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(out)
    }

    fn write(&self, m: &mut Manifest, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_dir()?.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        m.output(name);
        Ok(path)
    }

    fn articles(&self, dir: &Path, m: &mut Manifest) -> Result<Vec<Article>> {
        let articles = load_articles_with(dir, &self.load)?;
        if articles.is_empty() {
            return Err(CorpusError::NoArticles {
                path: dir.to_path_buf(),
            }
            .into());
        }
        m.input(dir)?;
        Ok(articles)
    }

    fn spans(&self, path: &Path, articles: &[Article], m: &mut Manifest) -> Result<Vec<LabeledSpan>> {
        m.input(path)?;
        Ok(load_span_keys(path, articles, &self.load)?)
    }

    fn tc_spans(&self, path: &Path, articles: &[Article], m: &mut Manifest) -> Result<Vec<LabeledSpan>> {
        m.input(path)?;
        Ok(load_tc_labels(path, articles, &self.load)?)
    }

    fn gazetteer(&self, m: &mut Manifest) -> Result<Gazetteer> {
        let dir = self.config.resources.names_dir.as_deref();
        if let Some(d) = dir {
            m.input(d)?;
        }
        Ok(Lexicon::load(None, dir)?.gazetteer().clone())
    }

    fn annotator(&self, m: &mut Manifest) -> Result<Annotator> {
        match &self.config.resources.sidecar {
            Some(path) => {
                m.input(path)?;
                let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
                Ok(Annotator::Sidecar(Sidecar::read(BufReader::new(file))?))
            }
            None => Ok(Annotator::Rules(self.gazetteer(m)?)),
        }
    }

    fn docs(&self, articles: &[Article], m: &mut Manifest) -> Result<Vec<AnnotatedArticle>> {
        Ok(pipeline::annotate_articles(articles, &self.annotator(m)?)?)
    }

    fn embeddings(&self, m: &mut Manifest) -> Result<Option<EmbeddingTable>> {
        match &self.global.embeddings {
            Some(path) => {
                m.input(path)?;
                Ok(Some(load_embeddings(path)?))
            }
            None => Ok(None),
        }
    }

    fn upstream(&self, m: &mut Manifest) -> Result<Option<UpstreamProbs>> {
        match &self.global.upstream_probs {
            Some(path) => {
                m.input(path)?;
                Ok(Some(UpstreamProbs::load(path)?))
            }
            None => Ok(None),
        }
    }

    fn write_spans(
        &self,
        m: &mut Manifest,
        name: &str,
        spans: &[LabeledSpan],
        articles: &[Article],
        tc: bool,
    ) -> Result<()> {
        let spans = match self.load.convention {
            IndexConvention::Utf16 => spans_to_utf16(spans, articles),
            IndexConvention::Chars => spans.to_vec(),
        };
        let path = self.out_dir()?.join(name);
        write_predictions(&spans, &path, tc)?;
        m.output(name);
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn read_kw(path: &Path) -> Result<KwTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(KwTable::from_tsv(&text)?)
}

fn check_embeddings(inputs: &ModelInputs, table: Option<&EmbeddingTable>) -> Result<()> {
    match (inputs.spec.use_embeddings, table) {
        (true, None) => Err(Error::Config(
            "model was trained with embeddings; pass --embeddings".into(),
        )),
        (true, Some(t)) if t.dim() != inputs.embedding_dim => Err(Error::Config(format!(
            "embedding dim {} does not match the model's {}",
            t.dim(),
            inputs.embedding_dim
        ))),
        _ => Ok(()),
    }
}

pub(super) fn execute(cli: &Cli) -> Result<()> {
    let mut ctx = Ctx::new(&cli.global)?;
    match &cli.command {
        Command::Preprocess { articles, labels, tc } => preprocess(&ctx, articles, labels.as_deref(), *tc),
        Command::TrainSi {
            articles,
            labels,
            train,
        } => {
            ctx.apply_train(train, false);
            train_si(&ctx, articles, labels)
        }
        Command::PredictSi { articles, model } => predict_si(&ctx, articles, model),
        Command::TrainTc {
            articles,
            labels,
            silver,
            train,
        } => {
            ctx.apply_train(train, true);
            train_tc(&ctx, articles, labels, silver.as_deref())
        }
        Command::PredictTc { articles, spans, model } => predict_tc(&ctx, articles, spans, model),
        Command::Augment {
            articles,
            labels,
            total_new,
            synonyms,
            names_dir,
        } => {
            if let Some(n) = total_new {
                ctx.config.augment.total_new = *n;
            }
            if synonyms.is_some() {
                ctx.config.resources.synonyms = synonyms.clone();
            }
            if names_dir.is_some() {
                ctx.config.resources.names_dir = names_dir.clone();
            }
            augment(&ctx, articles.as_deref().zip(labels.as_deref()))
        }
        Command::ScoreSi {
            articles,
            pred,
            gold,
            exact,
            per_article,
        } => {
            if *exact {
                ctx.config.score.scorer = SiScorer::Exact;
            }
            if *per_article {
                ctx.config.score.normalization = Normalization::PerArticle;
            }
            cmd_score_si(&ctx, articles, pred, gold)
        }
        Command::ScoreTc { articles, pred, gold } => cmd_score_tc(&ctx, articles, pred, gold),
        Command::Ablate {
            train_articles,
            train_labels,
            dev_articles,
            dev_labels,
            synthetic,
            train,
        } => {
            ctx.apply_train(train, false);
            let paths = match (train_articles, train_labels, dev_articles, dev_labels) {
                (Some(a), Some(b), Some(c), Some(d)) if !synthetic => Some([a.as_path(), b, c, d]),
                _ => None,
            };
            ablate(&ctx, paths)
        }
        Command::SweepThreshold {
            articles,
            labels,
            model,
            from,
            to,
            step,
        } => sweep(&ctx, articles, labels, model, *from, *to, *step),
    }
}

fn preprocess(ctx: &Ctx, dir: &Path, labels: Option<&Path>, tc: bool) -> Result<()> {
    let mut m = ctx.manifest("preprocess");
    let articles = ctx.articles(dir, &mut m)?;
    let spans = match labels {
        Some(p) if tc => ctx.tc_spans(p, &articles, &mut m)?,
        Some(p) => ctx.spans(p, &articles, &mut m)?,
        None => Vec::new(),
    };
    let out = ctx.out_dir()?;
    let stream_path = out.join("tokens.jsonl");
    let file = fs::File::create(&stream_path).map_err(|e| Error::io(&stream_path, e))?;
    let mut stream = BufWriter::new(file);
    let mut labels_tsv = String::new();
    let (mut sentences, mut tokens, mut unprojectable) = (0, 0, 0);
    for article in &articles {
        let sents = crate::segment::segment_article(article);
        write_token_stream(&mut stream, article.id, &sents).map_err(|e| Error::io(&stream_path, e))?;
        sentences += sents.len();
        tokens += sents.iter().map(|s| s.len()).sum::<usize>();
        if labels.is_some() {
            let own: Vec<LabeledSpan> = spans.iter().filter(|s| s.article_id == article.id).copied().collect();
            let (seqs, lost) = project_labels_with_diagnostics(&sents, &own);
            unprojectable += lost;
            for (s, seq) in sents.iter().zip(seqs) {
                let bits: String = seq.0.iter().map(|&b| char::from(b'0' + b)).collect();
                let _ = writeln!(labels_tsv, "{}\t{}\t{bits}", article.id, s.index);
            }
        }
    }
    stream.flush().map_err(|e| Error::io(&stream_path, e))?;
    m.output("tokens.jsonl");
    if labels.is_some() {
        ctx.write(&mut m, "token_labels.tsv", &labels_tsv)?;
    }
    println!("articles\t{}", articles.len());
    println!("sentences\t{sentences}");
    println!("tokens\t{tokens}");
    if labels.is_some() {
        println!("spans\t{}", spans.len());
        println!("unprojectable\t{unprojectable}");
        if tc {
            for (t, n) in Technique::ALL.iter().zip(class_counts(&spans)) {
                println!("  {t}\t{n}\t{:.1}%", 100.0 * n as f64 / spans.len().max(1) as f64);
            }
        }
    }
    m.write(out)
}

fn train_si(ctx: &Ctx, dir: &Path, labels: &Path) -> Result<()> {
    let mut m = ctx.manifest("train-si");
    let articles = ctx.articles(dir, &mut m)?;
    let spans = ctx.spans(labels, &articles, &mut m)?;
    let docs = ctx.docs(&articles, &mut m)?;
    let embeddings = ctx.embeddings(&mut m)?;
    let upstream = ctx.upstream(&mut m)?;
    let kw = pipeline::kw_table(&docs, &spans);
    let spec = InputSpec {
        use_embeddings: embeddings.is_some(),
        features: ctx.config.features,
        upstream: upstream.is_some(),
    };
    let embedding_dim = embeddings.as_ref().map_or(0, EmbeddingTable::dim);
    if spec.input_dim(embedding_dim) == 0 {
        return Err(Error::Config(
            "no model inputs: pass --embeddings, --upstream-probs or enable features".into(),
        ));
    }
    let instances = pipeline::si_instances(
        &docs,
        &spans,
        &kw,
        embeddings.as_ref(),
        ctx.config.oov,
        spec,
        upstream.as_ref(),
    )?;
    let mut config = ctx.config.tagger.clone();
    config.input_dim = spec.input_dim(embedding_dim);
    let (model, report) = train_tagger(&pipeline::tagger_instances(&instances), &config)?;

    let out = ctx.out_dir()?;
    model.save(out.join(TAGGER_FILE))?;
    m.output(TAGGER_FILE);
    let inputs = ModelInputs {
        spec,
        embedding_dim,
        oov: ctx.config.oov,
    };
    ctx.write(&mut m, INPUTS_FILE, &json(&inputs))?;
    ctx.write(&mut m, KW_FILE, &kw.to_tsv())?;
    ctx.write(&mut m, "train_report.json", &json(&report))?;
    println!(
        "trained on {} sentences, input dim {}",
        report.trained_instances, config.input_dim
    );
    if let Some(last) = report.epoch_losses.last() {
        println!("final epoch loss {last:.6}");
    }
    if let Some(h) = &report.holdout {
        println!("holdout token P={:.3} R={:.3} F={:.3}", h.precision, h.recall, h.f1);
    }
    m.write(out)
}

fn load_tagger_dir(dir: &Path, m: &mut Manifest) -> Result<(TaggerModel, ModelInputs, KwTable)> {
    m.input(dir)?;
    let model = TaggerModel::load(dir.join(TAGGER_FILE))?;
    let inputs: ModelInputs = read_json(&dir.join(INPUTS_FILE))?;
    let kw = read_kw(&dir.join(KW_FILE))?;
    Ok((model, inputs, kw))
}

fn si_probs_context(
    ctx: &Ctx,
    articles: &[Article],
    spans: &[LabeledSpan],
    model_dir: &Path,
    m: &mut Manifest,
) -> Result<(TaggerModel, Vec<AnnotatedArticle>, Vec<pipeline::SiSentence>)> {
    let (model, inputs, kw) = load_tagger_dir(model_dir, m)?;
    let docs = ctx.docs(articles, m)?;
    let embeddings = ctx.embeddings(m)?;
    check_embeddings(&inputs, embeddings.as_ref())?;
    let upstream = ctx.upstream(m)?;
    if inputs.spec.upstream && upstream.is_none() {
        return Err(Error::Config(
            "model composes upstream probabilities; pass --upstream-probs".into(),
        ));
    }
    let instances = pipeline::si_instances(
        &docs,
        spans,
        &kw,
        embeddings.as_ref(),
        inputs.oov,
        inputs.spec,
        upstream.as_ref(),
    )?;
    Ok((model, docs, instances))
}

fn predict_si(ctx: &Ctx, dir: &Path, model_dir: &Path) -> Result<()> {
    let mut m = ctx.manifest("predict-si");
    let articles = ctx.articles(dir, &mut m)?;
    let (model, docs, instances) = si_probs_context(ctx, &articles, &[], model_dir, &mut m)?;
    let threshold = ctx.global.threshold.unwrap_or(model.config().threshold);
    let spans = pipeline::predict_spans(&model, &docs, &instances, threshold)?;
    ctx.write_spans(&mut m, "predictions.tsv", &spans, &articles, false)?;
    ctx.write(
        &mut m,
        "probs.tsv",
        &pipeline::predict_upstream(&model, &instances)?.to_tsv(),
    )?;
    println!(
        "{} spans predicted over {} articles at threshold {threshold}",
        spans.len(),
        articles.len()
    );
    m.write(ctx.out_dir()?)
}

fn train_tc(ctx: &Ctx, dir: &Path, labels: &Path, silver: Option<&Path>) -> Result<()> {
    let mut m = ctx.manifest("train-tc");
    let articles = ctx.articles(dir, &mut m)?;
    let spans = ctx.tc_spans(labels, &articles, &mut m)?;
    let mut samples = gold_samples(&articles, &spans)?;
    if let Some(path) = silver {
        m.input(path)?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        samples.extend(silver_from_tsv(&text)?);
    }
    let docs = ctx.docs(&articles, &mut m)?;
    let gazetteer = ctx.gazetteer(&mut m)?;
    let embeddings = ctx.embeddings(&mut m)?;
    let kw = pipeline::kw_table(&docs, &spans);
    let spec = InputSpec {
        use_embeddings: embeddings.is_some(),
        features: ctx.config.features,
        upstream: false,
    };
    let embedding_dim = embeddings.as_ref().map_or(0, EmbeddingTable::dim);
    if spec.input_dim(embedding_dim) == 0 {
        return Err(Error::Config(
            "no model inputs: pass --embeddings or enable features".into(),
        ));
    }
    let instances = pipeline::tc_instances(
        &docs,
        &samples,
        &kw,
        embeddings.as_ref(),
        ctx.config.oov,
        spec,
        &gazetteer,
    )?;
    let pairs: Vec<_> = instances.into_iter().zip(samples.iter().map(|s| s.technique)).collect();
    let mut config = ctx.config.classifier.clone();
    config.input_dim = spec.input_dim(embedding_dim);
    let (model, report) = train_classifier(&pairs, &config)?;

    let out = ctx.out_dir()?;
    model.save(out.join(CLASSIFIER_FILE))?;
    m.output(CLASSIFIER_FILE);
    let inputs = ModelInputs {
        spec,
        embedding_dim,
        oov: ctx.config.oov,
    };
    ctx.write(&mut m, INPUTS_FILE, &json(&inputs))?;
    ctx.write(&mut m, KW_FILE, &kw.to_tsv())?;
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        report: &'a crate::classifier::ClassifierReport,
        gold_samples: usize,
        silver_samples: usize,
    }
    let silver_count = samples.iter().filter(|s| s.is_silver()).count();
    let full = Report {
        report: &report,
        gold_samples: samples.len() - silver_count,
        silver_samples: silver_count,
    };
    ctx.write(&mut m, "train_report.json", &json(&full))?;
    println!(
        "trained on {} spans ({} silver), {} rejected",
        report.trained_instances,
        silver_count,
        report.rejected.len()
    );
    if let Some(last) = report.epoch_losses.last() {
        println!("final epoch loss {last:.6}");
    }
    m.write(out)
}

fn predict_tc(ctx: &Ctx, dir: &Path, spans_path: &Path, model_dir: &Path) -> Result<()> {
    let mut m = ctx.manifest("predict-tc");
    let articles = ctx.articles(dir, &mut m)?;
    let spans = ctx.spans(spans_path, &articles, &mut m)?;
    m.input(model_dir)?;
    let model = ClassifierModel::load(model_dir.join(CLASSIFIER_FILE))?;
    let inputs: ModelInputs = read_json(&model_dir.join(INPUTS_FILE))?;
    let kw = read_kw(&model_dir.join(KW_FILE))?;
    let docs = ctx.docs(&articles, &mut m)?;
    let embeddings = ctx.embeddings(&mut m)?;
    check_embeddings(&inputs, embeddings.as_ref())?;
    let instances = pipeline::span_instances(&docs, &spans, &kw, embeddings.as_ref(), inputs.oov, inputs.spec)?;
    let mut labeled = Vec::with_capacity(spans.len());
    for (span, inst) in spans.iter().zip(&instances) {
        let (t, _) = model.predict(inst)?;
        labeled.push(span.with_technique(t));
    }
    ctx.write_spans(&mut m, "predictions.tsv", &labeled, &articles, true)?;
    println!("labeled {} spans", labeled.len());
    m.write(ctx.out_dir()?)
}

fn augment(ctx: &Ctx, data: Option<(&Path, &Path)>) -> Result<()> {
    let mut m = ctx.manifest("augment");
    let settings = &ctx.config.augment;
    let (counts, samples) = match data {
        Some((dir, labels)) => {
            let articles = ctx.articles(dir, &mut m)?;
            let spans = ctx.tc_spans(labels, &articles, &mut m)?;
            (class_counts(&spans), Some(gold_samples(&articles, &spans)?))
        }
        None => (REFERENCE_TRAIN_COUNTS, None),
    };
    let plan = plan_targets(&counts, settings.total_new)?;
    let mut table = String::from("technique\tcurrent\tadded\ttarget\tproduced\n");
    let mut produced = [0; 14];
    if let Some(samples) = &samples {
        let res = &ctx.config.resources;
        m.input_opt(res.synonyms.as_ref())?;
        m.input_opt(res.names_dir.as_ref())?;
        let lexicon = Lexicon::load(res.synonyms.as_deref(), res.names_dir.as_deref())?;
        let outcome = augment_corpus(samples, &lexicon, &plan, &settings.generation);
        produced = outcome.produced();
        ctx.write(&mut m, "silver.tsv", &silver_to_tsv(&outcome.silver))?;
        let shortfall: usize = outcome.shortfall.iter().sum();
        if shortfall > 0 {
            eprintln!("warning: {shortfall} requested samples could not be generated");
        }
    }
    for (i, t) in Technique::ALL.iter().enumerate() {
        let _ = writeln!(
            table,
            "{t}\t{}\t{}\t{}\t{}",
            counts[i],
            plan.additions[i],
            plan.targets()[i],
            produced[i]
        );
    }
    let after: [usize; 14] = std::array::from_fn(|i| counts[i] + produced[i]);
    let variance_after = if samples.is_some() { after } else { plan.targets() };
    let _ = writeln!(
        table,
        "# proportion variance {:.6e} -> {:.6e}",
        class_proportion_variance(&counts),
        class_proportion_variance(&variance_after)
    );
    print!("{table}");
    ctx.write(&mut m, "plan.tsv", &table)?;
    ctx.write(&mut m, "plan.json", &json(&plan))?;
    m.write(ctx.out_dir()?)
}

fn cmd_score_si(ctx: &Ctx, dir: &Path, pred: &Path, gold: &Path) -> Result<()> {
    let mut m = ctx.manifest("score-si");
    let articles = ctx.articles(dir, &mut m)?;
    let pred = ctx.spans(pred, &articles, &mut m)?;
    let gold = ctx.spans(gold, &articles, &mut m)?;
    let metrics = score_si(&pred, &gold, ctx.config.score);
    println!(
        "P={:.3} R={:.3} F={:.3} gold={} pred={}",
        metrics.precision, metrics.recall, metrics.f1, metrics.gold_count, metrics.pred_count
    );
    ctx.write(&mut m, "score_si.json", &json(&metrics))?;
    m.write(ctx.out_dir()?)
}

fn cmd_score_tc(ctx: &Ctx, dir: &Path, pred: &Path, gold: &Path) -> Result<()> {
    let mut m = ctx.manifest("score-tc");
    let articles = ctx.articles(dir, &mut m)?;
    let pred = ctx.tc_spans(pred, &articles, &mut m)?;
    let gold = ctx.tc_spans(gold, &articles, &mut m)?;
    let metrics = score_tc(&pred, &gold)?;
    let tsv = metrics.to_tsv();
    print!("{tsv}");
    ctx.write(&mut m, "score_tc.tsv", &tsv)?;
    ctx.write(&mut m, "score_tc.json", &json(&metrics))?;
    m.write(ctx.out_dir()?)
}

fn ablate(ctx: &Ctx, paths: Option<[&Path; 4]>) -> Result<()> {
    let mut m = ctx.manifest("ablate");
    let (train_docs, train_spans, dev_docs, dev_spans, embeddings) = match paths {
        Some([ta, tl, da, dl]) => {
            let train_articles = ctx.articles(ta, &mut m)?;
            let train_spans = ctx.spans(tl, &train_articles, &mut m)?;
            let dev_articles = ctx.articles(da, &mut m)?;
            let dev_spans = ctx.spans(dl, &dev_articles, &mut m)?;
            (
                ctx.docs(&train_articles, &mut m)?,
                train_spans,
                ctx.docs(&dev_articles, &mut m)?,
                dev_spans,
                ctx.embeddings(&mut m)?,
            )
        }
        None => {
            let corpus = separable_si(&SyntheticConfig {
                seed: ctx.config.seed,
                ..SyntheticConfig::default()
            });
            let (train, dev) = corpus.split(40);
            let annotator = Annotator::default();
            (
                pipeline::annotate_articles(&train.articles, &annotator)?,
                train.spans,
                pipeline::annotate_articles(&dev.articles, &annotator)?,
                dev.spans,
                Some(corpus.embeddings),
            )
        }
    };
    let upstream = ctx.upstream(&mut m)?;
    let data = AblationData {
        train_docs: &train_docs,
        train_spans: &train_spans,
        dev_docs: &dev_docs,
        dev_spans: &dev_spans,
        embeddings: embeddings.as_ref(),
        oov: ctx.config.oov,
        upstream_train: upstream.as_ref(),
        upstream_dev: upstream.as_ref(),
    };
    let report = run_ablation(&AblationGrid::standard(), &data, &ctx.config.tagger, ctx.config.score);
    print!("{}", report.to_table());
    ctx.write(&mut m, "ablation.tsv", &report.to_tsv())?;
    ctx.write(&mut m, "ablation.jsonl", &report.to_jsonl())?;
    m.write(ctx.out_dir()?)
}

/// Evenly spaced thresholds from `from` to `to` inclusive.
fn threshold_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    let valid = step > 0.0 && from <= to && (0.0..=1.0).contains(&from) && (0.0..=1.0).contains(&to);
    if !valid {
        return Err(Error::Config(format!("bad threshold range {from}..{to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn sweep(ctx: &Ctx, dir: &Path, labels: &Path, model_dir: &Path, from: f64, to: f64, step: f64) -> Result<()> {
    let thresholds = threshold_grid(from, to, step)?;
    let mut m = ctx.manifest("sweep-threshold");
    let articles = ctx.articles(dir, &mut m)?;
    let gold = ctx.spans(labels, &articles, &mut m)?;
    let (model, docs, instances) = si_probs_context(ctx, &articles, &[], model_dir, &mut m)?;
    let probs = pipeline::article_probs(&model, &docs, &instances)?;
    let per_article: Vec<ArticleProbs<'_>> = docs
        .iter()
        .zip(probs)
        .map(|(d, probs)| ArticleProbs {
            article_id: d.article_id,
            sentences: &d.sentences,
            probs,
        })
        .collect();
    let rows = sweep_thresholds(&per_article, &gold, &thresholds, ctx.config.score)?;
    let tsv = sweep_to_tsv(&rows);
    print!("{tsv}");
    ctx.write(&mut m, "sweep.tsv", &tsv)?;
    m.write(ctx.out_dir()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(threshold_grid(0.3, 0.7, 0.1).unwrap(), vec![0.3, 0.4, 0.5, 0.6, 0.7]);
        assert_eq!(threshold_grid(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
        assert!(threshold_grid(0.7, 0.3, 0.1).is_err());
        assert!(threshold_grid(0.3, 0.7, 0.0).is_err());
    }
}
