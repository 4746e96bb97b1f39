use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use propspan::synthetic::{separable_si, three_class_tc, SyntheticConfig, SyntheticCorpus};
use tempfile::TempDir;

fn propspan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_propspan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    /// Write a small generated corpus to disk: articles, labels and, for
    /// span data, the embedding table.
    fn new(corpus: SyntheticCorpus, technique_labels: bool) -> Self {
        let dir = TempDir::new().unwrap();
        let articles = dir.path().join("articles");
        fs::create_dir(&articles).unwrap();
        for a in &corpus.articles {
            fs::write(articles.join(format!("article{}.txt", a.id)), &a.text).unwrap();
        }
        let labels: String = corpus
            .spans
            .iter()
            .map(|sp| match sp.technique {
                Some(t) if technique_labels => format!("{}\t{}\t{}\t{}\n", sp.article_id, t, sp.start, sp.end),
                _ => format!("{}\t{}\t{}\n", sp.article_id, sp.start, sp.end),
            })
            .collect();
        fs::write(dir.path().join("labels.tsv"), labels).unwrap();
        corpus.embeddings.write(dir.path().join("emb.pemb")).unwrap();
        Fixture { dir }
    }

    fn si() -> Self {
        Fixture::new(
            separable_si(&SyntheticConfig {
                articles: 8,
                sentences_per_article: 6,
                ..SyntheticConfig::default()
            }),
            false,
        )
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train_si(&self, out: &str) -> Output {
        propspan(&[
            "train-si",
            "--articles",
            s(&self.path("articles")),
            "--labels",
            s(&self.path("labels.tsv")),
            "--embeddings",
            s(&self.path("emb.pemb")),
            "--features",
            "none",
            "--epochs",
            "10",
            "--hidden",
            "8",
            "--learning-rate",
            "0.05",
            "--seed",
            "3",
            "--out",
            s(&self.path(out)),
        ])
    }
}

#[test]
fn score_si_of_gold_against_itself_is_perfect() {
    let fx = Fixture::si();
    let o = propspan(&[
        "score-si",
        "--articles",
        s(&fx.path("articles")),
        "--pred",
        s(&fx.path("labels.tsv")),
        "--gold",
        s(&fx.path("labels.tsv")),
        "--out",
        s(&fx.path("score")),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("P=1.000 R=1.000 F=1.000"), "{}", stdout(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path("score/score_si.json")).unwrap()).unwrap();
    assert_eq!(json["f1"], 1.0);
    assert!(fx.path("score/manifest.json").exists());
}

#[test]
fn empty_article_directory_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("articles");
    fs::create_dir(&empty).unwrap();
    fs::write(dir.path().join("labels.tsv"), "").unwrap();
    let o = propspan(&[
        "preprocess",
        "--articles",
        s(&empty),
        "--out",
        s(&dir.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(propspan(&["train-si"]).status.code(), Some(1));
    assert_eq!(propspan(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        propspan(&["score-si", "--features", "pos,bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(propspan(&["--help"]).status.code(), Some(0));
}

#[test]
fn model_without_inputs_is_a_configuration_error() {
    let fx = Fixture::si();
    let o = propspan(&[
        "train-si",
        "--articles",
        s(&fx.path("articles")),
        "--labels",
        s(&fx.path("labels.tsv")),
        "--features",
        "none",
        "--out",
        s(&fx.path("model")),
    ]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
}

#[test]
fn preprocess_exports_tokens_and_labels() {
    let fx = Fixture::si();
    let out = fx.path("pre");
    let o = propspan(&[
        "preprocess",
        "--articles",
        s(&fx.path("articles")),
        "--labels",
        s(&fx.path("labels.tsv")),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("articles\t8"), "{text}");
    assert!(text.contains("sentences\t48"), "{text}");
    assert!(text.contains("unprojectable\t0"), "{text}");
    let tokens = fs::read_to_string(out.join("tokens.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(tokens.lines().next().unwrap()).unwrap();
    assert!(first.get("article_id").is_some());
    assert!(out.join("token_labels.tsv").exists());
}

#[test]
fn trained_tagger_predictions_score_well_and_runs_reproduce() {
    let fx = Fixture::si();
    assert!(fx.train_si("model").status.success());
    assert!(fx.train_si("model2").status.success());
    for f in [
        "tagger.ptag",
        "inputs.json",
        "kw.tsv",
        "train_report.json",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(fx.path("model").join(f)).unwrap(),
            fs::read(fx.path("model2").join(f)).unwrap(),
            "{f} differs"
        );
    }

    let o = propspan(&[
        "predict-si",
        "--articles",
        s(&fx.path("articles")),
        "--model",
        s(&fx.path("model")),
        "--embeddings",
        s(&fx.path("emb.pemb")),
        "--out",
        s(&fx.path("pred")),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(fx.path("pred/probs.tsv").exists());

    let o = propspan(&[
        "score-si",
        "--articles",
        s(&fx.path("articles")),
        "--pred",
        s(&fx.path("pred/predictions.tsv")),
        "--gold",
        s(&fx.path("labels.tsv")),
        "--out",
        s(&fx.path("score")),
    ]);
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path("score/score_si.json")).unwrap()).unwrap();
    assert!(json["f1"].as_f64().unwrap() > 0.9, "{json}");
}

#[test]
fn predict_without_the_training_embeddings_fails() {
    let fx = Fixture::si();
    assert!(fx.train_si("model").status.success());
    let o = propspan(&[
        "predict-si",
        "--articles",
        s(&fx.path("articles")),
        "--model",
        s(&fx.path("model")),
        "--out",
        s(&fx.path("pred")),
    ]);
    assert!(!o.status.success());
}

#[test]
fn threshold_sweep_has_monotone_predicted_mass() {
    let fx = Fixture::si();
    assert!(fx.train_si("model").status.success());
    let o = propspan(&[
        "sweep-threshold",
        "--articles",
        s(&fx.path("articles")),
        "--labels",
        s(&fx.path("labels.tsv")),
        "--model",
        s(&fx.path("model")),
        "--embeddings",
        s(&fx.path("emb.pemb")),
        "--out",
        s(&fx.path("sweep")),
    ]);
    assert!(o.status.success(), "{o:?}");
    let tsv = fs::read_to_string(fx.path("sweep/sweep.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    let thresholds: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(thresholds, ["0.300", "0.400", "0.500", "0.600", "0.700"]);
    let mass: Vec<usize> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(mass.windows(2).all(|w| w[0] >= w[1]), "{mass:?}");
}

#[test]
fn synthetic_ablation_writes_six_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ablate");
    let o = propspan(&[
        "ablate",
        "--synthetic",
        "--epochs",
        "2",
        "--hidden",
        "8",
        "--learning-rate",
        "0.05",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let tsv = fs::read_to_string(out.join("ablation.tsv")).unwrap();
    let names: Vec<&str> = tsv.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "LSTM (Embeddings only)",
            "LSTM (POS + NER + KW)",
            "LSTM - POS",
            "LSTM - NER",
            "LSTM - KW",
            "Upstream Predictions & Features",
        ]
    );
    assert_eq!(
        fs::read_to_string(out.join("ablation.jsonl")).unwrap().lines().count(),
        6
    );
    assert!(stdout(&o).contains("LSTM - KW"));
}

#[test]
fn augment_plan_without_data_uses_reference_counts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("aug");
    let o = propspan(&["augment", "--total-new", "3000", "--out", s(&out)]);
    assert!(o.status.success(), "{o:?}");
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    let additions: Vec<u64> = plan["additions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(additions.iter().sum::<u64>(), 3000);
    assert_eq!(&additions[..2], &[0, 0]);
    assert_eq!(additions.iter().filter(|&&n| n > 0).count(), 12);
}

#[test]
fn negative_augment_budget_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = propspan(&["augment", "--total-new=-5", "--out", s(&dir.path().join("aug"))]);
    assert!(!o.status.success());
}

#[test]
fn technique_pipeline_round_trip() {
    let fx = Fixture::new(
        three_class_tc(&SyntheticConfig {
            articles: 10,
            sentences_per_article: 5,
            ..SyntheticConfig::default()
        }),
        true,
    );
    let o = propspan(&[
        "train-tc",
        "--articles",
        s(&fx.path("articles")),
        "--labels",
        s(&fx.path("labels.tsv")),
        "--embeddings",
        s(&fx.path("emb.pemb")),
        "--epochs",
        "30",
        "--hidden",
        "8",
        "--learning-rate",
        "0.05",
        "--out",
        s(&fx.path("model")),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(fx.path("model/classifier.ptc1").exists());

    let o = propspan(&[
        "predict-tc",
        "--articles",
        s(&fx.path("articles")),
        "--spans",
        s(&fx.path("labels.tsv")),
        "--model",
        s(&fx.path("model")),
        "--embeddings",
        s(&fx.path("emb.pemb")),
        "--out",
        s(&fx.path("pred")),
    ]);
    assert!(o.status.success(), "{o:?}");
    let pred = fs::read_to_string(fx.path("pred/predictions.tsv")).unwrap();
    assert_eq!(pred.lines().count(), 50);
    assert!(pred.lines().all(|l| l.split('\t').count() == 4));

    let o = propspan(&[
        "score-tc",
        "--articles",
        s(&fx.path("articles")),
        "--pred",
        s(&fx.path("pred/predictions.tsv")),
        "--gold",
        s(&fx.path("labels.tsv")),
        "--out",
        s(&fx.path("score")),
    ]);
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path("score/score_tc.json")).unwrap()).unwrap();
    assert!(json["micro_f1"].as_f64().unwrap() > 0.8, "{json}");
}

#[test]
fn utf16_offsets_convert_on_load() {
    let dir = TempDir::new().unwrap();
    let articles = dir.path().join("articles");
    fs::create_dir(&articles).unwrap();
    // the emoji is two UTF-16 units, so "evil" starts at char 6, unit 7
    fs::write(articles.join("article1.txt"), "a 😀 b evil c.").unwrap();
    fs::write(dir.path().join("chars.tsv"), "1\t6\t10\n").unwrap();
    fs::write(dir.path().join("units.tsv"), "1\t7\t11\n").unwrap();
    let o = propspan(&[
        "score-si",
        "--utf16",
        "--articles",
        s(&articles),
        "--pred",
        s(&dir.path().join("units.tsv")),
        "--gold",
        s(&dir.path().join("units.tsv")),
        "--out",
        s(&dir.path().join("a")),
    ]);
    assert!(stdout(&o).starts_with("P=1.000"), "{o:?}");
    let o = propspan(&[
        "score-si",
        "--articles",
        s(&articles),
        "--pred",
        s(&dir.path().join("units.tsv")),
        "--gold",
        s(&dir.path().join("chars.tsv")),
        "--out",
        s(&dir.path().join("b")),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(!stdout(&o).starts_with("P=1.000"), "{}", stdout(&o));
}
