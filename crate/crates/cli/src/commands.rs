//! One function per subcommand. Each reads the previous stage's outputs from
//! the output directory and writes its own artifacts and JSON report there.

use std::collections::{BTreeMap, HashMap, HashSet};

use newsclass::autolabel::{
    assign_topic_names, build_auto_dataset, label_cardinality_histogram, multilabel_binarize, onehot_from_single, threshold_split,
    AutolabelError, TopicNaming,
};
use newsclass::classifiers::{
    fit_binary_relevance, fit_knn, fit_linear, fit_multilabel_knn, BaseLearner, LinearConfig, LossKind,
};
use newsclass::corpus::{load_corpus, load_corpus_with_classes, split_train_test, CorpusFormat};
use newsclass::embeddings::{train_pvdm, train_sgns, train_subword, SgnsParams, SubwordParams};
use newsclass::eval::{cluster_vs_original, multilabel_report, single_label_report};
use newsclass::features::{doc2bow, Vocabulary};
use newsclass::lda::{keyword_report, select_best_model, LdaParams};
use newsclass::preprocess::{preprocess_corpus, PreprocessConfig, Stopwords, SuffixStemmer};
use newsclass::{store, AutoLabeledDataset, CountVector, LdaModel, MultiLabelSet, ProcessedDoc, Threshold};
use serde::Serialize;
use serde_json::json;

use crate::config::{ClassifierKind, EmbeddingKind, LabelSource, PipelineConfig, TopicNamingMode};
use crate::error::{CliError, CliResult};
use crate::represent::Featurizer;
use crate::util::{class_names, hash_unit, read_docs, require, write_docs, write_report, write_text, SummaryRow};

const PROCESSED: &str = "processed.jsonl";
const TRAIN: &str = "train.jsonl";
const TEST: &str = "test.jsonl";
const LDA_MODEL: &str = "lda.model";
const AUTODATA: &str = "autolabeled.data";

pub fn preprocess(cfg: &PipelineConfig) -> CliResult<()> {
    let format = match &cfg.corpus.format {
        Some(f) => f.parse::<CorpusFormat>().map_err(|e| CliError::config(e.to_string()))?,
        None => CorpusFormat::from_path(&cfg.paths.corpus).map_err(|e| CliError::config(e.to_string()))?,
    };
    let corpus = match &cfg.corpus.classes {
        Some(classes) => load_corpus_with_classes(&cfg.paths.corpus, format, classes.clone())?,
        None => load_corpus(&cfg.paths.corpus, format)?,
    };
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::bangla_default(),
    };
    let stemmer = match &cfg.paths.suffixes {
        Some(p) => SuffixStemmer::load(p)?,
        None => SuffixStemmer::bangla_default(),
    };
    let pcfg = PreprocessConfig::new(stopwords, stemmer, cfg.preprocess.ngram_order)?;
    let out = preprocess_corpus(&corpus, &pcfg);
    if out.docs.is_empty() {
        return Err(CliError::data("no document survived preprocessing"));
    }
    write_docs(&cfg.out(PROCESSED), &out.docs)?;

    let mut summary = vec![
        SummaryRow::new("preprocess", "documents_kept", out.docs.len() as f64),
        SummaryRow::new("preprocess", "documents_dropped", out.dropped.len() as f64),
    ];
    let mut split = serde_json::Value::Null;
    if !corpus.class_names().is_empty() {
        let mut sizes: HashMap<&str, usize> = HashMap::new();
        for d in corpus.documents() {
            if let Some(l) = &d.label {
                *sizes.entry(l.as_str()).or_default() += 1;
            }
        }
        let smallest = corpus.class_names().iter().map(|c| sizes.get(c.as_str()).copied().unwrap_or(0)).min().unwrap_or(0);
        let test_pc = cfg.corpus.test_per_class.unwrap_or((smallest / 5).max(1));
        let train_pc = cfg.corpus.train_per_class.unwrap_or(smallest.saturating_sub(test_pc));
        let (train_c, test_c) = split_train_test(&corpus, train_pc, test_pc, cfg.seed)?;
        let pick = |c: &newsclass::Corpus| {
            let ids: HashSet<&str> = c.documents().iter().map(|d| d.id.as_str()).collect();
            out.docs.iter().filter(|d| ids.contains(d.id.as_str())).cloned().collect::<Vec<_>>()
        };
        let (train, test) = (pick(&train_c), pick(&test_c));
        write_docs(&cfg.out(TRAIN), &train)?;
        write_docs(&cfg.out(TEST), &test)?;
        summary.push(SummaryRow::new("preprocess", "train_documents", train.len() as f64));
        summary.push(SummaryRow::new("preprocess", "test_documents", test.len() as f64));
        split = json!({
            "train_per_class": train_pc,
            "test_per_class": test_pc,
            "train_documents": train.len(),
            "test_documents": test.len(),
        });
    } else {
        log::warn!("corpus has no labels; skipping the train/test split");
    }
    let result = json!({
        "documents_read": corpus.len(),
        "documents_kept": out.docs.len(),
        "dropped": out.dropped,
        "class_names": corpus.class_names(),
        "split": split,
    });
    write_report(cfg, "preprocess.json", "preprocess", summary, result)
}

pub fn train_embeddings(cfg: &PipelineConfig) -> CliResult<()> {
    let source = if cfg.embeddings.train_on_all { PROCESSED } else { TRAIN };
    let docs = read_docs(&cfg.out(source))?;
    let e = &cfg.embeddings;
    let sgns = SgnsParams {
        dim: e.dim,
        window: e.window,
        negatives: e.negatives,
        epochs: e.epochs,
        initial_lr: e.initial_lr,
        seed: cfg.seed,
        min_count: e.min_count,
    };
    let mut models = BTreeMap::new();
    let mut summary = Vec::new();
    let mut seen = HashSet::new();
    for &kind in &e.models {
        if !seen.insert(kind) {
            continue;
        }
        let path = cfg.out(kind.file_name());
        let (vocab, losses) = match kind {
            EmbeddingKind::Sgns => {
                let m = train_sgns(&docs, &sgns)?;
                store::save(&m, &path)?;
                (m.vocab().len(), m.epoch_losses().to_vec())
            }
            EmbeddingKind::Subword => {
                let params = SubwordParams { sgns: sgns.clone(), minn: e.minn, maxn: e.maxn, buckets: e.buckets };
                let m = train_subword(&docs, &params)?;
                store::save(&m, &path)?;
                (m.base().vocab().len(), m.base().epoch_losses().to_vec())
            }
            EmbeddingKind::Pvdm => {
                let m = train_pvdm(&docs, &sgns)?;
                store::save(&m, &path)?;
                (m.base().vocab().len(), m.base().epoch_losses().to_vec())
            }
        };
        let name = format!("{kind:?}").to_lowercase();
        if let Some(&last) = losses.last() {
            summary.push(SummaryRow::new(format!("embeddings/{name}"), "final_epoch_loss", last));
        }
        models.insert(name, json!({ "file": kind.file_name(), "vocabulary": vocab, "epoch_losses": losses }));
    }
    write_report(cfg, "embeddings.json", "train-embeddings", summary, json!({ "documents": docs.len(), "models": models }))
}

/// Documents with at least one in-vocabulary token, split into LDA training
/// and held-out parts by a seeded hash of their id.
fn lda_partition(docs: Vec<ProcessedDoc>, vocab: &Vocabulary, cfg: &PipelineConfig) -> [(Vec<ProcessedDoc>, Vec<CountVector>); 2] {
    let mut parts: [(Vec<ProcessedDoc>, Vec<CountVector>); 2] = Default::default();
    for d in docs {
        let bow = doc2bow(&d.tokens, vocab);
        if bow.is_empty() {
            continue;
        }
        let held = hash_unit(cfg.seed, &d.id) < cfg.lda.held_out_fraction;
        let part = &mut parts[held as usize];
        part.0.push(d);
        part.1.push(bow);
    }
    parts
}

#[derive(Serialize)]
struct GridRow {
    k: usize,
    alpha: f64,
    beta: f64,
    passes: usize,
    iterations: usize,
    seed: u64,
    perplexity: f64,
}

pub fn train_lda(cfg: &PipelineConfig) -> CliResult<()> {
    let docs = read_docs(&cfg.out(PROCESSED))?;
    let vocab = Vocabulary::build(&docs, cfg.features.max_features, cfg.features.min_df)?;
    let [(train_docs, train), (_, held_out)] = lda_partition(docs, &vocab, cfg);
    if train.is_empty() || held_out.is_empty() {
        return Err(CliError::data(format!("LDA partition is degenerate: {} training, {} held-out documents", train.len(), held_out.len())));
    }
    let alphas: Vec<Option<f64>> = if cfg.lda.alpha.is_empty() { vec![None] } else { cfg.lda.alpha.iter().map(|&a| Some(a)).collect() };
    let mut grid = Vec::new();
    for &alpha in &alphas {
        for &beta in &cfg.lda.beta {
            for &passes in &cfg.lda.passes {
                for &iterations in &cfg.lda.iterations {
                    for r in 0..cfg.lda.restarts as u64 {
                        grid.push(LdaParams { k: cfg.lda.k, alpha, beta, passes, iterations, seed: cfg.seed.wrapping_add(r) });
                    }
                }
            }
        }
    }
    let (best, results) = select_best_model(&train, &held_out, &vocab, &grid)?;
    if results.iter().any(|r| !r.perplexity.is_finite()) {
        return Err(CliError::numeric("non-finite held-out perplexity"));
    }
    store::save(&best, &cfg.out(LDA_MODEL))?;
    let top = cfg.lda.top_keywords.min(vocab.len());
    write_text(&cfg.out("keywords.txt"), &keyword_report(&best, top)?)?;

    let best_idx = (0..results.len()).fold(0, |b, i| if results[i].perplexity < results[b].perplexity { i } else { b });
    let rows: Vec<GridRow> = results
        .iter()
        .map(|r| GridRow {
            k: r.params.k,
            alpha: r.params.alpha(),
            beta: r.params.beta,
            passes: r.params.passes,
            iterations: r.params.iterations,
            seed: r.params.seed,
            perplexity: r.perplexity,
        })
        .collect();
    let keywords: Vec<Vec<String>> = (0..best.num_topics())
        .map(|t| best.top_keywords(t, top).map(|kw| kw.into_iter().map(|(w, _)| w).collect()))
        .collect::<Result<_, _>>()?;
    let summary = vec![
        SummaryRow::new("lda", "held_out_perplexity", results[best_idx].perplexity),
        SummaryRow::new("lda", "uniform_perplexity", vocab.len() as f64),
    ];
    let result = json!({
        "training_documents": train_docs.len(),
        "held_out_documents": held_out.len(),
        "vocabulary": vocab.len(),
        "grid": rows,
        "best": best_idx,
        "keywords": keywords,
    });
    write_report(cfg, "lda.json", "train-lda", summary, result)
}

pub fn autolabel(cfg: &PipelineConfig) -> CliResult<()> {
    let model_path = cfg.out(LDA_MODEL);
    require(&model_path, "train-lda")?;
    let model: LdaModel = store::load(&model_path)?;
    let docs = read_docs(&cfg.out(PROCESSED))?;
    let order: HashMap<String, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
    let names = class_names(cfg, &docs);
    let [(train_docs, _), (held_docs, _)] = lda_partition(docs, model.vocab(), cfg);
    if train_docs.len() != model.num_docs() {
        return Err(CliError::data(format!(
            "{LDA_MODEL} was trained on {} documents but the current partition has {}; re-run train-lda",
            model.num_docs(),
            train_docs.len()
        )));
    }

    let explicit: BTreeMap<usize, String>;
    let mut dominant = Vec::new();
    let mut labels = Vec::new();
    let naming = match cfg.autolabel.naming {
        TopicNamingMode::Explicit => {
            explicit = cfg
                .autolabel
                .topic_names
                .iter()
                .map(|(k, v)| k.parse::<usize>().map(|t| (t, v.clone())).map_err(|_| CliError::config(format!("topic key {k:?} is not a number"))))
                .collect::<CliResult<_>>()?;
            TopicNaming::Explicit(&explicit)
        }
        TopicNamingMode::Hungarian => {
            for (d, doc) in train_docs.iter().enumerate() {
                if let Some(l) = &doc.label {
                    dominant.push(model.training_distribution(d)?.dominant_topic());
                    labels.push(l.clone());
                }
            }
            if labels.is_empty() {
                return Err(CliError::config("naming = \"hungarian\" needs labelled documents; use explicit topic_names"));
            }
            TopicNaming::Labeled { dominant_topics: &dominant, labels: &labels }
        }
    };
    let map = assign_topic_names(&model, &names, naming)?;
    let mut ds = build_auto_dataset(&model, &map, &train_docs, true)?;
    ds.records.extend(build_auto_dataset(&model, &map, &held_docs, false)?.records);
    ds.records.sort_by_key(|r| order[&r.id]);
    store::save(&ds, &cfg.out(AUTODATA))?;

    let mut summary = Vec::new();
    let mut per_threshold = Vec::new();
    for &th in &cfg.autolabel.thresholds {
        let train = ds.records.iter().filter(|r| r.max_prob() >= th).count();
        let sets = multilabel_binarize(&ds.records, th)?;
        per_threshold.push(json!({
            "threshold": th,
            "train_documents": train,
            "test_documents": ds.len() - train,
            "cardinality_histogram": label_cardinality_histogram(&sets),
        }));
    }
    let ml_sets = multilabel_binarize(&ds.records, cfg.multilabel.threshold)?;
    let cluster = if ds.records.iter().any(|r| r.original.is_some()) {
        let report = cluster_vs_original(&ds)?;
        summary.push(SummaryRow::new("autolabel/cluster_vs_original", "accuracy", report.accuracy));
        summary.push(SummaryRow::new("autolabel/cluster_vs_original", "macro_f1", report.macro_f1));
        write_text(&cfg.out("cluster_vs_original.txt"), &report.to_table())?;
        Some(report)
    } else {
        None
    };
    let result = json!({
        "records": ds.len(),
        "topic_map": map.to_map(),
        "thresholds": per_threshold,
        "multilabel": {
            "threshold": cfg.multilabel.threshold,
            "cardinality_histogram": label_cardinality_histogram(&ml_sets),
        },
        "cluster_vs_original": cluster,
    });
    write_report(cfg, "autolabel.json", "autolabel", summary, result)
}

fn linear_config(cfg: &PipelineConfig, loss: LossKind) -> LinearConfig {
    LinearConfig { loss, l2: cfg.classifier.l2, epochs: cfg.classifier.epochs, initial_lr: cfg.classifier.initial_lr, seed: cfg.seed }
}

/// Fits on `train`, scores `test`, saves the model. Returns the report.
fn single_label_run(
    cfg: &PipelineConfig,
    train: &[ProcessedDoc],
    test: &[ProcessedDoc],
    classes: &[String],
    model_name: &str,
    shared: Option<&Featurizer>,
) -> CliResult<newsclass::eval::SingleLabelReport> {
    let index = |d: &ProcessedDoc| {
        let l = d.label.as_deref().ok_or_else(|| CliError::data(format!("document {:?} has no label", d.id)))?;
        classes.iter().position(|c| c == l).ok_or_else(|| CliError::data(format!("label {l:?} is not a known class")))
    };
    let y: Vec<usize> = train.iter().map(index).collect::<CliResult<_>>()?;
    let fitted;
    let featurizer = match shared {
        Some(f) => f,
        None => {
            fitted = Featurizer::fit(cfg.features.representation, train, cfg)?;
            &fitted
        }
    };
    let x = featurizer.transform(train)?;
    let xt = featurizer.transform(test)?;
    let pred: Vec<usize> = match cfg.classifier.kind {
        ClassifierKind::Logistic | ClassifierKind::Hinge => {
            let loss = if cfg.classifier.kind == ClassifierKind::Logistic { LossKind::Log } else { LossKind::Hinge };
            let m = fit_linear(&x, &y, classes.len(), &linear_config(cfg, loss))?;
            store::save(&m, &cfg.out(model_name))?;
            xt.rows().iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
        ClassifierKind::Knn => {
            let m = fit_knn(x, &y, cfg.classifier.k, cfg.metric()?)?;
            store::save(&m, &cfg.out(model_name))?;
            xt.rows().iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
    };
    let truth: Vec<&str> = test.iter().map(|d| d.label.as_deref().unwrap_or_default()).collect();
    let predicted: Vec<&str> = pred.iter().map(|&c| classes[c].as_str()).collect();
    Ok(single_label_report(&truth, &predicted, classes)?)
}

pub fn train_classifier(cfg: &PipelineConfig) -> CliResult<()> {
    let mut tag = format!("{}-{}", cfg.features.representation.as_str(), cfg.classifier.kind.as_str());
    if cfg.classifier.labels == LabelSource::Auto {
        tag.push_str("-auto");
    }
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    let mut tables = String::new();
    match cfg.classifier.labels {
        LabelSource::Manual => {
            let train = read_docs(&cfg.out(TRAIN))?;
            let test = read_docs(&cfg.out(TEST))?;
            let classes = class_names(cfg, train.iter().chain(&test));
            let report = single_label_run(cfg, &train, &test, &classes, &format!("classifier-{tag}.model"), None)?;
            summary.push(SummaryRow::new(format!("classifier/{tag}"), "accuracy", report.accuracy));
            summary.push(SummaryRow::new(format!("classifier/{tag}"), "macro_f1", report.macro_f1));
            tables.push_str(&format!("== {tag} (manual labels)\n{}", report.to_table()));
            runs.push(json!({ "train_documents": train.len(), "test_documents": test.len(), "report": report }));
        }
        LabelSource::Auto => {
            let path = cfg.out(AUTODATA);
            require(&path, "autolabel")?;
            let ds: AutoLabeledDataset = store::load(&path)?;
            // Dense representations do not depend on the split: fit once and
            // let the cache carry vectors across thresholds.
            let shared = if cfg.features.representation.is_dense() {
                Some(Featurizer::fit(cfg.features.representation, &[], cfg)?)
            } else {
                None
            };
            for &th in &cfg.autolabel.thresholds {
                let run = format!("classifier/{tag}/th={th}");
                let (train, test) = match threshold_split(&ds, Threshold::new(th)?) {
                    Ok(s) => s,
                    Err(AutolabelError::EmptyTrainSide(_)) => {
                        log::warn!("threshold {th}: no record reaches it, skipped");
                        runs.push(json!({ "threshold": th, "skipped": "empty training side" }));
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let test: Vec<ProcessedDoc> = test.into_iter().filter(|d| d.label.is_some()).collect();
                if test.is_empty() {
                    log::warn!("threshold {th}: no labelled test document, skipped");
                    runs.push(json!({ "threshold": th, "train_documents": train.len(), "skipped": "empty test side" }));
                    continue;
                }
                let report = single_label_run(cfg, &train, &test, &ds.class_names, &format!("classifier-{tag}-th{th}.model"), shared.as_ref())?;
                summary.push(SummaryRow::new(run.clone(), "accuracy", report.accuracy));
                summary.push(SummaryRow::new(run, "macro_f1", report.macro_f1));
                tables.push_str(&format!("== {tag} (auto labels, th = {th})\n{}", report.to_table()));
                runs.push(json!({ "threshold": th, "train_documents": train.len(), "test_documents": test.len(), "report": report }));
            }
        }
    }
    write_text(&cfg.out(&format!("classifier-{tag}.txt")), &tables)?;
    let result = json!({
        "representation": cfg.features.representation,
        "classifier": cfg.classifier.kind,
        "labels": cfg.classifier.labels,
        "runs": runs,
    });
    write_report(cfg, &format!("classifier-{tag}.json"), "train-classifier", summary, result)
}

pub fn multilabel(cfg: &PipelineConfig) -> CliResult<()> {
    let path = cfg.out(AUTODATA);
    require(&path, "autolabel")?;
    let ds: AutoLabeledDataset = store::load(&path)?;
    let th = cfg.multilabel.threshold;
    let sets = multilabel_binarize(&ds.records, th)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let mut excluded_empty = 0usize;
    for (r, s) in ds.records.iter().zip(sets) {
        let doc = ProcessedDoc { id: r.id.clone(), tokens: r.tokens.clone(), label: r.original.clone() };
        if hash_unit(cfg.seed, &r.id) < cfg.multilabel.test_fraction {
            test.push((doc, s));
        } else if s.cardinality() == 0 {
            excluded_empty += 1;
        } else {
            train.push((doc, s));
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(CliError::data(format!("multi-label split is degenerate: {} training, {} test records", train.len(), test.len())));
    }
    let (train_docs, train_sets): (Vec<ProcessedDoc>, Vec<MultiLabelSet>) = train.into_iter().unzip();
    let (test_docs, test_sets): (Vec<ProcessedDoc>, Vec<MultiLabelSet>) = test.into_iter().unzip();
    let featurizer = Featurizer::fit(cfg.features.representation, &train_docs, cfg)?;
    let x = featurizer.transform(&train_docs)?;
    let xt = featurizer.transform(&test_docs)?;
    let kind = cfg.multilabel.kind;
    let pred: Vec<MultiLabelSet> = match kind {
        ClassifierKind::Knn => {
            let m = fit_multilabel_knn(x, &train_sets, cfg.classifier.k, cfg.metric()?)?;
            xt.rows().iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
        ClassifierKind::Logistic | ClassifierKind::Hinge => {
            let loss = if kind == ClassifierKind::Logistic { LossKind::Log } else { LossKind::Hinge };
            let m = fit_binary_relevance(&x, &train_sets, &ds.class_names, &BaseLearner::Linear(linear_config(cfg, loss)))?;
            xt.rows().iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
    };
    let report = multilabel_report(&test_sets, &pred)?;
    let tag = format!("{}-{}", cfg.features.representation.as_str(), kind.as_str());
    let run = format!("multilabel/{tag}");
    let mut summary = vec![
        SummaryRow::new(run.clone(), "accuracy", report.accuracy),
        SummaryRow::new(run.clone(), "f1", report.f1),
        SummaryRow::new(run.clone(), "hamming_loss", report.hamming_loss),
    ];
    let mut tables = format!("== {tag} against automatic label sets (th = {th})\n{}", report.to_table());

    let mut vs_original = None;
    let labelled: Vec<usize> = (0..test_docs.len()).filter(|&i| test_docs[i].label.is_some()).collect();
    if !labelled.is_empty() {
        let truth = labelled
            .iter()
            .map(|&i| onehot_from_single(test_docs[i].label.as_deref().expect("filtered"), &ds.class_names))
            .collect::<Result<Vec<_>, _>>()?;
        let p: Vec<MultiLabelSet> = labelled.iter().map(|&i| pred[i].clone()).collect();
        let r = multilabel_report(&truth, &p)?;
        summary.push(SummaryRow::new(format!("{run}/original"), "hamming_loss", r.hamming_loss));
        tables.push_str(&format!("== {tag} against original single labels\n{}", r.to_table()));
        vs_original = Some(r);
    }
    write_text(&cfg.out(&format!("multilabel-{tag}.txt")), &tables)?;
    let result = json!({
        "threshold": th,
        "train_records": train_docs.len(),
        "excluded_empty_train_records": excluded_empty,
        "test_records": test_docs.len(),
        "report": report,
        "vs_original": vs_original,
    });
    write_report(cfg, &format!("multilabel-{tag}.json"), "multilabel", summary, result)
}

/// Collects the `summary` rows of every JSON report in the output directory.
pub fn report(cfg: &PipelineConfig) -> CliResult<String> {
    let dir = &cfg.paths.output_dir;
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::data(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| CliError::data(format!("{}: {e}", f.display())))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", f.display())))?;
        if let Some(s) = v.get("summary") {
            let part: Vec<SummaryRow> = serde_json::from_value(s.clone()).map_err(|e| CliError::data(format!("{}: {e}", f.display())))?;
            rows.extend(part);
        }
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("no reports found in {}", dir.display())));
    }
    let width = rows.iter().map(|r| r.run.chars().count()).max().unwrap_or(3).max(3);
    let mut table = format!("{:<width$}  {:<20}  {:>12}\n", "run", "metric", "value");
    for r in &rows {
        table.push_str(&format!("{:<width$}  {:<20}  {:>12.4}\n", r.run, r.metric, r.value));
    }
    write_text(&cfg.out("summary.txt"), &table)?;
    let sources: Vec<String> = files.iter().filter_map(|f| f.file_name()?.to_str().map(str::to_string)).collect();
    write_report(cfg, "summary.json", "report", rows, json!({ "sources": sources }))?;
    Ok(table)
}
