//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use newsclass::autolabel::{assign_topic_names, build_auto_dataset, multilabel_binarize, threshold_split, TopicNaming};
use newsclass::classifiers::{fit_knn, fit_linear, softmax_loss_and_grad, FeatureMatrix, LinearConfig, Metric};
use newsclass::corpus::split_train_test;
use newsclass::embeddings::{infer_doc_vector, sgns_loss_and_gradients, train_pvdm, train_sgns, SgnsParams};
use newsclass::eval::{
    cluster_vs_original, hamming_loss, multilabel_accuracy, multilabel_f1, multilabel_precision, multilabel_recall,
};
use newsclass::features::{doc2bow, tfidf_vector};
use newsclass::lda::{select_best_model, train_lda, LdaParams};
use newsclass::linalg::Matrix;
use newsclass::preprocess::preprocess_corpus;
use newsclass::store;
use newsclass::synthetic::{news_corpus, planted_topics, NewsParams, PlantedParams};
use newsclass::{CountVector, LdaModel, MultiLabelSet, PreprocessConfig, ProcessedDoc, SparseVector, Threshold, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn doc(id: &str, tokens: &[&str], label: Option<&str>) -> ProcessedDoc {
    ProcessedDoc { id: id.into(), tokens: tokens.iter().map(|s| s.to_string()).collect(), label: label.map(str::to_string) }
}

// 1

fn tfidf_oracle() -> Check {
    let fixture = vec![doc("d1", &["a", "a", "b"], None), doc("d2", &["b", "c"], None)];
    let wider = vec![
        doc("e1", &["x", "y", "x", "z", "x"], None),
        doc("e2", &["y", "w"], None),
        doc("e3", &["z", "z", "y", "v"], None),
        doc("e4", &["y", "x", "u", "u", "u", "u"], None),
    ];
    let mut worst = 0.0f64;
    for docs in [&fixture, &wider] {
        let vocab = Vocabulary::build(docs, None, 1).map_err(|e| e.to_string())?;
        let n = docs.len() as f64;
        for d in docs.iter() {
            let v = tfidf_vector(d, &vocab).map_err(|e| e.to_string())?;
            let terms: BTreeSet<&String> = d.tokens.iter().collect();
            for t in terms {
                let count = d.tokens.iter().filter(|x| *x == t).count() as f64;
                let df = docs.iter().filter(|o| o.tokens.contains(t)).count() as f64;
                let expected = count / d.tokens.len() as f64 * (n / df).ln();
                let id = vocab.id(t).ok_or_else(|| format!("{t} missing from vocabulary"))?;
                worst = worst.max((v.get(id) - expected).abs());
                if df == n {
                    ensure(vocab.idf(id) == 0.0, || format!("idf({t}) = {} for an all-document term", vocab.idf(id)))?;
                    ensure(!v.indices.contains(&id), || format!("zero-weight {t} kept in sparse output"))?;
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let vocab = Vocabulary::build(&fixture, None, 1).map_err(|e| e.to_string())?;
    let a = tfidf_vector(&fixture[0], &vocab).map_err(|e| e.to_string())?.get(vocab.id("a").unwrap());
    ensure((a - 0.46210).abs() < 1e-5, || format!("tfidf(a, d1) = {a}"))?;
    Ok(format!("max |Δ| = {worst:.1e}, tfidf(a,d1) = {a:.5}, idf(b) = 0"))
}

// 2

fn brute(y: &BTreeSet<usize>, z: &BTreeSet<usize>, labels: usize) -> [f64; 5] {
    let inter = y.intersection(z).count() as f64;
    let union = y.union(z).count() as f64;
    let sym = y.symmetric_difference(z).count() as f64;
    let (ny, nz) = (y.len() as f64, z.len() as f64);
    let both_empty = y.is_empty() && z.is_empty();
    let ratio = |den: f64| if both_empty { 1.0 } else if den == 0.0 { 0.0 } else { inter / den };
    let f1 = if both_empty { 1.0 } else { 2.0 * inter / (ny + nz) };
    [ratio(union), ratio(nz), ratio(ny), f1, sym / labels as f64]
}

fn metric_equivalence() -> Check {
    const L: usize = 4;
    let set_of = |mask: usize| (0..L).filter(|b| mask >> b & 1 == 1).collect::<BTreeSet<usize>>();
    let mls_of = |s: &BTreeSet<usize>| MultiLabelSet::from_indices(L, &s.iter().copied().collect::<Vec<_>>());
    let mut pairs = 0;
    for ym in 0..1usize << L {
        for zm in 0..1usize << L {
            let (y, z) = (set_of(ym), set_of(zm));
            let ys = [mls_of(&y)];
            let zs = [mls_of(&z)];
            let got = [
                multilabel_accuracy(&ys, &zs),
                multilabel_precision(&ys, &zs),
                multilabel_recall(&ys, &zs),
                multilabel_f1(&ys, &zs),
                hamming_loss(&ys, &zs),
            ];
            let want = brute(&y, &z, L);
            for (name, (g, w)) in ["accuracy", "precision", "recall", "f1", "hamming"].iter().zip(got.into_iter().zip(want)) {
                let g = g.map_err(|e| e.to_string())?;
                ensure(g == w, || format!("{name}(Y={y:?}, Z={z:?}) = {g}, brute force {w}"))?;
            }
            if zm == ym {
                ensure(hamming_loss(&ys, &zs).unwrap() == 0.0, || format!("HL(Y,Y) != 0 for {y:?}"))?;
            }
            if zm == !ym & ((1 << L) - 1) {
                ensure(hamming_loss(&ys, &zs).unwrap() == 1.0, || format!("HL(Y,complement) != 1 for {y:?}"))?;
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs agree exactly, HL(Y,Y) = 0, HL(Y,~Y) = 1"))
}

// 3

fn lda_recovery() -> Check {
    let mut good_seeds = 0;
    let mut details = Vec::new();
    for seed in 1..=5u64 {
        let pc = planted_topics(&PlantedParams { seed, ..PlantedParams::default() });
        let vocab = Vocabulary::build(&pc.docs, None, 1).map_err(|e| e.to_string())?;
        let bows: Vec<CountVector> = pc.docs.iter().map(|d| doc2bow(&d.tokens, &vocab)).collect();
        let (train, held): (Vec<_>, Vec<_>) = bows.into_iter().enumerate().partition(|(i, _)| i % 10 != 0);
        let train: Vec<CountVector> = train.into_iter().map(|(_, b)| b).collect();
        let held: Vec<CountVector> = held.into_iter().map(|(_, b)| b).collect();
        let model = train_lda(&train, &vocab, &LdaParams { k: 3, seed, ..LdaParams::default() }).map_err(|e| e.to_string())?;
        let mut pure = 0;
        for t in 0..3 {
            let owners: BTreeSet<Option<usize>> =
                model.top_keywords(t, 5).map_err(|e| e.to_string())?.iter().map(|(w, _)| pc.topic_of(w)).collect();
            if owners.len() == 1 && !owners.contains(&None) {
                pure += 1;
            }
        }
        let px = model.perplexity(&held).map_err(|e| e.to_string())?;
        let v = vocab.len() as f64;
        if pure >= 2 && px < v {
            good_seeds += 1;
        }
        details.push(format!("seed {seed}: {pure}/3 pure, perplexity {px:.1} vs V {v}"));
    }
    ensure(good_seeds >= 4, || format!("only {good_seeds}/5 seeds recover; {}", details.join("; ")))?;
    Ok(format!("{good_seeds}/5 seeds recover ({})", details.join("; ")))
}

// 4

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

fn gradient_checks() -> Check {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-0.8..0.8)).collect() };
    let mut worst = 0.0f64;

    for _ in 0..5 {
        let dim = 12;
        let hidden = draw(dim);
        let positive = draw(dim);
        let negs: Vec<Vec<f64>> = (0..5).map(|_| draw(dim)).collect();
        let loss = |h: &[f64], p: &[f64], ns: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = ns.iter().map(|v| v.as_slice()).collect();
            sgns_loss_and_gradients(h, p, &refs).loss
        };
        let refs: Vec<&[f64]> = negs.iter().map(|v| v.as_slice()).collect();
        let g = sgns_loss_and_gradients(&hidden, &positive, &refs);
        for i in 0..dim {
            let bump = |v: &[f64], d: f64| {
                let mut v = v.to_vec();
                v[i] += d;
                v
            };
            let nh = (loss(&bump(&hidden, H), &positive, &negs) - loss(&bump(&hidden, -H), &positive, &negs)) / (2.0 * H);
            worst = worst.max(rel_err(g.hidden[i], nh));
            let np = (loss(&hidden, &bump(&positive, H), &negs) - loss(&hidden, &bump(&positive, -H), &negs)) / (2.0 * H);
            worst = worst.max(rel_err(g.positive[i], np));
            for k in 0..negs.len() {
                let mut up = negs.clone();
                up[k][i] += H;
                let mut down = negs.clone();
                down[k][i] -= H;
                let nn = (loss(&hidden, &positive, &up) - loss(&hidden, &positive, &down)) / (2.0 * H);
                worst = worst.max(rel_err(g.negatives[k][i], nn));
            }
        }
    }
    let sgns_worst = worst;

    worst = 0.0;
    for y in 0..4 {
        let (classes, dim) = (4, 7);
        let w = Matrix::from_vec(classes, dim, draw(classes * dim));
        let b = draw(classes);
        let x = draw(dim);
        let l2 = 0.05;
        let (_, gw, gb) = softmax_loss_and_grad(&w, &b, &x, y, l2);
        for c in 0..classes {
            for j in 0..dim {
                let mut up = w.clone();
                up.row_mut(c)[j] += H;
                let mut down = w.clone();
                down.row_mut(c)[j] -= H;
                let n = (softmax_loss_and_grad(&up, &b, &x, y, l2).0 - softmax_loss_and_grad(&down, &b, &x, y, l2).0) / (2.0 * H);
                worst = worst.max(rel_err(gw.row(c)[j], n));
            }
            let mut up = b.clone();
            up[c] += H;
            let mut down = b.clone();
            down[c] -= H;
            let n = (softmax_loss_and_grad(&w, &up, &x, y, l2).0 - softmax_loss_and_grad(&w, &down, &x, y, l2).0) / (2.0 * H);
            worst = worst.max(rel_err(gb[c], n));
        }
    }
    ensure(sgns_worst < 1e-4 && worst < 1e-4, || format!("relative error sgns {sgns_worst:e}, softmax {worst:e}"))?;
    Ok(format!("max relative error sgns {sgns_worst:.1e}, softmax {worst:.1e}"))
}

// 5 and 6 share the synthetic corpus

const SEED: u64 = 42;

struct Synthetic {
    all: Vec<ProcessedDoc>,
    train: Vec<ProcessedDoc>,
    test: Vec<ProcessedDoc>,
    classes: Vec<String>,
}

fn synthetic() -> Result<Synthetic, String> {
    let corpus = news_corpus(&NewsParams::default());
    let pre = PreprocessConfig::bangla_default(1).map_err(|e| e.to_string())?;
    let all = preprocess_corpus(&corpus, &pre).docs;
    let (train_c, test_c) = split_train_test(&corpus, 160, 40, SEED).map_err(|e| e.to_string())?;
    let by_id: HashMap<&str, &ProcessedDoc> = all.iter().map(|d| (d.id.as_str(), d)).collect();
    let pick = |c: &newsclass::Corpus| c.documents().iter().filter_map(|d| by_id.get(d.id.as_str()).map(|p| (*p).clone())).collect();
    Ok(Synthetic { train: pick(&train_c), test: pick(&test_c), classes: corpus.class_names().to_vec(), all })
}

fn class_ids(docs: &[ProcessedDoc], classes: &[String]) -> Vec<usize> {
    docs.iter().map(|d| classes.iter().position(|c| Some(c) == d.label.as_ref()).expect("labelled")).collect()
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

fn manual_pipeline(s: &Synthetic) -> Check {
    let y_train = class_ids(&s.train, &s.classes);
    let y_test = class_ids(&s.test, &s.classes);

    let vocab = Vocabulary::build(&s.train, Some(5000), 1).map_err(|e| e.to_string())?;
    let rows = |docs: &[ProcessedDoc]| -> Vec<SparseVector> { docs.iter().map(|d| tfidf_vector(d, &vocab).unwrap_or_default()).collect() };
    let x_train = FeatureMatrix::new(vocab.len(), rows(&s.train)).map_err(|e| e.to_string())?;
    let lr = fit_linear(&x_train, &y_train, s.classes.len(), &LinearConfig { seed: SEED, ..LinearConfig::default() })
        .map_err(|e| e.to_string())?;
    let pred: Vec<usize> = rows(&s.test).iter().map(|x| lr.predict(x)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let tfidf_acc = accuracy(&pred, &y_test);

    let params = SgnsParams { dim: 50, window: 2, negatives: 5, epochs: 30, initial_lr: 0.025, seed: SEED, min_count: 1 };
    let pv = train_pvdm(&s.train, &params).map_err(|e| e.to_string())?;
    let infer = |docs: &[ProcessedDoc]| -> Result<Vec<Vec<f64>>, String> {
        docs.iter().map(|d| infer_doc_vector(&pv, &d.tokens, 100, SEED).map_err(|e| e.to_string())).collect()
    };
    let x_train = FeatureMatrix::from_dense(&infer(&s.train)?).map_err(|e| e.to_string())?;
    let knn = fit_knn(x_train, &y_train, 5, Metric::Cosine).map_err(|e| e.to_string())?;
    let pred: Vec<usize> = infer(&s.test)?
        .iter()
        .map(|v| knn.predict(&SparseVector::from_dense(v)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let pvdm_acc = accuracy(&pred, &y_test);

    let msg = format!("tf-idf + logistic {:.2}%, pv-dm + knn {:.2}% on {} test docs", 100.0 * tfidf_acc, 100.0 * pvdm_acc, y_test.len());
    ensure(tfidf_acc >= 0.95 && pvdm_acc >= 0.90, || msg.clone())?;
    Ok(msg)
}

/// Class owning each word: the class whose documents hold more than half of
/// its occurrences. Shared noise words have no owner.
fn word_owners(docs: &[ProcessedDoc], classes: &[String]) -> HashMap<String, usize> {
    let mut counts: HashMap<&str, Vec<usize>> = HashMap::new();
    for (d, &c) in docs.iter().zip(&class_ids(docs, classes)) {
        for t in &d.tokens {
            counts.entry(t).or_insert_with(|| vec![0; classes.len()])[c] += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(w, per)| {
            let total: usize = per.iter().sum();
            let (c, &top) = per.iter().enumerate().max_by_key(|(_, n)| **n)?;
            (2 * top > total).then(|| (w.to_string(), c))
        })
        .collect()
}

fn auto_pipeline(s: &Synthetic) -> Check {
    let vocab = Vocabulary::build(&s.all, Some(5000), 1).map_err(|e| e.to_string())?;
    let (mut train_docs, mut held_docs, mut train, mut held) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, d) in s.all.iter().enumerate() {
        let bow = doc2bow(&d.tokens, &vocab);
        // every tenth interleave round, so all classes are held out equally
        if (i / s.classes.len()) % 10 == 3 {
            held_docs.push(d.clone());
            held.push(bow);
        } else {
            train_docs.push(d.clone());
            train.push(bow);
        }
    }
    let grid: Vec<LdaParams> = (0..12).map(|r| LdaParams { k: 8, alpha: Some(0.1), seed: SEED + r, ..LdaParams::default() }).collect();
    // single chains often merge two classes into one topic; restarts are
    // selected by held-out perplexity
    let (model, _) = select_best_model(&train, &held, &vocab, &grid).map_err(|e| e.to_string())?;

    let labels: Vec<String> = train_docs.iter().map(|d| d.label.clone().expect("labelled")).collect();
    let dominant: Vec<usize> = (0..train_docs.len())
        .map(|d| model.training_distribution(d).map(|t| t.dominant_topic()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let map = assign_topic_names(&model, &s.classes, TopicNaming::Labeled { dominant_topics: &dominant, labels: &labels })
        .map_err(|e| e.to_string())?;

    let owners = word_owners(&s.all, &s.classes);
    let planted = planted_map(&model, &vocab, &owners, s.classes.len());
    let found: Vec<usize> = (0..8).map(|t| map.class_index(t)).collect();
    ensure(found == planted, || format!("hungarian map {found:?}, planted {planted:?}"))?;

    let mut ds = build_auto_dataset(&model, &map, &train_docs, true).map_err(|e| e.to_string())?;
    ds.records.extend(build_auto_dataset(&model, &map, &held_docs, false).map_err(|e| e.to_string())?.records);
    let cluster = cluster_vs_original(&ds).map_err(|e| e.to_string())?.accuracy;
    ensure(cluster >= 0.85, || format!("cluster_vs_original accuracy {cluster:.4}"))?;

    let (_, test) = threshold_split(&ds, Threshold::new(0.5).unwrap()).map_err(|e| e.to_string())?;
    ensure(!test.is_empty(), || "th = 0.5 leaves an empty test side".into())?;

    let ths = [0.1, 0.2, 0.3, 0.4, 0.5, 0.51, 0.6, 0.7, 0.8, 0.9];
    let sets: Vec<Vec<MultiLabelSet>> =
        ths.iter().map(|&th| multilabel_binarize(&ds.records, th)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for w in sets.windows(2) {
        for (hi, lo) in w[1].iter().zip(&w[0]) {
            ensure(hi.indices().iter().all(|&c| lo.contains(c)), || "binarization is not threshold-monotone".into())?;
        }
    }
    let at_51 = &sets[5];
    ensure(at_51.iter().all(|s| s.cardinality() <= 1), || "a record has two labels at th = 0.51".into())?;
    let two_plus = sets[2].iter().filter(|s| s.cardinality() >= 2).count();
    Ok(format!(
        "map matches planted, cluster accuracy {:.2}%, th=0.5 test side {} docs, {} multi-label sets at th=0.3",
        100.0 * cluster,
        test.len(),
        two_plus
    ))
}

/// Planted class of each topic: the class whose owned words carry the most
/// topic-word mass.
fn planted_map(model: &LdaModel, vocab: &Vocabulary, owners: &HashMap<String, usize>, classes: usize) -> Vec<usize> {
    (0..model.num_topics())
        .map(|t| {
            let mut mass = vec![0.0; classes];
            for (id, p) in model.phi_row(t).into_iter().enumerate() {
                if let Some(&c) = owners.get(vocab.term(id)) {
                    mass[c] += p;
                }
            }
            (0..classes).fold(0, |b, c| if mass[c] > mass[b] { c } else { b })
        })
        .collect()
}

// 7

fn determinism(s: &Synthetic) -> Check {
    let small: Vec<ProcessedDoc> = s.train.iter().take(200).cloned().collect();
    let params = SgnsParams { dim: 16, window: 2, negatives: 3, epochs: 3, initial_lr: 0.025, seed: 3, min_count: 1 };
    let sg = || store::to_bytes(&train_sgns(&small, &params).unwrap());
    let pv = || store::to_bytes(&train_pvdm(&small, &params).unwrap());
    ensure(sg() == sg(), || "skip-gram artifact differs between runs".into())?;
    ensure(pv() == pv(), || "pv-dm artifact differs between runs".into())?;
    let vocab = Vocabulary::build(&small, None, 1).map_err(|e| e.to_string())?;
    let bows: Vec<CountVector> = small.iter().map(|d| doc2bow(&d.tokens, &vocab)).collect();
    let grid: Vec<LdaParams> = (0..3).map(|r| LdaParams { k: 8, passes: 2, iterations: 5, seed: r, ..LdaParams::default() }).collect();
    let lda = || store::to_bytes(&select_best_model(&bows[20..], &bows[..20], &vocab, &grid).unwrap().0);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(lda);
    ensure(lda() == lda() && lda() == single, || "lda artifact depends on the run or thread count".into())?;
    Ok("skip-gram, pv-dm and lda artifacts are byte-identical across runs and thread counts".into())
}

// 8

/// Only the runner's presence and splits are checked; full-corpus numbers
/// carry no tolerance.
fn runner_config() -> Check {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/potrika.toml");
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let lines: BTreeSet<&str> = text.lines().map(str::trim).collect();
    for want in [
        "train_per_class = 12500",
        "test_per_class = 2500",
        "thresholds = [0.5, 0.6, 0.7, 0.8, 0.9]",
        "threshold = 0.3",
        "representation = \"docvec\"",
        "labels = \"auto\"",
        "kind = \"knn\"",
    ] {
        ensure(lines.contains(want), || format!("runner config lacks `{want}`"))?;
    }
    Ok("configs/potrika.toml present with 100K/20K splits, th grid 0.5-0.9, multi-label th 0.3; no accuracy tolerance".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, limit: Duration, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(m) if took > limit => Err(format!("{m}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(m) => println!("PASS [{id}] {name}: {m} ({took:.2?}, limit {limit:?})"),
            Err(m) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {m}");
            }
        }
    };
    report(1, "tf-idf formula oracle", Duration::from_secs(1), &mut tfidf_oracle);
    report(2, "multi-label metrics vs brute force", Duration::from_secs(1), &mut metric_equivalence);
    report(3, "planted lda recovery", Duration::from_secs(120), &mut lda_recovery);
    report(4, "gradient checks", Duration::from_secs(10), &mut gradient_checks);
    let data = synthetic();
    let with_data = |f: fn(&Synthetic) -> Check| data.as_ref().map_err(Clone::clone).and_then(f);
    report(5, "manual-label pipeline", Duration::from_secs(300), &mut || with_data(manual_pipeline));
    report(6, "auto-label pipeline", Duration::from_secs(300), &mut || with_data(auto_pipeline));
    report(7, "determinism", Duration::from_secs(120), &mut || with_data(determinism));
    report(8, "full-corpus runner config", Duration::from_secs(1), &mut runner_config);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
