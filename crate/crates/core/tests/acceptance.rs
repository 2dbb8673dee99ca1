//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them on success).

use chatcheck::features::{
    build_vocabulary, extract, extract_all, FeatureSchema, FeatureVector, Vocabulary, BOW_OFFSET,
    FOLLOWING_CHATBOT_OFFSET, FOLLOWING_USER_OFFSET, NEXT_USER_OFFSET, ORDINAL_OFFSET,
    PAIR_OFFSET, PREV_CHATBOT_OFFSET, PREV_USER_OFFSET, RECENT_USER_OFFSET, TARGET_DA_OFFSET,
};
use chatcheck::forest::{
    gini, load_model, save_model, train_forest, train_tree, DenseDataset, FeatureSubset,
    ForestError, Hyperparams, TreeNode,
};
use chatcheck::metrics::{cohen_kappa, evaluate};
use chatcheck::tagger::{annotate_dialogue, Lexicons, TaggerConfig};
use chatcheck::taxonomy::{
    apply_mapping, default_ruleset, parse_ruleset, ChatbotDA, PositionContext, Relevance, SwdaTag,
    UserDA,
};
use chatcheck::transcript::{
    generate_corpus, write_transcripts, Appropriateness, Dialogue, GenSpec, TopicRef, Utterance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

const I: Appropriateness = Appropriateness::Inappropriate;
const N: Appropriateness = Appropriateness::Neutral;
const A: Appropriateness = Appropriateness::Appropriate;

fn report(criterion: u32, description: &str, ok: bool) {
    println!(
        "criterion {criterion}: {} — {description}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {description}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chatcheck"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn chatcheck");
    assert!(
        out.status.success(),
        "chatcheck failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn criterion_01_end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    // a compact grid keeps the run inside the time budget; the search
    // itself (train vs dev selection) is still exercised for real
    let grid: Vec<serde_json::Value> = [(50, 15), (50, 30), (100, 15), (100, 30)]
        .iter()
        .map(|&(n_trees, max_depth)| {
            serde_json::json!({
                "n_trees": n_trees,
                "max_depth": max_depth,
                "min_samples_leaf": 1,
                "min_samples_split": 2,
                "features_per_split": "sqrt",
                "seed": 0,
            })
        })
        .collect();
    let grid_path = dir.path().join("grid.json");
    std::fs::write(&grid_path, serde_json::to_string(&grid).unwrap()).unwrap();

    let started = Instant::now();
    run_ok(bin().args([
        "pipeline",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--n",
        "800",
        "--seed",
        "7",
        "--mismatch-rate",
        "0.15",
        "--grid",
        grid_path.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let elapsed = started.elapsed().as_secs_f64();

    let report_json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("test_report.json")).unwrap(),
    )
    .unwrap();
    let accuracy = report_json["accuracy"].as_f64().unwrap();
    let f1_inappropriate = report_json["per_class"][0]["f1"].as_f64().unwrap();
    report(
        1,
        &format!(
            "pipeline on seed=7 n=800 rate=0.15: weighted accuracy {accuracy:.3} (>= 0.85), \
             Inappropriate F1 {f1_inappropriate:.3} (>= 0.80), runtime {elapsed:.1}s (<= 60s)"
        ),
        accuracy >= 0.85 && f1_inappropriate >= 0.80 && elapsed <= 60.0,
    );
}

#[test]
fn criterion_02_metrics_oracle_equivalence() {
    const EPS: f64 = 1e-9;
    let mut ok = true;

    // five fixed confusion setups with hand-computed values
    let cases: [(&[Appropriateness], &[Appropriateness], f64, f64); 5] = [
        (&[I, N, A], &[I, N, A], 1.0, 1.0),
        // per-class F1s 2/3, 2/3, 1 with supports 2/1/1
        (&[I, I, N, A], &[I, N, N, A], 0.75, 0.75),
        (&[I, I], &[A, A], 0.0, 0.0),
        // absent class I: f1_N = f1_A = 2/3
        (&[N, A, A], &[N, A, N], 2.0 / 3.0, 2.0 / 3.0),
        // P_N = 3/4, R_N = 1 -> F1_N = 6/7; weighted = 3/4 * 6/7 = 9/14
        (&[I, N, N, N], &[N, N, N, N], 0.75, 9.0 / 14.0),
    ];
    for (gold, pred, accuracy, weighted_f1) in cases {
        let r = evaluate(gold, pred).unwrap();
        ok &= (r.accuracy - accuracy).abs() < EPS && (r.weighted_f1 - weighted_f1).abs() < EPS;
    }
    // worked per-class values on the second case
    let r = evaluate(&[I, I, N, A], &[I, N, N, A]).unwrap();
    ok &= (r.per_class[0].precision - 1.0).abs() < EPS
        && (r.per_class[0].recall - 0.5).abs() < EPS
        && (r.per_class[0].f1 - 2.0 / 3.0).abs() < EPS;

    // three fixed annotation pairs
    let kappa_cases: [(&[Appropriateness], &[Appropriateness], f64); 3] = [
        (&[I, N, A, I], &[I, N, A, I], 1.0),
        // p_o = p_e = 0.5
        (&[I, I, N, N], &[I, N, I, N], 0.0),
        // p_o = 5/6, p_e = 1/3
        (&[I, I, A, A, N, N], &[I, I, A, N, N, N], 0.75),
    ];
    for (a, b, expected) in kappa_cases {
        let k = cohen_kappa(a, b).unwrap();
        ok &= (k.value - expected).abs() < EPS;
    }

    report(
        2,
        "evaluate and cohen_kappa match hand computations on 5 matrices and 3 pairs within 1e-9",
        ok,
    );
}

#[test]
fn criterion_03_weighted_recall_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    // one 1,000-sample draw plus many small ones
    for size in std::iter::once(1000).chain(std::iter::repeat(17).take(100)) {
        let gold: Vec<_> = (0..size)
            .map(|_| Appropriateness::from_index(rng.gen_range(0..3)).unwrap())
            .collect();
        let pred: Vec<_> = (0..size)
            .map(|_| Appropriateness::from_index(rng.gen_range(0..3)).unwrap())
            .collect();
        let r = evaluate(&gold, &pred).unwrap();
        ok &= r.weighted_recall == r.accuracy;
    }
    report(
        3,
        "weighted recall equals accuracy exactly on random gold/pred pairs",
        ok,
    );
}

#[test]
fn criterion_04_mapping_totality() {
    let ruleset = default_ruleset();
    let mut cells = 0usize;
    for &tag in SwdaTag::ALL {
        for relevance in [Relevance::Relevant, Relevance::Irrelevant, Relevance::NotApplicable] {
            for context in [PositionContext::AfterQuestion, PositionContext::AfterStatement] {
                // apply_mapping is total by construction; just exercise it
                let _ = apply_mapping(tag, relevance, context, &ruleset.mapping_rules);
                cells += 1;
            }
        }
    }
    // exactly-one is what validate() proves; dropping the catch-all must fail
    let mut crippled = ruleset.clone();
    crippled.mapping_rules.retain(|r| r.priority != 0);
    let json = serde_json::to_string(&crippled).unwrap();
    let rejected = parse_ruleset(&json).is_err();

    report(
        4,
        &format!(
            "all {cells} (tag, relevance, context) cells map to exactly one UserDA; \
             catch-all removal is rejected"
        ),
        cells == 258 && ruleset.validate().is_ok() && rejected,
    );
}

fn toy_vector(values: &[(usize, f64)], label: Appropriateness) -> FeatureVector {
    FeatureVector {
        values: values.iter().copied().collect(),
        label: Some(label),
        dialogue_id: "toy".into(),
        turn_index: 0,
    }
}

/// Brute-force exhaustive best split: all features, all midpoints, Gini
/// gain, ties to lowest feature then lowest threshold. Independent of the
/// forest module's internals.
fn oracle_best_split(vectors: &[FeatureVector], n_features: usize) -> (usize, f64) {
    let n = vectors.len();
    let gini_of = |members: &[&FeatureVector]| -> f64 {
        let mut counts = [0.0f64; 3];
        for v in members {
            counts[v.label.unwrap().index()] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
    };
    let all: Vec<&FeatureVector> = vectors.iter().collect();
    let parent = gini_of(&all);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..n_features {
        let mut vals: Vec<f64> = vectors.iter().map(|v| v.get(f)).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let left: Vec<&FeatureVector> =
                vectors.iter().filter(|v| v.get(f) <= threshold).collect();
            let right: Vec<&FeatureVector> =
                vectors.iter().filter(|v| v.get(f) > threshold).collect();
            let gain = parent
                - (left.len() as f64 / n as f64) * gini_of(&left)
                - (right.len() as f64 / n as f64) * gini_of(&right);
            if gain <= 1e-12 {
                continue;
            }
            let better = match best {
                None => true,
                Some((g, bf, bt)) => {
                    gain > g || (gain == g && (f < bf || (f == bf && threshold < bt)))
                }
            };
            if better {
                best = Some((gain, f, threshold));
            }
        }
    }
    let (_, f, t) = best.expect("separable data has a split");
    (f, t)
}

#[test]
fn criterion_05_forest_desk_scale() {
    // (a) Gini worked examples
    let gini_ok = (gini(&[4, 0, 0]).unwrap()).abs() < 1e-12
        && (gini(&[2, 2]).unwrap() - 0.5).abs() < 1e-12
        && (gini(&[3, 1]).unwrap() - 0.375).abs() < 1e-12
        && matches!(gini(&[0, 0, 0]), Err(ForestError::AllZeroCounts));

    // (b) 200-sample separable 3-class toy set, single full-depth tree
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vectors: Vec<FeatureVector> = (0..200)
        .map(|i| {
            let class = i % 3;
            toy_vector(
                &[
                    (0, class as f64 * 2.0 + rng.gen_range(0.0..0.5)),
                    (1, rng.gen_range(0.0..1.0)),
                ],
                Appropriateness::from_index(class).unwrap(),
            )
        })
        .collect();
    let vocab = Vocabulary::empty();
    let schema = FeatureSchema::new(&vocab);
    let hp = Hyperparams {
        n_trees: 1,
        max_depth: 64,
        features_per_split: FeatureSubset::All,
        ..Hyperparams::default()
    };
    let data = DenseDataset::from_vectors(&vectors, &schema).unwrap();
    let tree = train_tree(&data, &hp, 0).unwrap();
    let train_accuracy_one = vectors
        .iter()
        .all(|v| tree.vote(&|i| v.get(i)) == v.label.unwrap().index());

    // oracle agreement on a 10-sample instance: identical chosen root split
    let small = &vectors[..10];
    let small_data = DenseDataset::from_vectors(small, &schema).unwrap();
    let small_tree = train_tree(&small_data, &hp, 0).unwrap();
    let oracle = oracle_best_split(small, schema.dimension());
    let split_matches = match &small_tree {
        TreeNode::Internal {
            feature_index,
            threshold,
            ..
        } => (*feature_index, *threshold) == oracle,
        TreeNode::Leaf { .. } => false,
    };

    // (c) byte-identical serialization across 1 and 4 threads
    let hp4 = Hyperparams {
        n_trees: 16,
        max_depth: 10,
        ..Hyperparams::default()
    };
    let serialize = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let model = pool.install(|| train_forest(&vectors, &vocab, &schema, &hp4).unwrap());
        serde_json::to_vec(&model).unwrap()
    };
    let thread_invariant = serialize(1) == serialize(4);

    report(
        5,
        &format!(
            "gini examples {gini_ok}, separable training accuracy 1.0 {train_accuracy_one}, \
             oracle split agreement {split_matches}, 1-vs-4-thread byte identity {thread_invariant}"
        ),
        gini_ok && train_accuracy_one && split_matches && thread_invariant,
    );
}

fn block_l0(v: &FeatureVector, start: usize, width: usize) -> usize {
    (start..start + width).filter(|&i| v.get(i) != 0.0).count()
}

#[test]
fn criterion_06_feature_schema() {
    let corpus = generate_corpus(&GenSpec {
        n_dialogues: 40,
        seed: 2,
        mismatch_rate: 0.1,
    });
    let mut ok = true;

    for vocab_size in [0usize, 100] {
        let vocab = if vocab_size == 0 {
            Vocabulary::empty()
        } else {
            let v = build_vocabulary(&corpus, 1, 100).unwrap();
            ok &= v.len() == 100;
            v
        };
        let schema = FeatureSchema::new(&vocab);
        ok &= schema.dimension() == 259 + vocab.len();
        let vectors = extract_all(&corpus, &vocab, &schema).unwrap();
        ok &= !vectors.is_empty();
        for v in &vectors {
            ok &= v.values.keys().all(|&i| i < schema.dimension());
            // one-hot blocks carry at most one active indicator
            ok &= block_l0(v, TARGET_DA_OFFSET, 14) <= 1;
            ok &= block_l0(v, RECENT_USER_OFFSET, 12) <= 1;
            ok &= block_l0(v, NEXT_USER_OFFSET, 12) <= 1;
            ok &= block_l0(v, PAIR_OFFSET, 168) <= 1;
        }
    }

    // absence encodings for a target at turn 0
    let vocab = Vocabulary::empty();
    let schema = FeatureSchema::new(&vocab);
    let opener = &corpus[0];
    let v0 = extract(opener, 0, &vocab, &schema).unwrap();
    ok &= block_l0(&v0, PREV_CHATBOT_OFFSET, 14) == 0;
    ok &= block_l0(&v0, RECENT_USER_OFFSET, 12) == 0;
    ok &= block_l0(&v0, PREV_USER_OFFSET, 12) == 0;
    ok &= block_l0(&v0, PAIR_OFFSET, 168) == 0;
    ok &= block_l0(&v0, FOLLOWING_CHATBOT_OFFSET, 14) > 0 || opener.utterances.len() == 1;
    ok &= v0.get(ORDINAL_OFFSET) == 1.0;
    ok &= BOW_OFFSET == 259 && FOLLOWING_USER_OFFSET == 78;

    report(
        6,
        "dimension 259 + |V| at |V| in {0, 100}; one-hot L0 <= 1; turn-0 absence encodings",
        ok,
    );
}

fn dance_mismatch_dialogue() -> Dialogue {
    let mut opener = Utterance::chatbot("What do you usually do in your free time?");
    opener.chatbot_da = Some(ChatbotDA::Other);
    let mut answer = Utterance::user("dance");
    answer.user_da = Some(UserDA::AnswerRelevant);
    let mut reply = Utterance::chatbot("I wish I could... but I have no feet :-)");
    reply.chatbot_da = Some(ChatbotDA::HandleUserRequest);
    Dialogue::new(
        "dance",
        TopicRef {
            topic_id: "hobbies".into(),
            question_text: "What do you usually do in your free time?".into(),
        },
        vec![opener, answer, reply],
    )
}

fn train_small_model(dir: &Path) -> std::path::PathBuf {
    let corpus_path = dir.join("corpus.jsonl");
    run_ok(bin().args([
        "generate",
        "--out",
        corpus_path.to_str().unwrap(),
        "--n",
        "80",
        "--seed",
        "3",
        "--mismatch-rate",
        "0.15",
    ]));
    let model_path = dir.join("model.json");
    run_ok(bin().args([
        "train",
        "--in",
        corpus_path.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
        "--out-dir",
        dir.join("train-out").to_str().unwrap(),
        "--seed",
        "3",
        "--grid",
        "none",
    ]));
    model_path
}

#[test]
fn criterion_07_mismatch_explanation_replication() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = train_small_model(dir.path());

    let transcript_path = dir.path().join("dance.jsonl");
    write_transcripts(&[dance_mismatch_dialogue()], &transcript_path).unwrap();
    let report_path = dir.path().join("report.json");
    run_ok(bin().args([
        "detect",
        "--in",
        transcript_path.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
        "--format",
        "json",
    ]));

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let group = parsed["groups"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["pair"] == "user-answer-relevant / chatbot-handle-user-request");
    let ok = match group {
        None => false,
        Some(g) => {
            let example = &g["examples"][0];
            g["compatible"] == false
                && example["compatible"] == false
                && example["expected_das"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .any(|d| d == "chatbot-respond-relevant")
        }
    };
    report(
        7,
        "detect report contains the (user-answer-relevant, chatbot-handle-user-request) \
         mismatch with chatbot-respond-relevant among expected acts",
        ok,
    );
}

#[test]
fn criterion_08_model_round_trip() {
    let corpus = generate_corpus(&GenSpec {
        n_dialogues: 60,
        seed: 11,
        mismatch_rate: 0.15,
    });
    let (train_split, test_split) = corpus.split_at(48);
    let vocab = build_vocabulary(train_split, 2, 5000).unwrap();
    let schema = FeatureSchema::new(&vocab);
    let train_x: Vec<_> = extract_all(train_split, &vocab, &schema)
        .unwrap()
        .into_iter()
        .filter(|v| v.label.is_some())
        .collect();
    let hp = Hyperparams {
        n_trees: 40,
        max_depth: 20,
        seed: 11,
        ..Hyperparams::default()
    };
    let model = train_forest(&train_x, &vocab, &schema, &hp).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();

    let test_x = extract_all(test_split, &vocab, &schema).unwrap();
    let identical = test_x.iter().all(|v| {
        model.predict(v, &schema).unwrap() == loaded.predict(v, &schema).unwrap()
    });

    let bumped = std::fs::read_to_string(&path)
        .unwrap()
        .replace("\"format_version\":1", "\"format_version\":7");
    std::fs::write(&path, bumped).unwrap();
    let version_gate = matches!(
        load_model(&path),
        Err(ForestError::VersionMismatch { found: 7 })
    );

    report(
        8,
        &format!(
            "identical predictions on {} test vectors after round trip; bumped version rejected",
            test_x.len()
        ),
        !test_x.is_empty() && identical && version_gate,
    );
}

#[test]
fn criterion_09_tagger_fidelity() {
    let ruleset = default_ruleset();
    let config = TaggerConfig::default();
    let lexicons = Lexicons::default();
    let topic = TopicRef {
        topic_id: "hobbies".into(),
        question_text: "What hobbies or interests do you have?".into(),
    };

    // (utterance, preceding chatbot turn, expected user DA)
    let cases: [(&str, &str, UserDA); 5] = [
        ("Tell me a joke.", "That sounds like a lot of fun.", UserDA::Request),
        ("Next question.", "What hobbies or interests do you have?", UserDA::Command),
        ("Got it!", "What hobbies or interests do you have?", UserDA::Acknowledge),
        ("Thank you!", "What hobbies or interests do you have?", UserDA::SocialObligations),
        ("blea blahe", "What hobbies or interests do you have?", UserDA::Gibberish),
    ];
    let mut passed = 0;
    for (text, context, expected) in cases {
        let dialogue = Dialogue::new(
            "t",
            topic.clone(),
            vec![Utterance::chatbot(context), Utterance::user(text)],
        );
        let annotated = annotate_dialogue(&dialogue, &ruleset.mapping_rules, &config, &lexicons)
            .unwrap();
        let got = annotated.utterances[1].user_da;
        if got == Some(expected) {
            passed += 1;
        } else {
            eprintln!("tagger case {text:?} after {context:?}: got {got:?}, want {expected:?}");
        }
    }
    report(9, &format!("{passed}/5 heuristic tagger cases (5/5 required)"), passed == 5);
}

#[test]
fn criterion_10_storage_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    run_ok(bin().args([
        "generate",
        "--out",
        corpus_path.to_str().unwrap(),
        "--n",
        "200",
        "--seed",
        "7",
        "--mismatch-rate",
        "0.15",
    ]));
    let model_path = dir.path().join("model.json");
    // --grid none trains the default 500-tree / depth-45 configuration
    let stdout = run_ok(bin().args([
        "train",
        "--in",
        corpus_path.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
        "--seed",
        "7",
        "--grid",
        "none",
    ]));

    // e.g. "model: 500 trees, 57998 nodes, 3172693 bytes at ..."
    let line = stdout.lines().find(|l| l.starts_with("model:"));
    let fields: BTreeMap<&str, u64> = line
        .map(|l| {
            l.trim_start_matches("model:")
                .split(',')
                .filter_map(|part| {
                    let mut it = part.split_whitespace();
                    let value: u64 = it.next()?.parse().ok()?;
                    let unit = it.next()?;
                    Some((unit, value))
                })
                .collect()
        })
        .unwrap_or_default();
    let trees = fields.get("trees").copied().unwrap_or(0);
    let nodes = fields.get("nodes").copied().unwrap_or(0);
    let bytes = fields.get("bytes").copied().unwrap_or(u64::MAX);
    let on_disk = std::fs::metadata(&model_path).map(|m| m.len()).unwrap_or(u64::MAX);

    report(
        10,
        &format!(
            "train reports {trees} trees, {nodes} nodes, {bytes} bytes; \
             file is {on_disk} bytes (< 50 MB)"
        ),
        trees == 500 && nodes > 0 && bytes == on_disk && on_disk < 50 * 1024 * 1024,
    );
}
