//! Command-line interface: generate / annotate / train / evaluate /
//! detect / kappa / pipeline subcommands over JSONL transcript files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed
//! transcripts, rulesets, or models), 3 internal error.

use crate::explain::{build_report, explain_response, render_report, Explanation, ReportFormat};
use crate::features::{build_vocabulary, extract, extract_all, FeatureSchema, FeatureVector};
use crate::forest::{
    default_grid, load_model, save_model, train_forest, ForestError, ForestModel, Hyperparams,
};
use crate::metrics::{cohen_kappa, evaluate, EvalReport};
use crate::tagger::{annotate_dialogue, Lexicons, TaggerConfig, TaggerMode};
use crate::taxonomy::{default_ruleset, load_ruleset, Ruleset};
use crate::transcript::{
    generate_corpus, load_transcripts, write_transcripts, Appropriateness, Dialogue, GenSpec,
    Speaker,
};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

macro_rules! data_error {
    ($($ty:ty),+) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        })+
    };
}

data_error!(
    crate::transcript::LoadError,
    crate::transcript::WriteError,
    crate::transcript::TranscriptError,
    crate::taxonomy::RulesetError,
    crate::tagger::TaggerError,
    crate::features::FeatureError,
    crate::metrics::MetricsError,
    crate::explain::ExplainError,
    std::io::Error
);

impl From<ForestError> for CliError {
    fn from(e: ForestError) -> Self {
        match e {
            ForestError::InvalidHyperparams(_) | ForestError::EmptyGrid => {
                CliError::Usage(e.to_string())
            }
            ForestError::AllZeroCounts => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaggerArg {
    Heuristic,
    Pretagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Md,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "chatcheck",
    version,
    about = "Detect and explain inappropriate chatbot responses in interview transcripts"
)]
pub struct Cli {
    /// Mapping-rule and compatibility-matrix file (defaults to the
    /// bundled ruleset).
    #[arg(long, global = true, env = "CHATCHECK_RULESET")]
    pub ruleset: Option<PathBuf>,

    /// Directory of lexicon overrides for the heuristic taggers.
    #[arg(long, global = true)]
    pub lexicons: Option<PathBuf>,

    /// Worker threads for forest training (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Abort on the first malformed transcript record instead of
    /// skipping it.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic interview corpus.
    Generate {
        #[arg(long = "out")]
        out: PathBuf,
        /// Number of dialogues.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of chatbot replies replaced by incompatible acts.
        #[arg(long, default_value_t = 0.15)]
        mismatch_rate: f64,
    },
    /// Fill in missing dialogue-act annotations.
    Annotate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = TaggerArg::Heuristic)]
        tagger: TaggerArg,
    },
    /// Train a random-forest classifier (with optional grid search).
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Directory for split files and reports.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `default`, `none`, or a JSON file of configurations.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, value_enum, default_value_t = TaggerArg::Heuristic)]
        tagger: TaggerArg,
    },
    /// Score a model against gold labels.
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = TaggerArg::Heuristic)]
        tagger: TaggerArg,
    },
    /// Classify responses and emit a mismatch-explanation report.
    Detect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Report file (stdout if omitted).
        #[arg(long = "out")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = TaggerArg::Heuristic)]
        tagger: TaggerArg,
    },
    /// Inter-annotator agreement between two label files.
    Kappa {
        /// First annotator's transcript file.
        file_a: PathBuf,
        /// Second annotator's transcript file.
        file_b: PathBuf,
    },
    /// Generate, annotate, train, evaluate, and detect in one run.
    Pipeline {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.15)]
        mismatch_rate: f64,
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
    },
}

fn tagger_config(arg: TaggerArg) -> TaggerConfig {
    TaggerConfig {
        mode: match arg {
            TaggerArg::Heuristic => TaggerMode::Heuristic,
            TaggerArg::Pretagged => TaggerMode::PreTagged,
        },
        ..TaggerConfig::default()
    }
}

fn load_context(cli: &Cli) -> Result<(Ruleset, Lexicons), CliError> {
    let ruleset = match &cli.ruleset {
        Some(path) => load_ruleset(path)?,
        None => default_ruleset(),
    };
    let lexicons = match &cli.lexicons {
        Some(dir) => Lexicons::from_dir(dir)?,
        None => Lexicons::default(),
    };
    Ok((ruleset, lexicons))
}

fn load_input(path: &Path, strict: bool) -> Result<Vec<Dialogue>, CliError> {
    let outcome = load_transcripts(path, strict)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if !outcome.skipped.is_empty() {
        eprintln!(
            "warning: skipped {} malformed record(s) in {}",
            outcome.skipped.len(),
            path.display()
        );
    }
    if outcome.dialogues.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no usable dialogues",
            path.display()
        )));
    }
    Ok(outcome.dialogues)
}

fn annotate_all(
    dialogues: &[Dialogue],
    config: &TaggerConfig,
    ruleset: &Ruleset,
    lexicons: &Lexicons,
) -> Result<Vec<Dialogue>, CliError> {
    dialogues
        .iter()
        .map(|d| annotate_dialogue(d, &ruleset.mapping_rules, config, lexicons).map_err(Into::into))
        .collect()
}

/// Dialogue-level 80/20 train/test split by seeded shuffle.
fn split_dialogues(dialogues: &[Dialogue], seed: u64) -> (Vec<Dialogue>, Vec<Dialogue>) {
    let mut order: Vec<usize> = (0..dialogues.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = ((dialogues.len() * 8) / 10).max(1);
    let train = order[..n_train].iter().map(|&i| dialogues[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| dialogues[i].clone()).collect();
    (train, test)
}

fn labeled(vectors: Vec<FeatureVector>) -> Vec<FeatureVector> {
    vectors.into_iter().filter(|v| v.label.is_some()).collect()
}

fn parse_grid(arg: &str, seed: u64) -> Result<Vec<Hyperparams>, CliError> {
    match arg {
        "default" => Ok(default_grid(seed)),
        "none" => Ok(vec![Hyperparams {
            seed,
            ..Hyperparams::default()
        }]),
        path => {
            let json = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read grid file {path}: {e}"))
            })?;
            let mut grid: Vec<Hyperparams> = serde_json::from_str(&json)
                .map_err(|e| CliError::Data(format!("grid file {path}: {e}")))?;
            if grid.is_empty() {
                return Err(CliError::Usage(format!("grid file {path} is empty")));
            }
            for hp in &mut grid {
                hp.seed = seed;
                hp.validate().map_err(CliError::from)?;
            }
            Ok(grid)
        }
    }
}

struct TrainOutput {
    model: ForestModel,
    schema: FeatureSchema,
    test: Vec<Dialogue>,
    test_report: Option<EvalReport>,
}

fn run_training(
    dialogues: &[Dialogue],
    model_path: &Path,
    out_dir: &Path,
    seed: u64,
    grid_arg: &str,
) -> Result<TrainOutput, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let (train, test) = split_dialogues(dialogues, seed);
    write_transcripts(&train, &out_dir.join("train_split.jsonl"))?;
    write_transcripts(&test, &out_dir.join("test_split.jsonl"))?;

    let grid = parse_grid(grid_arg, seed)?;
    let best = if grid.len() == 1 {
        grid[0].clone()
    } else {
        // dev = 10% of the training dialogues, held out for model selection
        let n_dev = (train.len() / 10).max(1);
        if train.len() <= n_dev {
            return Err(CliError::Data(
                "too few dialogues for a dev split; use --grid none".into(),
            ));
        }
        let (fit, dev) = train.split_at(train.len() - n_dev);
        let vocab = build_vocabulary(fit, 2, 5000)?;
        let schema = FeatureSchema::new(&vocab);
        let fit_x = labeled(extract_all(fit, &vocab, &schema)?);
        let dev_x = labeled(extract_all(dev, &vocab, &schema)?);
        if fit_x.is_empty() || dev_x.is_empty() {
            return Err(CliError::Data("no gold-labeled responses to train on".into()));
        }
        let (best, entries) = crate::forest::grid_search(&fit_x, &dev_x, &vocab, &schema, &grid)?;
        std::fs::write(
            out_dir.join("grid_report.json"),
            serde_json::to_string_pretty(&entries)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        )?;
        println!(
            "grid search: {} configuration(s); best n_trees={} max_depth={} \
             min_samples_leaf={} features={:?}",
            entries.len(), best.n_trees, best.max_depth, best.min_samples_leaf,
            best.features_per_split
        );
        best
    };

    // final model: vocabulary and fit on the full training split
    let vocab = build_vocabulary(&train, 2, 5000)?;
    let schema = FeatureSchema::new(&vocab);
    let train_x = labeled(extract_all(&train, &vocab, &schema)?);
    if train_x.is_empty() {
        return Err(CliError::Data("no gold-labeled responses to train on".into()));
    }
    let model = train_forest(&train_x, &vocab, &schema, &best)?;
    save_model(&model, model_path)?;
    let file_size = std::fs::metadata(model_path)?.len();
    println!(
        "model: {} trees, {} nodes, {} bytes at {}",
        model.trees.len(),
        model.total_nodes(),
        file_size,
        model_path.display()
    );

    let test_x = labeled(extract_all(&test, &vocab, &schema)?);
    let test_report = if test_x.is_empty() {
        None
    } else {
        let gold: Vec<_> = test_x.iter().map(|v| v.label.unwrap()).collect();
        let mut pred = Vec::with_capacity(test_x.len());
        for v in &test_x {
            pred.push(model.predict(v, &schema)?.label);
        }
        let report = evaluate(&gold, &pred)?;
        std::fs::write(
            out_dir.join("test_report.json"),
            serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        )?;
        Some(report)
    };

    Ok(TrainOutput {
        model,
        schema,
        test,
        test_report,
    })
}

fn da_frequency_table(dialogues: &[Dialogue]) -> String {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for d in dialogues {
        for u in &d.utterances {
            if let Some(da) = u.user_da {
                *counts.entry(da.code()).or_default() += 1;
            }
            if let Some(da) = u.chatbot_da {
                *counts.entry(da.code()).or_default() += 1;
            }
        }
    }
    let width = counts.keys().map(|k| k.len()).max().unwrap_or(0);
    let mut out = String::from("dialogue-act frequencies:\n");
    for (code, n) in counts {
        out.push_str(&format!("  {code:width$}  {n}\n"));
    }
    out
}

/// Fraction of pre-annotated turns where the tagger reproduces the
/// existing act, measured on a stripped copy.
fn tagger_agreement(
    dialogues: &[Dialogue],
    config: &TaggerConfig,
    ruleset: &Ruleset,
    lexicons: &Lexicons,
) -> Result<Option<f64>, CliError> {
    let mut matches = 0usize;
    let mut total = 0usize;
    for d in dialogues {
        let mut stripped = d.clone();
        for u in &mut stripped.utterances {
            u.user_da = None;
            u.chatbot_da = None;
            if config.mode == TaggerMode::Heuristic {
                u.swda_tag = None;
            }
        }
        let redone = annotate_dialogue(&stripped, &ruleset.mapping_rules, config, lexicons)?;
        for (orig, new) in d.utterances.iter().zip(&redone.utterances) {
            match orig.speaker {
                Speaker::User => {
                    if let Some(gold) = orig.user_da {
                        total += 1;
                        if new.user_da == Some(gold) {
                            matches += 1;
                        }
                    }
                }
                Speaker::Chatbot => {
                    if let Some(gold) = orig.chatbot_da {
                        total += 1;
                        if new.chatbot_da == Some(gold) {
                            matches += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((total > 0).then(|| matches as f64 / total as f64))
}

fn detect_and_report(
    dialogues: &[Dialogue],
    model: &ForestModel,
    schema: &FeatureSchema,
    ruleset: &Ruleset,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<(usize, usize), CliError> {
    let mut explanations: Vec<Explanation> = Vec::new();
    for d in dialogues {
        for i in 0..d.utterances.len() {
            if d.utterances[i].speaker != Speaker::Chatbot {
                continue;
            }
            let vector = extract(d, i, &model.vocabulary, schema)?;
            let prediction = model.predict(&vector, schema)?;
            explanations.push(explain_response(d, i, &prediction, &ruleset.compatibility)?);
        }
    }
    let flagged = explanations
        .iter()
        .filter(|e| e.predicted == Appropriateness::Inappropriate)
        .count();
    let total = explanations.len();
    let report = build_report(&explanations);
    let rendered = render_report(
        &report,
        match format {
            FormatArg::Md => ReportFormat::Markdown,
            FormatArg::Json => ReportFormat::Json,
        },
    );
    match out {
        Some(path) => std::fs::write(path, rendered)?,
        None => println!("{rendered}"),
    }
    Ok((flagged, total))
}

fn evaluate_with_model(
    dialogues: &[Dialogue],
    model: &ForestModel,
    schema: &FeatureSchema,
) -> Result<EvalReport, CliError> {
    let vectors = labeled(extract_all(dialogues, &model.vocabulary, schema)?);
    if vectors.is_empty() {
        return Err(CliError::Data("no gold-labeled responses to evaluate".into()));
    }
    let gold: Vec<_> = vectors.iter().map(|v| v.label.unwrap()).collect();
    let mut pred = Vec::with_capacity(vectors.len());
    for v in &vectors {
        pred.push(model.predict(v, schema)?.label);
    }
    Ok(evaluate(&gold, &pred)?)
}

fn print_eval(report: &EvalReport, format: FormatArg) -> Result<(), CliError> {
    match format {
        FormatArg::Md => println!("{report}"),
        FormatArg::Json => println!(
            "{}",
            serde_json::to_string_pretty(report).map_err(|e| CliError::Internal(e.to_string()))?
        ),
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        // best-effort: the global pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match &cli.command {
        Command::Generate {
            out,
            n,
            seed,
            mismatch_rate,
        } => {
            if !(0.0..=1.0).contains(mismatch_rate) {
                return Err(CliError::Usage(
                    "--mismatch-rate must be between 0 and 1".into(),
                ));
            }
            let dialogues = generate_corpus(&GenSpec {
                n_dialogues: *n,
                seed: *seed,
                mismatch_rate: *mismatch_rate,
            });
            write_transcripts(&dialogues, out)?;
            println!("wrote {} dialogue(s) to {}", dialogues.len(), out.display());
            Ok(())
        }
        Command::Annotate { input, out, tagger } => {
            let (ruleset, lexicons) = load_context(cli)?;
            let config = tagger_config(*tagger);
            let dialogues = load_input(input, cli.strict)?;
            if let Some(rate) = tagger_agreement(&dialogues, &config, &ruleset, &lexicons)? {
                println!("agreement with existing annotations: {rate:.3}");
            }
            let annotated = annotate_all(&dialogues, &config, &ruleset, &lexicons)?;
            print!("{}", da_frequency_table(&annotated));
            write_transcripts(&annotated, out)?;
            println!(
                "annotated {} dialogue(s) to {}",
                annotated.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            input,
            model,
            out_dir,
            seed,
            grid,
            tagger,
        } => {
            let (ruleset, lexicons) = load_context(cli)?;
            let dialogues = load_input(input, cli.strict)?;
            let annotated = annotate_all(&dialogues, &tagger_config(*tagger), &ruleset, &lexicons)?;
            let output = run_training(&annotated, model, out_dir, *seed, grid)?;
            if let Some(report) = &output.test_report {
                println!("{report}");
            } else {
                println!("test split has no gold labels; skipped evaluation");
            }
            Ok(())
        }
        Command::Evaluate {
            input,
            model,
            format,
            tagger,
        } => {
            let (ruleset, lexicons) = load_context(cli)?;
            let model = load_model(model)?;
            let schema = model.schema.clone();
            let dialogues = load_input(input, cli.strict)?;
            let annotated = annotate_all(&dialogues, &tagger_config(*tagger), &ruleset, &lexicons)?;
            let report = evaluate_with_model(&annotated, &model, &schema)?;
            print_eval(&report, *format)
        }
        Command::Detect {
            input,
            model,
            out,
            format,
            tagger,
        } => {
            let (ruleset, lexicons) = load_context(cli)?;
            let model = load_model(model)?;
            let schema = model.schema.clone();
            let dialogues = load_input(input, cli.strict)?;
            let annotated = annotate_all(&dialogues, &tagger_config(*tagger), &ruleset, &lexicons)?;
            let (flagged, total) =
                detect_and_report(&annotated, &model, &schema, &ruleset, *format, out.as_deref())?;
            println!("flagged {flagged} of {total} responses");
            Ok(())
        }
        Command::Kappa { file_a, file_b } => {
            let a = load_input(file_a, cli.strict)?;
            let b = load_input(file_b, cli.strict)?;
            let collect = |ds: &[Dialogue]| -> BTreeMap<(String, usize), Appropriateness> {
                ds.iter()
                    .flat_map(|d| {
                        d.utterances.iter().filter_map(|u| {
                            u.gold_label.map(|l| ((d.id.clone(), u.turn_index), l))
                        })
                    })
                    .collect()
            };
            let labels_a = collect(&a);
            let labels_b = collect(&b);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (key, la) in &labels_a {
                if let Some(lb) = labels_b.get(key) {
                    xs.push(*la);
                    ys.push(*lb);
                }
            }
            if xs.is_empty() {
                return Err(CliError::Data(
                    "no overlapping labeled responses between the two files".into(),
                ));
            }
            let kappa = cohen_kappa(&xs, &ys)?;
            println!("items: {}", xs.len());
            println!("observed agreement: {:.4}", kappa.observed_agreement);
            println!("expected agreement: {:.4}", kappa.expected_agreement);
            println!("kappa: {:.4}", kappa.value);
            if kappa.degenerate_marginals {
                println!("note: degenerate marginals (a single label dominates both annotators)");
            }
            Ok(())
        }
        Command::Pipeline {
            out_dir,
            n,
            seed,
            mismatch_rate,
            grid,
            format,
        } => {
            let (ruleset, lexicons) = load_context(cli)?;
            std::fs::create_dir_all(out_dir)?;
            let corpus = generate_corpus(&GenSpec {
                n_dialogues: *n,
                seed: *seed,
                mismatch_rate: *mismatch_rate,
            });
            let corpus_path = out_dir.join("corpus.jsonl");
            write_transcripts(&corpus, &corpus_path)?;
            println!("generated {} dialogue(s) to {}", corpus.len(), corpus_path.display());

            let config = tagger_config(TaggerArg::Heuristic);
            let annotated = annotate_all(&corpus, &config, &ruleset, &lexicons)?;
            let output = run_training(
                &annotated,
                &out_dir.join("model.json"),
                out_dir,
                *seed,
                grid,
            )?;
            let Some(report) = &output.test_report else {
                return Err(CliError::Data("test split has no gold labels".into()));
            };
            print_eval(report, *format)?;

            let (flagged, total) = detect_and_report(
                &output.test,
                &output.model,
                &output.schema,
                &ruleset,
                *format,
                Some(&out_dir.join("detect_report.md")),
            )?;
            println!("flagged {flagged} of {total} responses");
            Ok(())
        }
    }
}

/// Parses the given arguments and runs the CLI, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
