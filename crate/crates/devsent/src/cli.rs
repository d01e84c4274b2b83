//! The `devsent` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use devsent_core::baseline::explain;
use devsent_core::corpus::Tokenizer;
use devsent_core::dsm::{train_embeddings, Architecture, EmbeddingSpace};
use devsent_core::evalkit::{ablation_run, sample_for_annotation, stratified_split, vote_all, AblationSetting, CSelection, SplitData};
use devsent_core::features::{build_schema, FeatureExtractor, FeatureSchema, FeatureSet};
use devsent_core::learner::PolarityModel;
use devsent_core::lexicon::Lexicon;

use crate::config::{require_file, DsmConfig, RunConfig, Settings};
use crate::error::{Error, Result};
use crate::formats::{self, PostRecord};
use crate::pipeline::{self, TrainRequest};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "devsent", version, about = "Sentiment polarity toolkit for developer-authored text")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults for the flags below
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory with terms.txt and optional emoticons/boosters/negations/laughter files
    #[arg(long, global = true)]
    pub lexicon_dir: Option<PathBuf>,
    /// Word-vector text file
    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,
    /// Model JSON file (its schema is stored next to it as *.schema.json)
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Directory for relative output paths
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated C values for tuning
    #[arg(long, global = true, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    /// ngrams | keyword | keyword+semantic | full
    #[arg(long, global = true)]
    pub feature_set: Option<FeatureSet>,
    /// Threads for preprocessing, extraction, prediction and tuning
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output (repeatable); RUST_LOG also works
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strip markup and tokenize posts
    Preprocess {
        input: PathBuf,
        /// Cleaned posts CSV
        #[arg(long)]
        cleaned: PathBuf,
        /// Token-line corpus for embedding training
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train word embeddings on a token-line corpus
    TrainDsm {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        architecture: Option<Architecture>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        negative: Option<usize>,
        #[arg(long)]
        sample: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        alpha: Option<f32>,
    },
    /// Score posts with the lexicon baseline, writing id,p,n,label
    Baseline {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print the per-token scoring trace of every post
        #[arg(long)]
        explain: bool,
    },
    /// Export sparse feature vectors
    Extract {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Reuse this schema instead of building one from the input
        #[arg(long)]
        schema_in: Option<PathBuf>,
        /// Where to write the schema (default: next to the output)
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Train a classifier on labeled posts (tunes C unless --c is given)
    Train {
        input: PathBuf,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Cross-validate every C in the grid
    Tune {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Predict polarity with a trained model
    Classify {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare predicted labels with gold labels
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the text tables here instead of standard output
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Incremental feature-setting comparison on a stratified split
    Ablate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Pairwise weighted kappa and observed agreement between coders
    Kappa {
        annotations: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Majority-vote gold labels from three annotations per item
    Vote {
        annotations: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Draw an annotation sample balanced over post type and baseline label
    Sample {
        input: PathBuf,
        #[arg(long)]
        n_per_cell: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

impl GlobalArgs {
    fn settings(&self) -> Result<Settings> {
        let flags = RunConfig {
            lexicon_dir: self.lexicon_dir.clone(),
            vectors: self.vectors.clone(),
            model: self.model.clone(),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            c_grid: self.c_grid.clone(),
            folds: self.folds,
            train_fraction: self.train_fraction,
            feature_set: self.feature_set,
            workers: self.workers,
            dsm: DsmConfig::default(),
        };
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        flags.or(file).resolve()
    }
}

/// Schema sidecar of a model file: `model.json` → `model.schema.json`.
pub fn schema_path_for(model: &Path) -> PathBuf {
    model.with_extension("schema.json")
}

struct Resources {
    lexicon: Lexicon,
    space: Option<EmbeddingSpace>,
}

impl Resources {
    fn tokenizer(&self) -> Tokenizer {
        self.lexicon.tokenizer()
    }
}

fn load_lexicon(s: &Settings) -> Result<Lexicon> {
    let dir = s.lexicon_dir()?;
    let lex = formats::load_lexicon(dir)?;
    log::info!("lexicon: {} terms from {}", lex.term_count(), dir.display());
    Ok(lex)
}

/// Lexicon plus, when the feature set needs it, the embedding space.
fn load_resources(s: &Settings, need_space: bool) -> Result<Resources> {
    let vectors = s.vectors()?;
    if need_space && vectors.is_none() {
        return Err(Error::Usage(format!("feature set {} needs --vectors", s.feature_set)));
    }
    let lexicon = load_lexicon(s)?;
    let space = match vectors {
        Some(p) if need_space => {
            let space = formats::read_vectors(p)?;
            log::info!("vectors: {} words × {} from {}", space.len(), space.dim(), p.display());
            Some(space)
        }
        _ => None,
    };
    Ok(Resources { lexicon, space })
}

fn read_posts(path: &Path) -> Result<Vec<PostRecord>> {
    require_file(path)?;
    let posts = formats::read_posts(path)?;
    log::info!("read {} posts from {}", posts.len(), path.display());
    Ok(posts)
}

fn emit_table(text: &str, table: Option<&Path>) -> Result<()> {
    match table {
        Some(p) => formats::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let s = cli.global.settings()?;
    let out = |p: &Path| s.output(p);
    pipeline::with_workers(s.workers, || match cli.command {
        Command::Preprocess { input, cleaned, corpus } => {
            let tokenizer = match &s.lexicon_dir {
                Some(_) => load_lexicon(&s)?.tokenizer(),
                None => Tokenizer::default(),
            };
            let posts = read_posts(&input)?;
            let docs = pipeline::clean_posts(&posts, &tokenizer);
            let labels: Vec<_> = posts.iter().map(|p| p.label).collect();
            formats::write_cleaned(&out(&cleaned), &docs, &labels)?;
            if let Some(c) = corpus {
                formats::write_corpus(&out(&c), &docs)?;
            }
            Ok(())
        }
        Command::TrainDsm {
            corpus,
            output,
            architecture,
            dim,
            min_count,
            window,
            negative,
            sample,
            epochs,
            alpha,
        } => {
            require_file(&corpus)?;
            let flags = DsmConfig {
                architecture,
                dim,
                min_count,
                window,
                negative,
                sample,
                epochs,
                alpha,
            };
            let params = flags.or(s.dsm.clone()).params(s.seed);
            let sentences = formats::read_corpus(&corpus)?;
            log::info!("training embeddings on {} lines: {params:?}", sentences.len());
            let space = train_embeddings(&sentences, &params)?;
            log::info!("vocabulary: {} words", space.len());
            formats::write_vectors(&out(&output), &space)
        }
        Command::Baseline { input, output, explain: show } => {
            let lexicon = load_lexicon(&s)?;
            let posts = read_posts(&input)?;
            let docs = pipeline::clean_posts(&posts, &lexicon.tokenizer());
            let scores = pipeline::baseline_scores(&docs, &lexicon);
            if show {
                for d in &docs {
                    println!("{}\t{}", d.id, explain(d, &lexicon));
                }
            }
            let rows: Vec<_> = docs.iter().zip(scores).map(|(d, (sc, l))| (d.id.clone(), sc, l)).collect();
            formats::write_baseline(&out(&output), &rows)
        }
        Command::Extract {
            input,
            output,
            schema_in,
            schema_out,
        } => {
            let res = load_resources(&s, s.feature_set.includes(devsent_core::features::Block::Semantic))?;
            let posts = read_posts(&input)?;
            let docs = pipeline::clean_posts(&posts, &res.tokenizer());
            let schema: FeatureSchema = match &schema_in {
                Some(p) => formats::read_json(p)?,
                None => build_schema(&docs)?,
            };
            let extractor = FeatureExtractor::new(&res.lexicon, &schema, res.space.as_ref());
            let vectors = pipeline::extract_set(&extractor, &docs, s.feature_set)?;
            let labels: Vec<_> = posts.iter().map(|p| p.label).collect();
            if labels.iter().any(Option::is_none) {
                log::warn!("unlabeled rows are exported with label 0");
            }
            let output = out(&output);
            formats::write_sparse(&output, &vectors, &labels)?;
            if schema_in.is_none() || schema_out.is_some() {
                let path = schema_out.map_or_else(|| output.with_extension("schema.json"), |p| out(&p));
                formats::write_json(&path, &schema, true)?;
            }
            Ok(())
        }
        Command::Train { input, c } => {
            let model_path = out(s.model()?);
            let res = load_resources(&s, s.feature_set.includes(devsent_core::features::Block::Semantic))?;
            let posts = read_posts(&input)?;
            let labels = pipeline::require_labels(&posts)?;
            let docs = pipeline::clean_posts(&posts, &res.tokenizer());
            let trained = pipeline::train_classifier(TrainRequest {
                docs: &docs,
                labels: &labels,
                lexicon: &res.lexicon,
                space: res.space.as_ref(),
                set: s.feature_set,
                c,
                grid: &s.c_grid,
                folds: s.folds,
                seed: s.seed,
            })?;
            if let Some(t) = &trained.tuning {
                eprint!("{}", report::tune_table(t));
            }
            formats::write_json(&model_path, &trained.model, false)?;
            formats::write_json(&schema_path_for(&model_path), &trained.schema, true)?;
            log::info!("model written to {}", model_path.display());
            Ok(())
        }
        Command::Tune { input, output } => {
            let res = load_resources(&s, s.feature_set.includes(devsent_core::features::Block::Semantic))?;
            let posts = read_posts(&input)?;
            let labels = pipeline::require_labels(&posts)?;
            let docs = pipeline::clean_posts(&posts, &res.tokenizer());
            let schema = build_schema(&docs)?;
            let extractor = FeatureExtractor::new(&res.lexicon, &schema, res.space.as_ref());
            let vectors = pipeline::extract_set(&extractor, &docs, s.feature_set)?;
            let data = devsent_core::learner::LabeledDataset::new(schema.id(), schema.total_dim(), vectors, labels)?;
            let result = pipeline::tune_c_parallel(&data, &s.c_grid, s.folds, s.seed)?;
            #[derive(Serialize)]
            struct TuneOut<'a> {
                best_c: f64,
                folds: usize,
                seed: u64,
                per_c: &'a [(f64, f64)],
            }
            if let Some(o) = output {
                let body = TuneOut {
                    best_c: result.best_c,
                    folds: s.folds,
                    seed: s.seed,
                    per_c: &result.per_c,
                };
                formats::write_json(&out(&o), &body, true)?;
            }
            print!("{}", report::tune_table(&result));
            Ok(())
        }
        Command::Classify { input, output } => {
            let model_path = s.model()?;
            require_file(model_path)?;
            let model: PolarityModel = formats::read_json(model_path)?;
            let schema: FeatureSchema = formats::read_json(&schema_path_for(model_path))?;
            if schema.id() != model.schema_id {
                return Err(Error::Usage(format!(
                    "schema {} does not belong to model (schema id {})",
                    schema.id(),
                    model.schema_id
                )));
            }
            let res = load_resources(&s, s.feature_set.includes(devsent_core::features::Block::Semantic))?;
            let posts = read_posts(&input)?;
            let docs = pipeline::clean_posts(&posts, &res.tokenizer());
            let extractor = FeatureExtractor::new(&res.lexicon, &schema, res.space.as_ref());
            let vectors = pipeline::extract_set(&extractor, &docs, s.feature_set)?;
            let rows = docs
                .iter()
                .zip(&vectors)
                .map(|(d, v)| {
                    let p = model.predict(v)?;
                    Ok((d.id.clone(), p.label, p.decision))
                })
                .collect::<Result<Vec<_>>>()?;
            formats::write_predictions(&out(&output), &rows)
        }
        Command::Evaluate {
            gold,
            pred,
            output,
            table,
        } => {
            require_file(&gold)?;
            require_file(&pred)?;
            let eval = pipeline::evaluate_labels(&formats::read_id_labels(&gold)?, &formats::read_id_labels(&pred)?)?;
            if eval.removed_undetermined > 0 {
                log::warn!("{} undetermined predictions removed", eval.removed_undetermined);
            }
            if let Some(o) = output {
                formats::write_json(&out(&o), &eval, true)?;
            }
            let text = format!(
                "{}\n{}",
                report::prf_table(&[("classifier", &eval.report)]),
                report::confusion_table(&eval.confusion)
            );
            emit_table(&text, table.map(|t| out(&t)).as_deref())
        }
        Command::Ablate { input, output, c, table } => {
            let has_vectors = s.vectors()?.is_some();
            let res = load_resources(&s, has_vectors)?;
            let posts = read_posts(&input)?;
            let labels = pipeline::require_labels(&posts)?;
            let docs = pipeline::clean_posts(&posts, &res.tokenizer());
            let (train_idx, test_idx) = stratified_split(&labels, s.train_fraction, s.seed)?;
            let pick = |idx: &[usize]| -> (Vec<_>, Vec<_>) { idx.iter().map(|&i| (docs[i].clone(), labels[i])).unzip() };
            let (train_docs, train_labels) = pick(&train_idx);
            let (test_docs, test_labels) = pick(&test_idx);
            let settings: Vec<AblationSetting> = FeatureSet::LADDER
                .into_iter()
                .filter(|set| {
                    let keep = has_vectors || !set.includes(devsent_core::features::Block::Semantic);
                    if !keep {
                        log::warn!("skipping {set}: no --vectors given");
                    }
                    keep
                })
                .map(AblationSetting::from)
                .collect();
            let selection = match c {
                Some(c) => CSelection::Fixed(c),
                None => CSelection::Tune {
                    grid: s.c_grid.clone(),
                    folds: s.folds,
                },
            };
            let split = SplitData {
                train_docs: &train_docs,
                train_labels: &train_labels,
                test_docs: &test_docs,
                test_labels: &test_labels,
            };
            let ablation = ablation_run(split, &res.lexicon, res.space.as_ref(), &settings, &selection, s.seed)?;
            let baseline: Vec<_> = pipeline::baseline_scores(&test_docs, &res.lexicon)
                .into_iter()
                .map(|(_, l)| l)
                .collect();
            let (bcm, removed) = devsent_core::evalkit::confusion_trinary(&test_labels, &baseline)?;
            let breport = devsent_core::evalkit::prf(&bcm)?;
            #[derive(Serialize)]
            struct AblateOut<'a> {
                train_size: usize,
                test_size: usize,
                seed: u64,
                baseline: &'a devsent_core::evalkit::PrfReport,
                baseline_removed_undetermined: usize,
                ablation: &'a devsent_core::evalkit::AblationReport,
            }
            formats::write_json(
                &out(&output),
                &AblateOut {
                    train_size: train_docs.len(),
                    test_size: test_docs.len(),
                    seed: s.seed,
                    baseline: &breport,
                    baseline_removed_undetermined: removed,
                    ablation: &ablation,
                },
                true,
            )?;
            let mut named: Vec<(&str, &devsent_core::evalkit::PrfReport)> = vec![("baseline", &breport)];
            named.extend(ablation.settings.iter().map(|r| (r.name.as_str(), &r.report)));
            let text = format!("{}\n{}", report::ablation_table(&ablation), report::prf_table(&named));
            emit_table(&text, table.map(|t| out(&t)).as_deref())
        }
        Command::Kappa {
            annotations,
            output,
            table,
        } => {
            require_file(&annotations)?;
            let records = formats::read_annotations(&annotations)?;
            let pairs = pipeline::pairwise_agreement(&records)?;
            if let Some(o) = output {
                formats::write_json(&out(&o), &pairs, true)?;
            }
            emit_table(&report::kappa_table(&pairs).to_string(), table.map(|t| out(&t)).as_deref())
        }
        Command::Vote { annotations, output } => {
            require_file(&annotations)?;
            let records = formats::read_annotations(&annotations)?;
            let gold = vote_all(&records)?;
            let excluded = gold.iter().filter(|g| g.label.is_none()).count();
            log::info!("{} items, {excluded} excluded", gold.len());
            formats::write_gold(&out(&output), &gold)
        }
        Command::Sample {
            input,
            n_per_cell,
            output,
        } => {
            let lexicon = load_lexicon(&s)?;
            let posts = read_posts(&input)?;
            let docs = pipeline::clean_posts(&posts, &lexicon.tokenizer());
            let candidates: Vec<_> = docs
                .iter()
                .zip(pipeline::baseline_scores(&docs, &lexicon))
                .map(|(d, (_, l))| (d.post_type, l))
                .collect();
            let picked = sample_for_annotation(&candidates, n_per_cell, s.seed)?;
            let sample: Vec<PostRecord> = picked.iter().map(|&i| posts[i].clone()).collect();
            formats::write_posts(&out(&output), &sample)
        }
    })
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                msg.push_str(&format!(": {s}"));
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
