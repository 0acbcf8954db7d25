//! Command-line frontend: `train`, `eval`, `report`, and `gen` subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bp::{self, Hyper};
use crate::corpus::{
    self, generate_synthetic, load_uci_bow, split_for_eval, word_frequencies, EvalSplit,
    SparseCorpus, SynthConfig,
};
use crate::metrics::{ccr, emit_csv, emit_json, speedup, RunReport};
use crate::model::{save_model_file, ModelHeader};
use crate::parallel::{pbp_train, ShardPolicy, TrainOutcome};
use crate::schedule::{partition_vocab, CommSchedule, ScheduleDump};
use crate::{Error, Result};

/// Fold-in iterations used for predictive evaluation.
pub const FOLD_IN_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Serial synchronous belief propagation.
    Bp,
    /// Data-parallel BP, full synchronization every iteration.
    Pbp,
    /// Data-parallel BP with the rank-periodic communication schedule.
    Cepbp,
    /// Serial collapsed Gibbs sampling.
    Gs,
    /// Data-parallel Gibbs with stale shared counts.
    Pgs,
}

impl Algo {
    pub fn label(self) -> &'static str {
        match self {
            Algo::Bp => "bp",
            Algo::Pbp => "pbp",
            Algo::Cepbp => "cepbp",
            Algo::Gs => "gs",
            Algo::Pgs => "pgs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// A validated training configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algo: Algo,
    pub corpus: PathBuf,
    pub vocab: Option<PathBuf>,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub test_frac: f64,
    pub heldout_frac: f64,
    pub out: PathBuf,
    pub perplexity_every: usize,
}

#[derive(Debug, Parser)]
#[command(name = "cepbp", version, about = "Parallel BP topic-model trainer with scheduled synchronization")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a topic model and write model, run report, and schedule dump.
    Train(TrainArgs),
    /// Evaluate a trained model's predictive perplexity on a held-out split.
    Eval(EvalArgs),
    /// Merge run reports into a comparison table.
    Report(ReportArgs),
    /// Generate a synthetic corpus in UCI bag-of-words format.
    Gen(GenArgs),
}

#[derive(Debug, clap::Args)]
struct TrainArgs {
    /// Training algorithm.
    #[arg(long, value_enum)]
    algo: Algo,
    /// Path to a UCI bag-of-words docword file.
    #[arg(long)]
    corpus: PathBuf,
    /// Optional vocabulary file (one word per line).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Topic count.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Training iterations.
    #[arg(long, default_value_t = 500)]
    t: usize,
    /// Worker count.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Vocabulary part count for the communication schedule.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Schedule exponent: part of rank r syncs every round(r^h) iterations.
    #[arg(long = "h", default_value_t = 1.0)]
    h: f64,
    /// Document-topic Dirichlet parameter.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Topic-word Dirichlet parameter.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of documents set aside for evaluation.
    #[arg(long = "test-frac", default_value_t = 0.1)]
    test_frac: f64,
    /// Fraction of each test document's tokens held out.
    #[arg(long = "heldout-frac", default_value_t = 0.2)]
    heldout_frac: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Compute training perplexity every this many iterations (0 = final only).
    #[arg(long = "perplexity-every", default_value_t = 10)]
    perplexity_every: usize,
}

#[derive(Debug, clap::Args)]
struct EvalArgs {
    /// Path to a model file written by `train`.
    model: PathBuf,
    /// Corpus to evaluate on (same vocabulary as the training corpus).
    #[arg(long)]
    corpus: PathBuf,
    /// Optional vocabulary file.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "test-frac", default_value_t = 0.1)]
    test_frac: f64,
    #[arg(long = "heldout-frac", default_value_t = 0.2)]
    heldout_frac: f64,
    /// Output directory for eval.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    /// One or more report.json files from `train`.
    reports: Vec<PathBuf>,
    #[arg(long = "report-format", value_enum, default_value_t = ReportFormat::Csv)]
    report_format: ReportFormat,
    /// Optional file to write; the table always goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    /// Corpus preset to start from.
    #[arg(long, value_enum, default_value_t = GenPreset::Kos)]
    preset: GenPreset,
    #[arg(long)]
    docs: Option<usize>,
    #[arg(long = "vocab-size")]
    vocab_size: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long = "avg-doc-len")]
    avg_doc_len: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output docword file path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenPreset {
    /// KOS-scale corpus: 3430 documents over 6906 words.
    Kos,
    /// Small corpus for quick experiments.
    Small,
}

/// Parses argv and runs the requested subcommand.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        // Help and version land here with use_stderr() == false.
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::Config(e.to_string())),
    };
    match cli.command {
        Command::Train(args) => cmd_train(&validate_train(args)?),
        Command::Eval(args) => cmd_eval(&args),
        Command::Report(args) => cmd_report(&args),
        Command::Gen(args) => cmd_gen(&args),
    }
}

fn validate_train(args: TrainArgs) -> Result<RunConfig> {
    if args.algo == Algo::Bp && args.m != 1 {
        return Err(Error::Config("--algo bp runs on a single worker: use --m 1".into()));
    }
    if args.algo == Algo::Cepbp {
        if args.n < 1 {
            return Err(Error::Config("--algo cepbp needs --n >= 1".into()));
        }
        if !(args.h > 0.0) {
            return Err(Error::Config("--algo cepbp needs --h > 0".into()));
        }
    }
    Ok(RunConfig {
        algo: args.algo,
        corpus: args.corpus,
        vocab: args.vocab,
        k: args.k,
        t: args.t,
        m: args.m,
        n: args.n,
        h: args.h,
        alpha: args.alpha,
        beta: args.beta,
        seed: args.seed,
        test_frac: args.test_frac,
        heldout_frac: args.heldout_frac,
        out: args.out,
        perplexity_every: args.perplexity_every,
    })
}

fn load_corpus(path: &Path, vocab: Option<&Path>) -> Result<SparseCorpus> {
    let docword = BufReader::new(File::open(path)?);
    let loaded = match vocab {
        Some(v) => load_uci_bow(docword, Some(BufReader::new(File::open(v)?)))?,
        None => load_uci_bow(docword, None::<BufReader<File>>)?,
    };
    for warning in &loaded.warnings {
        eprintln!("warning: {warning:?}");
    }
    Ok(loaded.corpus)
}

/// Trains per the config and writes model, reports, and schedule dump into
/// the output directory.
pub fn cmd_train(config: &RunConfig) -> Result<()> {
    let corpus = load_corpus(&config.corpus, config.vocab.as_deref())?;
    let hyper = Hyper::new(config.k, config.alpha, config.beta, config.t)?;

    // Held-out split; a corpus too small to split trains on everything.
    let split: Option<EvalSplit> = if corpus.num_docs() >= 2 {
        Some(split_for_eval(&corpus, config.test_frac, config.heldout_frac, config.seed)?)
    } else {
        eprintln!("warning: corpus too small for a held-out split; training on all documents");
        None
    };
    let train_corpus = split.as_ref().map(|s| &s.train).unwrap_or(&corpus);

    let (mut outcome, dump) = train_dispatch(config, train_corpus, &hyper)?;

    if let Some(split) = &split {
        let folded = bp::fold_in(
            &split.test_observed,
            &outcome.model.phi,
            &hyper,
            FOLD_IN_ITERS,
            config.seed,
        );
        let pp = bp::predictive_perplexity(&split.test_heldout, &folded);
        outcome.report.predictive_perplexity = Some(pp);
    }

    std::fs::create_dir_all(&config.out)?;
    write_json(&config.out.join("schedule.json"), &dump)?;
    {
        let mut csv = BufWriter::new(File::create(config.out.join("report.csv"))?);
        emit_csv(&outcome.report, &mut csv)?;
    }
    {
        let mut json = BufWriter::new(File::create(config.out.join("report.json"))?);
        emit_json(&outcome.report, &mut json)?;
    }
    let header = ModelHeader {
        algo: config.algo.label().to_string(),
        k: hyper.k,
        num_docs: outcome.model.num_docs(),
        vocab_size: outcome.model.vocab_size(),
        alpha: hyper.alpha,
        beta: hyper.beta,
        seed: config.seed,
    };
    save_model_file(&config.out.join("model.bin"), &header, &outcome.model)?;

    if let Some(p) = outcome.report.final_train_perplexity {
        eprintln!("final training perplexity: {p:.4}");
    }
    if let Some(p) = outcome.report.predictive_perplexity {
        eprintln!("predictive perplexity: {p:.4}");
    }
    Ok(())
}

fn train_dispatch(
    config: &RunConfig,
    train_corpus: &SparseCorpus,
    hyper: &Hyper,
) -> Result<(TrainOutcome, ScheduleDump)> {
    let label = config.algo.label();
    match config.algo {
        Algo::Bp | Algo::Pbp | Algo::Cepbp => {
            let ft = word_frequencies(train_corpus);
            let schedule = match config.algo {
                Algo::Cepbp => {
                    let n = config.n.min(train_corpus.vocab_size());
                    if n != config.n {
                        eprintln!(
                            "warning: --n {} clamped to the vocabulary size {n}",
                            config.n
                        );
                    }
                    let partition = partition_vocab(&ft, n)?;
                    if let Ok(fit) = corpus::fit_zipf(&ft, n.max(2).min(train_corpus.vocab_size())) {
                        eprintln!(
                            "corpus rank/frequency fit over {n} parts: H = {:.3}, r2 = {:.3}",
                            fit.h, fit.r_squared
                        );
                    }
                    CommSchedule::new(partition, config.h, hyper.t)?
                }
                _ => {
                    let partition = partition_vocab(&ft, 1)?;
                    CommSchedule::all_parts(partition, hyper.t)?
                }
            };
            let dump = schedule.dump();
            let outcome = pbp_train(
                train_corpus,
                hyper,
                config.m,
                &schedule,
                ShardPolicy::RoundRobin,
                config.seed,
                config.perplexity_every,
                label,
            )?;
            Ok((outcome, dump))
        }
        Algo::Gs => {
            let outcome = crate::gibbs::gs_train(train_corpus, hyper, config.seed, config.perplexity_every)?;
            let dump = uniform_dump(train_corpus.vocab_size(), 1);
            Ok((outcome, dump))
        }
        Algo::Pgs => {
            let outcome = crate::gibbs::pgs_train(
                train_corpus,
                hyper,
                config.m,
                1,
                config.seed,
                config.perplexity_every,
                label,
            )?;
            let dump = uniform_dump(train_corpus.vocab_size(), 1);
            Ok((outcome, dump))
        }
    }
}

fn uniform_dump(w: usize, period: u64) -> ScheduleDump {
    ScheduleDump { n: 1, h: 1.0, part_sizes: vec![w], periods: vec![period] }
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    model: String,
    corpus: String,
    seed: u64,
    test_frac: f64,
    heldout_frac: f64,
    predictive_perplexity: f64,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (header, model) = crate::model::load_model_file(&args.model)?;
    let corpus = load_corpus(&args.corpus, args.vocab.as_deref())?;
    if corpus.vocab_size() != header.vocab_size {
        return Err(Error::Dimension(format!(
            "model was trained over {} words, corpus has {}",
            header.vocab_size,
            corpus.vocab_size()
        )));
    }
    let hyper = Hyper::new(header.k, header.alpha, header.beta, 1)?;
    let split = split_for_eval(&corpus, args.test_frac, args.heldout_frac, args.seed)?;
    let folded = bp::fold_in(&split.test_observed, &model.phi, &hyper, FOLD_IN_ITERS, args.seed);
    let pp = bp::predictive_perplexity(&split.test_heldout, &folded);
    println!("{pp}");

    std::fs::create_dir_all(&args.out)?;
    write_json(
        &args.out.join("eval.json"),
        &EvalOutput {
            model: args.model.display().to_string(),
            corpus: args.corpus.display().to_string(),
            seed: args.seed,
            test_frac: args.test_frac,
            heldout_frac: args.heldout_frac,
            predictive_perplexity: pp,
        },
    )
}

#[derive(Debug, Serialize)]
struct ReportRow {
    algo: String,
    k: usize,
    m: usize,
    n: usize,
    h: f64,
    t: usize,
    bytes: u64,
    comp_s: f64,
    comm_s: f64,
    ccr: f64,
    speedup: Option<f64>,
    train_perplexity: Option<f64>,
    predictive_perplexity: Option<f64>,
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if args.reports.is_empty() {
        return Err(Error::Config("report needs at least one report.json path".into()));
    }
    let mut reports = Vec::new();
    for path in &args.reports {
        let report: RunReport = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        reports.push(report);
    }

    // Single-worker reference run per algorithm for the speedup column.
    let t0 = |algo: &str| -> Option<f64> {
        reports
            .iter()
            .find(|r| r.config.algo == algo && r.config.m == 1)
            .map(|r| r.totals.comp_s)
            .filter(|&t| t > 0.0)
    };

    let mut rows = Vec::new();
    for report in &reports {
        let reference = t0(&report.config.algo);
        if reference.is_none() {
            eprintln!(
                "warning: no single-worker run of '{}' supplied; speedup left empty",
                report.config.algo
            );
        }
        rows.push(ReportRow {
            algo: report.config.algo.clone(),
            k: report.config.k,
            m: report.config.m,
            n: report.config.n,
            h: report.config.h,
            t: report.config.t,
            bytes: report.totals.bytes,
            comp_s: report.totals.comp_s,
            comm_s: report.totals.comm_s,
            ccr: ccr(report),
            speedup: reference.map(|t0| speedup(t0, report.config.m, report.totals.comm_s)),
            train_perplexity: report.final_train_perplexity,
            predictive_perplexity: report.predictive_perplexity,
        });
    }

    let rendered = match args.report_format {
        ReportFormat::Csv => {
            let mut text = String::from(
                "algo,k,m,n,h,t,bytes,comp_s,comm_s,ccr,speedup,train_perplexity,predictive_perplexity\n",
            );
            for r in &rows {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.algo,
                    r.k,
                    r.m,
                    r.n,
                    r.h,
                    r.t,
                    r.bytes,
                    r.comp_s,
                    r.comm_s,
                    r.ccr,
                    opt(r.speedup),
                    opt(r.train_perplexity),
                    opt(r.predictive_perplexity),
                ));
            }
            text
        }
        ReportFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    print!("{rendered}");
    if let Some(path) = &args.out {
        std::fs::write(path, rendered)?;
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut cfg = match args.preset {
        GenPreset::Kos => SynthConfig::kos_scale(args.seed),
        GenPreset::Small => SynthConfig::small(args.seed),
    };
    if let Some(d) = args.docs {
        cfg.num_docs = d;
    }
    if let Some(w) = args.vocab_size {
        cfg.vocab_size = w;
    }
    if let Some(k) = args.topics {
        cfg.num_topics = k;
    }
    if let Some(l) = args.avg_doc_len {
        cfg.avg_doc_len = l;
    }
    let corpus = generate_synthetic(&cfg);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = BufWriter::new(File::create(&args.out)?);
    corpus::save_uci_bow(&corpus, &mut out)?;
    out.flush()?;
    eprintln!(
        "wrote {} docs, {} words, {} nonzero cells, {} tokens to {}",
        corpus.num_docs(),
        corpus.vocab_size(),
        corpus.nnz(),
        corpus.total_tokens(),
        args.out.display()
    );
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
