//! The `transtree` command line.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::classify::{compare_reports, results_tsv, run_experiment, ClassifyError, ExperimentConfig, ExperimentReport};
use crate::corpus::{load_corpus, normalize_text_counted, remove_marked_lines, write_corpus, Corpus, CorpusError, TextClass};
use crate::features::{extract_corpus, feature_dump, FeatureConfig, FeatureError, FeatureSpace};
use crate::selection::ranking_tsv;
use crate::synth::{default_grammar_pair, generate_corpus, Pcfg, SynthError};
use crate::treequery::{parse_query, search_corpus, search_tsv, QueryError};

#[derive(Debug, Parser)]
#[command(name = "transtree", version, about = "Translated-vs-original text classification toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for all randomness; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove URLs and marked headlines, fix ellipses, widen punctuation.
    Normalize(NormalizeArgs),
    /// Dump the feature space of a corpus as TSV.
    Extract(ExtractArgs),
    /// Cross-validated classification experiment.
    Cv(CvArgs),
    /// Search a corpus for a tree fragment.
    Query(QueryArgs),
    /// Generate a synthetic two-class corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// 1-based line numbers of headlines to drop, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub headlines: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Second experiment config to test against with McNemar.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fragment in bracket notation, e.g. "(NP (PN))" or "(PP P (NP PN))".
    pub fragment: String,
    #[arg(long)]
    pub class: Option<TextClass>,
    /// Maximum number of hits listed; totals always cover all hits.
    #[arg(long, default_value_t = 100)]
    pub limit: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Use the built-in grammar pair.
    #[arg(long = "default", conflicts_with = "grammars")]
    pub use_default: bool,
    /// Grammar files for the original and the translated class.
    #[arg(num_args = 2, value_names = ["GRAMMAR_A", "GRAMMAR_B"])]
    pub grammars: Vec<PathBuf>,
    /// Documents per class.
    #[arg(long, default_value_t = 100)]
    pub docs: usize,
    #[arg(long, default_value_t = 50)]
    pub sentences: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::BadParam(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Features(f) => f.into(),
            ClassifyError::BadParam(_) | ClassifyError::TooFewFolds(_) | ClassifyError::Incomparable(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn say(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Internal(e.to_string()))
}

fn normalize(args: &NormalizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let raw = read(&args.input)?;
    let marked: BTreeSet<usize> = args.headlines.iter().copied().collect();
    let kept = remove_marked_lines(&raw, &marked);
    let removed = raw.split_inclusive('\n').count() - kept.split_inclusive('\n').count();
    let (text, stats) = normalize_text_counted(&kept);
    write(&args.output, &text)?;
    say(
        out,
        &format!(
            "headlines={removed}\turls={}\tellipses={}\twidened={}\ttotal={}",
            stats.urls,
            stats.ellipses,
            stats.widened,
            stats.total() + removed
        ),
    )
}

fn extract(args: &ExtractArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_corpus(&args.manifest)?;
    let config: FeatureConfig = read_json(&args.config)?;
    config.validate()?;
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus.into());
    }
    let docs = extract_corpus(&corpus, &config)?;
    let space = FeatureSpace::build(&docs, config.min_df)?;
    write(&args.out, &feature_dump(&space, &docs))?;
    say(out, &format!("{} features from {} documents", space.len(), corpus.len()))
}

fn experiment(corpus: &Corpus, path: &Path, seed: Option<u64>) -> Result<ExperimentReport, CliError> {
    let mut config: ExperimentConfig = read_json(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(run_experiment(corpus, &config)?)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_models(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    for cell in &report.grid {
        for m in &cell.models {
            let name = format!("k{}_c{:?}_fold{}.model", cell.k_top, cell.c, m.fold);
            write(&dir.join(name), &m.model.to_text(&m.space))?;
        }
    }
    Ok(())
}

fn cv(args: &CvArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_corpus(&args.manifest)?;
    let mut report = experiment(&corpus, &args.config, seed)?;
    if let Some(other) = &args.compare {
        let b = experiment(&corpus, other, seed)?;
        report.comparisons = compare_reports(&report, &b, &corpus)?;
        write(&args.out.join("compare").join("report.json"), &to_json(&b)?)?;
        write(&args.out.join("compare").join("results.tsv"), &results_tsv(&b))?;
    }
    write(&args.out.join("report.json"), &to_json(&report)?)?;
    write(&args.out.join("results.tsv"), &results_tsv(&report))?;
    write(&args.out.join("ranking.tsv"), &ranking_tsv(&report.ranking))?;
    write_models(&report, &args.out.join("models"))?;
    for g in &report.grid {
        say(
            out,
            &format!("{}\tk_top={}\tC={}\tmacro_F={:.1}", report.name, g.k_top, g.c, g.pooled.macro_f),
        )?;
    }
    for c in &report.comparisons {
        say(
            out,
            &format!(
                "mcnemar {} vs {}\tk_top={}\tC={}\tb={}\tc={}\tp={:.3e}",
                c.a, c.b, c.k_top, c.c, c.mcnemar.b, c.mcnemar.c, c.mcnemar.p
            ),
        )?;
    }
    Ok(())
}

fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let fragment = parse_query(&args.fragment)?;
    let corpus = load_corpus(&args.manifest)?;
    let result = search_corpus(&corpus, &fragment, args.class, args.limit);
    out.write_all(search_tsv(&result).as_bytes())
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn synth(args: &SynthArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, b) = match (args.use_default, args.grammars.as_slice()) {
        (true, _) => default_grammar_pair(),
        (false, [ga, gb]) => (Pcfg::parse(&read(ga)?)?, Pcfg::parse(&read(gb)?)?),
        _ => return Err(CliError::Usage("give --default or two grammar files".into())),
    };
    let corpus = generate_corpus(&a, &b, args.docs, args.sentences, seed.unwrap_or(0))?;
    let manifest = write_corpus(&corpus, &args.out)?;
    say(out, &format!("{} documents written to {}", corpus.len(), manifest.display()))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Normalize(a) => normalize(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Cv(a) => cv(a, cli.seed, out),
        Command::Query(a) => query(a, out),
        Command::Synth(a) => synth(a, cli.seed, out),
    }
}

/// Runs an already parsed command line, inside a thread pool of `--jobs`
/// workers when given.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.jobs {
        None => dispatch(cli, out),
        Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let mut buf = Vec::new();
            let result = pool.install(|| dispatch(cli, &mut buf));
            out.write_all(&buf).map_err(|e| CliError::Internal(e.to_string()))?;
            result
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
