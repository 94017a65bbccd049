//! `mrkernel`: compile mini-language sources to CFGs, build Gram matrices,
//! train and apply SVMs, run metamorphic testing campaigns and the full
//! evaluation protocol.

mod config;
mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use mrkernel::cfg::{
    default_similarity_table, emit_graph_file, load_similarity_table, parse_graph_file, Cfg,
    LabelSimilarityTable,
};
use mrkernel::corpus::{
    build_bundled_corpus, bundled_campaign_labels, bundled_overrides, load_corpus, LabeledDataset,
    BUNDLED_SEED, GRAPH_EXTENSION,
};
use mrkernel::eval::{run_experiment, ExperimentConfig, Grid, LAMBDA_GRID, DEFAULT_C_GRID};
use mrkernel::kernel::{gram, kernel, GramMatrix, KernelParams, DEFAULT_MAX_LEN};
use mrkernel::minilang::{compile, parse_source};
use mrkernel::mt::{
    fault_subjects, format_label_csv, format_report, mini_subjects, parse_label_csv,
    reference_subjects, run_campaigns, Category, LabelRow, MetamorphicRelation, MtConfig, Subject,
};
use mrkernel::svm::{predict, train, SvmModel, SvmParams, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

use config::Config;
use output::{write_all, write_atomic};

#[derive(Parser)]
#[command(name = "mrkernel", version, about = "Predict metamorphic relations from control-flow graphs")]
struct Cli {
    /// TOML config file; command line flags override its values.
    #[arg(long, global = true, env = "MRKERNEL_CONFIG")]
    config: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile mini-language sources into graph files.
    Compile(CompileArgs),
    /// Compute the Gram matrix of a corpus.
    Gram(GramArgs),
    /// Train one SVM per MR category on a Gram matrix.
    Train(TrainArgs),
    /// Predict MR labels of graphs with trained models.
    Predict(PredictArgs),
    /// Run metamorphic testing campaigns and write labels.
    Mt(MtArgs),
    /// Run the train/validation/test protocol and write a report.
    Eval(EvalArgs),
    /// Write the bundled corpus as graph files and a label file.
    CorpusBuild(CorpusBuildArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// A `.mml` file or a directory of them.
    src: PathBuf,
    /// Directory for the graph files.
    #[arg(long, visible_alias = "out")]
    out_dir: PathBuf,
    /// Also print the three-address code of every function.
    #[arg(long)]
    tac: bool,
}

#[derive(Args)]
struct CorpusSource {
    /// Directory of graph files.
    #[arg(long, visible_alias = "graphs", conflicts_with = "bundled")]
    corpus: Option<PathBuf>,
    /// Use the bundled corpus.
    #[arg(long)]
    bundled: bool,
}

#[derive(Args)]
struct KernelArgs {
    /// Walk damping factor in [0, 1).
    #[arg(long)]
    lambda: Option<f64>,
    /// Longest walk length.
    #[arg(long)]
    max_len: Option<usize>,
    /// Cosine-normalize kernel values.
    #[arg(long)]
    normalize: bool,
    /// Label similarity override file.
    #[arg(long)]
    similarity: Option<PathBuf>,
}

#[derive(Args)]
struct GramArgs {
    #[command(flatten)]
    source: CorpusSource,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CategoryArg {
    Permutative,
    Additive,
    Multiplicative,
}

impl From<CategoryArg> for Category {
    fn from(c: CategoryArg) -> Category {
        match c {
            CategoryArg::Permutative => Category::Permutative,
            CategoryArg::Additive => Category::Additive,
            CategoryArg::Multiplicative => Category::Multiplicative,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Gram matrix file written by `gram`.
    #[arg(long)]
    gram: PathBuf,
    /// Label CSV (`function,MR,label[,comment]`).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// MR categories to train (repeatable; default: all three).
    #[arg(long, value_enum, visible_alias = "category")]
    mr: Vec<CategoryArg>,
    /// Regularization parameter.
    #[arg(long)]
    c: Option<f64>,
    /// KKT violation tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Model file when exactly one `--mr` is given, otherwise a directory
    /// receiving one `<Category>.model` file per category.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model files written by `train`.
    #[arg(long, required = true, num_args = 1..)]
    model: Vec<PathBuf>,
    /// Graph directory holding the training functions.
    #[arg(long)]
    train_corpus: PathBuf,
    /// Graph directory holding the functions to predict.
    #[arg(long)]
    graphs: PathBuf,
    /// Label similarity override file used at training time.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MtArgs {
    /// `all` (the bundled corpus), `reference`, `faults`, or a
    /// comma-separated list of subject names.
    #[arg(long, conflicts_with = "source")]
    subjects: Option<String>,
    /// Mini-language file whose functions are the subjects.
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_dim: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
    /// Per-case report file (standard output if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Label CSV output.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: CorpusSource,
    /// Label CSV for `--corpus`.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Pin the C grid to 0.1, 1, 10, 100, 1000 (the default).
    #[arg(long = "paper-grid", conflicts_with = "c_grid")]
    pin_c_grid: bool,
    /// Comma-separated C grid.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Comma-separated lambda grid.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Text report.
    #[arg(long)]
    out: PathBuf,
    /// JSON report (default: the text report path with a `.json` extension).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusBuildArgs {
    /// Receives `graphs/` and `labels.csv`.
    #[arg(long)]
    out: PathBuf,
}

/// Bad input from the user: exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(message: impl Into<String>) -> Result<T> {
    Err(UsageError(message.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("starting the worker pool")?;
    }
    match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Gram(a) => cmd_gram(a, &config),
        Command::Train(a) => cmd_train(a, &config),
        Command::Predict(a) => cmd_predict(a, &config),
        Command::Mt(a) => cmd_mt(a, &config),
        Command::Eval(a) => cmd_eval(a, &config),
        Command::CorpusBuild(a) => cmd_corpus_build(a),
    }
}

fn sorted_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn cmd_compile(a: CompileArgs) -> Result<()> {
    if !a.src.exists() {
        return usage(format!("{} does not exist", a.src.display()));
    }
    let sources = if a.src.is_dir() {
        sorted_files(&a.src, "mml")?
    } else {
        vec![a.src.clone()]
    };
    if sources.is_empty() {
        warn!("no .mml files in {}", a.src.display());
        return Ok(());
    }
    let mut files = Vec::new();
    let mut seen = BTreeMap::new();
    for path in &sources {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let program = match parse_source(&text) {
            Ok(p) => p,
            Err(e) => return usage(format!("{}:{e}", path.display())),
        };
        for f in compile(&program).functions() {
            if let Some(first) = seen.insert(f.name.clone(), path.clone()) {
                bail!(
                    "function `{}` defined in both {} and {}",
                    f.name,
                    first.display(),
                    path.display()
                );
            }
            if a.tac {
                print!("{f}");
            }
            files.push((
                format!("{}.{GRAPH_EXTENSION}", f.name),
                emit_graph_file(&f.to_cfg()),
            ));
        }
    }
    write_all(&a.out_dir, &files)?;
    info!("wrote {} graph files to {}", files.len(), a.out_dir.display());
    Ok(())
}

fn similarity_table(flag: &Option<PathBuf>, config: &Config) -> Result<LabelSimilarityTable> {
    match flag.as_ref().or(config.paths.similarity.as_ref()) {
        None => Ok(default_similarity_table()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            load_similarity_table(&text).with_context(|| format!("loading {}", p.display()))
        }
    }
}

fn load_graphs(dir: &Path) -> Result<Vec<Cfg>> {
    let files = sorted_files(dir, GRAPH_EXTENSION)?;
    if files.is_empty() {
        bail!("no .{GRAPH_EXTENSION} files in {}", dir.display());
    }
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_graph_file(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

fn corpus_graphs(source: &CorpusSource, config: &Config) -> Result<Vec<Cfg>> {
    if source.bundled {
        return Ok(build_bundled_corpus().cfgs().to_vec());
    }
    match source.corpus.as_ref().or(config.paths.graph_dir.as_ref()) {
        Some(dir) => load_graphs(dir),
        None => usage("give --corpus <dir> or --bundled"),
    }
}

fn kernel_params(k: &KernelArgs, config: &Config) -> Result<KernelParams> {
    let lambda = k.lambda.or(config.kernel.lambda).unwrap_or(0.9);
    let max_len = k.max_len.or(config.kernel.max_len).unwrap_or(DEFAULT_MAX_LEN);
    let normalize = k.normalize || config.kernel.normalize.unwrap_or(false);
    KernelParams::new(lambda, max_len, normalize).map_err(|e| UsageError(e.to_string()).into())
}

fn cmd_gram(a: GramArgs, config: &Config) -> Result<()> {
    let params = kernel_params(&a.kernel, config)?;
    let table = similarity_table(&a.kernel.similarity, config)?;
    let cfgs = corpus_graphs(&a.source, config)?;
    let g = gram(&cfgs, &table, &params)?;
    write_atomic(&a.out, &g.to_text())
}

fn label_map(path: &Path) -> Result<BTreeMap<(String, Category), bool>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = parse_label_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows
        .into_iter()
        .map(|r| ((r.function, r.category), r.positive))
        .collect())
}

fn categories(selected: &[CategoryArg]) -> Vec<Category> {
    if selected.is_empty() {
        Category::ALL.to_vec()
    } else {
        let mut c: Vec<Category> = selected.iter().map(|&c| c.into()).collect();
        c.sort();
        c.dedup();
        c
    }
}

/// Model file: kernel and training-set headers followed by the SVM text.
fn model_text(category: Category, g: &GramMatrix, model: &SvmModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "category: {category}");
    let _ = writeln!(out, "lambda: {}", g.params().lambda());
    let _ = writeln!(out, "L: {}", g.params().max_len());
    let _ = writeln!(out, "normalized: {}", g.params().normalize());
    let _ = writeln!(out, "table_digest: {}", g.table_digest());
    let _ = writeln!(out, "train: {}", g.names().join(","));
    out.push_str(&model.to_text());
    out
}

struct LoadedModel {
    category: Category,
    params: KernelParams,
    table_digest: String,
    train: Vec<String>,
    svm: SvmModel,
}

fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header = |key: &str| -> Result<&str> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')))
            .map(str::trim)
            .ok_or_else(|| anyhow!("{}: missing `{key}` header", path.display()))
    };
    let category: Category = header("category")?.parse().map_err(|e: String| anyhow!(e))?;
    let lambda: f64 = header("lambda")?.parse()?;
    let max_len: usize = header("L")?.parse()?;
    let normalize: bool = header("normalized")?.parse()?;
    let train = header("train")?.split(',').map(str::to_string).collect();
    let svm = SvmModel::from_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(LoadedModel {
        category,
        params: KernelParams::new(lambda, max_len, normalize)?,
        table_digest: header("table_digest")?.to_string(),
        train,
        svm,
    })
}

fn cmd_train(a: TrainArgs, config: &Config) -> Result<()> {
    let text = std::fs::read_to_string(&a.gram).with_context(|| format!("reading {}", a.gram.display()))?;
    let g = GramMatrix::from_text(&text).with_context(|| format!("parsing {}", a.gram.display()))?;
    let Some(label_path) = a.labels.as_ref().or(config.paths.label_file.as_ref()) else {
        return usage("give --labels <csv>");
    };
    let labels = label_map(label_path)?;
    let c = a.c.or(config.svm.c).unwrap_or(1.0);
    let tolerance = a.tolerance.or(config.svm.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    let params = SvmParams::new(c, tolerance, DEFAULT_MAX_PASSES).map_err(|e| UsageError(e.to_string()))?;
    let all: Vec<usize> = (0..g.len()).collect();
    let k = g.select(&all, &all);
    let mut files = Vec::new();
    let selected = categories(&a.mr);
    for &category in &selected {
        let y = g
            .names()
            .iter()
            .map(|n| match labels.get(&(n.clone(), category)) {
                Some(true) => Ok(1),
                Some(false) => Ok(-1),
                None => Err(anyhow!("no {category} label for `{n}`")),
            })
            .collect::<Result<Vec<i8>>>()?;
        let model = train(&k, &y, &params).with_context(|| format!("training {category}"))?;
        info!("{category}: {} support vectors", model.support().len());
        files.push((format!("{category}.model"), model_text(category, &g, &model)));
    }
    if a.mr.len() == 1 {
        return write_atomic(&a.out, &files[0].1);
    }
    write_all(&a.out, &files)
}

fn cmd_predict(a: PredictArgs, config: &Config) -> Result<()> {
    let table = similarity_table(&a.similarity, config)?;
    let train_graphs: BTreeMap<String, Cfg> = load_graphs(&a.train_corpus)?
        .into_iter()
        .map(|c| (c.name().to_string(), c))
        .collect();
    let targets = load_graphs(&a.graphs)?;
    let mut out = String::from("function,MR,label,score\n");
    let mut rows: Vec<(String, Category, i8, f64)> = Vec::new();
    for path in &a.model {
        let m = load_model(path)?;
        if m.svm.n_train() != m.train.len() {
            bail!(
                "{}: model has {} training instances but lists {} training functions",
                path.display(),
                m.svm.n_train(),
                m.train.len()
            );
        }
        if m.train.len() != train_graphs.len() {
            bail!(
                "{}: model was trained on {} functions, training corpus has {}",
                path.display(),
                m.train.len(),
                train_graphs.len()
            );
        }
        if m.table_digest != table.digest() {
            bail!("{}: trained with a different label similarity table", path.display());
        }
        let train_cfgs = m
            .train
            .iter()
            .map(|n| {
                train_graphs
                    .get(n)
                    .ok_or_else(|| anyhow!("training function `{n}` missing from {}", a.train_corpus.display()))
            })
            .collect::<Result<Vec<&Cfg>>>()?;
        let cross: Vec<Vec<f64>> = targets
            .iter()
            .map(|g| train_cfgs.iter().map(|t| kernel(g, *t, &table, &m.params)).collect())
            .collect();
        let scores = m.svm.decision_values(&cross)?;
        for ((g, label), score) in targets.iter().zip(predict(&scores)).zip(scores) {
            rows.push((g.name().to_string(), m.category, label, score));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for (name, category, label, score) in rows {
        let _ = writeln!(out, "{name},{category},{label},{score}");
    }
    match &a.out {
        Some(p) => write_atomic(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn cmd_mt(a: MtArgs, config: &Config) -> Result<()> {
    let defaults = MtConfig::default();
    let mt = MtConfig {
        trials: a.trials.or(config.mt.trials).unwrap_or(defaults.trials),
        min_dim: a.min_dim.or(config.mt.min_dim).unwrap_or(defaults.min_dim),
        max_dim: a.max_dim.or(config.mt.max_dim).unwrap_or(defaults.max_dim),
        ..defaults
    };
    if let Err(e) = mt.validate() {
        return usage(e.to_string());
    }
    let seed = a.seed.or(config.mt.seed).unwrap_or(BUNDLED_SEED);
    let subjects: Vec<Box<dyn Subject>> = match (a.subjects.as_deref(), &a.source) {
        (Some("all"), _) => {
            // corpus labels before overrides
            let rows = bundled_campaign_labels(&mt, seed)?;
            if let Some(p) = &a.labels {
                write_atomic(p, &format_label_csv(&rows))?;
            }
            return write_campaign_report(&bundled_subjects()?, &mt, seed, a.out.as_deref(), None);
        }
        (Some("reference"), _) => boxed(reference_subjects()),
        (Some("faults"), _) => boxed(fault_subjects()),
        (Some(list), _) => {
            let mut pool = boxed(reference_subjects());
            pool.extend(boxed(fault_subjects()));
            pool.extend(bundled_subjects()?);
            let mut picked = Vec::new();
            for name in list.split(',').map(str::trim) {
                match pool.iter().position(|s| s.name() == name) {
                    Some(i) => picked.push(pool.swap_remove(i)),
                    None => return usage(format!("unknown subject `{name}`")),
                }
            }
            picked
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let program = match parse_source(&text) {
                Ok(p) => p,
                Err(e) => return usage(format!("{}:{e}", path.display())),
            };
            boxed(mini_subjects(&program)?)
        }
        (None, None) => return usage("give --subjects or --source"),
    };
    write_campaign_report(&subjects, &mt, seed, a.out.as_deref(), a.labels.as_deref())
}

fn boxed<S: Subject + 'static>(subjects: Vec<S>) -> Vec<Box<dyn Subject>> {
    subjects.into_iter().map(|s| Box::new(s) as Box<dyn Subject>).collect()
}

fn bundled_subjects() -> Result<Vec<Box<dyn Subject>>> {
    let mut subjects = Vec::new();
    for (_, src) in mrkernel::corpus::BUNDLED_SOURCES {
        subjects.extend(boxed(mini_subjects(&parse_source(src)?)?));
    }
    Ok(subjects)
}

fn write_campaign_report(
    subjects: &[Box<dyn Subject>],
    mt: &MtConfig,
    seed: u64,
    out: Option<&Path>,
    labels: Option<&Path>,
) -> Result<()> {
    let refs: Vec<&dyn Subject> = subjects.iter().map(|s| s.as_ref()).collect();
    let results = run_campaigns(&refs, &MetamorphicRelation::ALL, mt, seed)?;
    let report = format_report(&results, mt);
    if let Some(p) = labels {
        let rows: Vec<LabelRow> = results
            .iter()
            .flat_map(|r| {
                r.labels.iter().map(|&(category, positive)| LabelRow {
                    function: r.subject.clone(),
                    category,
                    positive,
                })
            })
            .collect();
        write_atomic(p, &format_label_csv(&rows))?;
    }
    match out {
        Some(p) => write_atomic(p, &report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn eval_dataset(a: &EvalArgs, config: &Config) -> Result<LabeledDataset> {
    if a.source.bundled {
        return Ok(build_bundled_corpus());
    }
    let Some(dir) = a.source.corpus.as_ref().or(config.paths.graph_dir.as_ref()) else {
        return usage("give --corpus <dir> and --labels <csv>, or --bundled");
    };
    let Some(labels) = a.labels.as_ref().or(config.paths.label_file.as_ref()) else {
        return usage("--corpus needs --labels <csv>");
    };
    Ok(load_corpus(dir, labels)?)
}

fn cmd_eval(a: EvalArgs, config: &Config) -> Result<()> {
    let c_grid = if a.pin_c_grid {
        DEFAULT_C_GRID.to_vec()
    } else {
        a.c_grid
            .clone()
            .or_else(|| config.svm.c_grid.clone())
            .unwrap_or_else(|| DEFAULT_C_GRID.to_vec())
    };
    let lambda_grid = a
        .lambda_grid
        .clone()
        .or_else(|| config.eval.lambda_grid.clone())
        .unwrap_or_else(|| LAMBDA_GRID.to_vec());
    let defaults = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        repetitions: a.reps.or(config.eval.repetitions).unwrap_or(defaults.repetitions),
        base_seed: a.seed.or(config.eval.base_seed).unwrap_or(defaults.base_seed),
        grid: Grid {
            c: c_grid,
            lambda: lambda_grid,
        },
        max_len: a.max_len.or(config.kernel.max_len).unwrap_or(defaults.max_len),
        normalize: a.normalize || config.kernel.normalize.unwrap_or(false),
        tolerance: a.tolerance.or(config.svm.tolerance).unwrap_or(defaults.tolerance),
    };
    if let Err(e) = experiment.grid.validate() {
        return usage(e.to_string());
    }
    if experiment.repetitions == 0 {
        return usage("--reps must be at least 1");
    }
    let table = similarity_table(&a.similarity, config)?;
    let dataset = eval_dataset(&a, config)?;
    let report = run_experiment(&dataset, &table, &experiment)?;
    let json_path = a.json.clone().unwrap_or_else(|| a.out.with_extension("json"));
    let text = report.to_text();
    write_atomic(&json_path, &report.to_json())?;
    write_atomic(&a.out, &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_corpus_build(a: CorpusBuildArgs) -> Result<()> {
    let ds = build_bundled_corpus();
    let graphs: Vec<(String, String)> = ds
        .cfgs()
        .iter()
        .map(|c| (format!("{}.{GRAPH_EXTENSION}", c.name()), emit_graph_file(c)))
        .collect();
    write_all(&a.out.join("graphs"), &graphs)?;
    write_atomic(&a.out.join("labels.csv"), &ds.annotated_label_csv(&bundled_overrides()))?;
    print!("{}", ds.summary());
    Ok(())
}
