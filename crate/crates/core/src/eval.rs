//! Experimental protocol: stratified three-way splits, validation-driven grid
//! search over `(C, lambda)`, test AUC and repeated runs.

use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cfg::LabelSimilarityTable;
use crate::corpus::LabeledDataset;
use crate::kernel::{GramMatrix, KernelError, KernelParams, WalkCountTable, DEFAULT_MAX_LEN};
use crate::mt::Category;
use crate::svm::{train, SvmError, SvmParams, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

pub const DEFAULT_C_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
pub const LAMBDA_GRID: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_REPETITIONS: usize = 10;
/// Re-deal attempts before a split is given up.
pub const MAX_SPLIT_ATTEMPTS: u64 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("AUC needs at least one positive and one negative score")]
    EmptyClass,
    #[error("{0} has a single class and cannot be learned")]
    Unlearnable(Category),
    #[error("no split with a two-class training fold after {attempts} attempts")]
    Split { attempts: u64 },
    #[error("{0} fold has a single class")]
    SingleClassFold(Fold),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64, EvalError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::EmptyClass);
    }
    let mut twice = 0u64;
    for &p in pos {
        for &n in neg {
            twice += match p.partial_cmp(&n) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// AUC of `scores` against ±1 `labels`.
pub fn auc_labeled(scores: &[f64], labels: &[i8]) -> Result<f64, EvalError> {
    let pick = |want: i8| -> Vec<f64> {
        scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == want)
            .map(|(s, _)| *s)
            .collect()
    };
    auc(&pick(1), &pick(-1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Validation,
    Test,
}

impl Fold {
    pub const ALL: [Fold; 3] = [Fold::Train, Fold::Validation, Fold::Test];
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fold::Train => "train",
            Fold::Validation => "validation",
            Fold::Test => "test",
        })
    }
}

/// Fold assignment of every instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitSpec {
    pub seed: u64,
    /// Re-deal attempt that produced this split, starting at 0.
    pub attempt: u64,
    pub folds: Vec<Fold>,
}

impl SplitSpec {
    pub fn indices(&self, fold: Fold) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    /// `(positives, negatives)` in a fold.
    pub fn class_counts(&self, fold: Fold, labels: &[i8]) -> (usize, usize) {
        let idx = self.indices(fold);
        let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
        (pos, idx.len() - pos)
    }
}

/// Part sizes of `n` split three ways by largest remainder; the parts that
/// receive the remainder are chosen by `rng`.
fn apportion(n: usize, rng: &mut ChaCha8Rng) -> [usize; 3] {
    let mut sizes = [n / 3; 3];
    let mut order = [0, 1, 2];
    order.shuffle(rng);
    for &k in &order[..n % 3] {
        sizes[k] += 1;
    }
    sizes
}

fn deal(labels: &[i8], seed: u64, attempt: u64) -> Vec<Fold> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let mut folds = vec![Fold::Train; labels.len()];
    for class in [1i8, -1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let sizes = apportion(members.len(), &mut rng);
        let mut at = 0;
        for (fold, size) in Fold::ALL.into_iter().zip(sizes) {
            for &i in &members[at..at + size] {
                folds[i] = fold;
            }
            at += size;
        }
    }
    folds
}

/// Stratified train/validation/test split of ±1 labels. A deal whose
/// training fold is single-class is redone with the next attempt number.
pub fn split_labels(labels: &[i8], seed: u64) -> Result<SplitSpec, EvalError> {
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let spec = SplitSpec {
            seed,
            attempt,
            folds: deal(labels, seed, attempt),
        };
        let (p, n) = spec.class_counts(Fold::Train, labels);
        if p > 0 && n > 0 {
            return Ok(spec);
        }
    }
    Err(EvalError::Split {
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}

pub fn stratified_split(
    dataset: &LabeledDataset,
    category: Category,
    seed: u64,
) -> Result<SplitSpec, EvalError> {
    if !dataset.is_learnable(category) {
        return Err(EvalError::Unlearnable(category));
    }
    split_labels(dataset.labels(category), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C={} lambda={}", self.c, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            c: DEFAULT_C_GRID.to_vec(),
            lambda: LAMBDA_GRID.to_vec(),
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.c.is_empty() || self.lambda.is_empty() {
            return Err(EvalError::Grid("both grids need a value".into()));
        }
        if let Some(c) = self.c.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(EvalError::Grid(format!("C value {c} is not positive")));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(0.0..1.0).contains(*l)) {
            return Err(EvalError::Grid(format!("lambda {l} outside [0, 1)")));
        }
        Ok(())
    }

    /// Points in C-major order.
    pub fn points(&self) -> Vec<GridPoint> {
        self.c
            .iter()
            .flat_map(|&c| self.lambda.iter().map(move |&lambda| GridPoint { c, lambda }))
            .collect()
    }
}

/// Gram matrices for every lambda of a grid, from one walk-count pass.
#[derive(Debug, Clone)]
pub struct GramCache {
    grams: Vec<(f64, GramMatrix)>,
}

impl GramCache {
    pub fn build(
        dataset: &LabeledDataset,
        table: &LabelSimilarityTable,
        lambdas: &[f64],
        max_len: usize,
        normalize: bool,
    ) -> Result<Self, EvalError> {
        let counts = WalkCountTable::build(dataset.cfgs(), table, max_len)?;
        let grams = lambdas
            .iter()
            .map(|&l| Ok((l, counts.gram(&KernelParams::new(l, max_len, normalize)?)?)))
            .collect::<Result<_, EvalError>>()?;
        Ok(GramCache { grams })
    }

    pub fn get(&self, lambda: f64) -> Option<&GramMatrix> {
        self.grams.iter().find(|(l, _)| *l == lambda).map(|(_, g)| g)
    }
}

fn fold_scores(
    gram: &GramMatrix,
    labels: &[i8],
    train_idx: &[usize],
    eval_idx: &[usize],
    params: &SvmParams,
) -> Result<f64, EvalError> {
    let k = gram.select(train_idx, train_idx);
    let y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
    let model = train(&k, &y, params)?;
    let scores = model.decision_values(&gram.select(eval_idx, train_idx))?;
    let truth: Vec<i8> = eval_idx.iter().map(|&i| labels[i]).collect();
    auc_labeled(&scores, &truth)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub point: GridPoint,
    pub validation_auc: f64,
    /// Training or scoring error; the point then scores 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSelection {
    pub selected: GridPoint,
    pub validation_auc: f64,
    /// Every point reaching the selected AUC, in grid order.
    pub ties: Vec<GridPoint>,
    pub scores: Vec<GridScore>,
}

/// Picks the best of `scores`: highest AUC, then smallest C, then largest lambda.
pub fn select_best(scores: Vec<GridScore>) -> Result<GridSelection, EvalError> {
    let best = scores
        .iter()
        .map(|s| s.validation_auc)
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<GridPoint> = scores
        .iter()
        .filter(|s| s.validation_auc == best)
        .map(|s| s.point)
        .collect();
    let selected = *ties
        .iter()
        .min_by(|a, b| a.c.total_cmp(&b.c).then(b.lambda.total_cmp(&a.lambda)))
        .ok_or_else(|| EvalError::Grid("empty grid".into()))?;
    Ok(GridSelection {
        selected,
        validation_auc: best,
        ties,
        scores,
    })
}

/// Trains on the training fold at every grid point and scores the validation fold.
pub fn grid_search(
    cache: &GramCache,
    labels: &[i8],
    split: &SplitSpec,
    grid: &Grid,
    tolerance: f64,
) -> Result<GridSelection, EvalError> {
    grid.validate()?;
    let train_idx = split.indices(Fold::Train);
    let val_idx = split.indices(Fold::Validation);
    let scores: Vec<GridScore> = grid
        .points()
        .par_iter()
        .map(|&point| {
            let outcome = cache
                .get(point.lambda)
                .ok_or_else(|| EvalError::Grid(format!("no Gram matrix for lambda {}", point.lambda)))
                .and_then(|g| {
                    let params = SvmParams::new(point.c, tolerance, DEFAULT_MAX_PASSES)?;
                    fold_scores(g, labels, &train_idx, &val_idx, &params)
                });
            match outcome {
                Ok(a) => GridScore {
                    point,
                    validation_auc: a,
                    error: None,
                },
                Err(e) => GridScore {
                    point,
                    validation_auc: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    select_best(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub repetitions: usize,
    pub base_seed: u64,
    pub grid: Grid,
    pub max_len: usize,
    pub normalize: bool,
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            repetitions: DEFAULT_REPETITIONS,
            base_seed: 0,
            grid: Grid::default(),
            max_len: DEFAULT_MAX_LEN,
            normalize: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub split_attempt: u64,
    pub selected: GridPoint,
    pub ties: Vec<GridPoint>,
    pub validation_auc: f64,
    pub test_auc: f64,
    /// Grid points whose training failed.
    pub flagged: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionError {
    pub repetition: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    pub category: Category,
    pub positives: usize,
    pub negatives: usize,
    pub repetitions: Vec<RepetitionResult>,
    pub errors: Vec<RepetitionError>,
    /// Means over completed repetitions; absent when none completed.
    pub mean_validation_auc: Option<f64>,
    pub mean_test_auc: Option<f64>,
    pub overfit_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub functions: usize,
    pub categories: Vec<CategoryReport>,
}

fn run_repetition(
    cache: &GramCache,
    labels: &[i8],
    config: &ExperimentConfig,
    repetition: usize,
) -> Result<RepetitionResult, EvalError> {
    let seed = config.base_seed.wrapping_add(repetition as u64);
    let split = split_labels(labels, seed)?;
    for fold in [Fold::Validation, Fold::Test] {
        let (p, n) = split.class_counts(fold, labels);
        if p == 0 || n == 0 {
            return Err(EvalError::SingleClassFold(fold));
        }
    }
    let sel = grid_search(cache, labels, &split, &config.grid, config.tolerance)?;
    let gram = cache.get(sel.selected.lambda).expect("selected from the grid");
    let params = SvmParams::new(sel.selected.c, config.tolerance, DEFAULT_MAX_PASSES)?;
    let test_auc = fold_scores(
        gram,
        labels,
        &split.indices(Fold::Train),
        &split.indices(Fold::Test),
        &params,
    )?;
    Ok(RepetitionResult {
        repetition,
        seed,
        split_attempt: split.attempt,
        selected: sel.selected,
        flagged: sel
            .scores
            .iter()
            .filter(|s| s.error.is_some())
            .map(|s| s.point)
            .collect(),
        ties: sel.ties,
        validation_auc: sel.validation_auc,
        test_auc,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// All three categories over `config.repetitions` repetitions. Repetition
/// `r` splits with seed `base_seed + r`, selects on the validation fold and
/// scores the test fold with a model retrained on the training fold.
pub fn run_experiment(
    dataset: &LabeledDataset,
    table: &LabelSimilarityTable,
    config: &ExperimentConfig,
) -> Result<EvalReport, EvalError> {
    config.grid.validate()?;
    if let Some(c) = dataset.unlearnable().first() {
        return Err(EvalError::Unlearnable(*c));
    }
    let cache = GramCache::build(
        dataset,
        table,
        &config.grid.lambda,
        config.max_len,
        config.normalize,
    )?;
    let categories = Category::ALL
        .par_iter()
        .map(|&category| {
            let labels = dataset.labels(category);
            let outcomes: Vec<Result<RepetitionResult, EvalError>> = (0..config.repetitions)
                .into_par_iter()
                .map(|r| run_repetition(&cache, labels, config, r))
                .collect();
            let mut repetitions = Vec::new();
            let mut errors = Vec::new();
            for (r, o) in outcomes.into_iter().enumerate() {
                match o {
                    Ok(rep) => repetitions.push(rep),
                    Err(e) => errors.push(RepetitionError {
                        repetition: r,
                        seed: config.base_seed.wrapping_add(r as u64),
                        error: e.to_string(),
                    }),
                }
            }
            let mean_validation_auc = mean(repetitions.iter().map(|r| r.validation_auc));
            let mean_test_auc = mean(repetitions.iter().map(|r| r.test_auc));
            let (positives, negatives) = dataset.class_counts(category);
            CategoryReport {
                category,
                positives,
                negatives,
                overfit_gap: mean_validation_auc
                    .zip(mean_test_auc)
                    .map(|(v, t)| (v - t).abs()),
                mean_validation_auc,
                mean_test_auc,
                repetitions,
                errors,
            }
        })
        .collect();
    Ok(EvalReport {
        config: config.clone(),
        functions: dataset.len(),
        categories,
    })
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    dataset: &LabeledDataset,
    table: &LabelSimilarityTable,
    config: &ExperimentConfig,
    workers: usize,
) -> Result<EvalReport, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Grid(e.to_string()))?;
    pool.install(|| run_experiment(dataset, table, config))
}

impl EvalReport {
    pub fn category(&self, category: Category) -> Option<&CategoryReport> {
        self.categories.iter().find(|c| c.category == category)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "functions: {}  repetitions: {}  base seed: {}  walk length: {}  normalize: {}",
            self.functions, c.repetitions, c.base_seed, c.max_len, c.normalize
        );
        let _ = writeln!(out, "C grid: {:?}  lambda grid: {:?}", c.grid.c, c.grid.lambda);
        for cat in &self.categories {
            let _ = writeln!(
                out,
                "\n{} ({} positive, {} negative)",
                cat.category, cat.positives, cat.negatives
            );
            let _ = writeln!(out, "  rep  seed  selected              ties  val AUC  test AUC");
            for r in &cat.repetitions {
                let _ = writeln!(
                    out,
                    "  {:>3}  {:>4}  {:<20}  {:>4}  {:.4}   {:.4}",
                    r.repetition,
                    r.seed,
                    r.selected.to_string(),
                    r.ties.len(),
                    r.validation_auc,
                    r.test_auc
                );
            }
            for e in &cat.errors {
                let _ = writeln!(out, "  {:>3}  {:>4}  error: {}", e.repetition, e.seed, e.error);
            }
            let _ = writeln!(
                out,
                "  mean validation AUC {}  mean test AUC {}  overfit gap {}",
                opt(cat.mean_validation_auc),
                opt(cat.mean_test_auc),
                opt(cat.overfit_gap)
            );
        }
        out
    }
}
