//! Function corpora: graph directories with label files, and the bundled
//! mini-language corpus labeled by metamorphic testing campaigns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cfg::{emit_graph_file, parse_graph_file, Cfg, CfgError};
use crate::minilang::{compile, parse_source, CompileError};
use crate::mt::{
    mini_subjects, parse_label_csv, run_campaigns, Category, LabelRow, MetamorphicRelation,
    MtConfig, MtError, Subject,
};

/// Extension of graph files in a corpus directory.
pub const GRAPH_EXTENSION: &str = "dot";

/// Base seed of the campaigns that label the bundled corpus.
pub const BUNDLED_SEED: u64 = 20_160_501;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: CfgError },
    #[error("{name}: {source}")]
    Compile { name: String, source: CompileError },
    #[error("label file: {0}")]
    Labels(#[from] MtError),
    #[error("no labels for {}", .0.join(", "))]
    MissingLabel(Vec<String>),
    #[error("labels for functions without graphs: {}", .0.join(", "))]
    MissingGraph(Vec<String>),
    #[error("duplicate function `{0}`")]
    DuplicateName(String),
    #[error("`{function}` has two {category} labels")]
    DuplicateLabel { function: String, category: Category },
    #[error("override line {line}: {message}")]
    Override { line: usize, message: String },
}

/// Functions with their CFGs and one ±1 label per MR category.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    names: Vec<String>,
    cfgs: Vec<Cfg>,
    labels: [Vec<i8>; 3],
}

impl LabeledDataset {
    /// Checks that names are unique and every function has all three labels.
    pub fn new(cfgs: Vec<Cfg>, rows: &[LabelRow]) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (i, c) in cfgs.iter().enumerate() {
            if index.insert(c.name().to_string(), i).is_some() {
                return Err(CorpusError::DuplicateName(c.name().to_string()));
            }
        }
        let mut labels: [Vec<Option<i8>>; 3] = std::array::from_fn(|_| vec![None; cfgs.len()]);
        let mut orphans = BTreeSet::new();
        for r in rows {
            let Some(&i) = index.get(&r.function) else {
                orphans.insert(r.function.clone());
                continue;
            };
            let slot = &mut labels[r.category.index()][i];
            if slot.is_some() {
                return Err(CorpusError::DuplicateLabel {
                    function: r.function.clone(),
                    category: r.category,
                });
            }
            *slot = Some(if r.positive { 1 } else { -1 });
        }
        if !orphans.is_empty() {
            return Err(CorpusError::MissingGraph(orphans.into_iter().collect()));
        }
        let unlabeled: Vec<String> = cfgs
            .iter()
            .enumerate()
            .filter(|(i, _)| labels.iter().any(|l| l[*i].is_none()))
            .map(|(_, c)| c.name().to_string())
            .collect();
        if !unlabeled.is_empty() {
            return Err(CorpusError::MissingLabel(unlabeled));
        }
        Ok(LabeledDataset {
            names: cfgs.iter().map(|c| c.name().to_string()).collect(),
            cfgs,
            labels: labels.map(|l| l.into_iter().map(|v| v.expect("checked above")).collect()),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cfgs(&self) -> &[Cfg] {
        &self.cfgs
    }

    pub fn labels(&self, category: Category) -> &[i8] {
        &self.labels[category.index()]
    }

    /// `(positives, negatives)` for a category.
    pub fn class_counts(&self, category: Category) -> (usize, usize) {
        let l = self.labels(category);
        let pos = l.iter().filter(|&&v| v == 1).count();
        (pos, l.len() - pos)
    }

    /// Both classes present.
    pub fn is_learnable(&self, category: Category) -> bool {
        let (p, n) = self.class_counts(category);
        p > 0 && n > 0
    }

    pub fn unlearnable(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| !self.is_learnable(*c))
            .collect()
    }

    pub fn label_rows(&self) -> Vec<LabelRow> {
        self.names
            .iter()
            .enumerate()
            .flat_map(|(i, name)| {
                Category::ALL.into_iter().map(move |c| LabelRow {
                    function: name.clone(),
                    category: c,
                    positive: self.labels[c.index()][i] == 1,
                })
            })
            .collect()
    }

    /// Label CSV with the `function,MR,label,comment` header and empty comments.
    pub fn label_csv(&self) -> String {
        self.annotated_label_csv(&[])
    }

    /// Label CSV whose comment column carries the comment of the matching override.
    pub fn annotated_label_csv(&self, overrides: &[LabelOverride]) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["function", "MR", "label", "comment"])
            .expect("in-memory write");
        for r in self.label_rows() {
            let comment = overrides
                .iter()
                .find(|o| o.row.function == r.function && o.row.category == r.category)
                .map_or("", |o| o.comment.as_str());
            let label = if r.positive { "1" } else { "-1" };
            writer
                .write_record([r.function.as_str(), r.category.as_str(), label, comment])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Writes one graph file per function into `graph_dir` and the labels to
    /// `label_file`.
    pub fn emit(&self, graph_dir: &Path, label_file: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(graph_dir).map_err(io(graph_dir))?;
        for c in &self.cfgs {
            let path = graph_dir.join(format!("{}.{GRAPH_EXTENSION}", c.name()));
            fs::write(&path, emit_graph_file(c)).map_err(io(&path))?;
        }
        fs::write(label_file, self.label_csv()).map_err(io(label_file))
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{} functions\n", self.len());
        for c in Category::ALL {
            let (p, n) = self.class_counts(c);
            let _ = writeln!(out, "{c}: {p} positive, {n} negative");
        }
        out
    }
}

/// Loads every `*.dot` graph in `graph_dir` (sorted by file name) and the
/// labels in `label_file`.
pub fn load_corpus(graph_dir: &Path, label_file: &Path) -> Result<LabeledDataset, CorpusError> {
    let entries = fs::read_dir(graph_dir).map_err(|source| CorpusError::Io {
        path: graph_dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for e in entries {
        let path = e
            .map_err(|source| CorpusError::Io {
                path: graph_dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().is_some_and(|x| x == GRAPH_EXTENSION) {
            paths.push(path);
        }
    }
    paths.sort();
    let mut cfgs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let cfg = parse_graph_file(&text).map_err(|source| CorpusError::Graph {
            path: path.clone(),
            source,
        })?;
        cfgs.push(cfg);
    }
    let text = fs::read_to_string(label_file).map_err(|source| CorpusError::Io {
        path: label_file.to_path_buf(),
        source,
    })?;
    LabeledDataset::new(cfgs, &parse_label_csv(&text)?)
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name, ".mml")))),*]
    };
}

/// Name and source of each bundled function.
pub const BUNDLED_SOURCES: &[(&str, &str)] = bundled![
    "add_rows", "add_cols", "subtract_rows", "subtract_while", "subtract_cols",
    "multiply_ijk", "multiply_ikj", "scale", "scale_cols", "transpose", "copy",
    "get_row", "get_column", "hadamard", "row_sums", "col_sums", "sum_all", "trace",
    "max_all", "clamp_min", "clamp_if", "indicator_above", "fill", "negate",
    "reciprocal", "normalize_max", "center_mean", "row_diff", "col_diff",
    "argmax_all", "cumsum_rows", "cumsum_cols", "abs_diff", "square_entries",
    "saturating_add", "saturating_add_if", "row_clamp", "diag_clamp_sum",
    "row_count_above", "col_count_above", "count_greater", "capped_row_sums",
    "saturating_hadamard", "col_clamp", "weighted_rows", "reverse_subtract",
    "negate_while", "divide_entries", "relative_change", "row_center", "col_center",
    "subtract_min", "ratio_to_first", "subtract_transposed", "subtract_scaled",
];

const OVERRIDES: &str = include_str!("../corpus/overrides.csv");

/// A hand-set label replacing the campaign result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOverride {
    pub row: LabelRow,
    pub comment: String,
}

/// Parses `function,MR,label,comment` rows; every row needs a comment.
pub fn parse_overrides(text: &str) -> Result<Vec<LabelOverride>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let err = |line: usize, message: String| CorpusError::Override { line, message };
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["function", "MR", "label", "comment"] {
        return Err(err(1, "header must be function,MR,label,comment".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let category = rec[1].parse().map_err(|m| err(line, m))?;
        let positive = match &rec[2] {
            "1" => true,
            "-1" => false,
            other => return Err(err(line, format!("label {other:?} is not 1 or -1"))),
        };
        if rec[3].is_empty() {
            return Err(err(line, format!("override of `{}` has no comment", &rec[0])));
        }
        out.push(LabelOverride {
            row: LabelRow {
                function: rec[0].to_string(),
                category,
                positive,
            },
            comment: rec[3].to_string(),
        });
    }
    Ok(out)
}

pub fn bundled_overrides() -> Vec<LabelOverride> {
    parse_overrides(OVERRIDES).expect("bundled overrides are well-formed")
}

/// Compiles the bundled sources; each file holds exactly the named function.
pub fn bundled_cfgs() -> Vec<Cfg> {
    BUNDLED_SOURCES
        .iter()
        .map(|(name, src)| {
            let program = parse_source(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let cfgs = compile(&program).cfgs();
            assert_eq!(cfgs.len(), 1, "{name} must define one function");
            assert_eq!(cfgs[0].name(), *name);
            cfgs.into_iter().next().expect("one function")
        })
        .collect()
}

/// Runs every bundled function through the campaigns and returns the raw
/// labels, in corpus order with categories in their canonical order.
pub fn bundled_campaign_labels(config: &MtConfig, seed: u64) -> Result<Vec<LabelRow>, CorpusError> {
    let mut subjects = Vec::new();
    for (name, src) in BUNDLED_SOURCES {
        let program = parse_source(src).map_err(|source| CorpusError::Compile {
            name: name.to_string(),
            source,
        })?;
        subjects.extend(mini_subjects(&program)?);
    }
    let refs: Vec<&dyn Subject> = subjects.iter().map(|s| s as &dyn Subject).collect();
    let results = run_campaigns(&refs, &MetamorphicRelation::ALL, config, seed)?;
    Ok(results
        .iter()
        .flat_map(|r| {
            r.labels.iter().map(|&(category, positive)| LabelRow {
                function: r.subject.clone(),
                category,
                positive,
            })
        })
        .collect())
}

/// Applies overrides to campaign labels. An override naming an unknown
/// function or category is an error.
pub fn apply_overrides(
    rows: &mut [LabelRow],
    overrides: &[LabelOverride],
) -> Result<(), CorpusError> {
    for (k, o) in overrides.iter().enumerate() {
        let target = rows
            .iter_mut()
            .find(|r| r.function == o.row.function && r.category == o.row.category)
            .ok_or_else(|| CorpusError::Override {
                line: k + 2,
                message: format!("no function `{}` to override", o.row.function),
            })?;
        target.positive = o.row.positive;
    }
    Ok(())
}

/// The bundled corpus: campaign labels at [`BUNDLED_SEED`] with the default
/// configuration, then the checked-in overrides.
pub fn build_bundled_corpus() -> LabeledDataset {
    let mut rows = bundled_campaign_labels(&MtConfig::default(), BUNDLED_SEED)
        .expect("bundled functions are runnable");
    apply_overrides(&mut rows, &bundled_overrides()).expect("overrides name bundled functions");
    let ds = LabeledDataset::new(bundled_cfgs(), &rows).expect("bundled corpus is consistent");
    assert!(ds.unlearnable().is_empty(), "bundled corpus has a single-class category");
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{NodeKind, NodeLabel};

    fn tiny(name: &str) -> Cfg {
        Cfg::new(
            name,
            vec![
                ("start".into(), NodeLabel::new(NodeKind::Start)),
                ("n1".into(), NodeLabel::new(NodeKind::Add)),
                ("exit".into(), NodeLabel::new(NodeKind::Exit)),
            ],
            vec![("start".into(), "n1".into()), ("n1".into(), "exit".into())],
        )
        .unwrap()
    }

    fn rows(name: &str, labels: [bool; 3]) -> Vec<LabelRow> {
        Category::ALL
            .into_iter()
            .zip(labels)
            .map(|(category, positive)| LabelRow {
                function: name.into(),
                category,
                positive,
            })
            .collect()
    }

    #[test]
    fn dataset_validation() {
        let ok = LabeledDataset::new(vec![tiny("f")], &rows("f", [true, false, true])).unwrap();
        assert_eq!(ok.labels(Category::Additive), &[-1]);
        assert!(matches!(
            LabeledDataset::new(vec![tiny("f"), tiny("g")], &rows("f", [true; 3])),
            Err(CorpusError::MissingLabel(n)) if n == ["g"]
        ));
        assert!(matches!(
            LabeledDataset::new(vec![tiny("f")], &[rows("f", [true; 3]), rows("h", [true; 3])].concat()),
            Err(CorpusError::MissingGraph(n)) if n == ["h"]
        ));
        assert!(matches!(
            LabeledDataset::new(vec![tiny("f"), tiny("f")], &[]),
            Err(CorpusError::DuplicateName(_))
        ));
        assert!(matches!(
            LabeledDataset::new(vec![tiny("f")], &[rows("f", [true; 3]), rows("f", [true; 3])].concat()),
            Err(CorpusError::DuplicateLabel { .. })
        ));
    }

    #[test]
    fn empty_label_file_lists_every_graph() {
        let err = LabeledDataset::new(vec![tiny("a"), tiny("b")], &[]).unwrap_err();
        assert_eq!(err.to_string(), "no labels for a, b");
    }

    #[test]
    fn override_parsing() {
        let o = parse_overrides("function,MR,label,comment\nf,Additive,-1,checked by hand\n").unwrap();
        assert_eq!(o[0].row.function, "f");
        assert!(!o[0].row.positive);
        assert!(parse_overrides("function,MR,label,comment\nf,Additive,-1,\n").is_err());
        assert!(parse_overrides("function,MR,label\nf,Additive,-1\n").is_err());
        assert!(parse_overrides("function,MR,label,comment\nf,Other,1,x\n").is_err());
    }

    #[test]
    fn bundled_sources_compile() {
        let cfgs = bundled_cfgs();
        assert!(cfgs.len() >= 40);
        assert!(bundled_overrides().iter().all(|o| BUNDLED_SOURCES.iter().any(|(n, _)| *n == o.row.function)));
    }
}
