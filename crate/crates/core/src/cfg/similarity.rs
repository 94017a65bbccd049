//! Node-label similarity scores used by the walk kernel.
//!
//! Identical labels score 1, a short list of "mathematically similar" operator
//! pairs score 0.5, everything else 0. Call labels match only when their
//! return types agree.

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::label::{NodeKind, NodeLabel, VOCABULARY_SIZE};
use super::CfgError;

/// Operator pairs that score 0.5 in the default table.
pub const DEFAULT_SIMILAR_PAIRS: [(NodeKind, NodeKind); 5] = [
    (NodeKind::Add, NodeKind::Sub),
    (NodeKind::Mul, NodeKind::Div),
    (NodeKind::Lt, NodeKind::Gt),
    (NodeKind::Le, NodeKind::Ge),
    (NodeKind::Eq, NodeKind::Neq),
];

/// Relative tolerance for the positive semidefinite check.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-8;

/// Symmetric label-pair score table over the full label vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSimilarityTable {
    scores: Vec<f64>,
}

impl Default for LabelSimilarityTable {
    fn default() -> Self {
        default_similarity_table()
    }
}

pub fn default_similarity_table() -> LabelSimilarityTable {
    let mut scores = vec![0.0; VOCABULARY_SIZE * VOCABULARY_SIZE];
    for i in 0..VOCABULARY_SIZE {
        scores[i * VOCABULARY_SIZE + i] = 1.0;
    }
    let mut table = LabelSimilarityTable { scores };
    for (a, b) in DEFAULT_SIMILAR_PAIRS {
        table.set(NodeLabel::new(a), NodeLabel::new(b), 0.5);
    }
    table
}

/// Parse an override file (`labelA labelB score` per line, `#` comments) on
/// top of the default table and re-validate it.
pub fn load_similarity_table(text: &str) -> Result<LabelSimilarityTable, CfgError> {
    let mut table = default_similarity_table();
    let mut seen: Vec<(NodeLabel, NodeLabel, f64, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(CfgError::Override {
                line: lineno,
                message: format!("expected `labelA labelB score`, got {line:?}"),
            });
        }
        let a: NodeLabel = fields[0].parse()?;
        let b: NodeLabel = fields[1].parse()?;
        let score: f64 = fields[2].parse().map_err(|_| CfgError::Override {
            line: lineno,
            message: format!("bad score {:?}", fields[2]),
        })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(CfgError::Override {
                line: lineno,
                message: format!("score {score} outside [0, 1]"),
            });
        }
        if a == b && score != 1.0 {
            return Err(CfgError::Override {
                line: lineno,
                message: format!("self-similarity of {a} must be 1"),
            });
        }
        for &(pa, pb, ps, pline) in &seen {
            let same_pair = (pa == a && pb == b) || (pa == b && pb == a);
            if same_pair && ps != score {
                return Err(CfgError::NonSymmetric {
                    a: a.to_string(),
                    b: b.to_string(),
                    first_line: pline,
                    second_line: lineno,
                });
            }
        }
        seen.push((a, b, score, lineno));
        table.set(a, b, score);
    }
    table.validate()?;
    Ok(table)
}

impl LabelSimilarityTable {
    pub fn score(&self, a: NodeLabel, b: NodeLabel) -> f64 {
        self.scores[a.index() * VOCABULARY_SIZE + b.index()]
    }

    /// Score by vocabulary index; hot path of the kernel.
    #[inline]
    pub fn score_by_index(&self, a: usize, b: usize) -> f64 {
        self.scores[a * VOCABULARY_SIZE + b]
    }

    fn set(&mut self, a: NodeLabel, b: NodeLabel, score: f64) {
        self.scores[a.index() * VOCABULARY_SIZE + b.index()] = score;
        self.scores[b.index() * VOCABULARY_SIZE + a.index()] = score;
    }

    /// The full vocabulary matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(VOCABULARY_SIZE, VOCABULARY_SIZE, &self.scores)
    }

    /// Smallest and largest eigenvalue of the vocabulary matrix.
    pub fn eigen_range(&self) -> (f64, f64) {
        let eig = self.matrix().symmetric_eigen().eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    fn validate(&self) -> Result<(), CfgError> {
        let (min, max) = self.eigen_range();
        if min < -PSD_RELATIVE_TOLERANCE * max {
            return Err(CfgError::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }

    /// SHA-256 over the canonical score listing, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.scores {
            hasher.update(s.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
