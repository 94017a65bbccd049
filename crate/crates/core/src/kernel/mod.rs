//! Random walk graph kernel over labeled CFGs.
//!
//! Two graphs are compared by summing, over every pair of equal-length walks,
//! the product of node-label similarities along the walks. Length-`n` pairs are
//! damped by `lambda^n` and the sum is truncated at `max_len`. Edge pairs all
//! score 1 since CFGs carry a single edge type.

mod bruteforce;
mod gram;
mod product;

use thiserror::Error;

use crate::cfg::{Cfg, LabelSimilarityTable, NodeLabel};

pub use bruteforce::{kernel_bruteforce, BRUTEFORCE_MAX_LEN, BRUTEFORCE_MAX_PAIRS};
pub use gram::{gram, gram_with_workers, GramMatrix, WalkCountTable};
pub use product::ProductGraph;

pub const DEFAULT_MAX_LEN: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameters: {0}")]
    Params(String),
    #[error("graphs too large for walk enumeration ({pairs} node pairs, length {max_len}; limits {} pairs, length {})", BRUTEFORCE_MAX_PAIRS, BRUTEFORCE_MAX_LEN)]
    TooLarge { pairs: usize, max_len: usize },
    #[error("gram file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("gram matrix needs at least one graph")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    lambda: f64,
    max_len: usize,
    normalize: bool,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            lambda: 0.9,
            max_len: DEFAULT_MAX_LEN,
            normalize: false,
        }
    }
}

impl KernelParams {
    pub fn new(lambda: f64, max_len: usize, normalize: bool) -> Result<Self, KernelError> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(KernelError::Params(format!(
                "lambda {lambda} outside [0, 1)"
            )));
        }
        Ok(KernelParams {
            lambda,
            max_len,
            normalize,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }
}

/// Anything the walk kernel can compare: nodes with labels and successor lists.
pub trait LabeledGraph {
    fn node_count(&self) -> usize;
    fn node_label(&self, node: usize) -> NodeLabel;
    fn next_nodes(&self, node: usize) -> &[usize];
}

impl LabeledGraph for Cfg {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn node_label(&self, node: usize) -> NodeLabel {
        self.label(node)
    }

    fn next_nodes(&self, node: usize) -> &[usize] {
        self.successors(node)
    }
}

/// A bare labeled digraph with none of the CFG invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    labels: Vec<NodeLabel>,
    successors: Vec<Vec<usize>>,
}

impl Digraph {
    /// Panics if an edge endpoint is out of range.
    pub fn new(labels: Vec<NodeLabel>, edges: &[(usize, usize)]) -> Self {
        let mut successors = vec![Vec::new(); labels.len()];
        for &(a, b) in edges {
            assert!(
                a < labels.len() && b < labels.len(),
                "edge ({a}, {b}) out of range"
            );
            successors[a].push(b);
        }
        Digraph { labels, successors }
    }

    /// Simple path over the given labels.
    pub fn path(labels: &[NodeLabel]) -> Self {
        let edges: Vec<(usize, usize)> = (1..labels.len()).map(|i| (i - 1, i)).collect();
        Digraph::new(labels.to_vec(), &edges)
    }
}

impl LabeledGraph for Digraph {
    fn node_count(&self) -> usize {
        self.labels.len()
    }

    fn node_label(&self, node: usize) -> NodeLabel {
        self.labels[node]
    }

    fn next_nodes(&self, node: usize) -> &[usize] {
        &self.successors[node]
    }
}

/// Per-length walk-pair similarity sums `c_0 ..= c_max_len`.
pub fn walk_counts<G1: LabeledGraph, G2: LabeledGraph>(
    g1: &G1,
    g2: &G2,
    table: &LabelSimilarityTable,
    max_len: usize,
) -> Vec<f64> {
    ProductGraph::new(g1, g2, table).walk_counts(max_len)
}

/// `sum_n lambda^n c_n`, Horner form.
pub fn damped_sum(counts: &[f64], lambda: f64) -> f64 {
    counts.iter().rev().fold(0.0, |acc, c| acc * lambda + c)
}

pub(crate) fn cosine(k12: f64, k11: f64, k22: f64) -> f64 {
    let denom = (k11 * k22).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        k12 / denom
    }
}

/// Random walk kernel between two graphs.
pub fn kernel<G1: LabeledGraph, G2: LabeledGraph>(
    g1: &G1,
    g2: &G2,
    table: &LabelSimilarityTable,
    params: &KernelParams,
) -> f64 {
    let lambda = params.lambda;
    let k = damped_sum(&walk_counts(g1, g2, table, params.max_len), lambda);
    if params.normalize {
        let k11 = damped_sum(&walk_counts(g1, g1, table, params.max_len), lambda);
        let k22 = damped_sum(&walk_counts(g2, g2, table, params.max_len), lambda);
        cosine(k, k11, k22)
    } else {
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{default_similarity_table, parse_graph_file};

    fn path(labels: &[&str]) -> Cfg {
        let mut text = String::from("digraph p { s [label=start]; e [label=exit];\n");
        for (i, l) in labels.iter().enumerate() {
            text.push_str(&format!("n{i} [label=\"{l}\"];\n"));
        }
        let mut prev = "s".to_string();
        for i in 0..labels.len() {
            text.push_str(&format!("{prev} -> n{i};\n"));
            prev = format!("n{i}");
        }
        text.push_str(&format!("{prev} -> e; }}"));
        parse_graph_file(&text).unwrap()
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(KernelParams::new(1.0, 3, false).is_err());
        assert!(KernelParams::new(-0.1, 3, false).is_err());
        assert!(KernelParams::new(0.0, 0, false).is_ok());
    }

    #[test]
    fn horner_matches_direct_sum() {
        let c = [2.0, 1.0, 3.0];
        assert!((damped_sum(&c, 0.5) - (2.0 + 0.5 + 0.75)).abs() < 1e-15);
        assert_eq!(damped_sum(&[], 0.5), 0.0);
    }

    #[test]
    fn monotone_in_max_len() {
        let t = default_similarity_table();
        let a = path(&["add", "mul", "assign"]);
        let b = path(&["sub", "mul", "assign", "assign"]);
        let mut prev = 0.0;
        for l in 0..8 {
            let k = kernel(&a, &b, &t, &KernelParams::new(0.7, l, false).unwrap());
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn normalized_self_kernel_is_one() {
        let t = default_similarity_table();
        let a = path(&["add", "mul", "assign"]);
        let b = path(&["sub"]);
        let p = KernelParams::new(0.9, 10, true).unwrap();
        assert!((kernel(&a, &a, &t, &p) - 1.0).abs() < 1e-12);
        let k = kernel(&a, &b, &t, &p);
        assert!(k > 0.0 && k < 1.0);
    }
}
