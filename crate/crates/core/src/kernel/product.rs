use super::LabeledGraph;
use crate::cfg::LabelSimilarityTable;

/// Direct product of two CFGs restricted to node pairs with nonzero label
/// similarity. Walks in the product graph correspond one-to-one with pairs
/// of equal-length walks in the factors.
#[derive(Debug, Clone)]
pub struct ProductGraph {
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    successors: Vec<Vec<usize>>,
}

impl ProductGraph {
    pub fn new<G1: LabeledGraph, G2: LabeledGraph>(
        g1: &G1,
        g2: &G2,
        table: &LabelSimilarityTable,
    ) -> Self {
        let (n1, n2) = (g1.node_count(), g2.node_count());
        let mut slot = vec![usize::MAX; n1 * n2];
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        let idx2: Vec<usize> = (0..n2).map(|v| g2.node_label(v).index()).collect();
        for u in 0..n1 {
            let iu = g1.node_label(u).index();
            for (v, &iv) in idx2.iter().enumerate() {
                let w = table.score_by_index(iu, iv);
                if w > 0.0 {
                    slot[u * n2 + v] = pairs.len();
                    pairs.push((u, v));
                    weights.push(w);
                }
            }
        }
        let successors = pairs
            .iter()
            .map(|&(u, v)| {
                let mut out = Vec::new();
                for &su in g1.next_nodes(u) {
                    for &sv in g2.next_nodes(v) {
                        let p = slot[su * n2 + sv];
                        if p != usize::MAX {
                            out.push(p);
                        }
                    }
                }
                out
            })
            .collect();
        ProductGraph {
            pairs,
            weights,
            successors,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Node pair `(u, v)` behind product node `p`.
    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }

    pub fn weight(&self, p: usize) -> f64 {
        self.weights[p]
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// `c_n = sum_p y_n[p]` where `y_0 = w` and
    /// `y_n[p] = w[p] * sum_{p -> q} y_{n-1}[q]`.
    pub fn walk_counts(&self, max_len: usize) -> Vec<f64> {
        let mut counts = Vec::with_capacity(max_len + 1);
        let mut y = self.weights.clone();
        counts.push(y.iter().sum());
        let mut next = vec![0.0; y.len()];
        for _ in 0..max_len {
            for (p, out) in next.iter_mut().enumerate() {
                let s: f64 = self.successors[p].iter().map(|&q| y[q]).sum();
                *out = self.weights[p] * s;
            }
            std::mem::swap(&mut y, &mut next);
            counts.push(y.iter().sum());
        }
        counts
    }
}
