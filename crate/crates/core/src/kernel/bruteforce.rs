use super::{cosine, KernelError, KernelParams, LabeledGraph};
use crate::cfg::LabelSimilarityTable;

pub const BRUTEFORCE_MAX_PAIRS: usize = 64;
pub const BRUTEFORCE_MAX_LEN: usize = 6;

/// All walks with exactly `len` edges, as label-index sequences.
fn walks<G: LabeledGraph>(g: &G, len: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<Vec<usize>> = (0..g.node_count()).map(|v| vec![v]).collect();
    for _ in 0..len {
        let mut longer = Vec::new();
        for w in &current {
            let last = *w.last().expect("walks are nonempty");
            for &s in g.next_nodes(last) {
                let mut ext = w.clone();
                ext.push(s);
                longer.push(ext);
            }
        }
        current = longer;
    }
    current
        .into_iter()
        .map(|w| w.into_iter().map(|v| g.node_label(v).index()).collect())
        .collect()
}

fn raw<G1: LabeledGraph, G2: LabeledGraph>(
    g1: &G1,
    g2: &G2,
    table: &LabelSimilarityTable,
    params: &KernelParams,
) -> f64 {
    let mut total = 0.0;
    for n in 0..=params.max_len() {
        let (w1, w2) = (walks(g1, n), walks(g2, n));
        let mut c = 0.0;
        for a in &w1 {
            for b in &w2 {
                c += a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| table.score_by_index(x, y))
                    .product::<f64>();
            }
        }
        total += params.lambda().powi(n as i32) * c;
    }
    total
}

/// Walk kernel by explicit enumeration of every walk pair. Exponential in
/// `max_len`; only for small graphs.
pub fn kernel_bruteforce<G1: LabeledGraph, G2: LabeledGraph>(
    g1: &G1,
    g2: &G2,
    table: &LabelSimilarityTable,
    params: &KernelParams,
) -> Result<f64, KernelError> {
    let pairs = g1.node_count() * g2.node_count();
    if pairs > BRUTEFORCE_MAX_PAIRS || params.max_len() > BRUTEFORCE_MAX_LEN {
        return Err(KernelError::TooLarge {
            pairs,
            max_len: params.max_len(),
        });
    }
    let k = raw(g1, g2, table, params);
    Ok(if params.normalize() {
        cosine(k, raw(g1, g1, table, params), raw(g2, g2, table, params))
    } else {
        k
    })
}
