#![allow(dead_code)]

use mrkernel::cfg::{Cfg, NodeLabel};
use mrkernel::svm::dual_objective;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 10] = [
    "add", "sub", "mul", "div", "lt", "gt", "assign", "index_load", "call:matrix", "call:int",
];

/// Random valid CFG with at most `max_nodes` nodes (start and exit included).
/// A spanning path start -> internals -> exit keeps every invariant; extra
/// random edges add branching and loops.
pub fn random_cfg(rng: &mut ChaCha8Rng, name: &str, max_nodes: usize) -> Cfg {
    let internal = rng.random_range(0..=max_nodes - 2);
    let mut nodes = vec![
        ("s".to_string(), "start".parse::<NodeLabel>().unwrap()),
        ("e".to_string(), "exit".parse().unwrap()),
    ];
    for i in 0..internal {
        let label = POOL[rng.random_range(0..POOL.len())];
        nodes.push((format!("v{i}"), label.parse().unwrap()));
    }
    let mut order: Vec<String> = (0..internal).map(|i| format!("v{i}")).collect();
    order.shuffle(rng);
    let mut chain = vec!["s".to_string()];
    chain.extend(order);
    chain.push("e".to_string());
    let mut edges: Vec<(String, String)> = chain.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    let ids: Vec<String> = nodes.iter().map(|(id, _)| id.clone()).collect();
    for _ in 0..rng.random_range(0..=internal + 1) {
        let a = ids[rng.random_range(0..ids.len())].clone();
        let b = ids[rng.random_range(0..ids.len())].clone();
        if a != "e" && !edges.contains(&(a.clone(), b.clone())) {
            edges.push((a, b));
        }
    }
    Cfg::new(name, nodes, edges).unwrap()
}

/// Fifty seeded random pairs of graphs with at most six nodes each.
pub fn random_pairs() -> Vec<(Cfg, Cfg)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..50)
        .map(|i| {
            (
                random_cfg(&mut rng, &format!("a{i}"), 6),
                random_cfg(&mut rng, &format!("b{i}"), 6),
            )
        })
        .collect()
}

/// Closed form at lambda = 0 or L = 0: sum of label similarities over all node pairs.
pub fn node_pair_sum(g1: &Cfg, g2: &Cfg, table: &mrkernel::cfg::LabelSimilarityTable) -> f64 {
    let mut s = 0.0;
    for a in g1.labels() {
        for b in g2.labels() {
            s += table.score(*a, *b);
        }
    }
    s
}

/// Mann-Whitney form: sum of positive ranks among all scores, with ties
/// given their average rank.
pub fn rank_sum_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += all[i..=j].iter().filter(|(_, p)| *p).count() as f64 * avg;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Maximum of the dual over the feasible box by enumerating which variables
/// sit at 0, at C, or are free, and solving the equality-constrained
/// stationarity system of each face.
pub fn bruteforce_dual(k: &[Vec<f64>], y: &[i8], c: f64) -> f64 {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[i][j];
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut x = code;
        for s in state.iter_mut() {
            *s = (x % 3) as u8;
            x /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut b = DVector::<f64>::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q(i, j);
                }
                a[(r, m)] = yf[i];
                a[(m, r)] = yf[i];
                let bound: f64 = (0..n).filter(|j| state[*j] != 2).map(|j| q(i, j) * alpha[j]).sum();
                b[r] = 1.0 - bound;
            }
            b[m] = -(0..n).filter(|j| state[*j] != 2).map(|j| yf[j] * alpha[j]).sum::<f64>();
            let svd = a.clone().svd(true, true);
            let Ok(sol) = svd.solve(&b, 1e-12) else { continue };
            if (&a * &sol - &b).norm() > 1e-9 * b.norm().max(1.0) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let slack = 1e-9 * c.max(1.0);
        let feasible = alpha.iter().all(|&a| (-slack..=c + slack).contains(&a))
            && alpha.iter().zip(&yf).map(|(a, y)| a * y).sum::<f64>().abs() < slack;
        if feasible {
            best = best.max(dual_objective(&alpha, y, k));
        }
    }
    best
}

pub fn random_svm_problem(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<i8>) {
    let n = 4;
    let rank = rng.random_range(1..=4);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let k = (0..n)
        .map(|i| (0..n).map(|j| (0..rank).map(|t| a[i][t] * a[j][t]).sum()).collect())
        .collect();
    let mut y: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    y[0] = 1;
    y[1] = -1;
    (k, y)
}
