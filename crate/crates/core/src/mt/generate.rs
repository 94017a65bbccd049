use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::subject::{ParamKind, ShapeRule, Signature};
use super::{Arg, MetamorphicRelation, MtConfig, MtError};
use crate::matrix::Matrix;

/// A case that cannot be built for this input, e.g. a row permutation of a
/// single-row matrix. Skipped cases do not count as passes or failures.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip(pub String);

/// Source and follow-up inputs for one relation and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MrCase {
    pub relation: MetamorphicRelation,
    pub seed: u64,
    pub source: Vec<Arg>,
    pub follow_up: Vec<Arg>,
    /// Per matrix argument, the row-major entry indices touched by a subset transform.
    pub subset: Option<Vec<Vec<usize>>>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, config: &MtConfig) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(config.min_value..=config.max_value))
        .collect();
    Matrix::new(rows, cols, data).expect("positive shape and finite entries")
}

/// Random inputs conforming to `sig`, deterministic per seed.
pub fn generate_source_input(sig: &Signature, seed: u64, config: &MtConfig) -> Result<Vec<Arg>, MtError> {
    config.validate()?;
    let n_mat = sig.params.iter().filter(|p| **p == ParamKind::Matrix).count();
    if n_mat == 0 {
        return Err(MtError::Unconstructible(
            "no matrix parameter to transform".to_string(),
        ));
    }
    let mut rng = rng_for(seed, 0);
    let dim = |rng: &mut ChaCha8Rng| rng.random_range(config.min_dim..=config.max_dim);
    let shapes: Vec<(usize, usize)> = match sig.shape {
        ShapeRule::Same => {
            let (r, c) = (dim(&mut rng), dim(&mut rng));
            vec![(r, c); n_mat]
        }
        ShapeRule::Square => {
            let n = dim(&mut rng);
            vec![(n, n); n_mat]
        }
        ShapeRule::Chain => {
            let dims: Vec<usize> = (0..=n_mat).map(|_| dim(&mut rng)).collect();
            dims.windows(2).map(|w| (w[0], w[1])).collect()
        }
        ShapeRule::Any => (0..n_mat).map(|_| (dim(&mut rng), dim(&mut rng))).collect(),
    };
    let min_dim = shapes.iter().map(|&(r, c)| r.min(c)).min().expect("at least one matrix");
    let mut shapes = shapes.into_iter();
    Ok(sig
        .params
        .iter()
        .map(|p| match p {
            ParamKind::Matrix => {
                let (r, c) = shapes.next().expect("one shape per matrix");
                Arg::Matrix(random_matrix(&mut rng, r, c, config))
            }
            ParamKind::Int => Arg::Int(rng.random_range(0..min_dim) as i64),
            ParamKind::Real => Arg::Real(rng.random_range(config.min_value..=config.max_value)),
        })
        .collect())
}

fn non_identity_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        p.shuffle(rng);
        if p.iter().enumerate().any(|(i, &v)| i != v) {
            return p;
        }
    }
}

fn proper_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() && s.len() < n {
            return s;
        }
    }
}

fn transform_matrix(
    relation: MetamorphicRelation,
    m: &Matrix,
    rng: &mut ChaCha8Rng,
    config: &MtConfig,
) -> Result<(Matrix, Option<Vec<usize>>), Skip> {
    use MetamorphicRelation::*;
    let (rows, cols) = m.shape();
    let data = m.data();
    let build = |d: Vec<f64>| Matrix::new(rows, cols, d).map_err(|e| Skip(e.to_string()));
    match relation {
        PermuteAll => {
            if data.len() < 2 {
                return Err(Skip("single entry cannot be permuted".into()));
            }
            let p = non_identity_permutation(rng, data.len());
            Ok((build(p.iter().map(|&i| data[i]).collect())?, None))
        }
        PermuteRows => {
            if rows < 2 {
                return Err(Skip("single row cannot be permuted".into()));
            }
            let p = non_identity_permutation(rng, rows);
            let d = p
                .iter()
                .flat_map(|&r| data[r * cols..(r + 1) * cols].iter().copied())
                .collect();
            Ok((build(d)?, None))
        }
        PermuteColumns => {
            if cols < 2 {
                return Err(Skip("single column cannot be permuted".into()));
            }
            let p = non_identity_permutation(rng, cols);
            let d = (0..rows)
                .flat_map(|r| p.iter().map(move |&c| data[r * cols + c]))
                .collect();
            Ok((build(d)?, None))
        }
        AddScalar => Ok((build(data.iter().map(|v| v + config.addend).collect())?, None)),
        AddMatrix => {
            let d = data
                .iter()
                .map(|v| v + rng.random_range(config.min_value..=config.max_value))
                .collect();
            Ok((build(d)?, None))
        }
        MulScalar => Ok((build(data.iter().map(|v| v * config.factor).collect())?, None)),
        AddSubset | MulSubset => {
            if data.len() < 2 {
                return Err(Skip("single entry has no proper subset".into()));
            }
            let subset = proper_subset(rng, data.len());
            let mut d = data.to_vec();
            for &i in &subset {
                d[i] = if relation == AddSubset {
                    d[i] + config.addend
                } else {
                    d[i] * config.factor
                };
            }
            Ok((build(d)?, Some(subset)))
        }
    }
}

/// Follow-up inputs: the transform applied independently to every matrix
/// argument; scalar arguments are kept.
pub fn apply_transform(
    relation: MetamorphicRelation,
    inputs: &[Arg],
    seed: u64,
    config: &MtConfig,
) -> Result<(Vec<Arg>, Option<Vec<Vec<usize>>>), Skip> {
    let stream = 1 + MetamorphicRelation::ALL
        .iter()
        .position(|r| *r == relation)
        .expect("listed relation") as u64;
    let mut rng = rng_for(seed, stream);
    let mut subsets = Vec::new();
    let mut out = Vec::with_capacity(inputs.len());
    for a in inputs {
        match a {
            Arg::Matrix(m) => {
                let (t, subset) = transform_matrix(relation, m, &mut rng, config)?;
                if &t == m {
                    return Err(Skip("transform left the input unchanged".into()));
                }
                subsets.extend(subset.map(|s| vec![s]).unwrap_or_default());
                out.push(Arg::Matrix(t));
            }
            other => out.push(other.clone()),
        }
    }
    let subset = (!subsets.is_empty()).then_some(subsets);
    Ok((out, subset))
}

/// Builds the case for `relation` at `seed`. The source input depends only on
/// the seed, so every relation at one seed shares it.
pub fn make_case(
    sig: &Signature,
    relation: MetamorphicRelation,
    seed: u64,
    config: &MtConfig,
) -> Result<Result<MrCase, Skip>, MtError> {
    let source = generate_source_input(sig, seed, config)?;
    Ok(apply_transform(relation, &source, seed, config).map(|(follow_up, subset)| MrCase {
        relation,
        seed,
        source,
        follow_up,
        subset,
    }))
}
