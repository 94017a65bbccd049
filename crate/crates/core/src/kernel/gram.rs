use std::fmt::Write as _;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{cosine, damped_sum, walk_counts, KernelError, KernelParams};
use crate::cfg::{Cfg, LabelSimilarityTable, PSD_RELATIVE_TOLERANCE};

/// Symmetric matrix of kernel values over an ordered list of functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    names: Vec<String>,
    values: Vec<f64>,
    params: KernelParams,
    table_digest: String,
}

/// Walk-pair sums for every graph pair, so Gram matrices for many `lambda`
/// values share one pass over the product graphs.
#[derive(Debug, Clone)]
pub struct WalkCountTable {
    names: Vec<String>,
    counts: Vec<Vec<f64>>,
    max_len: usize,
    table_digest: String,
}

impl WalkCountTable {
    pub fn build(
        cfgs: &[Cfg],
        table: &LabelSimilarityTable,
        max_len: usize,
    ) -> Result<Self, KernelError> {
        if cfgs.is_empty() {
            return Err(KernelError::Empty);
        }
        let n = cfgs.len();
        let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        // each entry is computed independently, so the result does not depend on scheduling
        let computed: Vec<Vec<f64>> = upper
            .par_iter()
            .map(|&(i, j)| walk_counts(&cfgs[i], &cfgs[j], table, max_len))
            .collect();
        let mut counts = vec![Vec::new(); n * n];
        for (&(i, j), c) in upper.iter().zip(computed) {
            counts[j * n + i] = c.clone();
            counts[i * n + j] = c;
        }
        Ok(WalkCountTable {
            names: cfgs.iter().map(|c| c.name().to_string()).collect(),
            counts,
            max_len,
            table_digest: table.digest(),
        })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Gram matrix for `params`; `params.max_len()` may not exceed the table's.
    pub fn gram(&self, params: &KernelParams) -> Result<GramMatrix, KernelError> {
        if params.max_len() > self.max_len {
            return Err(KernelError::Params(format!(
                "walk length {} exceeds precomputed length {}",
                params.max_len(),
                self.max_len
            )));
        }
        let n = self.names.len();
        let mut values: Vec<f64> = self
            .counts
            .iter()
            .map(|c| damped_sum(&c[..=params.max_len()], params.lambda()))
            .collect();
        if params.normalize() {
            let diag: Vec<f64> = (0..n).map(|i| values[i * n + i]).collect();
            for i in 0..n {
                for j in 0..n {
                    values[i * n + j] = cosine(values[i * n + j], diag[i], diag[j]);
                }
            }
        }
        let g = GramMatrix {
            names: self.names.clone(),
            values,
            params: *params,
            table_digest: self.table_digest.clone(),
        };
        g.warn_if_not_psd();
        Ok(g)
    }
}

/// Gram matrix of `kernel(cfg_i, cfg_j)` over the list.
pub fn gram(
    cfgs: &[Cfg],
    table: &LabelSimilarityTable,
    params: &KernelParams,
) -> Result<GramMatrix, KernelError> {
    WalkCountTable::build(cfgs, table, params.max_len())?.gram(params)
}

/// [`gram`] on a dedicated pool of `workers` threads.
pub fn gram_with_workers(
    cfgs: &[Cfg],
    table: &LabelSimilarityTable,
    params: &KernelParams,
    workers: usize,
) -> Result<GramMatrix, KernelError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| KernelError::Params(e.to_string()))?;
    pool.install(|| gram(cfgs, table, params))
}

impl GramMatrix {
    pub fn from_parts(
        names: Vec<String>,
        values: Vec<f64>,
        params: KernelParams,
        table_digest: String,
    ) -> Result<Self, KernelError> {
        let n = names.len();
        if n == 0 {
            return Err(KernelError::Empty);
        }
        if values.len() != n * n {
            return Err(KernelError::Params(format!(
                "{} values for {} names",
                values.len(),
                n
            )));
        }
        Ok(GramMatrix {
            names,
            values,
            params,
            table_digest,
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

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn table_digest(&self) -> &str {
        &self.table_digest
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Rows `rows`, columns `cols`, as a dense row-major block.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        let n = self.len();
        let m = DMatrix::from_row_slice(n, n, &self.values);
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen().eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// Valid-kernel check: min eigenvalue >= -1e-8 * max eigenvalue.
    pub fn is_psd(&self) -> bool {
        let (min, max) = self.eigen_range();
        min >= -PSD_RELATIVE_TOLERANCE * max.abs()
    }

    fn warn_if_not_psd(&self) {
        let (min, max) = self.eigen_range();
        if min < -PSD_RELATIVE_TOLERANCE * max.abs() {
            warn!(
                "gram matrix over {} graphs is not positive semidefinite: min eigenvalue {min:e}, max {max:e}",
                self.len()
            );
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "names: {}", self.names.join(","));
        let _ = writeln!(out, "lambda: {}", self.params.lambda());
        let _ = writeln!(out, "L: {}", self.params.max_len());
        let _ = writeln!(out, "normalized: {}", self.params.normalize());
        let _ = writeln!(out, "table_digest: {}", self.table_digest);
        for i in 0..self.len() {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, KernelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<String, KernelError> {
            let (i, line) = lines.next().ok_or(KernelError::Format {
                line: 0,
                message: format!("missing `{key}` header"),
            })?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(':'))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| KernelError::Format {
                    line: i + 1,
                    message: format!("expected `{key}: ...`"),
                })
        };
        let names: Vec<String> = header("names")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let fmt_err = |what: &str| KernelError::Format {
            line: 0,
            message: format!("bad {what}"),
        };
        let lambda: f64 = header("lambda")?.parse().map_err(|_| fmt_err("lambda"))?;
        let max_len: usize = header("L")?.parse().map_err(|_| fmt_err("L"))?;
        let normalize: bool = header("normalized")?
            .parse()
            .map_err(|_| fmt_err("normalized flag"))?;
        let table_digest = header("table_digest")?;
        let params = KernelParams::new(lambda, max_len, normalize)?;

        let n = names.len();
        let mut values = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (i, line) in lines {
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|e| KernelError::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
            if row.len() != n {
                return Err(KernelError::Format {
                    line: i + 1,
                    message: format!("expected {n} values, found {}", row.len()),
                });
            }
            values.extend(row);
            rows += 1;
        }
        if rows != n {
            return Err(KernelError::Format {
                line: 0,
                message: format!("expected {n} rows, found {rows}"),
            });
        }
        GramMatrix::from_parts(names, values, params, table_digest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{default_similarity_table, parse_graph_file};

    fn g(name: &str, body: &str) -> Cfg {
        parse_graph_file(&format!(
            "digraph {name} {{ s [label=start]; e [label=exit]; {body} }}"
        ))
        .unwrap()
    }

    fn sample() -> Vec<Cfg> {
        vec![
            g("a", "x [label=add]; s -> x; x -> e;"),
            g(
                "b",
                "x [label=sub]; y [label=mul]; s -> x; x -> y; y -> e; y -> x;",
            ),
            g("c", "s -> e;"),
        ]
    }

    #[test]
    fn single_graph_lower_bound() {
        let cfgs = vec![sample().remove(1)];
        let gm = gram(&cfgs, &default_similarity_table(), &KernelParams::default()).unwrap();
        assert_eq!(gm.len(), 1);
        assert!(gm.get(0, 0) >= cfgs[0].len() as f64);
    }

    #[test]
    fn duplicate_rows_match() {
        let mut cfgs = sample();
        cfgs.push(cfgs[1].clone());
        let gm = gram(&cfgs, &default_similarity_table(), &KernelParams::default()).unwrap();
        assert_eq!(gm.row(1), gm.row(3));
        assert!(gm.is_psd());
        assert_eq!(gm.max_asymmetry(), 0.0);
    }

    #[test]
    fn normalized_gram_has_unit_diagonal() {
        let p = KernelParams::new(0.5, 6, true).unwrap();
        let gm = gram(&sample(), &default_similarity_table(), &p).unwrap();
        for i in 0..gm.len() {
            assert!((gm.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip() {
        let gm = gram(
            &sample(),
            &default_similarity_table(),
            &KernelParams::default(),
        )
        .unwrap();
        let back = GramMatrix::from_text(&gm.to_text()).unwrap();
        assert_eq!(back, gm);
    }

    #[test]
    fn text_errors() {
        assert!(GramMatrix::from_text("").is_err());
        let gm = gram(
            &sample(),
            &default_similarity_table(),
            &KernelParams::default(),
        )
        .unwrap();
        let text = gm.to_text();
        let truncated: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            GramMatrix::from_text(&truncated),
            Err(KernelError::Format { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_values() {
        let t = default_similarity_table();
        let p = KernelParams::default();
        let one = gram_with_workers(&sample(), &t, &p, 1).unwrap();
        let four = gram_with_workers(&sample(), &t, &p, 4).unwrap();
        assert_eq!(one, four);
    }
}
