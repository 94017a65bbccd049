//! Soft-margin SVM on precomputed kernel values.
//!
//! The dual is solved by sequential minimal optimization with first-order
//! maximal-violating-pair working set selection.

use std::fmt::Write as _;

use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 100;
const ETA_FLOOR: f64 = 1e-12;
const MAX_UPDATES: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("kernel matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{labels} labels for a {size}x{size} kernel matrix")]
    LabelCount { labels: usize, size: usize },
    #[error("label {0} is not +1 or -1")]
    BadLabel(i8),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("kernel row {row} has {actual} columns, model was trained on {expected}")]
    Dimension {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    c: f64,
    tolerance: f64,
    max_passes: usize,
}

impl SvmParams {
    pub fn new(c: f64, tolerance: f64, max_passes: usize) -> Result<Self, SvmError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(SvmError::Params(format!("C must be positive, got {c}")));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(SvmError::Params(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if max_passes == 0 {
            return Err(SvmError::Params("max passes must be at least 1".into()));
        }
        Ok(SvmParams {
            c,
            tolerance,
            max_passes,
        })
    }

    pub fn with_c(c: f64) -> Result<Self, SvmError> {
        SvmParams::new(c, DEFAULT_TOLERANCE, DEFAULT_MAX_PASSES)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_passes(&self) -> usize {
        self.max_passes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportVector {
    pub index: usize,
    pub y: i8,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    n_train: usize,
    support: Vec<SupportVector>,
    bias: f64,
    params: SvmParams,
}

fn check_labels(labels: &[i8]) -> Result<(), SvmError> {
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(SvmError::BadLabel(bad));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

/// Dual objective `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], labels: &[i8], gram: &[Vec<f64>]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * (labels[i] * labels[j]) as f64 * gram[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Trains on a square kernel block and ±1 labels.
pub fn train(gram: &[Vec<f64>], labels: &[i8], params: &SvmParams) -> Result<SvmModel, SvmError> {
    let n = gram.len();
    if let Some(row) = gram.iter().find(|r| r.len() != n) {
        return Err(SvmError::NotSquare {
            rows: n,
            cols: row.len(),
        });
    }
    if labels.len() != n {
        return Err(SvmError::LabelCount {
            labels: labels.len(),
            size: n,
        });
    }
    check_labels(labels)?;

    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - sum(a)
    let mut grad = vec![-1.0; n];

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    // W = sum(a) - 1/2 a'Qa = -1/2 sum a_i (G_i - 1) with G = Qa - 1
    let objective = |alpha: &[f64], grad: &[f64]| -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    let mut last_objective = 0.0;
    let mut stalled = 0usize;
    for update in 0..MAX_UPDATES {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        let gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < params.tolerance {
            break;
        }
        if update > 0 && update % n == 0 {
            let w = objective(&alpha, &grad);
            if w - last_objective <= 1e-15 * w.abs().max(1.0) {
                stalled += 1;
                if stalled >= params.max_passes {
                    break;
                }
            } else {
                stalled = 0;
            }
            last_objective = w;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let eta = (gram[i][i] + gram[j][j] - 2.0 * gram[i][j]).max(ETA_FLOOR);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / eta;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / eta;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di == 0.0 && dj == 0.0 {
            break;
        }
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let bias = bias_from_gradient(&alpha, &y, &grad, c);
    let support = (0..n)
        .filter(|&i| alpha[i] > 0.0)
        .map(|i| SupportVector {
            index: i,
            y: labels[i],
            alpha: alpha[i],
        })
        .collect();
    Ok(SvmModel {
        n_train: n,
        support,
        bias,
        params: *params,
    })
}

/// Mean of `y_i - sum_j a_j y_j K_ij` over free vectors, or the midpoint of
/// the interval allowed by bound vectors when none are free.
fn bias_from_gradient(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

impl SvmModel {
    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn params(&self) -> &SvmParams {
        &self.params
    }

    pub fn support(&self) -> &[SupportVector] {
        &self.support
    }

    pub fn support_indices(&self) -> Vec<usize> {
        self.support.iter().map(|s| s.index).collect()
    }

    /// Dual coefficient per training instance, zero off the support set.
    pub fn alphas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for s in &self.support {
            a[s.index] = s.alpha;
        }
        a
    }

    /// `f_i = sum_j a_j y_j K(test_i, train_j) + bias` for each cross-kernel row.
    pub fn decision_values(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, SvmError> {
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                if row.len() != self.n_train {
                    return Err(SvmError::Dimension {
                        row: r,
                        expected: self.n_train,
                        actual: row.len(),
                    });
                }
                Ok(self
                    .support
                    .iter()
                    .map(|s| s.alpha * s.y as f64 * row[s.index])
                    .sum::<f64>()
                    + self.bias)
            })
            .collect()
    }

    /// Text form: `C`, `bias` and `n_train` headers, then `index y alpha` per support vector.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "C: {}", self.params.c);
        let _ = writeln!(out, "tolerance: {}", self.params.tolerance);
        let _ = writeln!(out, "bias: {}", self.bias);
        let _ = writeln!(out, "n_train: {}", self.n_train);
        for s in &self.support {
            let _ = writeln!(out, "{} {} {}", s.index, s.y, s.alpha);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SvmError> {
        let err = |line: usize, message: String| SvmError::Format { line, message };
        let mut c = None;
        let mut tolerance = DEFAULT_TOLERANCE;
        let mut bias = None;
        let mut n_train = None;
        let mut support = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = l.split_once(':') {
                let value = value.trim();
                let num = |v: &str| v.parse::<f64>().map_err(|e| err(line, e.to_string()));
                match key.trim() {
                    "C" => c = Some(num(value)?),
                    "tolerance" => tolerance = num(value)?,
                    "bias" => bias = Some(num(value)?),
                    "n_train" => {
                        n_train = Some(value.parse::<usize>().map_err(|e| err(line, e.to_string()))?)
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(line, format!("expected `index y alpha`, got {l:?}")));
            }
            let index = f[0].parse::<usize>().map_err(|e| err(line, e.to_string()))?;
            let y = f[1].parse::<i8>().map_err(|e| err(line, e.to_string()))?;
            let alpha = f[2].parse::<f64>().map_err(|e| err(line, e.to_string()))?;
            if y != 1 && y != -1 {
                return Err(err(line, format!("label {y} is not +1 or -1")));
            }
            support.push(SupportVector { index, y, alpha });
        }
        let c = c.ok_or_else(|| err(0, "missing `C` header".into()))?;
        let bias = bias.ok_or_else(|| err(0, "missing `bias` header".into()))?;
        let n_train = n_train.ok_or_else(|| err(0, "missing `n_train` header".into()))?;
        if let Some(s) = support.iter().find(|s| s.index >= n_train || !(0.0..=c).contains(&s.alpha)) {
            return Err(err(
                0,
                format!("support vector {} outside the training set or box", s.index),
            ));
        }
        Ok(SvmModel {
            n_train,
            support,
            bias,
            params: SvmParams::new(c, tolerance, DEFAULT_MAX_PASSES)?,
        })
    }
}

/// `sign(f)` with `sign(0) = +1`.
pub fn predict(values: &[f64]) -> Vec<i8> {
    values.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn two_point_identity() {
        // With a1 = a2 = a forced by the equality constraint, W(a) = 2a - a^2
        // peaks at a = 1, which is inside [0, C] for C = 1.
        let m = train(&eye(2), &[1, -1], &SvmParams::with_c(1.0).unwrap()).unwrap();
        let a = m.alphas();
        assert!((a[0] - 1.0).abs() < 1e-9 && (a[1] - 1.0).abs() < 1e-9);
        assert!(m.bias().abs() < 1e-9);
        let d = m.decision_values(&eye(2)).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-9 && (d[1] + 1.0).abs() < 1e-9);
        assert_eq!(predict(&d), vec![1, -1]);
    }

    #[test]
    fn conflicting_duplicates_hit_the_bound() {
        // K = all ones: W(a) = 2a with a1 = a2 = a, so both go to C.
        let k = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let m = train(&k, &[1, -1], &SvmParams::with_c(0.1).unwrap()).unwrap();
        for a in m.alphas() {
            assert!((a - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_one_hot_fits_training_set() {
        let k = eye(4);
        let y = [1, 1, -1, -1];
        let m = train(&k, &y, &SvmParams::with_c(1000.0).unwrap()).unwrap();
        assert_eq!(predict(&m.decision_values(&k).unwrap()), y.to_vec());
    }

    #[test]
    fn zero_row_gives_bias_and_sign_of_zero_is_positive() {
        let m = train(&eye(2), &[1, -1], &SvmParams::with_c(1.0).unwrap()).unwrap();
        let d = m.decision_values(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(d, vec![m.bias()]);
        assert_eq!(predict(&[0.0, -0.0, -1e-300]), vec![1, 1, -1]);
    }

    #[test]
    fn input_errors() {
        let p = SvmParams::with_c(1.0).unwrap();
        assert_eq!(train(&eye(2), &[1, 1], &p), Err(SvmError::SingleClass));
        assert!(matches!(
            train(&[vec![1.0, 0.0], vec![0.0]], &[1, -1], &p),
            Err(SvmError::NotSquare { .. })
        ));
        assert!(matches!(train(&eye(2), &[1, 0], &p), Err(SvmError::BadLabel(0))));
        assert!(SvmParams::with_c(0.0).is_err());
        assert!(SvmParams::new(1.0, 0.0, 10).is_err());
        let m = train(&eye(2), &[1, -1], &p).unwrap();
        assert!(matches!(
            m.decision_values(&[vec![1.0]]),
            Err(SvmError::Dimension { expected: 2, actual: 1, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let k = vec![
            vec![2.0, 1.0, 0.5],
            vec![1.0, 2.0, 0.2],
            vec![0.5, 0.2, 1.0],
        ];
        let m = train(&k, &[1, -1, 1], &SvmParams::with_c(10.0).unwrap()).unwrap();
        let back = SvmModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(SvmModel::from_text("C: 1\nbias: 0\n").is_err());
        assert!(SvmModel::from_text("C: 1\nbias: 0\nn_train: 1\n3 1 0.5\n").is_err());
    }
}
