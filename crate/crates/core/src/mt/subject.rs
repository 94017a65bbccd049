use std::sync::Arc;

use super::{Arg, Category, MtError};
use crate::matrix::Matrix;
use crate::minilang::{compile, CompiledProgram, Interpreter, Program, Type, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Matrix,
    Int,
    Real,
}

/// How the dimensions of matrix arguments relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeRule {
    /// All matrices share one shape.
    Same,
    /// Matrix `i` is `d_i x d_{i+1}`.
    Chain,
    /// All matrices are `n x n`.
    Square,
    /// Independent shapes.
    Any,
}

impl std::str::FromStr for ShapeRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same" => Ok(ShapeRule::Same),
            "chain" => Ok(ShapeRule::Chain),
            "square" => Ok(ShapeRule::Square),
            "any" => Ok(ShapeRule::Any),
            other => Err(format!("unknown shape rule {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub params: Vec<ParamKind>,
    pub shape: ShapeRule,
}

/// A function under test: pure, matrix-valued.
pub trait Subject: Send + Sync {
    fn name(&self) -> &str;
    fn signature(&self) -> &Signature;
    fn run(&self, args: &[Arg]) -> Result<Matrix, String>;
}

type NativeFn = fn(&[Arg]) -> Result<Matrix, String>;

/// A subject implemented in Rust.
#[derive(Clone)]
pub struct NativeSubject {
    name: &'static str,
    signature: Signature,
    f: NativeFn,
    /// Expected label per category, in [`Category::ALL`] order.
    pub expected: [bool; 3],
}

impl std::fmt::Debug for NativeSubject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NativeSubject").field("name", &self.name).finish()
    }
}

impl NativeSubject {
    pub fn expected(&self, c: Category) -> bool {
        self.expected[c.index()]
    }
}

impl Subject for NativeSubject {
    fn name(&self) -> &str {
        self.name
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn run(&self, args: &[Arg]) -> Result<Matrix, String> {
        (self.f)(args)
    }
}

fn mat(args: &[Arg], i: usize) -> Result<&Matrix, String> {
    args.get(i)
        .and_then(Arg::as_matrix)
        .ok_or_else(|| format!("argument {i} is not a matrix"))
}

fn real(args: &[Arg], i: usize) -> Result<f64, String> {
    match args.get(i) {
        Some(Arg::Real(v)) => Ok(*v),
        Some(Arg::Int(v)) => Ok(*v as f64),
        _ => Err(format!("argument {i} is not a number")),
    }
}

fn int(args: &[Arg], i: usize) -> Result<usize, String> {
    match args.get(i) {
        Some(Arg::Int(v)) if *v >= 0 => Ok(*v as usize),
        _ => Err(format!("argument {i} is not an index")),
    }
}

fn at(m: &Matrix, r: usize, c: usize) -> Result<f64, String> {
    m.get(r, c)
        .ok_or_else(|| format!("index ({r}, {c}) out of bounds for {}x{}", m.rows(), m.cols()))
}

fn build(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Result<f64, String>) -> Result<Matrix, String> {
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            data.push(f(r, c)?);
        }
    }
    Matrix::new(rows, cols, data).map_err(|e| e.to_string())
}

fn elementwise(args: &[Arg], op: fn(f64, f64) -> f64) -> Result<Matrix, String> {
    let (a, b) = (mat(args, 0)?, mat(args, 1)?);
    build(a.rows(), a.cols(), |r, c| Ok(op(at(a, r, c)?, at(b, r, c)?)))
}

fn multiply_with_bound(args: &[Arg], extra: usize) -> Result<Matrix, String> {
    let (a, b) = (mat(args, 0)?, mat(args, 1)?);
    build(a.rows(), b.cols(), |r, c| {
        let mut s = 0.0;
        for k in 0..a.cols() + extra {
            s += at(a, r, k)? * at(b, k, c)?;
        }
        Ok(s)
    })
}

fn add(args: &[Arg]) -> Result<Matrix, String> {
    elementwise(args, |x, y| x + y)
}

fn subtract(args: &[Arg]) -> Result<Matrix, String> {
    elementwise(args, |x, y| x - y)
}

fn hadamard(args: &[Arg]) -> Result<Matrix, String> {
    elementwise(args, |x, y| x * y)
}

fn multiply(args: &[Arg]) -> Result<Matrix, String> {
    multiply_with_bound(args, 0)
}

fn scalar_multiply(args: &[Arg]) -> Result<Matrix, String> {
    let (m, k) = (mat(args, 0)?, real(args, 1)?);
    Ok(m.map(|v| v * k))
}

fn transpose(args: &[Arg]) -> Result<Matrix, String> {
    let m = mat(args, 0)?;
    build(m.cols(), m.rows(), |r, c| at(m, c, r))
}

fn get_row(args: &[Arg]) -> Result<Matrix, String> {
    let (m, i) = (mat(args, 0)?, int(args, 1)?);
    build(1, m.cols(), |_, c| at(m, i, c))
}

fn get_column(args: &[Arg]) -> Result<Matrix, String> {
    let (m, j) = (mat(args, 0)?, int(args, 1)?);
    build(m.rows(), 1, |r, _| at(m, r, j))
}

fn trace(args: &[Arg]) -> Result<Matrix, String> {
    let m = mat(args, 0)?;
    let mut s = 0.0;
    for i in 0..m.rows() {
        s += at(m, i, i)?;
    }
    build(1, 1, |_, _| Ok(s))
}

fn copy(args: &[Arg]) -> Result<Matrix, String> {
    Ok(mat(args, 0)?.clone())
}

fn fault_multiply_bound(args: &[Arg]) -> Result<Matrix, String> {
    multiply_with_bound(args, 1)
}

fn fault_add_as_subtract(args: &[Arg]) -> Result<Matrix, String> {
    subtract(args)
}

fn fault_scale_inverse(args: &[Arg]) -> Result<Matrix, String> {
    let (m, k) = (mat(args, 0)?, real(args, 1)?);
    Ok(m.map(|v| k / v))
}

fn fault_copy_reflect(args: &[Arg]) -> Result<Matrix, String> {
    Ok(mat(args, 0)?.map(|v| 10.0 - v))
}

fn fault_shape_flip(args: &[Arg]) -> Result<Matrix, String> {
    let m = mat(args, 0)?;
    let last = at(m, m.rows() - 1, m.cols() - 1)?;
    if at(m, 0, 0)? > last {
        transpose(args)
    } else {
        copy(args)
    }
}

fn fault_hadamard_transposed(args: &[Arg]) -> Result<Matrix, String> {
    let (a, b) = (mat(args, 0)?, mat(args, 1)?);
    build(a.rows(), a.cols(), |r, c| Ok(at(a, r, c)? * at(b, c, r)?))
}

fn native(
    name: &'static str,
    params: &[ParamKind],
    shape: ShapeRule,
    f: NativeFn,
    expected: [bool; 3],
) -> NativeSubject {
    NativeSubject {
        name,
        signature: Signature {
            params: params.to_vec(),
            shape,
        },
        f,
        expected,
    }
}

use ParamKind::{Int as I, Matrix as M, Real as R};

/// Built-in reference implementations and the labels they should earn.
pub fn reference_subjects() -> Vec<NativeSubject> {
    let all = [true; 3];
    vec![
        native("add", &[M, M], ShapeRule::Same, add, all),
        native("subtract", &[M, M], ShapeRule::Same, subtract, [true, false, false]),
        native("multiply", &[M, M], ShapeRule::Chain, multiply, all),
        native("scalar_multiply", &[M, R], ShapeRule::Same, scalar_multiply, all),
        native("transpose", &[M], ShapeRule::Same, transpose, all),
        native("get_row", &[M, I], ShapeRule::Same, get_row, all),
        native("get_column", &[M, I], ShapeRule::Same, get_column, all),
        native("hadamard", &[M, M], ShapeRule::Same, hadamard, all),
        native("trace", &[M], ShapeRule::Square, trace, all),
        native("copy", &[M], ShapeRule::Same, copy, all),
    ]
}

/// Injected-fault variants of reference subjects. `expected` holds the labels
/// of the reference each one mutates.
pub fn fault_subjects() -> Vec<NativeSubject> {
    let all = [true; 3];
    vec![
        native("multiply_inner_bound", &[M, M], ShapeRule::Chain, fault_multiply_bound, all),
        native("add_as_subtract", &[M, M], ShapeRule::Same, fault_add_as_subtract, all),
        native("scale_inverse", &[M, R], ShapeRule::Same, fault_scale_inverse, all),
        native("copy_reflect", &[M], ShapeRule::Same, fault_copy_reflect, all),
        native("shape_flip", &[M], ShapeRule::Same, fault_shape_flip, all),
        native("hadamard_transposed", &[M, M], ShapeRule::Same, fault_hadamard_transposed, all),
    ]
}

/// A mini-language function run by the interpreter. Scalar results become 1x1
/// matrices; booleans become 1 or 0.
#[derive(Clone)]
pub struct MiniSubject {
    name: String,
    signature: Signature,
    program: Arc<CompiledProgram>,
}

impl Subject for MiniSubject {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn run(&self, args: &[Arg]) -> Result<Matrix, String> {
        let values = args
            .iter()
            .map(|a| match a {
                Arg::Matrix(m) => Value::Matrix(m.clone()),
                Arg::Int(v) => Value::Int(*v),
                Arg::Real(v) => Value::Real(*v),
            })
            .collect();
        let out = Interpreter::new(&self.program)
            .call(&self.name, values)
            .map_err(|e| e.to_string())?;
        let scalar = |v: f64| Matrix::new(1, 1, vec![v]).map_err(|e| e.to_string());
        match out {
            Value::Matrix(m) => Ok(m),
            Value::Int(v) => scalar(v as f64),
            Value::Real(v) => scalar(v),
            Value::Bool(b) => scalar(if b { 1.0 } else { 0.0 }),
        }
    }
}

/// One subject per function of `program`, with the shape rule taken from an
/// `@shape` annotation (default `same`).
pub fn mini_subjects(program: &Program) -> Result<Vec<MiniSubject>, MtError> {
    let compiled = Arc::new(compile(program));
    program
        .functions
        .iter()
        .map(|f| {
            let params = f
                .params
                .iter()
                .map(|(p, t)| match t {
                    Type::Matrix => Ok(ParamKind::Matrix),
                    Type::Int => Ok(ParamKind::Int),
                    Type::Real => Ok(ParamKind::Real),
                    Type::Bool => Err(MtError::Unconstructible(format!(
                        "`{}` parameter `{p}` is bool",
                        f.name
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let shape = match f.annotation("shape") {
                Some(s) => s
                    .parse()
                    .map_err(|e: String| MtError::Unconstructible(format!("`{}`: {e}", f.name)))?,
                None => ShapeRule::Same,
            };
            Ok(MiniSubject {
                name: f.name.clone(),
                signature: Signature { params, shape },
                program: Arc::clone(&compiled),
            })
        })
        .collect()
}
