use std::cell::Cell;
use std::fmt;

use thiserror::Error;

use super::lower::{CompiledProgram, LoweredFunction, Op, Operand, Target};
use super::Type;
use crate::cfg::NodeKind;
use crate::matrix::Matrix;

pub const DEFAULT_STEP_LIMIT: u64 = 20_000_000;
const MAX_CALL_DEPTH: usize = 64;
const MAX_MATRIX_ENTRIES: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Matrix(Matrix),
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Real(_) => Type::Real,
            Value::Bool(_) => Type::Bool,
            Value::Matrix(_) => Type::Matrix,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Matrix(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} arguments, got {actual}")]
    Arity {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("`{name}` argument {index}: expected {expected}, got {actual}")]
    ArgumentType {
        name: String,
        index: usize,
        expected: Type,
        actual: Type,
    },
    #[error("index ({row}, {col}) out of bounds for a {rows}x{cols} matrix")]
    OutOfBounds {
        row: i64,
        col: i64,
        rows: usize,
        cols: usize,
    },
    #[error("integer division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("invalid matrix shape {0}x{1}")]
    BadShape(i64, i64),
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("call depth limit exceeded")]
    DepthLimit,
    #[error("internal type error: {0}")]
    Internal(String),
}

/// Executes lowered functions.
pub struct Interpreter<'p> {
    program: &'p CompiledProgram,
    step_limit: u64,
}

struct Run {
    steps: Cell<u64>,
    limit: u64,
}

fn coerce(v: Value, ty: Type) -> Option<Value> {
    match (v, ty) {
        (Value::Int(i), Type::Real) => Some(Value::Real(i as f64)),
        (v, t) if v.ty() == t => Some(v),
        _ => None,
    }
}

fn finite(v: f64) -> Result<Value, ExecError> {
    if v.is_finite() {
        Ok(Value::Real(v))
    } else {
        Err(ExecError::NonFinite(v))
    }
}

fn internal<T>(what: &str) -> Result<T, ExecError> {
    Err(ExecError::Internal(what.to_string()))
}

fn int_of(v: &Value) -> Result<i64, ExecError> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => internal("expected int"),
    }
}

fn real_of(v: &Value) -> Result<f64, ExecError> {
    v.as_real().map_or_else(|| internal("expected number"), Ok)
}

fn bool_of(v: &Value) -> Result<bool, ExecError> {
    match v {
        Value::Bool(b) => Ok(*b),
        _ => internal("expected bool"),
    }
}

fn binary(kind: NodeKind, a: &Value, b: &Value) -> Result<Value, ExecError> {
    use NodeKind::*;
    if let (Value::Int(x), Value::Int(y)) = (a, b) {
        let (x, y) = (*x, *y);
        let int = |r: Option<i64>| r.map(Value::Int).ok_or(ExecError::Overflow);
        return match kind {
            Add => int(x.checked_add(y)),
            Sub => int(x.checked_sub(y)),
            Mul => int(x.checked_mul(y)),
            Div | Mod if y == 0 => Err(ExecError::DivisionByZero),
            Div => int(x.checked_div(y)),
            Mod => int(x.checked_rem(y)),
            Eq => Ok(Value::Bool(x == y)),
            Neq => Ok(Value::Bool(x != y)),
            Lt => Ok(Value::Bool(x < y)),
            Le => Ok(Value::Bool(x <= y)),
            Gt => Ok(Value::Bool(x > y)),
            Ge => Ok(Value::Bool(x >= y)),
            _ => internal("int operands"),
        };
    }
    if let (Value::Bool(x), Value::Bool(y)) = (a, b) {
        return match kind {
            And => Ok(Value::Bool(*x && *y)),
            Or => Ok(Value::Bool(*x || *y)),
            Eq => Ok(Value::Bool(x == y)),
            Neq => Ok(Value::Bool(x != y)),
            _ => internal("bool operands"),
        };
    }
    let (x, y) = (real_of(a)?, real_of(b)?);
    match kind {
        Add => finite(x + y),
        Sub => finite(x - y),
        Mul => finite(x * y),
        Div => finite(x / y),
        Mod => finite(x % y),
        Eq => Ok(Value::Bool(x == y)),
        Neq => Ok(Value::Bool(x != y)),
        Lt => Ok(Value::Bool(x < y)),
        Le => Ok(Value::Bool(x <= y)),
        Gt => Ok(Value::Bool(x > y)),
        Ge => Ok(Value::Bool(x >= y)),
        _ => internal("real operands"),
    }
}

fn index(m: &Matrix, row: i64, col: i64) -> Result<(usize, usize), ExecError> {
    if row < 0 || col < 0 || row as usize >= m.rows() || col as usize >= m.cols() {
        return Err(ExecError::OutOfBounds {
            row,
            col,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok((row as usize, col as usize))
}

fn call_builtin(name: &str, args: &[Value]) -> Result<Value, ExecError> {
    let matrix = |i: usize| args[i].as_matrix().map_or_else(|| internal("expected matrix"), Ok);
    match name {
        "rows" => Ok(Value::Int(matrix(0)?.rows() as i64)),
        "cols" => Ok(Value::Int(matrix(0)?.cols() as i64)),
        "zeros" => {
            let (r, c) = (int_of(&args[0])?, int_of(&args[1])?);
            if r < 1 || c < 1 || r.saturating_mul(c) > MAX_MATRIX_ENTRIES {
                return Err(ExecError::BadShape(r, c));
            }
            Ok(Value::Matrix(
                Matrix::zeros(r as usize, c as usize).expect("positive shape"),
            ))
        }
        "abs" => finite(real_of(&args[0])?.abs()),
        "sqrt" => finite(real_of(&args[0])?.sqrt()),
        "min" => finite(real_of(&args[0])?.min(real_of(&args[1])?)),
        "max" => finite(real_of(&args[0])?.max(real_of(&args[1])?)),
        "toint" => {
            let v = real_of(&args[0])?.floor();
            if v.is_finite() && v.abs() < 9.0e18 {
                Ok(Value::Int(v as i64))
            } else {
                Err(ExecError::Overflow)
            }
        }
        "toreal" => Ok(Value::Real(real_of(&args[0])?)),
        other => Err(ExecError::UnknownFunction(other.to_string())),
    }
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p CompiledProgram) -> Self {
        Interpreter {
            program,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = limit;
        self
    }

    /// Calls `name` with `args`; ints are accepted for real parameters.
    pub fn call(&self, name: &str, args: Vec<Value>) -> Result<Value, ExecError> {
        let run = Run {
            steps: Cell::new(0),
            limit: self.step_limit,
        };
        self.invoke(name, args, &run, 0)
    }

    fn invoke(&self, name: &str, args: Vec<Value>, run: &Run, depth: usize) -> Result<Value, ExecError> {
        if depth >= MAX_CALL_DEPTH {
            return Err(ExecError::DepthLimit);
        }
        let f = self
            .program
            .function(name)
            .ok_or_else(|| ExecError::UnknownFunction(name.to_string()))?;
        if args.len() != f.params.len() {
            return Err(ExecError::Arity {
                name: name.to_string(),
                expected: f.params.len(),
                actual: args.len(),
            });
        }
        let mut slots = vec![Value::Int(0); f.slot_names.len()];
        for (i, (arg, (_, ty))) in args.into_iter().zip(&f.params).enumerate() {
            let actual = arg.ty();
            slots[i] = coerce(arg, *ty).ok_or_else(|| ExecError::ArgumentType {
                name: name.to_string(),
                index: i,
                expected: *ty,
                actual,
            })?;
        }
        self.execute(f, slots, run, depth)
    }

    fn execute(
        &self,
        f: &LoweredFunction,
        mut slots: Vec<Value>,
        run: &Run,
        depth: usize,
    ) -> Result<Value, ExecError> {
        let mut pc = 0usize;
        loop {
            let steps = run.steps.get() + 1;
            if steps > run.limit {
                return Err(ExecError::StepLimit(run.limit));
            }
            run.steps.set(steps);

            let ins = &f.instrs[pc];
            let read = |o: &Operand, slots: &[Value]| match o {
                Operand::Slot(s) => slots[*s].clone(),
                Operand::Int(v) => Value::Int(*v),
                Operand::Real(v) => Value::Real(*v),
                Operand::Bool(v) => Value::Bool(*v),
            };
            let write = |slots: &mut [Value], dst: usize, v: Value| -> Result<(), ExecError> {
                slots[dst] = match f.slot_types[dst] {
                    Some(t) => coerce(v, t).map_or_else(|| internal("slot type"), Ok)?,
                    None => v,
                };
                Ok(())
            };
            let mut branch_on = None;
            match &ins.op {
                Op::Assign { dst, src } | Op::Const { dst, value: src } => {
                    let v = read(src, &slots);
                    write(&mut slots, *dst, v)?;
                }
                Op::Binary { kind, dst, lhs, rhs } => {
                    let v = binary(*kind, &read(lhs, &slots), &read(rhs, &slots))?;
                    branch_on = Some(*dst);
                    write(&mut slots, *dst, v)?;
                }
                Op::Unary { kind, dst, src } => {
                    let v = match (kind, read(src, &slots)) {
                        (NodeKind::Neg, Value::Int(i)) => {
                            Value::Int(i.checked_neg().ok_or(ExecError::Overflow)?)
                        }
                        (NodeKind::Neg, Value::Real(r)) => Value::Real(-r),
                        (NodeKind::Not, Value::Bool(b)) => Value::Bool(!b),
                        _ => return internal("unary operand"),
                    };
                    branch_on = Some(*dst);
                    write(&mut slots, *dst, v)?;
                }
                Op::IndexLoad { dst, matrix, row, col } => {
                    let (r, c) = (int_of(&read(row, &slots))?, int_of(&read(col, &slots))?);
                    let m = slots[*matrix].as_matrix().map_or_else(|| internal("matrix"), Ok)?;
                    let (r, c) = index(m, r, c)?;
                    let v = Value::Real(m.get(r, c).expect("bounds checked"));
                    write(&mut slots, *dst, v)?;
                }
                Op::IndexStore { matrix, row, col, value } => {
                    let (r, c) = (int_of(&read(row, &slots))?, int_of(&read(col, &slots))?);
                    let v = real_of(&read(value, &slots))?;
                    if !v.is_finite() {
                        return Err(ExecError::NonFinite(v));
                    }
                    let Value::Matrix(m) = &mut slots[*matrix] else {
                        return internal("matrix");
                    };
                    let (r, c) = index(m, r, c)?;
                    m.set(r, c, v);
                }
                Op::Call { dst, callee, builtin, args, .. } => {
                    let args: Vec<Value> = args.iter().map(|a| read(a, &slots)).collect();
                    let v = if *builtin {
                        call_builtin(callee, &args)?
                    } else {
                        self.invoke(callee, args, run, depth + 1)?
                    };
                    if let Some(d) = dst {
                        branch_on = Some(*d);
                        write(&mut slots, *d, v)?;
                    }
                }
                Op::Return { value } => {
                    let v = read(value, &slots);
                    return coerce(v, f.ret).map_or_else(|| internal("return type"), Ok);
                }
            }
            let target = if ins.next.len() == 2 {
                let d = branch_on.map_or_else(|| internal("branch without result"), Ok)?;
                ins.next[if bool_of(&slots[d])? { 0 } else { 1 }]
            } else {
                ins.next[0]
            };
            match target {
                Target::Instr(k) => pc = k,
                Target::Exit => return internal("fell off the end"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{compile, parse_source};

    fn run(text: &str, name: &str, args: Vec<Value>) -> Result<Value, ExecError> {
        let prog = compile(&parse_source(text).unwrap());
        Interpreter::new(&prog).call(name, args)
    }

    const SCALE: &str = "fn scale(m: matrix, k: real): matrix {
  c = zeros(rows(m), cols(m));
  for i = 0 to rows(m) {
    for j = 0 to cols(m) {
      c[i][j] = m[i][j] * k;
    }
  }
  return c;
}";

    #[test]
    fn scales_a_matrix() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let out = run(SCALE, "scale", vec![Value::Matrix(m), Value::Int(2)]).unwrap();
        assert_eq!(
            out,
            Value::Matrix(Matrix::from_rows(&[&[2.0, 4.0], &[6.0, 8.0], &[10.0, 12.0]]))
        );
    }

    #[test]
    fn integer_semantics() {
        let src = "fn f(a: int, b: int): int { return a / b + a % b; }";
        assert_eq!(run(src, "f", vec![Value::Int(7), Value::Int(2)]).unwrap(), Value::Int(4));
        assert_eq!(run(src, "f", vec![Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(-4));
        assert_eq!(
            run(src, "f", vec![Value::Int(1), Value::Int(0)]),
            Err(ExecError::DivisionByZero)
        );
    }

    #[test]
    fn real_slots_promote_ints() {
        let src = "fn f(): real { s = 0.0; s = 5; return s / 2; }";
        assert_eq!(run(src, "f", vec![]).unwrap(), Value::Real(2.5));
        let src = "fn f(x: real): real { return x; }";
        assert_eq!(run(src, "f", vec![Value::Int(3)]).unwrap(), Value::Real(3.0));
    }

    #[test]
    fn faults() {
        let src = "fn f(m: matrix): real { return m[rows(m)][0]; }";
        let m = Value::Matrix(Matrix::from_rows(&[&[1.0]]));
        assert!(matches!(
            run(src, "f", vec![m.clone()]),
            Err(ExecError::OutOfBounds { row: 1, col: 0, .. })
        ));
        let src = "fn f(x: real): real { return x / 0.0; }";
        assert!(matches!(run(src, "f", vec![Value::Real(1.0)]), Err(ExecError::NonFinite(_))));
        let src = "fn f(): int { x = 0; while true { x = x + 0; } return x; }";
        let prog = compile(&parse_source(src).unwrap());
        assert_eq!(
            Interpreter::new(&prog).with_step_limit(1000).call("f", vec![]),
            Err(ExecError::StepLimit(1000))
        );
        let src = "fn f(n: int): int { return f(n); }";
        assert_eq!(run(src, "f", vec![Value::Int(1)]), Err(ExecError::DepthLimit));
        assert!(matches!(
            run("fn f(m: matrix): int { return 1; }", "f", vec![Value::Int(1)]),
            Err(ExecError::ArgumentType { .. })
        ));
        assert!(matches!(
            run("fn f(): int { return 1; }", "g", vec![]),
            Err(ExecError::UnknownFunction(_))
        ));
    }

    #[test]
    fn control_flow_and_builtins() {
        let src = "fn f(x: real): real {
  if x < 0.0 and not (x == -1.0) { return abs(x); }
  else if x > 10.0 || false { return min(x, 10.0); }
  else { return sqrt(x) + toreal(toint(2.7)); }
}";
        assert_eq!(run(src, "f", vec![Value::Real(-3.0)]).unwrap(), Value::Real(3.0));
        assert!(matches!(run(src, "f", vec![Value::Real(-1.0)]), Err(ExecError::NonFinite(_))));
        assert_eq!(run(src, "f", vec![Value::Real(12.0)]).unwrap(), Value::Real(10.0));
        assert_eq!(run(src, "f", vec![Value::Real(4.0)]).unwrap(), Value::Real(4.0));
    }

    #[test]
    fn user_calls_and_call_statements() {
        let src = "fn sq(x: real): real { return x * x; }
fn f(x: real): real { sq(x); y = sq(x) + 1; return y; }";
        assert_eq!(run(src, "f", vec![Value::Real(3.0)]).unwrap(), Value::Real(10.0));
    }
}
