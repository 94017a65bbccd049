//! A small imperative language for matrix functions, lowered to three-address
//! code and then to a [`Cfg`](crate::cfg::Cfg).

mod check;
mod interp;
mod lexer;
mod lower;
mod parser;

use std::fmt;

use thiserror::Error;

pub use interp::{ExecError, Interpreter, Value, DEFAULT_STEP_LIMIT};
pub use lower::{compile, lower_function, lower_to_cfg, CompiledProgram, Instr, LoweredFunction, Op, Operand, Target};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("variable `{0}` may be used before assignment")]
    Unassigned(String),
    #[error("undeclared function `{0}`")]
    UndeclaredFunction(String),
    #[error("function `{0}` defined twice")]
    DuplicateFunction(String),
    #[error("parameter `{0}` declared twice")]
    DuplicateParameter(String),
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("function `{0}` may finish without returning")]
    MissingReturn(String),
    #[error("unreachable statement after return")]
    Unreachable,
    #[error("empty block")]
    EmptyBlock,
    #[error("no function named `{0}`")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {kind}")]
pub struct CompileError {
    pub pos: Pos,
    pub kind: ErrorKind,
}

impl CompileError {
    pub(crate) fn new(pos: Pos, kind: ErrorKind) -> Self {
        CompileError { pos, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Real,
    Bool,
    Matrix,
}

impl Type {
    pub fn as_str(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Real => "real",
            Type::Bool => "bool",
            Type::Matrix => "matrix",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Real)
    }

    /// `int` values may flow into `real` slots.
    pub fn accepts(self, from: Type) -> bool {
        self == from || (self == Type::Real && from == Type::Int)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Real(f64),
    Bool(bool),
    Var(String),
    Index {
        name: String,
        row: Box<Expr>,
        col: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Unary {
        op: UnOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        name: String,
        value: Expr,
        pos: Pos,
    },
    Store {
        name: String,
        row: Expr,
        col: Expr,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Option<Vec<Stmt>>,
        pos: Pos,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        pos: Pos,
    },
    /// `for v = from to upto { .. }` iterates `v` over `from..upto`.
    For {
        var: String,
        from: Expr,
        upto: Expr,
        body: Vec<Stmt>,
        pos: Pos,
    },
    Return {
        value: Expr,
        pos: Pos,
    },
    Call {
        call: Expr,
        pos: Pos,
    },
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::Assign { pos, .. }
            | Stmt::Store { pos, .. }
            | Stmt::If { pos, .. }
            | Stmt::While { pos, .. }
            | Stmt::For { pos, .. }
            | Stmt::Return { pos, .. }
            | Stmt::Call { pos, .. } => *pos,
        }
    }
}

/// `@key value` line preceding a function.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub key: String,
    pub value: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub annotations: Vec<Annotation>,
    /// Local variables with their inferred types, in first-assignment order.
    pub locals: Vec<(String, Type)>,
    pub pos: Pos,
}

impl Function {
    pub fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations
            .iter()
            .find(|a| a.key == key)
            .map(|a| a.value.as_str())
    }
}

/// A parsed and checked source file.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Built-in functions: parameter types and return type.
pub(crate) fn builtin(name: &str) -> Option<(&'static [Type], Type)> {
    use Type::*;
    Some(match name {
        "rows" | "cols" => (&[Matrix], Int),
        "zeros" => (&[Int, Int], Matrix),
        "abs" | "sqrt" => (&[Real], Real),
        "min" | "max" => (&[Real, Real], Real),
        "toint" => (&[Real], Int),
        "toreal" => (&[Int], Real),
        _ => return None,
    })
}

/// Parse and check a source file.
pub fn parse_source(text: &str) -> Result<Program, CompileError> {
    let tokens = lexer::tokenize(text)?;
    let mut program = parser::parse(tokens)?;
    check::check(&mut program)?;
    Ok(program)
}
