use std::fmt;
use std::str::FromStr;

use super::CfgError;

/// Operation kind carried by a CFG node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Start,
    Exit,
    Assign,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    IndexLoad,
    IndexStore,
    Param,
    Return,
    Call,
}

impl NodeKind {
    pub const ALL: [NodeKind; 24] = [
        NodeKind::Start,
        NodeKind::Exit,
        NodeKind::Assign,
        NodeKind::Const,
        NodeKind::Add,
        NodeKind::Sub,
        NodeKind::Mul,
        NodeKind::Div,
        NodeKind::Mod,
        NodeKind::Neg,
        NodeKind::Eq,
        NodeKind::Neq,
        NodeKind::Lt,
        NodeKind::Le,
        NodeKind::Gt,
        NodeKind::Ge,
        NodeKind::And,
        NodeKind::Or,
        NodeKind::Not,
        NodeKind::IndexLoad,
        NodeKind::IndexStore,
        NodeKind::Param,
        NodeKind::Return,
        NodeKind::Call,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Start => "start",
            NodeKind::Exit => "exit",
            NodeKind::Assign => "assign",
            NodeKind::Const => "const",
            NodeKind::Add => "add",
            NodeKind::Sub => "sub",
            NodeKind::Mul => "mul",
            NodeKind::Div => "div",
            NodeKind::Mod => "mod",
            NodeKind::Neg => "neg",
            NodeKind::Eq => "eq",
            NodeKind::Neq => "neq",
            NodeKind::Lt => "lt",
            NodeKind::Le => "le",
            NodeKind::Gt => "gt",
            NodeKind::Ge => "ge",
            NodeKind::And => "and",
            NodeKind::Or => "or",
            NodeKind::Not => "not",
            NodeKind::IndexLoad => "index_load",
            NodeKind::IndexStore => "index_store",
            NodeKind::Param => "param",
            NodeKind::Return => "return",
            NodeKind::Call => "call",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            NodeKind::Eq
                | NodeKind::Neq
                | NodeKind::Lt
                | NodeKind::Le
                | NodeKind::Gt
                | NodeKind::Ge
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Return type annotation on `call` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReturnType {
    Int,
    Real,
    Bool,
    Matrix,
    Void,
}

impl ReturnType {
    pub const ALL: [ReturnType; 5] = [
        ReturnType::Int,
        ReturnType::Real,
        ReturnType::Bool,
        ReturnType::Matrix,
        ReturnType::Void,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReturnType::Int => "int",
            ReturnType::Real => "real",
            ReturnType::Bool => "bool",
            ReturnType::Matrix => "matrix",
            ReturnType::Void => "void",
        }
    }
}

impl FromStr for ReturnType {
    type Err = CfgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReturnType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CfgError::UnknownLabel(format!("call:{s}")))
    }
}

/// Label of a CFG node: an operation kind, plus the return type for calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLabel {
    kind: NodeKind,
    ret: Option<ReturnType>,
}

/// Number of distinct labels: every non-call kind plus one call label per return type.
pub const VOCABULARY_SIZE: usize = NodeKind::ALL.len() - 1 + ReturnType::ALL.len();

impl NodeLabel {
    /// Label for a non-call kind. Panics on `NodeKind::Call`; use [`NodeLabel::call`].
    pub fn new(kind: NodeKind) -> Self {
        assert!(kind != NodeKind::Call, "call labels need a return type");
        NodeLabel { kind, ret: None }
    }

    pub fn call(ret: ReturnType) -> Self {
        NodeLabel {
            kind: NodeKind::Call,
            ret: Some(ret),
        }
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn return_type(&self) -> Option<ReturnType> {
        self.ret
    }

    /// Dense index into the label vocabulary, `0..VOCABULARY_SIZE`.
    pub fn index(&self) -> usize {
        match self.ret {
            Some(ret) => NodeKind::ALL.len() - 1 + ret as usize,
            None => self.kind as usize - if self.kind > NodeKind::Call { 1 } else { 0 },
        }
    }

    /// Every label in vocabulary order, so that `vocabulary()[l.index()] == l`.
    pub fn vocabulary() -> Vec<NodeLabel> {
        let mut out: Vec<NodeLabel> = NodeKind::ALL
            .iter()
            .filter(|k| **k != NodeKind::Call)
            .map(|k| NodeLabel::new(*k))
            .collect();
        out.extend(ReturnType::ALL.iter().map(|r| NodeLabel::call(*r)));
        out
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ret {
            Some(ret) => write!(f, "call:{}", ret.as_str()),
            None => f.write_str(self.kind.as_str()),
        }
    }
}

impl FromStr for NodeLabel {
    type Err = CfgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(ret) = s.strip_prefix("call:") {
            return Ok(NodeLabel::call(ret.parse()?));
        }
        match NodeKind::ALL.iter().find(|k| k.as_str() == s) {
            Some(NodeKind::Call) => Err(CfgError::MissingReturnType),
            Some(kind) => Ok(NodeLabel::new(*kind)),
            None => Err(CfgError::UnknownLabel(s.to_string())),
        }
    }
}
