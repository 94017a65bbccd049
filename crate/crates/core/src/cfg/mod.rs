//! Control-flow graphs with labeled atomic-operation nodes.

mod dot;
mod label;
mod similarity;

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

pub use dot::{emit_graph_file, parse_graph_file};
pub use label::{NodeKind, NodeLabel, ReturnType, VOCABULARY_SIZE};
pub use similarity::{
    default_similarity_table, load_similarity_table, LabelSimilarityTable, DEFAULT_SIMILAR_PAIRS,
    PSD_RELATIVE_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfgError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown node label {0:?}")]
    UnknownLabel(String),
    #[error("call label needs a return type (`call:<type>`)")]
    MissingReturnType,
    #[error("node {0:?} has no label")]
    MissingLabel(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("duplicate edge {0:?} -> {1:?}")]
    DuplicateEdge(String, String),
    #[error("edge references unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate {0}")]
    DuplicateTerminal(&'static str),
    #[error("missing {0} node")]
    MissingTerminal(&'static str),
    #[error("node {0:?} is unreachable from start")]
    Unreachable(String),
    #[error("exit is unreachable from node {0:?}")]
    CannotReachExit(String),
    #[error("similarity override line {line}: {message}")]
    Override { line: usize, message: String },
    #[error("similarity for {a}/{b} given twice with different scores (lines {first_line} and {second_line})")]
    NonSymmetric {
        a: String,
        b: String,
        first_line: usize,
        second_line: usize,
    },
    #[error(
        "similarity table is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.6e})"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
}

/// A validated control-flow graph.
///
/// Nodes keep their insertion order; edges are stored as index pairs in the
/// order they were added.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    name: String,
    ids: Vec<String>,
    labels: Vec<NodeLabel>,
    edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
    start: usize,
    exit: usize,
}

impl Cfg {
    /// Build and validate a graph from node `(id, label)` pairs and edges by id.
    pub fn new<S: Into<String>>(
        name: S,
        nodes: Vec<(String, NodeLabel)>,
        edges: Vec<(String, String)>,
    ) -> Result<Cfg, CfgError> {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut ids = Vec::with_capacity(nodes.len());
        let mut labels = Vec::with_capacity(nodes.len());
        let mut start = None;
        let mut exit = None;
        for (i, (id, label)) in nodes.into_iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(CfgError::DuplicateNode(id));
            }
            match label.kind() {
                NodeKind::Start if start.replace(i).is_some() => {
                    return Err(CfgError::DuplicateTerminal("start"))
                }
                NodeKind::Exit if exit.replace(i).is_some() => {
                    return Err(CfgError::DuplicateTerminal("exit"))
                }
                _ => {}
            }
            ids.push(id);
            labels.push(label);
        }
        let start = start.ok_or(CfgError::MissingTerminal("start"))?;
        let exit = exit.ok_or(CfgError::MissingTerminal("exit"))?;

        let mut seen = HashSet::with_capacity(edges.len());
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let f = *index
                .get(&from)
                .ok_or_else(|| CfgError::UnknownNode(from.clone()))?;
            let t = *index
                .get(&to)
                .ok_or_else(|| CfgError::UnknownNode(to.clone()))?;
            if !seen.insert((f, t)) {
                return Err(CfgError::DuplicateEdge(from, to));
            }
            idx_edges.push((f, t));
        }
        let mut successors = vec![Vec::new(); ids.len()];
        for &(f, t) in &idx_edges {
            successors[f].push(t);
        }

        let cfg = Cfg {
            name: name.into(),
            ids,
            labels,
            edges: idx_edges,
            successors,
            start,
            exit,
        };
        cfg.check_reachability()?;
        Ok(cfg)
    }

    fn check_reachability(&self) -> Result<(), CfgError> {
        let forward = reachable(self.start, &self.successors);
        if let Some(i) = forward.iter().position(|r| !r) {
            return Err(CfgError::Unreachable(self.ids[i].clone()));
        }
        let mut predecessors = vec![Vec::new(); self.len()];
        for &(f, t) in &self.edges {
            predecessors[t].push(f);
        }
        let backward = reachable(self.exit, &predecessors);
        if let Some(i) = backward.iter().position(|r| !r) {
            return Err(CfgError::CannotReachExit(self.ids[i].clone()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name<S: Into<String>>(mut self, name: S) -> Cfg {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn label(&self, node: usize) -> NodeLabel {
        self.labels[node]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.successors[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.successors[node].len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn exit(&self) -> usize {
        self.exit
    }

    /// Number of nodes carrying a label of the given kind.
    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.labels.iter().filter(|l| l.kind() == kind).count()
    }

    /// Edges `(u, v)` where `v` precedes `u` in a depth-first order from start,
    /// i.e. loop back-edges.
    pub fn back_edges(&self) -> Vec<(usize, usize)> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark = vec![Mark::White; self.len()];
        let mut out = Vec::new();
        let mut stack = vec![(self.start, 0usize)];
        mark[self.start] = Mark::Grey;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&succ) = self.successors[node].get(*next) {
                *next += 1;
                match mark[succ] {
                    Mark::White => {
                        mark[succ] = Mark::Grey;
                        stack.push((succ, 0));
                    }
                    Mark::Grey => out.push((node, succ)),
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
        out
    }
}

fn reachable(from: usize, adjacency: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(n) = queue.pop_front() {
        for &m in &adjacency[n] {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, label: &str) -> (String, NodeLabel) {
        (id.to_string(), label.parse().unwrap())
    }

    fn edge(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn minimal_graph() {
        let g = Cfg::new(
            "f",
            vec![node("s", "start"), node("e", "exit")],
            vec![edge("s", "e")],
        )
        .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.id(g.start()), "s");
        assert_eq!(g.id(g.exit()), "e");
    }

    #[test]
    fn invariant_violations() {
        let two_starts = Cfg::new(
            "f",
            vec![node("a", "start"), node("b", "start"), node("e", "exit")],
            vec![edge("a", "e"), edge("b", "e")],
        );
        assert_eq!(
            two_starts.unwrap_err(),
            CfgError::DuplicateTerminal("start")
        );

        let no_exit = Cfg::new("f", vec![node("a", "start")], vec![]);
        assert_eq!(no_exit.unwrap_err(), CfgError::MissingTerminal("exit"));

        let orphan = Cfg::new(
            "f",
            vec![node("s", "start"), node("x", "add"), node("e", "exit")],
            vec![edge("s", "e"), edge("x", "e")],
        );
        assert_eq!(orphan.unwrap_err(), CfgError::Unreachable("x".into()));

        let trap = Cfg::new(
            "f",
            vec![node("s", "start"), node("x", "add"), node("e", "exit")],
            vec![edge("s", "e"), edge("s", "x"), edge("x", "x")],
        );
        assert_eq!(trap.unwrap_err(), CfgError::CannotReachExit("x".into()));

        let dup = Cfg::new(
            "f",
            vec![node("s", "start"), node("e", "exit")],
            vec![edge("s", "e"), edge("s", "e")],
        );
        assert!(matches!(dup, Err(CfgError::DuplicateEdge(..))));

        let dangling = Cfg::new(
            "f",
            vec![node("s", "start"), node("e", "exit")],
            vec![edge("s", "q")],
        );
        assert_eq!(dangling.unwrap_err(), CfgError::UnknownNode("q".into()));

        let dup_node = Cfg::new("f", vec![node("s", "start"), node("s", "exit")], vec![]);
        assert_eq!(dup_node.unwrap_err(), CfgError::DuplicateNode("s".into()));
    }

    #[test]
    fn finds_back_edges() {
        let g = Cfg::new(
            "loop",
            vec![
                node("s", "start"),
                node("c", "lt"),
                node("b", "add"),
                node("e", "exit"),
            ],
            vec![
                edge("s", "c"),
                edge("c", "b"),
                edge("b", "c"),
                edge("c", "e"),
            ],
        )
        .unwrap();
        assert_eq!(g.back_edges(), vec![(2, 1)]);
    }
}
