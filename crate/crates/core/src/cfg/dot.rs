//! Reading and writing the dot-style graph file format.
//!
//! Accepted syntax is a strict subset of graphviz `digraph` files: node
//! statements with attribute lists, edge statements (chains allowed), and
//! graph/node/edge default attribute statements, which are ignored. Of the
//! node attributes only `label` is interpreted.

use std::fmt::Write as _;

use super::{Cfg, CfgError, NodeLabel};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Quoted(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Equals,
    Arrow,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CfgError {
    CfgError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, CfgError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        // comments: //, #, /* */
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(syntax(tl, tc, "unterminated comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '=' => Tok::Equals,
            '-' if chars.get(i + 1) == Some(&'>') => {
                bump!();
                Tok::Arrow
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                return Err(syntax(tl, tc, "undirected edges are not supported"));
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(tl, tc, "unterminated string")),
                        Some('"') => break,
                        Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                            bump!();
                            s.push(chars[i]);
                            bump!();
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                Tok::Quoted(s)
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' => {
                let mut s = String::new();
                while let Some(&ch) = chars.get(i) {
                    if ch.is_alphanumeric() || ch == '_' || ch == '.' || (ch == '-' && s.is_empty())
                    {
                        s.push(ch);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Id(s),
                    line: tl,
                    column: tc,
                });
                continue;
            }
            other => return Err(syntax(tl, tc, format!("unexpected character {other:?}"))),
        };
        bump!();
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> CfgError {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), CfgError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn id(&mut self) -> Option<String> {
        match &self.peek().tok {
            Tok::Id(s) | Tok::Quoted(s) => {
                let s = s.clone();
                self.next();
                Some(s)
            }
            _ => None,
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Id(s) if s.eq_ignore_ascii_case(kw))
    }

    /// `[a=b, c=d; ...]` repeated; returns (key, value) pairs.
    fn attr_lists(&mut self) -> Result<Vec<(String, String)>, CfgError> {
        let mut attrs = Vec::new();
        while self.peek().tok == Tok::LBracket {
            self.next();
            loop {
                if self.peek().tok == Tok::RBracket {
                    self.next();
                    break;
                }
                let key = self
                    .id()
                    .ok_or_else(|| self.error("expected attribute name"))?;
                self.expect(Tok::Equals, "`=`")?;
                let value = self
                    .id()
                    .ok_or_else(|| self.error("expected attribute value"))?;
                attrs.push((key, value));
                if matches!(self.peek().tok, Tok::Comma | Tok::Semi) {
                    self.next();
                }
            }
        }
        Ok(attrs)
    }
}

/// Parse a graph file into a validated [`Cfg`].
pub fn parse_graph_file(text: &str) -> Result<Cfg, CfgError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    if p.keyword("strict") {
        p.next();
    }
    if !p.keyword("digraph") {
        return Err(p.error("expected `digraph`"));
    }
    p.next();
    let name = p.id().unwrap_or_default();
    p.expect(Tok::LBrace, "`{`")?;

    let mut nodes: Vec<(String, NodeLabel)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    loop {
        match &p.peek().tok {
            Tok::RBrace => {
                p.next();
                break;
            }
            Tok::Semi => {
                p.next();
                continue;
            }
            Tok::Eof => return Err(p.error("expected `}`")),
            _ => {}
        }
        if p.keyword("graph") || p.keyword("node") || p.keyword("edge") {
            p.next();
            p.attr_lists()?;
            continue;
        }
        if p.keyword("subgraph") {
            return Err(p.error("subgraphs are not supported"));
        }
        let (line, column) = (p.peek().line, p.peek().column);
        let first = p.id().ok_or_else(|| p.error("expected node id"))?;
        match p.peek().tok {
            Tok::Equals => {
                p.next();
                p.id().ok_or_else(|| p.error("expected attribute value"))?;
            }
            Tok::Arrow => {
                let mut from = first;
                while p.peek().tok == Tok::Arrow {
                    p.next();
                    let to = p
                        .id()
                        .ok_or_else(|| p.error("expected node id after `->`"))?;
                    edges.push((from, to.clone()));
                    from = to;
                }
                p.attr_lists()?;
            }
            _ => {
                let attrs = p.attr_lists()?;
                let label = attrs
                    .iter()
                    .rev()
                    .find(|(k, _)| k == "label")
                    .map(|(_, v)| v.as_str())
                    .ok_or_else(|| CfgError::MissingLabel(first.clone()))?;
                let label: NodeLabel = label.parse().map_err(|e| match e {
                    CfgError::UnknownLabel(l) => {
                        syntax(line, column, format!("unknown node label {l:?}"))
                    }
                    other => other,
                })?;
                nodes.push((first, label));
            }
        }
    }
    if p.peek().tok != Tok::Eof {
        return Err(p.error("trailing input after graph"));
    }
    Cfg::new(name, nodes, edges)
}

fn is_bare_id(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !["graph", "digraph", "node", "edge", "subgraph", "strict"]
            .iter()
            .any(|kw| s.eq_ignore_ascii_case(kw))
}

fn quote(s: &str) -> String {
    if is_bare_id(s) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Serialize a graph; `parse_graph_file(&emit_graph_file(g)) == g`.
pub fn emit_graph_file(cfg: &Cfg) -> String {
    let mut out = String::new();
    if cfg.name().is_empty() {
        out.push_str("digraph {\n");
    } else {
        let _ = writeln!(out, "digraph {} {{", quote(cfg.name()));
    }
    for i in 0..cfg.len() {
        let _ = writeln!(out, "  {} [label=\"{}\"];", quote(cfg.id(i)), cfg.label(i));
    }
    for &(f, t) in cfg.edges() {
        let _ = writeln!(out, "  {} -> {};", quote(cfg.id(f)), quote(cfg.id(t)));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::NodeKind;

    #[test]
    fn minimal_file() {
        let g = parse_graph_file(
            "digraph f {\n start [label=\"start\"];\n exit [label=\"exit\"];\n start -> exit;\n}\n",
        )
        .unwrap();
        assert_eq!(g.name(), "f");
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn duplicate_start() {
        let err = parse_graph_file(
            "digraph f { a [label=\"start\"]; b [label=\"start\"]; e [label=\"exit\"]; a -> e; b -> e; }",
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "duplicate start");
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_graph_file("digraph f {\n  a [label=\"start\"\n  b -> ;\n}").unwrap_err();
        match err {
            CfgError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 5)),
            other => panic!("{other:?}"),
        }
        let err = parse_graph_file("digraph f { a [label=\"start\"]; a -- b; }").unwrap_err();
        assert!(
            matches!(
                err,
                CfgError::Syntax {
                    line: 1,
                    column: 34,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_label_reports_position() {
        let err = parse_graph_file("digraph f {\n x [label=\"jump\"];\n}").unwrap_err();
        assert!(
            matches!(
                err,
                CfgError::Syntax {
                    line: 2,
                    column: 2,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn ignores_other_attributes_and_defaults() {
        let text = r#"
            /* produced elsewhere */
            digraph "scalar multiply" {
                graph [rankdir=LR];
                node [shape=box, fontsize=10];
                rankdir = TB
                s [shape=oval, label="start", color=red]
                e [label="exit"]
                m [label="call:matrix" tooltip="zeros"]
                s -> m -> e [style=dashed]
            }
        "#;
        let g = parse_graph_file(text).unwrap();
        assert_eq!(g.name(), "scalar multiply");
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.count_kind(NodeKind::Call), 1);
        let again = parse_graph_file(&emit_graph_file(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn emits_call_labels() {
        let g = parse_graph_file(
            "digraph f { s [label=start]; c [label=\"call:matrix\"]; e [label=exit]; s -> c; c -> e; }",
        )
        .unwrap();
        let text = emit_graph_file(&g);
        assert!(text.contains("label=\"call:matrix\""));
        assert!(text.contains("label=\"start\""));
        assert!(text.contains("label=\"exit\""));
    }
}
