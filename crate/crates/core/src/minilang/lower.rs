use std::collections::HashMap;
use std::fmt;

use super::{
    builtin, BinOp, CompileError, ErrorKind, Expr, ExprKind, Function, Program, Stmt, Type, UnOp,
};
use crate::cfg::{Cfg, NodeKind, NodeLabel, ReturnType};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    Slot(usize),
    Int(i64),
    Real(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Assign {
        dst: usize,
        src: Operand,
    },
    Const {
        dst: usize,
        value: Operand,
    },
    Binary {
        kind: NodeKind,
        dst: usize,
        lhs: Operand,
        rhs: Operand,
    },
    Unary {
        kind: NodeKind,
        dst: usize,
        src: Operand,
    },
    IndexLoad {
        dst: usize,
        matrix: usize,
        row: Operand,
        col: Operand,
    },
    IndexStore {
        matrix: usize,
        row: Operand,
        col: Operand,
        value: Operand,
    },
    Call {
        dst: Option<usize>,
        callee: String,
        builtin: bool,
        args: Vec<Operand>,
        ret: ReturnType,
    },
    Return {
        value: Operand,
    },
}

impl Op {
    pub fn label(&self) -> NodeLabel {
        match self {
            Op::Assign { .. } => NodeLabel::new(NodeKind::Assign),
            Op::Const { .. } => NodeLabel::new(NodeKind::Const),
            Op::Binary { kind, .. } | Op::Unary { kind, .. } => NodeLabel::new(*kind),
            Op::IndexLoad { .. } => NodeLabel::new(NodeKind::IndexLoad),
            Op::IndexStore { .. } => NodeLabel::new(NodeKind::IndexStore),
            Op::Call { ret, .. } => NodeLabel::call(*ret),
            Op::Return { .. } => NodeLabel::new(NodeKind::Return),
        }
    }

    fn dst(&self) -> Option<usize> {
        match self {
            Op::Assign { dst, .. }
            | Op::Const { dst, .. }
            | Op::Binary { dst, .. }
            | Op::Unary { dst, .. }
            | Op::IndexLoad { dst, .. } => Some(*dst),
            Op::Call { dst, .. } => *dst,
            Op::IndexStore { .. } | Op::Return { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Instr(usize),
    Exit,
}

/// One TAC instruction. Branching instructions have two successors:
/// taken when the result is true, then when it is false.
#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub op: Op,
    pub next: Vec<Target>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredFunction {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    /// Names of all slots: parameters, locals, then temporaries.
    pub slot_names: Vec<String>,
    /// Declared type per slot; `None` for temporaries.
    pub slot_types: Vec<Option<Type>>,
    pub instrs: Vec<Instr>,
}

impl LoweredFunction {
    /// The control-flow graph: `start`, one node `n<k>` per instruction, `exit`.
    pub fn to_cfg(&self) -> Cfg {
        let mut nodes = vec![("start".to_string(), NodeLabel::new(NodeKind::Start))];
        for (k, ins) in self.instrs.iter().enumerate() {
            nodes.push((node_id(k), ins.op.label()));
        }
        nodes.push(("exit".to_string(), NodeLabel::new(NodeKind::Exit)));
        let mut edges = vec![("start".to_string(), node_id(0))];
        for (k, ins) in self.instrs.iter().enumerate() {
            for t in &ins.next {
                let to = match t {
                    Target::Instr(j) => node_id(*j),
                    Target::Exit => "exit".to_string(),
                };
                edges.push((node_id(k), to));
            }
        }
        Cfg::new(self.name.clone(), nodes, edges).expect("lowering yields well-formed graphs")
    }

    fn operand(&self, o: &Operand) -> String {
        match o {
            Operand::Slot(s) => self.slot_names[*s].clone(),
            Operand::Int(v) => v.to_string(),
            Operand::Real(v) => format!("{v:?}"),
            Operand::Bool(v) => v.to_string(),
        }
    }
}

fn node_id(k: usize) -> String {
    format!("n{}", k + 1)
}

impl fmt::Display for LoweredFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(n, t)| format!("{n}: {t}"))
            .collect();
        writeln!(f, "fn {}({}): {}", self.name, params.join(", "), self.ret)?;
        for (k, ins) in self.instrs.iter().enumerate() {
            let o = |x: &Operand| self.operand(x);
            let s = |x: &usize| self.slot_names[*x].clone();
            let text = match &ins.op {
                Op::Assign { dst, src } => format!("{} = {}", s(dst), o(src)),
                Op::Const { dst, value } => format!("{} = const {}", s(dst), o(value)),
                Op::Binary { kind, dst, lhs, rhs } => {
                    format!("{} = {} {} {}", s(dst), kind, o(lhs), o(rhs))
                }
                Op::Unary { kind, dst, src } => format!("{} = {} {}", s(dst), kind, o(src)),
                Op::IndexLoad { dst, matrix, row, col } => {
                    format!("{} = {}[{}][{}]", s(dst), s(matrix), o(row), o(col))
                }
                Op::IndexStore { matrix, row, col, value } => {
                    format!("{}[{}][{}] = {}", s(matrix), o(row), o(col), o(value))
                }
                Op::Call { dst, callee, args, .. } => {
                    let args: Vec<String> = args.iter().map(o).collect();
                    match dst {
                        Some(d) => format!("{} = call {}({})", s(d), callee, args.join(", ")),
                        None => format!("call {}({})", callee, args.join(", ")),
                    }
                }
                Op::Return { value } => format!("return {}", o(value)),
            };
            let next: Vec<String> = ins
                .next
                .iter()
                .map(|t| match t {
                    Target::Instr(j) => node_id(*j),
                    Target::Exit => "exit".to_string(),
                })
                .collect();
            writeln!(f, "  {:>4}: {:<36} -> {}", node_id(k), text, next.join(", "))?;
        }
        Ok(())
    }
}

/// Every function of a program lowered, in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    functions: Vec<LoweredFunction>,
    index: HashMap<String, usize>,
}

impl CompiledProgram {
    pub fn function(&self, name: &str) -> Option<&LoweredFunction> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    pub fn functions(&self) -> &[LoweredFunction] {
        &self.functions
    }

    pub fn cfgs(&self) -> Vec<Cfg> {
        self.functions.iter().map(LoweredFunction::to_cfg).collect()
    }
}

fn return_types(program: &Program) -> HashMap<&str, Type> {
    program
        .functions
        .iter()
        .map(|f| (f.name.as_str(), f.ret))
        .collect()
}

pub fn compile(program: &Program) -> CompiledProgram {
    let rets = return_types(program);
    let functions: Vec<LoweredFunction> = program.functions.iter().map(|f| lower(f, &rets)).collect();
    let index = functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.clone(), i))
        .collect();
    CompiledProgram { functions, index }
}

pub fn lower_function(program: &Program, name: &str) -> Result<LoweredFunction, CompileError> {
    let rets = return_types(program);
    program.function(name).map(|f| lower(f, &rets)).ok_or_else(|| {
        CompileError::new(
            super::Pos { line: 0, column: 0 },
            ErrorKind::UnknownFunction(name.to_string()),
        )
    })
}

pub fn lower_to_cfg(program: &Program, name: &str) -> Result<Cfg, CompileError> {
    Ok(lower_function(program, name)?.to_cfg())
}

#[derive(Clone, Copy)]
enum Pending {
    Entry,
    Branch(usize, usize),
}

struct Lowerer<'p> {
    user_ret: &'p HashMap<&'p str, Type>,
    vars: HashMap<String, usize>,
    slot_names: Vec<String>,
    slot_types: Vec<Option<Type>>,
    temps: usize,
    instrs: Vec<Instr>,
    pending: Vec<Pending>,
}

fn return_type(t: Type) -> ReturnType {
    match t {
        Type::Int => ReturnType::Int,
        Type::Real => ReturnType::Real,
        Type::Bool => ReturnType::Bool,
        Type::Matrix => ReturnType::Matrix,
    }
}

fn bin_kind(op: BinOp) -> NodeKind {
    match op {
        BinOp::Add => NodeKind::Add,
        BinOp::Sub => NodeKind::Sub,
        BinOp::Mul => NodeKind::Mul,
        BinOp::Div => NodeKind::Div,
        BinOp::Mod => NodeKind::Mod,
        BinOp::Eq => NodeKind::Eq,
        BinOp::Neq => NodeKind::Neq,
        BinOp::Lt => NodeKind::Lt,
        BinOp::Le => NodeKind::Le,
        BinOp::Gt => NodeKind::Gt,
        BinOp::Ge => NodeKind::Ge,
        BinOp::And => NodeKind::And,
        BinOp::Or => NodeKind::Or,
    }
}

fn lower(f: &Function, user_ret: &HashMap<&str, Type>) -> LoweredFunction {
    let mut l = Lowerer {
        user_ret,
        vars: HashMap::new(),
        slot_names: Vec::new(),
        slot_types: Vec::new(),
        temps: 0,
        instrs: Vec::new(),
        pending: vec![Pending::Entry],
    };
    for (name, ty) in f.params.iter().chain(&f.locals) {
        l.vars.insert(name.clone(), l.slot_names.len());
        l.slot_names.push(name.clone());
        l.slot_types.push(Some(*ty));
    }
    l.block(&f.body);
    debug_assert!(l.pending.is_empty(), "checked functions always return");
    LoweredFunction {
        name: f.name.clone(),
        params: f.params.clone(),
        ret: f.ret,
        slot_names: l.slot_names,
        slot_types: l.slot_types,
        instrs: l.instrs,
    }
}

impl Lowerer<'_> {
    fn temp(&mut self) -> usize {
        let s = self.slot_names.len();
        self.slot_names.push(format!("%t{}", self.temps));
        self.slot_types.push(None);
        self.temps += 1;
        s
    }

    fn connect(&mut self, p: Pending, to: Target) {
        match p {
            Pending::Entry => {}
            Pending::Branch(i, k) => self.instrs[i].next[k] = to,
        }
    }

    /// Emits `op`, wiring every pending edge to it. `branches` gives the number of successors.
    fn emit(&mut self, op: Op, branches: usize) -> usize {
        let k = self.instrs.len();
        self.instrs.push(Instr {
            op,
            next: vec![Target::Exit; branches],
        });
        for p in std::mem::take(&mut self.pending) {
            self.connect(p, Target::Instr(k));
        }
        self.pending = (0..branches).map(|b| Pending::Branch(k, b)).collect();
        k
    }

    fn wire(&mut self, pending: Vec<Pending>, to: usize) {
        for p in pending {
            self.connect(p, Target::Instr(to));
        }
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn assign(&mut self, name: &str, value: &Expr) {
        let dst = self.vars[name];
        match &value.kind {
            ExprKind::Int(v) => {
                self.emit(Op::Const { dst, value: Operand::Int(*v) }, 1);
            }
            ExprKind::Real(v) => {
                self.emit(Op::Const { dst, value: Operand::Real(*v) }, 1);
            }
            ExprKind::Bool(v) => {
                self.emit(Op::Const { dst, value: Operand::Bool(*v) }, 1);
            }
            _ => {
                let src = self.expr(value);
                self.emit(Op::Assign { dst, src }, 1);
            }
        }
    }

    /// Lowers a condition and returns the (true, false) edges of its branch node.
    fn cond(&mut self, cond: &Expr) -> (Pending, Pending) {
        let before = self.instrs.len();
        let value = self.expr(cond);
        let last = self.instrs.len().checked_sub(1);
        let branch = match (value, last) {
            (Operand::Slot(s), Some(k))
                if k >= before && self.instrs[k].op.dst() == Some(s) && s >= self.first_temp() =>
            {
                self.instrs[k].next = vec![Target::Exit; 2];
                k
            }
            _ => {
                let dst = self.temp();
                self.emit(
                    Op::Binary {
                        kind: NodeKind::Neq,
                        dst,
                        lhs: value,
                        rhs: Operand::Bool(false),
                    },
                    2,
                )
            }
        };
        self.pending.clear();
        (Pending::Branch(branch, 0), Pending::Branch(branch, 1))
    }

    fn first_temp(&self) -> usize {
        self.slot_types.iter().take_while(|t| t.is_some()).count()
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Assign { name, value, .. } => self.assign(name, value),
            Stmt::Store {
                name,
                row,
                col,
                value,
                ..
            } => {
                let matrix = self.vars[name];
                let row = self.expr(row);
                let col = self.expr(col);
                let value = self.expr(value);
                self.emit(Op::IndexStore { matrix, row, col, value }, 1);
            }
            Stmt::If { cond, then, els, .. } => {
                let (t, f) = self.cond(cond);
                self.pending = vec![t];
                self.block(then);
                let mut after = std::mem::take(&mut self.pending);
                match els {
                    Some(els) => {
                        self.pending = vec![f];
                        self.block(els);
                        after.append(&mut self.pending);
                    }
                    None => after.push(f),
                }
                self.pending = after;
            }
            Stmt::While { cond, body, .. } => {
                let head = self.instrs.len();
                let (t, f) = self.cond(cond);
                self.pending = vec![t];
                self.block(body);
                let back = std::mem::take(&mut self.pending);
                self.wire(back, head);
                self.pending = vec![f];
            }
            Stmt::For {
                var, from, upto, body, ..
            } => {
                self.assign(var, from);
                let v = self.vars[var];
                let head = self.instrs.len();
                let bound = self.expr(upto);
                let dst = self.temp();
                let k = self.emit(
                    Op::Binary {
                        kind: NodeKind::Lt,
                        dst,
                        lhs: Operand::Slot(v),
                        rhs: bound,
                    },
                    2,
                );
                self.pending = vec![Pending::Branch(k, 0)];
                self.block(body);
                let next = self.temp();
                self.emit(
                    Op::Binary {
                        kind: NodeKind::Add,
                        dst: next,
                        lhs: Operand::Slot(v),
                        rhs: Operand::Int(1),
                    },
                    1,
                );
                self.emit(Op::Assign { dst: v, src: Operand::Slot(next) }, 1);
                let back = std::mem::take(&mut self.pending);
                self.wire(back, head);
                self.pending = vec![Pending::Branch(k, 1)];
            }
            Stmt::Return { value, .. } => {
                let value = self.expr(value);
                self.emit(Op::Return { value }, 1);
                self.pending.clear();
            }
            Stmt::Call { call, .. } => {
                if let ExprKind::Call { name, args } = &call.kind {
                    self.call(name, args, false);
                }
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], want_value: bool) -> Option<usize> {
        let args: Vec<Operand> = args.iter().map(|a| self.expr(a)).collect();
        let (is_builtin, ret) = match builtin(name) {
            Some((_, r)) => (true, r),
            None => (false, self.user_ret[name]),
        };
        let dst = want_value.then(|| self.temp());
        let ret = return_type(ret);
        self.emit(
            Op::Call {
                dst,
                callee: name.to_string(),
                builtin: is_builtin,
                args,
                ret,
            },
            1,
        );
        dst
    }

    fn expr(&mut self, e: &Expr) -> Operand {
        match &e.kind {
            ExprKind::Int(v) => Operand::Int(*v),
            ExprKind::Real(v) => Operand::Real(*v),
            ExprKind::Bool(v) => Operand::Bool(*v),
            ExprKind::Var(name) => Operand::Slot(self.vars[name]),
            ExprKind::Index { name, row, col } => {
                let matrix = self.vars[name];
                let row = self.expr(row);
                let col = self.expr(col);
                let dst = self.temp();
                self.emit(Op::IndexLoad { dst, matrix, row, col }, 1);
                Operand::Slot(dst)
            }
            ExprKind::Call { name, args } => {
                Operand::Slot(self.call(name, args, true).expect("value call has a slot"))
            }
            ExprKind::Unary { op, expr } => {
                let src = self.expr(expr);
                let dst = self.temp();
                let kind = match op {
                    UnOp::Neg => NodeKind::Neg,
                    UnOp::Not => NodeKind::Not,
                };
                self.emit(Op::Unary { kind, dst, src }, 1);
                Operand::Slot(dst)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lhs = self.expr(lhs);
                let rhs = self.expr(rhs);
                let dst = self.temp();
                self.emit(Op::Binary { kind: bin_kind(*op), dst, lhs, rhs }, 1);
                Operand::Slot(dst)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse_source;

    fn cfg_of(text: &str) -> Cfg {
        let p = parse_source(text).unwrap();
        lower_to_cfg(&p, &p.functions[0].name).unwrap()
    }

    fn labels(c: &Cfg) -> Vec<String> {
        c.labels().iter().map(|l| l.to_string()).collect()
    }

    pub(crate) const SCALE: &str = "fn scale(m: matrix, k: real): matrix {
  c = zeros(rows(m), cols(m));
  for i = 0 to rows(m) {
    for j = 0 to cols(m) {
      c[i][j] = m[i][j] * k;
    }
  }
  return c;
}";

    #[test]
    fn straight_line_add() {
        let c = cfg_of("fn f(a: int, b: int): int { c = a + b; return c; }");
        assert_eq!(labels(&c), ["start", "add", "assign", "return", "exit"]);
        assert_eq!(c.edges().len(), 4);
        assert_eq!(c.edges(), &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn operator_order_follows_evaluation() {
        let c = cfg_of("fn f(a: int, b: int, d: int): int { c = a + b * d; return c; }");
        assert_eq!(labels(&c), ["start", "mul", "add", "assign", "return", "exit"]);
    }

    #[test]
    fn literal_and_copy_assignments() {
        let c = cfg_of("fn f(a: int): int { x = 1; y = a; z = -2; return x; }");
        assert_eq!(labels(&c), ["start", "const", "assign", "const", "return", "exit"]);
    }

    #[test]
    fn scale_has_nested_loops() {
        let c = cfg_of(SCALE);
        assert_eq!(c.back_edges().len(), 2);
        let lts: Vec<usize> = (0..c.len())
            .filter(|&v| c.label(v).kind() == NodeKind::Lt)
            .collect();
        assert_eq!(lts.len(), 2);
        for v in lts {
            assert_eq!(c.out_degree(v), 2);
        }
        assert_eq!(c.count_kind(NodeKind::Mul), 1);
        assert_eq!(c.count_kind(NodeKind::IndexStore), 1);
        assert_eq!(c.count_kind(NodeKind::IndexLoad), 1);
        assert_eq!(c.len(), 20);
    }

    #[test]
    fn atomic_condition_gets_a_test_node() {
        let c = cfg_of("fn f(b: bool): int { if b { return 1; } else { return 2; } }");
        assert_eq!(labels(&c), ["start", "neq", "return", "return", "exit"]);
        assert_eq!(c.out_degree(1), 2);
    }

    #[test]
    fn call_labels_carry_return_type() {
        let c = cfg_of("fn f(m: matrix): int { return g(m); }\nfn g(m: matrix): int { return rows(m); }");
        assert_eq!(labels(&c), ["start", "call:int", "return", "exit"]);
        let c = cfg_of("fn f(m: matrix): matrix { m = zeros(1, 1); return m; }");
        assert_eq!(labels(&c), ["start", "call:matrix", "assign", "return", "exit"]);
    }

    #[test]
    fn while_loop_back_edge() {
        let p = parse_source("fn f(n: int): int { s = 0; while s < n { s = s + 1; } return s; }").unwrap();
        let lf = lower_function(&p, "f").unwrap();
        let c = lf.to_cfg();
        assert_eq!(c.back_edges().len(), 1);
        let text = lf.to_string();
        assert!(text.starts_with("fn f(n: int): int\n"));
        assert!(text.contains("s = lt s n") || text.contains("= lt s n"));
        assert!(lower_function(&p, "nope").is_err());
    }

    #[test]
    fn emitted_graphs_parse_back() {
        let c = cfg_of(SCALE);
        let text = crate::cfg::emit_graph_file(&c);
        let back = crate::cfg::parse_graph_file(&text).unwrap();
        assert_eq!(back.labels(), c.labels());
        assert_eq!(back.edges(), c.edges());
    }
}
