use std::collections::{HashMap, HashSet};

use super::{
    builtin, BinOp, CompileError, ErrorKind, Expr, ExprKind, Function, Pos, Program, Stmt, Type,
    UnOp,
};

type Signatures = HashMap<String, (Vec<Type>, Type)>;

pub(crate) fn check(program: &mut Program) -> Result<(), CompileError> {
    let mut sigs: Signatures = HashMap::new();
    for f in &program.functions {
        if builtin(&f.name).is_some() || sigs.contains_key(&f.name) {
            return Err(CompileError::new(
                f.pos,
                ErrorKind::DuplicateFunction(f.name.clone()),
            ));
        }
        sigs.insert(
            f.name.clone(),
            (f.params.iter().map(|(_, t)| *t).collect(), f.ret),
        );
    }
    for f in &mut program.functions {
        let locals = FunctionChecker::run(f, &sigs)?;
        f.locals = locals;
    }
    Ok(())
}

struct FunctionChecker<'a> {
    sigs: &'a Signatures,
    ret: Type,
    types: HashMap<String, Type>,
    locals: Vec<(String, Type)>,
}

fn mismatch<T>(pos: Pos, message: String) -> Result<T, CompileError> {
    Err(CompileError::new(pos, ErrorKind::Type(message)))
}

impl<'a> FunctionChecker<'a> {
    fn run(f: &Function, sigs: &'a Signatures) -> Result<Vec<(String, Type)>, CompileError> {
        let mut c = FunctionChecker {
            sigs,
            ret: f.ret,
            types: HashMap::new(),
            locals: Vec::new(),
        };
        let mut defined = HashSet::new();
        for (name, ty) in &f.params {
            if c.types.insert(name.clone(), *ty).is_some() {
                return Err(CompileError::new(
                    f.pos,
                    ErrorKind::DuplicateParameter(name.clone()),
                ));
            }
            defined.insert(name.clone());
        }
        if !c.block(&f.body, &mut defined)? {
            return Err(CompileError::new(
                f.pos,
                ErrorKind::MissingReturn(f.name.clone()),
            ));
        }
        Ok(c.locals)
    }

    /// Returns whether the block definitely returns.
    fn block(&mut self, stmts: &[Stmt], defined: &mut HashSet<String>) -> Result<bool, CompileError> {
        let mut returns = false;
        for s in stmts {
            if returns {
                return Err(CompileError::new(s.pos(), ErrorKind::Unreachable));
            }
            returns = self.stmt(s, defined)?;
        }
        Ok(returns)
    }

    fn nonempty(&self, stmts: &[Stmt], pos: Pos) -> Result<(), CompileError> {
        if stmts.is_empty() {
            Err(CompileError::new(pos, ErrorKind::EmptyBlock))
        } else {
            Ok(())
        }
    }

    fn bind(&mut self, name: &str, ty: Type, pos: Pos) -> Result<(), CompileError> {
        match self.types.get(name) {
            Some(&declared) if declared.accepts(ty) => Ok(()),
            Some(&declared) => mismatch(
                pos,
                format!("cannot assign {ty} to `{name}` of type {declared}"),
            ),
            None => {
                self.types.insert(name.to_string(), ty);
                self.locals.push((name.to_string(), ty));
                Ok(())
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, defined: &mut HashSet<String>) -> Result<bool, CompileError> {
        match s {
            Stmt::Assign { name, value, pos } => {
                let ty = self.expr(value, defined)?;
                self.bind(name, ty, *pos)?;
                defined.insert(name.clone());
                Ok(false)
            }
            Stmt::Store {
                name,
                row,
                col,
                value,
                pos,
            } => {
                self.matrix_var(name, *pos, defined)?;
                self.expect(row, Type::Int, defined)?;
                self.expect(col, Type::Int, defined)?;
                self.expect(value, Type::Real, defined)?;
                Ok(false)
            }
            Stmt::If {
                cond,
                then,
                els,
                pos,
            } => {
                self.expect(cond, Type::Bool, defined)?;
                self.nonempty(then, *pos)?;
                let mut d_then = defined.clone();
                let r_then = self.block(then, &mut d_then)?;
                match els {
                    Some(els) => {
                        self.nonempty(els, *pos)?;
                        let mut d_else = defined.clone();
                        let r_else = self.block(els, &mut d_else)?;
                        // a branch that returns does not constrain what follows
                        let merged: HashSet<String> = match (r_then, r_else) {
                            (true, true) => d_then.union(&d_else).cloned().collect(),
                            (true, false) => d_else,
                            (false, true) => d_then,
                            (false, false) => d_then.intersection(&d_else).cloned().collect(),
                        };
                        *defined = merged;
                        Ok(r_then && r_else)
                    }
                    None => Ok(false),
                }
            }
            Stmt::While { cond, body, pos } => {
                self.expect(cond, Type::Bool, defined)?;
                self.nonempty(body, *pos)?;
                let mut inner = defined.clone();
                self.block(body, &mut inner)?;
                Ok(false)
            }
            Stmt::For {
                var,
                from,
                upto,
                body,
                pos,
            } => {
                self.expect(from, Type::Int, defined)?;
                self.bind(var, Type::Int, *pos)?;
                if self.types[var] != Type::Int {
                    return mismatch(*pos, format!("loop variable `{var}` must be int"));
                }
                defined.insert(var.clone());
                self.expect(upto, Type::Int, defined)?;
                self.nonempty(body, *pos)?;
                let mut inner = defined.clone();
                self.block(body, &mut inner)?;
                Ok(false)
            }
            Stmt::Return { value, .. } => {
                self.expect(value, self.ret, defined)?;
                Ok(true)
            }
            Stmt::Call { call, .. } => {
                self.expr(call, defined)?;
                Ok(false)
            }
        }
    }

    fn matrix_var(&self, name: &str, pos: Pos, defined: &HashSet<String>) -> Result<(), CompileError> {
        let ty = self.var(name, pos, defined)?;
        if ty != Type::Matrix {
            return mismatch(pos, format!("`{name}` is {ty}, not matrix"));
        }
        Ok(())
    }

    fn var(&self, name: &str, pos: Pos, defined: &HashSet<String>) -> Result<Type, CompileError> {
        match self.types.get(name) {
            None => Err(CompileError::new(
                pos,
                ErrorKind::UndeclaredVariable(name.to_string()),
            )),
            Some(_) if !defined.contains(name) => Err(CompileError::new(
                pos,
                ErrorKind::Unassigned(name.to_string()),
            )),
            Some(t) => Ok(*t),
        }
    }

    fn expect(&self, e: &Expr, want: Type, defined: &HashSet<String>) -> Result<(), CompileError> {
        let got = self.expr(e, defined)?;
        if want.accepts(got) {
            Ok(())
        } else {
            mismatch(e.pos, format!("expected {want}, found {got}"))
        }
    }

    fn expr(&self, e: &Expr, defined: &HashSet<String>) -> Result<Type, CompileError> {
        match &e.kind {
            ExprKind::Int(_) => Ok(Type::Int),
            ExprKind::Real(_) => Ok(Type::Real),
            ExprKind::Bool(_) => Ok(Type::Bool),
            ExprKind::Var(name) => self.var(name, e.pos, defined),
            ExprKind::Index { name, row, col } => {
                self.matrix_var(name, e.pos, defined)?;
                self.expect(row, Type::Int, defined)?;
                self.expect(col, Type::Int, defined)?;
                Ok(Type::Real)
            }
            ExprKind::Call { name, args } => {
                let (params, ret): (Vec<Type>, Type) = match builtin(name) {
                    Some((p, r)) => (p.to_vec(), r),
                    None => match self.sigs.get(name) {
                        Some((p, r)) => (p.clone(), *r),
                        None => {
                            return Err(CompileError::new(
                                e.pos,
                                ErrorKind::UndeclaredFunction(name.clone()),
                            ))
                        }
                    },
                };
                if params.len() != args.len() {
                    return mismatch(
                        e.pos,
                        format!(
                            "`{name}` takes {} arguments, {} given",
                            params.len(),
                            args.len()
                        ),
                    );
                }
                for (a, p) in args.iter().zip(&params) {
                    self.expect(a, *p, defined)?;
                }
                Ok(ret)
            }
            ExprKind::Unary { op, expr } => {
                let t = self.expr(expr, defined)?;
                match op {
                    UnOp::Neg if t.is_numeric() => Ok(t),
                    UnOp::Not if t == Type::Bool => Ok(Type::Bool),
                    _ => mismatch(e.pos, format!("bad operand type {t}")),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, defined)?;
                let r = self.expr(rhs, defined)?;
                use BinOp::*;
                match op {
                    Add | Sub | Mul | Div | Mod if l.is_numeric() && r.is_numeric() => {
                        Ok(if l == Type::Int && r == Type::Int {
                            Type::Int
                        } else {
                            Type::Real
                        })
                    }
                    Lt | Le | Gt | Ge if l.is_numeric() && r.is_numeric() => Ok(Type::Bool),
                    Eq | Neq
                        if (l.is_numeric() && r.is_numeric())
                            || (l == Type::Bool && r == Type::Bool) =>
                    {
                        Ok(Type::Bool)
                    }
                    And | Or if l == Type::Bool && r == Type::Bool => Ok(Type::Bool),
                    _ => mismatch(e.pos, format!("operands {l} and {r} do not fit {op:?}")),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_source, ErrorKind};

    fn kind(text: &str) -> ErrorKind {
        parse_source(text).unwrap_err().kind
    }

    #[test]
    fn accepts_well_typed() {
        let p = parse_source(
            "fn f(a: matrix, k: real): real {\n  s = 0;\n  s = s + 1;\n  t = 0.0;\n  t = 3;\n  for i = 0 to rows(a) { t = t + a[i][0] * k; }\n  if t > 0.0 { return t; } else { return toreal(s); }\n}",
        )
        .unwrap();
        let locals: Vec<&str> = p.functions[0].locals.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(locals, ["s", "t", "i"]);
    }

    #[test]
    fn undeclared_function() {
        assert_eq!(
            kind("fn f(a: int): int { return g(a); }"),
            ErrorKind::UndeclaredFunction("g".into())
        );
    }

    #[test]
    fn variable_errors() {
        assert_eq!(
            kind("fn f(): int { return x; }"),
            ErrorKind::UndeclaredVariable("x".into())
        );
        assert_eq!(
            kind("fn f(b: bool): int { if b { x = 1; } return x; }"),
            ErrorKind::Unassigned("x".into())
        );
        assert!(parse_source("fn f(b: bool): int { if b { x = 1; } else { x = 2; } return x; }").is_ok());
        assert!(parse_source("fn f(b: bool): int { if b { return 0; } else { x = 2; } return x; }").is_ok());
    }

    #[test]
    fn type_errors() {
        assert!(matches!(kind("fn f(): int { return 1.5; }"), ErrorKind::Type(_)));
        assert!(matches!(kind("fn f(a: matrix): int { return a + 1; }"), ErrorKind::Type(_)));
        assert!(matches!(kind("fn f(): int { x = 1; x = 2.0; return x; }"), ErrorKind::Type(_)));
        assert!(matches!(kind("fn f(): int { if 1 { return 1; } return 0; }"), ErrorKind::Type(_)));
        assert!(matches!(kind("fn f(a: int): int { return rows(a); }"), ErrorKind::Type(_)));
        assert!(matches!(kind("fn f(): int { return toint(1.0, 2.0); }"), ErrorKind::Type(_)));
    }

    #[test]
    fn control_flow_errors() {
        assert_eq!(
            kind("fn f(b: bool): int { if b { return 1; } }"),
            ErrorKind::MissingReturn("f".into())
        );
        assert_eq!(kind("fn f(): int { return 1; x = 2; }"), ErrorKind::Unreachable);
        assert_eq!(kind("fn f(b: bool): int { if b { } return 1; }"), ErrorKind::EmptyBlock);
        assert_eq!(
            kind("fn f(): int { return 1; }\nfn f(): int { return 2; }"),
            ErrorKind::DuplicateFunction("f".into())
        );
        assert_eq!(
            kind("fn rows(): int { return 1; }"),
            ErrorKind::DuplicateFunction("rows".into())
        );
    }
}
