use super::lexer::Token;
use super::{
    Annotation, BinOp, CompileError, ErrorKind, Expr, ExprKind, Function, Pos, Program, Stmt, Type,
    UnOp,
};

struct Parser {
    tokens: Vec<(Token, Pos)>,
    at: usize,
}

pub(crate) fn parse(tokens: Vec<(Token, Pos)>) -> Result<Program, CompileError> {
    let mut p = Parser { tokens, at: 0 };
    let mut functions = Vec::new();
    while *p.peek() != Token::Eof {
        functions.push(p.function()?);
    }
    Ok(Program { functions })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Token {
        let i = (self.at + k).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> (Token, Pos) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: String) -> Result<T, CompileError> {
        Err(CompileError::new(self.pos(), ErrorKind::Syntax(message)))
    }

    fn expect(&mut self, want: Token) -> Result<Pos, CompileError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            ))
        }
    }

    fn eat(&mut self, want: &Token) -> bool {
        if self.peek() == want {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), CompileError> {
        match self.peek().clone() {
            Token::Ident(s) => Ok((s, self.bump().1)),
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn ty(&mut self) -> Result<Type, CompileError> {
        let t = match self.peek() {
            Token::TyInt => Type::Int,
            Token::TyReal => Type::Real,
            Token::TyBool => Type::Bool,
            Token::TyMatrix => Type::Matrix,
            other => return self.error(format!("expected a type, found {}", other.describe())),
        };
        self.bump();
        Ok(t)
    }

    fn function(&mut self) -> Result<Function, CompileError> {
        let mut annotations = Vec::new();
        while *self.peek() == Token::At {
            let pos = self.bump().1;
            let (key, _) = self.ident()?;
            let (value, _) = self.ident()?;
            annotations.push(Annotation { key, value, pos });
        }
        let pos = self.expect(Token::Fn)?;
        let (name, _) = self.ident()?;
        self.expect(Token::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Token::RParen {
            loop {
                let (pname, _) = self.ident()?;
                self.expect(Token::Colon)?;
                params.push((pname, self.ty()?));
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        self.expect(Token::RParen)?;
        self.expect(Token::Colon)?;
        let ret = self.ty()?;
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            ret,
            body,
            annotations,
            locals: Vec::new(),
            pos,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, CompileError> {
        self.expect(Token::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Token::RBrace {
            if *self.peek() == Token::Eof {
                return self.error("unclosed block".to_string());
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, CompileError> {
        let pos = self.pos();
        match self.peek().clone() {
            Token::If => self.if_stmt(),
            Token::While => {
                self.bump();
                let cond = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body, pos })
            }
            Token::For => {
                self.bump();
                let (var, _) = self.ident()?;
                self.expect(Token::Assign)?;
                let from = self.expr()?;
                self.expect(Token::To)?;
                let upto = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::For {
                    var,
                    from,
                    upto,
                    body,
                    pos,
                })
            }
            Token::Return => {
                self.bump();
                let value = self.expr()?;
                self.expect(Token::Semi)?;
                Ok(Stmt::Return { value, pos })
            }
            Token::Ident(name) => match self.peek_at(1) {
                Token::Assign => {
                    self.bump();
                    self.bump();
                    let value = self.expr()?;
                    self.expect(Token::Semi)?;
                    Ok(Stmt::Assign { name, value, pos })
                }
                Token::LBracket => {
                    self.bump();
                    self.expect(Token::LBracket)?;
                    let row = self.expr()?;
                    self.expect(Token::RBracket)?;
                    self.expect(Token::LBracket)?;
                    let col = self.expr()?;
                    self.expect(Token::RBracket)?;
                    self.expect(Token::Assign)?;
                    let value = self.expr()?;
                    self.expect(Token::Semi)?;
                    Ok(Stmt::Store {
                        name,
                        row,
                        col,
                        value,
                        pos,
                    })
                }
                Token::LParen => {
                    let call = self.primary()?;
                    self.expect(Token::Semi)?;
                    Ok(Stmt::Call { call, pos })
                }
                _ => {
                    self.bump();
                    self.error(format!(
                        "expected `=`, `[` or `(`, found {}",
                        self.peek().describe()
                    ))
                }
            },
            other => self.error(format!("expected a statement, found {}", other.describe())),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, CompileError> {
        let pos = self.expect(Token::If)?;
        let cond = self.expr()?;
        let then = self.block()?;
        let els = if self.eat(&Token::Else) {
            if *self.peek() == Token::If {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then,
            els,
            pos,
        })
    }

    fn expr(&mut self) -> Result<Expr, CompileError> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, CompileError> {
        let mut lhs = self.unary()?;
        loop {
            let Some((op, prec)) = binop(self.peek()) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            let pos = self.bump().1;
            let rhs = self.binary(prec + 1)?;
            if prec == 3 && binop(self.peek()).is_some_and(|(_, p)| p == 3) {
                return self.error("comparison operators cannot be chained".to_string());
            }
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, CompileError> {
        let pos = self.pos();
        match self.peek() {
            Token::Minus => {
                self.bump();
                let inner = self.unary()?;
                Ok(match inner.kind {
                    ExprKind::Int(v) => Expr {
                        kind: ExprKind::Int(-v),
                        pos,
                    },
                    ExprKind::Real(v) => Expr {
                        kind: ExprKind::Real(-v),
                        pos,
                    },
                    _ => Expr {
                        kind: ExprKind::Unary {
                            op: UnOp::Neg,
                            expr: Box::new(inner),
                        },
                        pos,
                    },
                })
            }
            Token::Not => {
                self.bump();
                let inner = self.unary()?;
                Ok(Expr {
                    kind: ExprKind::Unary {
                        op: UnOp::Not,
                        expr: Box::new(inner),
                    },
                    pos,
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, CompileError> {
        let (tok, pos) = self.bump();
        let kind = match tok {
            Token::Int(v) => ExprKind::Int(v),
            Token::Real(v) => ExprKind::Real(v),
            Token::True => ExprKind::Bool(true),
            Token::False => ExprKind::Bool(false),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                return Ok(e);
            }
            Token::Ident(name) => match self.peek() {
                Token::LParen => {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Token::RParen {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Token::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Token::RParen)?;
                    ExprKind::Call { name, args }
                }
                Token::LBracket => {
                    self.bump();
                    let row = self.expr()?;
                    self.expect(Token::RBracket)?;
                    self.expect(Token::LBracket)?;
                    let col = self.expr()?;
                    self.expect(Token::RBracket)?;
                    ExprKind::Index {
                        name,
                        row: Box::new(row),
                        col: Box::new(col),
                    }
                }
                _ => ExprKind::Var(name),
            },
            other => {
                return Err(CompileError::new(
                    pos,
                    ErrorKind::Syntax(format!("expected an expression, found {}", other.describe())),
                ))
            }
        };
        Ok(Expr { kind, pos })
    }
}

fn binop(t: &Token) -> Option<(BinOp, u8)> {
    Some(match t {
        Token::Or => (BinOp::Or, 1),
        Token::And => (BinOp::And, 2),
        Token::EqEq => (BinOp::Eq, 3),
        Token::NotEq => (BinOp::Neq, 3),
        Token::Lt => (BinOp::Lt, 3),
        Token::Le => (BinOp::Le, 3),
        Token::Gt => (BinOp::Gt, 3),
        Token::Ge => (BinOp::Ge, 3),
        Token::Plus => (BinOp::Add, 4),
        Token::Minus => (BinOp::Sub, 4),
        Token::Star => (BinOp::Mul, 5),
        Token::Slash => (BinOp::Div, 5),
        Token::Percent => (BinOp::Mod, 5),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;

    fn parse_text(text: &str) -> Result<Program, CompileError> {
        parse(tokenize(text)?)
    }

    fn body_expr(text: &str) -> Expr {
        let p = parse_text(&format!("fn f(): int {{ return {text}; }}")).unwrap();
        match &p.functions[0].body[0] {
            Stmt::Return { value, .. } => value.clone(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let e = body_expr("a + b * c");
        match e.kind {
            ExprKind::Binary { op: BinOp::Add, rhs, .. } => {
                assert!(matches!(rhs.kind, ExprKind::Binary { op: BinOp::Mul, .. }))
            }
            other => panic!("{other:?}"),
        }
        let e = body_expr("a < b and not c || d");
        assert!(matches!(e.kind, ExprKind::Binary { op: BinOp::Or, .. }));
        let e = body_expr("a - b - c");
        match e.kind {
            ExprKind::Binary { op: BinOp::Sub, lhs, .. } => {
                assert!(matches!(lhs.kind, ExprKind::Binary { op: BinOp::Sub, .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(body_expr("-3").kind, ExprKind::Int(-3));
        assert!(matches!(
            body_expr("-x").kind,
            ExprKind::Unary { op: UnOp::Neg, .. }
        ));
    }

    #[test]
    fn annotations_and_statements() {
        let p = parse_text(
            "@shape chain\nfn g(a: matrix, k: real): matrix {\n  for i = 0 to rows(a) { a[i][0] = k; }\n  if k > 1.0 { k = 1.0; } else if k < 0.0 { k = 0.0; }\n  return a;\n}",
        )
        .unwrap();
        let f = &p.functions[0];
        assert_eq!(f.annotation("shape"), Some("chain"));
        assert_eq!(f.params.len(), 2);
        assert_eq!(f.body.len(), 3);
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = parse_text("fn f(): int {\n  x = ;\n}").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, column: 7 });
        let err = parse_text("fn f(): int { return a < b < c; }").unwrap_err();
        assert!(matches!(err.kind, ErrorKind::Syntax(_)));
        let err = parse_text("fn f(): int { return 1; ").unwrap_err();
        assert!(err.to_string().contains("unclosed"));
    }
}
