use super::{CompileError, ErrorKind, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Ident(String),
    Int(i64),
    Real(f64),
    Fn,
    If,
    Else,
    While,
    For,
    To,
    Return,
    True,
    False,
    And,
    Or,
    Not,
    TyInt,
    TyReal,
    TyBool,
    TyMatrix,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    At,
    Eof,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Int(v) => format!("integer {v}"),
            Token::Real(v) => format!("number {v}"),
            Token::Eof => "end of input".to_string(),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Token) -> &'static str {
    match t {
        Token::Fn => "fn",
        Token::If => "if",
        Token::Else => "else",
        Token::While => "while",
        Token::For => "for",
        Token::To => "to",
        Token::Return => "return",
        Token::True => "true",
        Token::False => "false",
        Token::And => "and",
        Token::Or => "or",
        Token::Not => "not",
        Token::TyInt => "int",
        Token::TyReal => "real",
        Token::TyBool => "bool",
        Token::TyMatrix => "matrix",
        Token::LParen => "(",
        Token::RParen => ")",
        Token::LBrace => "{",
        Token::RBrace => "}",
        Token::LBracket => "[",
        Token::RBracket => "]",
        Token::Comma => ",",
        Token::Colon => ":",
        Token::Semi => ";",
        Token::Assign => "=",
        Token::EqEq => "==",
        Token::NotEq => "!=",
        Token::Lt => "<",
        Token::Le => "<=",
        Token::Gt => ">",
        Token::Ge => ">=",
        Token::Plus => "+",
        Token::Minus => "-",
        Token::Star => "*",
        Token::Slash => "/",
        Token::Percent => "%",
        Token::At => "@",
        _ => "?",
    }
}

fn keyword(word: &str) -> Option<Token> {
    Some(match word {
        "fn" => Token::Fn,
        "if" => Token::If,
        "else" => Token::Else,
        "while" => Token::While,
        "for" => Token::For,
        "to" => Token::To,
        "return" => Token::Return,
        "true" => Token::True,
        "false" => Token::False,
        "and" => Token::And,
        "or" => Token::Or,
        "not" => Token::Not,
        "int" => Token::TyInt,
        "real" => Token::TyReal,
        "bool" => Token::TyBool,
        "matrix" => Token::TyMatrix,
        _ => return None,
    })
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Token, Pos)>, CompileError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut pos = Pos { line: 1, column: 1 };

    let advance = |i: &mut usize, pos: &mut Pos| {
        if chars[*i] == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
        *i += 1;
    };

    while i < chars.len() {
        let c = chars[i];
        let start = pos;
        if c.is_whitespace() {
            advance(&mut i, &mut pos);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut pos);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            let mut is_real = false;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_digit() {
                    s.push(d);
                } else if d == '.' && !is_real && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()) {
                    is_real = true;
                    s.push(d);
                } else {
                    break;
                }
                advance(&mut i, &mut pos);
            }
            let tok = if is_real {
                Token::Real(s.parse().expect("digits and one dot"))
            } else {
                Token::Int(s.parse().map_err(|_| {
                    CompileError::new(start, ErrorKind::Syntax(format!("integer literal {s} out of range")))
                })?)
            };
            out.push((tok, start));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(&mut i, &mut pos);
            }
            out.push((keyword(&s).unwrap_or(Token::Ident(s)), start));
            continue;
        }
        let two = chars.get(i + 1).copied();
        let (tok, width) = match (c, two) {
            ('=', Some('=')) => (Token::EqEq, 2),
            ('!', Some('=')) => (Token::NotEq, 2),
            ('<', Some('=')) => (Token::Le, 2),
            ('>', Some('=')) => (Token::Ge, 2),
            ('&', Some('&')) => (Token::And, 2),
            ('|', Some('|')) => (Token::Or, 2),
            ('=', _) => (Token::Assign, 1),
            ('!', _) => (Token::Not, 1),
            ('<', _) => (Token::Lt, 1),
            ('>', _) => (Token::Gt, 1),
            ('(', _) => (Token::LParen, 1),
            (')', _) => (Token::RParen, 1),
            ('{', _) => (Token::LBrace, 1),
            ('}', _) => (Token::RBrace, 1),
            ('[', _) => (Token::LBracket, 1),
            (']', _) => (Token::RBracket, 1),
            (',', _) => (Token::Comma, 1),
            (':', _) => (Token::Colon, 1),
            (';', _) => (Token::Semi, 1),
            ('+', _) => (Token::Plus, 1),
            ('-', _) => (Token::Minus, 1),
            ('*', _) => (Token::Star, 1),
            ('/', _) => (Token::Slash, 1),
            ('%', _) => (Token::Percent, 1),
            ('@', _) => (Token::At, 1),
            _ => {
                return Err(CompileError::new(
                    start,
                    ErrorKind::Syntax(format!("unexpected character {c:?}")),
                ))
            }
        };
        for _ in 0..width {
            advance(&mut i, &mut pos);
        }
        out.push((tok, start));
    }
    out.push((Token::Eof, pos));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("fn f(a:int) // c\n { x = 2.5 <= 3; }").unwrap();
        assert_eq!(toks[0], (Token::Fn, Pos { line: 1, column: 1 }));
        assert_eq!(toks[1].0, Token::Ident("f".into()));
        let real = toks.iter().find(|(t, _)| matches!(t, Token::Real(_))).unwrap();
        assert_eq!(real.0, Token::Real(2.5));
        assert_eq!(real.1, Pos { line: 2, column: 8 });
        assert!(toks.iter().any(|(t, _)| *t == Token::Le));
        assert_eq!(toks.last().unwrap().0, Token::Eof);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("fn f() { $ }").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 10 });
    }
}
