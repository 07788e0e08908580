//! Recursive-descent parser for the expression grammar.
//!
//! Precedence, tightest first: `^` (integer exponent, sign allowed), unary
//! minus, `* /`, `+ -`. Binary operators associate to the left.

use num::{BigInt, BigRational, Num};

use super::expr::Expression;
use super::vars::VariableTable;
use super::SymError;

/// Syntax tree of a parsed expression, before normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Integer(BigInt),
    Var(usize),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i32),
}

impl Ast {
    pub fn to_expression(&self, nvars: usize) -> Result<Expression, SymError> {
        Ok(match self {
            Ast::Integer(k) => Expression::constant(nvars, BigRational::from_integer(k.clone())),
            Ast::Var(v) => Expression::var(nvars, *v),
            Ast::Neg(a) => -a.to_expression(nvars)?,
            Ast::Add(a, b) => a.to_expression(nvars)? + b.to_expression(nvars)?,
            Ast::Sub(a, b) => a.to_expression(nvars)? - b.to_expression(nvars)?,
            Ast::Mul(a, b) => a.to_expression(nvars)? * b.to_expression(nvars)?,
            Ast::Div(a, b) => a.to_expression(nvars)?.checked_div(&b.to_expression(nvars)?)?,
            Ast::Pow(a, e) => a.to_expression(nvars)?.pow(*e)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, SymError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let k = BigInt::from_str_radix(&lx.src[start..i], 10).expect("digits");
                lx.toks.push((Tok::Int(k), start));
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(lx.src[start..i].to_string()), start));
            } else if "+-*/^".contains(c) {
                lx.toks.push((Tok::Op(c), i));
                i += 1;
            } else if c == '(' {
                lx.toks.push((Tok::LParen, i));
                i += 1;
            } else if c == ')' {
                lx.toks.push((Tok::RParen, i));
                i += 1;
            } else {
                return Err(SymError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
                });
            }
        }
        lx.toks.push((Tok::End, src.len()));
        Ok(lx.toks)
    }
}

struct Parser<'t> {
    toks: &'t [(Tok, usize)],
    pos: usize,
    vars: &'t VariableTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> SymError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Int(k) => format!("`{k}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
        };
        SymError::Syntax {
            offset: self.offset(),
            message: format!("{message}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Ast, SymError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast, SymError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, SymError> {
        if self.peek() == &Tok::Op('-') {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, SymError> {
        let base = self.primary()?;
        if self.peek() == &Tok::Op('^') {
            self.bump();
            let e = self.exponent()?;
            return Ok(Ast::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, SymError> {
        let paren = self.peek() == &Tok::LParen;
        if paren {
            self.bump();
        }
        let neg = self.peek() == &Tok::Op('-');
        if neg {
            self.bump();
        }
        let at = self.offset();
        let k = match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                k
            }
            _ => return Err(self.error("expected an integer exponent")),
        };
        let k: i32 = i32::try_from(&k).map_err(|_| SymError::Syntax {
            offset: at,
            message: "exponent out of range".into(),
        })?;
        if paren {
            if self.peek() != &Tok::RParen {
                return Err(self.error("expected `)`"));
            }
            self.bump();
        }
        Ok(if neg { -k } else { k })
    }

    fn primary(&mut self) -> Result<Ast, SymError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                Ok(Ast::Integer(k))
            }
            Tok::Ident(name) => match self.vars.lookup(&name) {
                Some(v) => {
                    self.bump();
                    Ok(Ast::Var(v))
                }
                None => Err(SymError::UnknownIdentifier { name, offset: at }),
            },
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if self.peek() != &Tok::RParen {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("expected a number, identifier or `(`")),
        }
    }
}

/// Parses `text` into a syntax tree.
pub fn parse_ast(text: &str, vars: &VariableTable) -> Result<Ast, SymError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks: &toks, pos: 0, vars };
    let ast = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ast)
}

/// Parses `text` into a canonical expression.
pub fn parse_expression(text: &str, vars: &VariableTable) -> Result<Expression, SymError> {
    parse_ast(text, vars)?.to_expression(vars.nvars())
}

/// Parses a rational literal such as `3`, `-2/5`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str_radix(n, 10).ok()?;
    let d = BigInt::from_str_radix(d, 10).ok()?;
    if d == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> VariableTable {
        VariableTable::new(&["x", "y", "z"], &[]).unwrap()
    }

    #[test]
    fn zero_parses_to_zero() {
        assert!(parse_expression("0", &table()).unwrap().is_zero());
    }

    #[test]
    fn trailing_operator_reports_offset() {
        match parse_expression("dx +", &table()) {
            Err(SymError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_named() {
        match parse_expression("dx + w", &table()) {
            Err(SymError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "w");
                assert_eq!(offset, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let t = table();
        let a = parse_expression("-x^2", &t).unwrap();
        let b = parse_expression("-(x*x)", &t).unwrap();
        assert_eq!(a, b);
        let c = parse_expression("1/2*dx^2", &t).unwrap();
        let d = parse_expression("(dx^2)/2", &t).unwrap();
        assert_eq!(c, d);
        let e = parse_expression("z^-2", &t).unwrap();
        let f = parse_expression("1/(z*z)", &t).unwrap();
        assert_eq!(e, f);
        assert_eq!(parse_expression("x^(-1)", &t).unwrap(), parse_expression("1/x", &t).unwrap());
    }

    #[test]
    fn explicit_zero_division_is_rejected() {
        assert!(matches!(parse_expression("1/(x-x)", &table()), Err(SymError::DivisionByZero)));
    }

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("-2/4"), Some(BigRational::new((-1).into(), 2.into())));
        assert_eq!(parse_rational("7"), Some(BigRational::from_integer(7.into())));
        assert_eq!(parse_rational("1/0"), None);
    }
}
