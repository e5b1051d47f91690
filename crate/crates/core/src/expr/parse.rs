use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{message} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError { position, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn scan_number(chars: &[char], start: usize) -> (usize, bool) {
    let mut i = start;
    let mut integer = true;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        integer = false;
        i += 1;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            integer = false;
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    (i, integer)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let (end, integer) = scan_number(&chars, i);
            let text: String = chars[i..end].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::new(i, format!("malformed number '{text}'")))?;
            out.push(Token { tok: Tok::Num { value, integer }, pos: i });
            i = end;
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos: start });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Sym(c), pos: i });
            i += 1;
        } else {
            return Err(ParseError::new(i, format!("unexpected character '{c}'")));
        }
    }
    out.push(Token { tok: Tok::End, pos: chars.len() });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::new(self.peek().pos, format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let n = self.exponent()?;
        if self.peek().tok == Tok::Sym('^') {
            return Err(ParseError::new(self.peek().pos, "chained '^' is ambiguous; use parentheses"));
        }
        Ok(Expr::pow(base, n))
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let paren = self.eat('(');
        let negative = self.eat('-');
        let tok = self.bump();
        let n = match tok.tok {
            Tok::Num { value, integer: true } if value <= f64::from(i32::MAX) => value as i32,
            Tok::Num { .. } => {
                return Err(ParseError::new(tok.pos, "exponent must be an integer literal"))
            }
            _ => return Err(ParseError::new(tok.pos, "exponent must be an integer literal")),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.bump();
        match tok.tok {
            Tok::Num { value, .. } => Ok(Expr::real(value)),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                _ => match Func::from_name(&name) {
                    Some(f) => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::func(f, arg))
                    }
                    None => Err(ParseError::new(tok.pos, format!("unknown symbol '{name}'"))),
                },
            },
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Sym(c) => Err(ParseError::new(tok.pos, format!("unexpected '{c}'"))),
            Tok::End => Err(ParseError::new(tok.pos, "unexpected end of input")),
        }
    }
}

/// Parse an expression in the single variable `x`.
///
/// Grammar: decimal literals, `x`, `i`, binary `+ - * /`, `^` with an
/// integer-literal exponent, parentheses and `exp sin cos sinh cosh sqrt log`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { tokens: tokenize(source)?, at: 0 };
    let e = p.expr()?;
    match p.peek().tok {
        Tok::End => Ok(e),
        _ => Err(ParseError::new(p.peek().pos, "unexpected trailing input")),
    }
}

/// Replace every whole-word occurrence of `name` with a parenthesized numeric
/// literal. Used to bake the shift `k` into source text before parsing.
pub fn substitute_param(source: &str, name: &str, value: f64) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() || c == '.' {
            let (end, _) = scan_number(&chars, i);
            out.extend(&chars[i..end]);
            i = end;
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == name {
                out.push_str(&format!("({value:?})"));
            } else {
                out.push_str(&word);
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}
