//! Recursive-descent parsers for frame files and algebra files.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::flags::{validate_algebra, Frame, PolyField, StratifiedAlgebra, ValidationReport, XPoly};
use crate::poly::{Monomial, Polynomial};
use crate::rational::Q;

/// Largest accepted exponent and ambient dimension.
pub const MAX_EXPONENT: u32 = 64;
pub const MAX_DIM: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    SyntaxError(String),
    IndexError(String),
    ZeroDenominator,
    Duplicate(String),
    NotAVectorField(String),
    InvalidAlgebra(ValidationReport),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::SyntaxError(s) => write!(f, "SyntaxError: {s}"),
            ParseErrorKind::IndexError(s) => write!(f, "IndexError: {s}"),
            ParseErrorKind::ZeroDenominator => write!(f, "ZeroDenominator"),
            ParseErrorKind::Duplicate(s) => write!(f, "Duplicate: {s}"),
            ParseErrorKind::NotAVectorField(s) => write!(f, "NotAVectorField: {s}"),
            ParseErrorKind::InvalidAlgebra(r) => write!(f, "InvalidAlgebra: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at line {line}, column {col}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Word(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Word(w) => write!(f, "{w}"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Eq => write!(f, "="),
            Tok::Newline => write!(f, "end of line"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line, col });
            i += 1;
            col += 1;
        } else if c == '\n' {
            out.push(Token { tok: Tok::Newline, line, col });
            i += 1;
            line += 1;
            col = 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == ' ' || c == '\t' || c == '\r' {
            i += 1;
            col += 1;
        } else if c.is_ascii_digit() {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            i += s.len();
            col += s.len();
            out.push(Token { tok: Tok::Int(s.parse().expect("digits")), line: start.0, col: start.1 });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            i += s.len();
            col += s.len();
            out.push(Token { tok: Tok::Word(s), line: start.0, col: start.1 });
        } else {
            return Err(ParseError { line, col, kind: ParseErrorKind::SyntaxError(format!("unexpected character {c:?}")) });
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// `prefix` followed by decimal digits only.
fn indexed(word: &str, prefix: char) -> Option<Option<usize>> {
    let rest = word.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(rest.parse().ok())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Sym {
    X(usize),
    D(usize),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    n: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, kind: ParseErrorKind) -> PResult<T> {
        Err(ParseError { line: t.line, col: t.col, kind })
    }

    fn syntax<T>(&self, t: &Token, expected: &str) -> PResult<T> {
        self.err(t, ParseErrorKind::SyntaxError(format!("expected {expected}, found {}", t.tok)))
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn expect_line_end(&mut self) -> PResult<()> {
        let t = self.bump();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => self.syntax(&t, "end of line"),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Token> {
        let t = self.bump();
        match &t.tok {
            Tok::Word(w) if w == kw => Ok(t),
            _ => self.syntax(&t, &format!("'{kw}'")),
        }
    }

    fn int(&mut self) -> PResult<(BigInt, Token)> {
        let t = self.bump();
        match &t.tok {
            Tok::Int(i) => Ok((i.clone(), t)),
            _ => self.syntax(&t, "an integer"),
        }
    }

    fn small_int(&mut self, max: usize, what: &str) -> PResult<usize> {
        let (i, t) = self.int()?;
        match i.to_usize() {
            Some(v) if v <= max => Ok(v),
            _ => self.err(&t, ParseErrorKind::IndexError(format!("{what} {i} exceeds {max}"))),
        }
    }

    fn rational(&mut self) -> PResult<Q> {
        let (num, _) = self.int()?;
        if self.peek().tok == Tok::Slash {
            self.bump();
            let (den, t) = self.int()?;
            if den.is_zero() {
                return self.err(&t, ParseErrorKind::ZeroDenominator);
            }
            Ok(Q::new(num, den))
        } else {
            Ok(Q::from_integer(num))
        }
    }

    fn expr(&mut self) -> PResult<Polynomial<Sym>> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> PResult<Polynomial<Sym>> {
        let mut acc = self.factor()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Polynomial<Sym>> {
        let mut base = self.primary()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            let (e, t) = self.int()?;
            let e = match e.to_u32() {
                Some(e) if e <= MAX_EXPONENT => e,
                _ => return self.err(&t, ParseErrorKind::SyntaxError(format!("exponent {e} exceeds {MAX_EXPONENT}"))),
            };
            base = base.pow(e);
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Polynomial<Sym>> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(_) => Ok(Polynomial::constant(self.rational()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return self.syntax(&close, "')'");
                }
                Ok(e)
            }
            Tok::Word(w) => {
                let (sym, idx) = if let Some(i) = indexed(w, 'x') {
                    (Sym::X as fn(usize) -> Sym, i)
                } else if let Some(i) = indexed(w, 'd') {
                    (Sym::D as fn(usize) -> Sym, i)
                } else {
                    return self.syntax(&t, "a rational, x<i>, d<i> or '('");
                };
                match idx {
                    Some(i) if (1..=self.n).contains(&i) => {
                        self.bump();
                        Ok(Polynomial::var(sym(i - 1)))
                    }
                    _ => self.err(&t, ParseErrorKind::IndexError(format!("{w} outside 1..{}", self.n))),
                }
            }
            _ => self.syntax(&t, "a rational, x<i>, d<i> or '('"),
        }
    }
}

/// Splits a polynomial in x and d symbols into a vector field.
fn to_field(p: &Polynomial<Sym>, n: usize) -> Result<PolyField, String> {
    let mut comps = vec![XPoly::zero(); n];
    for (m, c) in p.terms() {
        let ds: Vec<(usize, u32)> = m.factors().iter().filter_map(|(s, e)| if let Sym::D(j) = s { Some((*j, *e)) } else { None }).collect();
        let j = match ds.as_slice() {
            [(j, 1)] => *j,
            [] => return Err("a term has no derivation d<i>".into()),
            _ => return Err("a term is not linear in the derivations d<i>".into()),
        };
        let xs = Monomial::from_factors(m.factors().iter().filter_map(|(s, e)| if let Sym::X(i) = s { Some((*i, *e)) } else { None }));
        comps[j].add_term(xs, c.clone());
    }
    Ok(PolyField::new(comps))
}

pub fn parse_frame(text: &str) -> Result<Frame, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, n: 0 };
    p.skip_newlines();
    p.keyword("dim")?;
    let dim_tok = p.peek().clone();
    let n = p.small_int(MAX_DIM, "dimension")?;
    if n == 0 {
        return p.err(&dim_tok, ParseErrorKind::IndexError("dimension must be positive".into()));
    }
    p.n = n;
    p.expect_line_end()?;
    let mut names = BTreeSet::new();
    let mut fields = Vec::new();
    loop {
        p.skip_newlines();
        let t = p.bump();
        let name = match &t.tok {
            Tok::Eof => break,
            Tok::Word(w) if indexed(w, 'x').is_none() && indexed(w, 'd').is_none() && w != "dim" => w.clone(),
            _ => return p.syntax(&t, "a field name"),
        };
        if !names.insert(name.clone()) {
            return p.err(&t, ParseErrorKind::Duplicate(format!("field {name} defined twice")));
        }
        let eq = p.bump();
        if eq.tok != Tok::Eq {
            return p.syntax(&eq, "'='");
        }
        let start = p.peek().clone();
        let e = p.expr()?;
        p.expect_line_end()?;
        match to_field(&e, n) {
            Ok(f) => fields.push(f),
            Err(msg) => return p.err(&start, ParseErrorKind::NotAVectorField(msg)),
        }
    }
    if fields.is_empty() {
        let t = p.peek().clone();
        return p.syntax(&t, "at least one field line");
    }
    Ok(Frame::new(n, fields).expect("indices validated while parsing"))
}

/// Parses an algebra file and validates the resulting algebra.
pub fn parse_algebra(text: &str) -> Result<StratifiedAlgebra, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, n: 0 };
    p.skip_newlines();
    let head = p.keyword("layers")?;
    let mut dims = Vec::new();
    while let Tok::Int(_) = p.peek().tok {
        let t = p.peek().clone();
        let d = p.small_int(MAX_DIM, "layer dimension")?;
        if d == 0 {
            return p.err(&t, ParseErrorKind::IndexError("layer dimensions must be positive".into()));
        }
        dims.push(d);
    }
    if dims.is_empty() {
        let t = p.peek().clone();
        return p.syntax(&t, "a layer dimension");
    }
    let n: usize = dims.iter().sum();
    if n > MAX_DIM {
        return p.err(&head, ParseErrorKind::IndexError(format!("total dimension {n} exceeds {MAX_DIM}")));
    }
    p.expect_line_end()?;
    let evar = |p: &mut Parser| -> PResult<usize> {
        let t = p.bump();
        match &t.tok {
            Tok::Word(w) => match indexed(w, 'e') {
                Some(Some(i)) if (1..=n).contains(&i) => Ok(i - 1),
                Some(_) => p.err(&t, ParseErrorKind::IndexError(format!("{w} outside 1..{n}"))),
                None => p.syntax(&t, "a basis element e<i>"),
            },
            _ => p.syntax(&t, "a basis element e<i>"),
        }
    };
    let mut seen = BTreeSet::new();
    let mut brackets = Vec::new();
    loop {
        p.skip_newlines();
        if p.peek().tok == Tok::Eof {
            break;
        }
        p.keyword("bracket")?;
        let it = p.peek().clone();
        let i = evar(&mut p)?;
        let j = evar(&mut p)?;
        if i >= j {
            return p.err(&it, ParseErrorKind::SyntaxError(format!("bracket pair must satisfy i < j, got e{} e{}", i + 1, j + 1)));
        }
        if !seen.insert((i, j)) {
            return p.err(&it, ParseErrorKind::Duplicate(format!("bracket e{} e{} given twice", i + 1, j + 1)));
        }
        let eq = p.bump();
        if eq.tok != Tok::Eq {
            return p.syntax(&eq, "'='");
        }
        let mut terms: Vec<(usize, Q)> = Vec::new();
        let mut first = true;
        loop {
            let mut coef = Q::one();
            match p.peek().tok {
                Tok::Plus if !first => {
                    p.bump();
                }
                Tok::Minus => {
                    p.bump();
                    coef = -coef;
                }
                _ if first => {}
                _ => break,
            }
            let t = p.peek().clone();
            match &t.tok {
                Tok::Int(_) => {
                    let c = p.rational()?;
                    if p.peek().tok == Tok::Star {
                        p.bump();
                        coef *= c;
                        let m = evar(&mut p)?;
                        terms.push((m, coef));
                    } else if c.is_zero() && first && matches!(p.peek().tok, Tok::Newline | Tok::Eof) {
                        break;
                    } else {
                        let t = p.peek().clone();
                        return p.syntax(&t, "'*'");
                    }
                }
                Tok::Word(_) => {
                    let m = evar(&mut p)?;
                    terms.push((m, coef));
                }
                _ => return p.syntax(&t, "a term"),
            }
            first = false;
        }
        p.expect_line_end()?;
        brackets.push((i, j, terms));
    }
    let alg = StratifiedAlgebra::from_brackets(dims, &brackets).expect("indices validated while parsing");
    let report = validate_algebra(&alg);
    if !report.valid {
        return Err(ParseError { line: head.line, col: head.col, kind: ParseErrorKind::InvalidAlgebra(report) });
    }
    Ok(alg)
}
