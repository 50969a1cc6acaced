//! Surface syntax shared by PCF and EPCF.
//!
//! ```text
//! term    := lam | app
//! lam     := '\' ident+ '.' term
//! app     := atom+ [lam]
//! atom    := primary postfix*
//! primary := ident | nat | '(' term ')' | 'fix' atom | 'pred' atom | 'succ' atom
//!          | 'ifz' atom atom atom
//! postfix := '[' ident ':=' term ']'
//! ```
//!
//! `#` starts a comment running to the end of the line.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::epcf::ETerm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Assign,
    Fix,
    Pred,
    Succ,
    Ifz,
    Ident(String),
    Nat(u64),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Nat(n) => format!("numeral {n}"),
            Tok::Eof => "end of input".into(),
            t => format!("{t:?}"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = it.peek() {
                if c == '\n' {
                    break;
                }
                it.next();
            }
            continue;
        }
        let tok = match c {
            '\\' | 'λ' => {
                it.next();
                Tok::Lambda
            }
            '.' => {
                it.next();
                Tok::Dot
            }
            '(' => {
                it.next();
                Tok::LParen
            }
            ')' => {
                it.next();
                Tok::RParen
            }
            '[' => {
                it.next();
                Tok::LBrack
            }
            ']' => {
                it.next();
                Tok::RBrack
            }
            ':' => {
                it.next();
                match it.next() {
                    Some((_, '=')) => Tok::Assign,
                    _ => return Err(error_at(src, pos, "expected ':='")),
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: u64 = 0;
                while let Some(&(_, d)) = it.peek() {
                    let Some(v) = d.to_digit(10) else { break };
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(v as u64))
                        .ok_or_else(|| error_at(src, pos, "numeral too large"))?;
                    it.next();
                }
                Tok::Nat(n)
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if !is_ident_char(d) {
                        break;
                    }
                    s.push(d);
                    it.next();
                }
                match s.as_str() {
                    "fix" => Tok::Fix,
                    "pred" => Tok::Pred,
                    "succ" => Tok::Succ,
                    "ifz" => Tok::Ifz,
                    _ => Tok::Ident(s),
                }
            }
            _ => return Err(error_at(src, pos, &format!("unexpected character '{c}'"))),
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

fn error_at(src: &str, pos: usize, msg: &str) -> ParseError {
    let before = &src[..pos.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    ParseError { line, col, msg: msg.to_string() }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: &str) -> ParseError {
        error_at(self.src, self.toks[self.pos].1, msg)
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            t => {
                self.pos -= 1;
                Err(self.err(&format!("expected identifier, found {}", t.describe())))
            }
        }
    }

    fn term(&mut self) -> Result<ETerm, ParseError> {
        if *self.peek() == Tok::Lambda {
            return self.lam();
        }
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Tok::Lambda => {
                    let l = self.lam()?;
                    return Ok(ETerm::app(t, l));
                }
                tok if starts_atom(tok) => {
                    let a = self.atom()?;
                    t = ETerm::app(t, a);
                }
                _ => return Ok(t),
            }
        }
    }

    fn lam(&mut self) -> Result<ETerm, ParseError> {
        self.expect(Tok::Lambda)?;
        let mut names = vec![self.ident()?];
        while let Tok::Ident(_) = self.peek() {
            names.push(self.ident()?);
        }
        self.expect(Tok::Dot)?;
        let body = self.term()?;
        Ok(names.into_iter().rev().fold(body, |b, x| ETerm::lam(&x, b)))
    }

    fn atom(&mut self) -> Result<ETerm, ParseError> {
        let mut t = self.primary()?;
        while *self.peek() == Tok::LBrack {
            self.bump();
            let x = self.ident()?;
            self.expect(Tok::Assign)?;
            let n = self.term()?;
            self.expect(Tok::RBrack)?;
            t = ETerm::esub(t, &x, n);
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<ETerm, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(ETerm::var(&s)),
            Tok::Nat(n) => Ok(ETerm::numeral(n)),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Fix => Ok(ETerm::Fix(Arc::new(self.atom()?))),
            Tok::Pred => Ok(ETerm::Pred(Arc::new(self.atom()?))),
            Tok::Succ => Ok(ETerm::Succ(Arc::new(self.atom()?))),
            Tok::Ifz => {
                let l = self.atom()?;
                let m = self.atom()?;
                let n = self.atom()?;
                Ok(ETerm::Ifz(Arc::new(l), Arc::new(m), Arc::new(n)))
            }
            t => {
                self.pos = self.pos.saturating_sub(1);
                if t == Tok::Eof {
                    self.pos = self.toks.len() - 1;
                }
                Err(self.err(&format!("expected a term, found {}", t.describe())))
            }
        }
    }
}

fn starts_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_) | Tok::Nat(_) | Tok::LParen | Tok::Fix | Tok::Pred | Tok::Succ | Tok::Ifz
    )
}

/// Parses a (possibly open) EPCF term.
pub fn parse_term(src: &str) -> Result<ETerm, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err(&format!("unexpected {}", p.peek().describe())));
    }
    Ok(t)
}

/// Renders a term in surface syntax; `parse_term` inverts it.
pub fn print_term(t: &ETerm) -> String {
    let mut s = String::new();
    print_top(t, &mut s);
    s
}

fn print_top(t: &ETerm, out: &mut String) {
    crate::grow(|| match t {
        ETerm::Lam(..) => {
            out.push('\\');
            let mut cur = t;
            let mut first = true;
            while let ETerm::Lam(x, b) = cur {
                if !first {
                    out.push(' ');
                }
                out.push_str(x);
                first = false;
                cur = b;
            }
            out.push_str(". ");
            print_top(cur, out);
        }
        ETerm::App(..) => {
            let mut spine = Vec::new();
            let mut cur = t;
            while let ETerm::App(f, a) = cur {
                spine.push(&**a);
                cur = f;
            }
            print_atom(cur, out);
            for a in spine.iter().rev() {
                out.push(' ');
                print_atom(a, out);
            }
        }
        _ => print_keyword(t, out),
    })
}

/// Keyword forms and atoms.
fn print_keyword(t: &ETerm, out: &mut String) {
    match t {
        ETerm::Fix(m) => {
            out.push_str("fix ");
            print_atom(m, out);
        }
        ETerm::Pred(m) => {
            out.push_str("pred ");
            print_atom(m, out);
        }
        ETerm::Succ(m) if t.as_numeral().is_none() => {
            out.push_str("succ ");
            print_atom(m, out);
        }
        ETerm::Ifz(l, m, n) => {
            out.push_str("ifz ");
            print_atom(l, out);
            out.push(' ');
            print_atom(m, out);
            out.push(' ');
            print_atom(n, out);
        }
        _ => print_atom(t, out),
    }
}

fn print_atom(t: &ETerm, out: &mut String) {
    if let Some(n) = t.as_numeral() {
        let _ = write!(out, "{n}");
        return;
    }
    match t {
        ETerm::Var(x) => out.push_str(x),
        ETerm::ESub(m, x, n) => {
            print_atom(m, out);
            let _ = write!(out, "[{x} := ");
            print_top(n, out);
            out.push(']');
        }
        _ => {
            out.push('(');
            print_top(t, out);
            out.push(')');
        }
    }
}
