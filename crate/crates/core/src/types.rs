//! Simple types shared by PCF, EPCF and EAMs, plus a small unification engine.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// `int` or an arrow type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Int,
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    /// `a1 -> ... -> an -> res`.
    pub fn arrows(args: impl IntoIterator<Item = SimpleType>, res: SimpleType) -> SimpleType {
        let args: Vec<_> = args.into_iter().collect();
        args.into_iter().rev().fold(res, |acc, a| SimpleType::arrow(a, acc))
    }

    /// Splits `b1 -> ... -> bk -> int` into `([b1..bk], int)`.
    pub fn spine(&self) -> (Vec<&SimpleType>, &SimpleType) {
        let mut args = Vec::new();
        let mut cur = self;
        while let SimpleType::Arrow(a, b) = cur {
            args.push(&**a);
            cur = b;
        }
        (args, cur)
    }

    pub fn arity(&self) -> usize {
        self.spine().0.len()
    }

    pub fn is_int(&self) -> bool {
        matches!(self, SimpleType::Int)
    }

    pub fn to_ty(&self) -> Ty {
        match self {
            SimpleType::Int => Ty::Int,
            SimpleType::Arrow(a, b) => Ty::arrow(a.to_ty(), b.to_ty()),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Int => write!(f, "int"),
            SimpleType::Arrow(a, b) => {
                if a.is_int() {
                    write!(f, "int -> {b}")
                } else {
                    write!(f, "({a}) -> {b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type syntax error at offset {pos}: {msg}")]
pub struct TypeParseError {
    pub pos: usize,
    pub msg: String,
}

impl FromStr for SimpleType {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TyParser { src: s.as_bytes(), pos: 0 };
        let t = p.arrow()?;
        p.ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }
}

struct TyParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TyParser<'_> {
    fn err(&self, msg: &str) -> TypeParseError {
        TypeParseError { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn arrow(&mut self) -> Result<SimpleType, TypeParseError> {
        let lhs = self.atom()?;
        self.ws();
        if self.src[self.pos..].starts_with(b"->") {
            self.pos += 2;
            let rhs = self.arrow()?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else if self.src[self.pos..].starts_with("→".as_bytes()) {
            self.pos += "→".len();
            let rhs = self.arrow()?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn atom(&mut self) -> Result<SimpleType, TypeParseError> {
        self.ws();
        if self.pos >= self.src.len() {
            return Err(self.err("unexpected end of type"));
        }
        if self.src[self.pos] == b'(' {
            self.pos += 1;
            let t = self.arrow()?;
            self.ws();
            if self.pos < self.src.len() && self.src[self.pos] == b')' {
                self.pos += 1;
                Ok(t)
            } else {
                Err(self.err("expected ')'"))
            }
        } else {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                self.pos += 1;
            }
            match &self.src[start..self.pos] {
                b"int" | b"Int" | b"nat" => Ok(SimpleType::Int),
                _ => {
                    self.pos = start;
                    Err(self.err("expected 'int' or '('"))
                }
            }
        }
    }
}

/// Type with unification variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Var(u32),
    Arrow(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::Arrow(Box::new(a), Box::new(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify int with an arrow type")]
    Clash,
    #[error("occurs check failed")]
    Occurs,
}

/// Union-find style substitution over [`Ty`] variables.
#[derive(Default, Debug, Clone)]
pub struct Unifier {
    binds: Vec<Option<Ty>>,
}

impl Unifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Ty {
        self.binds.push(None);
        Ty::Var((self.binds.len() - 1) as u32)
    }

    /// Shallow resolution of bound variables.
    pub fn shallow(&self, t: &Ty) -> Ty {
        let mut cur = t.clone();
        while let Ty::Var(v) = cur {
            match &self.binds[v as usize] {
                Some(b) => cur = b.clone(),
                None => break,
            }
        }
        cur
    }

    fn occurs(&self, v: u32, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Int => false,
            Ty::Var(w) => w == v,
            Ty::Arrow(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
        }
    }

    pub fn unify(&mut self, a: &Ty, b: &Ty) -> Result<(), UnifyError> {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (a, b) {
            (Ty::Int, Ty::Int) => Ok(()),
            (Ty::Var(v), Ty::Var(w)) if v == w => Ok(()),
            (Ty::Var(v), t) | (t, Ty::Var(v)) => {
                if self.occurs(v, &t) {
                    return Err(UnifyError::Occurs);
                }
                self.binds[v as usize] = Some(t);
                Ok(())
            }
            (Ty::Arrow(a1, b1), Ty::Arrow(a2, b2)) => {
                self.unify(&a1, &a2)?;
                self.unify(&b1, &b2)
            }
            _ => Err(UnifyError::Clash),
        }
    }

    /// Fully applies the substitution.
    pub fn zonk(&self, t: &Ty) -> Ty {
        match self.shallow(t) {
            Ty::Arrow(a, b) => Ty::arrow(self.zonk(&a), self.zonk(&b)),
            other => other,
        }
    }

    /// Applies the substitution and sends every remaining variable to `int`.
    pub fn default_int(&self, t: &Ty) -> SimpleType {
        match self.shallow(t) {
            Ty::Int | Ty::Var(_) => SimpleType::Int,
            Ty::Arrow(a, b) => SimpleType::arrow(self.default_int(&a), self.default_int(&b)),
        }
    }
}

/// A closed type with its variables numbered `0..vars`, instantiated afresh at each use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub ty: Ty,
    pub vars: u32,
}

impl Scheme {
    /// Generalizes every free variable of `t` under `u`.
    pub fn generalize(u: &Unifier, t: &Ty) -> Scheme {
        let mut map = rustc_hash::FxHashMap::default();
        let ty = renumber(&u.zonk(t), &mut map);
        Scheme { ty, vars: map.len() as u32 }
    }

    pub fn instantiate(&self, u: &mut Unifier) -> Ty {
        let base: Vec<Ty> = (0..self.vars).map(|_| u.fresh()).collect();
        subst_vars(&self.ty, &base)
    }

    pub fn mono(t: SimpleType) -> Scheme {
        Scheme { ty: t.to_ty(), vars: 0 }
    }
}

fn renumber(t: &Ty, map: &mut rustc_hash::FxHashMap<u32, u32>) -> Ty {
    match t {
        Ty::Int => Ty::Int,
        Ty::Var(v) => {
            let n = map.len() as u32;
            Ty::Var(*map.entry(*v).or_insert(n))
        }
        Ty::Arrow(a, b) => Ty::arrow(renumber(a, map), renumber(b, map)),
    }
}

fn subst_vars(t: &Ty, base: &[Ty]) -> Ty {
    match t {
        Ty::Int => Ty::Int,
        Ty::Var(v) => base[*v as usize].clone(),
        Ty::Arrow(a, b) => Ty::arrow(subst_vars(a, base), subst_vars(b, base)),
    }
}
