//! PCF: locally nameless terms, typing, weak head reduction and big-step evaluation.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::epcf::ETerm;
use crate::syntax::{parse_term, print_term, ParseError};
use crate::types::{SimpleType, Ty, Unifier};

pub type Name = Arc<str>;

/// Nesting bound for the big-step evaluators; deeper derivations count as fuel exhaustion.
pub const MAX_EVAL_DEPTH: usize = 200_000;

/// A PCF term. Bound variables are de Bruijn indices, free ones are named.
/// Binder names are kept only as printing hints and ignored by `==`.
#[derive(Clone, Debug)]
pub enum Term {
    Var(usize),
    Free(Name),
    Lam(Name, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    Fix(Arc<Term>),
    Zero,
    Pred(Arc<Term>),
    Succ(Arc<Term>),
    Ifz(Arc<Term>, Arc<Term>, Arc<Term>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        use Term::*;
        if std::ptr::eq(self, other) {
            return true;
        }
        match (self, other) {
            (Var(a), Var(b)) => a == b,
            (Free(a), Free(b)) => a == b,
            (Lam(_, a), Lam(_, b)) => a == b,
            (App(a, b), App(c, d)) => a == c && b == d,
            (Fix(a), Fix(b)) | (Pred(a), Pred(b)) | (Succ(a), Succ(b)) => a == b,
            (Zero, Zero) => true,
            (Ifz(a, b, c), Ifz(d, e, f)) => a == d && b == e && c == f,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, h: &mut H) {
        std::mem::discriminant(self).hash(h);
        match self {
            Term::Var(i) => i.hash(h),
            Term::Free(x) => x.hash(h),
            Term::Lam(_, b) | Term::Fix(b) | Term::Pred(b) | Term::Succ(b) => b.hash(h),
            Term::App(a, b) => {
                a.hash(h);
                b.hash(h)
            }
            Term::Zero => {}
            Term::Ifz(a, b, c) => {
                a.hash(h);
                b.hash(h);
                c.hash(h)
            }
        }
    }
}

impl Term {
    pub fn lam(hint: &str, body: Term) -> Term {
        Term::Lam(hint.into(), Arc::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn fix(m: Term) -> Term {
        Term::Fix(Arc::new(m))
    }

    pub fn pred(m: Term) -> Term {
        Term::Pred(Arc::new(m))
    }

    pub fn succ(m: Term) -> Term {
        Term::Succ(Arc::new(m))
    }

    pub fn ifz(l: Term, m: Term, n: Term) -> Term {
        Term::Ifz(Arc::new(l), Arc::new(m), Arc::new(n))
    }

    pub fn numeral(n: u64) -> Term {
        (0..n).fold(Term::Zero, |t, _| Term::succ(t))
    }

    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Term::Zero => return Some(n),
                Term::Succ(m) => {
                    n += 1;
                    cur = m;
                }
                _ => return None,
            }
        }
    }

    /// Numerals and abstractions.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Lam(..)) || self.as_numeral().is_some()
    }

    /// True when no free names and no loose indices occur.
    pub fn is_closed(&self) -> bool {
        self.free_names().is_empty() && self.max_loose() == 0
    }

    /// One more than the largest loose de Bruijn index (0 when there is none).
    pub fn max_loose(&self) -> usize {
        fn go(t: &Term, d: usize) -> usize {
            crate::grow(|| match t {
                Term::Var(i) => (i + 1).saturating_sub(d),
                Term::Free(_) | Term::Zero => 0,
                Term::Lam(_, b) => go(b, d + 1),
                Term::App(a, b) => go(a, d).max(go(b, d)),
                Term::Fix(a) | Term::Pred(a) | Term::Succ(a) => go(a, d),
                Term::Ifz(a, b, c) => go(a, d).max(go(b, d)).max(go(c, d)),
            })
        }
        go(self, 0)
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        fn go(t: &Term, out: &mut BTreeSet<Name>) {
            crate::grow(|| match t {
                Term::Free(x) => {
                    out.insert(x.clone());
                }
                Term::Var(_) | Term::Zero => {}
                Term::Lam(_, b) | Term::Fix(b) | Term::Pred(b) | Term::Succ(b) => go(b, out),
                Term::App(a, b) => {
                    go(a, out);
                    go(b, out)
                }
                Term::Ifz(a, b, c) => {
                    go(a, out);
                    go(b, out);
                    go(c, out)
                }
            })
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        crate::grow(|| match self {
            Term::Var(_) | Term::Free(_) | Term::Zero => 1,
            Term::Lam(_, b) | Term::Fix(b) | Term::Pred(b) | Term::Succ(b) => 1 + b.size(),
            Term::App(a, b) => 1 + a.size() + b.size(),
            Term::Ifz(a, b, c) => 1 + a.size() + b.size() + c.size(),
        })
    }

    /// Adds `d` to every index `>= cutoff`.
    pub fn shift(&self, d: usize, cutoff: usize) -> Term {
        if d == 0 {
            return self.clone();
        }
        self.map_vars(cutoff, &|i, c| if i >= c { Term::Var(i + d) } else { Term::Var(i) })
    }

    fn map_vars(&self, c: usize, f: &dyn Fn(usize, usize) -> Term) -> Term {
        crate::grow(|| match self {
            Term::Var(i) => f(*i, c),
            Term::Free(_) | Term::Zero => self.clone(),
            Term::Lam(x, b) => Term::Lam(x.clone(), Arc::new(b.map_vars(c + 1, f))),
            Term::App(a, b) => Term::App(Arc::new(a.map_vars(c, f)), Arc::new(b.map_vars(c, f))),
            Term::Fix(a) => Term::Fix(Arc::new(a.map_vars(c, f))),
            Term::Pred(a) => Term::Pred(Arc::new(a.map_vars(c, f))),
            Term::Succ(a) => Term::Succ(Arc::new(a.map_vars(c, f))),
            Term::Ifz(a, b, d) => Term::Ifz(
                Arc::new(a.map_vars(c, f)),
                Arc::new(b.map_vars(c, f)),
                Arc::new(d.map_vars(c, f)),
            ),
        })
    }

    /// `body[0 := arg]`, lowering the other loose indices of `body`.
    pub fn instantiate(body: &Term, arg: &Term) -> Term {
        let closed = arg.max_loose() == 0;
        body.map_vars(0, &|i, c| {
            if i == c {
                if closed {
                    arg.clone()
                } else {
                    arg.shift(c, 0)
                }
            } else if i > c {
                Term::Var(i - 1)
            } else {
                Term::Var(i)
            }
        })
    }

    /// Replaces the free name `x` by `arg`.
    pub fn subst_free(&self, x: &str, arg: &Term) -> Term {
        crate::grow(|| match self {
            Term::Free(y) if &**y == x => arg.clone(),
            Term::Var(_) | Term::Free(_) | Term::Zero => self.clone(),
            Term::Lam(h, b) => Term::Lam(h.clone(), Arc::new(b.subst_free(x, &arg.shift(1, 0)))),
            Term::App(a, b) => Term::app(a.subst_free(x, arg), b.subst_free(x, arg)),
            Term::Fix(a) => Term::fix(a.subst_free(x, arg)),
            Term::Pred(a) => Term::pred(a.subst_free(x, arg)),
            Term::Succ(a) => Term::succ(a.subst_free(x, arg)),
            Term::Ifz(a, b, c) => {
                Term::ifz(a.subst_free(x, arg), b.subst_free(x, arg), c.subst_free(x, arg))
            }
        })
    }

    /// Abstracts the free name `x` as a new outermost binder.
    pub fn abstract_free(&self, x: &str) -> Term {
        fn go(t: &Term, x: &str, d: usize) -> Term {
            crate::grow(|| match t {
                Term::Free(y) if &**y == x => Term::Var(d),
                Term::Var(i) if *i >= d => Term::Var(i + 1),
                Term::Var(_) | Term::Free(_) | Term::Zero => t.clone(),
                Term::Lam(h, b) => Term::Lam(h.clone(), Arc::new(go(b, x, d + 1))),
                Term::App(a, b) => Term::app(go(a, x, d), go(b, x, d)),
                Term::Fix(a) => Term::fix(go(a, x, d)),
                Term::Pred(a) => Term::pred(go(a, x, d)),
                Term::Succ(a) => Term::succ(go(a, x, d)),
                Term::Ifz(a, b, c) => Term::ifz(go(a, x, d), go(b, x, d), go(c, x, d)),
            })
        }
        Term::Lam(x.into(), Arc::new(go(self, x, 0)))
    }

    /// Named rendering with binder names chosen to avoid capture.
    pub fn to_named(&self) -> ETerm {
        let free: FxHashSet<Name> = self.free_names().into_iter().collect();
        let mut scope: Vec<Name> = Vec::new();
        to_named(self, &free, &mut scope)
    }

    /// Converts a named term without explicit substitutions.
    pub fn from_named(t: &ETerm) -> Result<Term, NotPcf> {
        fn go(t: &ETerm, scope: &mut Vec<Name>) -> Result<Term, NotPcf> {
            crate::grow(|| {
                Ok(match t {
                    ETerm::Var(x) => match scope.iter().rev().position(|y| y == x) {
                        Some(i) => Term::Var(i),
                        None => Term::Free(x.clone()),
                    },
                    ETerm::Lam(x, b) => {
                        scope.push(x.clone());
                        let b = go(b, scope);
                        scope.pop();
                        Term::Lam(x.clone(), Arc::new(b?))
                    }
                    ETerm::App(a, b) => Term::app(go(a, scope)?, go(b, scope)?),
                    ETerm::Fix(a) => Term::fix(go(a, scope)?),
                    ETerm::Zero => Term::Zero,
                    ETerm::Pred(a) => Term::pred(go(a, scope)?),
                    ETerm::Succ(a) => Term::succ(go(a, scope)?),
                    ETerm::Ifz(a, b, c) => Term::ifz(go(a, scope)?, go(b, scope)?, go(c, scope)?),
                    ETerm::ESub(..) => return Err(NotPcf),
                })
            })
        }
        go(t, &mut Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("explicit substitutions are not PCF syntax")]
pub struct NotPcf;

/// Picks `hint`, or a primed or numbered variant, avoiding `taken`.
pub(crate) fn fresh_name(hint: &str, taken: &dyn Fn(&str) -> bool) -> Name {
    if !taken(hint) {
        return hint.into();
    }
    for primes in 1..=3 {
        let c = format!("{hint}{}", "'".repeat(primes));
        if !taken(&c) {
            return c.into();
        }
    }
    (1..)
        .map(|k| format!("{hint}_{k}"))
        .find(|c| !taken(c))
        .expect("infinitely many candidates")
        .into()
}

fn to_named(t: &Term, free: &FxHashSet<Name>, scope: &mut Vec<Name>) -> ETerm {
    crate::grow(|| match t {
        Term::Var(i) => match scope.len().checked_sub(i + 1) {
            Some(k) => ETerm::Var(scope[k].clone()),
            None => ETerm::var(&format!("?{i}")),
        },
        Term::Free(x) => ETerm::Var(x.clone()),
        Term::Lam(h, b) => {
            let x = fresh_name(h, &|c| free.contains(c) || scope.iter().any(|s| &**s == c));
            scope.push(x.clone());
            let b = to_named(b, free, scope);
            scope.pop();
            ETerm::Lam(x, Arc::new(b))
        }
        Term::App(a, b) => ETerm::app(to_named(a, free, scope), to_named(b, free, scope)),
        Term::Fix(a) => ETerm::Fix(Arc::new(to_named(a, free, scope))),
        Term::Zero => ETerm::Zero,
        Term::Pred(a) => ETerm::Pred(Arc::new(to_named(a, free, scope))),
        Term::Succ(a) => ETerm::Succ(Arc::new(to_named(a, free, scope))),
        Term::Ifz(a, b, c) => ETerm::Ifz(
            Arc::new(to_named(a, free, scope)),
            Arc::new(to_named(b, free, scope)),
            Arc::new(to_named(c, free, scope)),
        ),
    })
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_pcf(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcfParseError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error(transparent)]
    NotPcf(#[from] NotPcf),
}

pub fn parse_pcf(src: &str) -> Result<Term, PcfParseError> {
    Ok(Term::from_named(&parse_term(src)?)?)
}

pub fn print_pcf(t: &Term) -> String {
    print_term(&t.to_named())
}

/// Ordered typing context; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    bindings: Vec<(Name, SimpleType)>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn bind(mut self, x: &str, t: SimpleType) -> TypeEnv {
        self.bindings.push((x.into(), t));
        self
    }

    pub fn get(&self, x: &str) -> Option<&SimpleType> {
        self.bindings.iter().rev().find(|(y, _)| &**y == x).map(|(_, t)| t)
    }

    pub fn bindings(&self) -> &[(Name, SimpleType)] {
        &self.bindings
    }

    pub fn names(&self) -> Vec<Name> {
        self.bindings.iter().map(|(x, _)| x.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error: {0}")]
pub struct PcfTypeError(pub String);

pub(crate) fn infer_pcf(
    t: &Term,
    ctx: &mut Vec<Ty>,
    env: &TypeEnv,
    u: &mut Unifier,
) -> Result<Ty, PcfTypeError> {
    let unify = |u: &mut Unifier, a: &Ty, b: &Ty, what: &str| {
        u.unify(a, b).map_err(|e| PcfTypeError(format!("{what}: {e}")))
    };
    crate::grow(|| match t {
        Term::Var(i) => ctx
            .len()
            .checked_sub(i + 1)
            .map(|k| ctx[k].clone())
            .ok_or_else(|| PcfTypeError(format!("dangling index {i}"))),
        Term::Free(x) => env
            .get(x)
            .map(|t| t.to_ty())
            .ok_or_else(|| PcfTypeError(format!("unbound variable {x}"))),
        Term::Lam(_, b) => {
            let a = u.fresh();
            ctx.push(a.clone());
            let r = infer_pcf(b, ctx, env, u);
            ctx.pop();
            Ok(Ty::arrow(a, r?))
        }
        Term::App(f, x) => {
            let tf = infer_pcf(f, ctx, env, u)?;
            let tx = infer_pcf(x, ctx, env, u)?;
            let r = u.fresh();
            unify(u, &tf, &Ty::arrow(tx, r.clone()), "application")?;
            Ok(r)
        }
        Term::Fix(m) => {
            let tm = infer_pcf(m, ctx, env, u)?;
            let a = u.fresh();
            unify(u, &tm, &Ty::arrow(a.clone(), a.clone()), "fix")?;
            Ok(a)
        }
        Term::Zero => Ok(Ty::Int),
        Term::Pred(m) | Term::Succ(m) => {
            let tm = infer_pcf(m, ctx, env, u)?;
            unify(u, &tm, &Ty::Int, "pred/succ")?;
            Ok(Ty::Int)
        }
        Term::Ifz(l, m, n) => {
            let tl = infer_pcf(l, ctx, env, u)?;
            unify(u, &tl, &Ty::Int, "ifz condition")?;
            let tm = infer_pcf(m, ctx, env, u)?;
            let tn = infer_pcf(n, ctx, env, u)?;
            unify(u, &tm, &tn, "ifz branches")?;
            Ok(tm)
        }
    })
}

/// Infers a type, sending unconstrained variables to `int`.
pub fn typecheck_pcf(env: &TypeEnv, t: &Term) -> Result<SimpleType, PcfTypeError> {
    let mut u = Unifier::new();
    let ty = infer_pcf(t, &mut Vec::new(), env, &mut u)?;
    Ok(u.default_int(&ty))
}

/// Decides `env ⊢ t : alpha`.
pub fn check_pcf(env: &TypeEnv, t: &Term, alpha: &SimpleType) -> Result<(), PcfTypeError> {
    let mut u = Unifier::new();
    let ty = infer_pcf(t, &mut Vec::new(), env, &mut u)?;
    u.unify(&ty, &alpha.to_ty())
        .map_err(|_| PcfTypeError(format!("term does not have type {alpha}")))
}

enum Frame<'a> {
    AppL(&'a Arc<Term>),
    Pred,
    Succ,
    Ifz(&'a Arc<Term>, &'a Arc<Term>),
}

/// One weak head step, or `None` when `t` is a value or stuck.
pub fn step_pcf(t: &Term) -> Option<Term> {
    let mut frames: Vec<Frame<'_>> = Vec::new();
    let mut cur = t;
    let reduct = loop {
        match cur {
            Term::App(f, a) => match &**f {
                Term::Lam(_, b) => break Term::instantiate(b, a),
                f2 if f2.is_value() => return None,
                _ => {
                    frames.push(Frame::AppL(a));
                    cur = f;
                }
            },
            Term::Fix(m) => break Term::App(m.clone(), Arc::new(cur.clone())),
            Term::Pred(m) => match &**m {
                Term::Zero => break Term::Zero,
                Term::Succ(k) if k.as_numeral().is_some() => break (**k).clone(),
                m2 if m2.is_value() => return None,
                _ => {
                    frames.push(Frame::Pred);
                    cur = m;
                }
            },
            Term::Succ(m) => {
                if m.is_value() {
                    return None;
                }
                frames.push(Frame::Succ);
                cur = m;
            }
            Term::Ifz(l, a, b) => match l.as_numeral() {
                Some(0) => break (**a).clone(),
                Some(_) => break (**b).clone(),
                None if l.is_value() => return None,
                None => {
                    frames.push(Frame::Ifz(a, b));
                    cur = l;
                }
            },
            Term::Var(_) | Term::Free(_) | Term::Lam(..) | Term::Zero => return None,
        }
    };
    Some(frames.into_iter().rev().fold(reduct, |t, fr| match fr {
        Frame::AppL(a) => Term::App(Arc::new(t), a.clone()),
        Frame::Pred => Term::pred(t),
        Frame::Succ => Term::succ(t),
        Frame::Ifz(a, b) => Term::Ifz(Arc::new(t), a.clone(), b.clone()),
    }))
}

/// Outcome of a fuel-bounded evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalOutcome<T> {
    Value(T),
    /// A normal form that is not a value (open or ill-typed term).
    Stuck(T),
    OutOfFuel,
    /// Proven divergent by revisiting a term under evaluation.
    Diverges,
}

impl<T> EvalOutcome<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            EvalOutcome::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_definite(&self) -> bool {
        matches!(self, EvalOutcome::Value(_) | EvalOutcome::Stuck(_))
    }
}

impl EvalOutcome<Term> {
    pub fn numeral(&self) -> Option<u64> {
        self.value().and_then(Term::as_numeral)
    }
}

/// Iterates [`step_pcf`] at most `fuel` times.
pub fn eval_pcf_small(t: &Term, fuel: u64) -> (EvalOutcome<Term>, u64) {
    let mut cur = t.clone();
    for n in 0..=fuel {
        match step_pcf(&cur) {
            Some(next) => {
                if n == fuel {
                    break;
                }
                cur = next;
            }
            None => {
                let out =
                    if cur.is_value() { EvalOutcome::Value(cur) } else { EvalOutcome::Stuck(cur) };
                return (out, n);
            }
        }
    }
    (EvalOutcome::OutOfFuel, fuel)
}

enum Halt {
    Fuel,
    Stuck(Term),
    Diverges,
}

struct BigStep {
    fuel: u64,
    active: Option<FxHashSet<Term>>,
}

impl BigStep {
    fn eval(&mut self, t: Term, depth: usize) -> Result<Term, Halt> {
        if depth > MAX_EVAL_DEPTH {
            return Err(Halt::Fuel);
        }
        let mut mine: Vec<Term> = Vec::new();
        let r = crate::grow(|| self.eval_loop(t, depth, &mut mine));
        if let Some(active) = &mut self.active {
            for t in &mine {
                active.remove(t);
            }
        }
        r
    }

    fn eval_loop(&mut self, mut t: Term, depth: usize, mine: &mut Vec<Term>) -> Result<Term, Halt> {
        loop {
            if self.fuel == 0 {
                return Err(Halt::Fuel);
            }
            self.fuel -= 1;
            if let Some(active) = &mut self.active {
                if !active.insert(t.clone()) {
                    return Err(Halt::Diverges);
                }
                mine.push(t.clone());
            }
            match &t {
                Term::Lam(..) | Term::Zero => return Ok(t),
                Term::Succ(m) => {
                    if m.as_numeral().is_some() {
                        return Ok(t);
                    }
                    let v = self.eval((**m).clone(), depth + 1)?;
                    return match v.as_numeral() {
                        Some(_) => Ok(Term::succ(v)),
                        None => Err(Halt::Stuck(Term::succ(v))),
                    };
                }
                Term::Pred(m) => {
                    let v = self.eval((**m).clone(), depth + 1)?;
                    return match &v {
                        Term::Zero => Ok(Term::Zero),
                        Term::Succ(k) if k.as_numeral().is_some() => Ok((**k).clone()),
                        _ => Err(Halt::Stuck(Term::pred(v))),
                    };
                }
                Term::Ifz(l, a, b) => {
                    let v = self.eval((**l).clone(), depth + 1)?;
                    t = match v.as_numeral() {
                        Some(0) => (**a).clone(),
                        Some(_) => (**b).clone(),
                        None => return Err(Halt::Stuck(Term::Ifz(Arc::new(v), a.clone(), b.clone()))),
                    };
                }
                Term::Fix(m) => {
                    t = Term::App(m.clone(), Arc::new(t.clone()));
                }
                Term::App(f, a) => {
                    let v = self.eval((**f).clone(), depth + 1)?;
                    t = match &v {
                        Term::Lam(_, b) => Term::instantiate(b, a),
                        _ => return Err(Halt::Stuck(Term::App(Arc::new(v), a.clone()))),
                    };
                }
                Term::Var(_) | Term::Free(_) => return Err(Halt::Stuck(t)),
            }
        }
    }
}

fn big_step(t: &Term, fuel: u64, detect: bool) -> EvalOutcome<Term> {
    let mut bs = BigStep { fuel, active: detect.then(FxHashSet::default) };
    match bs.eval(t.clone(), 0) {
        Ok(v) => EvalOutcome::Value(v),
        Err(Halt::Fuel) => EvalOutcome::OutOfFuel,
        Err(Halt::Stuck(s)) => EvalOutcome::Stuck(s),
        Err(Halt::Diverges) => EvalOutcome::Diverges,
    }
}

/// Big-step evaluation; `fuel` bounds the number of rule instances.
pub fn eval_pcf_big(t: &Term, fuel: u64) -> EvalOutcome<Term> {
    big_step(t, fuel, false)
}

/// Big-step evaluation that also reports divergence when a term under
/// evaluation reappears among the terms it is waiting on.
pub fn eval_pcf_observe(t: &Term, fuel: u64) -> EvalOutcome<Term> {
    big_step(t, fuel, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse_pcf(s).unwrap()
    }

    const SUCC2: &str = "(\\s n. s (s n)) (\\x. succ x)";

    #[test]
    fn alpha_equivalence_is_structural() {
        assert_eq!(p("\\x.x"), p("\\y.y"));
        assert_ne!(p("\\x y.x"), p("\\x y.y"));
        assert_eq!(p("\\x.x"), Term::lam("x", Term::Var(0)));
        assert_eq!(p("3"), Term::succ(Term::succ(Term::succ(Term::Zero))));
        assert_eq!(p("fix (\\x.x)"), Term::fix(Term::lam("x", Term::Var(0))));
    }

    #[test]
    fn printing_avoids_capture() {
        let t = Term::lam("x", Term::lam("x", Term::app(Term::Var(1), Term::Var(0))));
        let s = print_pcf(&t);
        assert_eq!(p(&s), t);
        let t = Term::lam("y", Term::app(Term::Free("y".into()), Term::Var(0)));
        assert_eq!(p(&print_pcf(&t)), t);
    }

    #[test]
    fn typing_examples() {
        let e = TypeEnv::new();
        assert_eq!(typecheck_pcf(&e, &p("\\x.x")).unwrap(), "int -> int".parse().unwrap());
        assert_eq!(typecheck_pcf(&e, &p(SUCC2)).unwrap(), "int -> int".parse().unwrap());
        let env = TypeEnv::new().bind("x", SimpleType::Int);
        assert_eq!(typecheck_pcf(&env, &p("pred x")).unwrap(), SimpleType::Int);
        assert!(typecheck_pcf(&e, &p("pred x")).is_err());
        assert!(typecheck_pcf(&e, &p("0 0")).is_err());
        assert!(typecheck_pcf(&e, &p("\\x. x x")).is_err());
        assert!(check_pcf(&e, &p("\\x.x"), &"(int -> int) -> int -> int".parse().unwrap()).is_ok());
        assert!(check_pcf(&e, &p("fix (\\x.x)"), &SimpleType::Int).is_ok());
    }

    #[test]
    fn step_examples() {
        assert_eq!(step_pcf(&p("(\\x.x) 0")), Some(Term::Zero));
        let omega = p("fix (\\x.x)");
        assert_eq!(step_pcf(&omega), Some(Term::app(p("\\x.x"), omega.clone())));
        assert_eq!(step_pcf(&p("pred 0")), Some(Term::Zero));
        assert_eq!(step_pcf(&p("pred 3")), Some(p("2")));
        assert_eq!(step_pcf(&p("ifz 0 1 2")), Some(p("1")));
        assert_eq!(step_pcf(&p("ifz 5 1 2")), Some(p("2")));
        assert_eq!(step_pcf(&p("succ ((\\x.x) 1)")), Some(p("2")));
        assert_eq!(step_pcf(&p("3")), None);
        assert_eq!(step_pcf(&p("\\x. (\\y.y) x")), None);
        assert_eq!(step_pcf(&p("pred (\\x.x)")), None);
        assert_eq!(step_pcf(&p("0 1")), None);
    }

    #[test]
    fn big_step_examples() {
        let t = Term::app(p(SUCC2), p("3"));
        assert_eq!(eval_pcf_big(&t, 1000).numeral(), Some(5));
        assert_eq!(eval_pcf_small(&t, 1000).0.numeral(), Some(5));
        assert_eq!(eval_pcf_big(&Term::Zero, 1), EvalOutcome::Value(Term::Zero));
        let omega = p("fix (\\x.x)");
        for fuel in [0, 1, 10, 10_000] {
            assert_eq!(eval_pcf_big(&omega, fuel), EvalOutcome::OutOfFuel);
        }
        assert_eq!(eval_pcf_observe(&omega, 10_000), EvalOutcome::Diverges);
        let strict = p("fix (\\x. succ x)");
        assert_eq!(eval_pcf_observe(&strict, 10_000), EvalOutcome::Diverges);
        assert!(matches!(eval_pcf_big(&p("pred (\\x.x)"), 10), EvalOutcome::Stuck(_)));
    }

    #[test]
    fn add_by_recursion() {
        let add = p("fix (\\f x y. ifz y x (f (succ x) (pred y)))");
        for (a, b) in [(0, 0), (1, 3), (4, 5), (7, 5)] {
            let t = Term::apps(add.clone(), [Term::numeral(a), Term::numeral(b)]);
            assert_eq!(eval_pcf_big(&t, 100_000).numeral(), Some(a + b));
            assert_eq!(eval_pcf_small(&t, 100_000).0.numeral(), Some(a + b));
            assert_eq!(eval_pcf_observe(&t, 100_000).numeral(), Some(a + b));
        }
    }

    #[test]
    fn substitution_under_binders() {
        // (\x. \y. x) z  ->  \y. z  with the free z kept distinct from y.
        let t = Term::app(p("\\x y. x"), Term::Free("y".into()));
        let r = step_pcf(&t).unwrap();
        assert_eq!(r, Term::lam("y", Term::Free("y".into())));
        assert_eq!(p(&print_pcf(&r)), r);
        // Open argument with a loose index gets shifted under the binder.
        let body = Term::lam("y", Term::Var(1));
        assert_eq!(Term::instantiate(&body, &Term::Var(3)), Term::lam("y", Term::Var(4)));
    }

    #[test]
    fn free_name_operations() {
        let t = p("\\y. x y");
        assert_eq!(t.free_names().len(), 1);
        assert_eq!(t.subst_free("x", &p("\\z.z")), p("\\y. (\\z.z) y"));
        assert_eq!(p("x y").abstract_free("x"), p("\\x. x y"));
        assert!(p("\\x.x").is_closed());
        assert!(!t.is_closed());
    }
}
