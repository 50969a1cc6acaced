//! PCF with explicit substitutions: syntax, weak head reduction, big-step evaluation,
//! head size and collapse into PCF.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;

use thiserror::Error;

use crate::pcf::{fresh_name, infer_pcf, EvalOutcome, Name, PcfTypeError, Term, TypeEnv, MAX_EVAL_DEPTH};
use crate::syntax::{parse_term, print_term, ParseError};
use crate::types::{SimpleType, Ty, Unifier};

/// A named EPCF term. `ESub(m, x, n)` is `m⟨x := n⟩`.
///
/// `==` is syntactic; use [`ETerm::alpha_eq`] for equality up to renaming.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ETerm {
    Var(Name),
    Lam(Name, Arc<ETerm>),
    App(Arc<ETerm>, Arc<ETerm>),
    Fix(Arc<ETerm>),
    Zero,
    Pred(Arc<ETerm>),
    Succ(Arc<ETerm>),
    Ifz(Arc<ETerm>, Arc<ETerm>, Arc<ETerm>),
    ESub(Arc<ETerm>, Name, Arc<ETerm>),
}

/// Which family a reduction rule belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Computational rules: beta, pred, ifz, fix.
    Cr,
    /// Substitution propagation.
    Pr,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Cr => "cr",
            StepKind::Pr => "pr",
        })
    }
}

/// A single weak head step with the name of the rule fired.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EStep {
    pub term: ETerm,
    pub kind: StepKind,
    pub rule: &'static str,
}

impl ETerm {
    pub fn var(x: &str) -> ETerm {
        ETerm::Var(x.into())
    }

    pub fn lam(x: &str, body: ETerm) -> ETerm {
        ETerm::Lam(x.into(), Arc::new(body))
    }

    pub fn app(f: ETerm, a: ETerm) -> ETerm {
        ETerm::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: ETerm, args: impl IntoIterator<Item = ETerm>) -> ETerm {
        args.into_iter().fold(f, ETerm::app)
    }

    pub fn esub(m: ETerm, x: &str, n: ETerm) -> ETerm {
        ETerm::ESub(Arc::new(m), x.into(), Arc::new(n))
    }

    pub fn fix(m: ETerm) -> ETerm {
        ETerm::Fix(Arc::new(m))
    }

    pub fn pred(m: ETerm) -> ETerm {
        ETerm::Pred(Arc::new(m))
    }

    pub fn succ(m: ETerm) -> ETerm {
        ETerm::Succ(Arc::new(m))
    }

    pub fn ifz(l: ETerm, m: ETerm, n: ETerm) -> ETerm {
        ETerm::Ifz(Arc::new(l), Arc::new(m), Arc::new(n))
    }

    pub fn numeral(n: u64) -> ETerm {
        (0..n).fold(ETerm::Zero, |t, _| ETerm::succ(t))
    }

    /// `k` when the term is literally `succ^k 0`.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                ETerm::Zero => return Some(n),
                ETerm::Succ(m) => {
                    n += 1;
                    cur = m;
                }
                _ => return None,
            }
        }
    }

    /// Splits `M⟨x1:=N1⟩…⟨xk:=Nk⟩` into `M` and the substitution, innermost first.
    pub fn spine(&self) -> (&ETerm, Vec<(&Name, &Arc<ETerm>)>) {
        let mut sigma = Vec::new();
        let mut cur = self;
        while let ETerm::ESub(m, x, n) = cur {
            sigma.push((x, n));
            cur = m;
        }
        sigma.reverse();
        (cur, sigma)
    }

    /// Numerals and closures `(λx.M)^σ`.
    pub fn is_value(&self) -> bool {
        self.as_numeral().is_some() || self.is_lambda_value()
    }

    fn is_lambda_value(&self) -> bool {
        matches!(self.spine().0, ETerm::Lam(..))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(t: &ETerm, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
            crate::grow(|| match t {
                ETerm::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                ETerm::Lam(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                ETerm::ESub(m, x, n) => {
                    go(n, bound, out);
                    bound.push(x.clone());
                    go(m, bound, out);
                    bound.pop();
                }
                ETerm::Zero => {}
                ETerm::App(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out)
                }
                ETerm::Fix(a) | ETerm::Pred(a) | ETerm::Succ(a) => go(a, bound, out),
                ETerm::Ifz(a, b, c) => {
                    go(a, bound, out);
                    go(b, bound, out);
                    go(c, bound, out)
                }
            })
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every name occurring in the term, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            ETerm::Var(x) | ETerm::Lam(x, _) | ETerm::ESub(_, x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    fn visit(&self, f: &mut dyn FnMut(&ETerm)) {
        crate::grow(|| {
            f(self);
            match self {
                ETerm::Var(_) | ETerm::Zero => {}
                ETerm::Lam(_, a) | ETerm::Fix(a) | ETerm::Pred(a) | ETerm::Succ(a) => a.visit(f),
                ETerm::App(a, b) | ETerm::ESub(a, _, b) => {
                    a.visit(f);
                    b.visit(f)
                }
                ETerm::Ifz(a, b, c) => {
                    a.visit(f);
                    b.visit(f);
                    c.visit(f)
                }
            }
        })
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Contains no explicit substitution.
    pub fn is_pcf(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |t| ok &= !matches!(t, ETerm::ESub(..)));
        ok
    }

    /// Closed, with every substituted term closed as well.
    pub fn is_program(&self) -> bool {
        if !self.is_closed() {
            return false;
        }
        let mut ok = true;
        self.visit(&mut |t| {
            if let ETerm::ESub(_, _, n) = t {
                ok &= n.is_closed();
            }
        });
        ok
    }

    /// Equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &ETerm) -> bool {
        fn idx(stack: &[Name], x: &Name) -> Option<usize> {
            stack.iter().rev().position(|y| y == x)
        }
        fn go(a: &ETerm, b: &ETerm, sa: &mut Vec<Name>, sb: &mut Vec<Name>) -> bool {
            crate::grow(|| match (a, b) {
                (ETerm::Var(x), ETerm::Var(y)) => match (idx(sa, x), idx(sb, y)) {
                    (None, None) => x == y,
                    (i, j) => i == j,
                },
                (ETerm::Lam(x, m), ETerm::Lam(y, n)) => {
                    sa.push(x.clone());
                    sb.push(y.clone());
                    let r = go(m, n, sa, sb);
                    sa.pop();
                    sb.pop();
                    r
                }
                (ETerm::ESub(m, x, n), ETerm::ESub(m2, y, n2)) => {
                    if !go(n, n2, sa, sb) {
                        return false;
                    }
                    sa.push(x.clone());
                    sb.push(y.clone());
                    let r = go(m, m2, sa, sb);
                    sa.pop();
                    sb.pop();
                    r
                }
                (ETerm::App(a1, b1), ETerm::App(a2, b2)) => go(a1, a2, sa, sb) && go(b1, b2, sa, sb),
                (ETerm::Fix(x), ETerm::Fix(y))
                | (ETerm::Pred(x), ETerm::Pred(y))
                | (ETerm::Succ(x), ETerm::Succ(y)) => go(x, y, sa, sb),
                (ETerm::Zero, ETerm::Zero) => true,
                (ETerm::Ifz(a1, b1, c1), ETerm::Ifz(a2, b2, c2)) => {
                    go(a1, a2, sa, sb) && go(b1, b2, sa, sb) && go(c1, c2, sa, sb)
                }
                _ => false,
            })
        }
        go(self, other, &mut Vec::new(), &mut Vec::new())
    }

    /// Renames free occurrences of `x` to `y`; `y` must not occur in the term.
    fn rename_free(&self, x: &Name, y: &Name) -> ETerm {
        crate::grow(|| match self {
            ETerm::Var(z) if z == x => ETerm::Var(y.clone()),
            ETerm::Var(_) | ETerm::Zero => self.clone(),
            ETerm::Lam(z, _) if z == x => self.clone(),
            ETerm::Lam(z, b) => ETerm::Lam(z.clone(), Arc::new(b.rename_free(x, y))),
            ETerm::ESub(m, z, n) => {
                let n = Arc::new(n.rename_free(x, y));
                let m = if z == x { m.clone() } else { Arc::new(m.rename_free(x, y)) };
                ETerm::ESub(m, z.clone(), n)
            }
            ETerm::App(a, b) => ETerm::app(a.rename_free(x, y), b.rename_free(x, y)),
            ETerm::Fix(a) => ETerm::fix(a.rename_free(x, y)),
            ETerm::Pred(a) => ETerm::pred(a.rename_free(x, y)),
            ETerm::Succ(a) => ETerm::succ(a.rename_free(x, y)),
            ETerm::Ifz(a, b, c) => {
                ETerm::ifz(a.rename_free(x, y), b.rename_free(x, y), c.rename_free(x, y))
            }
        })
    }

    /// Head size `⟨M⟩`.
    pub fn head_size(&self) -> BigUint {
        crate::grow(|| match self {
            ETerm::Var(_) | ETerm::Zero => BigUint::one(),
            ETerm::App(m, _)
            | ETerm::Lam(_, m)
            | ETerm::Fix(m)
            | ETerm::Pred(m)
            | ETerm::Succ(m)
            | ETerm::Ifz(m, _, _) => m.head_size() + 1u32,
            ETerm::ESub(m, _, n) => m.head_size() * (n.head_size() + 1u32),
        })
    }

    /// Collapse into PCF by performing every explicit substitution.
    pub fn collapse(&self) -> Term {
        enum Entry {
            Bound,
            Subst(Term, usize),
        }
        fn go(t: &ETerm, env: &mut Vec<(Name, Entry)>, depth: usize) -> Term {
            crate::grow(|| match t {
                ETerm::Var(x) => {
                    let mut binders = 0;
                    for (y, e) in env.iter().rev() {
                        match e {
                            Entry::Bound if y == x => return Term::Var(binders),
                            Entry::Bound => binders += 1,
                            Entry::Subst(s, at) if y == x => return s.shift(depth - at, 0),
                            Entry::Subst(..) => {}
                        }
                    }
                    Term::Free(x.clone())
                }
                ETerm::Lam(x, b) => {
                    env.push((x.clone(), Entry::Bound));
                    let b = go(b, env, depth + 1);
                    env.pop();
                    Term::Lam(x.clone(), Arc::new(b))
                }
                ETerm::ESub(m, x, n) => {
                    let n = go(n, env, depth);
                    env.push((x.clone(), Entry::Subst(n, depth)));
                    let m = go(m, env, depth);
                    env.pop();
                    m
                }
                ETerm::Zero => Term::Zero,
                ETerm::App(a, b) => Term::app(go(a, env, depth), go(b, env, depth)),
                ETerm::Fix(a) => Term::fix(go(a, env, depth)),
                ETerm::Pred(a) => Term::pred(go(a, env, depth)),
                ETerm::Succ(a) => Term::succ(go(a, env, depth)),
                ETerm::Ifz(a, b, c) => Term::ifz(go(a, env, depth), go(b, env, depth), go(c, env, depth)),
            })
        }
        go(self, &mut Vec::new(), 0)
    }
}

/// Head size of a substitution: the product of `⟨N⟩ + 1` over its terms.
pub fn head_size_subst<'a>(sigma: impl IntoIterator<Item = &'a ETerm>) -> BigUint {
    sigma.into_iter().fold(BigUint::one(), |acc, n| acc * (n.head_size() + 1u32))
}

/// Re-applies a substitution, innermost first.
pub fn wrap(m: &Arc<ETerm>, sigma: &[(&Name, &Arc<ETerm>)]) -> ETerm {
    let mut t = m.clone();
    for (x, n) in sigma {
        t = Arc::new(ETerm::ESub(t, (*x).clone(), (*n).clone()));
    }
    Arc::unwrap_or_clone(t)
}

fn lookup<'a>(sigma: &[(&Name, &'a Arc<ETerm>)], x: &Name) -> Option<&'a Arc<ETerm>> {
    sigma.iter().find(|(y, _)| *y == x).map(|(_, n)| *n)
}

/// Fires `(λx.M)^σ N`, renaming `x` when σ already binds it.
fn beta(x: &Name, body: &Arc<ETerm>, sigma: &[(&Name, &Arc<ETerm>)], arg: Arc<ETerm>) -> ETerm {
    let clash = sigma.iter().any(|(y, _)| *y == x);
    let (x, body) = if clash {
        let names = body.all_names();
        let fresh = fresh_name(x, &|c| names.iter().any(|n| &**n == c) || sigma.iter().any(|(y, _)| &***y == c));
        let renamed = Arc::new(body.rename_free(x, &fresh));
        (fresh, renamed)
    } else {
        (x.clone(), body.clone())
    };
    ETerm::ESub(Arc::new(wrap(&body, sigma)), x, arg)
}

enum Frame<'a> {
    AppL(&'a Arc<ETerm>),
    Pred,
    Succ,
    Ifz(&'a Arc<ETerm>, &'a Arc<ETerm>),
}

/// One weak head step, or `None` on values and stuck terms.
pub fn step_wh(t: &ETerm) -> Option<EStep> {
    use StepKind::*;
    let mut frames: Vec<Frame<'_>> = Vec::new();
    let mut cur = t;
    let (reduct, kind, rule) = loop {
        match cur {
            ETerm::ESub(..) => {
                let (head, sigma) = cur.spine();
                break match head {
                    ETerm::Var(x) => match lookup(&sigma, x) {
                        Some(n) => ((**n).clone(), Pr, "var"),
                        None => (ETerm::Var(x.clone()), Pr, "gc"),
                    },
                    ETerm::Zero => (ETerm::Zero, Pr, "zero"),
                    ETerm::App(m, n) => (ETerm::app(wrap(m, &sigma), wrap(n, &sigma)), Pr, "app"),
                    ETerm::Fix(m) => (ETerm::fix(wrap(m, &sigma)), Pr, "fix"),
                    ETerm::Pred(m) => (ETerm::pred(wrap(m, &sigma)), Pr, "pred"),
                    ETerm::Succ(m) => (ETerm::succ(wrap(m, &sigma)), Pr, "succ"),
                    ETerm::Ifz(l, m, n) => (
                        ETerm::ifz(wrap(l, &sigma), wrap(m, &sigma), wrap(n, &sigma)),
                        Pr,
                        "ifz",
                    ),
                    ETerm::Lam(..) => return None,
                    ETerm::ESub(..) => unreachable!("spine strips substitutions"),
                };
            }
            ETerm::App(f, a) => {
                let (head, sigma) = f.spine();
                match head {
                    ETerm::Lam(x, body) => break (beta(x, body, &sigma, a.clone()), Cr, "beta"),
                    _ if f.as_numeral().is_some() => return None,
                    _ => {
                        frames.push(Frame::AppL(a));
                        cur = f;
                    }
                }
            }
            ETerm::Fix(m) => break (ETerm::App(m.clone(), Arc::new(cur.clone())), Cr, "fix"),
            ETerm::Pred(m) => match &**m {
                ETerm::Zero => break (ETerm::Zero, Cr, "pred"),
                ETerm::Succ(k) if k.as_numeral().is_some() => break ((**k).clone(), Cr, "pred"),
                _ if m.is_value() => return None,
                _ => {
                    frames.push(Frame::Pred);
                    cur = m;
                }
            },
            ETerm::Succ(m) => {
                if m.is_value() {
                    return None;
                }
                frames.push(Frame::Succ);
                cur = m;
            }
            ETerm::Ifz(l, a, b) => match l.as_numeral() {
                Some(0) => break ((**a).clone(), Cr, "ifz0"),
                Some(_) => break ((**b).clone(), Cr, "ifz>0"),
                None if l.is_value() => return None,
                None => {
                    frames.push(Frame::Ifz(a, b));
                    cur = l;
                }
            },
            ETerm::Var(_) | ETerm::Lam(..) | ETerm::Zero => return None,
        }
    };
    let term = frames.into_iter().rev().fold(reduct, |t, fr| match fr {
        Frame::AppL(a) => ETerm::App(Arc::new(t), a.clone()),
        Frame::Pred => ETerm::pred(t),
        Frame::Succ => ETerm::succ(t),
        Frame::Ifz(a, b) => ETerm::Ifz(Arc::new(t), a.clone(), b.clone()),
    });
    Some(EStep { term, kind, rule })
}

/// Iterates [`step_wh`] at most `fuel` times, returning the trace including `t`.
pub fn trace_epcf(t: &ETerm, fuel: u64) -> (Vec<EStep>, EvalOutcome<ETerm>) {
    let mut out = Vec::new();
    let mut cur = t.clone();
    loop {
        match step_wh(&cur) {
            Some(s) => {
                if out.len() as u64 == fuel {
                    return (out, EvalOutcome::OutOfFuel);
                }
                cur = s.term.clone();
                out.push(s);
            }
            None => {
                let r = if cur.is_value() { EvalOutcome::Value(cur) } else { EvalOutcome::Stuck(cur) };
                return (out, r);
            }
        }
    }
}

/// Small-step evaluation, returning the outcome and the number of steps taken.
pub fn eval_epcf_small(t: &ETerm, fuel: u64) -> (EvalOutcome<ETerm>, u64) {
    let mut cur = t.clone();
    let mut n = 0;
    loop {
        match step_wh(&cur) {
            Some(s) => {
                if n == fuel {
                    return (EvalOutcome::OutOfFuel, n);
                }
                cur = s.term;
                n += 1;
            }
            None => {
                let r = if cur.is_value() { EvalOutcome::Value(cur) } else { EvalOutcome::Stuck(cur) };
                return (r, n);
            }
        }
    }
}

enum Halt {
    Fuel,
    Stuck(ETerm),
}

fn big(t: ETerm, fuel: &mut u64, depth: usize) -> Result<ETerm, Halt> {
    if depth > MAX_EVAL_DEPTH {
        return Err(Halt::Fuel);
    }
    crate::grow(|| big_loop(t, fuel, depth))
}

fn big_loop(mut t: ETerm, fuel: &mut u64, depth: usize) -> Result<ETerm, Halt> {
    loop {
        if *fuel == 0 {
            return Err(Halt::Fuel);
        }
        *fuel -= 1;
        let (head, sigma) = t.spine();
        if let Some(k) = head.as_numeral() {
            return Ok(if sigma.is_empty() { t } else { ETerm::numeral(k) });
        }
        let next = match head {
            ETerm::Lam(..) => return Ok(t),
            ETerm::Var(x) => match lookup(&sigma, x) {
                Some(n) => (**n).clone(),
                None => return Err(Halt::Stuck(t)),
            },
            ETerm::Pred(m) => {
                let v = big(wrap(m, &sigma), fuel, depth + 1)?;
                return match &v {
                    ETerm::Zero => Ok(ETerm::Zero),
                    ETerm::Succ(k) if k.as_numeral().is_some() => Ok((**k).clone()),
                    _ => Err(Halt::Stuck(ETerm::pred(v))),
                };
            }
            ETerm::Succ(m) => {
                let v = big(wrap(m, &sigma), fuel, depth + 1)?;
                return match v.as_numeral() {
                    Some(_) => Ok(ETerm::succ(v)),
                    None => Err(Halt::Stuck(ETerm::succ(v))),
                };
            }
            ETerm::Ifz(l, a, b) => {
                let v = big(wrap(l, &sigma), fuel, depth + 1)?;
                match v.as_numeral() {
                    Some(0) => wrap(a, &sigma),
                    Some(_) => wrap(b, &sigma),
                    None => return Err(Halt::Stuck(ETerm::Ifz(Arc::new(v), a.clone(), b.clone()))),
                }
            }
            ETerm::Fix(m) => {
                let ms = Arc::new(wrap(m, &sigma));
                ETerm::App(ms.clone(), Arc::new(ETerm::Fix(ms)))
            }
            ETerm::App(m, n) => {
                let v = big(wrap(m, &sigma), fuel, depth + 1)?;
                let (vh, tau) = v.spine();
                match vh {
                    ETerm::Lam(x, body) => beta(x, body, &tau, Arc::new(wrap(n, &sigma))),
                    _ => return Err(Halt::Stuck(ETerm::App(Arc::new(v.clone()), n.clone()))),
                }
            }
            ETerm::Zero | ETerm::ESub(..) => unreachable!("handled above"),
        };
        t = next;
    }
}

/// Big-step evaluation; `fuel` bounds the number of rule instances.
pub fn eval_epcf_big(t: &ETerm, fuel: u64) -> EvalOutcome<ETerm> {
    let mut fuel = fuel;
    match big(t.clone(), &mut fuel, 0) {
        Ok(v) => EvalOutcome::Value(v),
        Err(Halt::Fuel) => EvalOutcome::OutOfFuel,
        Err(Halt::Stuck(s)) => EvalOutcome::Stuck(s),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpcfTypeError {
    #[error(transparent)]
    Type(#[from] PcfTypeError),
    #[error("substituted term for {0} is not closed")]
    OpenSubstitution(Name),
}

fn infer_epcf(t: &ETerm, env: &mut Vec<(Name, Ty)>, u: &mut Unifier) -> Result<Ty, EpcfTypeError> {
    // PCF parts are delegated to the PCF checker; substitutions extend the context.
    let pcf_err = |m: String| EpcfTypeError::Type(PcfTypeError(m));
    let unify = |u: &mut Unifier, a: &Ty, b: &Ty, what: &str| {
        u.unify(a, b).map_err(|e| pcf_err(format!("{what}: {e}")))
    };
    crate::grow(|| match t {
        ETerm::Var(x) => env
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| pcf_err(format!("unbound variable {x}"))),
        ETerm::Lam(x, b) => {
            let a = u.fresh();
            env.push((x.clone(), a.clone()));
            let r = infer_epcf(b, env, u);
            env.pop();
            Ok(Ty::arrow(a, r?))
        }
        ETerm::ESub(m, x, n) => {
            if !n.is_closed() {
                return Err(EpcfTypeError::OpenSubstitution(x.clone()));
            }
            let tn = infer_epcf(n, &mut Vec::new(), u)?;
            env.push((x.clone(), tn));
            let r = infer_epcf(m, env, u);
            env.pop();
            r
        }
        ETerm::App(f, a) => {
            let tf = infer_epcf(f, env, u)?;
            let ta = infer_epcf(a, env, u)?;
            let r = u.fresh();
            unify(u, &tf, &Ty::arrow(ta, r.clone()), "application")?;
            Ok(r)
        }
        ETerm::Fix(m) => {
            let tm = infer_epcf(m, env, u)?;
            let a = u.fresh();
            unify(u, &tm, &Ty::arrow(a.clone(), a.clone()), "fix")?;
            Ok(a)
        }
        ETerm::Zero => Ok(Ty::Int),
        ETerm::Pred(m) | ETerm::Succ(m) => {
            let tm = infer_epcf(m, env, u)?;
            unify(u, &tm, &Ty::Int, "pred/succ")?;
            Ok(Ty::Int)
        }
        ETerm::Ifz(l, m, n) => {
            let tl = infer_epcf(l, env, u)?;
            unify(u, &tl, &Ty::Int, "ifz condition")?;
            let tm = infer_epcf(m, env, u)?;
            let tn = infer_epcf(n, env, u)?;
            unify(u, &tm, &tn, "ifz branches")?;
            Ok(tm)
        }
    })
}

fn env_tys(env: &TypeEnv) -> Vec<(Name, Ty)> {
    env.bindings().iter().map(|(x, t)| (x.clone(), t.to_ty())).collect()
}

/// Infers a type, sending unconstrained variables to `int`.
pub fn typecheck_epcf(env: &TypeEnv, t: &ETerm) -> Result<SimpleType, EpcfTypeError> {
    let mut u = Unifier::new();
    if let Ok(p) = Term::from_named(t) {
        let ty = infer_pcf(&p, &mut Vec::new(), env, &mut u)?;
        return Ok(u.default_int(&ty));
    }
    let ty = infer_epcf(t, &mut env_tys(env), &mut u)?;
    Ok(u.default_int(&ty))
}

/// Decides `env ⊢ t : alpha`.
pub fn check_epcf(env: &TypeEnv, t: &ETerm, alpha: &SimpleType) -> Result<(), EpcfTypeError> {
    let mut u = Unifier::new();
    let ty = infer_epcf(t, &mut env_tys(env), &mut u)?;
    u.unify(&ty, &alpha.to_ty())
        .map_err(|_| EpcfTypeError::Type(PcfTypeError(format!("term does not have type {alpha}"))))
}

pub fn parse_epcf(src: &str) -> Result<ETerm, ParseError> {
    parse_term(src)
}

pub fn print_epcf(t: &ETerm) -> String {
    print_term(t)
}

impl fmt::Display for ETerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ETerm {
        parse_epcf(s).unwrap()
    }

    #[test]
    fn substitution_percolates() {
        let t = p("(x y)[x := \\z.z][y := 3]");
        let s = step_wh(&t).unwrap();
        assert_eq!((s.kind, s.rule), (StepKind::Pr, "app"));
        let (out, n) = eval_epcf_small(&t, 100);
        assert_eq!(out.value().and_then(ETerm::as_numeral), Some(3));
        assert!(n > 2);
        assert_eq!(eval_epcf_big(&t, 100).value().and_then(ETerm::as_numeral), Some(3));
    }

    #[test]
    fn beta_creates_explicit_substitution() {
        let s = step_wh(&p("(\\x. succ x) 2")).unwrap();
        assert_eq!((s.kind, s.rule), (StepKind::Cr, "beta"));
        assert_eq!(s.term, p("(succ x)[x := 2]"));
    }

    #[test]
    fn beta_renames_on_clash() {
        // (λx. x)^{x:=1} 2 must yield 2, not 1.
        let t = ETerm::app(p("(\\x. x)[x := 1]"), ETerm::numeral(2));
        let s = step_wh(&t).unwrap();
        assert!(s.term.alpha_eq(&p("x'[x := 1][x' := 2]")));
        assert_eq!(eval_epcf_big(&t, 100).value().and_then(ETerm::as_numeral), Some(2));
        assert_eq!(eval_epcf_small(&t, 100).0.value().and_then(ETerm::as_numeral), Some(2));
    }

    #[test]
    fn values_and_stuck_terms() {
        assert!(step_wh(&p("3")).is_none());
        assert!(step_wh(&p("(\\x.x)[y := 1]")).is_none());
        assert!(p("(\\x.x)[y := 1]").is_value());
        assert!(!p("3[y := 1]").is_value());
        assert!(step_wh(&p("pred (\\x.x)")).is_none());
        assert!(step_wh(&p("x")).is_none());
    }

    #[test]
    fn alpha_equivalence() {
        assert!(p("\\x.x").alpha_eq(&p("\\y.y")));
        assert!(p("x[x := 1]").alpha_eq(&p("y[y := 1]")));
        assert!(!p("x[y := 1]").alpha_eq(&p("y[y := 1]")));
        assert!(!p("\\x y.x").alpha_eq(&p("\\x y.y")));
    }

    #[test]
    fn head_sizes() {
        let h = |s: &str| p(s).head_size();
        assert_eq!(h("x"), 1u32.into());
        assert_eq!(h("x y"), 2u32.into());
        assert_eq!(h("ifz x (y y y) z"), 2u32.into());
        assert_eq!(h("x[x := y z]"), 3u32.into());
        assert_eq!(head_size_subst([&p("y z"), &p("0")]), 6u32.into());
    }

    #[test]
    fn collapse_performs_substitutions() {
        let t = p("(\\y. x y)[x := \\z.z]");
        assert_eq!(t.collapse(), crate::pcf::parse_pcf("\\y. (\\z.z) y").unwrap());
        let t = p("x[x := 1][x := 2]");
        assert_eq!(t.collapse(), Term::numeral(1));
    }

    #[test]
    fn typing() {
        let e = TypeEnv::new();
        assert_eq!(typecheck_epcf(&e, &p("(succ x)[x := 2]")).unwrap(), SimpleType::Int);
        assert_eq!(
            typecheck_epcf(&e, &p("(\\y. x y)[x := \\z. pred z]")).unwrap(),
            "int -> int".parse().unwrap()
        );
        assert!(typecheck_epcf(&e, &p("x[x := y]")).is_err());
        assert!(check_epcf(&e, &p("x[x := 1]"), &SimpleType::Int).is_ok());
    }

    #[test]
    fn fix_unfolds_under_substitution() {
        let t = p("(fix (\\f n. ifz n 0 (f (pred n))))[q := 1]");
        let t = ETerm::app(t, ETerm::numeral(3));
        assert_eq!(eval_epcf_big(&t, 10_000).value().and_then(ETerm::as_numeral), Some(0));
        assert_eq!(eval_epcf_small(&t, 10_000).0.value().and_then(ETerm::as_numeral), Some(0));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::pcf::step_pcf;
    use crate::corpus::TermGen;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn percolation_shrinks_head_size(seed in any::<u64>()) {
            let t = TermGen::new(seed).program(5);
            let (steps, _) = trace_epcf(&t, 2_000);
            let mut prev = t;
            for s in steps {
                if s.kind == StepKind::Pr {
                    prop_assert!(s.term.head_size() < prev.head_size(), "{}", s.rule);
                }
                prev = s.term;
            }
        }

        #[test]
        fn collapse_commutes(seed in any::<u64>()) {
            let t = TermGen::new(seed).program(5);
            let (steps, _) = trace_epcf(&t, 2_000);
            let mut prev = t.collapse();
            for s in steps {
                let next = s.term.collapse();
                match s.kind {
                    StepKind::Cr => prop_assert_eq!(step_pcf(&prev), Some(next.clone())),
                    StepKind::Pr => prop_assert_eq!(&prev, &next),
                }
                prev = next;
            }
        }

        #[test]
        fn print_parse_round_trip(seed in any::<u64>()) {
            let t = TermGen::new(seed).program(5);
            prop_assert!(parse_epcf(&print_epcf(&t)).unwrap().alpha_eq(&t), "{}", t);
        }
    }
}
