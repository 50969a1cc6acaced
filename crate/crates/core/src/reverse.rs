//! Reverse translation from typing derivations of EAMs to PCF programs.

use rustc_hash::FxHashMap;

use crate::equiv::{equiv_at_type, ArgumentCorpus, EquivError, Verdict};
use crate::machine::Machine;
use crate::pcf::Term;
use crate::translate::translate_pcf;
use crate::types::SimpleType;
use crate::typing::{check_type, Derivation, ProgramNode, ProgramRule, RegisterJudgement, TypeError};

/// `ifc p q = ifz p q q`: behaves as `q` once `p` converges.
pub fn ifc(p: Term, q: Term) -> Term {
    Term::ifz(p, q.clone(), q)
}

fn hint(i: usize) -> String {
    format!("x{i}")
}

/// Registers bound so far, innermost last. The PCF variable `x_i` refers to the
/// innermost binder for register `i`.
struct ReverseContext<'a> {
    regs: Vec<usize>,
    memo: &'a mut FxHashMap<*const Derivation, Term>,
}

impl ReverseContext<'_> {
    fn var(&self, i: usize) -> Term {
        let pos = self.regs.iter().rposition(|r| *r == i).expect("typed registers are bound");
        Term::Var(self.regs.len() - 1 - pos)
    }

    fn bind(&mut self, i: usize, f: impl FnOnce(&mut Self) -> Term) -> Term {
        self.regs.push(i);
        let body = f(self);
        self.regs.pop();
        Term::lam(&hint(i), body)
    }

    fn program(&mut self, nodes: &[ProgramNode]) -> Term {
        crate::grow(|| {
            let Some((node, rest)) = nodes.split_first() else {
                unreachable!("typed programs end with Call")
            };
            match &node.rule {
                ProgramRule::LoadEmpty { i, .. } => self.bind(*i, |c| c.program(rest)),
                ProgramRule::LoadTape { i, derivation, .. } => {
                    let arg = reverse_derivation_memo(derivation, self.memo);
                    Term::app(self.bind(*i, |c| c.program(rest)), arg)
                }
                ProgramRule::Pred { i, j } | ProgramRule::Succ { i, j } => {
                    let xi = self.var(*i);
                    let op = if matches!(node.rule, ProgramRule::Pred { .. }) {
                        Term::pred(xi.clone())
                    } else {
                        Term::succ(xi.clone())
                    };
                    ifc(xi, Term::app(self.bind(*j, |c| c.program(rest)), op))
                }
                ProgramRule::Test { i, j, k, l, .. } => {
                    let (xi, xj, xk) = (self.var(*i), self.var(*j), self.var(*k));
                    let test = Term::ifz(xi.clone(), xj, xk);
                    ifc(xi, Term::app(self.bind(*l, |c| c.program(rest)), test))
                }
                ProgramRule::App { i, j, k, .. } => {
                    let arg = Term::app(self.var(*i), self.var(*j));
                    Term::app(self.bind(*k, |c| c.program(rest)), arg)
                }
                ProgramRule::Call { i, args } => {
                    let head = self.var(*i);
                    let args: Vec<_> =
                        args.iter().map(|(_, d)| reverse_derivation_memo(d, self.memo)).collect();
                    Term::apps(head, args)
                }
            }
        })
    }
}

fn reverse_derivation_memo(d: &Derivation, memo: &mut FxHashMap<*const Derivation, Term>) -> Term {
    let key = d as *const Derivation;
    if let Some(t) = memo.get(&key) {
        return t.clone();
    }
    let t = match d {
        Derivation::Nat { n } => Term::numeral(*n),
        Derivation::Fix { .. } => Term::lam("x", Term::fix(Term::Var(0))),
        Derivation::Machine(md) => crate::grow(|| {
            let typed: Vec<(usize, &Derivation)> = md
                .registers
                .iter()
                .enumerate()
                .filter_map(|(i, r)| match r {
                    RegisterJudgement::Typed { derivation, .. } => Some((i, &**derivation)),
                    RegisterJudgement::Empty => None,
                })
                .collect();
            let args: Vec<Term> = typed.iter().map(|(_, d)| reverse_derivation_memo(d, memo)).collect();
            let mut ctx = ReverseContext { regs: typed.iter().map(|(i, _)| *i).collect(), memo };
            let mut body = ctx.program(&md.program);
            for (i, _) in typed.iter().rev() {
                body = Term::lam(&hint(*i), body);
            }
            Term::apps(body, args)
        }),
    };
    memo.insert(key, t.clone());
    t
}

/// `R⟦d⟧` for a derivation of `M : α`.
pub fn reverse_derivation(d: &Derivation) -> Term {
    reverse_derivation_memo(d, &mut FxHashMap::default())
}

/// `R⟦m⟧α`, built from the derivation produced by [`check_type`].
pub fn reverse_machine(m: &Machine, alpha: &SimpleType, budget: usize) -> Result<Term, TypeError> {
    let d = check_type(m, alpha, budget)?;
    Ok(reverse_derivation(&d))
}

#[derive(Debug, thiserror::Error)]
pub enum RoundtripError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Translate(#[from] crate::translate::TranslateError),
}

/// Compares `T⟦R⟦m⟧α⟧` with `m` at `α` over the argument corpus.
pub fn roundtrip_check(
    m: &Machine,
    alpha: &SimpleType,
    fuel: u64,
    corpus: &ArgumentCorpus,
) -> Result<Verdict, RoundtripError> {
    let t = reverse_machine(m, alpha, crate::typing::DEFAULT_DEPTH_BUDGET)?;
    let back = translate_pcf(&t, &[])?;
    Ok(equiv_at_type(&back, m, alpha, fuel, corpus)?)
}
