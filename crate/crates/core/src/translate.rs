//! Auxiliary machines and the translation of (E)PCF terms into EAMs.

use std::fmt;
use std::sync::OnceLock;

use parking_lot::Mutex;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::engine::{Focus, FocusStep};
use crate::epcf::ETerm;
use crate::machine::{intern, y_machine, Address, Instruction::*, Machine, Y_ADDRESS};
use crate::pcf::{Name, Term, TypeEnv};
use crate::types::SimpleType;

/// The fixed library of auxiliary machines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AuxSpec {
    /// Returns its `i`-th of `k` arguments (1-based).
    Proj { k: usize, i: usize },
    /// Feeds `e1..en` to each of `k` arguments, then applies the head to the results.
    AppN { n: usize, k: usize },
    PredM,
    SuccM,
    IfzM,
    YM,
    /// The `n`-th finite approximant of `Y`.
    FixApprox(usize),
}

impl fmt::Display for AuxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuxSpec::Proj { k, i } => write!(f, "Proj({k},{i})"),
            AuxSpec::AppN { n, k } => write!(f, "AppN({n},{k})"),
            AuxSpec::PredM => f.write_str("Pred"),
            AuxSpec::SuccM => f.write_str("Succ"),
            AuxSpec::IfzM => f.write_str("Ifz"),
            AuxSpec::YM => f.write_str("Y"),
            AuxSpec::FixApprox(n) => write!(f, "fix_{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("invalid auxiliary machine {0}")]
    BadSpec(AuxSpec),
    #[error("unbound variable {0}")]
    Unbound(Name),
}

fn aux_cache() -> &'static Mutex<FxHashMap<AuxSpec, Machine>> {
    static CACHE: OnceLock<Mutex<FxHashMap<AuxSpec, Machine>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Builds (and memoizes) an auxiliary machine.
pub fn aux_machine(spec: AuxSpec) -> Result<Machine, TranslateError> {
    if let Some(m) = aux_cache().lock().get(&spec) {
        return Ok(m.clone());
    }
    let m = build_aux(spec)?;
    aux_cache().lock().insert(spec, m.clone());
    Ok(m)
}

/// Address of an auxiliary machine.
pub fn aux_address(spec: AuxSpec) -> Result<Address, TranslateError> {
    Ok(intern(&aux_machine(spec)?))
}

fn aux(spec: AuxSpec) -> Machine {
    aux_machine(spec).expect("internal auxiliary spec is valid")
}

fn build_aux(spec: AuxSpec) -> Result<Machine, TranslateError> {
    let bad = || TranslateError::BadSpec(spec);
    let m = match spec {
        AuxSpec::Proj { k, i } => {
            if k == 0 || i == 0 || i > k {
                return Err(bad());
            }
            let mut prog = vec![Load(1); i - 1];
            prog.push(Load(0));
            prog.extend(std::iter::repeat_n(Load(1), k - i));
            prog.push(Call(0));
            Machine::build(vec![None], prog, vec![])
        }
        AuxSpec::PredM => Machine::build(vec![None], vec![Load(0), Pred(0, 0), Call(0)], vec![]),
        AuxSpec::SuccM => Machine::build(vec![None], vec![Load(0), Succ(0, 0), Call(0)], vec![]),
        AuxSpec::IfzM => Machine::build(
            vec![None; 3],
            vec![Load(0), Load(1), Load(2), Test(0, 1, 2, 0), Call(0)],
            vec![],
        ),
        AuxSpec::YM => return Ok(y_machine()),
        AuxSpec::AppN { k: 0, .. } => return Err(bad()),
        AuxSpec::AppN { n: 0, .. } => return aux_machine(AuxSpec::Proj { k: 1, i: 1 }),
        AuxSpec::AppN { n, k } => {
            let prev = aux_address(AuxSpec::AppN { n: n - 1, k })?;
            let mut regs = vec![None; k + 3];
            regs[0] = Some(prev);
            let mut prog: Vec<_> = (1..=k + 2).map(Load).collect();
            prog.extend((2..=k + 1).map(|j| App(j, k + 2, j)));
            prog.extend((1..=k + 1).map(|j| App(0, j, 0)));
            prog.push(Call(0));
            Machine::build(regs, prog, vec![])
        }
        AuxSpec::FixApprox(0) => return Ok(omega_machine()),
        AuxSpec::FixApprox(n) => {
            let prev = aux_address(AuxSpec::FixApprox(n - 1))?;
            let (regs, prog, _) = y_machine().into_parts();
            return Ok(Machine::from_parts(regs, prog, vec![prev]));
        }
    };
    Ok(m.expect("auxiliary programs are valid"))
}

/// `Y@[#Proj(1,1)]`, the translation of `fix (λx.x)`.
pub fn omega_machine() -> Machine {
    y_machine().append_tape(&[intern(&aux(AuxSpec::Proj { k: 1, i: 1 }))])
}

fn proj(k: usize, i: usize) -> Machine {
    aux(AuxSpec::Proj { k, i })
}

fn app_n(n: usize, k: usize, args: &[Address]) -> Machine {
    aux(AuxSpec::AppN { n, k }).append_tape(args)
}

struct Translator {
    next_id: u32,
}

impl Translator {
    fn fresh(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id
    }

    /// `vars` lists the tape positions by variable id; `scope` maps names to ids.
    fn go(
        &mut self,
        t: &ETerm,
        vars: &[u32],
        scope: &mut Vec<(Name, u32)>,
    ) -> Result<Machine, TranslateError> {
        crate::grow(|| self.go_inner(t, vars, scope))
    }

    fn go_inner(
        &mut self,
        t: &ETerm,
        vars: &[u32],
        scope: &mut Vec<(Name, u32)>,
    ) -> Result<Machine, TranslateError> {
        let n = vars.len();
        let addr = |m: Machine| intern(&m);
        Ok(match t {
            ETerm::Var(x) => {
                let id = scope
                    .iter()
                    .rev()
                    .find(|(y, _)| y == x)
                    .map(|(_, id)| *id)
                    .ok_or_else(|| TranslateError::Unbound(x.clone()))?;
                let i = vars.iter().position(|v| *v == id).expect("scoped ids are listed");
                proj(n, i + 1)
            }
            ETerm::Lam(y, m) => {
                let id = self.fresh();
                let mut vs = vars.to_vec();
                vs.push(id);
                scope.push((y.clone(), id));
                let r = self.go(m, &vs, scope);
                scope.pop();
                r?
            }
            ETerm::ESub(m, y, arg) => {
                let tn = self.go(arg, &[], &mut Vec::new())?;
                let id = self.fresh();
                let mut vs = vec![id];
                vs.extend_from_slice(vars);
                scope.push((y.clone(), id));
                let r = self.go(m, &vs, scope);
                scope.pop();
                r?.append_tape(&[addr(tn)])
            }
            ETerm::App(m, a) => {
                let tm = self.go(m, vars, scope)?;
                let ta = self.go(a, vars, scope)?;
                app_n(n, 2, &[addr(proj(1, 1)), addr(tm), addr(ta)])
            }
            ETerm::Zero => proj(n + 1, 1).append_tape(&[Address::Nat(0)]),
            ETerm::Pred(m) | ETerm::Succ(m) => {
                let op = if matches!(t, ETerm::Pred(_)) { AuxSpec::PredM } else { AuxSpec::SuccM };
                let tm = self.go(m, vars, scope)?;
                app_n(n, 1, &[addr(aux(op)), addr(tm)])
            }
            ETerm::Ifz(l, a, b) => {
                let tl = self.go(l, vars, scope)?;
                let ta = self.go(a, vars, scope)?;
                let tb = self.go(b, vars, scope)?;
                app_n(n, 3, &[addr(aux(AuxSpec::IfzM)), addr(tl), addr(ta), addr(tb)])
            }
            ETerm::Fix(m) => {
                let tm = self.go(m, vars, scope)?;
                if n == 0 {
                    y_machine().append_tape(&[addr(tm)])
                } else {
                    app_n(n, 1, &[Y_ADDRESS, addr(tm)])
                }
            }
        })
    }
}

/// `T⟦t⟧` relative to the ordered free variables `free_vars`.
pub fn translate(t: &ETerm, free_vars: &[&str]) -> Result<Machine, TranslateError> {
    let mut tr = Translator { next_id: 0 };
    let mut scope = Vec::new();
    let mut vars = Vec::new();
    for x in free_vars {
        let id = tr.fresh();
        vars.push(id);
        scope.push((Name::from(*x), id));
    }
    tr.go(t, &vars, &mut scope)
}

/// Translation of a PCF term.
pub fn translate_pcf(t: &Term, free_vars: &[&str]) -> Result<Machine, TranslateError> {
    translate(&t.to_named(), free_vars)
}

/// `δ1 → … → δn → α` for `Γ = x1:δ1, …, xn:δn`.
pub fn translated_type(env: &TypeEnv, alpha: &SimpleType) -> SimpleType {
    SimpleType::arrows(env.bindings().iter().map(|(_, t)| t.clone()), alpha.clone())
}

/// A common reduct of two machines with the lengths of both reduction paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceWitness {
    pub common: Machine,
    pub len1: u64,
    pub len2: u64,
}

struct Walker {
    cur: Focus,
    seen: FxHashMap<Focus, u64>,
    steps: u64,
    done: bool,
}

impl Walker {
    fn new(m: &Machine) -> Walker {
        let cur = Focus::new(m);
        let mut seen = FxHashMap::default();
        seen.insert(cur.clone(), 0);
        Walker { cur, seen, steps: 0, done: false }
    }

    fn advance(&mut self) -> bool {
        if self.done || self.cur.step() != FocusStep::Moved {
            self.done = true;
            return false;
        }
        self.steps += 1;
        self.seen.entry(self.cur.clone()).or_insert(self.steps);
        true
    }
}

/// Searches for `Z` with `m1 ↠ Z ↞ m2`, stepping each side at most `fuel` times.
pub fn convergence_witness(m1: &Machine, m2: &Machine, fuel: u64) -> Option<ConvergenceWitness> {
    let mut a = Walker::new(m1);
    let mut b = Walker::new(m2);
    let hit = |z: &Focus, len1: u64, len2: u64| ConvergenceWitness { common: z.to_machine(), len1, len2 };
    if let Some(&j) = b.seen.get(&a.cur) {
        return Some(hit(&a.cur, 0, j));
    }
    for _ in 0..fuel {
        let mut progressed = false;
        if a.advance() {
            progressed = true;
            if let Some(&j) = b.seen.get(&a.cur) {
                return Some(hit(&a.cur, a.steps, j));
            }
        }
        if b.advance() {
            progressed = true;
            if let Some(&i) = a.seen.get(&b.cur) {
                return Some(hit(&b.cur, i, b.steps));
            }
        }
        if !progressed {
            return None;
        }
    }
    None
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::corpus::TermGen;
    use crate::engine::run;
    use crate::pcf::eval_pcf_big;
    use crate::typing::check_type;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn simulation_on_random_programs(seed in any::<u64>()) {
            let mut g = TermGen::new(seed);
            g.esub = false;
            let t = Term::from_named(&g.program(5)).unwrap();
            let src = eval_pcf_big(&t, 100_000);
            let eam = run(&translate_pcf(&t, &[]).unwrap(), 1_000_000);
            if let (Some(a), true) = (src.numeral(), matches!(eam, crate::engine::RunResult::Halted(..))) {
                prop_assert_eq!(eam.numeral(), Some(a));
            }
        }

        #[test]
        fn translations_are_typed(seed in any::<u64>()) {
            let mut g = TermGen::new(seed);
            let ty = g.ty();
            let t = g.term(&[("z".into(), SimpleType::Int)], &ty, 4);
            let env = TypeEnv::new().bind("z", SimpleType::Int);
            let m = translate(&t, &["z"]).unwrap();
            prop_assert!(check_type(&m, &translated_type(&env, &ty), 100_000).is_ok(), "{} : {}", t, ty);
        }
    }
}
