//! Type assignment for EAMs.
//!
//! Principal types are inferred by unification and cached per address; a
//! machine referenced several times gets a fresh instance at each use.
//! [`check_type`] then rebuilds an explicit derivation at a concrete type.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::engine::{step, StepOutcome};
use crate::machine::{resolve, Address, Instruction, Machine, Y_ADDRESS};
use crate::types::{Scheme, SimpleType, Ty, Unifier};

/// Default bound on nested address resolutions.
pub const DEFAULT_DEPTH_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("rule ({rule}) fails{}: {detail}", pos.map(|p| format!(" at instruction {p}")).unwrap_or_default())]
    Failure { rule: &'static str, pos: Option<usize>, detail: String },
    #[error("depth budget exhausted")]
    BudgetExhausted,
}

fn fail(rule: &'static str, pos: Option<usize>, detail: impl Into<String>) -> TypeError {
    TypeError::Failure { rule, pos, detail: detail.into() }
}

/// Register typing context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegTypeEnv(pub BTreeMap<usize, SimpleType>);

impl RegTypeEnv {
    pub fn get(&self, i: usize) -> Option<&SimpleType> {
        self.0.get(&i)
    }
}

impl fmt::Display for RegTypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, t)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}:{t}")?;
        }
        Ok(())
    }
}

/// A typing derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    /// Numeral machine at `int`.
    Nat { n: u64 },
    /// The Y machine at `(ty -> ty) -> ty`.
    Fix { ty: SimpleType },
    /// Registers and program typed separately.
    Machine(MachineDerivation),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineDerivation {
    pub machine: Machine,
    pub ty: SimpleType,
    pub registers: Vec<RegisterJudgement>,
    /// One node per instruction; node `k` concludes `Δ_k ⊩ (P_k, T_k) : ty_k`.
    pub program: Vec<ProgramNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegisterJudgement {
    Empty,
    Typed { address: Address, derivation: Arc<Derivation> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramNode {
    pub env: RegTypeEnv,
    pub ty: SimpleType,
    pub rule: ProgramRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProgramRule {
    LoadEmpty { i: usize, ty: SimpleType },
    LoadTape { i: usize, address: Address, derivation: Arc<Derivation> },
    Pred { i: usize, j: usize },
    Succ { i: usize, j: usize },
    Test { i: usize, j: usize, k: usize, l: usize, ty: SimpleType },
    App { i: usize, j: usize, k: usize, arg: SimpleType, res: SimpleType },
    Call { i: usize, args: Vec<(Address, Arc<Derivation>)> },
}

impl ProgramRule {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramRule::LoadEmpty { .. } => "load_∅",
            ProgramRule::LoadTape { .. } => "load_T",
            ProgramRule::Pred { .. } => "pred",
            ProgramRule::Succ { .. } => "succ",
            ProgramRule::Test { .. } => "test",
            ProgramRule::App { .. } => "app",
            ProgramRule::Call { .. } => "call",
        }
    }
}

impl Derivation {
    pub fn ty(&self) -> SimpleType {
        match self {
            Derivation::Nat { .. } => SimpleType::Int,
            Derivation::Fix { ty } => {
                SimpleType::arrow(SimpleType::arrow(ty.clone(), ty.clone()), ty.clone())
            }
            Derivation::Machine(d) => d.ty.clone(),
        }
    }

    /// Number of nodes, counting shared subderivations once per occurrence.
    pub fn size(&self) -> usize {
        match self {
            Derivation::Nat { .. } | Derivation::Fix { .. } => 1,
            Derivation::Machine(d) => {
                let regs: usize = d
                    .registers
                    .iter()
                    .map(|r| match r {
                        RegisterJudgement::Empty => 1,
                        RegisterJudgement::Typed { derivation, .. } => 1 + derivation.size(),
                    })
                    .sum();
                let prog: usize = d
                    .program
                    .iter()
                    .map(|n| match &n.rule {
                        ProgramRule::LoadTape { derivation, .. } => 1 + derivation.size(),
                        ProgramRule::Call { args, .. } => {
                            1 + args.iter().map(|(_, d)| d.size()).sum::<usize>()
                        }
                        _ => 1,
                    })
                    .sum();
                1 + regs + prog
            }
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            Derivation::Nat { n } => writeln!(f, "{pad}(nat) {n} : int"),
            Derivation::Fix { .. } => writeln!(f, "{pad}(fix) Y : {}", self.ty()),
            Derivation::Machine(d) => {
                writeln!(f, "{pad}(R) {} : {}", d.machine, d.ty)?;
                for (i, r) in d.registers.iter().enumerate() {
                    match r {
                        RegisterJudgement::Empty => writeln!(f, "{pad}  (R_∅) R{i}")?,
                        RegisterJudgement::Typed { address, derivation } => {
                            writeln!(f, "{pad}  (R_T) R{i} = {address}")?;
                            derivation.fmt_indented(f, depth + 2)?;
                        }
                    }
                }
                for node in &d.program {
                    writeln!(f, "{pad}  ({}) {} ⊩ … : {}", node.rule.name(), node.env, node.ty)?;
                    match &node.rule {
                        ProgramRule::LoadTape { derivation, .. } => {
                            derivation.fmt_indented(f, depth + 2)?
                        }
                        ProgramRule::Call { args, .. } => {
                            for (_, d) in args {
                                d.fmt_indented(f, depth + 2)?;
                            }
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

type Cache = RwLock<FxHashMap<Address, Result<Arc<Scheme>, TypeError>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn y_scheme() -> Scheme {
    let a = Ty::Var(0);
    Scheme { ty: Ty::arrow(Ty::arrow(a.clone(), a.clone()), a), vars: 1 }
}


/// Principal type scheme of the machine at `a`.
fn scheme_of(a: Address, depth: usize, budget: usize) -> Result<Arc<Scheme>, TypeError> {
    match a {
        Address::Nat(_) => return Ok(Arc::new(Scheme::mono(SimpleType::Int))),
        Y_ADDRESS => return Ok(Arc::new(y_scheme())),
        Address::Sym(_) => {}
    }
    if let Some(r) = cache().read().get(&a) {
        return r.clone();
    }
    if depth >= budget {
        return Err(TypeError::BudgetExhausted);
    }
    let m = resolve(a);
    let r = crate::grow(|| {
        let mut u = Unifier::new();
        let c = constraints(&m, &mut u, depth + 1, budget)?;
        Ok(Arc::new(Scheme::generalize(&u, &c.result)))
    });
    if !matches!(r, Err(TypeError::BudgetExhausted)) {
        cache().write().insert(a, r.clone());
    }
    r
}

enum StepTys {
    Load { i: usize, ty: Ty, from: Option<Address> },
    Pred { i: usize, j: usize },
    Succ { i: usize, j: usize },
    Test { i: usize, j: usize, k: usize, l: usize, ty: Ty },
    App { i: usize, j: usize, k: usize, arg: Ty, res: Ty },
    Call { i: usize, args: Vec<(Address, Ty)> },
}

struct Constraints {
    regs: Vec<Option<(Address, Ty)>>,
    /// Context before each instruction.
    envs: Vec<FxHashMap<usize, Ty>>,
    /// Type of the remaining program before each instruction.
    tys: Vec<Ty>,
    steps: Vec<StepTys>,
    result: Ty,
}

/// Generates and solves the constraints of rule (R) for a non-constant machine.
fn constraints(
    m: &Machine,
    u: &mut Unifier,
    depth: usize,
    budget: usize,
) -> Result<Constraints, TypeError> {
    let mut regs = Vec::with_capacity(m.num_registers());
    let mut delta: FxHashMap<usize, Ty> = FxHashMap::default();
    for (i, r) in m.registers().iter().enumerate() {
        match r {
            Some(a) => {
                let t = scheme_of(*a, depth, budget)?.instantiate(u);
                delta.insert(i, t.clone());
                regs.push(Some((*a, t)));
            }
            None => regs.push(None),
        }
    }
    let get = |delta: &FxHashMap<usize, Ty>, i: usize, rule, pos| {
        delta.get(&i).cloned().ok_or_else(|| fail(rule, Some(pos), format!("R{i} is untyped")))
    };
    let mut tape = m.tape().iter();
    let mut params: Vec<Ty> = Vec::new();
    let mut envs = Vec::new();
    let mut steps = Vec::new();
    let mut result = None;
    for (pos, &ins) in m.program().instructions().iter().enumerate() {
        envs.push(delta.clone());
        match ins {
            Instruction::Load(i) => {
                let (ty, from) = match tape.next() {
                    Some(a) => (scheme_of(*a, depth, budget)?.instantiate(u), Some(*a)),
                    None => {
                        let t = u.fresh();
                        params.push(t.clone());
                        (t, None)
                    }
                };
                delta.insert(i, ty.clone());
                steps.push(StepTys::Load { i, ty, from });
            }
            Instruction::Pred(i, j) | Instruction::Succ(i, j) => {
                let rule = if matches!(ins, Instruction::Pred(..)) { "pred" } else { "succ" };
                let ti = get(&delta, i, rule, pos)?;
                u.unify(&ti, &Ty::Int)
                    .map_err(|_| fail(rule, Some(pos), format!("R{i} is not of type int")))?;
                delta.insert(j, Ty::Int);
                steps.push(if rule == "pred" { StepTys::Pred { i, j } } else { StepTys::Succ { i, j } });
            }
            Instruction::Test(i, j, k, l) => {
                let ti = get(&delta, i, "test", pos)?;
                u.unify(&ti, &Ty::Int)
                    .map_err(|_| fail("test", Some(pos), format!("R{i} is not of type int")))?;
                let tj = get(&delta, j, "test", pos)?;
                let tk = get(&delta, k, "test", pos)?;
                u.unify(&tj, &tk).map_err(|_| {
                    fail("test", Some(pos), format!("R{j} and R{k} have different types"))
                })?;
                delta.insert(l, tj.clone());
                steps.push(StepTys::Test { i, j, k, l, ty: tj });
            }
            Instruction::App(i, j, k) => {
                let ti = get(&delta, i, "app", pos)?;
                let tj = get(&delta, j, "app", pos)?;
                let res = u.fresh();
                u.unify(&ti, &Ty::arrow(tj.clone(), res.clone())).map_err(|_| {
                    fail("app", Some(pos), format!("R{i} cannot be applied to R{j}"))
                })?;
                delta.insert(k, res.clone());
                steps.push(StepTys::App { i, j, k, arg: tj, res });
            }
            Instruction::Call(i) => {
                let ti = get(&delta, i, "call", pos)?;
                let mut args = Vec::new();
                for a in tape.by_ref() {
                    args.push((*a, scheme_of(*a, depth, budget)?.instantiate(u)));
                }
                let res = u.fresh();
                let want = args.iter().rev().fold(res.clone(), |acc, (_, t)| Ty::arrow(t.clone(), acc));
                u.unify(&ti, &want).map_err(|_| {
                    fail("call", Some(pos), format!("R{i} does not accept the tape"))
                })?;
                steps.push(StepTys::Call { i, args });
                result = Some(res);
            }
        }
    }
    let Some(res) = result else {
        return Err(fail("R", None, "no rule types a program without Call"));
    };
    let result = params.iter().rev().fold(res, |acc, t| Ty::arrow(t.clone(), acc));
    // Type of the remaining program before each instruction.
    let mut tys = Vec::with_capacity(steps.len());
    let mut remaining = result.clone();
    for s in &steps {
        tys.push(remaining.clone());
        if let StepTys::Load { from: None, .. } = s {
            remaining = match u.shallow(&remaining) {
                Ty::Arrow(_, b) => *b,
                other => other,
            };
        }
    }
    Ok(Constraints { regs, envs, tys, steps, result })
}

fn machine_ty(m: &Machine, u: &mut Unifier, budget: usize) -> Result<Ty, TypeError> {
    if m.as_numeral().is_some() {
        return Ok(Ty::Int);
    }
    if m.is_y() {
        return Ok(y_scheme().instantiate(u));
    }
    crate::grow(|| Ok(constraints(m, u, 0, budget)?.result))
}

/// Infers a type for `m`, sending unconstrained type variables to `int`.
pub fn infer_type(m: &Machine, budget: usize) -> Result<SimpleType, TypeError> {
    let mut u = Unifier::new();
    let t = machine_ty(m, &mut u, budget)?;
    Ok(u.default_int(&t))
}

/// Principal type scheme of `m`.
pub fn principal_scheme(m: &Machine, budget: usize) -> Result<Scheme, TypeError> {
    let mut u = Unifier::new();
    let t = machine_ty(m, &mut u, budget)?;
    Ok(Scheme::generalize(&u, &t))
}

/// Decides `m : alpha` without building a derivation.
pub fn typable_at(m: &Machine, alpha: &SimpleType, budget: usize) -> Result<(), TypeError> {
    let mut u = Unifier::new();
    let t = machine_ty(m, &mut u, budget)?;
    u.unify(&t, &alpha.to_ty()).map_err(|_| {
        let got = Scheme::generalize(&u, &t);
        fail(rule_of(m), None, format!("machine has type {} which has no instance {alpha}", show(&got.ty)))
    })
}

fn rule_of(m: &Machine) -> &'static str {
    if m.as_numeral().is_some() {
        "nat"
    } else if m.is_y() {
        "fix"
    } else {
        "R"
    }
}

fn show(t: &Ty) -> String {
    match t {
        Ty::Int => "int".into(),
        Ty::Var(v) => format!("t{v}"),
        Ty::Arrow(a, b) => match **a {
            Ty::Arrow(..) => format!("({}) -> {}", show(a), show(b)),
            _ => format!("{} -> {}", show(a), show(b)),
        },
    }
}

/// Builds a derivation of `m : alpha`.
pub fn check_type(m: &Machine, alpha: &SimpleType, budget: usize) -> Result<Derivation, TypeError> {
    typable_at(m, alpha, budget)?;
    let mut memo = FxHashMap::default();
    derive(m, alpha, 0, budget, &mut memo)
}

type Memo = FxHashMap<(Address, SimpleType), Arc<Derivation>>;

fn derive_addr(
    a: Address,
    alpha: &SimpleType,
    depth: usize,
    budget: usize,
    memo: &mut Memo,
) -> Result<Arc<Derivation>, TypeError> {
    if let Some(d) = memo.get(&(a, alpha.clone())) {
        return Ok(d.clone());
    }
    if depth >= budget {
        return Err(TypeError::BudgetExhausted);
    }
    let d = match a {
        Address::Nat(n) => Derivation::Nat { n },
        Y_ADDRESS => derive_y(alpha)?,
        _ => {
            let m = resolve(a);
            crate::grow(|| derive(&m, alpha, depth + 1, budget, memo))?
        }
    };
    let d = Arc::new(d);
    memo.insert((a, alpha.clone()), d.clone());
    Ok(d)
}

fn derive_y(alpha: &SimpleType) -> Result<Derivation, TypeError> {
    if let SimpleType::Arrow(f, b) = alpha {
        if let SimpleType::Arrow(x, y) = &**f {
            if x == y && y == b {
                return Ok(Derivation::Fix { ty: (**b).clone() });
            }
        }
    }
    Err(fail("fix", None, format!("Y has no type {alpha}")))
}

fn derive(
    m: &Machine,
    alpha: &SimpleType,
    depth: usize,
    budget: usize,
    memo: &mut Memo,
) -> Result<Derivation, TypeError> {
    if let Some(n) = m.as_numeral() {
        return if alpha.is_int() {
            Ok(Derivation::Nat { n })
        } else {
            Err(fail("nat", None, format!("numeral {n} has type int, not {alpha}")))
        };
    }
    if m.is_y() {
        return derive_y(alpha);
    }
    let mut u = Unifier::new();
    let c = constraints(m, &mut u, depth, budget)?;
    u.unify(&c.result, &alpha.to_ty())
        .map_err(|_| fail("R", None, format!("machine has no type {alpha}")))?;
    let conc = |t: &Ty| u.default_int(t);

    let mut registers = Vec::with_capacity(c.regs.len());
    for r in &c.regs {
        registers.push(match r {
            None => RegisterJudgement::Empty,
            Some((a, t)) => RegisterJudgement::Typed {
                address: *a,
                derivation: derive_addr(*a, &conc(t), depth, budget, memo)?,
            },
        });
    }
    let mut program = Vec::with_capacity(c.steps.len());
    for ((s, env), ty) in c.steps.iter().zip(&c.envs).zip(&c.tys) {
        let env = RegTypeEnv(env.iter().map(|(i, t)| (*i, conc(t))).collect());
        let rule = match s {
            StepTys::Load { i, ty, from: None } => ProgramRule::LoadEmpty { i: *i, ty: conc(ty) },
            StepTys::Load { i, ty, from: Some(a) } => ProgramRule::LoadTape {
                i: *i,
                address: *a,
                derivation: derive_addr(*a, &conc(ty), depth, budget, memo)?,
            },
            StepTys::Pred { i, j } => ProgramRule::Pred { i: *i, j: *j },
            StepTys::Succ { i, j } => ProgramRule::Succ { i: *i, j: *j },
            StepTys::Test { i, j, k, l, ty } => {
                ProgramRule::Test { i: *i, j: *j, k: *k, l: *l, ty: conc(ty) }
            }
            StepTys::App { i, j, k, arg, res } => {
                ProgramRule::App { i: *i, j: *j, k: *k, arg: conc(arg), res: conc(res) }
            }
            StepTys::Call { i, args } => {
                let mut ds = Vec::with_capacity(args.len());
                for (a, t) in args {
                    ds.push((*a, derive_addr(*a, &conc(t), depth, budget, memo)?));
                }
                ProgramRule::Call { i: *i, args: ds }
            }
        };
        program.push(ProgramNode { env, ty: conc(ty), rule });
    }
    Ok(Derivation::Machine(MachineDerivation {
        machine: m.clone(),
        ty: alpha.clone(),
        registers,
        program,
    }))
}

/// Outcome of re-checking a type along a reduction sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubjectReduction {
    pub steps_checked: u64,
    /// First step whose machine fails to check, with the error.
    pub violation: Option<(u64, Machine, String)>,
    /// Whether the sequence ended in an error state.
    pub errored: bool,
}

/// Steps `m` up to `fuel` times, re-checking `alpha` after each step.
pub fn subject_reduction_check(m: &Machine, alpha: &SimpleType, fuel: u64) -> SubjectReduction {
    let mut cur = m.clone();
    let mut n = 0;
    while n < fuel {
        match step(&cur) {
            StepOutcome::Next(next) => {
                n += 1;
                if let Err(e) = typable_at(&next, alpha, DEFAULT_DEPTH_BUDGET) {
                    return SubjectReduction {
                        steps_checked: n,
                        violation: Some((n, next, e.to_string())),
                        errored: false,
                    };
                }
                cur = next;
            }
            StepOutcome::Error(..) => {
                return SubjectReduction { steps_checked: n, violation: None, errored: true }
            }
            _ => break,
        }
    }
    SubjectReduction { steps_checked: n, violation: None, errored: false }
}
