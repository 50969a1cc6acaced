//! Small-step semantics of EAMs and fuel-bounded evaluation.

use std::fmt;
use std::sync::Arc;

use crate::machine::{Address, Instruction, Machine, Registry};

/// Result of a single reduction step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Next(Machine),
    /// Empty program.
    Final(Machine),
    /// `Load` on an empty tape.
    Stuck(Machine),
    /// An arithmetic instruction waits on a register whose machine cannot reduce.
    Error(Machine, String),
}

/// Result of a fuel-bounded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Halted(Machine, u64),
    OutOfFuel(Machine, u64),
    Errored(Machine, u64, String),
}

impl RunResult {
    pub fn machine(&self) -> &Machine {
        match self {
            RunResult::Halted(m, _) | RunResult::OutOfFuel(m, _) | RunResult::Errored(m, _, _) => m,
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            RunResult::Halted(_, s) | RunResult::OutOfFuel(_, s) | RunResult::Errored(_, s, _) => *s,
        }
    }

    /// The numeral reached, if the run halted on a numeral machine.
    pub fn numeral(&self) -> Option<u64> {
        match self {
            RunResult::Halted(m, _) => m.as_numeral(),
            _ => None,
        }
    }
}

impl fmt::Display for RunResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunResult::Halted(m, s) => match m.as_numeral() {
                Some(n) => write!(f, "{n} ({s} steps)"),
                None => write!(f, "halted at {m} ({s} steps)"),
            },
            RunResult::OutOfFuel(_, s) => write!(f, "out of fuel after {s} steps"),
            RunResult::Errored(m, s, d) => write!(f, "error after {s} steps at {m}: {d}"),
        }
    }
}

/// The register an arithmetic instruction is forcing, when it holds a non-numeral.
fn waiting_on(m: &Machine) -> Option<(usize, Address)> {
    match m.program().first()? {
        Instruction::Pred(i, _) | Instruction::Succ(i, _) | Instruction::Test(i, ..) => {
            match m.registers()[*i] {
                Some(a @ Address::Sym(_)) => Some((*i, a)),
                _ => None,
            }
        }
        _ => None,
    }
}

fn reg(m: &Machine, i: usize) -> Address {
    m.registers()[i].expect("valid programs read initialized registers")
}

/// One step of a machine that is not waiting on a register.
fn local_step(m: &Machine, registry: &Registry) -> StepOutcome {
    let Some(&ins) = m.program().first() else {
        return StepOutcome::Final(m.clone());
    };
    let mut regs = m.registers().to_vec();
    let mut tape = m.tape();
    match ins {
        Instruction::Load(i) => {
            let Some((&head, rest)) = tape.split_first() else {
                return StepOutcome::Stuck(m.clone());
            };
            if i < regs.len() {
                regs[i] = Some(head);
            }
            tape = rest;
        }
        Instruction::App(i, j, k) => {
            regs[k] = Some(registry.apply(reg(m, i), reg(m, j)));
        }
        Instruction::Call(i) => {
            return StepOutcome::Next(registry.resolve(reg(m, i)).append_tape(tape));
        }
        Instruction::Pred(i, j) | Instruction::Succ(i, j) => {
            let n = reg(m, i).as_nat().expect("forcing handled by caller");
            let v = if matches!(ins, Instruction::Pred(..)) { n.saturating_sub(1) } else { n + 1 };
            regs[j] = Some(Address::Nat(v));
        }
        Instruction::Test(i, j, k, l) => {
            let n = reg(m, i).as_nat().expect("forcing handled by caller");
            regs[l] = Some(if n == 0 { reg(m, j) } else { reg(m, k) });
        }
    }
    StepOutcome::Next(Machine::from_parts(regs, m.program().rest(), tape.to_vec()))
}

/// Performs one step.
pub fn step(m: &Machine) -> StepOutcome {
    step_observed(m, &mut |_| {})
}

/// Performs one step, calling `observe` on every machine of the chain of
/// nested registers being forced, outermost first (the top machine included).
///
/// Forcing is handled iteratively: the chain is walked down to the innermost
/// machine, that machine is stepped, and the results are written back upwards.
pub fn step_observed(m: &Machine, observe: &mut dyn FnMut(&Machine)) -> StepOutcome {
    let registry = Registry::global();
    let mut inner: Vec<Arc<Machine>> = Vec::new();
    let mut idxs: Vec<usize> = Vec::new();
    loop {
        let cur: &Machine = inner.last().map(|a| &**a).unwrap_or(m);
        observe(cur);
        let Some((i, a)) = waiting_on(cur) else { break };
        idxs.push(i);
        inner.push(registry.resolve(a));
    }
    let base: &Machine = inner.last().map(|a| &**a).unwrap_or(m);
    let out = local_step(base, registry);
    if inner.is_empty() {
        return out;
    }
    match out {
        StepOutcome::Next(mut child) => {
            for level in (0..inner.len()).rev() {
                let parent: &Machine = if level == 0 { m } else { &inner[level - 1] };
                let mut regs = parent.registers().to_vec();
                regs[idxs[level]] = Some(registry.intern(&child));
                child = Machine::from_parts(regs, parent.program().clone(), parent.tape().to_vec());
            }
            StepOutcome::Next(child)
        }
        other => {
            let why = match other {
                StepOutcome::Final(_) => "is final",
                StepOutcome::Stuck(_) => "is stuck",
                _ => "is in error",
            };
            let i = idxs[0];
            let a = reg(m, i);
            StepOutcome::Error(m.clone(), format!("register R{i} holds {a}, whose machine {why}"))
        }
    }
}

/// Outcome of [`Focus::step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FocusStep {
    Moved,
    Halted,
    Error(String),
}

/// A configuration held as the chain of machines being forced.
///
/// `frames` lists the enclosing machines, outermost first, each with the
/// register under evaluation cleared; `cur` is the machine that steps next.
/// Intermediate inner machines are never interned, and the representation is
/// canonical, so two foci are equal exactly when their configurations are.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Focus {
    frames: Vec<(Machine, usize)>,
    cur: Machine,
}

impl Focus {
    pub fn new(m: &Machine) -> Focus {
        let mut f = Focus { frames: Vec::new(), cur: m.clone() };
        f.settle();
        f
    }

    /// Number of enclosing machines.
    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    fn settle(&mut self) {
        while let Some(n) = self.cur.as_numeral() {
            let Some((mut parent, i)) = self.frames.pop() else { break };
            parent.set_register(i, Some(Address::Nat(n)));
            self.cur = parent;
        }
        let registry = Registry::global();
        while let Some((i, a)) = waiting_on(&self.cur) {
            let inner = (*registry.resolve(a)).clone();
            let mut parent = std::mem::replace(&mut self.cur, inner);
            parent.set_register(i, None);
            self.frames.push((parent, i));
        }
    }

    /// Whether another step exists.
    pub fn can_step(&self) -> bool {
        match self.cur.program().first() {
            None => false,
            Some(Instruction::Load(_)) => !self.cur.tape().is_empty(),
            Some(_) => true,
        }
    }

    pub fn step(&mut self) -> FocusStep {
        if self.can_step() {
            match local_step(&self.cur, Registry::global()) {
                StepOutcome::Next(n) => self.cur = n,
                _ => unreachable!("local steps succeed when a step exists"),
            }
            self.settle();
            return FocusStep::Moved;
        }
        let Some(&(_, i)) = self.frames.first() else { return FocusStep::Halted };
        let why = if self.cur.program().is_empty() { "is final" } else { "is stuck" };
        let a = reg(&self.to_machine(), i);
        FocusStep::Error(format!("register R{i} holds {a}, whose machine {why}"))
    }

    /// Whether the configuration at depth `depth() - other.depth()` equals `other`.
    ///
    /// With `other` an earlier configuration, a match means the run re-enters
    /// it, either at the top or nested inside a register being forced.
    pub fn embeds(&self, other: &Focus) -> bool {
        let d = self.frames.len();
        let k = other.frames.len();
        d >= k && self.cur == other.cur && self.frames[d - k..] == other.frames[..]
    }

    /// The configuration, interning the inner machines.
    pub fn to_machine(&self) -> Machine {
        let registry = Registry::global();
        let mut child = self.cur.clone();
        for (parent, i) in self.frames.iter().rev() {
            let mut p = parent.clone();
            p.set_register(*i, Some(registry.intern(&child)));
            child = p;
        }
        child
    }
}

/// Iterates [`step`] at most `fuel` times.
///
/// Only the final configuration is interned.
pub fn run(m: &Machine, fuel: u64) -> RunResult {
    let mut f = Focus::new(m);
    let mut steps = 0;
    loop {
        if steps == fuel && f.can_step() {
            return RunResult::OutOfFuel(f.to_machine(), steps);
        }
        match f.step() {
            FocusStep::Moved => steps += 1,
            FocusStep::Halted => return RunResult::Halted(f.to_machine(), steps),
            FocusStep::Error(d) => return RunResult::Errored(f.to_machine(), steps, d),
        }
    }
}

/// Like [`run`], also returning every configuration visited, starting with `m`.
pub fn trace(m: &Machine, fuel: u64) -> (Vec<Machine>, RunResult) {
    let mut out = vec![m.clone()];
    let mut steps = 0;
    loop {
        let cur = out.last().expect("non-empty");
        match step(cur) {
            StepOutcome::Next(n) => {
                if steps == fuel {
                    let r = RunResult::OutOfFuel(cur.clone(), steps);
                    return (out, r);
                }
                out.push(n);
                steps += 1;
            }
            StepOutcome::Final(x) | StepOutcome::Stuck(x) => {
                return (out, RunResult::Halted(x, steps))
            }
            StepOutcome::Error(x, d) => return (out, RunResult::Errored(x, steps, d)),
        }
    }
}

/// Iterator over successive configurations (excluding the start).
pub struct Steps {
    cur: Option<Machine>,
}

impl Iterator for Steps {
    type Item = Machine;

    fn next(&mut self) -> Option<Machine> {
        let cur = self.cur.take()?;
        match step(&cur) {
            StepOutcome::Next(n) => {
                self.cur = Some(n.clone());
                Some(n)
            }
            _ => None,
        }
    }
}

pub fn steps(m: &Machine) -> Steps {
    Steps { cur: Some(m.clone()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{intern, numeral, y_machine, Y_ADDRESS};
    use crate::samples;

    #[test]
    fn identity_transfers_in_two_steps() {
        let m = samples::succ1();
        let i = samples::identity().append_tape(&[intern(&m)]);
        let r = run(&i, 10);
        assert_eq!(r, RunResult::Halted(m, 2));
    }

    #[test]
    fn numerals_are_final() {
        assert_eq!(step(&numeral(3)), StepOutcome::Final(numeral(3)));
        let (tr, r) = trace(&numeral(0), 5);
        assert_eq!(tr, vec![numeral(0)]);
        assert_eq!(r, RunResult::Halted(numeral(0), 0));
    }

    #[test]
    fn identity_trace_has_three_configurations() {
        let m = samples::identity().append_tape(&[Address::Nat(3)]);
        let (tr, r) = trace(&m, 5);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr[2], numeral(3));
        assert_eq!(r.numeral(), Some(3));
    }

    #[test]
    fn succ2_and_add() {
        let s = samples::succ2();
        assert_eq!(run(&s.append_tape(&[Address::Nat(1)]), 1000).numeral(), Some(3));
        assert_eq!(run(&s.append_tape(&[Address::Nat(3)]), 1000).numeral(), Some(5));
        let add = samples::add().append_tape(&[Address::Nat(1), Address::Nat(3)]);
        assert_eq!(run(&add, 10_000).numeral(), Some(4));
    }

    #[test]
    fn stuck_and_zero_fuel() {
        let i = samples::identity();
        assert_eq!(step(&i), StepOutcome::Stuck(i.clone()));
        let m = i.append_tape(&[Address::Nat(1)]);
        assert_eq!(run(&m, 0), RunResult::OutOfFuel(m.clone(), 0));
    }

    #[test]
    fn y_of_identity_loops_with_period_seven() {
        let m = y_machine().append_tape(&[intern(&samples::identity())]);
        let (tr, r) = trace(&m, 20);
        assert!(matches!(r, RunResult::OutOfFuel(_, 20)));
        assert_eq!(tr[7], m);
        assert_eq!(tr[14], m);
        assert!((1..7).all(|k| tr[k] != m));
    }

    #[test]
    fn arithmetic_on_stuck_register_is_an_error() {
        use Instruction::*;
        let i = intern(&samples::identity());
        let m = Machine::build(vec![Some(i)], vec![Pred(0, 0), Call(0)], vec![]).unwrap();
        assert!(matches!(step(&m), StepOutcome::Error(..)));
        assert!(matches!(run(&m, 10), RunResult::Errored(_, 0, _)));
        let y = Machine::build(vec![Some(Y_ADDRESS)], vec![Succ(0, 0), Call(0)], vec![]).unwrap();
        // Y reduces once (loading itself), then gets stuck.
        assert!(matches!(run(&y, 10), RunResult::Errored(_, 1, _)));
    }

    #[test]
    fn nested_forcing_counts_one_step() {
        use Instruction::*;
        // Succ waiting on I@[5]: two inner steps, then one local step.
        let inner = intern(&samples::identity().append_tape(&[Address::Nat(5)]));
        let m = Machine::build(vec![Some(inner)], vec![Succ(0, 0), Call(0)], vec![]).unwrap();
        let r = run(&m, 100);
        assert_eq!(r, RunResult::Halted(numeral(6), 4));
        let mut seen = 0;
        let _ = step_observed(&m, &mut |_| seen += 1);
        assert_eq!(seen, 2);
    }

    #[test]
    fn focus_agrees_with_step() {
        let add = samples::add().append_tape(&[Address::Nat(2), Address::Nat(3)]);
        let y = y_machine().append_tape(&[intern(&samples::succ1())]);
        for m in [add, y] {
            let (tr, _) = trace(&m, 300);
            let mut f = Focus::new(&m);
            for c in &tr[1..] {
                assert_eq!(f.step(), FocusStep::Moved);
                assert_eq!(f.to_machine(), *c);
                assert_eq!(f, Focus::new(c));
            }
        }
    }

    #[test]
    fn load_into_missing_register_discards() {
        use Instruction::*;
        let m = Machine::build(vec![None], vec![Load(3), Load(0), Call(0)], vec![Address::Nat(1), Address::Nat(2)])
            .unwrap();
        assert_eq!(run(&m, 10), RunResult::Halted(numeral(2), 3));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::corpus::TermGen;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn run_agrees_with_iterated_step(seed in any::<u64>(), fuel in 0u64..400) {
            let m = TermGen::new(seed).machine();
            let (tr, r) = trace(&m, fuel);
            prop_assert_eq!(run(&m, fuel), r.clone());
            prop_assert_eq!(tr.len() as u64, r.steps() + 1);
            prop_assert_eq!(tr.last().unwrap(), r.machine());
        }

        #[test]
        fn halting_runs_are_fuel_independent(seed in any::<u64>()) {
            let m = TermGen::new(seed).machine();
            if let RunResult::Halted(x, k) = run(&m, 5_000) {
                prop_assert_eq!(run(&m, k), RunResult::Halted(x, k));
            }
        }
    }
}
