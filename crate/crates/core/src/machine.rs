//! Addresses, programs, machines and the address table.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use thiserror::Error;

/// A machine address: a numeral or a handle issued by the registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Address {
    Nat(u64),
    Sym(u64),
}

/// The address of the fixed point combinator machine.
pub const Y_ADDRESS: Address = Address::Sym(0);

impl Address {
    pub fn as_nat(self) -> Option<u64> {
        match self {
            Address::Nat(n) => Some(n),
            Address::Sym(_) => None,
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Address::Nat(n) => write!(f, "{n}"),
            Y_ADDRESS => write!(f, "#Y"),
            Address::Sym(s) => write!(f, "#{s}"),
        }
    }
}

pub type Tape = Vec<Address>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Load(usize),
    App(usize, usize, usize),
    Test(usize, usize, usize, usize),
    Pred(usize, usize),
    Succ(usize, usize),
    Call(usize),
}

impl Instruction {
    fn phase(&self) -> u8 {
        match self {
            Instruction::Load(_) => 0,
            Instruction::App(..)
            | Instruction::Test(..)
            | Instruction::Pred(..)
            | Instruction::Succ(..) => 1,
            Instruction::Call(_) => 2,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Load(i) => write!(f, "Load {i}"),
            Instruction::App(i, j, k) => write!(f, "App {i} {j} {k}"),
            Instruction::Test(i, j, k, l) => write!(f, "Test {i} {j} {k} {l}"),
            Instruction::Pred(i, j) => write!(f, "Pred {i} {j}"),
            Instruction::Succ(i, j) => write!(f, "Succ {i} {j}"),
            Instruction::Call(i) => write!(f, "Call {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("instruction {pos} ({instr}) is out of order: expected Load*, then App/Test/Pred/Succ, then at most one Call")]
    Grammar { pos: usize, instr: Instruction },
}

/// An instruction list in `Load*; (App|Test|Pred|Succ)*; Call?` shape.
///
/// Executed instructions are dropped from the front by bumping `start`,
/// so stepping never copies the instruction array.
#[derive(Clone)]
pub struct Program {
    instrs: Arc<[Instruction]>,
    start: usize,
}

impl Program {
    pub fn new(instrs: Vec<Instruction>) -> Result<Program, ProgramError> {
        let mut phase = 0;
        for (pos, ins) in instrs.iter().enumerate() {
            let p = ins.phase();
            if p < phase || phase == 2 {
                return Err(ProgramError::Grammar { pos, instr: *ins });
            }
            phase = p;
        }
        Ok(Program { instrs: instrs.into(), start: 0 })
    }

    pub fn empty() -> Program {
        Program { instrs: Arc::from(Vec::new()), start: 0 }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instrs[self.start..]
    }

    pub fn first(&self) -> Option<&Instruction> {
        self.instructions().first()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions().is_empty()
    }

    pub fn len(&self) -> usize {
        self.instructions().len()
    }

    /// The program without its first instruction.
    pub fn rest(&self) -> Program {
        Program { instrs: self.instrs.clone(), start: (self.start + 1).min(self.instrs.len()) }
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.instructions() == other.instructions()
    }
}

impl Eq for Program {}

impl Hash for Program {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.instructions().hash(state)
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.instructions()).finish()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ε");
        }
        for (n, ins) in self.instructions().iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{ins}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidityError {
    #[error(transparent)]
    Grammar(#[from] ProgramError),
    #[error("instruction {pos} ({instr}) reads uninitialized register R{reg}")]
    Uninitialized { pos: usize, instr: Instruction, reg: usize },
    #[error("instruction {pos} ({instr}) writes to non-existent register R{reg}")]
    OutOfRange { pos: usize, instr: Instruction, reg: usize },
}

/// Checks that `program` reads only initialized registers and writes only
/// existing ones, given `num_registers` registers of which `initialized` hold an address.
pub fn validate_program(
    program: &Program,
    num_registers: usize,
    initialized: &[usize],
) -> Result<(), ValidityError> {
    let mut init = vec![false; num_registers];
    for &i in initialized {
        if i < num_registers {
            init[i] = true;
        }
    }
    for (pos, &instr) in program.instructions().iter().enumerate() {
        let read = |reg: usize, init: &[bool]| {
            if reg < num_registers && init[reg] {
                Ok(())
            } else {
                Err(ValidityError::Uninitialized { pos, instr, reg })
            }
        };
        let write = |reg: usize, init: &mut [bool]| {
            if reg < num_registers {
                init[reg] = true;
                Ok(())
            } else {
                Err(ValidityError::OutOfRange { pos, instr, reg })
            }
        };
        match instr {
            Instruction::Load(i) => {
                if i < num_registers {
                    init[i] = true;
                }
            }
            Instruction::Call(i) => read(i, &init)?,
            Instruction::Pred(i, j) | Instruction::Succ(i, j) => {
                read(i, &init)?;
                write(j, &mut init)?;
            }
            Instruction::App(i, j, k) => {
                read(i, &init)?;
                read(j, &init)?;
                write(k, &mut init)?;
            }
            Instruction::Test(i, j, k, l) => {
                read(i, &init)?;
                read(j, &init)?;
                read(k, &init)?;
                write(l, &mut init)?;
            }
        }
    }
    Ok(())
}

/// An extended addressing machine: registers, a valid program, an input tape.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Machine {
    regs: Vec<Option<Address>>,
    prog: Program,
    tape: Tape,
}

impl Machine {
    pub fn new(
        regs: Vec<Option<Address>>,
        prog: Program,
        tape: Tape,
    ) -> Result<Machine, ValidityError> {
        let init: Vec<usize> = (0..regs.len()).filter(|&i| regs[i].is_some()).collect();
        validate_program(&prog, regs.len(), &init)?;
        Ok(Machine { regs, prog, tape })
    }

    /// Builds a machine from raw instructions, checking grammar and validity.
    pub fn build(
        regs: Vec<Option<Address>>,
        instrs: Vec<Instruction>,
        tape: Tape,
    ) -> Result<Machine, ValidityError> {
        Machine::new(regs, Program::new(instrs)?, tape)
    }

    pub(crate) fn from_parts(regs: Vec<Option<Address>>, prog: Program, tape: Tape) -> Machine {
        Machine { regs, prog, tape }
    }

    pub(crate) fn set_register(&mut self, i: usize, v: Option<Address>) {
        self.regs[i] = v;
    }

    pub fn registers(&self) -> &[Option<Address>] {
        &self.regs
    }

    pub fn program(&self) -> &Program {
        &self.prog
    }

    pub fn tape(&self) -> &[Address] {
        &self.tape
    }

    pub fn num_registers(&self) -> usize {
        self.regs.len()
    }

    /// `self@t`: the same machine with `t` appended to its tape.
    pub fn append_tape(&self, t: &[Address]) -> Machine {
        let mut m = self.clone();
        m.tape.extend_from_slice(t);
        m
    }

    pub fn into_parts(self) -> (Vec<Option<Address>>, Program, Tape) {
        (self.regs, self.prog, self.tape)
    }

    /// `Some(n)` when this is the n-th numeral machine.
    pub fn as_numeral(&self) -> Option<u64> {
        match self.regs.as_slice() {
            [Some(Address::Nat(n))] if self.prog.is_empty() && self.tape.is_empty() => Some(*n),
            _ => None,
        }
    }

    pub fn is_y(&self) -> bool {
        *self == y_machine()
    }
}

impl fmt::Debug for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, r) in self.regs.iter().enumerate() {
            match r {
                Some(a) => write!(f, "R{i}={a}, ")?,
                None => write!(f, "R{i}, ")?,
            }
        }
        write!(f, "{}, [", self.prog)?;
        for (n, a) in self.tape.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]>")
    }
}

/// `<R0 = n, ε, []>`.
pub fn numeral(n: u64) -> Machine {
    Machine::from_parts(vec![Some(Address::Nat(n))], Program::empty(), Vec::new())
}

/// `<R0, R1, Load 0; Load 1; App 0 1 0; App 1 0 1; Call 1, [#Y]>`.
pub fn y_machine() -> Machine {
    static Y: OnceLock<Machine> = OnceLock::new();
    Y.get_or_init(|| {
        use Instruction::*;
        let prog = Program::new(vec![Load(0), Load(1), App(0, 1, 0), App(1, 0, 1), Call(1)])
            .expect("Y program is well formed");
        Machine::from_parts(vec![None, None], prog, vec![Y_ADDRESS])
    })
    .clone()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("dangling address {0}")]
    Dangling(Address),
}

#[derive(Default)]
struct Inner {
    forward: FxHashMap<Arc<Machine>, Address>,
    backward: Vec<Arc<Machine>>,
}

/// The address table: a bijection between machines and addresses built by
/// structural hash-consing.
pub struct Registry {
    inner: RwLock<Inner>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl Registry {
    pub fn new() -> Registry {
        let y = Arc::new(y_machine());
        let mut inner = Inner::default();
        inner.forward.insert(y.clone(), Y_ADDRESS);
        inner.backward.push(y);
        Registry { inner: RwLock::new(inner) }
    }

    /// The process-wide registry used by the rest of the library.
    pub fn global() -> &'static Registry {
        static GLOBAL: OnceLock<Registry> = OnceLock::new();
        GLOBAL.get_or_init(Registry::new)
    }

    pub fn intern(&self, m: &Machine) -> Address {
        if let Some(n) = m.as_numeral() {
            return Address::Nat(n);
        }
        if let Some(a) = self.inner.read().forward.get(m) {
            return *a;
        }
        let mut inner = self.inner.write();
        if let Some(a) = inner.forward.get(m) {
            return *a;
        }
        let a = Address::Sym(inner.backward.len() as u64);
        let m = Arc::new(m.clone());
        inner.backward.push(m.clone());
        inner.forward.insert(m, a);
        a
    }

    pub fn try_resolve(&self, a: Address) -> Result<Arc<Machine>, RegistryError> {
        match a {
            Address::Nat(n) => Ok(Arc::new(numeral(n))),
            Address::Sym(s) => self
                .inner
                .read()
                .backward
                .get(s as usize)
                .cloned()
                .ok_or(RegistryError::Dangling(a)),
        }
    }

    /// Panics on a handle this registry never issued.
    pub fn resolve(&self, a: Address) -> Arc<Machine> {
        self.try_resolve(a).unwrap_or_else(|e| panic!("{e}"))
    }

    /// `a · b = #(resolve(a) @ [b])`.
    pub fn apply(&self, a: Address, b: Address) -> Address {
        self.intern(&self.resolve(a).append_tape(&[b]))
    }

    /// Number of issued symbolic handles.
    pub fn len(&self) -> usize {
        self.inner.read().backward.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Interns into the global registry.
pub fn intern(m: &Machine) -> Address {
    Registry::global().intern(m)
}

/// Resolves against the global registry.
pub fn resolve(a: Address) -> Arc<Machine> {
    Registry::global().resolve(a)
}

/// The application map on the global registry.
pub fn apply_address(a: Address, b: Address) -> Address {
    Registry::global().apply(a, b)
}

/// `#(resolve(a) @ bs)`.
pub fn apply_all(a: Address, bs: &[Address]) -> Address {
    if bs.is_empty() {
        return a;
    }
    intern(&resolve(a).append_tape(bs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Instruction::*;

    fn regs_7_a() -> Vec<Option<Address>> {
        vec![Some(Address::Nat(7)), Some(Address::Sym(5)), None]
    }

    #[test]
    fn validity_examples() {
        let check = |instrs: Vec<Instruction>| {
            let p = Program::new(instrs).unwrap();
            validate_program(&p, 3, &[0, 1])
        };
        assert!(check(vec![Pred(0, 2), Call(2)]).is_ok());
        assert!(check(vec![Load(2), Load(8), Test(0, 1, 2, 0), Call(0)]).is_ok());
        assert!(matches!(
            check(vec![Load(0), Load(2), Load(8), Call(8)]),
            Err(ValidityError::Uninitialized { reg: 8, .. })
        ));
        assert!(matches!(
            check(vec![Succ(2, 0), Call(1)]),
            Err(ValidityError::Uninitialized { reg: 2, pos: 0, .. })
        ));
        assert!(matches!(
            check(vec![Pred(0, 4), Call(0)]),
            Err(ValidityError::OutOfRange { reg: 4, .. })
        ));
        assert!(check(vec![]).is_ok());
        assert!(validate_program(&Program::empty(), 0, &[]).is_ok());
    }

    #[test]
    fn grammar_is_enforced() {
        assert!(Program::new(vec![App(0, 0, 0), Load(0)]).is_err());
        assert!(Program::new(vec![Call(0), Call(0)]).is_err());
        assert!(Program::new(vec![Call(0), Pred(0, 0)]).is_err());
        assert!(Program::new(vec![Load(0), Load(1), Pred(0, 0), App(0, 0, 1), Call(1)]).is_ok());
    }

    #[test]
    fn constructor_matches_validity() {
        assert!(Machine::build(regs_7_a(), vec![Pred(0, 2), Call(2)], vec![]).is_ok());
        assert!(Machine::build(regs_7_a(), vec![Succ(2, 0), Call(1)], vec![]).is_err());
    }

    #[test]
    fn numerals_and_y() {
        let r = Registry::new();
        assert_eq!(r.intern(&numeral(5)), Address::Nat(5));
        assert_eq!(*r.resolve(Address::Nat(0)), numeral(0));
        assert_eq!(r.intern(&y_machine()), Y_ADDRESS);
        let y = r.resolve(Y_ADDRESS);
        assert_eq!(y.tape(), &[Y_ADDRESS]);
        assert_eq!(
            y.program().instructions(),
            &[Load(0), Load(1), App(0, 1, 0), App(1, 0, 1), Call(1)]
        );
        assert!(numeral(7).tape().is_empty());
    }

    #[test]
    fn interning_is_idempotent() {
        let r = Registry::new();
        let i = Machine::build(vec![None], vec![Load(0), Call(0)], vec![]).unwrap();
        let a = r.intern(&i);
        assert_eq!(r.intern(&i), a);
        assert_eq!(*r.resolve(a), i);
        let b = r.apply(a, Address::Nat(3));
        assert_eq!(*r.resolve(b), i.append_tape(&[Address::Nat(3)]));
        assert_eq!(r.apply(a, Address::Nat(3)), b);
        assert!(r.try_resolve(Address::Sym(999)).is_err());
    }

    #[test]
    fn append_tape_unit() {
        let i = Machine::build(vec![None], vec![Load(0), Call(0)], vec![]).unwrap();
        assert_eq!(i.append_tape(&[]), i);
    }

    #[test]
    fn program_rest_shares_storage() {
        let p = Program::new(vec![Load(0), Load(1), Call(0)]).unwrap();
        let q = p.rest();
        assert_eq!(q, Program::new(vec![Load(1), Call(0)]).unwrap());
        assert_eq!(q.rest().rest(), Program::empty());
        assert_eq!(q.rest().rest().rest(), Program::empty());
    }
}
