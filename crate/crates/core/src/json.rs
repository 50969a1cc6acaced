//! Machine interchange format.
//!
//! ```json
//! {"regs":[null,{"sym":1}],"prog":[{"op":"Load","i":0},{"op":"Call","i":0}],
//!  "tape":[{"nat":3}],"defs":{"1":{"regs":[],"prog":[],"tape":[]}}}
//! ```
//!
//! Symbolic ids are local to one document and numbered in depth-first order
//! from the top machine. The fixed point machine is written as an ordinary
//! definition whose tape refers to its own id.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::machine::{intern, resolve, y_machine, Address, Instruction, Machine, ValidityError, Y_ADDRESS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AddrJson {
    Nat(u64),
    Sym(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
enum InstrJson {
    Load { i: usize },
    App { i: usize, j: usize, k: usize },
    Test { i: usize, j: usize, k: usize, l: usize },
    Pred { i: usize, j: usize },
    Succ { i: usize, j: usize },
    Call { i: usize },
}

impl From<Instruction> for InstrJson {
    fn from(ins: Instruction) -> Self {
        match ins {
            Instruction::Load(i) => InstrJson::Load { i },
            Instruction::App(i, j, k) => InstrJson::App { i, j, k },
            Instruction::Test(i, j, k, l) => InstrJson::Test { i, j, k, l },
            Instruction::Pred(i, j) => InstrJson::Pred { i, j },
            Instruction::Succ(i, j) => InstrJson::Succ { i, j },
            Instruction::Call(i) => InstrJson::Call { i },
        }
    }
}

impl From<InstrJson> for Instruction {
    fn from(ins: InstrJson) -> Self {
        match ins {
            InstrJson::Load { i } => Instruction::Load(i),
            InstrJson::App { i, j, k } => Instruction::App(i, j, k),
            InstrJson::Test { i, j, k, l } => Instruction::Test(i, j, k, l),
            InstrJson::Pred { i, j } => Instruction::Pred(i, j),
            InstrJson::Succ { i, j } => Instruction::Succ(i, j),
            InstrJson::Call { i } => Instruction::Call(i),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Body {
    regs: Vec<Option<AddrJson>>,
    prog: Vec<InstrJson>,
    tape: Vec<AddrJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Document {
    #[serde(flatten)]
    body: Body,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    defs: BTreeMap<u64, Body>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<u64>,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed machine JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("symbol {0} has no definition")]
    Undefined(u64),
    #[error("definition {0} refers to itself")]
    Cyclic(u64),
    #[error("invalid machine: {0}")]
    Invalid(#[from] ValidityError),
}

struct Exporter {
    ids: FxHashMap<Address, u64>,
    defs: BTreeMap<u64, Body>,
}

impl Exporter {
    fn addr(&mut self, a: Address) -> AddrJson {
        match a {
            Address::Nat(n) => AddrJson::Nat(n),
            Address::Sym(_) => {
                if let Some(id) = self.ids.get(&a) {
                    return AddrJson::Sym(*id);
                }
                let id = self.ids.len() as u64;
                self.ids.insert(a, id);
                let body = crate::grow(|| self.body(&resolve(a)));
                self.defs.insert(id, body);
                AddrJson::Sym(id)
            }
        }
    }

    fn body(&mut self, m: &Machine) -> Body {
        let regs = m.registers().iter().map(|r| r.map(|a| self.addr(a))).collect();
        let prog = m.program().instructions().iter().map(|&i| i.into()).collect();
        let tape = m.tape().iter().map(|&a| self.addr(a)).collect();
        Body { regs, prog, tape }
    }
}

fn document(m: &Machine, step: Option<u64>) -> Document {
    let mut ex = Exporter { ids: FxHashMap::default(), defs: BTreeMap::new() };
    let body = ex.body(m);
    Document { body, defs: ex.defs, step }
}

/// The self-contained JSON value of `m`.
pub fn machine_to_value(m: &Machine) -> Value {
    serde_json::to_value(document(m, None)).expect("machine documents serialize")
}

pub fn machine_to_json(m: &Machine) -> String {
    serde_json::to_string(&document(m, None)).expect("machine documents serialize")
}

pub fn machine_to_json_pretty(m: &Machine) -> String {
    serde_json::to_string_pretty(&document(m, None)).expect("machine documents serialize")
}

/// One line of a trace: the configuration plus its step index.
pub fn trace_line(m: &Machine, step: u64) -> String {
    serde_json::to_string(&document(m, Some(step))).expect("machine documents serialize")
}

struct Importer<'a> {
    defs: &'a BTreeMap<u64, Body>,
    done: FxHashMap<u64, Address>,
    active: Vec<u64>,
}

impl Importer<'_> {
    fn addr(&mut self, a: AddrJson) -> Result<Address, JsonError> {
        let id = match a {
            AddrJson::Nat(n) => return Ok(Address::Nat(n)),
            AddrJson::Sym(id) => id,
        };
        if let Some(a) = self.done.get(&id) {
            return Ok(*a);
        }
        let body = self.defs.get(&id).ok_or(JsonError::Undefined(id))?;
        if self.is_y(id, body) {
            self.done.insert(id, Y_ADDRESS);
            return Ok(Y_ADDRESS);
        }
        if self.active.contains(&id) {
            return Err(JsonError::Cyclic(id));
        }
        self.active.push(id);
        let m = crate::grow(|| self.body(body))?;
        self.active.pop();
        let a = intern(&m);
        self.done.insert(id, a);
        Ok(a)
    }

    fn is_y(&self, id: u64, body: &Body) -> bool {
        let y = y_machine();
        body.regs.iter().all(Option::is_none)
            && body.regs.len() == y.num_registers()
            && body.tape == [AddrJson::Sym(id)]
            && body.prog.iter().copied().map(Instruction::from).eq(y.program().instructions().iter().copied())
    }

    fn body(&mut self, b: &Body) -> Result<Machine, JsonError> {
        let regs = b.regs.iter().map(|r| r.map(|a| self.addr(a)).transpose()).collect::<Result<_, _>>()?;
        let tape = b.tape.iter().map(|&a| self.addr(a)).collect::<Result<_, _>>()?;
        let prog = b.prog.iter().map(|&i| i.into()).collect();
        Ok(Machine::build(regs, prog, tape)?)
    }
}

fn from_document(doc: &Document) -> Result<Machine, JsonError> {
    let mut im = Importer { defs: &doc.defs, done: FxHashMap::default(), active: Vec::new() };
    im.body(&doc.body)
}

pub fn machine_from_value(v: &Value) -> Result<Machine, JsonError> {
    from_document(&Document::deserialize(v)?)
}

pub fn machine_from_json(s: &str) -> Result<Machine, JsonError> {
    from_document(&serde_json::from_str(s)?)
}

/// Parses a trace line back into its step index and configuration.
pub fn parse_trace_line(s: &str) -> Result<(Option<u64>, Machine), JsonError> {
    let doc: Document = serde_json::from_str(s)?;
    Ok((doc.step, from_document(&doc)?))
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::corpus::TermGen;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn documents_round_trip(seed in any::<u64>()) {
            let m = TermGen::new(seed).machine();
            prop_assert_eq!(machine_from_json(&machine_to_json(&m)).unwrap(), m);
        }
    }
}
