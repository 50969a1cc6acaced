//! Hand-written machines used throughout the documentation and tests.

use crate::machine::{intern, y_machine, Instruction::*, Machine};

/// `<R0, Load 0; Call 0, []>`.
pub fn identity() -> Machine {
    Machine::build(vec![None], vec![Load(0), Call(0)], vec![]).expect("valid")
}

/// `<R0, Load 0; Succ 0 0; Call 0, []>`.
pub fn succ1() -> Machine {
    Machine::build(vec![None], vec![Load(0), Succ(0, 0), Call(0)], vec![]).expect("valid")
}

/// Applies `Succ1` twice to its argument.
pub fn succ2() -> Machine {
    Machine::build(
        vec![None, None],
        vec![Load(0), Load(1), App(0, 1, 1), App(0, 1, 1), Call(1)],
        vec![intern(&succ1())],
    )
    .expect("valid")
}

/// Body of the recursive addition: `f x y = if x = 0 then y else f (x-1) (y+1)`.
pub fn add_aux() -> Machine {
    Machine::build(
        vec![None; 5],
        vec![
            Load(0),
            Load(1),
            Load(2),
            Pred(1, 3),
            Succ(2, 4),
            App(0, 3, 0),
            App(0, 4, 0),
            Test(1, 2, 0, 0),
            Call(0),
        ],
        vec![],
    )
    .expect("valid")
}

/// `Y@[#Add_aux]`.
pub fn add() -> Machine {
    y_machine().append_tape(&[intern(&add_aux())])
}
