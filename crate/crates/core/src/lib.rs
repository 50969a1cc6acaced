//! Extended addressing machines, PCF and EPCF, and the translations between them.

pub mod corpus;
pub mod engine;
pub mod equiv;
pub mod epcf;
pub mod json;
pub mod machine;
pub mod pcf;
pub mod reverse;
pub mod samples;
pub mod syntax;
pub mod translate;
pub mod types;
pub mod typing;

pub use engine::{run, step, trace, Focus, FocusStep, RunResult, StepOutcome};
pub use equiv::{equiv_at_type, ArgumentCorpus, Verdict};
pub use epcf::{eval_epcf_big, step_wh, typecheck_epcf, ETerm, StepKind};
pub use machine::{
    apply_address, intern, numeral, resolve, validate_program, y_machine, Address, Instruction,
    Machine, Program, Registry, Tape, Y_ADDRESS,
};
pub use pcf::{eval_pcf_big, step_pcf, typecheck_pcf, EvalOutcome, Term, TypeEnv};
pub use syntax::{parse_term, print_term, ParseError};
pub use types::SimpleType;
pub use typing::{check_type, infer_type, Derivation, TypeError};

/// Runs `f`, growing the stack first when it is nearly exhausted.
pub(crate) fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, f)
}
