//! Bounded observational equivalence of machines and PCF programs.
//!
//! Ground observations are run with fuel. Divergence is proven when a
//! configuration reappears inside the chain of machines being forced, which
//! covers exact cycles and strict self-embedding such as `Y@[#Succ1]`.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{Focus, FocusStep};
use crate::machine::{intern, Address, Machine};
use crate::pcf::{check_pcf, eval_pcf_observe, EvalOutcome, Term, TypeEnv};
use crate::translate::translate_pcf;
use crate::types::SimpleType;
use crate::typing::{typable_at, DEFAULT_DEPTH_BUDGET};

/// Result of observing a program at ground type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Observation {
    Numeral(u64),
    Diverges,
    OutOfFuel,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Numeral(n) => write!(f, "{n}"),
            Observation::Diverges => f.write_str("diverges"),
            Observation::OutOfFuel => f.write_str("out of fuel"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    Fuel,
    CorpusLimit,
}

/// A replayable distinguishing experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// Arguments as PCF programs; `addresses` holds their translations.
    pub args: Vec<Term>,
    pub addresses: Vec<Address>,
    pub left: Observation,
    pub right: Observation,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|t| format!("({t})")).collect();
        write!(f, "arguments [{}]: {} vs {}", args.join(", "), self.left, self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Distinguished(Witness),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn is_definite(&self) -> bool {
        !matches!(self, Verdict::Unknown(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Distinguished(w) => write!(f, "distinguished: {w}"),
            Verdict::Unknown(UnknownReason::Fuel) => f.write_str("unknown (fuel exhausted)"),
            Verdict::Unknown(UnknownReason::CorpusLimit) => f.write_str("unknown (corpus limit)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("left side does not have type {0}")]
    LeftType(SimpleType),
    #[error("right side does not have type {0}")]
    RightType(SimpleType),
    /// A typed program errored or halted on a non-numeral.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Runs `m` looking for a numeral, with divergence detection.
///
/// The run is compared against a checkpoint whose distance doubles (Brent's
/// scheme); a checkpoint found again at the top or nested inside the chain of
/// registers being forced can never be left.
pub fn observe_machine(m: &Machine, fuel: u64) -> Result<Observation, EquivError> {
    let mut cur = Focus::new(m);
    let mut checkpoint = cur.clone();
    let (mut power, mut lam) = (1u64, 0u64);
    for _ in 0..fuel {
        match cur.step() {
            FocusStep::Moved => {}
            FocusStep::Halted => {
                let x = cur.to_machine();
                return x
                    .as_numeral()
                    .map(Observation::Numeral)
                    .ok_or_else(|| EquivError::Internal(format!("halted on non-numeral {x}")));
            }
            FocusStep::Error(d) => return Err(EquivError::Internal(format!("error state: {d}"))),
        }
        lam += 1;
        if cur.embeds(&checkpoint) {
            return Ok(Observation::Diverges);
        }
        if lam == power {
            checkpoint = cur.clone();
            power *= 2;
            lam = 0;
        }
    }
    match cur.to_machine().as_numeral() {
        Some(n) if !cur.can_step() => Ok(Observation::Numeral(n)),
        _ => Ok(Observation::OutOfFuel),
    }
}

/// Evaluates a PCF program of type `int` with divergence detection.
pub fn observe_pcf(t: &Term, fuel: u64) -> Result<Observation, EquivError> {
    match eval_pcf_observe(t, fuel) {
        EvalOutcome::Value(v) => v
            .as_numeral()
            .map(Observation::Numeral)
            .ok_or_else(|| EquivError::Internal(format!("non-numeral value {v}"))),
        EvalOutcome::Stuck(s) => Err(EquivError::Internal(format!("stuck at {s}"))),
        EvalOutcome::OutOfFuel => Ok(Observation::OutOfFuel),
        EvalOutcome::Diverges => Ok(Observation::Diverges),
    }
}

fn compare(left: Observation, right: Observation, args: &[CorpusEntry]) -> Verdict {
    use Observation::*;
    match (&left, &right) {
        (OutOfFuel, _) | (_, OutOfFuel) => Verdict::Unknown(UnknownReason::Fuel),
        (Numeral(a), Numeral(b)) if a == b => Verdict::Equivalent,
        (Diverges, Diverges) => Verdict::Equivalent,
        _ => Verdict::Distinguished(Witness {
            args: args.iter().map(|e| e.term.clone()).collect(),
            addresses: args.iter().map(|e| e.address).collect(),
            left,
            right,
        }),
    }
}

/// `m1 ≡_int m2`, up to fuel.
pub fn equiv_int(m1: &Machine, m2: &Machine, fuel: u64) -> Result<Verdict, EquivError> {
    Ok(compare(observe_machine(m1, fuel)?, observe_machine(m2, fuel)?, &[]))
}

/// A closed argument available at some type, as a PCF program and its translation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub term: Term,
    pub address: Address,
}

/// Typed argument generator for the higher-order comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgumentCorpus {
    /// Numerals `0..=max_numeral` at `int`.
    pub max_numeral: u64,
    /// Results used by constant functions.
    pub constants: Vec<u64>,
    pub include_divergent: bool,
    /// Upper bound on argument tuples per comparison.
    pub max_tuples: usize,
}

impl Default for ArgumentCorpus {
    fn default() -> Self {
        ArgumentCorpus { max_numeral: 8, constants: vec![0, 3], include_divergent: true, max_tuples: 16_384 }
    }
}

fn omega() -> Term {
    Term::fix(Term::lam("x", Term::Var(0)))
}

/// `λx1…xm. 0` at type `ty`.
fn zero_at(ty: &SimpleType) -> Term {
    let m = ty.arity();
    (0..m).fold(Term::Zero, |b, _| Term::lam("x", b))
}

impl ArgumentCorpus {
    pub fn with_max_numeral(max_numeral: u64) -> Self {
        ArgumentCorpus { max_numeral, ..Default::default() }
    }

    /// PCF arguments of type `ty`.
    pub fn terms_at(&self, ty: &SimpleType) -> Vec<Term> {
        let (args, _) = ty.spine();
        let m = args.len();
        let wrap = |body: Term| (0..m).fold(body, |b, _| Term::lam("x", b));
        let mut out = Vec::new();
        if m == 0 {
            out.extend((0..=self.max_numeral).map(Term::numeral));
            if self.include_divergent {
                out.push(omega());
            }
            return out;
        }
        for &c in &self.constants {
            out.push(wrap(Term::numeral(c)));
        }
        if self.include_divergent {
            out.push(wrap(omega()));
        }
        for (i, a) in args.iter().enumerate() {
            let var = Term::Var(m - 1 - i);
            let (inner, _) = a.spine();
            out.push(wrap(Term::apps(var, inner.iter().map(|t| zero_at(t)))));
        }
        out
    }

    pub fn at(&self, ty: &SimpleType) -> Vec<CorpusEntry> {
        self.terms_at(ty)
            .into_iter()
            .map(|term| {
                let m = translate_pcf(&term, &[]).expect("corpus terms are closed");
                CorpusEntry { address: intern(&m), term }
            })
            .collect()
    }

    /// Argument tuples for the domain spine of `ty`, and whether the list was truncated.
    fn tuples(&self, ty: &SimpleType) -> (Vec<Vec<CorpusEntry>>, bool) {
        let (args, _) = ty.spine();
        let per: Vec<Vec<CorpusEntry>> = args.iter().map(|a| self.at(a)).collect();
        let mut out: Vec<Vec<CorpusEntry>> = vec![Vec::new()];
        let mut truncated = false;
        for choices in &per {
            let mut next = Vec::new();
            'outer: for prefix in &out {
                for c in choices {
                    if next.len() == self.max_tuples {
                        truncated = true;
                        break 'outer;
                    }
                    let mut t = prefix.clone();
                    t.push(c.clone());
                    next.push(t);
                }
            }
            out = next;
        }
        (out, truncated)
    }
}

fn merge(results: Vec<Verdict>, truncated: bool) -> Verdict {
    let mut unknown = None;
    for v in results {
        match v {
            Verdict::Distinguished(_) => return v,
            Verdict::Unknown(r) => {
                unknown.get_or_insert(r);
            }
            Verdict::Equivalent => {}
        }
    }
    match unknown {
        Some(r) => Verdict::Unknown(r),
        None if truncated => Verdict::Unknown(UnknownReason::CorpusLimit),
        None => Verdict::Equivalent,
    }
}

/// `m1 ≡_α m2` relative to the corpus.
pub fn equiv_at_type(
    m1: &Machine,
    m2: &Machine,
    alpha: &SimpleType,
    fuel: u64,
    corpus: &ArgumentCorpus,
) -> Result<Verdict, EquivError> {
    typable_at(m1, alpha, DEFAULT_DEPTH_BUDGET).map_err(|_| EquivError::LeftType(alpha.clone()))?;
    typable_at(m2, alpha, DEFAULT_DEPTH_BUDGET).map_err(|_| EquivError::RightType(alpha.clone()))?;
    let (tuples, truncated) = corpus.tuples(alpha);
    let results: Result<Vec<Verdict>, EquivError> = tuples
        .par_iter()
        .map(|args| {
            let addrs: Vec<Address> = args.iter().map(|e| e.address).collect();
            let l = observe_machine(&m1.append_tape(&addrs), fuel)?;
            let r = observe_machine(&m2.append_tape(&addrs), fuel)?;
            Ok(compare(l, r, args))
        })
        .collect();
    Ok(merge(results?, truncated))
}

/// Applicative equivalence of closed PCF programs relative to the corpus.
pub fn applicative_equiv_pcf(
    p1: &Term,
    p2: &Term,
    alpha: &SimpleType,
    fuel: u64,
    corpus: &ArgumentCorpus,
) -> Result<Verdict, EquivError> {
    let env = TypeEnv::new();
    check_pcf(&env, p1, alpha).map_err(|_| EquivError::LeftType(alpha.clone()))?;
    check_pcf(&env, p2, alpha).map_err(|_| EquivError::RightType(alpha.clone()))?;
    let (tuples, truncated) = corpus.tuples(alpha);
    let results: Result<Vec<Verdict>, EquivError> = tuples
        .par_iter()
        .map(|args| {
            let terms = || args.iter().map(|e| e.term.clone());
            let l = observe_pcf(&Term::apps(p1.clone(), terms()), fuel)?;
            let r = observe_pcf(&Term::apps(p2.clone(), terms()), fuel)?;
            Ok(compare(l, r, args))
        })
        .collect();
    Ok(merge(results?, truncated))
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::corpus::TermGen;
    use proptest::prelude::*;

    fn small() -> ArgumentCorpus {
        ArgumentCorpus { max_numeral: 3, ..ArgumentCorpus::default() }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn reflexive_and_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
            let mut g = TermGen::new(s1);
            g.esub = false;
            let ty = SimpleType::arrow(SimpleType::Int, SimpleType::Int);
            let a = Term::from_named(&g.term(&[], &ty, 4)).unwrap();
            let mut g = TermGen::new(s2);
            g.esub = false;
            let b = Term::from_named(&g.term(&[], &ty, 4)).unwrap();
            let (ma, mb) = (translate_pcf(&a, &[]).unwrap(), translate_pcf(&b, &[]).unwrap());
            let refl = equiv_at_type(&ma, &ma, &ty, 20_000, &small()).unwrap();
            prop_assert!(!matches!(refl, Verdict::Distinguished(_)));
            let ab = equiv_at_type(&ma, &mb, &ty, 20_000, &small()).unwrap();
            let ba = equiv_at_type(&mb, &ma, &ty, 20_000, &small()).unwrap();
            prop_assert_eq!(std::mem::discriminant(&ab), std::mem::discriminant(&ba));
        }

        #[test]
        fn pcf_and_machine_verdicts_are_consistent(s1 in any::<u64>(), s2 in any::<u64>()) {
            let ty = SimpleType::arrow(SimpleType::Int, SimpleType::Int);
            let gen = |s| {
                let mut g = TermGen::new(s);
                g.esub = false;
                Term::from_named(&g.term(&[], &ty, 4)).unwrap()
            };
            let (a, b) = (gen(s1), gen(s2));
            let p = applicative_equiv_pcf(&a, &b, &ty, 20_000, &small()).unwrap();
            let (ma, mb) = (translate_pcf(&a, &[]).unwrap(), translate_pcf(&b, &[]).unwrap());
            let m = equiv_at_type(&ma, &mb, &ty, 200_000, &small()).unwrap();
            if p.is_definite() && m.is_definite() {
                prop_assert_eq!(p == Verdict::Equivalent, m == Verdict::Equivalent);
            }
        }
    }
}
