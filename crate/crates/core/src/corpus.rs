//! Named programs, typed machine samples and random term generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::epcf::ETerm;
use crate::machine::{intern, y_machine, Address, Machine};
use crate::pcf::{parse_pcf, Term};
use crate::samples;
use crate::translate::{aux_machine, omega_machine, translate_pcf, AuxSpec};
use crate::types::SimpleType;

/// Definitions available by name in command-line programs.
pub const PRELUDE: &[(&str, &str)] = &[
    ("I", "\\x. x"),
    ("omega", "fix (\\x. x)"),
    ("succ1", "\\x. succ x"),
    ("succ2", "\\n. succ (succ n)"),
    ("add", "fix (\\f x y. ifz y x (f (succ x) (pred y)))"),
    ("twice", "\\f x. f (f x)"),
];

pub fn prelude_term(name: &str) -> Option<Term> {
    PRELUDE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_pcf(src).expect("prelude parses"))
}

/// Replaces free prelude names in a PCF term by their definitions.
pub fn with_prelude(t: &Term) -> Term {
    t.free_names().iter().fold(t.clone(), |acc, x| match prelude_term(x) {
        Some(def) => acc.subst_free(x, &def),
        None => acc,
    })
}

/// Closes free prelude names of an EPCF term with explicit substitutions.
pub fn with_prelude_epcf(t: &ETerm) -> ETerm {
    t.free_vars().iter().fold(t.clone(), |acc, x| match prelude_term(x) {
        Some(def) => ETerm::esub(acc, x, def.to_named()),
        None => acc,
    })
}

/// A closed program of type `int` and the numeral it evaluates to.
#[derive(Clone, Debug)]
pub struct IntProgram {
    pub source: String,
    pub term: Term,
    pub expected: u64,
}

fn program(source: String, expected: u64) -> IntProgram {
    let term = with_prelude(&parse_pcf(&source).unwrap_or_else(|e| panic!("{source}: {e}")));
    IntProgram { source, term, expected }
}

/// Closed `int` programs with their values, computed natively.
pub fn int_programs() -> Vec<IntProgram> {
    let mut out = Vec::new();
    for n in [0u64, 5, 11] {
        out.push(program(format!("{n}"), n));
    }
    for n in [0u64, 3, 7] {
        out.push(program(format!("pred (succ {n})"), n));
    }
    out.push(program("pred 0".into(), 0));
    out.push(program("succ (pred 4)".into(), 4));
    for (c, a, b) in [(0u64, 4u64, 9u64), (2, 4, 9), (1, 6, 1)] {
        out.push(program(format!("ifz {c} {a} {b}"), if c == 0 { a } else { b }));
    }
    out.push(program("ifz (pred 1) (succ 1) 0".into(), 2));
    for n in [0u64, 3, 6] {
        out.push(program(format!("succ2 {n}"), n + 2));
    }
    for (n, m) in [(0u64, 0u64), (1, 3), (5, 7), (12, 0), (0, 12), (6, 6), (4, 2)] {
        out.push(program(format!("add {n} {m}"), n + m));
    }
    out.push(program("ifz 0 5 omega".into(), 5));
    out.push(program("ifz 3 omega 8".into(), 8));
    out.push(program("ifz (succ 0) (fix (\\x. succ x)) 2".into(), 2));
    out.push(program("(\\x y. x) 3 omega".into(), 3));
    out.push(program("twice succ1 2".into(), 4));
    out.push(program("twice (add 3) 1".into(), 7));
    out.push(program("(\\x. succ x) 4".into(), 5));
    out.push(program("fix (\\f x. ifz x 0 (f (pred x))) 5".into(), 0));
    out.push(program("fix (\\f x. ifz x 1 (succ (succ (f (pred x))))) 3".into(), 7));
    out.push(program("(fix (\\f x y. ifz x y (f (pred x) (succ y)))) 3 4".into(), 7));
    out
}

fn int() -> SimpleType {
    SimpleType::Int
}

fn ints(k: usize) -> SimpleType {
    SimpleType::arrows(vec![int(); k], int())
}

/// Typed machines: hand-written samples, auxiliary machines and translations.
pub fn typed_machines() -> Vec<(String, Machine, SimpleType)> {
    let mut out: Vec<(String, Machine, SimpleType)> = vec![
        ("I".into(), samples::identity(), ints(1)),
        ("I@(int->int)".into(), samples::identity(), SimpleType::arrow(ints(1), ints(1))),
        ("Succ1".into(), samples::succ1(), ints(1)),
        ("Succ2".into(), samples::succ2(), ints(1)),
        ("Add".into(), samples::add(), ints(2)),
        ("Add@[1]".into(), samples::add().append_tape(&[Address::Nat(1)]), ints(1)),
        ("Y".into(), y_machine(), SimpleType::arrow(ints(1), int())),
        ("Omega".into(), omega_machine(), int()),
        ("4".into(), crate::machine::numeral(4), int()),
    ];
    for k in 1..=3 {
        for i in 1..=k {
            out.push((format!("Proj({k},{i})"), aux_machine(AuxSpec::Proj { k, i }).unwrap(), ints(k)));
        }
    }
    for n in 0..=2 {
        for k in 1..=2 {
            let m = aux_machine(AuxSpec::AppN { n, k }).unwrap();
            let mut args = vec![ints(k)];
            args.extend(std::iter::repeat_n(ints(n), k));
            args.extend(std::iter::repeat_n(int(), n));
            out.push((format!("AppN({n},{k})"), m, SimpleType::arrows(args, int())));
        }
    }
    out.push(("Pred".into(), aux_machine(AuxSpec::PredM).unwrap(), ints(1)));
    out.push(("Succ".into(), aux_machine(AuxSpec::SuccM).unwrap(), ints(1)));
    out.push(("Ifz".into(), aux_machine(AuxSpec::IfzM).unwrap(), ints(3)));
    for n in 0..=3 {
        let m = aux_machine(AuxSpec::FixApprox(n)).unwrap();
        out.push((format!("FixApprox({n})"), m, SimpleType::arrow(ints(1), int())));
    }
    let translated = [
        ("\\x. x", ints(1)),
        ("\\x. pred (succ x)", ints(1)),
        ("\\x y. ifz x y (succ y)", ints(2)),
        ("succ2", ints(1)),
        ("add", ints(2)),
        ("add 2", ints(1)),
        ("twice", SimpleType::arrow(ints(1), ints(1))),
        ("\\f. f 0", SimpleType::arrow(ints(1), int())),
        ("\\f x. f x x", SimpleType::arrows([ints(2), int()], int())),
        ("add 3 4", int()),
        ("ifz 0 5 omega", int()),
    ];
    for (src, ty) in translated {
        let t = with_prelude(&parse_pcf(src).unwrap());
        out.push((format!("T[{src}]"), translate_pcf(&t, &[]).unwrap(), ty));
    }
    out
}

/// Deterministic generator of well-typed terms.
pub struct TermGen {
    rng: ChaCha8Rng,
    next: usize,
    /// Permit explicit substitutions.
    pub esub: bool,
    /// Permit `fix` with a decreasing-argument shape.
    pub fix: bool,
}

impl TermGen {
    pub fn new(seed: u64) -> TermGen {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), next: 0, esub: true, fix: true }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("v{}", self.next)
    }

    /// A small random type of order at most two.
    pub fn ty(&mut self) -> SimpleType {
        match self.rng.gen_range(0..6) {
            0..=2 => int(),
            3 => ints(1),
            4 => ints(2),
            _ => SimpleType::arrow(ints(1), int()),
        }
    }

    /// A random term of type `ty` in context `ctx`.
    pub fn term(&mut self, ctx: &[(String, SimpleType)], ty: &SimpleType, depth: u32) -> ETerm {
        let vars: Vec<&(String, SimpleType)> = ctx.iter().filter(|(_, t)| t == ty).collect();
        if depth == 0 || self.rng.gen_bool(0.2) {
            if let Some((x, _)) = vars.choose(&mut self.rng) {
                if self.rng.gen_bool(0.7) {
                    return ETerm::var(x);
                }
            }
            return self.leaf(ctx, ty);
        }
        if self.esub && self.rng.gen_bool(0.15) {
            let a = self.ty();
            let y = self.fresh();
            let arg = self.term(&[], &a, depth - 1);
            let mut inner = ctx.to_vec();
            inner.push((y.clone(), a));
            let body = self.term(&inner, ty, depth - 1);
            return ETerm::esub(body, &y, arg);
        }
        if self.rng.gen_bool(0.25) {
            let a = self.ty();
            let f = self.term(ctx, &SimpleType::arrow(a.clone(), ty.clone()), depth - 1);
            let x = self.term(ctx, &a, depth - 1);
            return ETerm::app(f, x);
        }
        match ty {
            SimpleType::Arrow(a, b) => {
                let x = self.fresh();
                let mut inner = ctx.to_vec();
                inner.push((x.clone(), (**a).clone()));
                ETerm::lam(&x, self.term(&inner, b, depth - 1))
            }
            SimpleType::Int => match self.rng.gen_range(0..5) {
                0 => ETerm::succ(self.term(ctx, ty, depth - 1)),
                1 => ETerm::pred(self.term(ctx, ty, depth - 1)),
                2 | 3 => {
                    let c = self.term(ctx, ty, depth - 1);
                    let l = self.term(ctx, ty, depth - 1);
                    let r = self.term(ctx, ty, depth - 1);
                    ETerm::ifz(c, l, r)
                }
                _ if self.fix => {
                    let (f, x) = (self.fresh(), self.fresh());
                    let mut inner = ctx.to_vec();
                    inner.push((x.clone(), int()));
                    let base = self.term(&inner, ty, depth - 1);
                    let rec = ETerm::app(ETerm::var(&f), ETerm::pred(ETerm::var(&x)));
                    let step = if self.rng.gen_bool(0.5) { ETerm::succ(rec) } else { rec };
                    let body = ETerm::lam(&f, ETerm::lam(&x, ETerm::ifz(ETerm::var(&x), base, step)));
                    let n = self.term(ctx, ty, depth - 1);
                    ETerm::app(ETerm::fix(body), n)
                }
                _ => ETerm::succ(self.term(ctx, ty, depth - 1)),
            },
        }
    }

    fn leaf(&mut self, ctx: &[(String, SimpleType)], ty: &SimpleType) -> ETerm {
        match ty {
            SimpleType::Int => ETerm::numeral(self.rng.gen_range(0..4)),
            SimpleType::Arrow(a, b) => {
                let x = self.fresh();
                let mut inner = ctx.to_vec();
                inner.push((x.clone(), (**a).clone()));
                ETerm::lam(&x, self.leaf(&inner, b))
            }
        }
    }

    /// A closed EPCF program of type `int`.
    pub fn program(&mut self, depth: u32) -> ETerm {
        self.term(&[], &int(), depth)
    }

    /// A closed PCF term of a random type.
    pub fn pcf_term(&mut self, depth: u32) -> (Term, SimpleType) {
        let saved = self.esub;
        self.esub = false;
        let ty = self.ty();
        let t = self.term(&[], &ty, depth);
        self.esub = saved;
        (Term::from_named(&t).expect("generated without substitutions"), ty)
    }

    /// A machine built from random translations, numerals and tapes.
    pub fn machine(&mut self) -> Machine {
        match self.rng.gen_range(0..4) {
            0 => crate::machine::numeral(self.rng.gen_range(0..1u64 << 40)),
            1 => y_machine().append_tape(&[intern(&self.machine())]),
            _ => {
                let depth = self.rng.gen_range(1..5);
                let (t, _) = self.pcf_term(depth);
                let m = translate_pcf(&t, &[]).expect("closed");
                let k = self.rng.gen_range(0..3);
                let tape: Vec<Address> = (0..k).map(|_| Address::Nat(self.rng.gen_range(0..9))).collect();
                m.append_tape(&tape)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epcf::check_epcf;
    use crate::pcf::{check_pcf, eval_pcf_big, TypeEnv};
    use crate::typing::typable_at;

    #[test]
    fn int_programs_evaluate_to_expected() {
        let ps = int_programs();
        assert!(ps.len() >= 20);
        for p in ps {
            assert!(check_pcf(&TypeEnv::new(), &p.term, &SimpleType::Int).is_ok(), "{}", p.source);
            assert_eq!(eval_pcf_big(&p.term, 1_000_000).numeral(), Some(p.expected), "{}", p.source);
        }
    }

    #[test]
    fn typed_machines_check() {
        for (name, m, ty) in typed_machines() {
            assert!(typable_at(&m, &ty, 10_000).is_ok(), "{name} : {ty}");
        }
    }

    #[test]
    fn generated_terms_are_typed() {
        let mut g = TermGen::new(7);
        for _ in 0..200 {
            let ty = g.ty();
            let t = g.term(&[], &ty, 5);
            assert!(t.is_closed());
            assert!(check_epcf(&TypeEnv::new(), &t, &ty).is_ok(), "{t} : {ty}");
        }
        for _ in 0..50 {
            let (t, ty) = g.pcf_term(4);
            assert!(check_pcf(&TypeEnv::new(), &t, &ty).is_ok(), "{t} : {ty}");
        }
    }

    #[test]
    fn prelude_closes_names() {
        let t = with_prelude(&parse_pcf("succ2 (add 1 2)").unwrap());
        assert!(t.is_closed());
        assert_eq!(eval_pcf_big(&t, 10_000).numeral(), Some(5));
        let e = with_prelude_epcf(&crate::epcf::parse_epcf("succ2 x").unwrap());
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), vec!["x".into()]);
    }
}
