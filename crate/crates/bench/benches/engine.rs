use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use eamvm::corpus::{prelude_term, with_prelude};
use eamvm::equiv::{equiv_at_type, ArgumentCorpus};
use eamvm::machine::Address;
use eamvm::pcf::{eval_pcf_big, parse_pcf};
use eamvm::translate::translate_pcf;
use eamvm::{run, samples};

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    for n in [2u64, 6, 10] {
        let m = samples::add().append_tape(&[Address::Nat(n), Address::Nat(n)]);
        g.bench_with_input(BenchmarkId::new("add", n), &m, |b, m| b.iter(|| run(black_box(m), 1_000_000)));
        let t = with_prelude(&parse_pcf(&format!("add {n} {n}")).unwrap());
        let tm = translate_pcf(&t, &[]).unwrap();
        g.bench_with_input(BenchmarkId::new("translated_add", n), &tm, |b, m| {
            b.iter(|| run(black_box(m), 1_000_000))
        });
        g.bench_with_input(BenchmarkId::new("pcf_add", n), &t, |b, t| b.iter(|| eval_pcf_big(black_box(t), 1_000_000)));
    }
    g.finish();
}

fn translation(c: &mut Criterion) {
    let add = prelude_term("add").unwrap();
    c.bench_function("translate_add", |b| b.iter(|| translate_pcf(black_box(&add), &[])));
}

fn equivalence(c: &mut Criterion) {
    let s1 = translate_pcf(&prelude_term("succ1").unwrap(), &[]).unwrap();
    let s2 = translate_pcf(&parse_pcf("\\x. pred (succ (succ x))").unwrap(), &[]).unwrap();
    let ty = "int -> int".parse().unwrap();
    let corpus = ArgumentCorpus::default();
    c.bench_function("equiv_succ", |b| b.iter(|| equiv_at_type(&s1, &s2, &ty, 100_000, &corpus)));
}

criterion_group!(benches, engine, translation, equivalence);
criterion_main!(benches);
