//! `eamvm`: evaluate, type, translate and compare PCF, EPCF and EAM programs.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use eamvm::corpus::{with_prelude, with_prelude_epcf};
use eamvm::epcf::{check_epcf, eval_epcf_small, parse_epcf, print_epcf, step_wh, typecheck_epcf};
use eamvm::equiv::{applicative_equiv_pcf, equiv_at_type, ArgumentCorpus, Verdict};
use eamvm::json::{machine_from_json, machine_to_json_pretty, machine_to_value, trace_line};
use eamvm::pcf::{check_pcf, eval_pcf_small, parse_pcf, print_pcf, step_pcf, typecheck_pcf, EvalOutcome, TypeEnv};
use eamvm::reverse::reverse_machine;
use eamvm::translate::{translate, translate_pcf};
use eamvm::typing::{check_type, infer_type, DEFAULT_DEPTH_BUDGET};
use eamvm::{run, step, ETerm, Machine, RunResult, SimpleType, StepOutcome, Term};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_FUEL: u8 = 2;
const EX_DISTINGUISHED: u8 = 1;
const EX_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "eamvm", version, about = "Extended addressing machines, PCF and EPCF")]
struct Cli {
    /// Step budget for evaluation.
    #[arg(long, global = true, env = "EAMVM_FUEL", default_value_t = 1_000_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Lang {
    Pcf,
    Epcf,
    Eam,
}

#[derive(Subcommand)]
enum Command {
    /// Infer the type of a term, or check a machine against a type.
    Typecheck {
        #[arg(long, value_enum, default_value_t = Lang::Pcf)]
        lang: Lang,
        /// Source text, a file, or `-` for stdin.
        input: String,
        /// Type to check against.
        #[arg(long = "type")]
        ty: Option<String>,
    },
    /// Evaluate a closed program.
    Eval {
        #[arg(long, value_enum, default_value_t = Lang::Pcf)]
        lang: Lang,
        input: String,
    },
    /// Translate a term into a machine.
    Translate {
        #[arg(long, value_enum, default_value_t = Lang::Pcf)]
        lang: Lang,
        input: String,
        /// Order of the free variables, comma separated.
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[arg(short, long)]
        out: Option<String>,
    },
    /// Extract a PCF program from a typed machine.
    Reverse {
        machine: String,
        #[arg(long = "type")]
        ty: String,
        #[arg(short, long)]
        out: Option<String>,
    },
    /// Compare two programs at a type over the argument corpus.
    Equiv {
        #[arg(long, value_enum, default_value_t = Lang::Pcf)]
        lang: Lang,
        lhs: String,
        rhs: String,
        #[arg(long = "type")]
        ty: String,
        /// Largest numeral in the corpus.
        #[arg(long, default_value_t = 8)]
        max_numeral: u64,
        /// Largest number of argument tuples.
        #[arg(long, default_value_t = 16_384)]
        max_tuples: usize,
    },
    /// Print every configuration of a run.
    Trace {
        #[arg(long, value_enum, default_value_t = Lang::Eam)]
        lang: Lang,
        input: String,
        #[arg(short, long)]
        out: Option<String>,
    },
    /// Translate, reverse, translate back and compare with the original.
    Roundtrip {
        #[arg(long, value_enum, default_value_t = Lang::Pcf)]
        lang: Lang,
        input: String,
        #[arg(long = "type")]
        ty: String,
    },
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl ToString) -> Failure {
    Failure { code, msg: msg.to_string() }
}

/// A closed stdout ends the command quietly.
fn io_fail(e: io::Error) -> Failure {
    if e.kind() == io::ErrorKind::BrokenPipe {
        fail(0, "")
    } else {
        fail(EX_USAGE, e)
    }
}

fn emit(text: &dyn std::fmt::Display) -> Res<()> {
    writeln!(io::stdout().lock(), "{text}").map_err(io_fail)
}

fn data(e: impl ToString) -> Failure {
    fail(EX_DATAERR, e)
}

type Res<T> = Result<T, Failure>;

/// Output collected by a command, with its exit status.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

impl Report {
    fn ok(text: impl Into<String>, json: Value) -> Report {
        Report { text: text.into(), json, code: 0 }
    }
}

fn read_input(input: &str) -> Res<String> {
    if input == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| fail(EX_USAGE, format!("stdin: {e}")))?;
        return Ok(s);
    }
    let p = Path::new(input);
    if p.is_file() {
        return fs::read_to_string(p).map_err(|e| fail(EX_USAGE, format!("{input}: {e}")));
    }
    Ok(input.to_string())
}

fn parse_type(s: &str) -> Res<SimpleType> {
    s.parse().map_err(|e| data(format!("type {s:?}: {e}")))
}

fn pcf_term(input: &str) -> Res<Term> {
    Ok(with_prelude(&parse_pcf(&read_input(input)?).map_err(data)?))
}

fn epcf_term(input: &str) -> Res<ETerm> {
    Ok(with_prelude_epcf(&parse_epcf(&read_input(input)?).map_err(data)?))
}

fn machine(input: &str) -> Res<Machine> {
    machine_from_json(&read_input(input)?).map_err(data)
}

fn closed_pcf(input: &str) -> Res<Term> {
    let t = pcf_term(input)?;
    if let Some(x) = t.free_names().into_iter().next() {
        return Err(data(format!("unbound variable {x}")));
    }
    Ok(t)
}

fn closed_epcf(input: &str) -> Res<ETerm> {
    let t = epcf_term(input)?;
    if let Some(x) = t.free_vars().into_iter().next() {
        return Err(data(format!("unbound variable {x}")));
    }
    Ok(t)
}

/// A closed program or machine as a machine.
fn as_machine(lang: Lang, input: &str) -> Res<Machine> {
    match lang {
        Lang::Pcf => translate_pcf(&closed_pcf(input)?, &[]).map_err(data),
        Lang::Epcf => translate(&closed_epcf(input)?, &[]).map_err(data),
        Lang::Eam => machine(input),
    }
}

fn typecheck(lang: Lang, input: &str, ty: Option<&str>) -> Res<Report> {
    let env = TypeEnv::new();
    let ty = ty.map(parse_type).transpose()?;
    let found = match lang {
        Lang::Pcf => {
            let t = pcf_term(input)?;
            match &ty {
                Some(a) => check_pcf(&env, &t, a).map(|_| a.clone()).map_err(data)?,
                None => typecheck_pcf(&env, &t).map_err(data)?,
            }
        }
        Lang::Epcf => {
            let t = epcf_term(input)?;
            match &ty {
                Some(a) => check_epcf(&env, &t, a).map(|_| a.clone()).map_err(data)?,
                None => typecheck_epcf(&env, &t).map_err(data)?,
            }
        }
        Lang::Eam => {
            let m = machine(input)?;
            match &ty {
                Some(a) => check_type(&m, a, DEFAULT_DEPTH_BUDGET).map(|_| a.clone()).map_err(data)?,
                None => infer_type(&m, DEFAULT_DEPTH_BUDGET).map_err(data)?,
            }
        }
    };
    Ok(Report::ok(found.to_string(), json!({ "type": found.to_string() })))
}

fn outcome_report<T>(
    outcome: EvalOutcome<T>,
    steps: u64,
    show: impl Fn(&T) -> String,
    numeral: impl Fn(&T) -> Option<u64>,
) -> Res<Report> {
    match outcome {
        EvalOutcome::Value(v) => {
            let value = match numeral(&v) {
                Some(n) => json!(n),
                None => json!(show(&v)),
            };
            let text = numeral(&v).map(|n| n.to_string()).unwrap_or_else(|| show(&v));
            Ok(Report::ok(text, json!({ "value": value, "steps": steps })))
        }
        EvalOutcome::Stuck(t) => Err(fail(EX_RUNTIME, format!("stuck after {steps} steps at {}", show(&t)))),
        EvalOutcome::OutOfFuel | EvalOutcome::Diverges => {
            Err(fail(EX_FUEL, format!("out of fuel after {steps} steps")))
        }
    }
}

fn eval(lang: Lang, input: &str, fuel: u64) -> Res<Report> {
    let env = TypeEnv::new();
    match lang {
        Lang::Pcf => {
            let t = closed_pcf(input)?;
            typecheck_pcf(&env, &t).map_err(data)?;
            let (out, steps) = eval_pcf_small(&t, fuel);
            outcome_report(out, steps, print_pcf, Term::as_numeral)
        }
        Lang::Epcf => {
            let t = closed_epcf(input)?;
            typecheck_epcf(&env, &t).map_err(data)?;
            let (out, steps) = eval_epcf_small(&t, fuel);
            outcome_report(out, steps, print_epcf, ETerm::as_numeral)
        }
        Lang::Eam => match run(&machine(input)?, fuel) {
            RunResult::Halted(m, steps) => match m.as_numeral() {
                Some(n) => Ok(Report::ok(n.to_string(), json!({ "value": n, "steps": steps }))),
                None => Ok(Report::ok(
                    machine_to_json_pretty(&m),
                    json!({ "machine": machine_to_value(&m), "steps": steps }),
                )),
            },
            RunResult::OutOfFuel(_, steps) => Err(fail(EX_FUEL, format!("out of fuel after {steps} steps"))),
            RunResult::Errored(_, steps, d) => Err(fail(EX_RUNTIME, format!("error after {steps} steps: {d}"))),
        },
    }
}

fn free_order(t: &ETerm, vars: &[String]) -> Vec<String> {
    if !vars.is_empty() {
        return vars.to_vec();
    }
    t.free_vars().into_iter().map(|x| x.to_string()).collect()
}

fn translate_cmd(lang: Lang, input: &str, vars: &[String]) -> Res<Machine> {
    let t = match lang {
        Lang::Pcf => pcf_term(input)?.to_named(),
        Lang::Epcf => epcf_term(input)?,
        Lang::Eam => return Err(fail(EX_USAGE, "translate takes a pcf or epcf term")),
    };
    let order = free_order(&t, vars);
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    translate(&t, &order).map_err(data)
}

fn verdict_report(v: &Verdict, corpus: &ArgumentCorpus) -> Report {
    let scope = format!("numerals 0..={}", corpus.max_numeral);
    let (name, code) = match v {
        Verdict::Equivalent => ("equivalent", 0),
        Verdict::Distinguished(_) => ("distinguished", EX_DISTINGUISHED),
        Verdict::Unknown(_) => ("unknown", EX_FUEL),
    };
    let mut j = json!({ "verdict": name, "corpus": scope });
    match v {
        Verdict::Distinguished(w) => {
            j["witness"] = json!({
                "args": w.args.iter().map(print_pcf).collect::<Vec<_>>(),
                "left": w.left.to_string(),
                "right": w.right.to_string(),
            });
        }
        Verdict::Unknown(r) => j["reason"] = json!(format!("{r:?}").to_lowercase()),
        Verdict::Equivalent => {}
    }
    let text = match v {
        Verdict::Equivalent => format!("equivalent (relative to the corpus: {scope})"),
        other => other.to_string(),
    };
    Report { text, json: j, code }
}

fn equiv_cmd(lang: Lang, lhs: &str, rhs: &str, ty: &str, fuel: u64, corpus: &ArgumentCorpus) -> Res<Report> {
    let ty = parse_type(ty)?;
    let v = match lang {
        Lang::Pcf => applicative_equiv_pcf(&closed_pcf(lhs)?, &closed_pcf(rhs)?, &ty, fuel, corpus),
        _ => equiv_at_type(&as_machine(lang, lhs)?, &as_machine(lang, rhs)?, &ty, fuel, corpus),
    }
    .map_err(data)?;
    Ok(verdict_report(&v, corpus))
}

fn trace_cmd(lang: Lang, input: &str, fuel: u64, format: Format, sink: &mut dyn Write) -> Res<u8> {
    let line = |sink: &mut dyn Write, k: u64, text: String, j: Value| -> Res<()> {
        match format {
            Format::Text => writeln!(sink, "{k}: {text}"),
            Format::Json => writeln!(sink, "{j}"),
        }
        .map_err(io_fail)
    };
    match lang {
        Lang::Eam => {
            let mut cur = machine(input)?;
            for k in 0..=fuel {
                writeln!(sink, "{}", trace_line(&cur, k)).map_err(io_fail)?;
                match step(&cur) {
                    StepOutcome::Next(n) if k < fuel => cur = n,
                    StepOutcome::Next(_) => return Ok(EX_FUEL),
                    StepOutcome::Final(_) | StepOutcome::Stuck(_) => return Ok(0),
                    StepOutcome::Error(_, d) => return Err(fail(EX_RUNTIME, d)),
                }
            }
            Ok(EX_FUEL)
        }
        Lang::Pcf => {
            let mut cur = closed_pcf(input)?;
            typecheck_pcf(&TypeEnv::new(), &cur).map_err(data)?;
            for k in 0..=fuel {
                line(sink, k, print_pcf(&cur), json!({ "step": k, "term": print_pcf(&cur) }))?;
                match step_pcf(&cur) {
                    Some(n) if k < fuel => cur = n,
                    Some(_) => return Ok(EX_FUEL),
                    None => return Ok(0),
                }
            }
            Ok(EX_FUEL)
        }
        Lang::Epcf => {
            let mut cur = closed_epcf(input)?;
            typecheck_epcf(&TypeEnv::new(), &cur).map_err(data)?;
            line(sink, 0, print_epcf(&cur), json!({ "step": 0, "term": print_epcf(&cur) }))?;
            for k in 1..=fuel {
                let Some(s) = step_wh(&cur) else { return Ok(0) };
                let text = format!("{} {:<6} {}", s.kind, s.rule, print_epcf(&s.term));
                let j = json!({ "step": k, "kind": s.kind.to_string(), "rule": s.rule, "term": print_epcf(&s.term) });
                line(sink, k, text, j)?;
                cur = s.term;
            }
            Ok(if step_wh(&cur).is_some() { EX_FUEL } else { 0 })
        }
    }
}

fn roundtrip_cmd(lang: Lang, input: &str, ty: &str, fuel: u64) -> Res<Report> {
    let ty = parse_type(ty)?;
    let m = as_machine(lang, input)?;
    check_type(&m, &ty, DEFAULT_DEPTH_BUDGET).map_err(data)?;
    let r = reverse_machine(&m, &ty, DEFAULT_DEPTH_BUDGET).map_err(data)?;
    let back = translate_pcf(&r, &[]).map_err(data)?;
    let corpus = ArgumentCorpus::default();
    let v = equiv_at_type(&back, &m, &ty, fuel, &corpus).map_err(data)?;
    let mut rep = verdict_report(&v, &corpus);
    rep.text = format!("{}\n{}", print_pcf(&r), rep.text);
    rep.json["reverse"] = json!(print_pcf(&r));
    Ok(rep)
}

fn write_out(out: Option<&str>, text: &str) -> Res<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| fail(EX_USAGE, format!("{path}: {e}"))),
        None => emit(&text),
    }
}

fn dispatch(cli: Cli) -> Res<u8> {
    let fuel = cli.fuel;
    let report = match cli.command {
        Command::Typecheck { lang, input, ty } => typecheck(lang, &input, ty.as_deref())?,
        Command::Eval { lang, input } => eval(lang, &input, fuel)?,
        Command::Translate { lang, input, vars, out } => {
            let m = translate_cmd(lang, &input, &vars)?;
            let text = match cli.format {
                Format::Json => machine_to_value(&m).to_string(),
                Format::Text => machine_to_json_pretty(&m),
            };
            write_out(out.as_deref(), &text)?;
            return Ok(0);
        }
        Command::Reverse { machine: input, ty, out } => {
            let ty = parse_type(&ty)?;
            let t = reverse_machine(&machine(&input)?, &ty, DEFAULT_DEPTH_BUDGET).map_err(data)?;
            let text = match cli.format {
                Format::Json => json!({ "term": print_pcf(&t), "type": ty.to_string() }).to_string(),
                Format::Text => print_pcf(&t),
            };
            write_out(out.as_deref(), &text)?;
            return Ok(0);
        }
        Command::Equiv { lang, lhs, rhs, ty, max_numeral, max_tuples } => {
            let corpus = ArgumentCorpus { max_numeral, max_tuples, ..ArgumentCorpus::default() };
            equiv_cmd(lang, &lhs, &rhs, &ty, fuel, &corpus)?
        }
        Command::Trace { lang, input, out } => {
            return match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    let code = trace_cmd(lang, &input, fuel, cli.format, &mut buf)?;
                    fs::write(&path, buf).map_err(|e| fail(EX_USAGE, format!("{path}: {e}")))?;
                    Ok(code)
                }
                None => trace_cmd(lang, &input, fuel, cli.format, &mut io::stdout().lock()),
            };
        }
        Command::Roundtrip { lang, input, ty } => roundtrip_cmd(lang, &input, &ty, fuel)?,
    };
    match cli.format {
        Format::Text => emit(&report.text)?,
        Format::Json => emit(&report.json)?,
    }
    Ok(report.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EX_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("eamvm: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}
