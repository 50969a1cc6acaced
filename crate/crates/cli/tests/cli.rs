use std::io::Write;
use std::process::{Command, Output, Stdio};

use eamvm::corpus::int_programs;
use eamvm::json::{machine_from_json, machine_to_json, parse_trace_line};
use eamvm::machine::Address;
use eamvm::samples;

fn eamvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eamvm")).args(args).env_remove("EAMVM_FUEL").output().unwrap()
}

fn eamvm_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_eamvm"))
        .args(args)
        .env_remove("EAMVM_FUEL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_pcf_with_prelude() {
    let o = eamvm(&["eval", "--lang", "pcf", "succ2 3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "5\n");
}

#[test]
fn translate_identity_is_the_projection() {
    let o = eamvm(&["translate", "\\x.x"]);
    assert!(o.status.success());
    assert_eq!(machine_from_json(&stdout(&o)).unwrap(), samples::identity());
}

#[test]
fn eval_eam_add() {
    let m = samples::add().append_tape(&[Address::Nat(1), Address::Nat(3)]);
    let o = eamvm(&["eval", "--lang", "eam", &machine_to_json(&m)]);
    assert_eq!(stdout(&o), "4\n");
    let o = eamvm(&["eval", "--lang", "eam", "--format", "json", &machine_to_json(&m)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"], 4);
}

#[test]
fn pcf_and_eam_agree_on_the_corpus() {
    for p in int_programs() {
        let src = eamvm(&["eval", "--lang", "pcf", &p.source]);
        let m = eamvm(&["translate", &p.source]);
        assert!(m.status.success(), "{}", p.source);
        let eam = eamvm_stdin(&["eval", "--lang", "eam", "-"], &stdout(&m));
        assert_eq!(stdout(&src), format!("{}\n", p.expected), "{}", p.source);
        assert_eq!(stdout(&eam), stdout(&src), "{}", p.source);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(eamvm(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(eamvm(&["eval", "--fuel", "0", "1"]).status.code(), Some(64));
    assert_eq!(eamvm(&["eval", "(\\x. x"]).status.code(), Some(65));
    assert_eq!(eamvm(&["eval", "succ (\\x. x)"]).status.code(), Some(65));
    assert_eq!(eamvm(&["typecheck", "--lang", "eam", "{\"regs\":[]}"]).status.code(), Some(65));
    assert_eq!(eamvm(&["eval", "--fuel", "100", "omega"]).status.code(), Some(2));
    let d = eamvm(&["equiv", "\\x.x", "succ1", "--type", "int -> int"]);
    assert_eq!(d.status.code(), Some(1));
    assert!(stdout(&d).contains("distinguished"));
    let e = eamvm(&["equiv", "--lang", "eam", "succ2", "\\n. succ (succ n)", "--type", "int -> int"]);
    assert_eq!(e.status.code(), Some(65));
    let e = eamvm(&["equiv", "--lang", "epcf", "succ2", "\\n. succ (succ n)", "--type", "int -> int"]);
    assert_eq!(e.status.code(), Some(0));
}

#[test]
fn fuel_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_eamvm"))
        .args(["eval", "add 5 5"])
        .env("EAMVM_FUEL", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn equiv_json_report_is_deterministic() {
    let args = ["equiv", "--format", "json", "\\x.x", "succ1", "--type", "int -> int"];
    let a = stdout(&eamvm(&args));
    assert_eq!(a, stdout(&eamvm(&args)));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["verdict"], "distinguished");
    assert_eq!(v["witness"]["args"][0], "0");
    assert_eq!((v["witness"]["left"].as_str(), v["witness"]["right"].as_str()), (Some("0"), Some("1")));
}

#[test]
fn trace_lines_replay() {
    let m = samples::succ2().append_tape(&[Address::Nat(1)]);
    let o = eamvm(&["trace", &machine_to_json(&m)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    let (_, first) = parse_trace_line(lines[0]).unwrap();
    assert_eq!(first, m);
    let (k, last) = parse_trace_line(lines.last().unwrap()).unwrap();
    assert_eq!((k, last.as_numeral()), (Some(lines.len() as u64 - 1), Some(3)));
}

#[test]
fn reverse_and_roundtrip() {
    let o = eamvm(&["reverse", &machine_to_json(&samples::identity()), "--type", "int -> int"]);
    assert_eq!(stdout(&o), "\\x0. x0\n");
    let o = eamvm(&["roundtrip", "succ2", "--type", "int -> int"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("equivalent"));
}

#[test]
fn typecheck_languages() {
    assert_eq!(stdout(&eamvm(&["typecheck", "\\f x. f (f x)"])), "(int -> int) -> int -> int\n");
    assert_eq!(stdout(&eamvm(&["typecheck", "--lang", "epcf", "(\\y. y)[x := 0]"])), "int -> int\n");
    let add = machine_to_json(&samples::add());
    assert_eq!(stdout(&eamvm(&["typecheck", "--lang", "eam", &add])), "int -> int -> int\n");
}
