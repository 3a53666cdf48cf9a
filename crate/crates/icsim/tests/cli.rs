// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use icsim::{snapshot, trace_io};
use icsim_core::ir::interpret_reference;
use icsim_core::{form_regions, parse_program};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(format!("{name}.ir"))
}

fn icsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icsim")).args(args).current_dir(dir).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inc = corpus("increment");
    assert_eq!(icsim(&["verify", path(&inc)], dir.path()).status.code(), Some(0));
    assert_eq!(icsim(&["verify", path(&inc), "--naive"], dir.path()).status.code(), Some(2));
    let missing = icsim(&["run", "missing.ir"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: reading missing.ir"));
    assert_eq!(icsim(&["run", path(&inc), "--ilp", "maybe"], dir.path()).status.code(), Some(1));
    assert_eq!(icsim(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn verify_report_names_the_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let out = icsim(&["verify", path(&corpus("increment")), "--naive", "-o", "v.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(v["program"], "increment");
    assert!(v["failures"].as_u64().unwrap() > 0);
    assert_eq!(v["first_counterexample"]["diff"][0]["expected"], 1);
    assert_eq!(v["first_counterexample"]["diff"][0]["actual"], 2);
}

/// Enough work to span several ON windows of `periodic.csv`.
const LONG_LOOP: &str = "data out = [0 x 4]
fn main {
A:  mov r10, 0
    mov r12, 2000
L:  load r1, out, 0
    add r1, r1, r10
    xor r2, r1, 3
    store r1, out, 0
    store r2, out, 4
    add r10, r10, 1
    blt r10, r12, L
E:  halt
}
";

/// 600 µs powered, 100 µs dark, repeating.
const PERIODIC: &str = "time_us,voltage_v\n0,3.5\n600,3.5\n601,0.5\n700,0.5\n701,3.5\n";

#[test]
fn final_nvm_snapshot_holds_the_reference_result() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("long.ir"), LONG_LOOP).unwrap();
    fs::write(dir.path().join("periodic.csv"), PERIODIC).unwrap();
    let run = icsim(&["run", "long.ir", "--trace", "periodic.csv", "--nvm-out", "nvm.bin", "-o", "r.json"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["status"], "completed");
    assert!(r["outages"].as_u64().unwrap() > 2, "{r}");

    let nvm = snapshot::load(&dir.path().join("nvm.bin")).unwrap();
    let p = parse_program(LONG_LOOP).unwrap();
    let golden = interpret_reference(&form_regions(&p, 40).unwrap().program, 1_000_000).unwrap();
    assert_eq!(nvm.primary(), &golden.memory[..]);
}

#[test]
fn generated_trace_has_the_requested_outages() {
    let dir = tempfile::tempdir().unwrap();
    let out = icsim(&["gen-trace", "--outages", "25", "--duration-s", "3", "--seed", "9"], dir.path());
    assert!(out.status.success());
    let t = trace_io::read_trace(&out.stdout[..]).unwrap();
    assert_eq!(t.dips_below(1.8), 25);
    assert_eq!(t.duration_ns(), 3_000_000_000);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let prog = corpus("store_dense");
    fs::write(dir.path().join("small.toml"), "sb_size = 16\n").unwrap();
    let out = icsim(&["compile", path(&prog), "--config", "small.toml", "--regions", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["threshold"], 8);
    // flags override the file
    icsim(&["compile", path(&prog), "--config", "small.toml", "--sb-size", "24", "--regions", "r.json"], dir.path());
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["threshold"], 12);

    fs::write(dir.path().join("bad.toml"), "sb_sise = 16\n").unwrap();
    assert_eq!(icsim(&["compile", path(&prog), "--config", "bad.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn compare_lists_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    icsim(&["gen-trace", "--outages", "20", "-o", "t.csv"], dir.path());
    let out = icsim(&["compare", path(&corpus("fib")), "--trace", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("mode,status,"));
    assert!(lines[1].starts_with("speculative,completed,") && lines[1].ends_with(",true"));
    assert!(lines[2].starts_with("nvp,completed,") && lines[2].ends_with(",true"));
}
