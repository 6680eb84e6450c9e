use std::path::PathBuf;
use std::process::{Command, Output};

fn basisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basisc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples").join(format!("{name}.qw")).display().to_string()
}

fn scratch(name: &str, src: &str) -> String {
    let dir = std::env::temp_dir().join(format!("basisc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p.display().to_string()
}

#[test]
fn check_exit_codes() {
    assert_eq!(basisc(&["check", &example("bv")]).status.code(), Some(0));
    let mixed = scratch("mixed.qw", "#@ entry k\nqpu k() -> bit: '0' | {'0','+'}.measure\n");
    let o = basisc(&["check", &mixed]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MixedEigenbasis"));
    assert_eq!(basisc(&["check", "/definitely/missing.qw"]).status.code(), Some(1));
    let bad = scratch("bad.qw", "qpu k( -> bit: '0'\n");
    assert_eq!(basisc(&["check", &bad]).status.code(), Some(1));
    let dirty = scratch("dirty.qw", "#@ entry k\nqpu k() -> bit[3]: '000' | std[3].measure\n");
    assert_eq!(basisc(&["run", &dirty, "--max-qubits", "2"]).status.code(), Some(3));
}

#[test]
fn run_histograms() {
    let o = basisc(&["run", &example("bv"), "--shots", "50", "--arg", "secret=1101"]);
    assert_eq!(stdout(&o), r#"{"shots":50,"counts":{"1101":50},"seed":0}"#);
    let o = basisc(&["run", &example("deutsch"), "--shots", "20", "--arg", "f=constant"]);
    assert_eq!(stdout(&o), r#"{"shots":20,"counts":{"0":20},"seed":0}"#);
    let o = basisc(&["run", &example("ghz"), "--shots", "100", "--format", "text"]);
    assert!(stdout(&o).starts_with("outcome"));
}

#[test]
fn phase_schedule_file() {
    let phases = scratch("phases.json", "[3.141592653589793, 3.141592653589793, 3.141592653589793, 3.141592653589793]");
    let o = basisc(&["run", &example("fixpoint"), "--phases", &phases, "--shots", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = scratch("bad.json", "{\"not\": \"a list\"}");
    assert_eq!(basisc(&["run", &example("fixpoint"), "--phases", &bad]).status.code(), Some(1));
}

#[test]
fn lower_matrices() {
    let x = basisc(&["lower", "std >> {'1','0'}"]);
    assert_eq!(stdout(&x), r#"{"qubits":1,"matrix":[[[0.0,0.0],[1.0,0.0]],[[1.0,0.0],[0.0,0.0]]]}"#);
    let id = basisc(&["lower", "std >> std"]);
    assert_eq!(stdout(&id), r#"{"qubits":1,"matrix":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]}"#);
    let cnot: serde_json::Value = serde_json::from_str(&stdout(&basisc(&["lower", "'1' & (std >> {'1','0'})"]))).unwrap();
    assert_eq!(cnot["qubits"], 2);
    let ones: Vec<(usize, usize)> = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .filter(|(r, c)| cnot["matrix"][*r][*c][0].as_f64().unwrap() > 0.5)
        .collect();
    assert_eq!(ones, vec![(0, 0), (1, 1), (2, 3), (3, 2)]);
    assert_eq!(basisc(&["lower", "std.measure"]).status.code(), Some(2));
}

#[test]
fn eval_classical_functions() {
    let src = scratch("fns.qw", "classical identity(x: bit) -> bit: x\n");
    assert_eq!(stdout(&basisc(&["eval", &example("grover"), "all_ones", "111"])), "1");
    assert_eq!(stdout(&basisc(&["eval", &example("grover"), "all_ones", "101"])), "0");
    assert_eq!(stdout(&basisc(&["eval", &src, "identity", "0"])), "0");
}

#[test]
fn drivers_print_answers() {
    assert_eq!(stdout(&basisc(&["driver", "bv", "--arg", "secret=110", "--set", "N=3"])), "110");
    assert_eq!(stdout(&basisc(&["driver", "dj", "--arg", "f=balanced"])), "balanced");
    let f = stdout(&basisc(&["driver", "shors", "--set", "MODN=15", "--seed", "3"]));
    assert!(f == "3" || f == "5", "{f}");
    let j: serde_json::Value =
        serde_json::from_str(&stdout(&basisc(&["driver", "simon", "--seed", "1", "--format", "json"]))).unwrap();
    assert_eq!(j["answer"], "101");
    assert_eq!(basisc(&["driver", "nope"]).status.code(), Some(3));
}

#[test]
fn post_helpers() {
    assert_eq!(stdout(&basisc(&["post", "bin-frac", "0110"])), "3/8");
    assert_eq!(stdout(&basisc(&["post", "convergents", "3/8"])), "0 1/2 1/3 3/8");
    assert_eq!(stdout(&basisc(&["post", "nullspace", "111", "010"])), "101");
    assert_eq!(stdout(&basisc(&["post", "grover-iterations", "3", "1"])), "2");
    assert_eq!(stdout(&basisc(&["post", "modinv", "7", "15"])), "13");
    assert_eq!(basisc(&["post", "nullspace", "110"]).status.code(), Some(3));
}
