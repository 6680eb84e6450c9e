use basisc_core::sim::{run, Plan, SimOptions};
use basisc_core::typecheck::{compile, Bindings};

fn check(name: &str) {
    let path = format!("{}/examples/{name}.qw", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap();
    let c = compile(&src, None, &Bindings::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    let p = Plan::new(&c, SimOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    let r = run(&p, 20, 1).unwrap_or_else(|e| panic!("{name}: {e}"));
    println!("{name}: {:?}", r.counts);
}

#[test]
fn corpus_programs_run() {
    for name in ["deutsch", "dj", "bv", "ghz", "period", "simon", "qpe", "order_finding", "grover", "fixpoint", "match"] {
        check(name);
    }
}
