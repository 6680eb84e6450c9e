use basisc_core::basis::{translation_unitary, predicated_unitary, veclist};
use basisc_core::error::ErrorCode;
use basisc_core::linalg::Matrix;
use basisc_core::parser::{parse_expr, parse_program, to_basis};
use basisc_core::sim::{run, run_to_state, Plan, SimOptions};
use basisc_core::syntax::Expr;
use basisc_core::typecheck::{compile, Bindings};

fn plan(src: &str, b: Bindings) -> Plan {
    let c = compile(src, None, &b).unwrap();
    Plan::new(&c, SimOptions::default()).unwrap()
}

fn empty_plan() -> Plan {
    Plan::from_program(&parse_program("").unwrap(), None, SimOptions::default()).unwrap()
}

fn matrix_of(p: &Plan, src: &str) -> Matrix {
    let e = parse_expr(src).unwrap();
    let f = p.function(&e).unwrap();
    p.matrix(&f).unwrap()
}

fn dense_translation(src: &str) -> Matrix {
    let Expr::Translate { from, to } = parse_expr(src).unwrap() else { panic!("{src}") };
    translation_unitary(&veclist(&from).unwrap(), &veclist(&to).unwrap()).unwrap()
}

#[test]
fn translations_match_dense_unitaries() {
    let p = empty_plan();
    for src in [
        "std >> pm",
        "std >> {'0', -'1'}",
        "{'1','0'} >> {-'0','1'}",
        "'1' + std >> '1' + {phase(0.3)*'0', phase(-0.3)*'1'}",
        "pm >> ij",
        "std + pm >> ij + fourier[1]",
        "{'0','1'} + pm >> pm + std",
        "'1' + std >> '1' + pm",
        "std + '1' >> pm + '1'",
        "{'00','11'} >> {'11','00'}",
        "{'01','10'} >> {'10', -'01'}",
        "std[3] >> fourier[3]",
        "fourier[2] >> pm[2]",
        "{'+0','-1'} >> {'-1','+0'}",
        "std[2] >> {'00','01','11','10'}",
        "'1' + {'0','1'} + '1' >> '1' + {'1','0'} + '1'",
    ] {
        let got = matrix_of(&p, src);
        let want = dense_translation(src);
        assert!(got.max_abs_diff(&want) < 1e-9, "{src}: {}", got.max_abs_diff(&want));
    }
}

#[test]
fn predicate_and_reverse_match_dense() {
    let p = empty_plan();
    let pm = veclist(&to_basis(&parse_expr("'+'").unwrap()).unwrap()).unwrap();
    let flip = dense_translation("std >> {'1','0'}");
    let want = predicated_unitary(&pm, &flip).unwrap();
    assert!(matrix_of(&p, "'+' & std.flip").max_abs_diff(&want) < 1e-9);

    let rev = matrix_of(&p, "~(std >> ij)");
    assert!(rev.max_abs_diff(&dense_translation("ij >> std")) < 1e-9);
}

#[test]
fn ghz_support() {
    let src = "#@ entry ghz\nqpu ghz() -> bit[3]: '+00' | '1' & (std.flip + std.flip) | std[3].measure";
    let r = run(&plan(src, Bindings::default()), 400, 7).unwrap();
    assert_eq!(r.counts.keys().cloned().collect::<Vec<_>>(), vec!["000", "111"]);
    assert_eq!(r.counts.values().sum::<u64>(), 400);
}

#[test]
fn bernstein_vazirani_single_call() {
    let src = "
        #@ entry kernel
        classical parity[N](secret: bit[N]; x: bit[N]) -> bit: (x & secret).xor_reduce()
        qpu kernel[N](f: cfunc[N,1]) -> bit[N]: '+'[N] | f.phase | pm[N] >> std[N] | std[N].measure
    ";
    let b = Bindings::default().arg("f", "parity").arg("secret", "1011");
    let r = run(&plan(src, b), 64, 1).unwrap();
    assert_eq!(r.counts.get("1011"), Some(&64));
    assert_eq!(r.total_calls(), 64);
}

#[test]
fn runs_are_deterministic() {
    let src = "#@ entry k\nqpu k() -> bit[4]: '+'[4] | std[4].measure";
    let p = plan(src, Bindings::default());
    let a = serde_json::to_string(&run(&p, 300, 42).unwrap()).unwrap();
    let b = serde_json::to_string(&run(&p, 300, 42).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("{\"shots\":300,\"counts\":{"));
}

#[test]
fn state_of_returned_qubits() {
    let src = "#@ entry k\nqpu k() -> qubit[2]: '+0' | '1' & std.flip";
    let s = run_to_state(&plan(src, Bindings::default()), 0).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((s[0].re - h).abs() < 1e-12 && (s[3].re - h).abs() < 1e-12);
    assert!(s[1].norm() < 1e-12 && s[2].norm() < 1e-12);
}

#[test]
fn discardz_checks_the_ancilla_at_runtime() {
    let src = "
        #@ entry k
        qpu rev clean(q: qubit) -> qubit: q + '0' | id + discardz
        qpu rev dirty(q: qubit) -> qubit: q + '1' | id + discardz
        qpu k() -> bit[2]: ('1' | clean | std.measure) + ('0' | dirty | std.measure)
    ";
    let c = compile(src, None, &Bindings::default()).unwrap();
    let p = Plan::new(&c, SimOptions::default()).unwrap();
    assert_eq!(run(&p, 1, 0).unwrap_err().code, ErrorCode::DirtyDiscardZ);
    let plain = "#@ entry k\nqpu k() -> bit: '1' + '0' | discardz + std.measure";
    assert_eq!(compile(plain, None, &Bindings::default()).unwrap_err().code(), ErrorCode::NotReversible);
}

#[test]
fn capacity_is_enforced() {
    let src = "#@ entry k\nqpu k() -> bit[3]: '000' | std[3].measure";
    let c = compile(src, None, &Bindings::default()).unwrap();
    let p = Plan::new(&c, SimOptions { max_qubits: 2, tol: 1e-9 }).unwrap();
    assert_eq!(run(&p, 1, 0).unwrap_err().code, ErrorCode::CapacityExceeded);
}

