use basisc_core::drivers::{run_driver, DriverConfig};

fn drive(name: &str, cfg: DriverConfig) -> String {
    run_driver(name, &cfg).unwrap_or_else(|e| panic!("{name}: {e}")).answer
}

#[test]
fn oracle_drivers() {
    assert_eq!(drive("deutsch", DriverConfig::default()), "balanced");
    assert_eq!(drive("deutsch", DriverConfig::default().arg("f", "constant")), "constant");
    assert_eq!(drive("dj", DriverConfig::default().arg("f", "balanced")), "balanced");
    assert_eq!(drive("dj", DriverConfig::default().arg("f", "zero")), "constant");
    let r = run_driver("bv", &DriverConfig::default().arg("secret", "110")).unwrap();
    assert_eq!((r.answer.as_str(), r.invocations, r.oracle_calls), ("110", 1, 1));
}

#[test]
fn period_simon_qpe() {
    assert_eq!(drive("period", DriverConfig::default().seed(3)), "4");
    assert_eq!(drive("simon", DriverConfig::default().seed(3)), "101");
    assert_eq!(drive("qpe", DriverConfig::default()), "1/8");
}

#[test]
fn order_and_factoring() {
    assert_eq!(drive("order_finding", DriverConfig::default().seed(1)), "4");
    let f = drive("shors", DriverConfig::default().seed(2));
    assert!(f == "3" || f == "5", "{f}");
}

#[test]
fn search_drivers() {
    assert_eq!(drive("grover", DriverConfig::default().shots(200)), "111");
    assert_eq!(drive("fixpoint", DriverConfig::default().shots(50)), "111");
    assert_eq!(drive("match", DriverConfig::default().shots(60)), "0,3,6");
}
