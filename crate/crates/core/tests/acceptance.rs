use freejacobi::acceptance::run;

fn check(id: usize) {
    let result = run(id).expect("known criterion");
    println!("{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn c01_moment_hierarchy() {
    check(1);
}

#[test]
fn c02_flow_consistency() {
    check(2);
}

#[test]
fn c03_half_retrieval() {
    check(3);
}

#[test]
fn c04_phase_transitions() {
    check(4);
}

#[test]
fn c05_bijection() {
    check(5);
}

#[test]
fn c06_coefficients() {
    check(6);
}

#[test]
fn c07_asymptotics() {
    check(7);
}

#[test]
fn c08_kunisky() {
    check(8);
}

#[test]
fn c09_projection_identities() {
    check(9);
}

#[test]
fn c10_dynamical_identity() {
    check(10);
}

#[test]
fn c11_freeness_proxy() {
    check(11);
}

#[test]
fn c12_matrix_monte_carlo() {
    check(12);
}

#[test]
fn c13_positivity() {
    check(13);
}
