//! The twelve acceptance criteria, one test each. Every test prints a single
//! pass/fail line before asserting.

use halfline::acceptance::run;

fn check(id: u32) {
    match run(id) {
        Ok(c) => {
            println!("{}", c.line());
            let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
            for r in c.checks.iter().filter(|r| verbose || !r.ok()) {
                println!("    {:?} {}: {:e} vs {:e} {}", r.verdict, r.name, r.residual, r.bound, r.note);
            }
            assert!(c.passed, "criterion {id} failed");
        }
        Err(e) => {
            println!("criterion {id:>2}: FAIL error: {e}");
            panic!("criterion {id} errored: {e}");
        }
    }
}

#[test]
fn criterion_01_constant_closed_form() {
    check(1);
}

#[test]
fn criterion_02_m_round_trips() {
    check(2);
}

#[test]
fn criterion_03_laplace_residual() {
    check(3);
}

#[test]
fn criterion_04_locality() {
    check(4);
}

#[test]
fn criterion_05_abelian_bridge() {
    check(5);
}

#[test]
fn criterion_06_smeared_identity() {
    check(6);
}

#[test]
fn criterion_07_tauberian() {
    check(7);
}

#[test]
fn criterion_08_negative_tail() {
    check(8);
}

#[test]
fn criterion_09_probes() {
    check(9);
}

#[test]
fn criterion_10_scattering() {
    check(10);
}

#[test]
fn criterion_11_h_boundary() {
    check(11);
}

#[test]
fn criterion_12_bound_suites() {
    check(12);
}
