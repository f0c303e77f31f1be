//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with its checks before asserting.

use fracpde::acceptance::{criterion, CriterionResult};

const SEED: u64 = 20240917;

fn run(id: u8) -> CriterionResult {
    let r = criterion(id, SEED);
    println!("{}", r.render());
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    for (name, bytes) in &r.files {
        std::fs::write(dir.join(name), bytes).unwrap();
    }
    r
}

fn assert_pass(id: u8) {
    let r = run(id);
    assert!(r.pass, "criterion {id} ({}) failed", r.name);
}

#[test]
fn criterion_01_green_identity() {
    assert_pass(1);
}

#[test]
fn criterion_02_spectral_structure() {
    assert_pass(2);
}

#[test]
fn criterion_03_semigroup_bounds() {
    assert_pass(3);
}

#[test]
fn criterion_04_gl_mild_solution() {
    assert_pass(4);
}

#[test]
fn criterion_05_gl_energy_suite() {
    assert_pass(5);
}

#[test]
fn criterion_06_fp_vanishing_viscosity() {
    assert_pass(6);
}

#[test]
fn criterion_07_fp_uniqueness() {
    assert_pass(7);
}

#[test]
fn criterion_08_uniform_gronwall() {
    assert_pass(8);
}

#[test]
fn criterion_09_monte_carlo() {
    assert_pass(9);
}

#[test]
fn criterion_10_determinism() {
    assert_pass(10);
}
