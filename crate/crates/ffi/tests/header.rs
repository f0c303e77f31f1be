use std::path::Path;
use std::process::Command;

const EXPORTS: [&str; 13] = [
    "fracpde_last_error",
    "fracpde_fractional_constant",
    "fracpde_operator_new",
    "fracpde_operator_free",
    "fracpde_operator_size",
    "fracpde_operator_apply",
    "fracpde_operator_dirichlet_form",
    "fracpde_spectrum_new",
    "fracpde_spectrum_free",
    "fracpde_spectrum_eigenvalues",
    "fracpde_spectrum_heat_apply",
    "fracpde_gl_run",
    "fracpde_mc_survival",
];

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fracpde.h");
    std::fs::read_to_string(path).expect("header is generated by the build script")
}

#[test]
fn header_declares_every_export() {
    let text = header();
    for name in EXPORTS.iter().chain(["fracpde_uniform_gronwall"].iter()) {
        assert!(text.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(text.contains("typedef struct FracpdeOperator FracpdeOperator;"));
    assert!(text.contains("FRACPDE_STATUS_NUMERICAL_ERROR = 3"));
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "fracpde.h"
int main(void) {
    FracpdeOperator *op = 0;
    enum FracpdeStatus s = fracpde_operator_new(1.0, 15, &op);
    double u[15] = {0}, out[15];
    if (s == FRACPDE_STATUS_OK) s = fracpde_operator_apply(op, u, 15, out);
    fracpde_operator_free(op);
    return (int)s;
}
"#,
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}
