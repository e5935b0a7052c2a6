//! Compiles and runs a small C program against the generated header and the
//! static library, verifying the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "wcop.h"

int main(void) {
    struct WcopCatalog *catalog = wcop_catalog_new();
    if (!catalog) return 10;
    size_t len = wcop_catalog_len(catalog);
    if (len < 8) return 11;

    char *name = NULL;
    if (wcop_catalog_name(catalog, 0, &name) != WCOP_STATUS_OK) return 12;
    printf("first scenario: %s\n", name);
    wcop_string_free(name);

    char *report = NULL;
    WcopStatus status = wcop_run_scenario(
        catalog, "contraction-on-disk", "{\"horizon\": 64}", &report);
    if (status != WCOP_STATUS_OK) return 13;
    if (strstr(report, "\"all_pass\":true") == NULL) return 14;
    wcop_string_free(report);

    status = wcop_run_scenario(catalog, "no-such-scenario", NULL, &report);
    if (status != WCOP_STATUS_UNKNOWN_SCENARIO) return 15;
    char *message = wcop_last_error();
    if (!message) return 16;
    printf("expected failure: %s (%s)\n", message, wcop_status_name(status));
    wcop_string_free(message);

    char *table = NULL;
    if (wcop_expansion_table("2,1", &table) != WCOP_STATUS_OK) return 17;
    wcop_string_free(table);

    printf("version: %s\n", wcop_version());
    wcop_catalog_free(catalog);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // OUT_DIR is not available to integration tests; derive the profile
    // directory from the test executable location instead.
    let mut dir = std::env::current_exe().expect("test executable path");
    dir.pop(); // executable name
    if dir.ends_with("deps") {
        dir.pop();
    }
    dir
}

#[test]
fn c_program_links_and_runs() {
    let cc = ["cc", "clang", "gcc"]
        .iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok())
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler available; skipping ABI smoke test");
        return;
    };

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");

    // `cargo test` does not necessarily produce the staticlib artifact;
    // build it explicitly so the link sees current symbols.
    let build = Command::new(env!("CARGO"))
        .args(["build", "-p", "wcop-ffi"])
        .current_dir(&manifest)
        .output()
        .expect("cargo runs");
    assert!(
        build.status.success(),
        "staticlib build failed:\n{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let lib_dir = target_dir();
    let lib = lib_dir.join("libwcop_ffi.a");
    assert!(
        lib.exists(),
        "static library missing at {} (built with the crate)",
        lib.display()
    );

    let work = tempfile::tempdir().unwrap();
    let source = work.path().join("smoke.c");
    std::fs::write(&source, C_PROGRAM).unwrap();
    let binary = work.path().join("smoke");

    let compile = Command::new(cc)
        .arg(&source)
        .arg("-I")
        .arg(&include)
        .arg(lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&binary)
        .output()
        .expect("compiler runs");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("program runs");
    assert_eq!(
        run.status.code(),
        Some(0),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("first scenario:"), "{text}");
    assert!(text.contains("version: 0.1.0"), "{text}");
}
