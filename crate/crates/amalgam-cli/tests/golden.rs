//! End-to-end tests of the `amalgam` binary: every subcommand is run
//! against fixture files and its stdout is byte-compared with a frozen
//! output under `tests/golden/expected/`. Exit codes follow the contract
//! 0 = pass/output, 1 = diagnostic refuted, 2 = usage or format error.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

/// Spawn the binary from the crate root (fixture paths are relative to it)
/// with a scrubbed environment so an ambient AMALGAM_MAX_N cannot leak in.
fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_amalgam"));
    cmd.current_dir(manifest_dir());
    cmd.env_remove("AMALGAM_MAX_N");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("binary exits normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("output is UTF-8")
}

fn expected(name: &str) -> String {
    let path = manifest_dir().join("tests/golden/expected").join(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn assert_golden(args: &[&str], name: &str, exit: i32) {
    let out = run(args);
    assert_eq!(
        code(&out),
        exit,
        "{args:?}: stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout(&out), expected(name), "{args:?}");
}

#[test]
fn nc_reports_match_frozen_output() {
    assert_golden(&["nc", "--n", "4"], "nc_n4.json", 0);
    assert_golden(
        &["nc", "--n", "4", "--even", "--kreweras", "--mobius"],
        "nc_n4_even.json",
        0,
    );
    assert_golden(
        &["nc", "--n", "3", "--kreweras", "--mobius", "--format", "text"],
        "nc_n3_kr_mu.txt",
        0,
    );
}

#[test]
fn transform_outputs_match_frozen_specs() {
    assert_golden(
        &["moments", "--spec", "tests/golden/semicircular_n6.json", "--order", "6"],
        "moments_semicircular.json",
        0,
    );
    assert_golden(
        &[
            "moments",
            "--spec",
            "tests/golden/semicircular_n6.json",
            "--order",
            "6",
            "--format",
            "text",
        ],
        "moments_semicircular.txt",
        0,
    );
    // Inverting the frozen moment file recovers exactly the one cumulant.
    assert_golden(
        &[
            "cumulants",
            "--spec",
            "tests/golden/expected/moments_semicircular.json",
            "--order",
            "6",
        ],
        "cumulants_semicircular.json",
        0,
    );
}

#[test]
fn check_subcommands_match_frozen_reports() {
    assert_golden(
        &["check-even", "--spec", "tests/golden/semicircular_n6.json", "--var", "1", "--order", "6"],
        "check_even_pass.json",
        0,
    );
    assert_golden(
        &["check-even", "--spec", "tests/golden/odd_first_order.json", "--var", "1", "--order", "3"],
        "check_even_fail.json",
        1,
    );
    assert_golden(
        &[
            "check-even",
            "--spec",
            "tests/golden/odd_first_order.json",
            "--var",
            "1",
            "--order",
            "3",
            "--format",
            "text",
        ],
        "check_even_fail.txt",
        1,
    );
    assert_golden(
        &["check-even", "--spec", "tests/golden/even_d2.json", "--var", "1", "--order", "2"],
        "check_even_d2.json",
        0,
    );
    assert_golden(
        &["check-trace", "--spec", "tests/golden/semicircular_n6.json", "--order", "4"],
        "check_trace_pass.json",
        0,
    );
    assert_golden(
        &["check-rdiag", "--spec", "tests/golden/pair_alternating.json", "--order", "4"],
        "check_rdiag_pass.json",
        0,
    );
    // Negative control: a pure (1,1) cumulant refutes R-diagonality with
    // the offending tuple as witness.
    assert_golden(
        &["check-rdiag", "--spec", "tests/golden/pure_first_variable.json", "--order", "2"],
        "check_rdiag_fail.json",
        1,
    );
    let report = expected("check_rdiag_fail.json");
    assert!(report.contains("\"witness_tuple\": [\n      1,\n      1\n    ]"), "{report}");
}

#[test]
fn det_series_and_boxconv_match_frozen_reports() {
    assert_golden(
        &["det-series", "--spec", "tests/golden/pair_alternating.json", "--order", "2"],
        "det_series.json",
        0,
    );
    // A non-alternating pair is refuted by the precondition check, not a
    // usage error: exit 1 with the witness in the report.
    assert_golden(
        &["det-series", "--spec", "tests/golden/pure_first_variable.json", "--order", "1"],
        "det_series_refuted.json",
        1,
    );
    assert_golden(
        &["boxconv", "--f", "tests/golden/semicircular_n4.json", "--g", "tests/golden/zeta_n4.json"],
        "boxconv_trivial.json",
        0,
    );
    assert_golden(
        &[
            "boxconv",
            "--f",
            "tests/golden/semicircular_n4.json",
            "--g",
            "tests/golden/zeta_n4.json",
            "--gargs",
            "symm:tests/golden/b0_half.json",
        ],
        "boxconv_symm.json",
        0,
    );
}

#[test]
fn verify_subcommand_matches_frozen_report() {
    assert_golden(
        &["verify-thm27", "--seed", "7", "--dim", "2", "--order", "3"],
        "verify_seed7.json",
        0,
    );
    // --count runs consecutive seeds and aggregates them sorted by seed.
    let out = run(&["verify-thm27", "--seed", "7", "--dim", "2", "--order", "2", "--count", "3"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let seeds: Vec<u64> = report["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![7, 8, 9]);
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
}

#[test]
fn usage_and_format_errors_exit_2() {
    let cases: &[&[&str]] = &[
        // Transform direction does not match the file's kind.
        &["moments", "--spec", "tests/golden/moment_n2.json", "--order", "2"],
        &["cumulants", "--spec", "tests/golden/semicircular_n6.json", "--order", "6"],
        // R-diagonality needs a two-variable spec.
        &["check-rdiag", "--spec", "tests/golden/semicircular_n6.json", "--order", "2"],
        // Orders beyond the file's truncation cannot be checked.
        &["check-even", "--spec", "tests/golden/semicircular_n6.json", "--var", "1", "--order", "7"],
        &["moments", "--spec", "tests/golden/semicircular_n6.json", "--order", "7"],
        // det-series needs the spec to reach twice the requested order.
        &["det-series", "--spec", "tests/golden/pair_alternating.json", "--order", "3"],
        // Non-canonical rational in the file.
        &["check-even", "--spec", "tests/golden/bad_rational.json", "--var", "1", "--order", "2"],
        // Missing file, bad gargs, zero order.
        &["moments", "--spec", "tests/golden/no_such_file.json", "--order", "2"],
        &[
            "boxconv",
            "--f",
            "tests/golden/semicircular_n4.json",
            "--g",
            "tests/golden/zeta_n4.json",
            "--gargs",
            "diag",
        ],
        &["nc", "--n", "0"],
        // Unknown subcommand and unknown flag are rejected by the parser.
        &["frobnicate"],
        &["nc", "--n", "4", "--frobnicate"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: stdout: {} stderr: {}",
            stdout(&out),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Failures that refute a hypothesis keep exit code 1, distinct from
    // the usage failures above.
    let out = run(&["check-rdiag", "--spec", "tests/golden/pure_first_variable.json", "--order", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn safety_cap_flag_overrides_environment() {
    // Lattice orders above the cap are usage errors; the default cap is 10.
    let out = run(&["nc", "--n", "11"]);
    assert_eq!(code(&out), 2);
    let out = run(&["nc", "--n", "9"]);
    assert_eq!(code(&out), 0);

    let out = bin().args(["nc", "--n", "9"]).env("AMALGAM_MAX_N", "8").output().unwrap();
    assert_eq!(code(&out), 2, "environment cap applies");
    let out = bin()
        .args(["nc", "--n", "9", "--max-n", "9"])
        .env("AMALGAM_MAX_N", "8")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "--max-n wins over the environment");
    let out = bin().args(["nc", "--n", "4"]).env("AMALGAM_MAX_N", "junk").output().unwrap();
    assert_eq!(code(&out), 2, "malformed environment cap is a usage error");
}

#[test]
fn out_flag_writes_the_same_bytes_and_reruns_are_identical() {
    let dir = std::env::temp_dir().join(format!("amalgam-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("report.json");
    let path_str = path.to_str().unwrap();

    let args = ["verify-thm27", "--seed", "3", "--dim", "1", "--order", "2"];
    let first = run(&args);
    assert_eq!(code(&first), 0);
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout, "repeated runs are byte-identical");

    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend_from_slice(&["--out", path_str]);
    let filed = run(&with_out);
    assert_eq!(code(&filed), 0);
    assert!(stdout(&filed).is_empty(), "--out suppresses stdout");

    // The report embeds the exact command line, and the file-writing run
    // carries the extra --out flag; everything else is identical.
    let mut from_file: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let mut from_stdout: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let embedded = from_file["command"].as_str().unwrap();
    assert!(embedded.contains("--out"), "{embedded}");
    from_file["command"] = serde_json::Value::Null;
    from_stdout["command"] = serde_json::Value::Null;
    assert_eq!(from_file, from_stdout);

    std::fs::remove_dir_all(&dir).unwrap();
}
