//! End-to-end tests of the `dockette` binary: exit codes, output formats,
//! and byte-level reproducibility of repeated invocations.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn tmp_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

/// The binary under test, with the thread-cap variable held fixed so results
/// do not depend on the invoking shell.
fn dockette() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dockette"));
    cmd.env_remove("DOCKETTE_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary launches")
}

fn stdout_text(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

/// Dock invocation on the bundled small input; callers append the remaining
/// flags.
fn dock_small(extra: &[&str]) -> Command {
    let mut cmd = dockette();
    cmd.args([
        "dock",
        "--ligand",
        data_path("small.lig").to_str().unwrap(),
        "--grid",
        data_path("receptor.grd").to_str().unwrap(),
    ]);
    cmd.args(extra);
    cmd
}

/// A short deterministic dock invocation: one run, generation zero only.
fn short_dock(extra: &[&str]) -> Command {
    let mut cmd = dock_small(&[
        "--nruns",
        "1",
        "--max-generations",
        "0",
        "--seed",
        "7",
        "--team-size",
        "2",
        "--pop-size",
        "20",
    ]);
    cmd.args(extra);
    cmd
}

#[test]
fn degenerate_dock_prints_a_deterministic_energy() {
    let first = run(&mut short_dock(&[]));
    assert!(first.status.success(), "dock failed: {}", stderr_text(&first));
    let line = stdout_text(&first);
    let energy: f64 = line.trim().parse().expect("stdout is a bare energy value");
    assert!(energy.is_finite(), "energy should be finite, got {energy}");

    let second = run(&mut short_dock(&[]));
    assert_eq!(first.stdout, second.stdout, "repeat invocation must print identical bytes");
}

#[test]
fn dock_out_files_are_byte_identical_across_reruns() {
    let out_a = tmp_path("dock_rerun_a.json");
    let out_b = tmp_path("dock_rerun_b.json");
    let first = run(&mut short_dock(&["--out", out_a.to_str().unwrap()]));
    assert!(first.status.success(), "first dock failed: {}", stderr_text(&first));
    let second = run(&mut short_dock(&["--out", out_b.to_str().unwrap()]));
    assert!(second.status.success(), "second dock failed: {}", stderr_text(&second));

    let bytes_a = std::fs::read(&out_a).expect("first output file exists");
    let bytes_b = std::fs::read(&out_b).expect("second output file exists");
    assert_eq!(bytes_a, bytes_b, "result files must be byte-identical");

    let result = dockette::model::parse_result_json(&String::from_utf8(bytes_a).unwrap())
        .expect("output file is valid JSON");
    assert!(result.timings.is_empty(), "stored results must not carry timings");
    assert_eq!(result.per_run.len(), 1, "one run was requested");
    assert_eq!(result.per_run[0].total_evaluations, 20, "generation zero evaluates the population once");
}

#[test]
fn dock_csv_output_is_the_per_run_table() {
    let out = tmp_path("dock_table.csv");
    let output = run(&mut dock_small(&[
        "--nruns",
        "3",
        "--max-generations",
        "0",
        "--seed",
        "7",
        "--team-size",
        "2",
        "--pop-size",
        "20",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(output.status.success(), "dock failed: {}", stderr_text(&output));
    let text = std::fs::read_to_string(&out).expect("output file exists");
    let rows = dockette::model::parse_per_run_csv(&text).expect("CSV parses");
    assert_eq!(rows.len(), 3, "one row per run");
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.run_index, i as u32, "rows are in run order");
        assert_eq!(row.total_evaluations, 20, "each run evaluated its population once");
    }
}

#[test]
fn missing_ligand_exits_one_and_names_the_file() {
    let mut cmd = dockette();
    cmd.args([
        "dock",
        "--ligand",
        "/nonexistent/missing.lig",
        "--grid",
        data_path("receptor.grd").to_str().unwrap(),
    ]);
    let output = run(&mut cmd);
    assert_eq!(output.status.code(), Some(1), "missing input is an input error");
    assert!(
        stderr_text(&output).contains("/nonexistent/missing.lig"),
        "message must name the file: {}",
        stderr_text(&output)
    );
}

#[test]
fn malformed_ligand_reports_the_offending_line() {
    let path = tmp_path("bad_atom_type.lig");
    std::fs::write(
        &path,
        "NATOMS 2\nATOM 0 C 0.1 0 0 0\nATOM 1 ZZ 0.1 1 0 0\nNTORS 0\nNPAIRS 0\n",
    )
    .expect("write test file");
    let mut cmd = dockette();
    cmd.args([
        "validate",
        "--ligand",
        path.to_str().unwrap(),
    ]);
    let output = run(&mut cmd);
    assert_eq!(output.status.code(), Some(1), "malformed input is an input error");
    let message = stderr_text(&output);
    assert!(message.contains("line 3"), "message must carry the line number: {message}");
    assert!(message.contains("ZZ"), "message must name the bad token: {message}");
}

#[test]
fn validate_reports_ligand_and_grid_shape() {
    let mut cmd = dockette();
    cmd.args([
        "validate",
        "--ligand",
        data_path("medium.lig").to_str().unwrap(),
        "--grid",
        data_path("receptor.grd").to_str().unwrap(),
    ]);
    let output = run(&mut cmd);
    assert!(output.status.success(), "validate failed: {}", stderr_text(&output));
    let text = stdout_text(&output);
    assert!(text.contains("atoms=43 torsions=15"), "ligand shape line missing: {text}");
    assert!(text.contains("grid=25x25x25"), "grid shape line missing: {text}");
}

#[test]
fn truncated_grid_fails_with_value_count_mismatch() {
    let full = std::fs::read_to_string(data_path("receptor.grd")).expect("read bundled grid");
    let truncated: String =
        full.lines().take(1000).map(|l| format!("{l}\n")).collect();
    let path = tmp_path("truncated.grd");
    std::fs::write(&path, truncated).expect("write test file");

    let mut cmd = dockette();
    cmd.args(["validate", "--grid", path.to_str().unwrap()]);
    let output = run(&mut cmd);
    assert_eq!(output.status.code(), Some(1), "truncated grid is an input error");
    assert!(
        stderr_text(&output).contains("value count mismatch"),
        "unexpected message: {}",
        stderr_text(&output)
    );
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let output = run(dockette().arg(flag));
        assert_eq!(output.status.code(), Some(0), "{flag} should succeed");
        assert!(!output.stdout.is_empty(), "{flag} should print to standard output");
    }
}

#[test]
fn unknown_flags_and_bad_values_exit_one() {
    let output = run(dockette().args(["dock", "--bogus"]));
    assert_eq!(output.status.code(), Some(1), "unknown flag is an input error");

    let output = run(&mut dock_small(&["--max-generations", "0", "--team-size", "0"]));
    assert_eq!(output.status.code(), Some(1), "zero team size is an input error");
    assert!(
        stderr_text(&output).contains("team_size"),
        "message should name the setting: {}",
        stderr_text(&output)
    );
}

#[test]
fn thread_cap_controls_scheduling_but_never_results() {
    let baseline = run(&mut short_dock(&[]));
    assert!(baseline.status.success());

    let capped = run(short_dock(&[]).env("DOCKETTE_THREADS", "8"));
    assert!(capped.status.success(), "capped run failed: {}", stderr_text(&capped));
    assert_eq!(baseline.stdout, capped.stdout, "thread cap must not change results");

    let invalid = run(short_dock(&[]).env("DOCKETTE_THREADS", "lots"));
    assert_eq!(invalid.status.code(), Some(1), "unparseable cap is an input error");
    assert!(
        stderr_text(&invalid).contains("DOCKETTE_THREADS"),
        "message should name the variable: {}",
        stderr_text(&invalid)
    );
}

#[test]
fn small_bench_sweep_emits_parseable_deterministic_rows() {
    let mut cmd = dockette();
    cmd.args([
        "bench",
        "--input",
        &format!(
            "small={}:{}",
            data_path("small.lig").display(),
            data_path("receptor.grd").display()
        ),
        "--strategies",
        "workshare",
        "--team-sizes",
        "2",
        "--nruns-values",
        "1",
        "--repeats",
        "2",
        "--seed",
        "9",
        "--bench-max-evals",
        "200",
    ]);
    let output = run(&mut cmd);
    assert!(output.status.success(), "bench failed: {}", stderr_text(&output));
    let text = stdout_text(&output);
    let rows = dockette_cli::bench::parse_rows(&text).expect("bench CSV parses");
    assert_eq!(rows.len(), 2, "one row per repeat");
    assert_eq!(
        rows[0].best_energy.to_bits(),
        rows[1].best_energy.to_bits(),
        "fixed-seed repeats must agree on best energy"
    );
    for row in &rows {
        assert!(row.wall_s > 0.0, "wall time must be positive");
        let kernel_sum = row.pose_score_s + row.ga_s + row.ls_s + row.reduce_s;
        assert!(
            kernel_sum <= row.wall_s * 1.05,
            "kernel times ({kernel_sum}) cannot exceed the wall interval ({})",
            row.wall_s
        );
    }
}

#[test]
fn bench_rejects_unknown_labels() {
    let mut cmd = dockette();
    cmd.args(["bench", "--input", "huge=a.lig:b.grd"]);
    let output = run(&mut cmd);
    assert_eq!(output.status.code(), Some(1), "unknown label is an input error");
    assert!(
        stderr_text(&output).contains("label"),
        "message should mention the label: {}",
        stderr_text(&output)
    );
}
