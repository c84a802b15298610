//! End-to-end tests of the command-line surface against the bundled
//! fixtures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inferwatt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(output)).expect("structured output parses as JSON")
}

fn temp_file(content: &str, suffix: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::Builder::new()
        .suffix(suffix)
        .tempfile()
        .unwrap();
    file.write_all(content.as_bytes()).unwrap();
    file.flush().unwrap();
    file
}

const LOG_HEADER: &str =
    "provider,model,benchmark,compression_ratio,input_tokens,output_tokens,passed,cost_usd,run_index\n";

#[test]
fn estimate_zero_tokens_is_zero_joules() {
    let output = run(&[
        "estimate",
        "--in",
        "0",
        "--out",
        "0",
        "--params-b",
        "7",
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    assert_eq!(report["total_j"].as_f64().unwrap(), 0.0);
}

#[test]
fn estimate_matches_worked_example() {
    let output = run(&[
        "estimate",
        "--in",
        "100",
        "--out",
        "20",
        "--params-b",
        "7",
        "--pue",
        "1.2",
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    let total = report["total_j"].as_f64().unwrap();
    assert!(
        (total - 85.72234247849273).abs() <= 1e-9 * 85.72,
        "total = {total}"
    );
    assert_eq!(report["formula"], "simplified");
    // Provenance documents that default magnitudes are placeholders.
    let notes = report["provenance"]["notes"].as_array().unwrap();
    assert!(notes
        .iter()
        .any(|n| n.as_str().unwrap().contains("uncalibrated")));
}

#[test]
fn estimate_unknown_model_exits_4_with_name() {
    let output = run(&["estimate", "--in", "10", "--out", "10", "--model", "mystery-9b"]);
    assert_eq!(output.status.code(), Some(4));
    assert!(stderr(&output).contains("mystery-9b"));
}

#[test]
fn estimate_without_model_or_params_is_a_parameter_error() {
    let output = run(&["estimate", "--in", "10", "--out", "10"]);
    assert_eq!(output.status.code(), Some(5));
    assert!(stderr(&output).contains("--params-b"));
}

#[test]
fn estimate_full_formula_and_provider_adjustment() {
    let config = temp_file(
        r#"
        [calibration]
        alpha = 0.01

        [[model]]
        name = "test-7b"
        params_b = 7.0
        provider = "openai"
        "#,
        ".toml",
    );
    let output = run(&[
        "--config",
        config.path().to_str().unwrap(),
        "estimate",
        "--in",
        "100",
        "--out",
        "10",
        "--model",
        "test-7b",
        "--formula",
        "full",
        "--pue",
        "1.0",
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    // alpha=0.01, delta=0.04, N=N_ref, f=1, pue=1 -> 1.4 J at factor 1.00.
    let total = report["total_j"].as_f64().unwrap();
    assert!((total - 1.4).abs() <= 1e-9, "total = {total}");
    assert_eq!(report["formula"], "full_proxy");
    assert_eq!(report["provider"], "openai");
    assert_eq!(report["efficiency_factor"].as_f64().unwrap(), 1.0);
}

#[test]
fn estimate_trace_integrates_csv() {
    let trace = temp_file("timestamp_s,power_w\n0.0,300\n2.0,300\n", ".csv");
    let output = run(&[
        "estimate",
        "--formula",
        "trace",
        "--trace",
        trace.path().to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    assert_eq!(report["total_j"].as_f64().unwrap(), 600.0);
    assert_eq!(report["formula"], "measured_trace");
    assert!(report["prefill_j"].is_null());
}

#[test]
fn estimate_trace_with_short_trace_exits_5() {
    let trace = temp_file("timestamp_s,power_w\n0.0,300\n", ".csv");
    let output = run(&[
        "estimate",
        "--formula",
        "trace",
        "--trace",
        trace.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(5));
}

#[test]
fn roi_matches_worked_example() {
    let output = run(&[
        "roi",
        "--ratio",
        "0.5",
        "--target-params-b",
        "70",
        "--original-tokens",
        "1000",
        "--pue",
        "1.0",
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    let roi = report["energy_roi"].as_f64().unwrap();
    assert!((roi - 7.0710678118654755).abs() <= 1e-9 * roi);
    let break_even = report["break_even_queries"].as_f64().unwrap();
    assert!((break_even - 0.1414213562373095).abs() <= 1e-9);
    let compression = report["compression_energy_j"].as_f64().unwrap();
    assert!((compression - 88.74119674649424).abs() <= 1e-6);
    let saved = report["energy_saved_j"].as_f64().unwrap();
    assert!((saved - 627.4950199005567).abs() <= 1e-6);
    let notes = report["provenance"]["notes"].as_array().unwrap();
    assert!(notes
        .iter()
        .any(|n| n.as_str().unwrap().contains("intentionally not used")));
}

#[test]
fn carbon_converts_with_explicit_intensity() {
    let output = run(&[
        "carbon",
        "--joules",
        "3600000",
        "--intensity",
        "500",
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    assert_eq!(report["energy_kwh"].as_f64().unwrap(), 1.0);
    assert_eq!(report["co2_g"].as_f64().unwrap(), 500.0);
}

#[test]
fn carbon_requires_an_intensity_source() {
    let output = run(&["carbon", "--joules", "100"]);
    assert_eq!(output.status.code(), Some(5));
    assert!(stderr(&output).contains("no default"));
}

#[test]
fn carbon_region_lookup_uses_table() {
    let intensities = temp_file("[carbon_intensity]\nquebec = 30.0\n", ".toml");
    let output = run(&[
        "--intensities",
        intensities.path().to_str().unwrap(),
        "carbon",
        "--joules",
        "7200000",
        "--region",
        "quebec",
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    assert_eq!(report["co2_g"].as_f64().unwrap(), 60.0);

    let missing = run(&[
        "--intensities",
        intensities.path().to_str().unwrap(),
        "carbon",
        "--joules",
        "1",
        "--region",
        "atlantis",
    ]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(stderr(&missing).contains("atlantis"));
}

#[test]
fn ingest_accepts_bundled_snapshot() {
    let output = run(&[
        "ingest",
        "--log",
        fixture("matched_snapshot.csv").to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    assert_eq!(report["accepted"].as_u64().unwrap(), 621);
    assert_eq!(report["rejected"].as_u64().unwrap(), 0);
}

#[test]
fn ingest_gates_on_rejected_rows_unless_allowed() {
    let log = format!(
        "{LOG_HEADER}openai,gpt,humaneval,1.0,100,20,true,0.0001,0\nopenai,gpt,humaneval,1.5,100,20,true,0.0001,1\n"
    );
    let file = temp_file(&log, ".csv");
    let gated = run(&["ingest", "--log", file.path().to_str().unwrap()]);
    assert_eq!(gated.status.code(), Some(6));
    assert!(stdout(&gated).contains("compression_ratio"));

    let allowed = run(&[
        "--allow-rejects",
        "ingest",
        "--log",
        file.path().to_str().unwrap(),
    ]);
    assert!(allowed.status.success());
}

#[test]
fn ingest_missing_column_is_a_schema_error() {
    let file = temp_file("provider,model\nopenai,gpt\n", ".csv");
    let output = run(&["ingest", "--log", file.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn gas_reproduces_published_scores_from_fixture() {
    let output = run(&[
        "gas",
        "--log",
        fixture("matched_snapshot.csv").to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let table = stdout(&output);
    let gpt_line = table.lines().find(|l| l.contains("gpt-4o-mini")).unwrap();
    assert_eq!(
        gpt_line.split_whitespace().collect::<Vec<_>>()[1..4],
        ["100.0", "100.0", "100.0"]
    );
    let ds_line = table.lines().find(|l| l.contains("deepseek-chat")).unwrap();
    let fields: Vec<&str> = ds_line.split_whitespace().collect();
    assert_eq!(fields[1], "5.8");
    assert_eq!(fields[2], "5.7");
}

#[test]
fn deltas_reproduce_published_magnitudes() {
    let output = run(&[
        "deltas",
        "--log",
        fixture("ratio_study.csv").to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    let rows = report["rows"].as_array().unwrap();
    let delta = |model: &str, ratio: f64| {
        rows.iter()
            .find(|r| r["model"] == model && r["compression_ratio"].as_f64() == Some(ratio))
            .unwrap()["delta_energy_pct"]
            .as_f64()
            .unwrap()
    };
    assert!((delta("deepseek-chat", 0.3) - 2140.0).abs() <= 1.0);
    assert!((delta("deepseek-chat", 0.7) - 257.0).abs() <= 1.0);
    assert!((delta("gpt-4o-mini", 0.5) - (-26.0)).abs() <= 1.0);
    assert_eq!(delta("gpt-4o-mini", 1.0), 0.0);
    assert_eq!(delta("deepseek-chat", 1.0), 0.0);
}

#[test]
fn deltas_without_baseline_exit_4_naming_model() {
    let log = format!("{LOG_HEADER}openai,gpt,humaneval,0.5,100,20,true,0.0001,0\n");
    let file = temp_file(&log, ".csv");
    let output = run(&["deltas", "--log", file.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(4));
    assert!(stderr(&output).contains("gpt"));
}

#[test]
fn pareto_keeps_only_undominated_configs() {
    let output = run(&[
        "pareto",
        "--log",
        fixture("ratio_study.csv").to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    let frontier: Vec<(String, f64)> = report["frontier"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["model"].as_str().unwrap().to_string(),
                p["compression_ratio"].as_f64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        frontier,
        vec![
            ("gpt-4o-mini".to_string(), 0.5),
            ("gpt-4o-mini".to_string(), 1.0)
        ]
    );
    assert_eq!(report["candidates"].as_u64().unwrap(), 8);
    assert_eq!(report["dominated"].as_u64().unwrap(), 6);
}

#[test]
fn optimize_corner_weights_pick_corner_optima() {
    let log = fixture("two_candidates.csv");
    let cases = [
        ("1,0,0", "cheap-a"),
        ("0,1,0", "frugal-b"),
        ("0,0,1", "frugal-b"),
    ];
    for (weights, expected) in cases {
        let output = run(&[
            "optimize",
            "--log",
            log.to_str().unwrap(),
            "--weights",
            weights,
            "--format",
            "structured",
        ]);
        assert!(output.status.success(), "{}", stderr(&output));
        let report = json(&output);
        assert_eq!(report["chosen"]["model"], expected, "weights {weights}");
    }
}

#[test]
fn optimize_sweep_emits_simplex_grid() {
    let output = run(&[
        "optimize",
        "--log",
        fixture("two_candidates.csv").to_str().unwrap(),
        "--sweep",
        "3",
        "--format",
        "structured",
    ]);
    assert!(output.status.success());
    let report = json(&output);
    assert_eq!(report["sweep"].as_array().unwrap().len(), 6);
}

#[test]
fn optimize_reads_candidates_from_aggregate_report() {
    let dir = tempfile::tempdir().unwrap();
    let agg_path = dir.path().join("agg.json");
    let aggregate = run(&[
        "aggregate",
        "--log",
        fixture("ratio_study.csv").to_str().unwrap(),
        "--format",
        "structured",
        "--output",
        agg_path.to_str().unwrap(),
    ]);
    assert!(aggregate.status.success());

    let output = run(&[
        "optimize",
        "--candidates",
        agg_path.to_str().unwrap(),
        "--weights",
        "0,1,0",
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    assert_eq!(report["chosen"]["model"], "gpt-4o-mini");
    assert_eq!(report["chosen"]["compression_ratio"].as_f64(), Some(0.5));
}

#[test]
fn aggregate_computes_energy_when_missing_and_config_supplies_models() {
    let config = temp_file(
        r#"
        [[model]]
        name = "gpt"
        params_b = 8.0
        "#,
        ".toml",
    );
    let log = format!("{LOG_HEADER}openai,gpt,humaneval,1.0,100,20,true,0.0001,0\n");
    let file = temp_file(&log, ".csv");
    let output = run(&[
        "--config",
        config.path().to_str().unwrap(),
        "aggregate",
        "--log",
        file.path().to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    let row = &report["rows"][0];
    assert_eq!(row["energy_source"], "computed");
    // 0.15 * (100 + 80) * sqrt(8) * 1.2 (bundled openai PUE) * 1.0 factor.
    let expected = 0.15 * 180.0 * 8.0f64.sqrt() * 1.2;
    let mean = row["mean_energy_j"].as_f64().unwrap();
    assert!((mean - expected).abs() <= 1e-9 * expected, "mean = {mean}");

    // Without the model in config the lookup is an explicit error.
    let bare = run(&["aggregate", "--log", file.path().to_str().unwrap()]);
    assert_eq!(bare.status.code(), Some(4));
    assert!(stderr(&bare).contains("gpt"));
}

#[test]
fn empty_log_emits_empty_reports_and_exits_6() {
    let file = temp_file(LOG_HEADER, ".csv");
    let path = file.path().to_str().unwrap();

    for subcommand in ["aggregate", "deltas", "gas", "pareto", "optimize", "drift"] {
        let output = run(&[subcommand, "--log", path, "--format", "structured"]);
        assert_eq!(
            output.status.code(),
            Some(6),
            "{subcommand} on empty log: {}",
            stderr(&output)
        );
        // Still a schema-valid structured report.
        let report = json(&output);
        assert!(report.is_object(), "{subcommand} emitted {report}");
    }

    // Plain ingest of an empty-but-valid log is fine.
    let ingest = run(&["ingest", "--log", path]);
    assert!(ingest.status.success());
}

#[test]
fn drift_is_deterministic_for_a_seed() {
    let log = fixture("matched_snapshot.csv");
    let args = [
        "drift",
        "--log",
        log.to_str().unwrap(),
        "--permutations",
        "500",
        "--format",
        "structured",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second));

    let other_seed = run(&[
        "--seed",
        "7",
        "drift",
        "--log",
        log.to_str().unwrap(),
        "--permutations",
        "500",
        "--format",
        "structured",
    ]);
    let report = json(&other_seed);
    assert_eq!(report["seed"].as_u64().unwrap(), 7);
}

#[test]
fn missing_log_error_names_the_path() {
    let output = run(&["ingest", "--log", "/nonexistent/trials.csv"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("/nonexistent/trials.csv"));
}

#[test]
fn bad_config_is_a_schema_error() {
    let config = temp_file("[mystery]\nx = 1\n", ".toml");
    let output = run(&[
        "--config",
        config.path().to_str().unwrap(),
        "estimate",
        "--in",
        "1",
        "--out",
        "1",
        "--params-b",
        "7",
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn structured_reports_are_byte_identical_across_runs() {
    let log = fixture("matched_snapshot.csv");
    let args = [
        "gas",
        "--log",
        log.to_str().unwrap(),
        "--format",
        "structured",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn json_log_equivalent_is_accepted() {
    let json_log = r#"[
        {"provider":"openai","model":"gpt","benchmark":"h","compression_ratio":1.0,
         "input_tokens":10,"output_tokens":5,"passed":true,"cost_usd":0.1,
         "run_index":0,"energy_j":2.0},
        {"provider":"openai","model":"gpt","benchmark":"h","compression_ratio":1.0,
         "input_tokens":10,"output_tokens":5,"passed":false,"cost_usd":0.1,
         "run_index":1,"energy_j":4.0}
    ]"#;
    let file = temp_file(json_log, ".json");
    let output = run(&[
        "aggregate",
        "--log",
        file.path().to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = json(&output);
    let row = &report["rows"][0];
    assert_eq!(row["n"].as_u64().unwrap(), 2);
    assert_eq!(row["mean_energy_j"].as_f64().unwrap(), 3.0);
    assert_eq!(row["pass_rate"].as_f64().unwrap(), 0.5);
}
