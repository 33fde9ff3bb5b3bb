//! End-to-end checks of the command-line surface: synthetic sample
//! generation, the pipeline bundle, determinism for a fixed seed, method
//! toggles, and exit codes.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn effbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const BASE_CONFIG: &str = r#"
[input]
panel = "panel.csv"
covariates = "covariates.csv"
price_index = "prices.csv"

[schema]
outputs = ["ATM", "SIZE", "NAR"]
inputs = ["EMP", "RUNW", "TERM"]
deflate = ["NAR", "EMP"]
base_year = 2011

[schema.derive_size]
name = "SIZE"
volume = "PAX"
movements = "ATM"

[frontier]
normalizing_output = "ATM"

[methods]
sfa = true
dea = true
tobit = true
simar_wilson = true

[sfa]
starts = 2

[second_stage]
covariates = [
    { name = "ISLE", role = "dummy" },
    { name = "HUB", role = "dummy" },
    { name = "TOUR", role = "dummy" },
    { name = "CONG", role = "count" },
    { name = "LCC", role = "dummy" },
    { name = "SUB", role = "continuous" },
    { name = "EBITDA", role = "continuous" },
    { name = "HSR", role = "dummy" },
    { name = "HH", role = "continuous", range = [0.0, 10000.0] },
]

[bootstrap]
algorithm = 2
l1 = 5
l2 = 25

[run]
seed = 42
"#;

fn generate_sample(dir: &Path) {
    let out = effbench(
        &["synth", "--preset", "aena", "--seed", "42", "--out", "."],
        dir,
    );
    assert!(
        out.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in ["panel.csv", "covariates.csv", "prices.csv", "truth.csv"] {
        assert!(dir.join(file).exists(), "missing {file}");
    }
}

#[test]
fn synth_sample_has_panel_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    let panel = std::fs::read_to_string(dir.path().join("panel.csv")).unwrap();
    let rows: Vec<&str> = panel.lines().collect();
    assert_eq!(rows.len(), 1 + 152, "38 DMUs x 4 years plus the header");
    let dmus: std::collections::BTreeSet<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(dmus.len(), 38);
}

#[test]
fn describe_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    write_config(dir.path(), BASE_CONFIG);
    let out = effbench(&["describe", "--config", "config.toml"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ATM"));
    assert!(text.contains("Pearson correlation"));
}

#[test]
fn pipeline_bundle_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    write_config(dir.path(), BASE_CONFIG);

    for out_dir in ["run_a", "run_b"] {
        let out = effbench(
            &["pipeline", "--config", "config.toml", "--out", out_dir],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "pipeline failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    // Same seed and config twice ⇒ byte-identical bundles.
    let mut checked = 0;
    let mut contents: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir.path().join("run_a")).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        contents.insert(name, std::fs::read(entry.path()).unwrap());
    }
    for (name, bytes_a) in &contents {
        let bytes_b = std::fs::read(dir.path().join("run_b").join(name)).unwrap();
        assert_eq!(&bytes_b, bytes_a, "{name} differs between identical runs");
        checked += 1;
    }
    assert!(checked >= 15, "expected a full bundle, saw {checked} files");

    // The bundle carries every method's artifacts.
    for file in [
        "sfa_te.csv",
        "sfa_coefficients.csv",
        "dea_scores.csv",
        "dea_details.csv",
        "second_stage.csv",
        "simar_wilson_ci.csv",
        "method_correlation.csv",
        "summary.json",
    ] {
        assert!(
            dir.path().join("run_a").join(file).exists(),
            "missing {file}"
        );
    }

    // Table-8-style rows in the printed order.
    let second = std::fs::read_to_string(dir.path().join("run_a/second_stage.csv")).unwrap();
    let names: Vec<&str> = second
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names,
        vec![
            "Constant", "ISLE", "HUB", "TOUR", "CONG", "LCC", "SUB", "EBITDA", "HSR", "HH", "T11",
            "T12", "T13"
        ]
    );
}

#[test]
fn sfa_only_config_emits_no_dea_files() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    let config = BASE_CONFIG
        .replace("dea = true", "dea = false")
        .replace("tobit = true", "tobit = false")
        .replace("simar_wilson = true", "simar_wilson = false");
    write_config(dir.path(), &config);
    let out = effbench(
        &["pipeline", "--config", "config.toml", "--out", "solo"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("solo/sfa_te.csv").exists());
    assert!(!dir.path().join("solo/dea_scores.csv").exists());
    assert!(!dir.path().join("solo/second_stage.csv").exists());
    assert!(!dir.path().join("solo/method_correlation.csv").exists());
}

#[test]
fn dea_subcommand_runs_alone() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    write_config(dir.path(), BASE_CONFIG);
    let out = effbench(
        &["dea", "--config", "config.toml", "--out", "dea_only"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("dea_only/dea_scores.csv").exists());
    assert!(!dir.path().join("dea_only/sfa_te.csv").exists());

    // The wide table ends with the Average footer row.
    let wide = std::fs::read_to_string(dir.path().join("dea_only/dea_scores.csv")).unwrap();
    assert!(wide.lines().last().unwrap().starts_with("Average,"));
    assert!(wide.lines().next().unwrap().ends_with("Mean,%Var"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Missing config file.
    let out = effbench(&["pipeline", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Config referencing a missing panel.
    write_config(dir.path(), BASE_CONFIG);
    let out = effbench(&["pipeline", "--config", "config.toml"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Unknown synth preset.
    let out = effbench(&["synth", "--preset", "weird", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_required_for_bootstrap() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    let config = BASE_CONFIG.replace("seed = 42", "");
    write_config(dir.path(), &config);
    let out = effbench(&["pipeline", "--config", "config.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn decimal_comma_flag_parses_comma_panels() {
    let dir = tempfile::tempdir().unwrap();
    // Tiny two-output panel with comma decimals, quoted so the field
    // delimiter stays the comma.
    std::fs::write(
        dir.path().join("panel.csv"),
        "dmu,year,y1,y2,x1\nA,2011,\"1,5\",\"2,5\",\"3,0\"\nA,2012,\"1,6\",\"2,4\",\"3,1\"\n\
         B,2011,\"2,5\",\"3,5\",\"4,0\"\nB,2012,\"2,6\",\"3,4\",\"4,1\"\n",
    )
    .unwrap();
    write_config(
        dir.path(),
        r#"
[input]
panel = "panel.csv"

[schema]
outputs = ["y1", "y2"]
inputs = ["x1"]

[frontier]
normalizing_output = "y1"

[methods]
dea = true
"#,
    );
    let strict = effbench(
        &["dea", "--config", "config.toml", "--out", "o1"],
        dir.path(),
    );
    assert_eq!(
        strict.status.code(),
        Some(2),
        "comma decimals must fail without the flag"
    );
    let relaxed = effbench(
        &[
            "dea",
            "--config",
            "config.toml",
            "--decimal-comma",
            "--out",
            "o2",
        ],
        dir.path(),
    );
    assert!(
        relaxed.status.success(),
        "{}",
        String::from_utf8_lossy(&relaxed.stderr)
    );
}

#[test]
fn sfa_and_second_stage_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    generate_sample(dir.path());
    write_config(dir.path(), BASE_CONFIG);

    let out = effbench(
        &["sfa", "--config", "config.toml", "--out", "sfa_only"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("sfa_only/sfa_coefficients.csv").exists());
    assert!(!dir.path().join("sfa_only/dea_scores.csv").exists());
    let coefs = std::fs::read_to_string(dir.path().join("sfa_only/sfa_coefficients.csv")).unwrap();
    assert!(coefs.contains("Log-likelihood,"));
    assert!(
        coefs.lines().count() > 21,
        "all translog rows plus the footer"
    );

    let out = effbench(
        &["second-stage", "--config", "config.toml", "--out", "stage2"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("stage2/second_stage.csv").exists());
    assert!(dir.path().join("stage2/simar_wilson_ci.csv").exists());
}

#[test]
fn synth_presets_write_truth_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, truth_col) in [("sfa", "true_te"), ("dea", "true_theta")] {
        let out = effbench(
            &[
                "synth", "--preset", preset, "--n", "10", "--t", "3", "--seed", "5", "--out",
                preset,
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let truth = std::fs::read_to_string(dir.path().join(preset).join("truth.csv")).unwrap();
        assert!(truth.starts_with(&format!("dmu,year,{truth_col}")));
        assert_eq!(truth.lines().count(), 1 + 30);
        if preset == "sfa" {
            let params =
                std::fs::read_to_string(dir.path().join(preset).join("true_params.csv")).unwrap();
            assert!(params.contains("sigma_u"));
            assert!(params.contains("Constant"));
        }
    }
}

/// The committed bundled sample must match what `synth --preset aena
/// --seed 42` produces, so retuning the generator forces a data refresh.
#[test]
fn bundled_data_matches_generator() {
    let repo_data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    if !repo_data.join("panel.csv").exists() {
        panic!("bundled data directory is missing");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = effbench(
        &["synth", "--preset", "aena", "--seed", "42", "--out", "."],
        dir.path(),
    );
    assert!(out.status.success());
    for file in [
        "panel.csv",
        "covariates.csv",
        "prices.csv",
        "truth.csv",
        "true_delta.csv",
    ] {
        let fresh = std::fs::read(dir.path().join(file)).unwrap();
        let committed = std::fs::read(repo_data.join(file)).unwrap();
        assert_eq!(
            fresh, committed,
            "data/{file} is stale; regenerate with the synth preset"
        );
    }
}
