//! End-to-end runs of the `multitile` binary: exit codes, file outputs and
//! the pipeline from generation through census, occurrences and rendering.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multitile"))
}

fn scheme(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemes")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_passes_on_bundled_schemes() {
    for name in [
        "square.json",
        "triangles.json",
        "kakutani-1-3.json",
        "fixed-half.json",
    ] {
        let out = run(&["validate", scheme(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("volume identity: exact pass"));
    }
}

#[test]
fn validate_fails_with_exit_one() {
    let dir = std::env::temp_dir().join("multitile-cli-validate");
    std::fs::create_dir_all(&dir).unwrap();
    let broken = std::fs::read_to_string(scheme("square.json"))
        .unwrap()
        .replacen("{ \"type\": 1, \"scale\": \"1/5\", \"offset\": [\"0\", \"0\"] },", "", 1);
    let path = dir.join("broken.json");
    std::fs::write(&path, broken).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("deficit 1/25"));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_errors_exit_three() {
    let out = run(&[
        "--budget",
        "10",
        "generate",
        scheme("square.json").to_str().unwrap(),
        "--root",
        "1",
        "--time",
        "ln(100)",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn graph_reports_witnesses() {
    let out = run(&["graph", scheme("square.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("irreducible: true"));
    assert!(text.contains("incommensurable (witness:"));
    let out = run(&["graph", scheme("fixed-half.json").to_str().unwrap()]);
    assert!(stdout(&out).contains("commensurable (generator: ln 2)"));
}

#[test]
fn stats_prints_exact_and_decimal() {
    let out = run(&[
        "stats",
        scheme("triangles.json").to_str().unwrap(),
        "--type",
        "1",
        "--interval",
        "3/5",
        "4/5",
        "--precision",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("175/1152"), "{text}");
    assert!(text.contains("0.29597"), "{text}");
    assert!(text.contains("4375/57024"), "{text}");
}

#[test]
fn pipeline_generate_census_render_occurrences() {
    let dir = std::env::temp_dir().join("multitile-cli-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let patch = dir.join("patch.bin");
    let csv = dir.join("patch.csv");
    let json = dir.join("patch.json");
    let out = run(&[
        "generate",
        scheme("square.json").to_str().unwrap(),
        "--root",
        "1",
        "--time",
        "ln(5)",
        "--out",
        patch.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(patch.exists() && csv.exists() && json.exists());
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("type,scale_num,scale_den,offset_x,offset_y,depth"));

    let out = run(&[
        "census",
        patch.to_str().unwrap(),
        "--cell",
        "1:3/5:1",
        "--cell",
        "1:1/5:3/5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("census of"));

    let svg = dir.join("patch.svg");
    let out = run(&[
        "render",
        patch.to_str().unwrap(),
        "--style",
        "by-scale",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let out = run(&[
        "occurrences",
        patch.to_str().unwrap(),
        "--needle",
        patch.to_str().unwrap(),
        "--extract-box",
        "0",
        "0",
        "1",
        "1",
        "--dilation",
        "1/2",
        "1",
        "--region",
        "0",
        "0",
        "5",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("L = "));
}

#[test]
fn stationary_and_complexity_and_discrepancy() {
    let dir = std::env::temp_dir().join("multitile-cli-stationary");
    std::fs::create_dir_all(&dir).unwrap();
    let patch = dir.join("tower.bin");
    let out = run(&[
        "stationary",
        scheme("square.json").to_str().unwrap(),
        "--root",
        "1",
        "--max-period",
        "ln(5/3)",
        "--k",
        "3",
        "--out",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("control point (1/2, 1/2)"));

    let out = run(&[
        "complexity",
        scheme("square.json").to_str().unwrap(),
        "--period",
        "ln(5/3)",
        "--kmax",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("c(5) = 6"));

    let out = run(&[
        "discrepancy",
        scheme("square.json").to_str().unwrap(),
        "--times",
        "5/3,25/9,5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("distinct-tile ceiling"));

    // supertile overlay render on the tower patch
    let svg = dir.join("tower.svg");
    let out = run(&[
        "render",
        patch.to_str().unwrap(),
        "--style",
        "by-supertile",
        "--supertiles",
        "1",
        "--period",
        "ln(5/3)",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn oracle_matches_generate() {
    let out = run(&[
        "oracle",
        scheme("square.json").to_str().unwrap(),
        "--root",
        "1",
        "--time",
        "ln(5/3)",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "17");
}

#[test]
fn one_dimensional_render() {
    let dir = std::env::temp_dir().join("multitile-cli-1d");
    std::fs::create_dir_all(&dir).unwrap();
    let patch = dir.join("kak.bin");
    let out = run(&[
        "generate",
        scheme("kakutani-1-3.json").to_str().unwrap(),
        "--time",
        "ln(9/4)",
        "--out",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let svg = dir.join("kak.svg");
    let out = run(&[
        "render",
        patch.to_str().unwrap(),
        "--style",
        "by-scale",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<rect").count(), 3);
}

#[test]
fn manifest_is_emitted() {
    let dir = std::env::temp_dir().join("multitile-cli-manifest");
    std::fs::create_dir_all(&dir).unwrap();
    let manifest = dir.join("run.json");
    let out = run(&[
        "--manifest",
        manifest.to_str().unwrap(),
        "validate",
        scheme("square.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("manifest:"));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert!(value["scheme_hash"].as_str().unwrap().len() == 64);
    assert!(value["budget"].as_u64().unwrap() > 0);
}
