use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cablelife"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cablelife")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// 20-minute heating/cooling program on a 200-µm specimen.
const PROGRAM: &str = "t_s,U_V,T_inner_K,T_outer_K
0,6000,333.15,323.15
600,6000,333.15,323.15
1200,6000,303.15,303.15
";

const SPECIMEN: &str = r#"
[run]
model = "both"
nodes = 20
snapshot_interval_s = 60.0

[geometry]
kind = "planar"
r_inner_m = 0.0
r_outer_m = 200e-6
epsilon_r = 2.3

[klein]
sigma_ref = 10.0
activation_energy = 1.0
field_coeff = 3e-8

[program]
file = "program.csv"
"#;

const TINY_FIT: &str = r#"
[run]
seed = 3

[geometry]
kind = "planar"
r_inner_m = 0.0
r_outer_m = 200e-6
epsilon_r = 2.3

[fit]
starts = 2
free = ["w_tr_e", "b_e"]
bounds_rel = 0.1
nodes = 20

[fit.synthetic]
conditions = [[40.0, 50.0]]
thickness_m = 200e-6
horizon_s = 400.0
interval_s = 100.0
"#;

fn specimen_dir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "program.csv", PROGRAM);
    write(dir.path(), "run.toml", SPECIMEN);
    dir
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_writes_tables_and_manifest() {
    let dir = specimen_dir();
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        arg(&dir.path().join("run.toml")),
        "--out",
        arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "micro/field.csv",
        "micro/snapshots.csv",
        "micro/peaks.csv",
        "micro/ratio.csv",
        "macro/field.csv",
        "macro/peaks.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let field = fs::read_to_string(out.join("micro/field.csv")).unwrap();
    assert!(field.starts_with("t_s,node_index,r_m,E_V_per_m\n"));
    // 21 snapshots of 20 nodes plus the header
    assert_eq!(field.lines().count(), 21 * 20 + 1);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["nodes"], 20);
    assert_eq!(manifest["inputs"][0]["path"], "program.csv");
    assert!(manifest["parameters"]["bct"].as_str().unwrap().len() == 64);
    assert!(manifest["parameters"]["klein"].is_string());
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    assert!(listed.contains(&"micro/snapshots.csv"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = specimen_dir();
    let cfg = dir.path().join("run.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", arg(&cfg), "--out", arg(out), "--nodes", "12"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(files_under(&a), files_under(&b));
}

#[test]
fn fit_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fit.toml", TINY_FIT);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&[
            "fit",
            "--config",
            arg(&cfg),
            "--out",
            arg(out),
            "--starts",
            "1",
            "--seed",
            "7",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = files_under(&a);
    assert_eq!(files, files_under(&b));
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    for f in [
        "fit_report.md",
        "starts.csv",
        "progress.csv",
        "best_params.json",
        "fit.json",
        "measurements/m0.pea",
    ] {
        assert!(names.contains(&f), "missing {f}");
    }
    let report = fs::read_to_string(a.join("fit_report.md")).unwrap();
    assert!(report.contains("| fitted |"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn life_reports_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "life.toml",
        r#"
[run]
model = "macro"
nodes = 12
snapshot_interval_s = 1800.0

[klein]
sigma_ref = 10.0
activation_energy = 1.0
field_coeff = 3e-8

[life]
e_d = 30e6
test_voltage_v = 925e3
"#,
    );
    let out = dir.path().join("out");
    let o = run(&["life", "--config", arg(&cfg), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("withstands TT: "), "{stdout}");
    let table = fs::read_to_string(out.join("macro/life.csv")).unwrap();
    assert!(table.starts_with("node_index,r_m,thickness_fraction,LF_total,LF_24h,LF_48h,life_days\n"));
    assert!(out.join("macro/field_24h.csv").is_file());
    assert!(out.join("macro/field_48h.csv").is_file());
}

#[test]
fn compare_emits_checklist() {
    let dir = specimen_dir();
    let out = dir.path().join("out");
    let o = run(&[
        "compare",
        "--config",
        arg(&dir.path().join("run.toml")),
        "--out",
        arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = fs::read_to_string(out.join("checklist.md")).unwrap();
    for item in [
        "field inversion when hot",
        "response to cooling",
        "hot peak position",
        "cold peak position",
    ] {
        assert!(md.contains(item), "missing {item}");
    }
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        run(&["simulate", "--config", arg(&missing), "--out", arg(&out)])
            .status
            .code(),
        Some(2)
    );

    let unknown = write(dir.path(), "unknown.toml", "[run]\nnodez = 5\n");
    assert_eq!(
        run(&["simulate", "--config", arg(&unknown), "--out", arg(&out)])
            .status
            .code(),
        Some(2)
    );

    let no_file = write(dir.path(), "nofile.toml", "[program]\nfile = \"absent.csv\"\n");
    let o = run(&["simulate", "--config", arg(&no_file), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));

    let macro_without_klein = write(dir.path(), "macro.toml", "[run]\nmodel = \"macro\"\n");
    assert_eq!(
        run(&["simulate", "--config", arg(&macro_without_klein), "--out", arg(&out)])
            .status
            .code(),
        Some(2)
    );

    let no_measurements = write(dir.path(), "fit.toml", "[fit]\nstarts = 1\n");
    assert_eq!(
        run(&["fit", "--config", arg(&no_measurements), "--out", arg(&out)])
            .status
            .code(),
        Some(2)
    );

    let no_design_field = write(dir.path(), "life.toml", "[life]\ntest_voltage_v = 925e3\n");
    assert_eq!(
        run(&["life", "--config", arg(&no_design_field), "--out", arg(&out)])
            .status
            .code(),
        Some(2)
    );

    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate", "--config", "x"]).status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = specimen_dir();
    // a step budget this small is exhausted immediately
    let cfg = write(
        dir.path(),
        "tiny_steps.toml",
        &SPECIMEN.replace("model = \"both\"", "model = \"micro\"\nmax_steps = 3"),
    );
    let o = run(&["simulate", "--config", arg(&cfg), "--out", arg(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
