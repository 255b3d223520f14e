use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_defect-spectro");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("DEFECT_SPECTRO_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_tmp(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn no_arguments_prints_usage_and_exits_two() {
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_usage_error() {
    let o = run(&["thermo"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("-i"));
}

#[test]
fn thermo_writes_tables_svg_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let f = fixture("pav2_prv2.json");
    let o = run(&["-i", f.to_str().unwrap(), "-o", out.path().to_str().unwrap(), "thermo"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["formation_lines.csv", "transition_levels.csv", "stability.csv", "formation_PaV2.svg", "manifest.json"] {
        assert!(out.path().join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "thermo");
    let lines = fs::read_to_string(out.path().join("formation_lines.csv")).unwrap();
    assert!(lines.starts_with("label,q,intercept_eV,slope"));
    assert_eq!(lines.lines().count(), 11);
}

#[test]
fn without_outdir_tables_go_to_stdout() {
    let f = fixture("two_lines.json");
    let o = run(&["-i", f.to_str().unwrap(), "thermo"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("# formation_lines.csv"));
    assert!(s.contains("# transition_levels.csv"));
    assert!(!s.contains("<svg"));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(dir.path(), "bad.json", "{\n  \"host\": {\n    \"vbm_eV\": ,\n  }\n}\n");
    let o = run(&["-i", &p, "thermo"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line 3"), "{e}");
    assert!(e.contains("column"), "{e}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("two_lines.json")).unwrap()).unwrap();
    v["host"]["band_gap"] = serde_json::json!(1.0);
    let p = write_tmp(dir.path(), "extra.json", &v.to_string());
    let o = run(&["-i", &p, "thermo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("band_gap"), "{}", stderr(&o));
}

#[test]
fn unknown_spin_system_fails() {
    let f = fixture("pav2_prv2.json");
    let o = run(&["-i", f.to_str().unwrap(), "levels", "--system", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn thread_variable_must_be_an_integer() {
    let f = fixture("two_lines.json");
    let o = Command::new(BIN)
        .args(["-i", f.to_str().unwrap(), "thermo"])
        .env("DEFECT_SPECTRO_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DEFECT_SPECTRO_THREADS"));
}

#[test]
fn correction_without_dataset_prints_energy() {
    let o = run(&["correction", "--charge", "-2", "--cell-length", "10.70", "--epsilon", "5.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("E_corr = ")).unwrap();
    let value: f64 = line["E_corr = ".len()..].split_whitespace().next().unwrap().parse().unwrap();
    // q^2 |nu| e^2/(4 pi eps0) / (2 eps L) with nu = -2.837297479
    let expect = 4.0 * 2.837_297_479 * 14.399_645_478_43 / (2.0 * 5.7 * 10.70);
    assert!((value - expect).abs() < 1e-8, "{value}");
}

#[test]
fn selection_table_covers_fixture_transitions() {
    let out = tempfile::tempdir().unwrap();
    let f = fixture("pav2_prv2.json");
    let o = run(&["-i", f.to_str().unwrap(), "-o", out.path().to_str().unwrap(), "selection"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t = fs::read_to_string(out.path().join("selection.csv")).unwrap();
    let row = t.lines().find(|l| l.starts_with("PaV2,-2,ground,excited_up")).unwrap();
    assert!(row.contains(",A1,B2,"), "{row}");
}

#[test]
fn levels_with_excited_state_writes_transitions() {
    let out = tempfile::tempdir().unwrap();
    let f = fixture("pav2_prv2.json");
    let o = run(&[
        "-i", f.to_str().unwrap(), "-o", out.path().to_str().unwrap(), "levels",
        "--system", "PaV2-2", "--sweep", "0:1:4", "--excited", "PaV2-1", "--zpl", "2.3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.path().join("levels_PaV2-2.csv")).unwrap();
    // S = 1/2, I = 5/2: 5 field points * 12 levels + header
    assert_eq!(csv.lines().count(), 61);
    assert!(out.path().join("levels_PaV2-2.svg").is_file());
    assert!(out.path().join("transitions_PaV2-2_PaV2-1.csv").is_file());
}

#[test]
fn zpl_requires_excited() {
    let f = fixture("pav2_prv2.json");
    let o = run(&["-i", f.to_str().unwrap(), "levels", "--system", "PaV2-2", "--zpl", "2.3"]);
    assert_eq!(o.status.code(), Some(2));
}
