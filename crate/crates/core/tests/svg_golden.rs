//! Byte-level and structural checks on emitted SVG. Set `UPDATE_GOLDEN=1` to
//! rewrite the stored files after an intentional rendering change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_defect-spectro");

fn root() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn render(fixture: &str, args: &[&str], file: &str) -> String {
    let out = tempfile::tempdir().unwrap();
    let f: PathBuf = root().join("fixtures").join(fixture);
    let o = Command::new(BIN)
        .args(["-i", f.to_str().unwrap(), "-o", out.path().to_str().unwrap(), "--quiet"])
        .args(args)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out.path().join(file)).unwrap()
}

fn check_golden(name: &str, svg: &str) {
    let path = root().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, svg).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(svg == want, "{name} differs from golden copy");
}

#[test]
fn two_crossing_lines() {
    let svg = render("two_lines.json", &["thermo"], "formation_V_X.svg");
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("class=\"crossing\"").count(), 1);
    check_golden("formation_two_lines.svg", &svg);
}

#[test]
fn single_field_point_is_flat() {
    let svg = render("pav2_prv2.json", &["levels", "--system", "PaV2-1", "--B", "0.5"], "levels_PaV2-1.svg");
    let n = svg.matches("<polyline").count();
    assert_eq!(n, 18);
    for poly in svg.split("<polyline").skip(1) {
        let pts = poly.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split_whitespace().map(|p| p.split(',').nth(1).unwrap()).collect();
        assert_eq!(ys.len(), 2, "one field point spans the plot width");
        assert_eq!(ys[0], ys[1]);
    }
}

#[test]
fn sweep_has_one_polyline_per_level() {
    let svg = render("pav2_prv2.json", &["levels", "--system", "PaV2-1", "--sweep", "0:1:10"], "levels_PaV2-1.svg");
    assert_eq!(svg.matches("<polyline").count(), 18);
    check_golden("levels_PaV2-1.svg", &svg);
}
