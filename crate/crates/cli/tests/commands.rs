use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn chordfn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordfn")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = chordfn(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

/// `e^{−z/2} L₅(z)` with the Laguerre polynomial written out.
fn fock5(z: f64) -> f64 {
    let l5 = (-z.powi(5) + 25.0 * z.powi(4) - 200.0 * z.powi(3) + 600.0 * z * z - 600.0 * z + 120.0) / 120.0;
    (-0.5 * z).exp() * l5
}

#[test]
fn two_by_two_scan_has_four_rows() {
    let dir = TempDir::new().unwrap();
    ok(&["scan", "--resolution", "2", "--out", "tiny"], dir.path());
    let (header, rows) = csv_rows(&dir.path().join("tiny.csv"));
    assert_eq!(header, ["xi_p", "xi_q", "re", "im", "abs2", "phase", "flag"]);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), 7);
        assert_eq!(row[6], "OK");
        for cell in &row[..6] {
            cell.parse::<f64>().unwrap();
        }
    }
    let meta = read_json(&dir.path().join("tiny.json"));
    assert_eq!(meta["command"], "scan");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["timings"]["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn single_sample_cut_has_one_row() {
    let dir = TempDir::new().unwrap();
    ok(&["cut", "--samples", "1", "--range", "0.3,1", "--evaluator", "exact,semiclassical", "--out", "one"], dir.path());
    let (header, rows) = csv_rows(&dir.path().join("one.csv"));
    assert_eq!(
        header,
        [
            "s",
            "xi_p",
            "xi_q",
            "exact_re",
            "exact_im",
            "exact_abs2",
            "semiclassical_re",
            "semiclassical_im",
            "semiclassical_abs2",
            "exact_flag",
            "semiclassical_flag"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.3);
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(&["scan", "--resolution", "9", "--evaluator", "semiclassical", "--out", out], dir.path());
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    ok(
        &["cut", "--n", "3", "--hbar", "0.05", "--alpha2", "-0.5", "--evaluator", "exact,taylor:4", "--samples", "7", "--out", "first"],
        dir.path(),
    );
    ok(&["cut", "--config", "first.json", "--out", "second"], dir.path());
    assert_eq!(fs::read(dir.path().join("first.csv")).unwrap(), fs::read(dir.path().join("second.csv")).unwrap());
    let mut a = read_json(&dir.path().join("first.json"))["config"].clone();
    let mut b = read_json(&dir.path().join("second.json"))["config"].clone();
    assert_eq!(a["out"], "first");
    a["out"] = Value::Null;
    b["out"] = Value::Null;
    assert_eq!(a, b);
    assert_eq!(a["alpha"][2], -0.5);
    assert_eq!(a["evaluators"], serde_json::json!(["exact", "taylor:4"]));
}

#[test]
fn flags_override_the_recipe_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("recipe.cfg"), "# test recipe\nn = 1\nhbar = 0.2\nresolution = 3\nout = from_file\n").unwrap();
    ok(&["scan", "--config", "recipe.cfg", "--n", "2"], dir.path());
    let cfg = &read_json(&dir.path().join("from_file.json"))["config"];
    assert_eq!(cfg["n"], 2);
    assert_eq!(cfg["hbar"], 0.2);
    assert_eq!(cfg["resolution"], 3);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 6] = [
        &["scan", "--hbar", "0"],
        &["scan", "--evaluator", "wigner"],
        &["scan", "--evaluator", "exact,fock"],
        &["cut", "--direction", "0,0"],
        &["scan", "--unknown-flag"],
        &["scan", "--config", "missing.cfg"],
    ];
    for args in cases {
        let out = chordfn(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing written on config errors");
}

#[test]
fn unevolved_cut_follows_the_laguerre_profile() {
    let dir = TempDir::new().unwrap();
    ok(
        &["cut", "--t", "0", "--direction", "0,1", "--range", "0,2", "--samples", "41", "--evaluator", "exact", "--out", "radial"],
        dir.path(),
    );
    let (_, rows) = csv_rows(&dir.path().join("radial.csv"));
    assert_eq!(rows.len(), 41);
    for row in rows {
        let s: f64 = row[0].parse().unwrap();
        let re: f64 = row[3].parse().unwrap();
        let im: f64 = row[4].parse().unwrap();
        assert!((re - fock5(s * s / 0.2)).abs() < 1e-8, "s={s}");
        assert!(im.abs() < 1e-8);
    }
}

#[test]
fn unevolved_blind_spots_are_nodal_circles() {
    let dir = TempDir::new().unwrap();
    ok(&["blindspots", "--t", "0", "--region=-1.8,1.8,-1.8,1.8", "--resolution", "81", "--out", "fock"], dir.path());
    let report = read_json(&dir.path().join("fock.json"));
    let spots = &report["blind_spots"];
    assert_eq!(spots["flag"], "DEGENERATE_SYMMETRY");
    let radii: Vec<f64> = spots["nodal_radii"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(radii.len(), 5);
    // Laguerre roots by bisection on sign changes of the explicit polynomial.
    let mut roots = Vec::new();
    let grid: Vec<f64> = (0..=1500).map(|i| i as f64 * 0.01).collect();
    for w in grid.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        if fock5(a) * fock5(b) < 0.0 {
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if fock5(a) * fock5(m) <= 0.0 {
                    b = m
                } else {
                    a = m
                }
            }
            roots.push((0.2 * a).sqrt());
        }
    }
    assert_eq!(roots.len(), 5);
    for (r, want) in radii.iter().zip(&roots) {
        assert!((r - want).abs() < 1e-6, "{r} vs {want}");
    }
}

#[test]
fn evolved_blind_spot_report() {
    let dir = TempDir::new().unwrap();
    ok(&["blindspots", "--region=-0.6,0.6,-0.6,0.6", "--resolution", "60", "--out", "fig3"], dir.path());
    let report = read_json(&dir.path().join("fig3.json"));
    let m = &report["moments"];
    for source in ["classical", "from_exact_chord_function"] {
        assert!((m[source]["mean_q"].as_f64().unwrap() - 0.265).abs() < 1e-6);
        assert!(m[source]["mean_p"].as_f64().unwrap().abs() < 1e-8);
        assert!((m[source]["pp"].as_f64().unwrap() - 0.55).abs() < 1e-6);
    }
    let located = report["blind_spots"]["located"].as_array().unwrap();
    assert!(located.len() >= 2);
    for spot in located {
        assert!(spot["exact_residual"].as_f64().unwrap() <= 1e-6);
    }
    assert_eq!(report["blind_spots"]["unpaired"], 0);
    for c in report["comparison"].as_array().unwrap() {
        assert!((c["estimate"]["radius"].as_f64().unwrap() - 0.1907).abs() < 1e-3);
        assert!(c["relative_offset"].as_f64().unwrap() <= 0.25);
    }
}

#[test]
fn verify_prints_a_table() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["verify", "--only", "3,4", "--out", "v"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "criterion\tname\tcheck\tmeasured\ttolerance\tpass");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert!(rows.iter().any(|r| r[0] == "3") && rows.iter().any(|r| r[0] == "4"));
    assert!(rows.iter().all(|r| r.len() == 6 && r[5] == "true"));
    assert_eq!(read_json(&dir.path().join("v.json"))["failed"], 0);
    assert_eq!(chordfn(&["verify", "--only", "11"], dir.path()).status.code(), Some(1));
}

#[test]
fn shipped_recipes_run() {
    let recipes = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let dir = TempDir::new().unwrap();
    let mut count = 0;
    for entry in fs::read_dir(&recipes).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cfg") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let recipe = path.to_str().unwrap();
        let args: Vec<&str> = if name.contains("cut") {
            vec!["cut", "--config", recipe, "--samples", "5", "--out", &name]
        } else if name.contains("blindspots") {
            vec!["blindspots", "--config", recipe, "--resolution", "5", "--out", &name]
        } else {
            vec!["scan", "--config", recipe, "--resolution", "3", "--out", &name]
        };
        ok(&args, dir.path());
        count += 1;
    }
    assert!(count >= 4);
}
