use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fwe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwe"))
        .current_dir(dir)
        .env_remove("FWE_CACHE_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn sinusoid_csv(amp: f64, mean: f64, period: f64, n: usize) -> String {
    let mut s = String::from("offset_mil,delay_ps_per_in,z0_ohm\n");
    for k in 0..n {
        let x = k as f64 * period / n as f64;
        let v = mean + amp * (std::f64::consts::TAU * x / period).sin();
        s.push_str(&format!("{x},{v},50\n"));
    }
    s
}

#[test]
fn catalog_builtin_lists_four_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["catalog", "--builtin"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for name in ["1035", "1080", "1078", "3313"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("4 styles"));
}

#[test]
fn catalog_files() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = fwe(tmp.path(), &["catalog", "--catalog", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 styles"));

    let bad = tmp.path().join("bad.toml");
    fs::write(
        &bad,
        "[[style]]\nname = \"wide\"\nx1 = 0.8\nx2 = 15\nx3 = 14\ny1 = 0.8\ny2 = 12\ny3 = 14\n",
    )
    .unwrap();
    let o = fwe(tmp.path(), &["catalog", "--catalog", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("wide") && stderr(&o).contains("bundle exceeds pitch"), "{}", stderr(&o));

    let broken = tmp.path().join("broken.toml");
    fs::write(&broken, "[[style]]\nname = \"x\"\nx1 = = 1\n").unwrap();
    let o = fwe(tmp.path(), &["catalog", "--catalog", broken.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let missing = fwe(tmp.path(), &["catalog", "--catalog", "nope.toml"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn sweep_writes_csv_and_reuses_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sweep", "--styles", "1035", "--single", "-w", "4"];
    let first = fwe(tmp.path(), &args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let csv = tmp.path().join("fwe-out/1035-single-w4.csv");
    let a = fs::read(&csv).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "offset_mil,delay_ps_per_in,z0_ohm");
    assert_eq!(lines.len(), 26);
    // At least nine significant digits per number.
    let delay = lines[1].split(',').nth(1).unwrap();
    assert!(delay.chars().filter(|c| c.is_ascii_digit()).count() >= 9, "{delay}");

    let second = fwe(tmp.path(), &args);
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("cache hit"), "{}", stdout(&second));
    assert_eq!(fs::read(&csv).unwrap(), a);

    // A fresh output directory with no cache recomputes the same bytes.
    let other = tempfile::tempdir().unwrap();
    let third = fwe(other.path(), &args);
    assert!(!stdout(&third).contains("cache hit"));
    assert_eq!(fs::read(other.path().join("fwe-out/1035-single-w4.csv")).unwrap(), a);
}

#[test]
fn cache_location_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("shared-cache");
    let o = Command::new(env!("CARGO_BIN_EXE_fwe"))
        .current_dir(tmp.path())
        .env("FWE_CACHE_DIR", &cache)
        .args(["sweep", "--styles", "1035", "--offsets=-1:1:1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    assert!(!tmp.path().join("fwe-out/.cache").exists());
}

#[test]
fn diff_sweep_for_all_styles() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(
        tmp.path(),
        &["sweep", "--styles", "all", "--diff", "-w", "4", "-s", "4", "--offsets=-1:1:1"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["1035", "1080", "1078", "3313"] {
        let text = fs::read_to_string(tmp.path().join(format!("fwe-out/{name}-diff-w4-s4.csv"))).unwrap();
        assert!(text.starts_with("offset_mil,skew_ps_per_in,delay_left,delay_right\n"));
        assert_eq!(text.lines().count(), 4);
    }
}

#[test]
fn solver_failure_keeps_partial_results() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["sweep", "--styles", "1078", "--max-iter", "1", "--offsets", "0:2:1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("slice"), "{}", stderr(&o));
    let partial = tmp.path().join("fwe-out/1078-single-w4.csv.partial");
    assert!(fs::read_to_string(partial).unwrap().starts_with("offset_mil,delay_ps_per_in,z0_ohm"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&fwe(tmp.path(), &["sweep", "--offsets", "1:2"])), 2);
    assert_eq!(code(&fwe(tmp.path(), &["sweep", "--styles", "9999"])), 2);
    assert_eq!(code(&fwe(tmp.path(), &["sweep", "-w", "-1"])), 2);
    // 4.1 mil is not a multiple of the 0.25 mil grid.
    assert_eq!(code(&fwe(tmp.path(), &["sweep", "--styles", "1035", "-w", "4.1"])), 2);
}

#[test]
fn stats_without_sweep_data_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["stats", "--styles", "1080"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("fwe sweep"), "{}", stderr(&o));
}

#[test]
fn stats_on_constant_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("flat.csv");
    fs::write(&input, sinusoid_csv(0.0, 150.0, 14.0, 14)).unwrap();
    let o = fwe(tmp.path(), &["stats", "--input", input.to_str().unwrap(), "--period", "14"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("fwe-out/flat-stats.json")).unwrap()).unwrap();
    assert_eq!(v["delta_t_ps_per_in"], 0.0);
    let t = v["thresholds"].as_array().unwrap();
    let e = v["empirical_exceedance"].as_array().unwrap();
    for (t, e) in t.iter().zip(e) {
        if t.as_f64().unwrap() > 0.0 {
            assert_eq!(e.as_f64().unwrap(), 0.0);
        }
    }
    assert!(v["integer_thresholds"]["empirical"].as_array().unwrap().iter().all(|p| p == 0.0));
}

#[test]
fn stats_on_sinusoid_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("sine.csv");
    fs::write(&input, sinusoid_csv(5.0, 140.0, 16.0, 32)).unwrap();
    let args = [
        "stats",
        "--input",
        input.to_str().unwrap(),
        "--period",
        "16",
        "--thresholds",
        "0:5:2.5",
        "--seed",
        "7",
        "--kumaraswamy",
        "--csv",
        "--svg",
    ];
    let o = fwe(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = tmp.path().join("fwe-out/sine-stats.json");
    let first = fs::read(&path).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["kind"], "DDE");
    assert_eq!(v["sample"]["seed"], 7);
    assert_eq!(v["sample"]["n"], 100000);
    assert_eq!(v["sample"]["bins"], 20);
    assert!((v["empirical_exceedance"][1].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.01);
    assert!((v["arcsine_exceedance"][1].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.01);
    assert!(v["kumaraswamy"]["ks"].as_f64().unwrap() < 0.02);
    assert!(tmp.path().join("fwe-out/sine-exceedance.csv").exists());
    assert!(tmp.path().join("fwe-out/sine-density.svg").exists());

    let again = fwe(tmp.path(), &args);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn compare_needs_two_styles() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["compare", "--styles", "1035"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("need ≥ 2"), "{}", stderr(&o));
    let o = fwe(tmp.path(), &["compare", "--styles", "1035,3313"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn compare_two_styles() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["sweep", "--styles", "3313,1035"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = fwe(tmp.path(), &["stats", "--styles", "3313,1035", "--samples", "20000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = fwe(tmp.path(), &["compare", "--styles", "3313,1035", "--csv", "--json", "--svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("smallest dt: 1035"), "{}", stdout(&o));
    let table: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("fwe-out/compare-dde-w4.json")).unwrap()).unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows[0]["style"], "3313");
    let thresholds: Vec<f64> = table["thresholds"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert_eq!(thresholds, (1..=8).map(f64::from).collect::<Vec<_>>());
    for row in rows {
        let dt = row["delta_t"].as_f64().unwrap();
        for (t, a) in thresholds.iter().zip(row["arcsine"].as_array().unwrap()) {
            let a = a.as_f64().unwrap();
            assert!((0.0..=1.0).contains(&a));
            if *t >= dt {
                assert_eq!(a, 0.0);
            }
        }
    }
    let svg = fs::read_to_string(tmp.path().join("fwe-out/compare-dde-w4.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

fn raster_values(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn raster_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["raster", "--styles", "1035", "--x", "0", "--no-trace"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = raster_values(&tmp.path().join("fwe-out/1035-raster-x0-o0.csv"));
    let values: BTreeSet<u64> = a.iter().flatten().map(|v| v.to_bits()).collect();
    let expect: BTreeSet<u64> = [1.0f64, 3.5, 6.0].iter().map(|v| v.to_bits()).collect();
    assert_eq!(values, expect);
    // Rows run bottom to top: 4 mil of laminate at 0.25 mil cells.
    assert!(a[..16].iter().all(|row| row.iter().all(|&v| v >= 3.5)));
    assert!(a[16..].iter().all(|row| row.iter().all(|&v| v == 1.0)));

    let o = fwe(tmp.path(), &["raster", "--styles", "1035", "--x", "14", "--no-trace"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read(tmp.path().join("fwe-out/1035-raster-x0-o0.csv")).unwrap(),
        fs::read(tmp.path().join("fwe-out/1035-raster-x14-o0.csv")).unwrap()
    );

    let o = fwe(tmp.path(), &["raster", "--styles", "1035", "--homogenized", "--no-trace", "--svg"]);
    assert_eq!(code(&o), 0);
    let h = raster_values(&tmp.path().join("fwe-out/1035-raster-x0-o0-homogenized.csv"));
    assert!(h[..16].iter().all(|row| row.iter().all(|&v| v == 3.5)));
    assert!(tmp.path().join("fwe-out/1035-raster-x0-o0-homogenized.svg").exists());

    let o = fwe(tmp.path(), &["raster", "--styles", "1035", "--x", "nan"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fwe(tmp.path(), &["validate", "--json"]);
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("PASS").count(), 21, "{text}");
    let cases: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("fwe-out/validation.json")).unwrap()).unwrap();
    assert_eq!(cases.as_array().unwrap().len(), 21);
}
