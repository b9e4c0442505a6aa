use std::path::Path;
use std::process::{Command, Output};

use springy_core::geometry::{ChamberSide, RobGeometry};

fn springy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_springy")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = springy(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

fn floats(text: &str, name: &str) -> Vec<f64> {
    column(text, name).iter().map(|s| s.parse().unwrap()).collect()
}

const SMALL: [&str; 8] = ["--particles", "24", "--runs", "2", "--t-end", "1", "--dt", "0.05"];

#[test]
fn simulate_writes_the_series_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rob");
    let mut args = vec!["simulate", "--m", "1e-3", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    ok(&args);
    let series = read(&out.join("series.csv"));
    assert_eq!(series.lines().next().unwrap(), "t,delta_ke,mean_Eb,mean_Ep,stderr");
    let t = floats(&series, "t");
    assert_eq!(t.len(), 21);
    for (i, t) in t.iter().enumerate() {
        assert_eq!(*t, i as f64 * 0.05);
    }
    // every member starts with E_b = 0.9
    assert!((floats(&series, "mean_Eb")[0] - 0.9).abs() < 1e-12);
    for f in ["run_000.csv", "run_001.csv", "summary.json", "run_info.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["members"], 48);
    assert_eq!(summary["failures"], 0);
    assert_eq!(summary["seed"], 1);
}

#[test]
fn models_share_the_schema_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files = ["series.csv", "run_000.csv", "run_001.csv", "summary.json"];
    let mut headers = Vec::new();
    let mut first: Vec<String> = Vec::new();
    for (i, (model, name)) in [("billiard", "a"), ("reduced", "b"), ("reduced", "b")].into_iter().enumerate() {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--model", model, "--geometry", "mushroom", "--m", "1e-2", "--workers", "2"];
        args.extend(["--out", out.to_str().unwrap()]);
        args.extend(SMALL);
        ok(&args);
        headers.push(read(&out.join("series.csv")).lines().next().unwrap().to_string());
        let now: Vec<String> = files.iter().map(|f| read(&out.join(f))).collect();
        if i == 2 {
            for (f, (a, b)) in files.iter().zip(first.iter().zip(&now)) {
                assert!(a == b, "{f} differs between reruns");
            }
        }
        first = now;
    }
    assert_eq!(headers[0], headers[1]);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[ensemble]\ne_b0 = 1.5\n").unwrap();
    let out = springy(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("e_b0"));

    std::fs::write(&bad, "[geometry.rob]\nlenght = 2.0\n").unwrap();
    let out = springy(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lenght"));

    assert_eq!(springy(&["simulate", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(springy(&["simulate", "--geometry", "circle"]).status.code(), Some(2));
    assert_eq!(springy(&["rates"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // a directory without summary.json
    let out = springy(&["rates", dir.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, "t,delta_ke\n0,x\n1,2\n").unwrap();
    let out = springy(&["rates", csv.to_str().unwrap(), "--bar-period", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn rob_trace_matches_the_invariant_definitions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace");
    ok(&[
        "trace", "--m", "1e-4", "--t-end", "3", "--dt", "0.01", "--trace-member", "5", "--emit-plots", "--out",
        out.to_str().unwrap(),
    ]);
    let text = read(&out.join("trace.csv"));
    assert_eq!(text.lines().next().unwrap(), "t,y_b,v_b,E_b,E_p,J,region,branch,switch");
    let g = RobGeometry::default();
    let (y, e_b, e_p, j) = (floats(&text, "y_b"), floats(&text, "E_b"), floats(&text, "E_p"), floats(&text, "J"));
    let branch = column(&text, "branch");
    let switch = column(&text, "switch");
    let mut free_level: Option<f64> = None;
    for i in 0..y.len() {
        let expect = match branch[i].as_str() {
            "chamber-up" => e_p[i].sqrt() * g.chamber_volume(y[i], ChamberSide::Up),
            "chamber-down" => e_p[i].sqrt() * g.chamber_volume(y[i], ChamberSide::Down),
            "free" => e_b[i],
            b => panic!("unexpected branch {b}"),
        };
        assert_eq!(j[i], expect);
        let switched = i > 0 && branch[i] != branch[i - 1];
        assert_eq!(switch[i] == "1", switched);
        // the bar energy stays put while the particle is away from the bar
        if branch[i] == "free" && !switched {
            if let Some(level) = free_level {
                assert!((e_b[i] - level).abs() < 1e-12);
            }
            free_level = Some(e_b[i]);
        } else {
            free_level = None;
        }
    }
    assert!(switch.iter().any(|s| s == "1"));
    assert!(read(&out.join("trace.svg")).contains("<polyline"));

    let inv = dir.path().join("inv");
    ok(&["invariants", out.join("trace.csv").to_str().unwrap(), "--out", inv.to_str().unwrap()]);
    let segs = read(&inv.join("invariants.csv"));
    let drift = floats(&segs, "max_rel_drift");
    let seg_branch = column(&segs, "branch");
    for (d, b) in drift.iter().zip(&seg_branch) {
        if b == "free" {
            assert!(*d < 1e-12, "free-bar drift {d}");
        }
    }
}

#[test]
fn rates_recover_noisy_synthetic_decay() {
    use rand::{Rng, SeedableRng};
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut files = Vec::new();
    for r in 0..10 {
        let path = dir.path().join(format!("s{r}.csv"));
        let mut text = String::from("t,delta_ke\n");
        for i in 0..=1200 {
            let t = i as f64 * 0.05;
            let noise: f64 = 1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0) * 3f64.sqrt();
            text.push_str(&format!("{t},{}\n", 0.4 * (-0.05 * t).exp() * noise));
        }
        std::fs::write(&path, text).unwrap();
        files.push(path.to_str().unwrap().to_string());
    }
    let out = dir.path().join("rates");
    let mut args = vec!["rates", "--bar-period", "0.698", "--m", "1e-5", "--eb0", "0.9", "--out", out.to_str().unwrap()];
    args.extend(files.iter().map(String::as_str));
    ok(&args);
    let rates = read(&out.join("rates.csv"));
    let (rate, std) = (floats(&rates, "rate")[0], floats(&rates, "std")[0]);
    assert!((rate - 0.05).abs() < 1e-3, "{rate}");
    assert!(std > 0.0 && std < 1e-3, "{std}");
    assert_eq!(column(&rates, "runs")[0], "10");
    assert_eq!(column(&rates, "no_decay")[0], "0");
    assert_eq!(read(&out.join("fits.csv")).lines().count(), 11);
}

#[test]
fn rates_flag_series_without_decay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let body: String = (0..200).map(|i| format!("{},0.3\n", i as f64 * 0.1)).collect();
    std::fs::write(&path, format!("t,delta_ke\n{body}")).unwrap();
    let out = dir.path().join("r");
    ok(&["rates", path.to_str().unwrap(), "--bar-period", "1", "--out", out.to_str().unwrap()]);
    let fits = read(&out.join("fits.csv"));
    assert_eq!(column(&fits, "no_decay"), ["1"]);
    assert_eq!(floats(&fits, "rate"), [0.0]);
}

#[test]
fn extrapolate_recovers_an_exact_line() {
    let dir = tempfile::tempdir().unwrap();
    let rates = dir.path().join("rates.csv");
    let mut text = String::from("source,m,E_b0,rate,std,stderr,T,runs,no_decay\n");
    for m in [1e-3, 3e-4, 1e-4] {
        text.push_str(&format!("x,{m},0.9,{},1e-4,0,0,10,0\n", 0.002 + 0.5 * f64::sqrt(m)));
        text.push_str(&format!("x,{m},0.1,{},2e-4,0,0,10,0\n", 0.5 * f64::sqrt(m)));
    }
    std::fs::write(&rates, text).unwrap();
    let out = dir.path().join("x");
    ok(&["extrapolate", rates.to_str().unwrap(), "--out", out.to_str().unwrap(), "--emit-plots"]);
    let fits: serde_json::Value = serde_json::from_str(&read(&out.join("extrapolation.json"))).unwrap();
    let fits = fits.as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        let expect = if f["e_b0"] == 0.9 { 0.002 } else { 0.0 };
        assert!((f["intercept"].as_f64().unwrap() - expect).abs() < 1e-12, "{f}");
        assert!((f["slope"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    }
    assert!(read(&out.join("extrapolation.svg")).contains("<circle"));

    std::fs::write(&rates, "source,m,E_b0,rate,std,stderr,T,runs,no_decay\nx,1e-3,0.9,0.01,0.001,0,0,10,0\n").unwrap();
    assert_eq!(springy(&["extrapolate", rates.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_then_rates_reads_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&[
        "simulate", "--model", "reduced", "--particles", "300", "--runs", "3", "--t-end", "60", "--eb0", "0.1",
        "--out", sim.to_str().unwrap(),
    ]);
    let out = dir.path().join("rates");
    ok(&["rates", sim.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let rates = read(&out.join("rates.csv"));
    assert_eq!(floats(&rates, "E_b0"), [0.1]);
    assert_eq!(column(&rates, "runs"), ["3"]);
    let rate = floats(&rates, "rate")[0];
    assert!(rate > 0.0 && rate.is_finite());
}
