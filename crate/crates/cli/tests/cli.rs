use std::path::Path;
use std::process::{Command, Output};

fn cpdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdyn")).args(args).env_remove("CP_DYNAMICS_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const BARE: &[&str] = &["sweep", "--x0", "1", "--t-start", "0", "--t-stop", "6", "--t-count", "301"];

#[test]
fn csv_is_identical_across_thread_counts() {
    for base in [BARE.to_vec(), vec!["sweep", "--scenario", "dressed2", "--x0", "1", "--x0p", "1.2", "--rho", "1.6", "--t-count", "121"]] {
        let runs: Vec<String> = ["1", "2", "8"]
            .iter()
            .map(|n| {
                let mut args = base.clone();
                args.extend(["--threads", n]);
                let o = cpdyn(&args);
                assert!(o.status.success(), "{}", stderr(&o));
                stdout(&o)
            })
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
        let env = Command::new(env!("CARGO_BIN_EXE_cpdyn")).args(&base).env("CP_DYNAMICS_THREADS", "3").output().unwrap();
        assert_eq!(stdout(&env), runs[0]);
    }
}

#[test]
fn bare_sweep_rows_and_light_cone() {
    let o = cpdyn(BARE);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t_over_d,energy_over_eps0,force_d_over_eps0,diverged,term1,term2,term3");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 301);
    let ts: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
    for r in &rows {
        assert_eq!(r.len(), 7);
        assert!(!r.iter().any(|c| c.contains("NaN") || c.contains("inf")));
        let t: f64 = r[0].parse().unwrap();
        let near = (t - 2.0).abs() < 2e-3;
        assert_eq!(r[3], if near { "true" } else { "false" }, "t = {t}");
        if near {
            assert_eq!(&r[1..3], &["", ""]);
        } else {
            assert_eq!(r[1], r[4]);
            assert_eq!(&r[5..], &["", ""]);
        }
    }
    let err = stderr(&o);
    assert!(err.contains("force sign changes at ct/d: [2.621316"), "{err}");
    assert!(err.contains("settled"), "{err}");
}

#[test]
fn two_hundred_point_grid() {
    let o = cpdyn(&["energy", "--x0", "1", "--t-start", "0", "--t-stop", "6", "--t-count", "200"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 201);
}

#[test]
fn dressed2_plot_shades_echo_windows() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    let o = cpdyn(&[
        "sweep", "--scenario", "dressed2", "--x0", "1", "--x0p", "1.2", "--rho", "1.6", "--t-count", "301", "--plot",
        svg.to_str().unwrap(), "--out", dir.path().join("p.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    let rects: Vec<(f64, f64)> = text
        .split(r#"<rect class="diverged" data-x0=""#)
        .skip(1)
        .map(|s| {
            let x0: f64 = s.split('"').next().unwrap().parse().unwrap();
            let x1: f64 = s.split(r#"data-x1=""#).nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
            (x0, x1)
        })
        .collect();
    // 2 zbar = 2.6, 2 d = 2, 2 |z| = 0.6 (in units of d).
    let expected = [0.6, 2.0, 2.6];
    assert_eq!(rects.len(), 3, "{rects:?}");
    for (r, c) in rects.iter().zip(expected) {
        assert!((r.0 - c * (1.0 - 1e-3)).abs() < 1e-12 && (r.1 - c * (1.0 + 1e-3)).abs() < 1e-12, "{r:?} vs {c}");
    }
    assert!(text.contains(r#"class="zero""#) && text.contains(r#"class="legend""#));
}

#[test]
fn oracle_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let base = ["oracle", "--x0", "1", "--t-start", "0.5", "--t-stop", "3.5", "--t-count", "3"];
    let o = cpdyn(&[&base[..], &["--tol", "1e-5"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("max_rel_dev") && stderr(&o).contains("<= tol 1e-5"), "{}", stderr(&o));

    let o = cpdyn(&[&base[..], &["--tol", "1e-14", "--format", "json", "--out", out.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["summary"]["oracle"]["passed"], false);
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(report["rows"][1]["energy_over_eps0"].is_null());
}

#[test]
fn cavity_oracle_needs_bare() {
    let o = cpdyn(&["sweep", "--scenario", "dressed1", "--x0", "1", "--oracle", "cavity", "--t-count", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let toml = write(
        dir.path(),
        "run.toml",
        "scenario = \"dressed1\"\noutputs = [\"energy\"]\n[params]\nx0 = 1\nx0p = 1.2\n[time_grid]\nstart = 0.5\nstop = 1.5\ncount = 3\n",
    );
    let o = cpdyn(&["sweep", "--config", &toml]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    let o2 = cpdyn(&["sweep", "--config", &toml, "--t-count", "5", "--scenario", "bare"]);
    assert_eq!(stdout(&o2).lines().count(), 6);
    assert_ne!(stdout(&o2).lines().nth(1), stdout(&o).lines().nth(1));

    let json = write(dir.path(), "run.json", r#"{"scenario": "dressed1", "outputs": ["energy"], "params": {"x0": 1, "x0p": 1.2}, "time_grid": {"start": 0.5, "stop": 1.5, "count": 3}}"#);
    assert_eq!(stdout(&cpdyn(&["sweep", "--config", &json])), stdout(&o));

    let bad = write(dir.path(), "bad.toml", "[params]\nx0 = 1\n[time_grid]\nstrat = 0\n");
    let o = cpdyn(&["energy", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let both = write(dir.path(), "both.toml", "preset = \"rydberg-like\"\n[params]\nx0 = 1\n");
    let o = cpdyn(&["energy", "--config", &both]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("specify exactly one parameterization"));

    let o = cpdyn(&["energy", "--x0", "1", "--t-start", "3", "--t-stop", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("time_grid.stop"), "{}", stderr(&o));
    let o = cpdyn(&["energy", "--x0", "1", "--log-time"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(cpdyn(&["energy", "--x0", "one"]).status.code(), Some(1));
    assert_eq!(cpdyn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cpdyn(&["--help"]).status.code(), Some(0));
    assert_eq!(cpdyn(&["energy", "--config", "/nonexistent/run.toml"]).status.code(), Some(3));
    assert_eq!(cpdyn(&["energy", "--x0", "1", "--t-count", "2", "--out", "/nonexistent/dir/out.csv"]).status.code(), Some(3));
}

#[test]
fn presets_and_preset_runs() {
    let o = cpdyn(&["presets"]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("rydberg-displaced,1,1.2,1.6")));
    let a = cpdyn(&["energy", "--preset", "rydberg-displaced", "--scenario", "dressed2", "--t-count", "4"]);
    let b = cpdyn(&["energy", "--x0", "1", "--x0p", "1.2", "--rho", "1.6", "--scenario", "dressed2", "--t-count", "4"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn cavity_check_table() {
    let o = cpdyn(&["cavity-check", "--x0", "1", "--rung", "4,0.8", "--rung", "5,0.6", "--rung", "6,0.4", "--tol", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "l_over_d,n_max,epsilon_d,value_over_eps0,tail_over_eps0,deviation");
    assert_eq!(lines.len(), 4);
    assert!(stderr(&o).contains("extrapolated"));
}
