use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rdme_cli::{load_config, Overrides};

fn rdme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdme"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("run rdme")
}

fn run(config: &Path, out: &Path, seed: u64, extra: &[&str]) -> Output {
    let seed = seed.to_string();
    let mut args = vec!["--config", config.to_str().unwrap(), "--seed", &seed, "--out", out.to_str().unwrap()];
    args.extend(extra);
    rdme(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

fn rebind_config(values: &str) -> String {
    format!(
        r#"
kind = "rebind"
trajectories = 200
[pair]
dim = 3
sigma = 2e-9
diffusion = 2e-12
k_r = 1e-18
[mesh]
n = 5
h_factor = 1.0
[sweep]
axis = "h"
values = {values}
relative = true
"#
    )
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn empty_sweep_writes_summary_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &rebind_config("[]"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, 1, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["summary.json"]);
    assert_eq!(summary(&out)["points"], serde_json::json!([]));
}

#[test]
fn rebind_with_two_widths_writes_two_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &rebind_config("[1.0, 2.0]"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, 7, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["rebind-h-1hinf.csv", "rebind-h-2hinf.csv", "summary.json"]);

    let text = fs::read_to_string(out.join("rebind-h-1hinf.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# kind=rebind"));
    assert_eq!(lines.next().unwrap(), "time_s,censored");
    assert_eq!(lines.count(), 200);

    let s = summary(&out);
    assert_eq!(s["kind"], "rebind");
    assert_eq!(s["seed"], 7);
    assert!(s["version"].is_string());
    for p in s["points"].as_array().unwrap() {
        let meso = &p["meso"][0];
        assert_eq!(meso["stats"]["n"], 200);
        let ch = &meso["model"]["channels"][0];
        let d = &ch["diagnostics"];
        for key in ["h_star_kr", "h_star_inf", "rho", "kd_meso_ratio", "mesh_bound", "k_ck", "eps_max"] {
            assert!(!d[key].is_null(), "{key} missing");
        }
        assert!(meso["expected_mean"].as_f64().unwrap() > 0.0);
        assert!(!meso["histogram"].as_array().unwrap().is_empty());
    }
}

#[test]
fn same_seed_reproduces_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &rebind_config("[1.0, 2.0]"));
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&run(&cfg, &a, 3, &["--threads", "1"])), 0);
    assert_eq!(code(&run(&cfg, &b, 3, &["--threads", "3"])), 0);
    assert_eq!(code(&run(&cfg, &c, 4, &["--threads", "1"])), 0);
    for name in ["rebind-h-1hinf.csv", "rebind-h-2hinf.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
        assert_ne!(fs::read(a.join(name)).unwrap(), fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");

    // Missing seed: usage error.
    let cfg = write(d, "ok.toml", &rebind_config("[1.0]"));
    assert_eq!(code(&rdme(&["--config", cfg.to_str().unwrap()])), 2);

    // Malformed and invalid configurations.
    let bad = write(d, "bad.toml", "kind = \"rebind\"\ntrajectories = [");
    assert_eq!(code(&run(&bad, &out, 1, &[])), 2);
    let zero = write(d, "zero.toml", &rebind_config("[1.0]").replace("trajectories = 200", "trajectories = 0"));
    assert_eq!(code(&run(&zero, &out, 1, &[])), 2);
    let neg = write(d, "neg.toml", &rebind_config("[-1.0]"));
    assert_eq!(code(&run(&neg, &out, 1, &[])), 2);
    assert_eq!(code(&run(&d.join("missing.toml"), &out, 1, &[])), 2);

    // Below h*_kr there is no valid rate; the error names the channel.
    let fine = write(d, "fine.toml", &rebind_config("[0.8]"));
    let o = run(&fine, &out, 1, &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"bind\""));

    // Censoring above 10%: results are written and flagged. From a uniform
    // start one event rarely suffices to bind.
    let text = format!("max_events = 1\n{}", rebind_config("[1.0]")).replace("\"rebind\"", "\"binding-time\"");
    let capped = write(d, "capped.toml", &text);
    let o = run(&capped, &out, 1, &[]);
    assert_eq!(code(&o), 4);
    assert_eq!(summary(&out)["unreliable"], true);
    assert!(out.join("binding-time-h-1hinf.csv").exists());

    // Output path occupied by a file: I/O failure.
    let blocker = write(d, "blocker", "");
    assert_eq!(code(&run(&cfg, &blocker, 1, &[])), 1);
}

#[test]
fn placeholder_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&repo_root().join("configs/mapk.toml"), &dir.path().join("out"), 1, &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    for k in ["k1", "k7", "radius", "n_MAPK"] {
        assert!(err.contains(k), "{err}");
    }
    assert!(!dir.path().join("out").exists());
}

const SMALL_MODEL: &str = r#"
[parameters]
kr = 1e-18
[lattice]
dim = 3
n = 4
length = 4e-8
[[species]]
name = "A"
diffusion = 1e-12
radius = 1e-9
initial = 5
[[species]]
name = "B"
diffusion = 1e-12
radius = 1e-9
initial = 5
[[species]]
name = "C"
diffusion = 0.0
radius = 1e-9
[[reaction]]
name = "bind"
reactants = ["A", "B"]
products = ["C"]
k_r = "kr"
[[reaction]]
name = "unbind"
reactants = ["C"]
products = ["A", "B"]
k_d = 100.0
reverse_of = "bind"
"#;

const SIMULATE: &str = r#"
kind = "simulate"
model = "model.toml"
trajectories = 3
[simulate]
horizon = 0.01
interval = 0.001
event_log = true
"#;

#[test]
fn unknown_channel_is_a_compile_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "model.toml", &SMALL_MODEL.replace("reverse_of = \"bind\"", "reverse_of = \"bond\""));
    let cfg = write(dir.path(), "sim.toml", SIMULATE);
    let o = run(&cfg, &dir.path().join("out"), 1, &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bond"));
}

#[test]
fn simulate_writes_series_and_event_log() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "model.toml", SMALL_MODEL);
    let cfg = write(dir.path(), "sim.toml", SIMULATE);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, 1, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["simulate-events.csv", "simulate.csv", "summary.json"]);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("simulate.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["trajectory", "time", "A", "B", "C"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 11);
    for r in &rows {
        // A + C and B + C are conserved.
        let x: Vec<u64> = (2..5).map(|i| r[i].parse().unwrap()).collect();
        assert_eq!(x[0] + x[2], 5);
        assert_eq!(x[1] + x[2], 5);
    }
    let s = summary(&out);
    let unbind = &s["model"]["channels"][1];
    assert!(unbind["k_d_meso"].as_f64().unwrap() <= 100.0);
    assert_eq!(unbind["reverse_of"], "bind");
}

#[test]
fn rates_report_rows_follow_the_sweep_axis() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&repo_root().join("configs/mesh-bound-vs-d.toml"), &out, 1, &[]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(out.join("rates-report.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["D", "mesh_bound", "eps_max", "h_star_kr", "h_star_inf"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    let at = |d: &str| rows.iter().find(|r| &r[0] == d).unwrap().clone();
    let eps_max: f64 = at("1e-12")[2].parse().unwrap();
    assert!((eps_max - 0.975_48).abs() < 1e-4);
    // F grows with D and is unbounded once eps exceeds eps_max.
    let bounds: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(&rows[9][1], "inf");

    let o = run(&repo_root().join("configs/rates-vs-h-3d.toml"), &out, 1, &[]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(out.join("rates-report.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["h", "rho", "h_d_rho", "k_ck", "kd_meso_ratio", "flags"]);
    let first = rdr.records().next().unwrap().unwrap();
    let (hd_rho, k_ck): (f64, f64) = (first[2].parse().unwrap(), first[3].parse().unwrap());
    assert!(hd_rho > 10.0 * k_ck);
}

#[test]
fn mapk_pipeline_runs_on_a_tiny_grid() {
    let dir = tempfile::tempdir().unwrap();
    let model = repo_root().join("models/mapk-demo.toml");
    let cfg = write(
        dir.path(),
        "m.toml",
        &format!(
            r#"
kind = "mapk"
model = "{}"
trajectories = 3
[mesh]
n = 4
h_factor = 1.0
[mapk]
diffusion = [1e-13]
horizon = 0.02
interval = 0.002
"#,
            model.display()
        ),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, 1, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["curves"].as_array().unwrap().len(), 2);
    let channels = s["models"][0]["model"]["channels"].as_array().unwrap();
    assert_eq!(channels.len(), 14);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("mapk.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["mode", "D", "time", "mean_readout"]);
    assert_eq!(rdr.records().count(), 2 * 11);
}

#[test]
fn shipped_presets_parse_in_both_scales() {
    let dir = repo_root().join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        for full in [false, true] {
            let o = Overrides { seed: 1, full, ..Default::default() };
            let cfg = load_config(&path, &o).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if let Some(m) = cfg.mesh {
                assert!(m.n <= if full { 81 } else { 27 }, "{}", path.display());
            }
            assert!(cfg.trajectories <= 10_000 || full);
        }
        n += 1;
    }
    assert!(n >= 8);
}
