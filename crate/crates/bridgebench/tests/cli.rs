use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bridgebench::experiments::{fig5_verdicts, table1_verdicts, Status};
use bridgebench::table::Table;

fn bridgebench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridgebench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&bridgebench(dir.path(), &["--help"])), 0);
    assert_eq!(code(&bridgebench(dir.path(), &["--version"])), 0);
    assert_eq!(code(&bridgebench(dir.path(), &["exp", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bridgebench(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("frobnicate"));
    assert!(stderr(&o).contains("Usage"));

    let o = bridgebench(dir.path(), &["exp", "fig5", "--bogus-flag"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--bogus-flag"));

    let o = bridgebench(dir.path(), &["exp", "fig6"]);
    assert_eq!(code(&o), 1);

    let o = bridgebench(dir.path(), &["analyze", "psrr", "--f-grid", "1000:10"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("lo:hi:log:n"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");

    fs::write(&bad, "[bridge]\nr_nominl = 1000.0\n").unwrap();
    let o = bridgebench(dir.path(), &["--config", "bad.toml", "bridge", "dc"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("r_nominl"), "{}", stderr(&o));

    fs::write(&bad, "[amp]\ngain_dc = -5.0\n").unwrap();
    let o = bridgebench(dir.path(), &["--config", "bad.toml", "exp", "fig7"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gain_dc"), "{}", stderr(&o));

    // The open-bridge base has no device to complete.
    fs::write(&bad, "topology = \"PMOS_FEEDBACK\"\n[mos]\nvth_abs = 0.7\n").unwrap();
    let o = bridgebench(dir.path(), &["--config", "bad.toml", "bridge", "dc"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mos.polarity"), "{}", stderr(&o));

    let o = bridgebench(dir.path(), &["--config", "missing.toml", "bridge", "dc"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn fig5_is_deterministic_and_reproducible_from_its_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for out in ["a", "b"] {
        let o = bridgebench(p, &["exp", "fig5", "--seed", "3", "--out-dir", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read(p.join("a/fig5_gain_sweep.csv")).unwrap();
    assert_eq!(a, fs::read(p.join("b/fig5_gain_sweep.csv")).unwrap());

    let o = bridgebench(p, &["--config", "a/fig5_sweep.toml", "exp", "fig5", "--out-dir", "c"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(a, fs::read(p.join("c/fig5_gain_sweep.csv")).unwrap());

    let t = Table::read(&p.join("a/fig5_gain_sweep.csv")).unwrap();
    assert!(fig5_verdicts(&t).unwrap().iter().all(|v| v.status == Status::Pass));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("delta_r,gain,psrr_inv_db_exact,"));
    assert!(!text.contains('\r'));
}

#[test]
fn json_mirrors_every_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = bridgebench(dir.path(), &["--json", "exp", "table1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1.json")).unwrap()).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 3);
    assert_eq!(doc[0]["architecture"], "open_loop");
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1_result.json")).unwrap()).unwrap();
    assert_eq!(result["verdicts"].as_array().unwrap().len(), 4);

    let t = Table::read(&dir.path().join("table1.csv")).unwrap();
    let v = table1_verdicts(&t).unwrap();
    assert!(v.iter().all(|v| v.status == Status::Pass), "{v:?}");
}

#[test]
fn in_band_gate_corner_fails_fig9() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corner.toml"), "[rc]\ncorner_hz = 50000.0\n").unwrap();
    let o = bridgebench(dir.path(), &["--config", "corner.toml", "exp", "fig9"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL compensation_advantage"), "{stdout}");
    assert!(dir.path().join("fig9_compensated.csv").exists());
}

#[test]
fn balanced_bridge_makes_fig9_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[bridge]\ndelta_r = 0.0\n[psrr]\nf_grid = [1000.0, 10000.0]\n";
    fs::write(dir.path().join("balanced.toml"), cfg).unwrap();
    let o = bridgebench(dir.path(), &["--config", "balanced.toml", "exp", "fig9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("N/A"));
    let text = fs::read_to_string(dir.path().join("fig9_open.csv")).unwrap();
    assert!(text.contains(",inf,-inf,"), "{text}");
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[sim]
duration = 0.005

[[sources]]
kind = "WHITE_NOISE"
target = "VCC"
amplitude = 1e-5
seed = 1
"#;
    fs::write(dir.path().join("noisy.toml"), cfg).unwrap();
    let run = |seed: &str, out: &str| {
        let o = bridgebench(
            dir.path(),
            &["--config", "noisy.toml", "--seed", seed, "sim", "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("9", "a.csv");
    assert_eq!(a, run("9", "b.csv"));
    assert_ne!(a, run("10", "c.csv"));
    let t = Table::parse(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(t.headers, ["t_s", "vcc", "gnd", "out_p", "out_n", "v_diff", "v_gate_p", "v_gate_n"]);
    assert_eq!(t.rows.len(), 5000);
}

#[test]
fn analysis_commands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = bridgebench(p, &["analyze", "psrr", "--f-grid", "1000:10000:log:2", "--out", "psrr.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&p.join("psrr.csv")).unwrap();
    assert_eq!(t.column("freq_hz").unwrap(), [1000.0, 10000.0]);

    let o = bridgebench(p, &["analyze", "noise", "--out-dir", "n"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&p.join("n/noise.csv")).unwrap();
    assert_eq!(t.text_column("limit").unwrap(), ["INTRINSIC"]);

    fs::write(p.join("open.toml"), "topology = \"OPEN_BRIDGE\"\n").unwrap();
    let o = bridgebench(p, &["--config", "open.toml", "analyze", "noise", "--out", "open.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&p.join("open.csv")).unwrap();
    assert_eq!(t.text_column("limit").unwrap(), ["SUPPLY"]);

    let o = bridgebench(p, &["loop", "sweep", "--gains", "100,1000", "--points", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(Table::read(&p.join("loop_sweep.csv")).unwrap().rows.len(), 10);

    let o = bridgebench(p, &["bridge", "dc"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&p.join("bridge_dc.csv")).unwrap();
    let psrr = t.column("psrr_db").unwrap()[0];
    assert!(psrr.is_finite());
}
