#[path = "../../core/tests/common/mod.rs"]
mod awgn;

use std::path::Path;
use std::process::{Command, Output};

use fiberae::checkpoint::Checkpoint;
use fiberae::config::RunConfig;
use fiberae::core::watts_from_dbm;
use fiberae::output::parse_sweep_csv;

fn fiberae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiberae"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gradcheck_on_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fiberae(dir.path(), &["--out", "o", "gradcheck"]);
    ok(&out);
    let report = std::fs::read_to_string(dir.path().join("o/gradcheck.csv")).unwrap();
    assert!(report.starts_with("# fiberae "));
    let rows: Vec<&str> = report.lines().filter(|l| l.ends_with(",pass") || l.ends_with(",FAIL")).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with(",pass")));
    let resolved = std::fs::read_to_string(dir.path().join("o/resolved_config.toml")).unwrap();
    let mut expected = RunConfig::default();
    expected.paths.outputs = "o".into();
    assert_eq!(RunConfig::from_toml(&resolved).unwrap(), expected);
}

#[test]
fn linear_qam_ser_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[channel]\ngamma = 0.0\n[eval]\nn_samples = 100000\n").unwrap();
    let out = fiberae(
        dir.path(),
        &["--config", "c.toml", "--out", "o", "ser", "--source", "qam", "--detector", "mindist", "--powers", "-12:2:-6"],
    );
    ok(&out);
    let text = std::fs::read_to_string(dir.path().join("o/ser_qam_mindist.csv")).unwrap();
    let rows = parse_sweep_csv(&text, "").unwrap();
    assert_eq!(rows.len(), 4);
    let noise = watts_from_dbm(-21.3);
    for r in rows {
        let exact = awgn::qam_awgn_ser(16, watts_from_dbm(r.power_dbm), noise);
        let se = (exact * (1.0 - exact) / r.n_samples as f64).sqrt();
        assert!((r.value - exact).abs() <= 3.0 * se, "{} dBm: {} vs {exact}", r.power_dbm, r.value);
    }
}

#[test]
fn fresh_checkpoint_exports_m_points_at_input_power() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[model]\nm = 8\n[train]\nbatches = 1\n").unwrap();
    ok(&fiberae(dir.path(), &["--config", "c.toml", "--out", "o", "train", "--power", "-3"]));
    ok(&fiberae(dir.path(), &["--config", "c.toml", "--out", "o", "export-constellation", "--power", "-3"]));
    let text = std::fs::read_to_string(dir.path().join("o/constellation_m8_-3.00dBm.csv")).unwrap();
    let points: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    assert_eq!(points.len(), 8);
    let mean = points.iter().map(|(a, b)| a * a + b * b).sum::<f64>() / 8.0;
    assert!((mean / watts_from_dbm(-3.0) - 1.0).abs() < 1e-12);
    let ckpt = Checkpoint::load(&dir.path().join("o/checkpoints/ae_m8_-3.00dBm.toml")).unwrap();
    assert_eq!(ckpt.train.unwrap().batches, 1);
}

#[test]
fn air_overlay_passes_external_rows_through() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[model]\nm = 4\n[train]\nbatches = 2\n[eval]\nn_samples = 1000\n").unwrap();
    std::fs::write(dir.path().join("upper.csv"), "# from elsewhere\n0,3.5\n2.5,3.75\n").unwrap();
    ok(&fiberae(dir.path(), &["--config", "c.toml", "--out", "o", "train", "--power", "0"]));
    ok(&fiberae(dir.path(), &["--config", "c.toml", "--out", "o", "air", "--power", "0", "--overlay", "upper.csv"]));
    let text = std::fs::read_to_string(dir.path().join("o/air_overlay.csv")).unwrap();
    let rows = parse_sweep_csv(&text, "").unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].metric, "AIR");
    assert_eq!((rows[2].metric.as_str(), rows[2].power_dbm, rows[2].value), ("upper", 2.5, 3.75));
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.toml"), "[channel]\ngama = 1.0\n").unwrap();
    let out = fiberae(p, &["--config", "bad.toml", "gradcheck"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("gama"), "{}", stderr(&out));

    let out = fiberae(p, &["--config", "missing.toml", "gradcheck"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("missing.toml"));

    let out = fiberae(p, &["--out", "o", "air", "--power", "0"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("ae_m16_+0.00dBm.toml"), "{}", stderr(&out));

    let out = fiberae(p, &["--out", "o", "ser", "--powers", "0:1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("start:step:stop"));

    let out = fiberae(p, &["--out", "o", "ser", "--source", "qam", "--detector", "ae", "--power", "0"]);
    assert!(!out.status.success());

    std::fs::create_dir_all(p.join("o/checkpoints")).unwrap();
    std::fs::write(p.join("o/checkpoints/ae_m16_+0.00dBm.toml"), "format = \"fiberae-checkpoint\"\nversion = 1\nm = 16\n[[tx]]\ninputs =").unwrap();
    let out = fiberae(p, &["--out", "o", "export-constellation", "--power", "0"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("malformed checkpoint"), "{}", stderr(&out));
}
