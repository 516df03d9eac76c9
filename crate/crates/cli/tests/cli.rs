use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use soilradar::sfcw::{synthesize_sweep, Echo, SweepConfig, Window};
use soilradar_cli::commands::{cmd_estimate, cmd_ingest, cmd_synth, load_truth};
use soilradar_cli::formats::observations::ObservationFile;
use soilradar_cli::formats::sweep::save_sweep;
use soilradar_cli::formats::touchstone::export_touchstone;
use soilradar_cli::CampaignConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soilradar")).args(args).output().unwrap()
}

fn noiseless(dir: &Path) -> CampaignConfig {
    CampaignConfig {
        out_dir: dir.to_path_buf(),
        sigma_tof: 0.0,
        sigma_aoa: 0.0,
        sigma_altitude: 0.0,
        ..Default::default()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let out = bin(&["--seed", seed, "--out", s(&dir), "synth"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.join("observations.csv")).unwrap()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
}

#[test]
fn default_synth_writes_twelve_records_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig { out_dir: tmp.path().into(), ..Default::default() };
    let out = cmd_synth(&cfg).unwrap();
    assert_eq!(out.observations.records.len(), 12);
    assert_eq!(ObservationFile::load(&out.observations_path, false).unwrap(), out.observations);
    assert_eq!(load_truth(&out.truth_path).unwrap(), out.truth);
}

#[test]
fn noiseless_synth_then_estimate_recovers_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = noiseless(tmp.path());
    let synth = cmd_synth(&cfg).unwrap();
    let est = cmd_estimate(&synth.observations_path, &cfg, false).unwrap();
    let (p, t) = (est.result.params, synth.truth);
    assert!((p.h1 - t.h1).abs() < 1e-3, "{p:?} vs {t:?}");
    assert!((p.eps1 - t.eps1).abs() < 1e-3);
    assert!((p.eps2 - t.eps2).abs() < 1e-3);
    assert!(est.path.exists());
}

#[test]
fn row_order_does_not_change_the_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig { out_dir: tmp.path().into(), ..Default::default() };
    let synth = cmd_synth(&cfg).unwrap();
    let base = cmd_estimate(&synth.observations_path, &cfg, false).unwrap();

    let mut shuffled = synth.observations.clone();
    shuffled.records.reverse();
    shuffled.records.swap(0, 5);
    let path = tmp.path().join("shuffled.csv");
    shuffled.save(&path).unwrap();
    let other = cmd_estimate(&path, &cfg, false).unwrap();
    assert_eq!(base.result.params, other.result.params);
}

#[test]
fn too_few_records_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut file = cmd_synth(&noiseless(tmp.path())).unwrap().observations;
    file.records.truncate(1);
    let path = tmp.path().join("one.csv");
    file.save(&path).unwrap();
    let out = bin(&["--out", s(tmp.path()), "estimate", s(&path)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn non_convergence_exits_4_with_best_effort_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.toml");
    std::fs::write(&cfg_path, "max_iterations = 1\nmultistart_h1 = 1\nmultistart_eps1 = 1\nmultistart_eps2 = 1\n")
        .unwrap();
    let synth = cmd_synth(&CampaignConfig { out_dir: tmp.path().into(), ..Default::default() }).unwrap();
    let out = bin(&["--config", s(&cfg_path), "--out", s(tmp.path()), "estimate", s(&synth.observations_path)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("estimate.csv")).unwrap();
    assert!(text.lines().last().unwrap().contains(",false,"), "{text}");
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.toml");
    std::fs::write(&cfg_path, "sigma_toff = 0.1\n").unwrap();
    let out = bin(&["--config", s(&cfg_path), "synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_toff"));

    std::fs::write(&cfg_path, "n_scenarios = 0\n").unwrap();
    let out = bin(&["--config", s(&cfg_path), "--out", s(tmp.path()), "montecarlo"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn round_trip_files_are_halved_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let file = cmd_synth(&noiseless(tmp.path())).unwrap().observations;
    let mut text = String::new();
    for line in file.to_text().lines() {
        let line = match line {
            "# tof: one-way" => "# tof: round-trip".to_string(),
            l if l.starts_with("x0_m") => l.replace("tof_oneway_ns", "tof_roundtrip_ns"),
            l if l.starts_with('#') => l.to_string(),
            l => {
                let mut f: Vec<String> = l.split(',').map(String::from).collect();
                f[2] = (f[2].parse::<f64>().unwrap() * 2.0).to_string();
                f.join(",")
            }
        };
        text.push_str(&line);
        text.push('\n');
    }
    let rt = tmp.path().join("rt.csv");
    std::fs::write(&rt, text).unwrap();

    let out = bin(&["--out", s(tmp.path()), "estimate", s(&rt)]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = CampaignConfig { out_dir: tmp.path().join("ingested"), ..Default::default() };
    let one_way = ObservationFile::load(&cmd_ingest(&rt, &cfg, true).unwrap(), false).unwrap();
    for (a, b) in one_way.records.iter().zip(&file.records) {
        assert_eq!(a.tof_one_way, b.tof_one_way);
    }
}

fn synthetic_tag_pair(dir: &Path, window: Window) -> (PathBuf, PathBuf) {
    let cfg = SweepConfig { window, ..Default::default() };
    let mut rng = soilradar::harness::stream_rng(3, 0);
    let clutter = [Echo::new(4.0, 1.0, 0.3), Echo::new(9.0, 0.6, 1.1)];
    let mut on = clutter.to_vec();
    on.push(Echo::new(20.0, 0.05, 0.7));
    let on_sweep = synthesize_sweep(&on, &cfg, 1e-4, &mut rng).unwrap();
    let off_sweep = synthesize_sweep(&clutter, &cfg, 1e-4, &mut rng).unwrap();
    let (on_path, off_path) = (dir.join("on.s1p"), dir.join("off.csv"));
    export_touchstone(&on_path, &on_sweep).unwrap();
    save_sweep(&off_path, &off_sweep).unwrap();
    (on_path, off_path)
}

#[test]
fn radar_finds_a_20ns_tag_behind_clutter() {
    let tmp = tempfile::tempdir().unwrap();
    let (on, off) = synthetic_tag_pair(tmp.path(), Window::Hann);
    let out_dir = tmp.path().join("out");
    let out = bin(&["--out", s(&out_dir), "radar", "--on", s(&on), "--off", s(&off), "--window", "15:25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("detections.csv")).unwrap();
    let row: Vec<f64> = text.lines().last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row[3] - 10.0).abs() <= 0.025, "{text}");
    assert!(out_dir.join("tdr.csv").exists());
}

#[test]
fn synthetic_radar_reports_one_way_half() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["--out", s(tmp.path()), "radar", "--echo", "6:1", "--tag", "20:0.2", "--window", "15:25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("detections.csv")).unwrap();
    let row: Vec<f64> = text.lines().last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row[2] - 20.0).abs() <= 0.05 && (row[3] - 10.0).abs() <= 0.025, "{text}");
}

#[test]
fn malformed_sweep_grid_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.csv");
    std::fs::write(
        &path,
        "# schema: soilradar-sweep/1\nfreq_hz,re,im\n1000000000,1,0\n1100000000,1,0\n1250000000,1,0\n1300000000,1,0\n",
    )
    .unwrap();
    let out = bin(&["--out", s(tmp.path()), "radar", "--on", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn tag_below_the_noise_floor_is_no_detection() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["--out", s(tmp.path()), "radar", "--noise", "0.05", "--tag", "20:0.001", "--window", "15:25"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
