use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridfsw"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate_short(dir: &Path) {
    let o = run(bin()
        .arg("simulate")
        .arg(configs().join("short_mission.json"))
        .arg("--out")
        .arg(dir));
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    simulate_short(dir.path());
    for f in [
        "vision_pose_log.csv",
        "mission_log.csv",
        "resource_log.csv",
        "core_stats.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let report = dir.path().join("report.json");
    let o = run(bin()
        .arg("analyze")
        .arg(dir.path().join("vision_pose_log.csv"))
        .arg("--mission")
        .arg(dir.path().join("mission_log.csv"))
        .arg("--resource")
        .arg(dir.path().join("resource_log.csv"))
        .arg("--core-stats")
        .arg(dir.path().join("core_stats.json"))
        .arg("--report")
        .arg(&report));
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("6000 samples"), "{stdout}");
    assert!(stdout.contains("success 100.0%"), "{stdout}");

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["mission_summary"]["vision_samples"], 6000);
    assert_eq!(json["mission_summary"]["commands"]["succeeded"], 5);
    assert_eq!(json["freshness_pct"], 100.0);
    let hist = fs::read_to_string(dir.path().join("latency_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 52);
    assert!(hist.lines().last().unwrap().starts_with("50,inf,"));
}

#[test]
fn vision_only_report_has_null_mission_fields() {
    let dir = tempfile::tempdir().unwrap();
    simulate_short(dir.path());
    let report = dir.path().join("vision_only.json");
    let o = run(bin()
        .arg("analyze")
        .arg(dir.path().join("vision_pose_log.csv"))
        .arg("--report")
        .arg(&report)
        .arg("--hist")
        .arg(dir.path().join("h.csv")));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("success n/a"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["mode_distribution"].is_null());
    assert!(json["mission_summary"]["mission_entries"].is_null());
    assert!(json["mission_summary"]["commands"].is_null());
    assert!(json["freshness_pct"].is_null());
}

#[test]
fn malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,x,y,z,qx,qy,qz,qw\n");
    for k in 0..30 {
        if k == 15 {
            csv.push_str("0.15,0,0,oops,0,0,0,1\n");
        } else {
            csv.push_str(&format!("{},0,0,1,0,0,0,1\n", k as f64 * 0.01));
        }
    }
    let path = dir.path().join("bad.csv");
    fs::write(&path, csv).unwrap();
    let o = run(bin()
        .arg("analyze")
        .arg(&path)
        .arg("--report")
        .arg(dir.path().join("r.json")));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 17"), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("short_mission.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg.as_object_mut().unwrap().remove("seed");
    let path = dir.path().join("noseed.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = run(bin()
        .arg("simulate")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_bad_input() {
    let o = run(bin().arg("simulate").arg("/nonexistent/config.json"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_needs_at_least_one_frame() {
    let o = run(bin().args(["bench", "--frames", "0"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_sim_reports_offered_load() {
    let o = run(bin().args(["bench", "--frames", "100", "--transport", "sim"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("100 returned"), "{stdout}");
    assert!(stdout.contains("offered 62.40 kbps"), "{stdout}");
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_short(a.path());
    simulate_short(b.path());
    for f in [
        "vision_pose_log.csv",
        "mission_log.csv",
        "resource_log.csv",
        "core_stats.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
