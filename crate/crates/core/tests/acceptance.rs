//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybridfsw_core::analyzer::{
    centered_difference, continuity_and_rate, detect_dropouts, finite_diff_accel, finite_diff_velocity,
    interval_series, load_mission_log, load_vision_log, mode_distribution, read_mission_log, read_vision_log,
    CoreStats, GapPhase, LatencyHistogram, TimingMetrics, VisionLog,
};
use hybridfsw_core::bridge::{decode_frame, encode_frame, Message, MsgType};
use hybridfsw_core::mission::{CORE_STATS_FILE, MISSION_LOG_FILE, RESOURCE_LOG_FILE, VISION_LOG_FILE};
use hybridfsw_core::{
    build_report, run_mission, write_outputs, FlightMode, MissionConfig, PoseSample, Quaternion, ReportInputs,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn reference_config() -> MissionConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference_mission.json");
    MissionConfig::from_path(&path).expect("reference_mission.json loads")
}

fn log_from_times(times: &[f64]) -> VisionLog {
    let samples = times
        .iter()
        .map(|&t| PoseSample::new(t, [0.0, 0.0, 1.0], Quaternion::IDENTITY))
        .collect();
    VisionLog::from_samples(samples).expect("valid log")
}

fn vision_csv(times: &[f64]) -> String {
    let mut s = String::from("t,x,y,z,qx,qy,qz,qw\n");
    for t in times {
        s.push_str(&format!("{t:.6},0,0,1,0,0,0,1\n"));
    }
    s
}

/// 100 Hz grid over [0, 180.6] with samples missing strictly inside each
/// (start, length) window.
fn grid_with_gaps(gaps: &[(f64, f64)]) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * 0.01;
        if t > 180.6 + 1e-9 {
            break;
        }
        if !gaps.iter().any(|&(s, len)| t > s + 1e-9 && t < s + len - 1e-9) {
            times.push(t);
        }
        k += 1;
    }
    for &(s, len) in gaps {
        times.push(s + len);
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    times
}

fn c1_gap_table() -> Outcome {
    let start = Instant::now();
    let table = [
        // (start, length s, expected ms, expected Hz, phase)
        (171.50, 8.1248, 8124.80, 0.12, FlightMode::Land),
        (166.87, 0.21096, 210.96, 4.74, FlightMode::Land),
        (72.29, 0.08105, 81.05, 12.34, FlightMode::Guided),
        (16.60, 0.0763, 76.30, 13.11, FlightMode::Guided),
        (36.76, 0.07622, 76.22, 13.12, FlightMode::Guided),
    ];
    let windows: Vec<(f64, f64)> = table.iter().map(|r| (r.0, r.1)).collect();
    let vision = load_vision_log(vision_csv(&grid_with_gaps(&windows)).as_bytes()).map_err(|e| e.to_string())?;
    let mission_csv = "t,mode,health,ack_cmd_id,ack_status\n\
        0.0,STABILIZE,HEALTHY,,\n\
        3.0,GUIDED,HEALTHY,2,SUCCESS\n\
        75.0,POSHOLD,HEALTHY,6,SUCCESS\n\
        90.0,GUIDED,HEALTHY,7,SUCCESS\n\
        160.0,LAND,HEALTHY,12,SUCCESS\n";
    let mission = load_mission_log(mission_csv.as_bytes()).map_err(|e| e.to_string())?;
    let report = build_report(&ReportInputs {
        vision: Some(&vision),
        mission: Some(&mission),
        ..ReportInputs::default()
    })
    .map_err(|e| e.to_string())?;
    check!(report.gap_count == 5, "expected 5 gaps, found {}", report.gap_count);
    for (g, row) in report.gaps.iter().zip(&table) {
        check!(
            (g.gap_ms - row.2).abs() <= 0.01,
            "gap {:.4} ms, expected {}",
            g.gap_ms,
            row.2
        );
        check!(
            (g.effective_hz - row.3).abs() <= 0.005,
            "rate {:.4} Hz, expected {}",
            g.effective_hz,
            row.3
        );
        check!(
            g.phase == GapPhase::Mode(row.4),
            "phase {:?}, expected {:?}",
            g.phase,
            row.4
        );
    }
    let took = start.elapsed();
    check!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("5 gaps, largest {:.2} ms, {took:.2?}", report.gaps[0].gap_ms))
}

fn c2_continuity() -> Outcome {
    let start = Instant::now();
    let n = 15_744usize;
    let mut t = 0.0;
    let mut times = vec![0.0];
    for i in 1..n {
        t += if i % 900 == 0 && i / 900 <= 16 { 0.060 } else { 0.010 };
        times.push(t);
    }
    let log = log_from_times(&times);
    let series = interval_series(&log).map_err(|e| e.to_string())?;
    let gaps = detect_dropouts(&series);
    let (continuity, _) = continuity_and_rate(&log, &gaps, None).map_err(|e| e.to_string())?;
    check!(gaps.len() == 16, "found {} gaps", gaps.len());
    let oracle = 100.0 * (1.0 - 16.0 / n as f64);
    check!(
        (continuity - oracle).abs() < 1e-9,
        "continuity {continuity} vs oracle {oracle}"
    );
    check!(format!("{continuity:.2}") == "99.90", "continuity {continuity:.4}");
    let took = start.elapsed();
    check!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("16 gaps in {n} samples, continuity {continuity:.2}%, {took:.2?}"))
}

fn c3_rate() -> Outcome {
    let n = 15_744usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * 180.6 / (n - 1) as f64).collect();
    let log = log_from_times(&times);
    let (_, rate) = continuity_and_rate(&log, &[], Some((0.0, 180.6))).map_err(|e| e.to_string())?;
    check!((rate - 87.18).abs() <= 0.02, "rate {rate:.4} Hz");
    Ok(format!("{n} samples over 180.6 s, {rate:.3} Hz"))
}

fn c4_mode_distribution() -> Outcome {
    let counts = [
        (FlightMode::Guided, 122, 62.6),
        (FlightMode::Land, 42, 21.5),
        (FlightMode::PosHold, 21, 10.8),
        (FlightMode::Stabilize, 10, 5.1),
    ];
    let mut csv = String::from("t,mode,health,ack_cmd_id,ack_status\n");
    let mut i = 0;
    for (mode, n, _) in counts {
        for _ in 0..n {
            csv.push_str(&format!("{},{},HEALTHY,,\n", i as f64 * 0.5, mode.as_str()));
            i += 1;
        }
    }
    check!(i == 195, "fixture has {i} entries");
    let log = load_mission_log(csv.as_bytes()).map_err(|e| e.to_string())?;
    let dist = mode_distribution(&log).map_err(|e| e.to_string())?;
    for (mode, _, pct) in counts {
        check!(
            dist.pct(mode) == pct,
            "{} got {}%, expected {pct}%",
            mode.as_str(),
            dist.pct(mode)
        );
    }
    Ok("GUIDED 62.6, LAND 21.5, POSHOLD 10.8, STABILIZE 5.1".into())
}

fn c5_commands() -> Outcome {
    let start = Instant::now();
    let out = run_mission(&reference_config()).map_err(|e| e.to_string())?;
    let c = out.core_stats.commands;
    check!(c.sent == 15, "sent {}", c.sent);
    check!(c.succeeded == 15, "succeeded {}", c.succeeded);
    check!(c.success_rate_pct == Some(100.0), "success {:?}", c.success_rate_pct);
    let took = start.elapsed();
    check!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!("15/15 succeeded, {took:.2?}"))
}

fn c6_freshness() -> Outcome {
    let clean = run_mission(&reference_config()).map_err(|e| e.to_string())?;
    let s = &clean.core_stats;
    check!(s.freshness_pct == 100.0, "lossless freshness {}", s.freshness_pct);
    let stale: u64 = s.channels.values().map(|c| c.stale_superseded + c.stale_aged).sum();
    check!(stale == 0, "lossless run has {stale} stale frames");

    let mut cfg = reference_config();
    cfg.transport.reorder_prob = 0.1;
    let faulty = run_mission(&cfg).map_err(|e| e.to_string())?;
    let s = &faulty.core_stats;
    let superseded: u64 = s.channels.values().map(|c| c.stale_superseded).sum();
    check!(superseded > 0, "reordering produced no superseded frames");
    let mut received = 0;
    for (name, c) in &s.channels {
        check!(
            c.received == c.fresh + c.stale_superseded + c.stale_aged,
            "{name}: {} received vs {} + {} + {}",
            c.received,
            c.fresh,
            c.stale_superseded,
            c.stale_aged
        );
        received += c.received;
    }
    check!(
        received + s.decode_errors == faulty.uplink.delivered,
        "core saw {received} frames, link delivered {}",
        faulty.uplink.delivered
    );
    Ok(format!(
        "lossless 100%, reorder 0.1 gives {superseded} superseded, freshness {:.2}%",
        s.freshness_pct
    ))
}

fn c7_finite_differences() -> Outcome {
    let h = 1.0 / 128.0;
    let t: Vec<f64> = (0..=512).map(|k| k as f64 * h).collect();
    let samples: Vec<PoseSample> = t
        .iter()
        .map(|&t| PoseSample::new(t, [t * t, 0.0, 0.0], Quaternion::IDENTITY))
        .collect();
    let log = VisionLog::from_samples(samples).map_err(|e| e.to_string())?;
    let v = finite_diff_velocity(&log).map_err(|e| e.to_string())?;
    let a = finite_diff_accel(&v).map_err(|e| e.to_string())?;
    for (ti, vi) in v.t.iter().zip(&v.values) {
        check!(vi[0] == 2.0 * ti, "v({ti}) = {}", vi[0]);
    }
    for ai in &a.values {
        check!(ai[0] == 2.0, "a = {}", ai[0]);
    }

    let sin_err = |dt: f64| -> Result<f64, String> {
        let n = (std::f64::consts::TAU / dt) as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let x: Vec<[f64; 3]> = t.iter().map(|t| [t.sin(), 0.0, 0.0]).collect();
        let d = centered_difference(&t, &x).map_err(|e| e.to_string())?;
        Ok(d.t
            .iter()
            .zip(&d.values)
            .map(|(t, v)| (v[0] - t.cos()).abs())
            .fold(0.0, f64::max))
    };
    let e10 = sin_err(0.010)?;
    let e5 = sin_err(0.005)?;
    check!(e10 <= 2e-5, "sin error {e10:e} at 10 ms");
    let ratio = e10 / e5;
    check!(ratio >= 3.9, "halving ratio {ratio:.3}");
    Ok(format!("t^2 exact, sin error {e10:.2e}, halving ratio {ratio:.3}"))
}

fn sort_percentile(values: &[f64], p: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = (1..=n).find(|k| 100 * k >= p * n).unwrap();
    sorted[k - 1]
}

fn c8_percentiles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(95_99);
    for i in 0..1000 {
        let n = rng.random_range(1..=2000);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.02) {
                    rng.random_range(20.0..500.0)
                } else {
                    rng.random_range(8.0..15.0)
                }
            })
            .collect();
        let m = TimingMetrics::from_values(&values).map_err(|e| e.to_string())?;
        let (p95, p99) = (sort_percentile(&values, 95), sort_percentile(&values, 99));
        check!(m.p95 == p95, "series {i} (n={n}): p95 {} vs {p95}", m.p95);
        check!(m.p99 == p99, "series {i} (n={n}): p99 {} vs {p99}", m.p99);
    }
    Ok("1000 series match the sort oracle".into())
}

fn c9_codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    for i in 0..10_000 {
        let msg_type = MsgType::ALL[rng.random_range(0..MsgType::ALL.len())];
        let seq = rng.next_u32();
        let ns = rng.next_u64();
        let mut payload = vec![0u8; rng.random_range(0..=512)];
        rng.fill_bytes(&mut payload);
        let bytes = encode_frame(msg_type, seq, ns, &payload).map_err(|e| e.to_string())?;
        let f = decode_frame(&bytes).map_err(|e| format!("frame {i}: {e}"))?;
        check!(
            f.header.msg_type == msg_type && f.header.seq == seq && f.header.send_time_ns == ns && f.payload == payload,
            "frame {i} did not round-trip"
        );
    }
    let msg = Message::PoseTelemetry {
        position: [1.25, -0.5, 1.38],
        orientation: Quaternion::from_yaw_deg(-90.0),
    };
    let frame =
        encode_frame(MsgType::PoseTelemetry, 42, 16_600_000_000, &msg.encode_payload()).map_err(|e| e.to_string())?;
    let mut flips = 0;
    for pos in 0..frame.len() {
        for mask in 1..=255u8 {
            let mut bad = frame.clone();
            bad[pos] ^= mask;
            check!(
                decode_frame(&bad).is_err(),
                "flip {mask:#04x} at byte {pos} went undetected"
            );
            flips += 1;
        }
    }
    Ok(format!(
        "10000 frames round-trip, {flips}/{flips} single-byte flips detected"
    ))
}

fn c10_determinism() -> Outcome {
    let start = Instant::now();
    let cfg = reference_config();
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut reports = Vec::new();
    for d in &dirs {
        let out = run_mission(&cfg).map_err(|e| e.to_string())?;
        write_outputs(&out, d.path()).map_err(|e| e.to_string())?;
        let vision = read_vision_log(&d.path().join(VISION_LOG_FILE)).map_err(|e| e.to_string())?;
        let mission = read_mission_log(&d.path().join(MISSION_LOG_FILE)).map_err(|e| e.to_string())?;
        let stats = CoreStats::read(&d.path().join(CORE_STATS_FILE)).map_err(|e| e.to_string())?;
        let report = build_report(&ReportInputs {
            vision: Some(&vision),
            mission: Some(&mission),
            core_stats: Some(&stats),
            window: Some((0.0, 180.6)),
            ..ReportInputs::default()
        })
        .map_err(|e| e.to_string())?;
        let path = d.path().join("report.json");
        report
            .write(&path, Some(&d.path().join("latency_hist.csv")))
            .map_err(|e| e.to_string())?;
        reports.push(report);
    }
    for name in [
        VISION_LOG_FILE,
        MISSION_LOG_FILE,
        RESOURCE_LOG_FILE,
        CORE_STATS_FILE,
        "report.json",
        "latency_hist.csv",
    ] {
        let a = fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        check!(a == b, "{name} differs between runs");
    }
    let r = &reports[0];
    let took = start.elapsed();
    check!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!(
        "byte-identical outputs; {} samples, continuity {:.2}%, {:.2} Hz, {took:.2?}",
        r.mission_summary.vision_samples, r.continuity_pct, r.effective_rate_hz
    ))
}

fn c11_histogram() -> Outcome {
    let inside = [8.5, 9.5, 10.5, 11.5, 12.5, 13.5, 14.5];
    let outside = [5.5, 6.5, 15.5, 17.5, 25.5, 60.5];
    let mut rng = ChaCha8Rng::seed_from_u64(6665);
    let mut dts: Vec<f64> = (0..6665).map(|i| inside[i % inside.len()]).collect();
    dts.extend((0..3335).map(|i| outside[i % outside.len()]));
    for i in (1..dts.len()).rev() {
        dts.swap(i, rng.random_range(0..=i));
    }
    let mut t = 0.0;
    let mut times = vec![0.0];
    for dt in &dts {
        t += dt / 1000.0;
        times.push(t);
    }
    let vision = log_from_times(&times);
    let report = build_report(&ReportInputs {
        vision: Some(&vision),
        ..ReportInputs::default()
    })
    .map_err(|e| e.to_string())?;
    let hist = &report.latency_histogram;
    check!(hist.total() == 10_000, "histogram holds {} intervals", hist.total());
    let mass = hist.mass_pct(8.0, 15.0);
    check!((mass - 66.65).abs() <= 0.01, "mass {mass:.4}%");
    let direct = LatencyHistogram::from_intervals(&dts).mass_pct(8.0, 15.0);
    check!((direct - 66.65).abs() <= 0.01, "direct mass {direct:.4}%");
    Ok(format!("{mass:.2}% of intervals in [8, 15) ms"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("C1 dropout table", c1_gap_table),
        ("C2 continuity", c2_continuity),
        ("C3 effective rate", c3_rate),
        ("C4 mode distribution", c4_mode_distribution),
        ("C5 command success", c5_commands),
        ("C6 freshness", c6_freshness),
        ("C7 finite differences", c7_finite_differences),
        ("C8 percentile oracle", c8_percentiles),
        ("C9 codec integrity", c9_codec),
        ("C10 determinism", c10_determinism),
        ("C11 latency histogram", c11_histogram),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
