use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::autopilot::MissionEntry;
use crate::model::{validate_pose, AckStatus, FlightMode, HealthStatus, PoseSample, Quaternion, ResourceSample};

use super::AnalyzerError;

pub const VISION_HEADER: [&str; 8] = ["t", "x", "y", "z", "qx", "qy", "qz", "qw"];
pub const MISSION_HEADER: [&str; 5] = ["t", "mode", "health", "ack_cmd_id", "ack_status"];
pub const RESOURCE_HEADER: [&str; 4] = ["t", "cpu_pct", "mem_mb", "bandwidth_kbps"];

/// Pose samples with timestamps relative to the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VisionLog {
    pub samples: Vec<PoseSample>,
    /// Timestamp of the first sample as written in the source.
    pub origin_s: f64,
}

impl VisionLog {
    /// Builds a log from samples already in mission-relative time.
    pub fn from_samples(mut samples: Vec<PoseSample>) -> Result<Self, AnalyzerError> {
        if samples.is_empty() {
            return Err(AnalyzerError::EmptyLog);
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        for (i, w) in samples.windows(2).enumerate() {
            if w[0].t == w[1].t {
                return Err(AnalyzerError::DuplicateTimestamp { line: i + 3 });
            }
        }
        let origin_s = samples[0].t;
        for s in &mut samples {
            s.t -= origin_s;
        }
        Ok(Self { samples, origin_s })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Mission entries with timestamps relative to the first entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionLog {
    pub entries: Vec<MissionEntry>,
    pub origin_s: f64,
}

impl MissionLog {
    pub fn from_entries(mut entries: Vec<MissionEntry>) -> Result<Self, AnalyzerError> {
        if entries.is_empty() {
            return Err(AnalyzerError::EmptyLog);
        }
        entries.sort_by(|a, b| a.t.total_cmp(&b.t));
        let origin_s = entries[0].t;
        for e in &mut entries {
            e.t -= origin_s;
        }
        Ok(Self { entries, origin_s })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceLog {
    pub samples: Vec<ResourceSample>,
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn malformed(line: u64, reason: impl Into<String>) -> AnalyzerError {
    AnalyzerError::MalformedRow {
        line: line as usize,
        reason: reason.into(),
    }
}

fn csv_error(e: csv::Error) -> AnalyzerError {
    let line = e.position().map_or(0, |p| p.line());
    malformed(line, e.to_string())
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), AnalyzerError> {
    let header = rdr.headers().map_err(csv_error)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(malformed(1, format!("expected header `{}`", expected.join(","))));
    }
    Ok(())
}

fn records<R: Read>(
    rdr: &mut csv::Reader<R>,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord), AnalyzerError>> + '_ {
    rdr.records().map(|r| {
        let rec = r.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((line, rec))
    })
}

fn float(field: &str, name: &str, line: u64) -> Result<f64, AnalyzerError> {
    let v: f64 = field
        .parse()
        .map_err(|_| malformed(line, format!("{name}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("{name} is not finite")));
    }
    Ok(v)
}

pub fn load_vision_log<R: Read>(source: R) -> Result<VisionLog, AnalyzerError> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &VISION_HEADER)?;
    let mut rows = Vec::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        if rec.len() != VISION_HEADER.len() {
            return Err(malformed(line, format!("expected 8 fields, found {}", rec.len())));
        }
        let mut v = [0.0; 8];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = float(&rec[i], VISION_HEADER[i], line)?;
        }
        let sample = PoseSample::new(v[0], [v[1], v[2], v[3]], Quaternion::new(v[4], v[5], v[6], v[7]));
        validate_pose(&sample).map_err(|e| malformed(line, e.to_string()))?;
        rows.push((line, sample));
    }
    if rows.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    rows.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then(a.0.cmp(&b.0)));
    for w in rows.windows(2) {
        if w[0].1.t == w[1].1.t {
            return Err(AnalyzerError::DuplicateTimestamp { line: w[1].0 as usize });
        }
    }
    VisionLog::from_samples(rows.into_iter().map(|(_, s)| s).collect())
}

pub fn load_mission_log<R: Read>(source: R) -> Result<MissionLog, AnalyzerError> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &MISSION_HEADER)?;
    let mut entries = Vec::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        if !(rec.len() == 4 || rec.len() == 5) {
            return Err(malformed(line, format!("expected 4 or 5 fields, found {}", rec.len())));
        }
        let t = float(&rec[0], "t", line)?;
        let mode: FlightMode = rec[1]
            .parse()
            .map_err(|_| malformed(line, format!("unknown mode `{}`", &rec[1])))?;
        let health: HealthStatus = rec[2]
            .parse()
            .map_err(|_| malformed(line, format!("unknown health `{}`", &rec[2])))?;
        let id = &rec[3];
        let status = rec.get(4).unwrap_or("");
        let last_ack = match (id.is_empty(), status.is_empty()) {
            (true, true) => None,
            (false, false) => {
                let id: u32 = id
                    .parse()
                    .map_err(|_| malformed(line, format!("bad ack_cmd_id `{id}`")))?;
                let status: AckStatus = status
                    .parse()
                    .map_err(|_| malformed(line, format!("unknown ack_status `{status}`")))?;
                Some((id, status))
            }
            _ => return Err(malformed(line, "ack_cmd_id and ack_status must appear together")),
        };
        entries.push(MissionEntry {
            t,
            mode,
            health,
            last_ack,
        });
    }
    if entries.windows(2).any(|w| w[1].t < w[0].t) {
        entries.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    MissionLog::from_entries(entries)
}

pub fn load_resource_log<R: Read>(source: R) -> Result<ResourceLog, AnalyzerError> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &RESOURCE_HEADER)?;
    let mut samples = Vec::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        if rec.len() != RESOURCE_HEADER.len() {
            return Err(malformed(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let mut v = [0.0; 4];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = float(&rec[i], RESOURCE_HEADER[i], line)?;
        }
        let s = ResourceSample {
            t: v[0],
            cpu_pct: v[1],
            mem_mb: v[2],
            bandwidth_kbps: v[3],
        };
        s.validate().map_err(|e| malformed(line, e.to_string()))?;
        samples.push(s);
    }
    if samples.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(ResourceLog { samples })
}

fn open(path: &Path) -> Result<File, AnalyzerError> {
    File::open(path).map_err(|source| AnalyzerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_vision_log(path: &Path) -> Result<VisionLog, AnalyzerError> {
    load_vision_log(open(path)?)
}

pub fn read_mission_log(path: &Path) -> Result<MissionLog, AnalyzerError> {
    load_mission_log(open(path)?)
}

pub fn read_resource_log(path: &Path) -> Result<ResourceLog, AnalyzerError> {
    load_resource_log(open(path)?)
}

/// Timestamp with nine significant digits.
pub fn format_time(t: f64) -> String {
    let int_digits = if t.abs() < 1.0 {
        1
    } else {
        t.abs().log10().floor() as i32 + 1
    };
    let decimals = (9 - int_digits).max(0) as usize;
    format!("{t:.decimals$}")
}

pub fn write_vision_log<W: Write>(out: W, samples: &[PoseSample]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", VISION_HEADER.join(","))?;
    for s in samples {
        let q = s.orientation;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            format_time(s.t),
            s.position[0],
            s.position[1],
            s.position[2],
            q.x,
            q.y,
            q.z,
            q.w
        )?;
    }
    w.flush()
}

pub fn write_mission_log<W: Write>(out: W, entries: &[MissionEntry]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", MISSION_HEADER.join(","))?;
    for e in entries {
        let (id, status) = match e.last_ack {
            Some((id, s)) => (id.to_string(), s.as_str()),
            None => (String::new(), ""),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            format_time(e.t),
            e.mode.as_str(),
            e.health.as_str(),
            id,
            status
        )?;
    }
    w.flush()
}

pub fn write_resource_log<W: Write>(out: W, samples: &[ResourceSample]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", RESOURCE_HEADER.join(","))?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{}",
            format_time(s.t),
            s.cpu_pct,
            s.mem_mb,
            s.bandwidth_kbps
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "t,x,y,z,qx,qy,qz,qw\n";

    #[test]
    fn three_rows() {
        let csv = format!("{HEAD}0.0,0,0,1,0,0,0,1\n0.01,0,0,1,0,0,0,1\n0.02,0,0,1,0,0,0,1\n");
        let log = load_vision_log(csv.as_bytes()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.samples[2].t, 0.02);
    }

    #[test]
    fn normalizes_to_first_sample() {
        let csv = format!("{HEAD}100.5,0,0,1,0,0,0,1\n100.0,0,0,1,0,0,0,1\n");
        let log = load_vision_log(csv.as_bytes()).unwrap();
        assert_eq!(log.origin_s, 100.0);
        assert_eq!(log.times(), vec![0.0, 0.5]);
    }

    #[test]
    fn six_fields_cite_line() {
        let csv = format!("{HEAD}0.0,0,0,1,0,0,0,1\n0.01,0,0,1,0,0\n");
        match load_vision_log(csv.as_bytes()) {
            Err(AnalyzerError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamp_cites_later_line() {
        let csv = format!("{HEAD}0.0,0,0,1,0,0,0,1\n0.5,0,0,1,0,0,0,1\n0.5,0,0,1,0,0,0,1\n");
        assert!(matches!(
            load_vision_log(csv.as_bytes()),
            Err(AnalyzerError::DuplicateTimestamp { line: 4 })
        ));
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        let csv = format!("{HEAD}0.0,0,0,1,0,0,0,2\n");
        assert!(matches!(
            load_vision_log(csv.as_bytes()),
            Err(AnalyzerError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn empty_logs() {
        assert!(matches!(load_vision_log(HEAD.as_bytes()), Err(AnalyzerError::EmptyLog)));
        assert!(matches!(
            load_mission_log("t,mode,health,ack_cmd_id,ack_status\n".as_bytes()),
            Err(AnalyzerError::EmptyLog)
        ));
    }

    #[test]
    fn mission_rows() {
        let csv = "t,mode,health,ack_cmd_id,ack_status\n12.5,GUIDED,HEALTHY,\n13.0,GUIDED,HEALTHY,4,SUCCESS\n";
        let log = load_mission_log(csv.as_bytes()).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.origin_s, 12.5);
        assert_eq!(log.entries[0].mode, FlightMode::Guided);
        assert_eq!(log.entries[0].last_ack, None);
        assert_eq!(log.entries[1].last_ack, Some((4, AckStatus::Success)));
    }

    #[test]
    fn unknown_mode_is_malformed() {
        let csv = "t,mode,health,ack_cmd_id,ack_status\n12.5,AUTO,HEALTHY,\n";
        assert!(matches!(
            load_mission_log(csv.as_bytes()),
            Err(AnalyzerError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn wrong_header() {
        let csv = "time,x,y,z,qx,qy,qz,qw\n0,0,0,0,0,0,0,1\n";
        assert!(matches!(
            load_vision_log(csv.as_bytes()),
            Err(AnalyzerError::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn time_formatting() {
        assert_eq!(format_time(0.0), "0.00000000");
        assert_eq!(format_time(179.62), "179.620000");
        assert_eq!(format_time(1935.0), "1935.00000");
    }

    #[test]
    fn writers_round_trip() {
        let samples: Vec<PoseSample> = (0..5)
            .map(|i| {
                PoseSample::new(
                    i as f64 * 0.01,
                    [0.1 * i as f64, -0.25, 1.0],
                    Quaternion::from_yaw_deg(-90.0),
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_vision_log(&mut buf, &samples).unwrap();
        let log = load_vision_log(buf.as_slice()).unwrap();
        assert_eq!(log.samples, samples);

        let entries = vec![
            MissionEntry {
                t: 0.0,
                mode: FlightMode::Stabilize,
                health: HealthStatus::Healthy,
                last_ack: None,
            },
            MissionEntry {
                t: 1.0,
                mode: FlightMode::Stabilize,
                health: HealthStatus::Degraded,
                last_ack: Some((1, AckStatus::Rejected)),
            },
        ];
        let mut buf = Vec::new();
        write_mission_log(&mut buf, &entries).unwrap();
        assert_eq!(load_mission_log(buf.as_slice()).unwrap().entries, entries);
    }
}
