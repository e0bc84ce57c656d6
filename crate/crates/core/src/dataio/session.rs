//! Plain-text session recordings.
//!
//! ```text
//! gyrocal-session 1
//! units gyro=deg/s accel=m/s^2 time=s
//! rotor_speed 1.00000000e1
//! gravity 9.80665000e0
//! segment static_gyro 0
//! <t>,<gx>,<gy>,<gz>,<ax>,<ay>,<az>
//! ...
//! segment static_accel 1
//! ...
//! segment rotating 1 count=1000
//! <one row holding the mean of 1000 samples>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Every `rotating`
//! segment needs a `static_accel` segment with the same pose id; `static_accel`
//! segments without a rotating partner are accelerometer-only poses. A segment
//! header may carry `count=N`, in which case it holds exactly one row that
//! stands for the mean of N samples.
//!
//! Writes are byte-deterministic: numbers use nine significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::calibration::{estimate_gyro_bias, AccelPose, CalibrationSession, PoseObservation, RowMode, SampleMean};
use crate::error::{Error, Result};
use crate::sensor_models::Vec3;

use super::write_atomic;

pub const FORMAT_NAME: &str = "gyrocal-session";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentKind {
    StaticAccel,
    StaticGyro,
    Rotating,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::StaticAccel => "static_accel",
            SegmentKind::StaticGyro => "static_gyro",
            SegmentKind::Rotating => "rotating",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "static_accel" => Some(SegmentKind::StaticAccel),
            "static_gyro" => Some(SegmentKind::StaticGyro),
            "rotating" => Some(SegmentKind::Rotating),
            _ => None,
        }
    }
}

/// One sample: time in seconds, gyroscope in deg/s, accelerometer in m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub gyro: Vec3,
    pub accel: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub pose: u32,
    /// Set when the single row summarises this many samples.
    pub count: Option<usize>,
    pub rows: Vec<Row>,
}

impl Segment {
    pub fn new(kind: SegmentKind, pose: u32, rows: Vec<Row>) -> Self {
        Segment {
            kind,
            pose,
            count: None,
            rows,
        }
    }

    pub fn summary(kind: SegmentKind, pose: u32, row: Row, count: usize) -> Self {
        Segment {
            kind,
            pose,
            count: Some(count),
            rows: vec![row],
        }
    }

    /// Number of samples represented.
    pub fn weight(&self) -> usize {
        self.count.unwrap_or(self.rows.len())
    }

    fn mean(&self, f: impl Fn(&Row) -> Vec3) -> Option<Vec3> {
        let v: Vec<Vec3> = self.rows.iter().map(f).collect();
        Vec3::mean(&v)
    }
}

/// Contents of a session file.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub rotor_speed: f64,
    pub gravity: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy)]
struct Units {
    gyro_to_deg: f64,
    accel_to_ms2: f64,
}

fn parse_units(fields: &[&str], gravity_hint: f64) -> std::result::Result<Units, String> {
    let mut gyro = None;
    let mut accel = None;
    let mut time = None;
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| format!("malformed units entry `{f}`"))?;
        match k {
            "gyro" => gyro = Some(v),
            "accel" => accel = Some(v),
            "time" => time = Some(v),
            _ => return Err(format!("unknown units key `{k}`")),
        }
    }
    let gyro_to_deg = match gyro {
        Some("deg/s") => 1.0,
        Some("rad/s") => 180.0 / std::f64::consts::PI,
        Some(u) => return Err(format!("unknown gyroscope units `{u}`")),
        None => return Err("units line lacks gyro=".into()),
    };
    let accel_to_ms2 = match accel {
        Some("m/s^2") => 1.0,
        Some("g") => gravity_hint,
        Some(u) => return Err(format!("unknown accelerometer units `{u}`")),
        None => return Err("units line lacks accel=".into()),
    };
    match time {
        Some("s") => {}
        Some(u) => return Err(format!("unknown time units `{u}`")),
        None => return Err("units line lacks time=".into()),
    }
    Ok(Units {
        gyro_to_deg,
        accel_to_ms2,
    })
}

fn parse_f64(s: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse {what} `{}`", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} is not finite"))
    }
}

impl Recording {
    pub fn parse(text: &str, path: &Path) -> Result<Recording> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (n, magic) = lines.next().ok_or_else(|| err(1, "empty session file".into()))?;
        match magic.split_whitespace().collect::<Vec<_>>().as_slice() {
            [FORMAT_NAME, v] if *v == FORMAT_VERSION.to_string() => {}
            [FORMAT_NAME, v] => return Err(err(n, format!("unsupported format version {v}"))),
            _ => return Err(err(n, format!("expected `{FORMAT_NAME} {FORMAT_VERSION}` header"))),
        }

        let mut units_line: Option<(usize, Vec<String>)> = None;
        let mut rotor_speed = None;
        let mut gravity = None;
        let mut segments: Vec<(usize, Segment)> = Vec::new();
        let mut units: Option<Units> = None;

        for (n, line) in lines {
            let mut words = line.split_whitespace();
            let first = words.next().unwrap_or_default();
            if segments.is_empty() && first != "segment" {
                let rest: Vec<&str> = words.collect();
                match first {
                    "units" => units_line = Some((n, rest.iter().map(|s| s.to_string()).collect())),
                    "rotor_speed" | "gravity" => {
                        let [v] = rest.as_slice() else {
                            return Err(err(n, format!("`{first}` takes one value")));
                        };
                        let v = parse_f64(v, first).map_err(|m| err(n, m))?;
                        if !(v > 0.0) {
                            return Err(err(n, format!("{first} must be positive")));
                        }
                        if first == "rotor_speed" {
                            rotor_speed = Some(v);
                        } else {
                            gravity = Some(v);
                        }
                    }
                    _ => return Err(err(n, format!("unknown header key `{first}`"))),
                }
                continue;
            }

            if first == "segment" {
                if units.is_none() {
                    let (un, fields) = units_line
                        .as_ref()
                        .ok_or_else(|| err(n, "missing units declaration before first segment".into()))?;
                    let refs: Vec<&str> = fields.iter().map(String::as_str).collect();
                    units =
                        Some(parse_units(&refs, gravity.unwrap_or(crate::STANDARD_GRAVITY)).map_err(|m| err(*un, m))?);
                }
                let rest: Vec<&str> = words.collect();
                let (kind, pose, extra) = match rest.as_slice() {
                    [kind, pose, extra @ ..] => (kind, pose, extra),
                    _ => return Err(err(n, "segment header needs a kind and a pose id".into())),
                };
                let kind = SegmentKind::parse(kind).ok_or_else(|| err(n, format!("unknown segment kind `{kind}`")))?;
                let pose: u32 = pose.parse().map_err(|_| err(n, format!("invalid pose id `{pose}`")))?;
                let mut count = None;
                for e in extra {
                    match e.split_once('=') {
                        Some(("count", v)) => {
                            let c: usize = v.parse().map_err(|_| err(n, format!("invalid count `{v}`")))?;
                            if c == 0 {
                                return Err(err(n, "count must be at least 1".into()));
                            }
                            count = Some(c);
                        }
                        _ => return Err(err(n, format!("unknown segment attribute `{e}`"))),
                    }
                }
                segments.push((
                    n,
                    Segment {
                        kind,
                        pose,
                        count,
                        rows: Vec::new(),
                    },
                ));
                continue;
            }

            let units = units.expect("units are parsed with the first segment");
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(err(
                    n,
                    format!("expected 7 comma-separated values, found {}", fields.len()),
                ));
            }
            let mut v = [0.0; 7];
            for (slot, (f, name)) in v
                .iter_mut()
                .zip(fields.iter().zip(["t", "gx", "gy", "gz", "ax", "ay", "az"]))
            {
                *slot = parse_f64(f, name).map_err(|m| err(n, m))?;
            }
            let (_, seg) = segments.last_mut().expect("rows follow a segment header");
            let row = Row {
                t: v[0],
                gyro: Vec3::new(v[1], v[2], v[3]) * units.gyro_to_deg,
                accel: Vec3::new(v[4], v[5], v[6]) * units.accel_to_ms2,
            };
            if let Some(prev) = seg.rows.last() {
                if row.t < prev.t {
                    return Err(err(n, format!("timestamp {} decreases within segment", row.t)));
                }
            }
            seg.rows.push(row);
        }

        let last = text.lines().count().max(1);
        let rotor_speed = rotor_speed.ok_or_else(|| err(last, "missing rotor_speed".into()))?;
        let gravity = gravity.ok_or_else(|| err(last, "missing gravity".into()))?;
        if units.is_none() && units_line.is_none() {
            return Err(err(last, "missing units declaration".into()));
        }
        for (n, s) in &segments {
            if s.rows.is_empty() {
                return Err(err(
                    *n,
                    format!("{} segment for pose {} has no rows", s.kind.as_str(), s.pose),
                ));
            }
            if s.count.is_some() && s.rows.len() != 1 {
                return Err(err(*n, "a segment with count= must hold exactly one row".into()));
            }
        }
        Ok(Recording {
            rotor_speed,
            gravity,
            segments: segments.into_iter().map(|(_, s)| s).collect(),
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_NAME} {FORMAT_VERSION}");
        let _ = writeln!(out, "units gyro=deg/s accel=m/s^2 time=s");
        let _ = writeln!(out, "rotor_speed {}", fmt_num(self.rotor_speed));
        let _ = writeln!(out, "gravity {}", fmt_num(self.gravity));
        for s in &self.segments {
            let _ = write!(out, "segment {} {}", s.kind.as_str(), s.pose);
            if let Some(c) = s.count {
                let _ = write!(out, " count={c}");
            }
            out.push('\n');
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt_num(r.t),
                    fmt_num(r.gyro.x),
                    fmt_num(r.gyro.y),
                    fmt_num(r.gyro.z),
                    fmt_num(r.accel.x),
                    fmt_num(r.accel.y),
                    fmt_num(r.accel.z)
                );
            }
        }
        out
    }

    /// Collapses segments into the per-pose means the calibration consumes.
    pub fn to_session(&self, rows: RowMode) -> Result<CalibrationSession> {
        let mut static_accel: BTreeMap<u32, &Segment> = BTreeMap::new();
        let mut rotating: Vec<&Segment> = Vec::new();
        let mut static_gyro_sum = Vec3::ZERO;
        let mut static_gyro_count = 0usize;

        for s in &self.segments {
            match s.kind {
                SegmentKind::StaticAccel => {
                    if static_accel.insert(s.pose, s).is_some() {
                        return Err(Error::InvalidSession(format!(
                            "pose {} has more than one static_accel segment",
                            s.pose
                        )));
                    }
                }
                SegmentKind::Rotating => {
                    if rotating.iter().any(|r| r.pose == s.pose) {
                        return Err(Error::InvalidSession(format!(
                            "pose {} has more than one rotating segment",
                            s.pose
                        )));
                    }
                    rotating.push(s);
                }
                SegmentKind::StaticGyro => {
                    let gyro: Vec<Vec3> = s.rows.iter().map(|r| r.gyro).collect();
                    let mean = estimate_gyro_bias(&gyro)?;
                    static_gyro_sum += mean * s.weight() as f64;
                    static_gyro_count += s.weight();
                }
            }
        }
        if static_gyro_count == 0 {
            return Err(Error::NoStaticData);
        }

        let mut poses = Vec::new();
        for r in &rotating {
            let accel = static_accel.get(&r.pose).ok_or_else(|| {
                Error::InvalidSession(format!(
                    "rotating segment for pose {} has no matching static_accel segment",
                    r.pose
                ))
            })?;
            let accel_mean = accel.mean(|row| row.accel).expect("non-empty segment");
            match rows {
                RowMode::PerPose => poses.push(PoseObservation {
                    id: r.pose,
                    accel_mean,
                    accel_count: accel.weight(),
                    gyro_mean: r.mean(|row| row.gyro).expect("non-empty segment"),
                    rotating_accel_mean: r.mean(|row| row.accel).expect("non-empty segment"),
                    sample_count: r.weight(),
                }),
                RowMode::PerSample => poses.extend(r.rows.iter().map(|row| PoseObservation {
                    id: r.pose,
                    accel_mean,
                    accel_count: accel.weight(),
                    gyro_mean: row.gyro,
                    rotating_accel_mean: row.accel,
                    sample_count: 1,
                })),
            }
        }

        let accel_only = static_accel
            .values()
            .filter(|s| !rotating.iter().any(|r| r.pose == s.pose))
            .map(|s| AccelPose {
                id: s.pose,
                mean: s.mean(|row| row.accel).expect("non-empty segment"),
                count: s.weight(),
            })
            .collect();

        Ok(CalibrationSession {
            poses,
            accel_only,
            rotor_speed: self.rotor_speed,
            gravity: self.gravity,
            static_gyro: SampleMean {
                mean: static_gyro_sum / static_gyro_count as f64,
                count: static_gyro_count,
            },
        })
    }

    /// Summary recording of a session: one `count=` row per segment.
    pub fn from_session(session: &CalibrationSession) -> Result<Recording> {
        if session.static_gyro.count == 0 {
            return Err(Error::NoStaticData);
        }
        let row = |gyro: Vec3, accel: Vec3| Row { t: 0.0, gyro, accel };
        let mut segments = vec![Segment::summary(
            SegmentKind::StaticGyro,
            0,
            row(session.static_gyro.mean, Vec3::ZERO),
            session.static_gyro.count,
        )];
        for p in &session.poses {
            segments.push(Segment::summary(
                SegmentKind::StaticAccel,
                p.id,
                row(Vec3::ZERO, p.accel_mean),
                p.accel_count,
            ));
            segments.push(Segment::summary(
                SegmentKind::Rotating,
                p.id,
                row(p.gyro_mean, p.rotating_accel_mean),
                p.sample_count,
            ));
        }
        for a in &session.accel_only {
            segments.push(Segment::summary(
                SegmentKind::StaticAccel,
                a.id,
                row(Vec3::ZERO, a.mean),
                a.count,
            ));
        }
        Ok(Recording {
            rotor_speed: session.rotor_speed,
            gravity: session.gravity,
            segments,
        })
    }
}

/// Nine significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn read_recording(path: &Path) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Recording::parse(&text, path)
}

pub fn write_recording(recording: &Recording, path: &Path) -> Result<()> {
    write_atomic(path, recording.render().as_bytes())
}

pub fn read_session(path: &Path) -> Result<CalibrationSession> {
    read_recording(path)?.to_session(RowMode::PerPose)
}

/// Writes the per-pose summary of `session`; use [`write_recording`] to keep
/// every sample.
pub fn write_session(session: &CalibrationSession, path: &Path) -> Result<()> {
    write_recording(&Recording::from_session(session)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.session")
    }

    const MINIMAL: &str = "\
gyrocal-session 1
# four poses, one sample each
units gyro=deg/s accel=m/s^2 time=s
rotor_speed 10
gravity 9.80665
segment static_gyro 0
0.0,0.1,0.2,0.3,0,0,9.8
0.01,0.1,0.2,0.3,0,0,9.8
segment static_accel 1
0.1,0,0,0,1,2,9
segment rotating 1
0.2,5,5,5,1,2,9
0.3,5,5,6,1,2,9
segment static_accel 2
0.4,0,0,0,2,1,9
segment rotating 2
0.5,4,5,6,2,1,9
segment static_accel 3
0.6,0,0,0,-1,2,9
segment rotating 3
0.7,6,5,4,-1,2,9
segment static_accel 4
0.8,0,0,0,1,-2,9
segment rotating 4
0.9,5,6,4,1,-2,9
segment static_accel 9
1.0,0,0,0,9,0,0
";

    #[test]
    fn parses_minimal_file() {
        let rec = Recording::parse(MINIMAL, &p()).unwrap();
        let s = rec.to_session(RowMode::PerPose).unwrap();
        assert_eq!(s.poses.len(), 4);
        assert_eq!(s.rotor_speed, 10.0);
        assert_eq!(s.static_gyro.count, 2);
        assert!((s.static_gyro.mean - Vec3::new(0.1, 0.2, 0.3)).max_abs() < 1e-15);
        assert_eq!(s.poses[0].gyro_mean, Vec3::new(5.0, 5.0, 5.5));
        assert_eq!(s.poses[0].sample_count, 2);
        assert_eq!(s.accel_only.len(), 1);
        assert_eq!(s.accel_only[0].id, 9);

        let per_sample = rec.to_session(RowMode::PerSample).unwrap();
        assert_eq!(per_sample.poses.len(), 5);
    }

    #[test]
    fn missing_pairing_names_pose() {
        let text = MINIMAL
            .replace("segment static_accel 4\n0.8,0,0,0,1,-2,9\n", "")
            .replace("segment rotating 4", "segment rotating 5");
        let rec = Recording::parse(&text, &p()).unwrap();
        let err = rec.to_session(RowMode::PerPose).unwrap_err();
        assert!(err.to_string().contains("pose 5"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = MINIMAL.replace("0.5,4,5,6,2,1,9", "0.5,4,five,6,2,1,9");
        let err = Recording::parse(&text, &p()).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 17);
                assert!(message.contains("gy"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
        let text = MINIMAL.replace("0.5,4,5,6,2,1,9", "0.5,4,5,6,2,1");
        assert!(matches!(
            Recording::parse(&text, &p()),
            Err(Error::Parse { line: 17, .. })
        ));
    }

    #[test]
    fn rejects_unknown_units() {
        let text = MINIMAL.replace("gyro=deg/s", "gyro=rpm");
        let err = Recording::parse(&text, &p()).unwrap_err();
        assert!(err.to_string().contains("rpm"), "{err}");
    }

    #[test]
    fn radian_units_are_converted() {
        let text = MINIMAL.replace("gyro=deg/s", "gyro=rad/s");
        let rec = Recording::parse(&text, &p()).unwrap();
        let g = rec.segments[2].rows[0].gyro;
        assert!((g.x - 5.0f64.to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn rejects_decreasing_timestamps() {
        let text = MINIMAL.replace("0.3,5,5,6,1,2,9", "0.1,5,5,6,1,2,9");
        assert!(matches!(Recording::parse(&text, &p()), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_static_gyro() {
        let text = MINIMAL.replace(
            "segment static_gyro 0\n0.0,0.1,0.2,0.3,0,0,9.8\n0.01,0.1,0.2,0.3,0,0,9.8\n",
            "",
        );
        let rec = Recording::parse(&text, &p()).unwrap();
        assert!(matches!(rec.to_session(RowMode::PerPose), Err(Error::NoStaticData)));
    }

    #[test]
    fn recording_render_is_a_fixed_point() {
        let rec = Recording::parse(MINIMAL, &p()).unwrap();
        let text = rec.render();
        let again = Recording::parse(&text, &p()).unwrap();
        assert_eq!(again, rec);
        assert_eq!(again.render(), text);
    }

    #[test]
    fn session_summary_round_trip() {
        let s1 = Recording::parse(MINIMAL, &p())
            .unwrap()
            .to_session(RowMode::PerPose)
            .unwrap();
        let text = Recording::from_session(&s1).unwrap().render();
        let s2 = Recording::parse(&text, &p())
            .unwrap()
            .to_session(RowMode::PerPose)
            .unwrap();
        // One-sample-per-value inputs survive exactly; means are rounded once.
        assert_eq!(s2.poses.len(), s1.poses.len());
        for (a, b) in s1.poses.iter().zip(&s2.poses) {
            assert_eq!(a.sample_count, b.sample_count);
            assert!((a.gyro_mean - b.gyro_mean).max_abs() <= 1e-8 * a.gyro_mean.max_abs());
        }
        let text2 = Recording::from_session(&s2).unwrap().render();
        let s3 = Recording::parse(&text2, &p())
            .unwrap()
            .to_session(RowMode::PerPose)
            .unwrap();
        assert_eq!(s3, s2);
        assert_eq!(text2, text);
    }

    #[test]
    fn empty_static_gyro_cannot_be_written() {
        let mut s = Recording::parse(MINIMAL, &p())
            .unwrap()
            .to_session(RowMode::PerPose)
            .unwrap();
        s.static_gyro.count = 0;
        assert!(matches!(Recording::from_session(&s), Err(Error::NoStaticData)));
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(10.0), "1.00000000e1");
        assert_eq!(fmt_num(-0.0123456789), "-1.23456789e-2");
    }
}
