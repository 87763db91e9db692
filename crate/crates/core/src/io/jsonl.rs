//! JSONL stream records: one UTF-8 JSON object per line.
//!
//! IMU: `{"t": <s>, "acc": [x,y,z], "gyr": [x,y,z], "mag": [x,y,z]}`
//! Flow: `{"t": <s>, "v": [vx,vy], "bw": <ratio>, "bg": [gx,gy]}` (bg optional)

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{FlowSample, ImuSample, Vec3};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImuRecord {
    pub t: f64,
    pub acc: [f64; 3],
    pub gyr: [f64; 3],
    pub mag: [f64; 3],
}

impl From<&ImuSample> for ImuRecord {
    fn from(s: &ImuSample) -> Self {
        ImuRecord {
            t: s.t,
            acc: [s.accel.x, s.accel.y, s.accel.z],
            gyr: [s.gyro.x, s.gyro.y, s.gyro.z],
            mag: [s.mag.x, s.mag.y, s.mag.z],
        }
    }
}

impl From<&ImuRecord> for ImuSample {
    fn from(r: &ImuRecord) -> Self {
        ImuSample {
            t: r.t,
            accel: Vec3::new(r.acc[0], r.acc[1], r.acc[2]),
            gyro: Vec3::new(r.gyr[0], r.gyr[1], r.gyr[2]),
            mag: Vec3::new(r.mag[0], r.mag[1], r.mag[2]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    pub v: [f64; 2],
    pub bw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bg: Option<[f64; 2]>,
}

impl From<&FlowSample> for FlowRecord {
    fn from(s: &FlowSample) -> Self {
        FlowRecord { t: s.t, v: s.v, bw: s.bbox_width_ratio, bg: s.background_flow }
    }
}

impl From<&FlowRecord> for FlowSample {
    fn from(r: &FlowRecord) -> Self {
        FlowSample { t: r.t, v: r.v, bbox_width_ratio: r.bw, background_flow: r.bg }
    }
}

pub fn imu_to_jsonl(stream: &[ImuSample]) -> Result<String> {
    let mut out = String::new();
    for s in stream {
        out.push_str(&serde_json::to_string(&ImuRecord::from(s))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn imu_from_jsonl(text: &str) -> Result<Vec<ImuSample>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let r: ImuRecord = serde_json::from_str(l)
                .map_err(|e| Error::Io(format!("bad IMU record: {e}")))?;
            Ok(ImuSample::from(&r))
        })
        .collect()
}

pub fn flow_to_jsonl(stream: &[FlowSample]) -> Result<String> {
    let mut out = String::new();
    for s in stream {
        out.push_str(&serde_json::to_string(&FlowRecord::from(s))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn flow_from_jsonl(text: &str) -> Result<Vec<FlowSample>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let r: FlowRecord = serde_json::from_str(l)
                .map_err(|e| Error::Io(format!("bad flow record: {e}")))?;
            Ok(FlowSample::from(&r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imu_roundtrip() {
        let stream = vec![ImuSample {
            t: 0.01,
            accel: Vec3::new(0.1, -0.2, 9.81),
            gyro: Vec3::new(0.0, 0.5, -0.25),
            mag: Vec3::new(22.0, 0.0, -42.0),
        }];
        let text = imu_to_jsonl(&stream).unwrap();
        assert!(text.contains("\"acc\""));
        let back = imu_from_jsonl(&text).unwrap();
        assert_eq!(back, stream);
    }

    #[test]
    fn flow_roundtrip_with_and_without_bg() {
        let stream = vec![
            FlowSample { t: 0.0, v: [1.0, -2.0], bbox_width_ratio: 0.12, background_flow: None },
            FlowSample { t: 1.0 / 30.0, v: [0.5, 0.0], bbox_width_ratio: 0.12, background_flow: Some([0.1, 0.2]) },
        ];
        let text = flow_to_jsonl(&stream).unwrap();
        // bg omitted when absent
        let first_line = text.lines().next().unwrap();
        assert!(!first_line.contains("bg"));
        let back = flow_from_jsonl(&text).unwrap();
        assert_eq!(back, stream);
    }

    #[test]
    fn rejects_garbage() {
        assert!(imu_from_jsonl("{not json}").is_err());
    }
}
