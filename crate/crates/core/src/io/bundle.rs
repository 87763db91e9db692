//! Segment bundles on disk: a directory with `manifest.json`, `imu.jsonl`,
//! and one `flow_<k>.jsonl` per candidate. A dataset directory holds one
//! bundle per segment plus `split.json` listing bundle ids per split.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{Dataset, GestureClass, NoiseTier, Segment};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleManifest {
    pub target_index: usize,
    pub distance_m: f64,
    pub gesture: String,
    pub seed: u64,
    pub tier: String,
    pub n_candidates: usize,
    pub subject: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SplitFile {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

pub fn write_segment_bundle(
    dir: &Path,
    segment: &Segment,
    subject: usize,
    tier: NoiseTier,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = BundleManifest {
        target_index: segment.target_index,
        distance_m: segment.distance_m,
        gesture: segment.gesture.name().to_string(),
        seed: segment.seed,
        tier: tier.name().to_string(),
        n_candidates: segment.n_candidates(),
        subject,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    fs::write(dir.join("imu.jsonl"), super::jsonl::imu_to_jsonl(&segment.imu)?)?;
    for (k, flow) in segment.flows.iter().enumerate() {
        fs::write(dir.join(format!("flow_{k}.jsonl")), super::jsonl::flow_to_jsonl(flow)?)?;
    }
    Ok(())
}

pub fn read_segment_bundle(dir: &Path) -> Result<(Segment, BundleManifest)> {
    let manifest: BundleManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let gesture = GestureClass::from_name(&manifest.gesture)
        .ok_or_else(|| Error::InvalidData(format!("unknown gesture {}", manifest.gesture)))?;
    let imu = super::jsonl::imu_from_jsonl(&fs::read_to_string(dir.join("imu.jsonl"))?)?;
    let mut flows = Vec::with_capacity(manifest.n_candidates);
    for k in 0..manifest.n_candidates {
        let text = fs::read_to_string(dir.join(format!("flow_{k}.jsonl")))?;
        flows.push(super::jsonl::flow_from_jsonl(&text)?);
    }
    let segment = Segment {
        imu,
        flows,
        target_index: manifest.target_index,
        distance_m: manifest.distance_m,
        gesture,
        seed: manifest.seed,
    };
    Ok((segment, manifest))
}

fn bundle_id(subject: usize, ordinal: usize) -> String {
    format!("s{subject:03}_g{ordinal:04}")
}

/// Writes every segment of a dataset as a bundle plus `split.json`.
pub fn write_dataset_dir(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut split = SplitFile::default();
    let mut ordinal_by_subject: std::collections::BTreeMap<usize, usize> = Default::default();
    for (idx, rec) in dataset.records.iter().enumerate() {
        let ordinal = ordinal_by_subject.entry(rec.subject).or_insert(0);
        let id = bundle_id(rec.subject, *ordinal);
        *ordinal += 1;
        write_segment_bundle(&dir.join(&id), &rec.segment, rec.subject, NoiseTier::Clean)?;
        if dataset.train.contains(&idx) {
            split.train.push(id);
        } else if dataset.val.contains(&idx) {
            split.val.push(id);
        } else {
            split.test.push(id);
        }
    }
    fs::write(dir.join("split.json"), serde_json::to_string_pretty(&split)?)?;
    Ok(())
}

/// Reads a dataset directory back as (segment, manifest, split) triples.
pub fn read_dataset_dir(dir: &Path) -> Result<(Vec<(Segment, BundleManifest)>, SplitFile)> {
    let split: SplitFile = serde_json::from_str(&fs::read_to_string(dir.join("split.json"))?)?;
    let mut out = Vec::new();
    for id in split.train.iter().chain(&split.val).chain(&split.test) {
        out.push(read_segment_bundle(&dir.join(id))?);
    }
    Ok((out, split))
}
