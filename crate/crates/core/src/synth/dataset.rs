//! Subject-disjoint dataset generation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

use super::gesture::GestureClass;
use super::profile::SubjectProfile;
use super::scene::{make_segment, SceneSpec, Segment};

/// Dataset-level generation knobs; per-scene values are derived from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_subjects: usize,
    pub segments_per_subject: usize,
    pub n_candidates: usize,
    pub segment_frames: usize,
    pub focal_px: f64,
    pub flow_noise_base: f64,
    pub imu_accel_noise: f64,
    pub distance_range_m: (f64, f64),
    /// Test subjects per 38 total, mirroring the 30/8 protocol split.
    pub test_fraction: f64,
    /// Validation fraction of the training subjects.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_subjects: 38,
            segments_per_subject: 52,
            n_candidates: 3,
            segment_frames: 90,
            focal_px: 1280.0,
            flow_noise_base: 0.08,
            imu_accel_noise: 0.04,
            distance_range_m: (3.0, 34.0),
            test_fraction: 8.0 / 38.0,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

/// One generated scene plus its provenance.
#[derive(Debug, Clone)]
pub struct SegmentRecord {
    pub segment: Segment,
    pub subject: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A generated dataset with subject-disjoint train/val/test splits.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub profiles: Vec<SubjectProfile>,
    pub records: Vec<SegmentRecord>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn subject_of(&self, idx: usize) -> usize {
        self.records[idx].subject
    }
}

/// Assigns subjects to splits: `test_fraction` of subjects held out entirely,
/// then `val_fraction` of the remaining training subjects reserved for
/// validation. All three splits are subject-disjoint.
pub fn split_subjects(
    n_subjects: usize,
    test_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n_subjects).collect();
    let mut rng = Rng::new(derive_seed(seed, 0x73706c_6974));
    rng.shuffle(&mut order);
    let n_test = ((n_subjects as f64 * test_fraction).round() as usize).clamp(1, n_subjects - 2);
    let remaining = n_subjects - n_test;
    let n_val = ((remaining as f64 * val_fraction).round() as usize).clamp(1, remaining - 1);
    let test: Vec<usize> = order[..n_test].to_vec();
    let val: Vec<usize> = order[n_test..n_test + n_val].to_vec();
    let train: Vec<usize> = order[n_test + n_val..].to_vec();
    (train, val, test)
}

/// Generates the full dataset. Distances are stratified uniformly over the
/// configured range, gesture classes balanced per subject, and distractor
/// profiles drawn from the same split so the splits stay subject-disjoint.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    if spec.n_subjects < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 subjects, got {}",
            spec.n_subjects
        )));
    }
    let profiles: Vec<SubjectProfile> = (0..spec.n_subjects)
        .map(|i| SubjectProfile::sample(i as u64, spec.seed))
        .collect();

    let (train_subj, val_subj, test_subj) =
        split_subjects(spec.n_subjects, spec.test_fraction, spec.val_fraction, spec.seed);

    let split_of_subject = |s: usize| -> Split {
        if test_subj.contains(&s) {
            Split::Test
        } else if val_subj.contains(&s) {
            Split::Val
        } else {
            Split::Train
        }
    };

    let mut records = Vec::with_capacity(spec.n_subjects * spec.segments_per_subject);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());

    for subject in 0..spec.n_subjects {
        let split = split_of_subject(subject);
        let peers: Vec<usize> = match split {
            Split::Train => train_subj.clone(),
            Split::Val => val_subj.clone(),
            Split::Test => test_subj.clone(),
        };
        let mut rng = Rng::new(derive_seed(spec.seed, 0x7375_626a ^ (subject as u64) << 16));

        // Balanced class coverage per subject.
        let mut classes: Vec<GestureClass> = (0..spec.segments_per_subject)
            .map(|j| GestureClass::ALL[j % GestureClass::ALL.len()])
            .collect();
        rng.shuffle(&mut classes);

        for j in 0..spec.segments_per_subject {
            // Stratified distance: even band coverage with in-band jitter.
            let u = (j as f64 + rng.uniform()) / spec.segments_per_subject as f64;
            let distance =
                spec.distance_range_m.0 + u * (spec.distance_range_m.1 - spec.distance_range_m.0);

            let seg_seed = derive_seed(spec.seed, ((subject as u64) << 24) | j as u64);

            // Candidate roster: the target plus distractors from the same
            // split. If the split is smaller than the roster, pad with
            // one-off synthetic bystanders unique to this segment so the
            // splits stay subject-disjoint and no profile repeats in-scene.
            let mut cand_profiles = vec![profiles[subject].clone()];
            let mut pool: Vec<usize> = peers.iter().copied().filter(|p| *p != subject).collect();
            for k in 1..spec.n_candidates {
                if pool.is_empty() {
                    cand_profiles
                        .push(SubjectProfile::sample(0xB_F000_0000 + k as u64, seg_seed));
                } else {
                    let pick = rng.below(pool.len());
                    cand_profiles.push(profiles[pool.swap_remove(pick)].clone());
                }
            }
            rng.shuffle(&mut cand_profiles);
            let scene = SceneSpec {
                distance_m: distance,
                fps: 30.0,
                n_candidates: spec.n_candidates,
                segment_frames: spec.segment_frames,
                focal_px: spec.focal_px,
                flow_noise_base: spec.flow_noise_base,
                imu_accel_noise: spec.imu_accel_noise,
                seed: seg_seed,
            };
            // make_segment picks the target slot from the scene seed; the
            // subject driving the IMU must sit in that slot.
            let mut segment = make_segment(&scene, classes[j], &cand_profiles)?;
            let target_slot = segment.target_index;
            let subject_slot = cand_profiles
                .iter()
                .position(|p| p.subject_id == subject as u64)
                .unwrap();
            if subject_slot != target_slot {
                cand_profiles.swap(target_slot, subject_slot);
                segment = make_segment(&scene, classes[j], &cand_profiles)?;
            }

            let idx = records.len();
            records.push(SegmentRecord { segment, subject });
            match split {
                Split::Train => train.push(idx),
                Split::Val => val.push(idx),
                Split::Test => test.push(idx),
            }
        }
    }

    Ok(Dataset { spec: spec.clone(), profiles, records, train, val, test })
}
