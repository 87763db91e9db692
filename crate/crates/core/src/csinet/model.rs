//! The matching network: quality-aware feature modulation on the inertial
//! branch, inertially anchored cross-modal attention per candidate, a cosine
//! similarity head, and scale-aware fusion over window lengths.

use crate::autodiff::{backward, GradMap, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::rng::keyed_uniform;

use super::batch::{BatchSegment, PaddedTrack, SegmentBatch};
use super::config::ModelConfig;

const MASK_NEG: f64 = -1e30;
const EPS_L2: f64 = 1e-12;
const EPS_LN: f64 = 1e-5;
pub const LEAKY_SLOPE: f64 = 0.01;
/// Score assigned to padded or invalid candidates.
pub const PAD_SCORE: f64 = -1.0;

/// Evaluation vs training (training draws deterministic dropout masks).
#[derive(Debug, Clone, Copy)]
pub enum ForwardMode {
    Eval,
    Train { seed: u64, step: u64 },
}

/// Per-candidate outcome of one segment's forward pass.
#[derive(Debug, Clone)]
pub struct SegmentScores {
    /// Fused similarity per candidate slot (padded slots get `PAD_SCORE`).
    pub fused: Vec<f64>,
    /// Per-window similarities per candidate slot.
    pub sims: Vec<Vec<f64>>,
    /// Fusion weights over window scales (softmax, sums to 1).
    pub alpha: Vec<f64>,
    /// False for padded or fully masked candidates.
    pub valid: Vec<bool>,
}

/// Builds a [T, F] tensor from a padded track, zeroing padded rows so their
/// stored values cannot reach any downstream value.
fn track_tensor(track: &PaddedTrack) -> Tensor {
    let mut data = track.data.clone();
    for (r, m) in track.mask.iter().enumerate() {
        if *m == 0.0 {
            for v in &mut data[r * track.feat_pad..(r + 1) * track.feat_pad] {
                *v = 0.0;
            }
        }
    }
    Tensor::constant(track.time_pad, track.feat_pad, data)
}

fn param<'a>(store: &'a ParamStore, name: &str) -> Result<&'a crate::autodiff::Arr> {
    store
        .get(name)
        .ok_or_else(|| Error::Shape(format!("missing parameter {name}")))
}

fn linear(x: &Tensor, store: &ParamStore, w: &str, b: &str) -> Result<Tensor> {
    let wt = Tensor::param(w, param(store, w)?);
    let bt = Tensor::param(b, param(store, b)?);
    x.matmul(&wt)?.add_row_vec(&bt)
}

fn scale_tag(cfg: &ModelConfig, scale_idx: usize) -> String {
    if cfg.share_scale_weights {
        "shared".to_string()
    } else {
        format!("s{scale_idx:02}")
    }
}

/// γ, β = MLP(x); output γ ⊙ x + β. Identity when the modulation is
/// disabled by configuration.
fn film_modulate(
    x: &Tensor,
    store: &ParamStore,
    scale_idx: usize,
    cfg: &ModelConfig,
) -> Result<Tensor> {
    if !cfg.film_enabled {
        return Ok(x.clone());
    }
    let tag = scale_tag(cfg, scale_idx);
    let p = |s: &str| format!("{tag}.film.{s}");
    let hidden = linear(x, store, &p("w1"), &p("b1"))?.leaky_relu(LEAKY_SLOPE);
    let gamma_beta = linear(&hidden, store, &p("w2"), &p("b2"))?;
    let d = cfg.embed_dim;
    let gamma = gamma_beta.slice_cols(0, d)?;
    let beta = gamma_beta.slice_cols(d, d)?;
    gamma.mul(x)?.add(&beta)
}

fn dropout_if_training(
    t: &Tensor,
    p: f64,
    mode: ForwardMode,
    tag: u64,
) -> Result<Tensor> {
    match mode {
        ForwardMode::Eval => Ok(t.clone()),
        ForwardMode::Train { seed, step } => {
            if p <= 0.0 {
                return Ok(t.clone());
            }
            let n = t.values().len();
            let keep = 1.0 / (1.0 - p);
            let mask: Vec<f64> = (0..n)
                .map(|i| {
                    if keyed_uniform(seed, tag ^ step.rotate_left(17), i as u64) < p {
                        0.0
                    } else {
                        keep
                    }
                })
                .collect();
            t.dropout_mask(mask)
        }
    }
}

/// Two stacked cross-attention blocks: the (modulated) inertial sequence
/// queries each candidate's flow sequence; masked flow positions get −∞
/// logits; residual plus layer norm per block. Returns flow evidence
/// re-expressed on the inertial time base.
#[allow(clippy::too_many_arguments)]
fn cross_modal_attend(
    imu_mod: &Tensor,
    flow_proj: &Tensor,
    flow_mask: &[f64],
    store: &ParamStore,
    scale_idx: usize,
    cfg: &ModelConfig,
    mode: ForwardMode,
    cand_tag: u64,
) -> Result<Tensor> {
    let d = cfg.embed_dim;
    let hd = cfg.head_dim();
    let t_i = imu_mod.rows();
    let t_f = flow_proj.rows();

    // Additive mask bias, one row broadcast over queries.
    let mut bias = vec![0.0; t_i * t_f];
    for (j, m) in flow_mask.iter().enumerate() {
        if *m == 0.0 {
            for i in 0..t_i {
                bias[i * t_f + j] = MASK_NEG;
            }
        }
    }
    let bias_t = Tensor::constant(t_i, t_f, bias);

    let tag = scale_tag(cfg, scale_idx);
    let mut query_stream = imu_mod.clone();
    let mut evidence = None;
    for l in 0..cfg.attn_layers {
        let p = |s: &str| format!("{tag}.attn{l}.{s}");
        let q = linear_nobias(&query_stream, store, &p("wq"))?;
        let k = linear_nobias(flow_proj, store, &p("wk"))?;
        let v = if cfg.shared_kv_projection {
            k.clone()
        } else {
            linear_nobias(flow_proj, store, &p("wv"))?
        };

        let mut head_outputs: Vec<Tensor> = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let qh = q.slice_cols(h * hd, hd)?;
            let kh = k.slice_cols(h * hd, hd)?;
            let vh = v.slice_cols(h * hd, hd)?;
            let logits = qh
                .matmul_trans_b(&kh)?
                .scale(1.0 / (hd as f64).sqrt())
                .add(&bias_t)?;
            let weights = logits.softmax_rows();
            let weights = dropout_if_training(
                &weights,
                cfg.dropout,
                mode,
                (scale_idx as u64) << 32 | (l as u64) << 16 | (h as u64) << 8 | cand_tag,
            )?;
            head_outputs.push(weights.matmul(&vh)?);
        }
        let mut concat = head_outputs[0].clone();
        for head in &head_outputs[1..] {
            concat = concat.concat_cols(head)?;
        }
        let out = linear_nobias(&concat, store, &p("wo"))?;
        // The aligned flow evidence is the attention output itself; the
        // residual feeds only the evolving query stream. Folding the query
        // into the evidence would give every candidate a large shared
        // component and collapse the similarity contrast.
        evidence = Some(out.layer_norm_rows(EPS_LN));
        let ln_g = Tensor::param(&p("ln_g"), param(store, &p("ln_g"))?);
        let ln_b = Tensor::param(&p("ln_b"), param(store, &p("ln_b"))?);
        query_stream = query_stream
            .add(&out)?
            .layer_norm_rows(EPS_LN)
            .mul_row_vec(&ln_g)?
            .add_row_vec(&ln_b)?;
        debug_assert_eq!(query_stream.cols(), d);
    }
    evidence.ok_or_else(|| Error::Shape("attention stack has zero layers".into()))
}

fn linear_nobias(x: &Tensor, store: &ParamStore, w: &str) -> Result<Tensor> {
    x.matmul(&Tensor::param(w, param(store, w)?))
}

/// Masked mean pool both sequences over the inertial time base, ℓ2-normalize,
/// dot product. Zero-norm embeddings yield 0.
fn similarity(imu_emb: &Tensor, aligned: &Tensor, imu_mask: &[f64]) -> Result<Tensor> {
    let a = imu_emb.mean_rows_masked(imu_mask)?.l2_normalize_rows(EPS_L2);
    let b = aligned.mean_rows_masked(imu_mask)?.l2_normalize_rows(EPS_L2);
    Ok(a.mul(&b)?.sum_all())
}

/// Fusion weights α = softmax(g(s)); the final score is Σ α_m sim_m.
/// Uniform weights when scale-aware fusion is disabled.
fn fuse_windows(
    sims: &[Tensor],
    scale_proxy: f64,
    quality: [f64; 2],
    store: &ParamStore,
    cfg: &ModelConfig,
) -> Result<(Tensor, Vec<f64>)> {
    let sims_row = Tensor::concat_scalars(sims)?;
    let m = sims.len();
    if !cfg.fusion_enabled {
        let fused = sims_row.sum_all().scale(1.0 / m as f64);
        return Ok((fused, vec![1.0 / m as f64; m]));
    }
    let input = if cfg.fusion_uses_quality {
        Tensor::constant(1, 3, vec![scale_proxy, quality[0], quality[1]])
    } else {
        Tensor::constant(1, 1, vec![scale_proxy])
    };
    let hidden = linear(&input, store, "fusion.w1", "fusion.b1")?.leaky_relu(LEAKY_SLOPE);
    let logits = linear(&hidden, store, "fusion.w2", "fusion.b2")?;
    let alpha = logits.softmax_rows();
    let fused = alpha.mul(&sims_row)?.sum_all();
    Ok((fused, alpha.values().to_vec()))
}

/// Forward pass for one segment of a batch. Returns the fused-score tensors
/// for real candidates (for the loss) plus plain-value scores for all slots.
pub fn forward_segment(
    seg: &BatchSegment,
    store: &ParamStore,
    cfg: &ModelConfig,
    mode: ForwardMode,
) -> Result<(Vec<Tensor>, SegmentScores)> {
    let n_scales = seg.imu.len();
    if n_scales != cfg.n_scales() {
        return Err(Error::Shape(format!(
            "segment has {n_scales} scales, config expects {}",
            cfg.n_scales()
        )));
    }

    // Inertial branch once per scale: project, modulate.
    let mut imu_mod: Vec<Tensor> = Vec::with_capacity(n_scales);
    for m in 0..n_scales {
        let x = track_tensor(&seg.imu[m]);
        let proj = linear(
            &x,
            store,
            &format!("s{m:02}.imu_proj.w"),
            &format!("s{m:02}.imu_proj.b"),
        )?;
        imu_mod.push(film_modulate(&proj, store, m, cfg)?);
    }

    let n_slots = seg.flows.len();
    let mut fused_real: Vec<Tensor> = Vec::new();
    let mut scores = SegmentScores {
        fused: vec![PAD_SCORE; n_slots],
        sims: vec![vec![PAD_SCORE; n_scales]; n_slots],
        alpha: vec![0.0; n_scales],
        valid: vec![false; n_slots],
    };

    for (c, cand_tracks) in seg.flows.iter().enumerate() {
        let is_real = c < seg.p_count;
        if !is_real {
            continue;
        }
        if cand_tracks.iter().all(|t| t.is_fully_masked()) {
            // Invalid candidate: zero evidence, flagged, score pinned.
            fused_real.push(Tensor::scalar_const(PAD_SCORE));
            continue;
        }
        let mut sims: Vec<Tensor> = Vec::with_capacity(n_scales);
        for m in 0..n_scales {
            let flow = track_tensor(&cand_tracks[m]);
            let flow_proj = linear(
                &flow,
                store,
                &format!("s{m:02}.flow_proj.w"),
                &format!("s{m:02}.flow_proj.b"),
            )?;
            let aligned = cross_modal_attend(
                &imu_mod[m],
                &flow_proj,
                &cand_tracks[m].mask,
                store,
                m,
                cfg,
                mode,
                c as u64,
            )?;
            sims.push(similarity(&imu_mod[m], &aligned, &seg.imu[m].mask)?);
        }
        let (fused, alpha) = fuse_windows(&sims, seg.scale_proxy, seg.quality, store, cfg)?;
        scores.fused[c] = fused.value_scalar();
        for (m, s) in sims.iter().enumerate() {
            scores.sims[c][m] = s.value_scalar();
        }
        scores.alpha = alpha;
        scores.valid[c] = true;
        fused_real.push(fused);
    }

    Ok((fused_real, scores))
}

/// Evaluation-mode scores for every segment of a batch.
pub fn forward(batch: &SegmentBatch, store: &ParamStore, cfg: &ModelConfig) -> Result<Vec<SegmentScores>> {
    batch
        .segments
        .iter()
        .map(|seg| forward_segment(seg, store, cfg, ForwardMode::Eval).map(|(_, s)| s))
        .collect()
}

/// Loss and gradients for one segment (used by the training loop, one graph
/// per segment so segments can run on worker threads).
pub fn segment_loss_grads(
    seg: &BatchSegment,
    store: &ParamStore,
    cfg: &ModelConfig,
    mode: ForwardMode,
) -> Result<(f64, GradMap)> {
    let (fused, _) = forward_segment(seg, store, cfg, mode)?;
    let loss = super::loss::infonce_term(&fused, seg.target_index, cfg.temperature)?;
    let value = loss.value_scalar();
    let grads = backward(&loss)?;
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csinet::batch::align_and_pad;
    use crate::csinet::params::init_params;
    use crate::pipeline::{segment_features, FeatureMode, SegmentFeatures};
    use crate::synth::{make_segment, GestureClass, SceneSpec, SubjectProfile};

    fn cfg() -> ModelConfig {
        ModelConfig { windows: vec![5, 8], embed_dim: 16, heads: 2, ..Default::default() }
    }

    fn feats(seed: u64) -> SegmentFeatures {
        let spec = SceneSpec { seed, ..Default::default() };
        let profiles: Vec<SubjectProfile> =
            (0..3).map(|i| SubjectProfile::sample(i as u64, seed)).collect();
        let seg = make_segment(&spec, GestureClass::Right, &profiles).unwrap();
        segment_features(&seg, &cfg().windows, FeatureMode::Spectral).unwrap()
    }

    #[test]
    fn scores_bounded_and_alpha_normalized() {
        let c = cfg();
        let params = init_params(&c, 1).unwrap();
        let f = feats(5);
        let batch = align_and_pad(&[&f]).unwrap();
        let scores = forward(&batch, &params, &c).unwrap();
        let s = &scores[0];
        for (c_idx, valid) in s.valid.iter().enumerate() {
            if *valid {
                assert!(s.fused[c_idx].abs() <= 1.0 + 1e-9);
                for sim in &s.sims[c_idx] {
                    assert!(sim.abs() <= 1.0 + 1e-9);
                }
            }
        }
        let alpha_sum: f64 = s.alpha.iter().sum();
        assert!((alpha_sum - 1.0).abs() < 1e-9);
        // Fusion convexity: min sim ≤ fused ≤ max sim.
        for (c_idx, valid) in s.valid.iter().enumerate() {
            if *valid {
                let mn = s.sims[c_idx].iter().cloned().fold(f64::INFINITY, f64::min);
                let mx = s.sims[c_idx].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(s.fused[c_idx] >= mn - 1e-12 && s.fused[c_idx] <= mx + 1e-12);
            }
        }
    }

    #[test]
    fn candidate_permutation_equivariance() {
        let c = cfg();
        let params = init_params(&c, 2).unwrap();
        let f = feats(9);
        let mut swapped = f.clone();
        swapped.flows.swap(0, 2);
        let b1 = align_and_pad(&[&f]).unwrap();
        let b2 = align_and_pad(&[&swapped]).unwrap();
        let s1 = &forward(&b1, &params, &c).unwrap()[0];
        let s2 = &forward(&b2, &params, &c).unwrap()[0];
        assert_eq!(s1.fused[0], s2.fused[2]);
        assert_eq!(s1.fused[2], s2.fused[0]);
        assert_eq!(s1.fused[1], s2.fused[1]);
    }

    #[test]
    fn duplicated_candidate_scores_identically() {
        let c = cfg();
        let params = init_params(&c, 3).unwrap();
        let mut f = feats(11);
        f.flows[1] = f.flows[0].clone();
        let batch = align_and_pad(&[&f]).unwrap();
        let s = &forward(&batch, &params, &c).unwrap()[0];
        assert_eq!(s.fused[0], s.fused[1]);
    }

    #[test]
    fn padded_perturbation_leaves_scores_bitwise() {
        let c = cfg();
        let params = init_params(&c, 4).unwrap();
        let short = {
            let spec = SceneSpec { seed: 31, segment_frames: 60, ..Default::default() };
            let profiles: Vec<SubjectProfile> =
                (0..3).map(|i| SubjectProfile::sample(i as u64, 31)).collect();
            let seg = make_segment(&spec, GestureClass::Left, &profiles).unwrap();
            segment_features(&seg, &c.windows, FeatureMode::Spectral).unwrap()
        };
        let long = feats(32);
        let batch = align_and_pad(&[&short, &long]).unwrap();
        let base = forward(&batch, &params, &c).unwrap();

        // Poison every padded entry (masked rows and padded candidates).
        let mut poisoned = batch.clone();
        for seg in &mut poisoned.segments {
            for tr in seg.imu.iter_mut() {
                for r in 0..tr.time_pad {
                    if tr.mask[r] == 0.0 {
                        for v in &mut tr.data[r * tr.feat_pad..(r + 1) * tr.feat_pad] {
                            *v = 1e6;
                        }
                    }
                }
            }
            for cand in seg.flows.iter_mut() {
                for tr in cand.iter_mut() {
                    for r in 0..tr.time_pad {
                        if tr.mask[r] == 0.0 {
                            for v in &mut tr.data[r * tr.feat_pad..(r + 1) * tr.feat_pad] {
                                *v = -3e5;
                            }
                        }
                    }
                }
            }
        }
        let after = forward(&poisoned, &params, &c).unwrap();
        for (a, b) in base.iter().zip(&after) {
            for (x, y) in a.fused.iter().zip(&b.fused) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn single_key_attention_is_identity_weight() {
        // T_f = 1: the single key takes all attention weight, so the aligned
        // output equals the value row everywhere the mask is set.
        let c = ModelConfig { windows: vec![5], embed_dim: 8, heads: 2, ..Default::default() };
        let params = init_params(&c, 5).unwrap();
        let mut f = feats(13);
        f.imu.truncate(1);
        for fl in f.flows.iter_mut() {
            fl.truncate(1);
            let cols = fl[0].cols;
            fl[0].rows = 1;
            fl[0].data.truncate(cols);
        }
        let rows = f.imu[0].rows.min(4);
        let cols = f.imu[0].cols;
        f.imu[0].rows = rows;
        f.imu[0].data.truncate(rows * cols);
        let batch = align_and_pad(&[&f]).unwrap();
        let scores = forward(&batch, &params, &c).unwrap();
        assert!(scores[0].valid.iter().take(3).all(|v| *v));
    }
}
