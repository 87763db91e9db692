//! Contrastive loss over per-candidate similarity scores.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Logit clip range applied after temperature division.
pub const LOGIT_CLIP: f64 = 30.0;

/// One segment's InfoNCE term: −log softmax(s/τ)[y]. Logits are sanitized
/// and clipped to ±30 after the temperature division.
pub fn infonce_term(scores: &[Tensor], positive: usize, temperature: f64) -> Result<Tensor> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no candidates in loss".into()));
    }
    if positive >= scores.len() {
        return Err(Error::InvalidArgument(format!(
            "positive index {positive} out of {} candidates",
            scores.len()
        )));
    }
    let row = Tensor::concat_scalars(scores)?;
    let logits = row.scale(1.0 / temperature).sanitize().clip(-LOGIT_CLIP, LOGIT_CLIP);
    // Numerically safe log-sum-exp is unnecessary after the clip: exp(±30)
    // is comfortably finite.
    let lse = logits.exp().sum_all().ln();
    lse.sub(&logits.index_scalar(positive)?)
}

/// Mean InfoNCE over segments; `terms` are per-segment scalars.
pub fn mean_loss(terms: &[Tensor]) -> Result<Tensor> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("empty batch loss".into()));
    }
    Ok(Tensor::concat_scalars(terms)?.sum_all().scale(1.0 / terms.len() as f64))
}

/// Direct-formula oracle used by tests and the verification suite: plain
/// f64 evaluation with the same sanitize/clip semantics.
pub fn infonce_reference(scores: &[f64], positive: usize, temperature: f64) -> f64 {
    let logits: Vec<f64> = scores
        .iter()
        .map(|s| {
            let l = s / temperature;
            let l = if l.is_finite() { l } else { 0.0 };
            l.clamp(-LOGIT_CLIP, LOGIT_CLIP)
        })
        .collect();
    let sum: f64 = logits.iter().map(|l| l.exp()).sum();
    sum.ln() - logits[positive]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn term_value(scores: &[f64], y: usize, tau: f64) -> f64 {
        let tensors: Vec<Tensor> = scores.iter().map(|s| Tensor::scalar_const(*s)).collect();
        infonce_term(&tensors, y, tau).unwrap().value_scalar()
    }

    #[test]
    fn worked_example() {
        // s = [10, 0, 0], y = 0, τ = 1 → ln(1 + 2e⁻¹⁰) ≈ 9.0800e-5.
        let v = term_value(&[10.0, 0.0, 0.0], 0, 1.0);
        assert!((v - 9.0800e-5).abs() < 1e-8, "{v}");
    }

    #[test]
    fn uniform_scores_give_ln_p() {
        for p in [2usize, 3, 7] {
            let scores = vec![0.3; p];
            let v = term_value(&scores, 1.min(p - 1), 1.0);
            assert!((v - (p as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_reference_on_random_matrices() {
        let mut rng = Rng::new(77);
        for _ in 0..100 {
            let p = 2 + rng.below(6);
            let scores: Vec<f64> = (0..p).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let y = rng.below(p);
            let tau = rng.uniform_in(0.05, 1.0);
            let a = term_value(&scores, y, tau);
            let b = infonce_reference(&scores, y, tau);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn sharper_temperature_decreases_loss_when_positive_leads() {
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let mut scores: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 0.5)).collect();
            scores[2] = 0.9; // argmax
            let hot = term_value(&scores, 2, 0.2);
            let cold = term_value(&scores, 2, 0.1);
            assert!(cold < hot, "cold {cold} hot {hot}");
        }
    }

    #[test]
    fn rejects_bad_positive_index() {
        let t = vec![Tensor::scalar_const(0.1)];
        assert!(infonce_term(&t, 1, 0.07).is_err());
    }

    #[test]
    fn non_finite_scores_are_sanitized() {
        let v = term_value(&[f64::NAN, 0.5, f64::INFINITY], 1, 0.07);
        assert!(v.is_finite());
    }
}
