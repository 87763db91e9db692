//! Comparison methods: classical temporal pre-alignment feeding the
//! time-domain matcher, and a non-learned spectral-cosine matcher.

pub mod align;
pub mod matchers;

pub use align::{dtw_align, linear_time_fit, xcorr_align, DtwResult, XcorrResult};
pub use matchers::{
    argmax_lowest_tie, prealign_imu, prealigned_time_domain_scores, spectral_cosine_match,
    spectral_cosine_scores, Prealign, MAX_LAG_FRAMES,
};
