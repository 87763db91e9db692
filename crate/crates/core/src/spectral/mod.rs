//! Windowed DFT/PSD computation, the seven spectral descriptors, the
//! PSD-plus-descriptors feature vector, multi-window feature stacks over
//! w ∈ {5..20} frames, and the acceleration-to-velocity spectrum transform.

pub mod cache;
pub mod descriptors;
pub mod features;
pub mod psd;

pub use descriptors::{descriptors, SpectralDescriptors};
pub use features::{
    build_feature, default_window_list, multi_window_features, n_positions, ChannelId,
    MultiWindowFeatures, SpectralFeature, WindowTrack, DEFAULT_WINDOWS, MIN_SERIES_LEN,
};
pub use psd::{dft_psd, normalize_acc_spectrum, Psd, Taper, WindowSpec};
