//! Sparse audio declipping.
//!
//! Implements the analysis (A-SPADE) and synthesis (S-SPADE) variants of the
//! SParse Audio DEclipper on Parseval tight DFT and Gabor frames. The
//! synthesis variant uses a closed-form coefficient-domain projection, so an
//! iteration of either variant costs one analysis and one synthesis.
//!
//! ```no_run
//! use spade_core::{declip, hard_clip, read_wav, Algorithm, Execution, SpadeParams, TransformConfig};
//!
//! let x = read_wav("input.wav")?;
//! let (y, mask) = hard_clip(&x, 0.3)?;
//! let restored = declip(&y, &mask, &TransformConfig::default(), Algorithm::Aspade,
//!                       &SpadeParams::default(), Execution::Parallel)?;
//! # Ok::<(), spade_core::Error>(())
//! ```

pub mod audio_io;
pub mod clip_model;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod metrics;
pub mod parallel;
pub mod projections;
pub mod segmentation;
pub mod spade;
pub mod sparsity;

pub use audio_io::{peak_normalize, read_wav, write_wav, Signal};
pub use clip_model::{
    detect_mask, hard_clip, is_consistent, make_bounds, make_windowed_bounds, Bounds, ClipMask,
    SampleClass,
};
pub use error::{Error, Result};
pub use frames::{analysis, synthesis, verify_tight, CoefVector, DenseFrame, Frame, FrameOperator};
pub use metrics::{
    blockwise_sdr, delta_sdr, delta_sdr_clipped_only, delta_sdr_invariance_check, sdr,
    sdr_clipped_only,
};
pub use parallel::Execution;
pub use projections::{proj_box, proj_oracle, proj_synthesis, proj_time};
pub use segmentation::{
    declip, declip_segmented, declip_whole, dual_window, make_window, overlap_add, segment,
    DeclipReport, Declipped, GaborFrame, Mode, TransformConfig, WindowKind,
};
pub use spade::{aspade, declip_block, sspade, Algorithm, IterationStats, Termination};
pub use sparsity::{current_k, hard_threshold, hard_threshold_blocks, SpadeParams};
