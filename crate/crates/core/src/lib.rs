//! Core kernels for robust video snapshot compressive imaging: synthetic
//! degradation, CACTI encoding, GAP-TV reconstruction, restoration-block
//! forwards and quality metrics.

pub mod blocks;
pub mod cacti;
pub mod cube;
pub mod degrade;
pub mod error;
pub mod gap_tv;
pub mod io;
pub mod metrics;
pub mod rng;

pub use cube::{chunk_video, FrameImage, VideoCube};
pub use error::{Result, SciError};
pub use rng::{SeededRng, RNG_ALGORITHM};
