//! On-disk formats: PGM frames, SCIB containers, JSON manifests.

pub mod manifest;
pub mod pgm;
pub mod scib;

pub use manifest::{sha256_file, verify_manifest, Manifest, ManifestEntry, TOOL_VERSION};
pub use pgm::{glob_match, load_frame_dir, load_pgm, natural_cmp, save_pgm};
pub use scib::{load_cube, load_matrix, load_scib, save_cube, save_matrix, save_scib};
