//! Pixel-space geometry engine: patches, AOI cropping, pan/zoom navigation
//! over a base image, bounding boxes, binary masks, and spatial relations.
//!
//! Everything here is pure; patches and masks are plain values that can be
//! shared freely across threads.

mod geometry;
mod io;
mod patch;
mod relation;

pub use geometry::{
    crop_aoi, normalize_bboxes, pan, zoom_out, Aoi, CropOutcome, PanDirection, PanOutcome,
    ZoomOutcome, DEFAULT_PAN_STEP_FRAC, DEFAULT_ZOOM_FACTOR,
};
pub use io::{read_patch, write_patch, write_pgm, write_ppm};
pub use patch::{BinaryMask, Provenance, RasterPatch};
pub use relation::{
    bbox_relationship, mask_relationship, BBox, CompassDirection, RelationOperand, RelationReport,
    SpatialRelation,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("channels must be 1 or 3, got {0}")]
    InvalidChannels(u8),
    #[error("pixel buffer holds {got} values, expected {expected}")]
    PixelBufferSize { expected: usize, got: usize },
    #[error("patch dimensions must be positive")]
    EmptyPatch,
    #[error("degenerate AOI: min edge must be strictly below max edge")]
    DegenerateAoi,
    #[error("AOI coordinates must lie in [0, 1]")]
    AoiOutOfRange,
    #[error("operation requires a patch with provenance")]
    MissingProvenance,
    #[error("patch window exceeds its base image bounds")]
    ProvenanceOutOfBounds,
    #[error("channel mismatch: patch has {patch}, base has {base}")]
    ChannelMismatch { patch: u8, base: u8 },
    #[error("zoom factor must be greater than 1, got {0}")]
    InvalidZoomFactor(f64),
    #[error("image dimensions must be positive")]
    NonPositiveDims,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("mask dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed patch file: {0}")]
    Format(String),
}
