//! Scene data model, canonical file format, floorplan import, bounding-box
//! model placement and overlap resolution.

mod fill;
mod floorplan;
mod io;
pub mod materials;
mod model;
mod overlap;
pub mod procedural;
mod stats;
pub mod vocab;

use thiserror::Error;

pub use fill::{fill_bounding_box, BoxPlacement};
pub use floorplan::{import_floorplan, AssetPool, Floorplan, ImportReport, Opening};
pub use io::{load_scene, parse_scene, save_scene, scene_hash, to_canonical_string};
pub use model::{
    ArticulatedObject, BoundingBox, Joint, JointKind, Light, Link, Material, ObjectInstance, Room, Scene, WallSegment,
};
pub use overlap::{overlap_fraction, resolve_overlaps, OverlapReport, OVERLAP_SAMPLES};
pub use stats::{scene_stats, SceneStats};

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SceneError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
    #[error("io error: {0}")]
    Io(String),
    #[error("degenerate model: zero native extent on axis {axis}")]
    DegenerateModel { axis: usize },
    #[error("import error: {0}")]
    Import(String),
}
