//! Volumes, rigid transforms, planes, and the mid-sagittal plane pipeline.

mod disagreement;
pub mod nifti;
mod pose;
mod registration;
mod slab;
mod transform;
mod volume;

pub use disagreement::{
    plane_disagreement, plane_disagreement_with_height, DEFAULT_HEIGHT_MM, DEFAULT_RADIUS_MM,
};
pub use nifti::{load_volume, save_volume};
pub use pose::acpc_standardize;
pub use registration::{kabsch_rigid, label_centroids, midsagittal_plane};
pub use slab::{plane_frame, resample_slab, slab_slice_count, Interpolation};
pub use transform::{Landmarks, Plane, RigidTransform};
pub use volume::{DataType, Volume};
