use std::path::Path;

use ccmorph::geometry::load_volume;
use ccmorph::stats::{dice, hausdorff95_with, Hd95Variant, Mask3D};
use serde::Serialize;

use crate::RunError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub dice: f64,
    /// `None` when either mask is empty.
    pub hd95_mm: Option<f64>,
    pub hd95_variant: Hd95Variant,
    pub voxels_pred: usize,
    pub voxels_reference: usize,
}

fn load_mask(path: &Path, labels: Option<&[u32]>) -> Result<Mask3D, RunError> {
    let vol = load_volume(path).map_err(|e| RunError::input(e.to_string()))?;
    Ok(Mask3D::from_volume(&vol, labels))
}

/// Dice and HD95 between two segmentations. Voxels count as foreground when
/// their value is one of `labels`, or non-zero when no labels are given.
pub fn run_eval(
    pred: &Path,
    reference: &Path,
    labels: Option<&[u32]>,
    variant: Hd95Variant,
) -> Result<EvalReport, RunError> {
    let (a, b) = (load_mask(pred, labels)?, load_mask(reference, labels)?);
    if a.dims() != b.dims() {
        return Err(RunError::input(format!(
            "mask grids differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let d = dice(&a, &b).map_err(|e| RunError::input(e.to_string()))?;
    let hd = if a.count() > 0 && b.count() > 0 {
        Some(hausdorff95_with(&a, &b, variant).map_err(|e| RunError::input(e.to_string()))?)
    } else {
        log::warn!("hd95 is undefined for an empty mask");
        None
    };
    Ok(EvalReport {
        dice: d,
        hd95_mm: hd,
        hd95_variant: variant,
        voxels_pred: a.count(),
        voxels_reference: b.count(),
    })
}
