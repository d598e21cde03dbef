//! Segmentation overlap metrics and group statistics.

mod group;
mod ols;
mod overlap;
mod ranksum;

pub use group::{
    group_map_to_csv, scalar_group_summary, thickness_group_map, Group, GroupRow, GroupTable,
    PositionStat, ScalarSummary, GROUP_TABLE_COLUMNS, PREDICTORS,
};
pub use ols::{bh_correct, ols_fit, OlsFit};
pub use overlap::{dice, hausdorff95, hausdorff95_with, quantile, Hd95Variant, Mask3D};
pub use ranksum::{midranks, wilcoxon_ranksum, RankSum, EXACT_LIMIT};
