use std::fs::File;
use std::path::{Path, PathBuf};

use ccmorph::mesh::polyline_from_csv;
use ccmorph::stats::{
    group_map_to_csv, scalar_group_summary, thickness_group_map, Group, GroupRow, GroupTable,
    PositionStat, ScalarSummary,
};
use ccmorph::{Polyline, Vec2};

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::{svg, RunError};

/// Scalar measures read from each case's `summary.json`.
pub const SCALAR_MEASURES: [&str; 9] = [
    "area_mm2",
    "perimeter_mm",
    "circularity",
    "cc_index_raw",
    "cc_index_norm",
    "volume_mm3",
    "length_mm",
    "curvature_per_mm",
    "mean_thickness_mm",
];

/// Points each template contour is resampled to before averaging.
const TEMPLATE_POINTS: usize = 200;

/// Where the group data comes from.
#[derive(Clone, Debug)]
pub enum StatsInput {
    /// A ready group table: covariate columns followed by one column per
    /// thickness position.
    Table(PathBuf),
    /// A covariate table plus a pipeline output directory holding
    /// `<case_id>/thickness.csv` and `<case_id>/summary.json`.
    Runs { covariates: PathBuf, runs: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub positions: Vec<PositionStat>,
    pub effects: Vec<ScalarSummary>,
    pub significant: usize,
}

fn input_err(e: ccmorph::Error) -> RunError {
    match e {
        ccmorph::Error::InsufficientData(_)
        | ccmorph::Error::InvalidInput(_)
        | ccmorph::Error::RankDeficient => RunError::input(e.to_string()),
        other => RunError::internal(other.to_string()),
    }
}

fn open(p: &Path) -> Result<File, RunError> {
    File::open(p).map_err(|e| RunError::input(format!("{}: {e}", p.display())))
}

fn read_profile(path: &Path) -> Result<Vec<Option<f64>>, RunError> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RunError::input(format!("{}: {e}", path.display())))?;
        let cell = rec.get(1).unwrap_or("").trim();
        out.push(if cell.is_empty() {
            None
        } else {
            Some(cell.parse::<f64>().map_err(|_| {
                RunError::input(format!("{}: bad thickness `{cell}`", path.display()))
            })?)
        });
    }
    Ok(out)
}

fn read_scalars(path: &Path) -> Vec<Option<f64>> {
    let value: Option<serde_json::Value> = std::fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    SCALAR_MEASURES
        .iter()
        .map(|m| {
            value
                .as_ref()
                .and_then(|v| v.get(*m))
                .and_then(|x| x.as_f64())
        })
        .collect()
}

fn with_values(rows: &[GroupRow], values: Vec<Vec<Option<f64>>>) -> Vec<GroupRow> {
    rows.iter()
        .zip(values)
        .map(|(r, v)| GroupRow {
            values: v,
            ..r.clone()
        })
        .collect()
}

/// Thickness table and (for run directories) scalar table.
fn assemble(input: &StatsInput) -> Result<(GroupTable, Option<GroupTable>), RunError> {
    match input {
        StatsInput::Table(p) => Ok((GroupTable::from_csv(open(p)?).map_err(input_err)?, None)),
        StatsInput::Runs { covariates, runs } => {
            let rows = GroupTable::covariates_from_csv(open(covariates)?).map_err(input_err)?;
            let mut profiles = Vec::with_capacity(rows.len());
            let mut scalars = Vec::with_capacity(rows.len());
            for r in &rows {
                let dir = runs.join(&r.case_id);
                let prof = read_profile(&dir.join("thickness.csv"))?;
                if let Some(first) = profiles.first().map(Vec::len) {
                    if prof.len() != first {
                        return Err(RunError::input(format!(
                            "case `{}` has {} thickness samples, expected {first}",
                            r.case_id,
                            prof.len()
                        )));
                    }
                }
                profiles.push(prof);
                scalars.push(read_scalars(&dir.join("summary.json")));
            }
            let n = profiles.first().map_or(0, Vec::len);
            if n == 0 {
                return Err(RunError::input("no thickness samples found"));
            }
            let thickness = GroupTable::new(
                (0..n).map(|i| format!("t{i:03}")).collect(),
                with_values(&rows, profiles),
            )
            .map_err(input_err)?;
            let scalar = GroupTable::new(
                SCALAR_MEASURES.iter().map(|s| s.to_string()).collect(),
                with_values(&rows, scalars),
            )
            .map_err(input_err)?;
            Ok((thickness, Some(scalar)))
        }
    }
}

fn check_group_sizes(table: &GroupTable) -> Result<(), RunError> {
    for g in [Group::Patient, Group::Control] {
        let n = table.rows.iter().filter(|r| r.group == g).count();
        if n < 2 {
            return Err(RunError::input(format!(
                "insufficient data: {n} {} case(s), need at least 2 per group",
                match g {
                    Group::Patient => "patient",
                    Group::Control => "control",
                }
            )));
        }
    }
    Ok(())
}

fn read_polyline(path: &Path, closed: bool) -> Option<Polyline> {
    let text = std::fs::read_to_string(path).ok()?;
    polyline_from_csv(&text, closed)
        .ok()
        .filter(|l| l.len() >= 2)
}

/// Contour and midline of one case directory.
pub fn case_template(dir: &Path) -> Option<(Polyline, Polyline)> {
    Some((
        read_polyline(&dir.join("contour.csv"), true)?,
        read_polyline(&dir.join("midline.csv"), false)?,
    ))
}

/// Point-wise mean of the cases' midlines and contours after centring each
/// case on its midline centroid. Contours are resampled to a common count
/// starting at their most anterior point.
pub fn mean_template(dirs: &[PathBuf]) -> Option<(Polyline, Polyline)> {
    let cases: Vec<(Polyline, Polyline)> = dirs.iter().filter_map(|d| case_template(d)).collect();
    let n = cases.first()?.1.len();
    let cases: Vec<_> = cases.into_iter().filter(|(_, l)| l.len() == n).collect();
    let mut mean_line = vec![Vec2::zero(); n];
    let mut mean_contour = vec![Vec2::zero(); TEMPLATE_POINTS];
    let w = 1.0 / cases.len() as f64;
    for (contour, line) in &cases {
        let c = line.points.iter().fold(Vec2::zero(), |a, &p| a + p) * (1.0 / n as f64);
        for (m, &p) in mean_line.iter_mut().zip(&line.points) {
            *m += (p - c) * w;
        }
        let start = (0..contour.len())
            .max_by(|&a, &b| {
                contour.points[a]
                    .x
                    .total_cmp(&contour.points[b].x)
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        let mut pts = contour.points[start..].to_vec();
        pts.extend_from_slice(&contour.points[..=start]);
        let ring = Polyline::open(pts).resample(TEMPLATE_POINTS + 1);
        for (m, &p) in mean_contour.iter_mut().zip(&ring.points) {
            *m += (p - c) * w;
        }
    }
    Some((Polyline::closed(mean_contour), Polyline::open(mean_line)))
}

/// Fits the group model at every thickness position, writes `group_map.csv`,
/// `effects.csv` (run directories only), the assembled `group_table.csv`
/// and `pmap.svg`.
pub fn run_stats(
    input: &StatsInput,
    template_case: Option<&Path>,
    out: &OutDir,
    cfg: &RunConfig,
) -> Result<StatsReport, RunError> {
    let (table, scalars) = assemble(input)?;
    check_group_sizes(&table)?;
    let positions = thickness_group_map(&table).map_err(input_err)?;
    let mut effects = Vec::new();
    if let Some(s) = &scalars {
        for (i, m) in s.measures.iter().enumerate() {
            match scalar_group_summary(s, i) {
                Ok(e) => effects.push(e),
                Err(e) => log::warn!("skipping scalar measure {m}: {e}"),
            }
        }
    }
    out.write("config.toml", cfg.to_toml())?;
    out.write("group_table.csv", table.to_csv().map_err(input_err)?)?;
    out.write(
        "group_map.csv",
        group_map_to_csv(&positions).map_err(input_err)?,
    )?;
    if !effects.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &effects {
            w.serialize(e)
                .map_err(|e| RunError::internal(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| RunError::internal(e.to_string()))?;
        out.write("effects.csv", bytes)?;
    }
    if cfg.svg {
        let template = match (template_case, input) {
            (Some(dir), _) => case_template(dir),
            (None, StatsInput::Runs { runs, .. }) => {
                let dirs: Vec<PathBuf> = table.rows.iter().map(|r| runs.join(&r.case_id)).collect();
                mean_template(&dirs)
            }
            _ => None,
        };
        let svg = svg::p_map(
            template.as_ref().map(|(c, l)| (c, l)),
            &positions,
            cfg.fdr_q,
            &effects,
        );
        out.write("pmap.svg", svg)?;
    }
    let significant = positions.iter().filter(|p| p.p_adj < cfg.fdr_q).count();
    Ok(StatsReport {
        positions,
        effects,
        significant,
    })
}
