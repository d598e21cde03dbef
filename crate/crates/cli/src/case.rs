use std::path::{Path, PathBuf};
use std::time::Instant;

use ccmorph::geometry::{load_volume, midsagittal_plane, resample_slab, Interpolation, Volume};
use ccmorph::mesh::{mask_to_mesh, mesh_to_off, polyline_to_csv, Mask2D};
use ccmorph::morphometry::{
    intercallosal_line, shape_summary, thickness_profile, InPlaneLandmarks, Midline, ShapeSummary,
    ThicknessProfile,
};
use ccmorph::subseg::{segments_to_csv, subsegment, SubsegResult};
use ccmorph::{Landmarks, Plane, Polyline, RigidTransform, TriMesh2D, Vec2, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::{svg, RunError};

/// One subject: label volume, AC/PC landmarks and an optional plane.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub id: String,
    pub labels: PathBuf,
    pub landmarks: PathBuf,
    /// Mid-sagittal plane (`{"normal": [..], "offset": ..}`); registered
    /// against the template when absent.
    #[serde(default)]
    pub plane: Option<PathBuf>,
    /// Optional T1 image. Only its presence is checked; the geometry runs
    /// on labels.
    #[serde(default)]
    pub t1: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchFile {
    #[serde(rename = "case")]
    cases: Vec<CaseSpec>,
}

/// Reads `[[case]]` tables from a TOML batch file. Relative paths resolve
/// against the batch file's directory.
pub fn load_batch(path: &Path) -> Result<Vec<CaseSpec>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::input(format!("batch file {}: {e}", path.display())))?;
    let batch: BatchFile = toml::from_str(&text)
        .map_err(|e| RunError::input(format!("batch file {}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fix = |p: &PathBuf| {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(batch.cases.len());
    for c in batch.cases {
        if c.id.is_empty() || c.id.contains(['/', '\\']) || c.id == "." || c.id == ".." {
            return Err(RunError::input(format!(
                "case id `{}` is not a valid directory name",
                c.id
            )));
        }
        if !seen.insert(c.id.clone()) {
            return Err(RunError::input(format!("duplicate case id `{}`", c.id)));
        }
        out.push(CaseSpec {
            labels: fix(&c.labels),
            landmarks: fix(&c.landmarks),
            plane: c.plane.as_ref().map(fix),
            t1: c.t1.as_ref().map(fix),
            id: c.id,
        });
    }
    if out.is_empty() {
        return Err(RunError::input(format!(
            "batch file {} lists no cases",
            path.display()
        )));
    }
    Ok(out)
}

/// Template segmentation with its mid-sagittal plane, used when a case
/// brings no plane of its own.
#[derive(Clone, Debug)]
pub struct Template {
    pub labels: Volume,
    pub plane: Plane,
}

impl Template {
    pub fn load(labels: &Path, plane: &Path) -> Result<Self, RunError> {
        let vol = load_volume(labels).map_err(|e| RunError::input(format!("template: {e}")))?;
        vol.require_labels()
            .map_err(|e| RunError::input(format!("template: {e}")))?;
        Ok(Self {
            labels: vol,
            plane: read_plane(plane)?,
        })
    }
}

pub fn read_plane(path: &Path) -> Result<Plane, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::input(format!("plane {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::input(format!("plane {}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Landmarks,
    Load,
    Midplane,
    Slab,
    Mesh,
    Laplace,
    Morphometry,
    Subseg,
    Figures,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Landmarks => "landmarks",
            Stage::Load => "load",
            Stage::Midplane => "midplane",
            Stage::Slab => "slab",
            Stage::Mesh => "mesh",
            Stage::Laplace => "laplace",
            Stage::Morphometry => "morphometry",
            Stage::Subseg => "subseg",
            Stage::Figures => "figures",
        }
    }
}

/// How far a subcommand runs the per-case pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goal {
    Midplane,
    Thickness,
    Metrics,
    Subseg,
    Full,
}

impl Goal {
    pub fn stages(self) -> Vec<Stage> {
        use Stage::*;
        let base = [Landmarks, Load, Midplane];
        let geometry = [Slab, Mesh, Laplace];
        let mut s = base.to_vec();
        match self {
            Goal::Midplane => {}
            Goal::Thickness => s.extend(geometry),
            Goal::Metrics => {
                s.extend(geometry);
                s.push(Morphometry);
            }
            Goal::Subseg => {
                s.extend(geometry);
                s.push(Subseg);
            }
            Goal::Full => {
                s.extend(geometry);
                s.extend([Morphometry, Subseg, Figures]);
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageStatus {
    pub stage: &'static str,
    /// `ok`, `failed` or `skipped`.
    pub status: &'static str,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Contents of `status.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseStatus {
    pub case_id: String,
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<&'static str>,
    pub stages: Vec<StageStatus>,
    pub total_seconds: f64,
}

#[derive(Serialize)]
struct PlaneRecord {
    normal: [f64; 3],
    offset: f64,
    source: &'static str,
    /// Subject-to-template rigid transform (row-major 4×4) when registered.
    subject_to_template: Option<[[f64; 4]; 4]>,
}

#[derive(Serialize)]
struct CaseSummary<'a> {
    case_id: &'a str,
    #[serde(flatten)]
    shape: &'a ShapeSummary,
    mean_thickness_mm: Option<f64>,
    valid_samples: usize,
    samples: usize,
    anterior_endpoint: [f64; 2],
    posterior_endpoint: [f64; 2],
    landmarks_far_from_contour: bool,
    slices: usize,
    slice_areas_mm2: Vec<f64>,
}

/// Intermediate products, filled stage by stage.
#[derive(Default)]
struct State {
    landmarks: Option<Landmarks>,
    labels: Option<Volume>,
    given_plane: Option<Plane>,
    plane: Option<Plane>,
    mask: Option<Mask2D>,
    in_plane: Option<InPlaneLandmarks<f64>>,
    slice_areas: Vec<f64>,
    contour: Option<Polyline>,
    mesh: Option<TriMesh2D>,
    midline: Option<Midline<f64>>,
    profile: Option<ThicknessProfile<f64>>,
    subseg: Vec<SubsegResult<f64>>,
}

struct Runner<'a> {
    case: &'a CaseSpec,
    cfg: &'a RunConfig,
    template: Option<&'a Template>,
    out: &'a OutDir,
    st: State,
}

fn core_input(e: ccmorph::Error) -> RunError {
    use ccmorph::Error::*;
    match e {
        Io { .. } | Parse { .. } | UnsupportedType(_) | SingularAffine | InvalidInput(_) => {
            RunError::input(e.to_string())
        }
        other => RunError::internal(other.to_string()),
    }
}

fn stage_err(e: ccmorph::Error) -> RunError {
    RunError::stage(e.to_string())
}

fn need_file(what: &str, p: &Path) -> Result<(), RunError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(RunError::input(format!(
            "{what} file {} does not exist",
            p.display()
        )))
    }
}

impl Runner<'_> {
    fn run(&mut self, stage: Stage) -> Result<(), RunError> {
        match stage {
            Stage::Landmarks => self.landmarks(),
            Stage::Load => self.load(),
            Stage::Midplane => self.midplane(),
            Stage::Slab => self.slab(),
            Stage::Mesh => self.mesh(),
            Stage::Laplace => self.laplace(),
            Stage::Morphometry => self.morphometry(),
            Stage::Subseg => self.subseg(),
            Stage::Figures => self.figures(),
        }
    }

    fn landmarks(&mut self) -> Result<(), RunError> {
        let p = &self.case.landmarks;
        need_file("landmark", p)?;
        let text = std::fs::read_to_string(p)
            .map_err(|e| RunError::input(format!("landmarks {}: {e}", p.display())))?;
        let lm: Landmarks = serde_json::from_str(&text)
            .map_err(|e| RunError::input(format!("landmarks {}: {e}", p.display())))?;
        lm.validate().map_err(core_input)?;
        self.st.landmarks = Some(lm);
        Ok(())
    }

    fn load(&mut self) -> Result<(), RunError> {
        need_file("label", &self.case.labels)?;
        if let Some(t1) = &self.case.t1 {
            need_file("T1", t1)?;
        }
        if let Some(p) = &self.case.plane {
            need_file("plane", p)?;
            self.st.given_plane = Some(read_plane(p)?);
        }
        let vol = load_volume(&self.case.labels).map_err(core_input)?;
        vol.require_labels().map_err(core_input)?;
        self.st.labels = Some(vol);
        Ok(())
    }

    fn midplane(&mut self) -> Result<(), RunError> {
        let labels = self.st.labels.as_ref().expect("load ran");
        let (plane, source, transform) = match (self.st.given_plane, self.template) {
            (Some(p), _) => (p, "given", None),
            (None, Some(t)) => {
                let reg = (!self.cfg.registration_labels.is_empty())
                    .then_some(&self.cfg.registration_labels[..]);
                let (p, tr) =
                    midsagittal_plane(labels, &t.labels, &t.plane, reg).map_err(stage_err)?;
                (p, "registered", Some(tr))
            }
            (None, None) => {
                return Err(RunError::input(
                    "no plane given for the case and no template to register against",
                ))
            }
        };
        // slab frames assume the normal points to the subject's right
        let plane = if plane.normal().x < 0.0 {
            plane.flipped()
        } else {
            plane
        };
        self.out.write_json(
            "plane.json",
            &PlaneRecord {
                normal: plane.normal().to_array(),
                offset: plane.offset(),
                source,
                subject_to_template: transform.map(|t: RigidTransform| t.to_rows()),
            },
        )?;
        self.st.plane = Some(plane);
        Ok(())
    }

    fn slab(&mut self) -> Result<(), RunError> {
        let labels = self.st.labels.as_ref().expect("load ran");
        let plane = self.st.plane.expect("midplane ran");
        let s = self.cfg.slab_spacing_mm;
        let slab = resample_slab(
            labels,
            &plane,
            self.cfg.slab_width_mm,
            s,
            Interpolation::Nearest,
        )
        .map_err(stage_err)?;
        let [ns, nu, nv] = slab.dims();
        let is_cc = |v: f64| v >= 0.0 && self.cfg.cc_labels.contains(&(v as u32));
        self.st.slice_areas = (0..ns)
            .map(|i| {
                let mut count = 0usize;
                for k in 0..nv {
                    for j in 0..nu {
                        count += usize::from(is_cc(slab.get(i, j, k)));
                    }
                }
                count as f64 * s * s
            })
            .collect();
        let mid = ns / 2;
        let mut data = Vec::with_capacity(nu * nv);
        for k in 0..nv {
            for j in 0..nu {
                data.push(u8::from(is_cc(slab.get(mid, j, k))));
            }
        }
        let mask = Mask2D::new([nu, nv], [s, s], data).map_err(stage_err)?;
        if mask.is_empty() {
            return Err(RunError::stage(
                "empty mask: no CC label on the mid-sagittal slice",
            ));
        }
        // in-plane coordinates: pixel (j, k) sits at (j·s, k·s)
        let c0 = slab.voxel_to_world(Vec3::new(mid as f64, 0.0, 0.0));
        let u = (slab.voxel_to_world(Vec3::new(mid as f64, 1.0, 0.0)) - c0) * (1.0 / s);
        let v = (slab.voxel_to_world(Vec3::new(mid as f64, 0.0, 1.0)) - c0) * (1.0 / s);
        let lm = self.st.landmarks.as_ref().expect("landmarks ran");
        let project = |p: Vec3| Vec2::new((p - c0).dot(u), (p - c0).dot(v));
        self.st.in_plane =
            Some(InPlaneLandmarks::new(project(lm.ac()), project(lm.pc())).map_err(stage_err)?);
        self.st.mask = Some(mask);
        Ok(())
    }

    fn mesh(&mut self) -> Result<(), RunError> {
        let mask = self.st.mask.as_ref().expect("slab ran");
        let sigma = self.cfg.sigma_px * self.cfg.slab_spacing_mm;
        let (contour, mesh) =
            mask_to_mesh(mask, sigma, self.cfg.iso, self.cfg.max_area_mm2).map_err(stage_err)?;
        self.out
            .write("contour.csv", polyline_to_csv(&contour).map_err(stage_err)?)?;
        self.out.write("mesh.off", mesh_to_off(&mesh))?;
        self.st.contour = Some(contour);
        self.st.mesh = Some(mesh);
        Ok(())
    }

    fn laplace(&mut self) -> Result<(), RunError> {
        let mesh = self.st.mesh.as_ref().expect("mesh ran");
        let lm = self.st.in_plane.as_ref().expect("slab ran");
        let cfg = self.cfg;
        let midline = intercallosal_line(mesh, lm, cfg.samples, &cfg.anchor, &cfg.solver)
            .map_err(stage_err)?;
        if midline.endpoints.far_from_contour {
            log::warn!("{}: landmarks lie far outside the CC contour", self.case.id);
        }
        let profile = thickness_profile(mesh, &midline, &cfg.solver).map_err(stage_err)?;
        if profile.valid_count() < profile.len() {
            log::warn!(
                "{}: {} of {} thickness samples are invalid",
                self.case.id,
                profile.len() - profile.valid_count(),
                profile.len()
            );
        }
        self.out.write(
            "midline.csv",
            polyline_to_csv(&midline.line).map_err(stage_err)?,
        )?;
        self.out
            .write("thickness.csv", profile.to_csv().map_err(stage_err)?)?;
        self.st.midline = Some(midline);
        self.st.profile = Some(profile);
        Ok(())
    }

    fn morphometry(&mut self) -> Result<(), RunError> {
        let (mesh, contour) = (
            self.st.mesh.as_ref().unwrap(),
            self.st.contour.as_ref().unwrap(),
        );
        let (midline, profile) = (
            self.st.midline.as_ref().unwrap(),
            self.st.profile.as_ref().unwrap(),
        );
        let shape = shape_summary(
            mesh,
            contour,
            &midline.line,
            &self.st.slice_areas,
            self.cfg.slab_spacing_mm,
            self.cfg.volume_width_mm,
        )
        .map_err(stage_err)?;
        let valid: Vec<f64> = profile.thickness.iter().flatten().copied().collect();
        let ends = |v: usize| {
            let p = mesh.vertices()[v];
            [p.x, p.y]
        };
        let summary = CaseSummary {
            case_id: &self.case.id,
            shape: &shape,
            mean_thickness_mm: (!valid.is_empty())
                .then(|| valid.iter().sum::<f64>() / valid.len() as f64),
            valid_samples: valid.len(),
            samples: profile.len(),
            anterior_endpoint: ends(midline.boundary.anterior_vertex),
            posterior_endpoint: ends(midline.boundary.posterior_vertex),
            landmarks_far_from_contour: midline.endpoints.far_from_contour,
            slices: self.st.slice_areas.len(),
            slice_areas_mm2: self.st.slice_areas.clone(),
        };
        self.out.write_json("summary.json", &summary)
    }

    fn subseg(&mut self) -> Result<(), RunError> {
        let mesh = self.st.mesh.as_ref().unwrap();
        let lm = self.st.in_plane.as_ref().unwrap();
        let line = &self.st.midline.as_ref().unwrap().line;
        let mut results = Vec::with_capacity(self.cfg.schemes.len());
        for &kind in &self.cfg.schemes {
            let scheme = self.cfg.scheme(kind)?;
            let r = subsegment(mesh, &scheme, lm, Some(line))
                .map_err(|e| RunError::stage(format!("{kind}: {e}")))?;
            results.push(r);
        }
        self.out.write(
            "subsegments.csv",
            segments_to_csv(&results).map_err(stage_err)?,
        )?;
        self.st.subseg = results;
        Ok(())
    }

    fn figures(&mut self) -> Result<(), RunError> {
        if !self.cfg.svg {
            return Ok(());
        }
        let profile = self.st.profile.as_ref().unwrap();
        self.out
            .write("thickness.svg", svg::thickness_plot(&self.case.id, profile))?;
        self.out.write(
            "cross_section.svg",
            svg::cross_section(
                self.st.contour.as_ref().unwrap(),
                &self.st.midline.as_ref().unwrap().line,
                profile,
                self.st.subseg.first(),
            ),
        )
    }
}

/// Runs the stages of `goal` for one case, writing outputs into `out_dir` as
/// each stage completes. A failed stage skips the remaining ones; the
/// outcome is returned and written to `status.json`.
pub fn run_case(
    case: &CaseSpec,
    out_dir: &Path,
    cfg: &RunConfig,
    template: Option<&Template>,
    goal: Goal,
) -> CaseStatus {
    let start = Instant::now();
    let mut status = CaseStatus {
        case_id: case.id.clone(),
        status: "ok",
        exit_code: 0,
        failed_stage: None,
        stages: Vec::new(),
        total_seconds: 0.0,
    };
    let out = match OutDir::create(out_dir)
        .and_then(|o| o.write("config.toml", cfg.to_toml()).map(|_| o))
    {
        Ok(o) => o,
        Err(e) => {
            log::error!("{}: {e}", case.id);
            status.status = "failed";
            status.exit_code = e.exit_code();
            return status;
        }
    };
    let mut runner = Runner {
        case,
        cfg,
        template,
        out: &out,
        st: State::default(),
    };
    for stage in goal.stages() {
        if status.failed_stage.is_some() {
            status.stages.push(StageStatus {
                stage: stage.name(),
                status: "skipped",
                seconds: 0.0,
                error: None,
            });
            continue;
        }
        let t = Instant::now();
        let result = runner.run(stage);
        let seconds = t.elapsed().as_secs_f64();
        log::info!("{}: {} done in {seconds:.3} s", case.id, stage.name());
        let error = result.err().map(|e| {
            status.status = "failed";
            status.exit_code = e.exit_code();
            status.failed_stage = Some(stage.name());
            e.to_string()
        });
        status.stages.push(StageStatus {
            stage: stage.name(),
            status: if error.is_some() { "failed" } else { "ok" },
            seconds,
            error,
        });
    }
    status.total_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = out.write_json("status.json", &status) {
        log::error!("{}: {e}", case.id);
        if status.exit_code == 0 {
            status.status = "failed";
            status.exit_code = e.exit_code();
        }
    }
    status
}
