use std::collections::BTreeMap;
use std::path::Path;

use ccmorph::fem::SolverOptions;
use ccmorph::geometry::slab_slice_count;
use ccmorph::morphometry::AnchorOffsets;
use ccmorph::stats::Hd95Variant;
use ccmorph::subseg::{SchemeKind, SubsegScheme};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// FreeSurfer corpus callosum labels: the whole structure and its five
/// segments.
pub const DEFAULT_CC_LABELS: [u32; 6] = [192, 251, 252, 253, 254, 255];

/// Every tunable of a run. Read from a TOML file, patched with `--set`
/// overrides, validated once, and echoed into every output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Labels that make up the corpus callosum mask.
    pub cc_labels: Vec<u32>,
    /// Labels whose centroids drive the mid-sagittal registration; empty
    /// means every label shared by subject and template.
    pub registration_labels: Vec<u32>,
    pub slab_width_mm: f64,
    pub slab_spacing_mm: f64,
    /// Left-right width the corrected volume is normalised to.
    pub volume_width_mm: f64,
    /// Gaussian smoothing width in slab pixels.
    pub sigma_px: f64,
    pub iso: f64,
    pub max_area_mm2: f64,
    pub samples: usize,
    pub anchor: AnchorOffsets,
    pub solver: SolverOptions,
    pub schemes: Vec<SchemeKind>,
    /// Per-scheme fraction overrides, keyed by scheme name.
    pub fractions: BTreeMap<String, Vec<f64>>,
    pub hd95: Hd95Variant,
    pub fdr_q: f64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cc_labels: DEFAULT_CC_LABELS.to_vec(),
            registration_labels: Vec::new(),
            slab_width_mm: 5.0,
            slab_spacing_mm: 1.0,
            volume_width_mm: 5.0,
            sigma_px: ccmorph::mesh::DEFAULT_SIGMA_PX,
            iso: ccmorph::mesh::DEFAULT_ISO,
            max_area_mm2: ccmorph::mesh::DEFAULT_MAX_AREA_MM2,
            samples: ccmorph::morphometry::DEFAULT_SAMPLES,
            anchor: AnchorOffsets::default(),
            solver: SolverOptions::default(),
            schemes: SchemeKind::ALL.to_vec(),
            fractions: BTreeMap::new(),
            hd95: Hd95Variant::default(),
            fdr_q: 0.05,
            threads: 0,
            svg: true,
        }
    }
}

impl RunConfig {
    /// Loads `path` (if any), applies `key=value` overrides and validates.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, RunError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| RunError::input(format!("config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| RunError::input(format!("config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| RunError::input(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::input(format!("config: {m}")));
        let positive = [
            ("slab_width_mm", self.slab_width_mm),
            ("slab_spacing_mm", self.slab_spacing_mm),
            ("volume_width_mm", self.volume_width_mm),
            ("sigma_px", self.sigma_px),
            ("max_area_mm2", self.max_area_mm2),
            ("solver.tolerance", self.solver.tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.iso > 0.0 && self.iso < 1.0) {
            return bad(format!("iso must lie in (0, 1), got {}", self.iso));
        }
        if !(self.fdr_q > 0.0 && self.fdr_q < 1.0) {
            return bad(format!("fdr_q must lie in (0, 1), got {}", self.fdr_q));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.solver.max_iter_factor == 0 {
            return bad("solver.max_iter_factor must be positive".into());
        }
        if self.cc_labels.is_empty() {
            return bad("cc_labels must not be empty".into());
        }
        let n = slab_slice_count(self.slab_width_mm, self.slab_spacing_mm);
        if n > 1 && self.volume_width_mm < (n as f64 - 2.0) * self.slab_spacing_mm - 1e-9 {
            return bad(format!(
                "volume_width_mm {} is narrower than the {n} inner slab slices",
                self.volume_width_mm
            ));
        }
        for name in self.fractions.keys() {
            name.parse::<SchemeKind>().map_err(|_| {
                RunError::input(format!("config: unknown scheme `{name}` in fractions"))
            })?;
        }
        for kind in &self.schemes {
            self.scheme(*kind)?;
        }
        Ok(())
    }

    pub fn scheme(&self, kind: SchemeKind) -> Result<SubsegScheme, RunError> {
        match self.fractions.get(kind.name()) {
            Some(f) => SubsegScheme::new(kind, f.clone())
                .map_err(|e| RunError::input(format!("config: {kind}: {e}"))),
            None => Ok(SubsegScheme::with_defaults(kind)),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

/// `a.b=value`; the value is parsed as TOML and taken as a bare string if
/// that fails.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), RunError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunError::input(format!("override `{spec}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    if key.is_empty() {
        return Err(RunError::input(format!(
            "override `{spec}` has an empty key"
        )));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| RunError::input(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let cfg = RunConfig::resolve(
            None,
            &[
                "samples=50".into(),
                "solver.tolerance=1e-10".into(),
                "schemes=[\"witelson\", \"hampel\"]".into(),
                "fractions.witelson=[0.25, 0.5, 0.75]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.samples, 50);
        assert_eq!(cfg.solver.tolerance, 1e-10);
        assert_eq!(cfg.schemes, vec![SchemeKind::Witelson, SchemeKind::Hampel]);
        assert_eq!(cfg.scheme(SchemeKind::Witelson).unwrap().segment_count(), 4);
    }

    #[test]
    fn invalid_values_are_input_errors() {
        for o in [
            "iso=1.5",
            "samples=0",
            "bogus=1",
            "fractions.witelson=[0.5, 0.2]",
            "samples",
        ] {
            let err = RunConfig::resolve(None, &[o.into()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{o}");
        }
    }
}
