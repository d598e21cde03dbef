use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Geometric sub-division schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Cuts orthogonal to the line joining the anterior- and posterior-most
    /// points (extremes taken along AC-PC).
    Witelson,
    /// Cuts orthogonal to the AC-PC line.
    Jancke,
    /// Witelson's anchor with different segment widths.
    HoferFrahm,
    /// Equal-angle rays from the midpoint of the inferior border of the
    /// AC-PC aligned bounding rectangle.
    Hampel,
    /// Cuts orthogonal to the principal axis of the area.
    Eigendirection,
    /// Cuts perpendicular to the intercallosal line.
    ShapeAware,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::Witelson,
        SchemeKind::Jancke,
        SchemeKind::HoferFrahm,
        SchemeKind::Hampel,
        SchemeKind::Eigendirection,
        SchemeKind::ShapeAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Witelson => "witelson",
            SchemeKind::Jancke => "jancke",
            SchemeKind::HoferFrahm => "hofer_frahm",
            SchemeKind::Hampel => "hampel",
            SchemeKind::Eigendirection => "eigendirection",
            SchemeKind::ShapeAware => "shape_aware",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sub-segmentation scheme `{s}`")))
    }
}

/// Cut positions of each scheme. For Hampel the fractions are of the 180°
/// fan, for the others of the anchor extent (anterior = 0).
pub fn default_fractions(kind: SchemeKind) -> Vec<f64> {
    match kind {
        SchemeKind::Witelson | SchemeKind::Jancke => vec![1.0 / 3.0, 0.5, 2.0 / 3.0, 0.8],
        SchemeKind::HoferFrahm | SchemeKind::ShapeAware => vec![1.0 / 6.0, 0.5, 2.0 / 3.0, 0.75],
        SchemeKind::Hampel | SchemeKind::Eigendirection => vec![0.2, 0.4, 0.6, 0.8],
    }
}

/// A scheme with its cut fractions; `fractions.len() + 1` segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsegScheme {
    pub kind: SchemeKind,
    pub fractions: Vec<f64>,
}

impl SubsegScheme {
    pub fn new(kind: SchemeKind, fractions: Vec<f64>) -> Result<Self> {
        let s = Self { kind, fractions };
        s.validate()?;
        Ok(s)
    }

    pub fn with_defaults(kind: SchemeKind) -> Self {
        Self {
            kind,
            fractions: default_fractions(kind),
        }
    }

    /// `count` segments of equal extent.
    pub fn equal(kind: SchemeKind, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("at least 2 segments are required"));
        }
        Self::new(kind, (1..count).map(|i| i as f64 / count as f64).collect())
    }

    pub fn segment_count(&self) -> usize {
        self.fractions.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::invalid("at least one cut fraction is required"));
        }
        if self.fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::invalid("cut fractions must lie in (0, 1)"));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("cut fractions must be strictly increasing"));
        }
        Ok(())
    }
}
