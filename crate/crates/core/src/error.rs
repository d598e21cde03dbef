use std::path::PathBuf;

/// Errors produced by the morphometry toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed NIfTI header field `{field}`: {reason}")]
    Parse { field: &'static str, reason: String },
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedType(i16),
    #[error("singular affine")]
    SingularAffine,
    #[error("insufficient correspondences: {found} shared labels, need at least 3")]
    InsufficientCorrespondences { found: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("plane misses volume")]
    PlaneMissesVolume,
    #[error("cannot fix roll: structure centroid lies on the AC-PC line")]
    CannotFixRoll,
    #[error("ambiguous orientation: plane normals are perpendicular")]
    AmbiguousOrientation,
    #[error("empty contour")]
    EmptyContour,
    #[error("contour not closed (zero-pad the field before contouring)")]
    ContourNotClosed,
    #[error("self-intersecting contour: segment {0} intersects segment {1}")]
    SelfIntersection(usize, usize),
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("degenerate midline: {0}")]
    DegenerateMidline(String),
    #[error("index undefined: {0}")]
    IndexUndefined(String),
    #[error("degenerate principal axis: shape is isotropic")]
    DegeneratePrincipalAxis,
    #[error("empty mask")]
    EmptyMask,
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
