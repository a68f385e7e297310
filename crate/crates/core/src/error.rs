use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Machine-readable classification for file and schema failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatCode {
    PgmMagic,
    PgmHeader,
    PgmMaxval,
    PgmTruncated,
    OddDims,
    SidecarParse,
    SidecarField,
    SidecarValue,
    CodeRange,
    JsonParse,
    JsonUnknownField,
    JsonMissingField,
    JsonValue,
    SchemaVersion,
    Csv,
}

impl FormatCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatCode::PgmMagic => "E_PGM_MAGIC",
            FormatCode::PgmHeader => "E_PGM_HEADER",
            FormatCode::PgmMaxval => "E_PGM_MAXVAL",
            FormatCode::PgmTruncated => "E_PGM_TRUNCATED",
            FormatCode::OddDims => "E_ODD_DIMS",
            FormatCode::SidecarParse => "E_SIDECAR_PARSE",
            FormatCode::SidecarField => "E_SIDECAR_FIELD",
            FormatCode::SidecarValue => "E_SIDECAR_VALUE",
            FormatCode::CodeRange => "E_CODE_RANGE",
            FormatCode::JsonParse => "E_JSON_PARSE",
            FormatCode::JsonUnknownField => "E_JSON_UNKNOWN_FIELD",
            FormatCode::JsonMissingField => "E_JSON_MISSING_FIELD",
            FormatCode::JsonValue => "E_JSON_VALUE",
            FormatCode::SchemaVersion => "E_SCHEMA_VERSION",
            FormatCode::Csv => "E_CSV",
        }
    }
}

impl fmt::Display for FormatCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sensor metadata: {0}")]
    InvalidMetadata(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image dimensions must be even, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("`{field}` = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        field: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("missing dependency: {0}")]
    MissingDependency(String),

    #[error("CD undefined for condition `{condition}`: reference score is 1 (zero error)")]
    UndefinedReference { condition: String },

    #[error(
        "rCD undefined: reference scores {ref_corrupted} (corrupted) and {ref_normal} (normal) give a zero denominator"
    )]
    UndefinedRcd { ref_corrupted: f64, ref_normal: f64 },

    #[error("reference method `{method}` has no record for condition `{condition}`")]
    MissingReference { method: String, condition: String },

    #[error("invalid score {score} for method `{method}`, condition `{condition}`: must lie in [0, 1]")]
    InvalidScore {
        method: String,
        condition: String,
        score: f64,
    },

    #[error("duplicate record for method `{method}`, condition `{condition}`")]
    DuplicateRecord { method: String, condition: String },

    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("{}: {code}: {detail}", path.display())]
    Format {
        code: FormatCode,
        path: PathBuf,
        detail: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(
        code: FormatCode,
        path: impl Into<PathBuf>,
        detail: impl Into<String>,
    ) -> Self {
        Error::Format {
            code,
            path: path.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable error code string, e.g. `E_SIDECAR_FIELD`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidMetadata(_) => "E_METADATA",
            Error::DimensionMismatch(_) => "E_DIMENSION",
            Error::OddDimensions { .. } => "E_ODD_DIMS",
            Error::InvalidParameter { .. } => "E_PARAM",
            Error::OutOfRange { .. } => "E_RANGE",
            Error::MissingDependency(_) => "E_MISSING_DEPENDENCY",
            Error::UndefinedReference { .. } => "E_UNDEFINED_CD",
            Error::UndefinedRcd { .. } => "E_UNDEFINED_RCD",
            Error::MissingReference { .. } => "E_MISSING_REFERENCE",
            Error::InvalidScore { .. } => "E_SCORE",
            Error::DuplicateRecord { .. } => "E_DUPLICATE_RECORD",
            Error::TooFewValues { .. } => "E_TOO_FEW_VALUES",
            Error::InfeasibleBounds(_) => "E_BOUNDS",
            Error::Format { code, .. } => code.as_str(),
            Error::Io { .. } => "E_IO",
        }
    }

    /// Process exit code for this error class. 2 is left for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Format { .. } => 4,
            Error::MissingDependency(_) => 5,
            Error::InvalidMetadata(_)
            | Error::DimensionMismatch(_)
            | Error::OddDimensions { .. }
            | Error::InvalidParameter { .. }
            | Error::OutOfRange { .. }
            | Error::InfeasibleBounds(_) => 6,
            Error::UndefinedReference { .. }
            | Error::UndefinedRcd { .. }
            | Error::MissingReference { .. }
            | Error::InvalidScore { .. }
            | Error::DuplicateRecord { .. }
            | Error::TooFewValues { .. } => 7,
        }
    }
}
