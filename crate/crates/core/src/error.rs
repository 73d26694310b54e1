use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::Quantity;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid waveband {name:?}: [{min}, {max}] nm")]
    InvalidWaveband { name: String, min: f64, max: f64 },

    #[error("grid point {point} nm lies outside spectrum support [{first}, {last}] nm")]
    GridOutOfSupport { point: f64, first: f64, last: f64 },

    #[error(
        "band {band:?} [{min}, {max}] nm is not covered by spectrum support [{first}, {last}] nm"
    )]
    BandOutOfSupport {
        band: String,
        min: f64,
        max: f64,
        first: f64,
        last: f64,
    },

    #[error("spectra have no overlapping wavelength support")]
    NoOverlap,

    #[error("unit mismatch: {context} (got {got:?})")]
    UnitMismatch { context: String, got: Quantity },

    #[error("spectral response of junction {junction:?} does not cover its band")]
    BandCoverage { junction: String },

    #[error("no reference spectrum available for cell {0:?}")]
    MissingReferenceSpectrum(String),

    #[error("reference current of junction {junction:?} is {stated}, recomputed {computed}")]
    ReferenceCurrentMismatch {
        junction: String,
        stated: f64,
        computed: f64,
    },

    #[error("invalid cell description: {0}")]
    InvalidCell(String),

    #[error("no junction is eligible to limit the stack current")]
    NoEligibleJunction,

    #[error("unknown junction {0:?}")]
    UnknownJunction(String),

    #[error("control transmittance {value} at {wavelength} nm is below the floor {floor}")]
    ControlBelowFloor {
        wavelength: f64,
        value: f64,
        floor: f64,
    },

    #[error("clean stack current is zero")]
    ZeroCleanCurrent,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("junction {0:?} produces zero current")]
    ZeroCurrent(String),

    #[error("expected 3 replicate scan pairs, found {found}")]
    IncompleteReplicates { found: usize },

    #[error("day has no records with positive GNI")]
    NoIrradianceRecords,

    #[error("too few points for a fit: {0} (need at least 3)")]
    TooFewPoints(usize),

    #[error("independent variable has zero variance")]
    DegenerateX,

    #[error("measured series contains a zero value")]
    ZeroMeasured,

    #[error("series lengths differ or are empty: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("scenario has no weeks")]
    EmptyScenario,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no weekly measurements found in {0}")]
    NoWeeksFound(PathBuf),

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpectrum(_) => "InvalidSpectrum",
            Error::InvalidWaveband { .. } => "InvalidWaveband",
            Error::GridOutOfSupport { .. } => "GridOutOfSupport",
            Error::BandOutOfSupport { .. } => "BandOutOfSupport",
            Error::NoOverlap => "NoOverlap",
            Error::UnitMismatch { .. } => "UnitMismatch",
            Error::BandCoverage { .. } => "BandCoverage",
            Error::MissingReferenceSpectrum(_) => "MissingReferenceSpectrum",
            Error::ReferenceCurrentMismatch { .. } => "ReferenceCurrentMismatch",
            Error::InvalidCell(_) => "InvalidCell",
            Error::NoEligibleJunction => "NoEligibleJunction",
            Error::UnknownJunction(_) => "UnknownJunction",
            Error::ControlBelowFloor { .. } => "ControlBelowFloor",
            Error::ZeroCleanCurrent => "ZeroCleanCurrent",
            Error::ZeroDenominator(_) => "ZeroDenominator",
            Error::ZeroCurrent(_) => "ZeroCurrent",
            Error::IncompleteReplicates { .. } => "IncompleteReplicates",
            Error::NoIrradianceRecords => "NoIrradianceRecords",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::DegenerateX => "DegenerateX",
            Error::ZeroMeasured => "ZeroMeasured",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::ZeroVariance => "ZeroVariance",
            Error::EmptyScenario => "EmptyScenario",
            Error::InvalidScenario(_) => "InvalidScenario",
            Error::NoWeeksFound(_) => "NoWeeksFound",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Parse { .. } => "Parse",
            Error::Io { .. } => "Io",
        }
    }

    /// Whether the error stems from bad or missing input rather than from
    /// a computation on valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpectrum(_)
                | Error::InvalidWaveband { .. }
                | Error::BandCoverage { .. }
                | Error::MissingReferenceSpectrum(_)
                | Error::ReferenceCurrentMismatch { .. }
                | Error::InvalidCell(_)
                | Error::UnknownJunction(_)
                | Error::IncompleteReplicates { .. }
                | Error::EmptyScenario
                | Error::InvalidScenario(_)
                | Error::NoWeeksFound(_)
                | Error::FileNotFound(_)
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
