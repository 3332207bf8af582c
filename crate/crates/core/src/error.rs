use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// Variants under "findings" are not programming errors: they report that a
/// computed object violates one of the structural facts the pipeline relies
/// on (slopes of local factors, the product of Frobenius roots, integrality).
/// Callers surface them with maximal visibility instead of retrying.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("modulus error: {0}")]
    Modulus(String),

    #[error("resource limit: {what} ({requested} > cap {cap})")]
    Resource { what: &'static str, requested: u64, cap: u64 },

    #[error("fields are not in a tower relation: {0}")]
    Tower(String),

    #[error("cyclotomic level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("element is not a rational integer: {0}")]
    NotRational(String),

    #[error("p-adic domain error: {0}")]
    Domain(String),

    #[error("insufficient p-adic precision: need at least {needed} pi-units, have {have}")]
    Precision { needed: u64, have: u64 },

    #[error("degenerate local factor: {0}")]
    DegenerateFactor(String),

    #[error("closed point coverage error: {0}")]
    Coverage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cache record corrupt at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    // findings
    #[error("finding: Newton slopes {found:?} differ from expected 0..={n} ({context})")]
    SlopeViolation { n: u32, found: Vec<String>, context: String },

    #[error("finding: leading coefficient {found} is not +/-{expected} ({context})")]
    FunctionalEquation { expected: String, found: String, context: String },

    #[error("finding: integrality failure at coefficient {index}: {detail}")]
    Integrality { index: usize, detail: String },

    #[error("finding: unit root is not a 1-unit ({0})")]
    NotOneUnit(String),
}

impl Error {
    /// True for the variants that report a mathematical finding.
    pub fn is_finding(&self) -> bool {
        matches!(
            self,
            Error::SlopeViolation { .. }
                | Error::FunctionalEquation { .. }
                | Error::Integrality { .. }
                | Error::NotOneUnit(_)
        )
    }
}
