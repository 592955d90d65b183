use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: sl(n) needs n >= 2, got {0}")]
    InvalidDimension(usize),

    #[error("shape mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    ShapeMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid blocks {blocks:?}: {reason}")]
    InvalidBlocks { blocks: Vec<usize>, reason: String },

    #[error("grading element does not act diagonally on the basis: {0}")]
    NonIntegralGrade(String),

    #[error("trivial parabolic (P = G): n_P = 0, no cyclic module to build")]
    TrivialModule,

    #[error("internal consistency violation in {stage}: {detail}")]
    Internal { stage: &'static str, detail: String },

    #[error("element is not in n_P: component of norm {outside:.3e} outside the positive grades")]
    OutsideNilradical { outside: f64 },

    #[error("grade {grade} out of range 1..={max}")]
    GradeOutOfRange { grade: usize, max: usize },

    #[error("injectivity violation at grade {grade}: smallest singular value {lambda:.3e} below floor {floor:.3e}")]
    InjectivityViolation { grade: usize, lambda: f64, floor: f64 },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("ill-conditioned factorization: cond(g g^T) = {condition:.3e} exceeds {limit:.1e}")]
    Conditioning { condition: f64, limit: f64 },

    #[error("determinant {0} is not 1 within tolerance")]
    NotUnimodular(f64),

    #[error("certificate unsound at sample {index}: |psi|^2 = {psi_norm_sqr:.6e} < bound {bound:.6e}")]
    CertificateUnsound {
        index: usize,
        coefficients: Vec<f64>,
        psi_norm_sqr: f64,
        bound: f64,
    },
}

impl Error {
    /// Stable machine-readable tag for error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::InvalidBlocks { .. } => "invalid-blocks",
            Error::NonIntegralGrade(_) => "non-integral-grade",
            Error::TrivialModule => "trivial-module",
            Error::Internal { .. } => "internal-consistency",
            Error::OutsideNilradical { .. } => "domain",
            Error::GradeOutOfRange { .. } => "grade-out-of-range",
            Error::InjectivityViolation { .. } => "injectivity-violation",
            Error::Domain(_) => "domain",
            Error::Conditioning { .. } => "conditioning",
            Error::NotUnimodular(_) => "not-unimodular",
            Error::CertificateUnsound { .. } => "certificate-unsound",
        }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_) | Error::InvalidBlocks { .. } | Error::Domain(_)
        )
    }
}
