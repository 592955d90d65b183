//! Certified lower bounds `a_{P-bar}(exp X)^{rho_P} >= C (1 + |X|^2)^m` for
//! block parabolics of `sl(n, R)`.
//!
//! The pipeline runs [`lie`] -> [`parabolic`] -> [`exterior`] -> [`psi`] ->
//! [`certificate`], with [`oracle`] as an independent matrix-factorization
//! check and [`verify`] as the sampling harness.

pub mod certificate;
pub mod config;
pub mod error;
pub mod exterior;
pub mod lie;
pub mod oracle;
pub mod parabolic;
pub mod psi;
pub mod verify;

pub use certificate::{Bound, ChainKind, LevelRecord, LowerBoundCertificate};
pub use config::{AlgebraSpec, RadiiConfig, RunConfig, Tolerances};
pub use error::{Error, Result};
pub use exterior::{CyclicModule, WedgeVector};
pub use lie::{Family, MatrixLieAlgebra};
pub use oracle::LanglandsFactors;
pub use parabolic::GradedStructure;
pub use psi::PsiValue;
pub use verify::VerificationReport;

/// Graded structure plus (for non-trivial parabolics) its cyclic module.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub graded: GradedStructure,
    pub module: Option<CyclicModule>,
}

impl Pipeline {
    pub fn build(algebra: &AlgebraSpec, blocks: &[usize], tolerances: &Tolerances) -> Result<Self> {
        let alg = match algebra.family {
            Family::Sl => MatrixLieAlgebra::special_linear(algebra.n)?,
        };
        let graded = parabolic::grading_from_blocks(&alg, blocks, tolerances.grade_cluster)?;
        let module = if graded.is_trivial() {
            None
        } else {
            Some(exterior::build_cyclic_module(&graded, tolerances.grade_cluster)?)
        };
        Ok(Self { graded, module })
    }

    /// Shorthand for `sl(n)` with default tolerances.
    pub fn sl(n: usize, blocks: &[usize]) -> Result<Self> {
        Self::build(&AlgebraSpec { family: Family::Sl, n }, blocks, &Tolerances::default())
    }

    pub fn certificate(&self, tolerances: Tolerances) -> Result<LowerBoundCertificate> {
        match &self.module {
            None => Ok(certificate::trivial_certificate(&self.graded, tolerances)),
            Some(module) => certificate::build_certificate(module, &self.graded, tolerances),
        }
    }
}

/// All compositions of `n` (ordered block sizes summing to `n`).
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
