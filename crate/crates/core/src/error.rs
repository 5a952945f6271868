use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage of the analytic squash construction, used to annotate failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validation,
    Symmetry,
    PhaseNormalization,
    Rank2Extraction,
    MuDecomposition,
    Completion,
    Verification,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Validation => "validation",
            Stage::Symmetry => "symmetry",
            Stage::PhaseNormalization => "phase normalization",
            Stage::Rank2Extraction => "rank-2 extraction",
            Stage::MuDecomposition => "mu decomposition",
            Stage::Completion => "trace-preserving completion",
            Stage::Verification => "verification",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix has invalid shape: {0}")]
    InvalidShape(String),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("U^(4k) != I (residual {residual:.3e})")]
    BadPeriod { residual: f64 },
    #[error("C4 eigenprojectors require k = 1 (got k = {k}); U^4 is not a scalar multiple of I")]
    KNotOne { k: u32 },
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid label action: {0}")]
    InvalidAction(String),
    #[error("invalid Fock sector: {0}")]
    InvalidSector(String),
    #[error("observable has rank {rank}, expected 2")]
    RankNotTwo { rank: usize },
    #[error("spectrum is not a symmetric pair: {0}")]
    SpectrumAsymmetric(String),
    #[error("trace deficiency is not PSD (min eigenvalue {min_eig:.3e})")]
    DeficiencyNotPsd { min_eig: f64 },
    #[error("matrix is not PSD (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("Choi matrix is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },
    #[error("squash map does not verify against the symmetrized POVM (max residual {residual:.3e})")]
    TildeNotVerified { residual: f64 },
    #[error("POVM is not C4-symmetric under the given unitary (max residual {residual:.3e})")]
    NotC4Symmetric { residual: f64 },
    #[error("squash verification failed (max residual {residual:.3e})")]
    VerificationFailed { residual: f64 },
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The stage a pipeline error was raised in, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
