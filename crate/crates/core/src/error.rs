use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("observable is not Hermitian")]
    NotHermitian,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("postselection on qubit {qubit} = {outcome} has zero probability")]
    ZeroProbabilityBranch { qubit: usize, outcome: u8 },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("subsystem selection must be non-empty")]
    EmptySubsystem,

    #[error("chain length {0} is too short, the cluster term needs L >= 3")]
    ChainTooShort(usize),

    #[error("dense form of a {0}-qubit operator is too large")]
    DimensionTooLarge(usize),

    #[error("imaginary time must be non-negative, got {0}")]
    NegativeBeta(f64),

    #[error("scale policy violated: u^2 sigma^2 reaches {0:.6} > 1")]
    ScaleViolation(f64),

    #[error("dilation block matrix is numerically singular")]
    SingularDilation,

    #[error("ground space is degenerate ({0} states); pick a symmetry sector explicitly")]
    DegenerateGround(usize),

    #[error("initial state has no overlap with the ground space")]
    NoGroundOverlap,

    #[error("fidelity {reached:.6} still below {target} at the largest beta {beta}")]
    BetaScheduleExhausted { reached: f64, target: f64, beta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("postselection kept {kept} shots, below the minimum {min}")]
    PostselectionStarved { kept: u64, min: u64 },

    #[error("trace {0:.6} deviates from 1")]
    TraceDeviation(f64),
}

pub type Result<T> = std::result::Result<T, SimError>;
