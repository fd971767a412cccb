use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("degree {0} is outside the supported range 2..={max}", max = crate::permgroup::MAX_DEGREE)]
    DegreeOutOfRange(usize),

    #[error("not a permutation of 1..={degree}: {reason}")]
    InvalidPermutation { degree: usize, reason: String },

    #[error("fixed-point-free involutions require an even degree, got {0}")]
    OddDegree(usize),

    #[error("index {index} is out of range for S_{degree} (size {size})")]
    IndexOutOfRange { index: u64, degree: usize, size: u64 },

    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("permutation {0} is not a fixed-point-free involution")]
    NotInvolution(String),

    #[error("state layout has no ancilla qubit")]
    NoAncilla,

    #[error("layout already has an ancilla qubit")]
    AncillaPresent,

    #[error("register {index} does not exist (layout has {count})")]
    InvalidRegister { index: usize, count: usize },

    #[error("operation needs two distinct registers, got {0} twice")]
    SameRegister(usize),

    #[error("layouts differ")]
    LayoutMismatch,

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("state has no amplitude left after projection")]
    ZeroProjection,

    #[error("register {0} is entangled with the rest of the state")]
    NotSeparable(usize),

    #[error("dense oracle needs n! <= 5040, got n = {0}")]
    OracleTooLarge(usize),

    #[error("message length must be even and positive, got {0}")]
    OddLength(usize),

    #[error("expected a bitstring of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),

    #[error("handle {handle} is held by {holder}, not {requester}")]
    NotOwner {
        handle: u64,
        holder: String,
        requester: String,
    },

    #[error("unknown quantum handle {0}")]
    UnknownHandle(u64),

    #[error("channel error: {0}")]
    Channel(String),

    #[error("malformed δ = {0}: a candidate γ is not a fixed-point-free involution")]
    MalformedDelta(String),

    #[error("protocol violation: {0}")]
    Protocol(String),
}
