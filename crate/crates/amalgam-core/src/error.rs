use crate::diagnostics::Verdict;

/// Error type shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A partition failed structural validation (overlap, gap, bad range).
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// An operation requiring a noncrossing partition received a crossing one.
    #[error("partition is not noncrossing")]
    NotNoncrossing,

    /// An order parameter fell outside `1..=max` (see `nc_lattice::max_order`).
    #[error("order {n} out of range 1..={max}")]
    OrderOutOfRange { n: usize, max: usize },

    /// `mobius_nc(p, q)` with `p` not below `q` in refinement order.
    #[error("partitions are not comparable in refinement order")]
    NotComparable,

    /// Matrix dimensions or multilinear arities disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A rational string was not in the canonical `p/q` form.
    #[error("invalid rational {0:?}: expected canonical form \"p/q\" in lowest terms with positive denominator")]
    InvalidRational(String),

    /// A requested order exceeds the truncation a series was built with.
    #[error("order {order} exceeds available truncation {truncation}")]
    TruncationExceeded { order: usize, truncation: usize },

    /// Malformed arguments that are not covered by a more specific variant.
    #[error("{0}")]
    InvalidArgument(String),

    /// A diagnostic precondition failed; the refuting verdict is attached.
    #[error("precondition `{check}` failed")]
    PreconditionFailed { check: &'static str, verdict: Box<Verdict> },
}

pub type Result<T> = std::result::Result<T, Error>;
