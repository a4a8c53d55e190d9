//! Constant-depth preparation of matrix product states with adaptive circuits.
//!
//! This crate is a classical simulation and analysis toolkit for preparing
//! matrix product states (MPS) in constant depth using mid-circuit
//! measurements and feedforward corrections. The workflow mirrors the
//! three-step strategy of fusion-based state preparation:
//!
//! 1. prepare many small MPS segments in parallel with sequential unitary
//!    circuits ([`protocols::sequential_prepare`]),
//! 2. fuse neighbouring segments by measuring pairs of bond qudits in a
//!    maximally entangled basis ([`sim::fusion_basis_unitary`]), which
//!    deposits a random unitary defect at each fusion site, and
//! 3. remove the defects with classically conditioned local unitaries derived
//!    from operator pushing relations ([`pushing::build_pushing_table`],
//!    [`protocols::resolve_defects`]).
//!
//! The crate is organised into modules that can be used independently:
//!
//! - [`tensor`]: MPS site tensors, canonical forms, blocking, transfer-matrix
//!   analysis, and the dense-state oracle used for exact verification.
//! - [`groups`]: finite groups, unitary projective representations with
//!   cocycles, POVM-completeness checks, and coset machinery for
//!   symmetry-broken states.
//! - [`pushing`]: numerical oracles for the existence and unitarity of
//!   pushing relations, the physical-correction solver, and pushing-table
//!   search.
//! - [`sim`]: a dense statevector simulator over heterogeneous qudit
//!   registers.
//! - [`protocols`]: the normal-MPS and non-normal-MPS preparation protocols
//!   end to end, including all-branch enumeration, boundary projection, and
//!   random-MPS / SPT-phase sampling.
//! - [`constructor`]: manufacture families of symmetric MPS tensors from a
//!   group representation.
//! - [`gallery`]: canned example tensors with their documented metadata.
//! - [`report`]: deterministic serialization of tensors, representations,
//!   tables, and protocol reports.
//!
//! All operations are pure functions over immutable inputs except for the
//! statevector, which is single-owner mutable during a simulation run. All
//! randomness flows through explicitly seeded generators, so identical seeds
//! reproduce identical results bit for bit.
//!
//! # Conventions
//!
//! - A site tensor is a set of `d` complex `D x D` matrices `A^m`. The
//!   virtual-to-physical map `Abar` is the `d x D^2` matrix whose row `m` is
//!   the row-major flattening of `A^m`.
//! - Left-canonical form: `sum_m (A^m)^dag A^m = 1`.
//! - Dense amplitude vectors use mixed-radix positional indexing with wire 0
//!   most significant.
//! - Pushing relations read `O_p Abar = Abar (O_l^T (x) O_r)`, equivalently
//!   `sum_n (O_p)_{mn} A^n = O_l A^m O_r`.

pub mod constructor;
pub mod gallery;
pub mod groups;
pub mod linalg;
pub mod protocols;
pub mod pushing;
pub mod report;
pub mod sim;
pub mod tensor;

/// Default tolerance for residual checks (canonical form, unitarity, ...).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance for commutator-based pushing checks. Slightly looser than
/// [`DEFAULT_TOL`] to absorb the conditioning of the pseudo-inverse.
pub const COMMUTATOR_TOL: f64 = 1e-9;

/// Relative singular-value cutoff for surjectivity reduction: singular values
/// below `SVD_CUTOFF_REL * sigma_max` are treated as zero.
pub const SVD_CUTOFF_REL: f64 = 1e-12;

/// Default memory budget in complex amplitudes.
pub const DEFAULT_BUDGET: usize = 1 << 26;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("memory budget exceeded: need {needed} amplitudes, budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("zero-probability projection")]
    ZeroProbability,
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("tensor is not left-canonical (residual {0:.3e})")]
    NotCanonical(f64),
    #[error("pushing table incomplete for defect index {0}")]
    IncompleteTable(usize),
    #[error("unsupported family: {0}")]
    Unsupported(String),
    #[error("transfer fixed point is not positive definite; decompose the tensor into blocks first")]
    Degenerate,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear algebra backend error: {0}")]
    Linalg(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
