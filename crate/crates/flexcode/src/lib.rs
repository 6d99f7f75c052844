//! Flexible storage codes: layered erasure codes that recover the full
//! information from a variable number of nodes.
//!
//! An `(n, k, l)` flexible code is parameterized by tuples `(R_j, k_j, l_j)`
//! with `k_j * l_j = k * l`; reading the first `l_j` rows of any `R_j` nodes
//! recovers everything. Four families are provided:
//!
//! * [`mds`] — Reed–Solomon rows, `R_j = k_j`;
//! * [`lrc`] — Tamo–Barg locally recoverable rows, `R_j = k_j + k_j/r - 1`,
//!   single-node repair from `r` in-group helpers;
//! * [`pmds`] — Gabidulin outer code + per-row MDS, tolerating node failures
//!   plus `s` arbitrary symbol failures;
//! * [`msr`] — Ye–Barg style vector rows with minimum-bandwidth repair.
//!
//! [`latency`] models the data-access latency gain of flexible decoding
//! (closed forms and Monte Carlo), and [`shard`]/[`cli`] put codewords on
//! disk behind the `flexcode` command-line tool.

use thiserror::Error;

pub mod cli;
pub mod field;
pub mod latency;
pub mod layered;
pub mod linalg;
pub mod lrc;
pub mod mds;
pub mod msr;
pub mod pmds;
pub mod shard;

pub use field::{coset_reps, ff_arith, rank_over_base, CosetPartition, Field, FieldElement};
pub use layered::{
    extra_parity_target, validate_profile, CodewordArray, Family, FlexProfile, LayerPlan,
    LayerTuple,
};
pub use linalg::Matrix;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors across field arithmetic, codecs, the latency engine and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("{0} is not the order of a subfield of GF({1})")]
    NotASubfield(u64, u64),
    #[error("requested {requested} coset representatives but only {available} cosets exist")]
    CosetCount { requested: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular or rank-deficient linear system")]
    Singular,
    #[error("inconsistent linear system")]
    Inconsistent,
    #[error("evaluation points must be pairwise distinct")]
    DuplicatePoints,
    #[error("invalid profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("index out of range: {0}")]
    IndexRange(String),
    #[error("need exactly {need} columns, got {have}")]
    ColumnCount { have: usize, need: usize },
    #[error("decode failed in layer {layer}, row {row}: {source}")]
    InnerDecode {
        layer: usize,
        row: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("only {have} independent evaluations available, need {need}")]
    RankDeficient { have: usize, need: usize },
    #[error("helper node {0} unavailable")]
    MissingHelper(usize),
    #[error("exactly one node may be missing for repair")]
    RepairFailureCount,
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed shard: {0}")]
    ShardFormat(String),
    #[error("shard header checksum mismatch")]
    Checksum,
    #[error("no layer is decodable from {0} shards")]
    NoFeasibleLayer(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Profile validation failures, one variant per violated constraint.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("empty tuple list")]
    Empty,
    #[error("layer {layer}: k_j*l_j = {product}, expected k*l = {expected}")]
    Product {
        layer: usize,
        product: usize,
        expected: usize,
    },
    #[error("dimensions k_j must be strictly decreasing")]
    DimsNotDecreasing,
    #[error("row counts l_j must be strictly increasing")]
    RowsNotIncreasing,
    #[error("last layer must have k_a = k and l_a = l")]
    LastLayer,
    #[error("recovery threshold R_1 = {0} exceeds n = {1}")]
    ThresholdExceedsN(usize, usize),
    #[error("divisibility violated: {0}")]
    Divisibility(String),
    #[error("threshold {stored} does not match the family rule (expected {expected})")]
    ThresholdRule { stored: usize, expected: usize },
}
