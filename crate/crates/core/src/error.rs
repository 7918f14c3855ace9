use thiserror::Error;

/// Errors raised across the device model, solver and file boundary.
#[derive(Debug, Error)]
pub enum Error {
    #[error("device_model: ({v} V, {r} kΩ) outside fitted domain V∈[{v_lo}, {v_hi}], HRS∈[{r_lo}, {r_hi}]")]
    OutOfDomain {
        v: f64,
        r: f64,
        v_lo: f64,
        v_hi: f64,
        r_lo: f64,
        r_hi: f64,
    },
    #[error("device_model: pulse width must be positive, got {0} s")]
    NonPositivePulse(f64),
    #[error("device_model: Set time must be positive, got {0} s")]
    NonPositiveTime(f64),
    #[error("device_model: degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("device_model: target μ = {target} unattainable, reachable range [{lo}, {hi}]")]
    Unattainable { target: f64, lo: f64, hi: f64 },
    #[error("device_model: μ is not monotone in HRS along V = {0} V")]
    NonMonotone(f64),
    #[error("device_model: invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("maxcut: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("maxcut: node index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("sampler: instance '{0}' has no best-known cut")]
    MissingBestKnown(String),
    #[error("sampler: invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("experiments: need at least {needed} traces, got {got}")]
    InsufficientTraces { needed: usize, got: usize },

    #[error("io_ingest: line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("io_ingest: line {line}: duplicate edge ({i}, {j})")]
    DuplicateEdge { line: usize, i: usize, j: usize },
    #[error("io_ingest: line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("io_ingest: line {line}: node {node} outside 1..={n}")]
    NodeOutOfRange { line: usize, node: usize, n: usize },
    #[error("io_ingest: average degree {avg_degree} invalid for n = {n}")]
    InvalidDegree { n: usize, avg_degree: f64 },
    #[error("io_ingest: brute force limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("io_ingest: {0}")]
    Io(#[from] std::io::Error),
    #[error("io_ingest: json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io_ingest: csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
