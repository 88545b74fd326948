use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input arity mismatch: expected {expected} bits, got {got}")]
    InputArity { expected: usize, got: usize },

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: dangling reference `{reference}`")]
    DanglingReference { line: usize, reference: String },

    #[error("line {line}: `{reference}` is not defined before its use (cycle or out-of-order gate)")]
    OrderViolation { line: usize, reference: String },

    #[error("unsupported circuit spec: {0}")]
    Spec(String),

    #[error("circuit with {gates} gates does not fit a grid of {columns} columns")]
    GridTooSmall { gates: usize, columns: usize },

    #[error("malformed chromosome: {0}")]
    Decode(String),

    #[error("interface mismatch: golden has {golden_inputs} inputs/{golden_outputs} outputs, candidate has {candidate_inputs}/{candidate_outputs}")]
    InterfaceMismatch { golden_inputs: usize, golden_outputs: usize, candidate_inputs: usize, candidate_outputs: usize },

    #[error(
        "input space 2^{inputs} exceeds the exhaustive enumeration limit 2^{limit}; use the SAT-based check instead"
    )]
    InputSpaceTooLarge { inputs: usize, limit: usize },

    #[error("seed circuit could not be verified within the error bound")]
    UnverifiableSeed,

    #[error("solver returned a witness that does not violate the bound (internal error)")]
    UnsoundWitness,

    #[error("final circuit failed the closing error-bound check (internal error)")]
    FinalCheckFailed,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
