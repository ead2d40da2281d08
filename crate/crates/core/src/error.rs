use std::path::PathBuf;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate Möbius matrix (determinant {0:e})")]
    DegenerateMobius(f64),

    #[error("invalid parameter a = {re}{im:+}i: {reason}")]
    InvalidParameter {
        re: f64,
        im: f64,
        reason: &'static str,
    },

    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    #[error(
        "unsupported parameter a = {re}{im:+}i: the Klein pair is only constructed for |a-4| <= 3"
    )]
    UnsupportedParameter { re: f64, im: f64 },

    #[error("size limit: {requested} atoms exceeds the cap of 2^{cap_log2} = {cap}; {hint}")]
    SizeLimit {
        requested: u64,
        cap_log2: u32,
        cap: u64,
        hint: &'static str,
    },

    #[error(
        "root finder did not converge after {sweeps} sweeps (worst residual {worst_residual:e})"
    )]
    RootFinder { sweeps: usize, worst_residual: f64 },

    #[error("degenerate resultant: determinant vanishes across the interpolation grid")]
    DegenerateResultant,

    #[error("resultant interpolation is ill-conditioned (relative check residual {residual:e})")]
    Conditioning { residual: f64 },

    #[error("graph composition failed validation (worst relative residual {worst:e})")]
    Composition { worst: f64 },

    #[error("resultant and branch-Newton periodic points disagree: {0}")]
    CrossValidation(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
