use std::path::PathBuf;

use crate::geometry::DeploymentOption;
use crate::scenario::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("unsupported serving count {0} (layouts exist for 1..=6)")]
    UnsupportedCount(usize),

    #[error("no closed-form link-distance pdf for {option} with {count} serving drones")]
    NoClosedForm {
        option: DeploymentOption,
        count: usize,
    },

    #[error("infeasible cycle: ℓ ≥ Tν/2 (ℓ = {ell_m} m, Tν/2 = {bound_m} m)")]
    Infeasible { ell_m: f64, bound_m: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pdf does not normalize: integral = {integral}")]
    Normalization { integral: f64 },

    #[error("quadrature did not converge: estimate {value}, error {error}")]
    Quadrature { value: f64, error: f64 },

    #[error("target {target_bps} bit/s unreachable with at most {max_drones} drones (best {best_bps} bit/s)")]
    UnreachableTarget {
        target_bps: f64,
        best_bps: f64,
        max_drones: usize,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
