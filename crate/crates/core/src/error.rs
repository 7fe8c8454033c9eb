//! Shared error type for the geometric kernels.
//!
//! Every fallible operation in this crate reports through [`Error`]; the
//! variants are deliberately coarse-grained (one per failure *class*) with a
//! human-readable payload, since callers mostly branch on "configuration
//! mistake vs. numerical degeneracy" when deciding an exit code.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the documented domain of an operation
    /// (wrong curvature sign, radius past the chart cap, bad resolution, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A surface or grid could not be constructed from the given data.
    #[error("construction error: {0}")]
    Construction(String),

    /// A quantity that must be bounded away from zero collapsed
    /// (metric determinant, azimuthal gradient floor, flow time step, ...).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// A curvature precondition (mean convexity, Garding cone membership)
    /// failed at specific grid nodes.
    #[error("precondition violation in {op}: {what} at {} node(s), first at index {}", nodes.len(), nodes.first().copied().unwrap_or(0))]
    Precondition {
        op: &'static str,
        what: String,
        nodes: Vec<usize>,
    },

    /// A radial root search found no sign change: the requested level set is
    /// not starshaped around the configured center.
    #[error("level set not starshaped: no bracket on ray {ray} (direction {dir:?})")]
    NonStarshaped { ray: usize, dir: [f64; 3] },

    /// The ambient gradient fell below the configured floor during a
    /// level-set computation.
    #[error("gradient floor: |grad f| = {value:.3e} < {floor:.3e} at {where_}")]
    GradientFloor {
        value: f64,
        floor: f64,
        where_: String,
    },

    /// An optimizer exhausted its iteration budget; the payload carries the
    /// best iterate found so that diagnostics can still be reported.
    #[error("fit did not converge after {iters} sweeps (best objective {best_objective:.6e})")]
    FitNonConvergence {
        iters: usize,
        best_objective: f64,
        center: [f64; 3],
        radius: f64,
    },

    /// Too few random samples survived a rejection filter.
    #[error("sampling error: only {accepted} of {requested} samples accepted (need >= {min})")]
    Sampling {
        accepted: usize,
        requested: usize,
        min: usize,
    },

    /// The adaptive flow stepper halved its way below the minimum step.
    #[error("flow stalled at t = {t:.6}: dt fell below {min_dt:.3e} ({reason})")]
    FlowStall { t: f64, min_dt: f64, reason: String },

    /// Monotone inversion of a radial profile failed.
    #[error("profile inversion error: {0}")]
    Inversion(String),

    /// A boundary-value check failed (field does not vanish on the surface).
    #[error("boundary value error: {0}")]
    BoundaryValue(String),

    /// The operation is not defined for this spaceform.
    #[error("unsupported spaceform: {0}")]
    Unsupported(String),
}
