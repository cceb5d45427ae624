use thiserror::Error;

/// Errors raised by the solver modules.
///
/// Every variant maps back to the module that produced it via
/// [`Error::module`], so callers (in particular the CLI) can emit
/// one-line diagnostics naming the failing subsystem.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix {name} is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    AsymmetricMatrix {
        name: &'static str,
        max_asymmetry: f64,
    },

    #[error("{name} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        name: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("system must have at least one degree of freedom")]
    NonPositiveDimension,

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(&'static str),

    #[error("matrizant integration produced non-finite entries by t = {t:.6}")]
    NonFiniteResult { t: f64 },

    #[error("monodromy eigenvector matrix is ill-conditioned (cond = {cond:.3e}); system sits on a stability boundary")]
    DefectiveMonodromy { cond: f64 },

    #[error("inner matrix at recursion depth {depth} is numerically singular (cond = {cond:.3e})")]
    SingularInnerMatrix { depth: usize, cond: f64 },

    #[error("continued-inversion truncation did not converge by depth {n_max}")]
    NoConvergence { n_max: usize },

    #[error("found {found} mode exponents, expected {expected}; a degenerate root or too-coarse scan grid")]
    RootCountMismatch { found: usize, expected: usize },

    #[error("determinant root at beta = {beta:.9} has kernel dimension {multiplicity}")]
    DegenerateRoot { beta: f64, multiplicity: usize },

    #[error("mode recursion residual {residual:.3e} at harmonic index {n} exceeds tolerance")]
    ResidualTooLarge { n: i64, residual: f64 },

    #[error("unstable system: max multiplier modulus = {max_modulus:.6}")]
    UnstableSystem { max_modulus: f64 },

    #[error("marginal system: exponent within {distance:.3e} of an integer")]
    MarginalSystem { distance: f64 },

    #[error("normalization matrix has off-diagonal residual {off_diagonal:.3e}; degenerate exponents need a kernel-basis rotation")]
    NonDiagonalScaling { off_diagonal: f64 },

    #[error("normalization diagonal entry {index} is non-positive ({value:.3e}); mode/conjugate labeling is inconsistent")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("U(t) is numerically singular (cond = {cond:.3e})")]
    SingularU { cond: f64 },

    #[error(
        "driven block system is singular; the homogeneous system admits a pi-periodic solution"
    )]
    SingularBlockSystem,

    #[error("mode-state round trip produced imaginary part {imaginary:.3e}")]
    NonRealRoundTrip { imaginary: f64 },

    #[error("total Hermite degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("occupation number {n} exceeds the supported maximum {max}")]
    OccupationTooLarge { n: usize, max: usize },

    #[error("grid spacing {h:.3e} too coarse; need h <= {required:.3e} to resolve the state")]
    GridTooCoarse { h: f64, required: f64 },
}

impl Error {
    /// Name of the module the error originates from.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            AsymmetricMatrix { .. }
            | DimensionMismatch { .. }
            | NonPositiveDimension
            | InvalidTolerance(_) => "model",
            NonFiniteResult { .. }
            | DefectiveMonodromy { .. }
            | UnstableSystem { .. }
            | MarginalSystem { .. } => "floquet_oracle",
            SingularInnerMatrix { .. }
            | NoConvergence { .. }
            | RootCountMismatch { .. }
            | DegenerateRoot { .. }
            | ResidualTooLarge { .. } => "continued_inversion",
            NonDiagonalScaling { .. }
            | NonPositiveDiagonal { .. }
            | SingularU { .. }
            | NonRealRoundTrip { .. } => "fl_transform",
            SingularBlockSystem => "inhomogeneous",
            DegreeTooLarge { .. } | OccupationTooLarge { .. } | GridTooCoarse { .. } => "quantum",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
