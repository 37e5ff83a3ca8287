use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {defect:.3e} exceeds {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("function undefined at eigenvalue {at}")]
    DomainError { at: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("band edges must be strictly increasing with odd count, got {0:?}")]
    InvalidBands(Vec<f64>),
    #[error("point {0} lies on the spectrum and no boundary side was given")]
    OnCut(f64),
    #[error("pencil is not self-adjoint (defect {0:.3e})")]
    NotSelfAdjoint(f64),
    #[error("leading pencil coefficient is not positive definite")]
    LeadingNotPositive,
    #[error("rational expression does not reduce to a polynomial (pole residual {0:.3e})")]
    NotPolynomial(f64),
    #[error("root {root} lies outside the admissible zones")]
    ZoneViolation { root: f64 },
    #[error("residue at {at} could not be resolved")]
    DegenerateResidue { at: f64 },
    #[error("matrix is singular at z = {re}{im:+}i")]
    SingularF { re: f64, im: f64 },
    #[error("M_- - M_+ is singular at z = {re}{im:+}i")]
    SingularDifference { re: f64, im: f64 },
    #[error("boundary-value extrapolation diverged (spread {0:.3e})")]
    ExtrapolationDiverged(f64),
    #[error("quadrature did not converge (last change {0:.3e})")]
    QuadratureNotConverged(f64),
    #[error("band gap [{0}, {1}] is degenerate")]
    DegenerateGap(f64, f64),
    #[error("argument is within {0:.3e} of a lattice pole")]
    PoleProximity(f64),
    #[error("ODE step size underflow at x = {0}")]
    StepUnderflow(f64),
    #[error("pencil identities drifted to {residual:.3e} at x = {x}")]
    IdentityDrift { x: f64, residual: f64 },
    #[error("scan window is too narrow to bracket any edge")]
    WindowTooNarrow,
    #[error("need derivatives up to order {needed}, have {have}")]
    InsufficientDerivatives { needed: usize, have: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Whether the failure came from an iterative method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ExtrapolationDiverged(_)
                | Error::QuadratureNotConverged(_)
                | Error::StepUnderflow(_)
                | Error::IdentityDrift { .. }
                | Error::DegenerateResidue { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
