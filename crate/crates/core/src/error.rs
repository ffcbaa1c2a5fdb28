use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("root solver did not converge after {iterations} iterations (largest correction {max_correction:e})")]
    DidNotConverge { iterations: usize, max_correction: f64 },

    #[error("plant is not proper: {zeros} zeros but only {poles} poles")]
    NotProper { zeros: usize, poles: usize },

    #[error("{kind} {re}{im:+}j has no complex-conjugate partner")]
    NotConjugateClosed { kind: &'static str, re: f64, im: f64 },

    #[error("plant gain is zero")]
    ZeroGain,

    #[error("plant contains a non-finite value")]
    NonFinite,

    #[error("cannot evaluate the plant at a pole (s = {re}{im:+}j)")]
    PoleEvaluation { re: f64, im: f64 },

    #[error("closed loop is degenerate at zero delay (1 + G(inf) = 0)")]
    DegenerateClosedLoop,

    #[error("zero {zero} cancels pole {pole}")]
    PoleZeroCancellation { zero: String, pole: String },

    #[error("denominator leading coefficient is zero")]
    ZeroDenominator,

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    #[error("a pole or zero is {clearance:.3e} from the boundary Re(s) = {sigma0}")]
    BoundaryClearance { sigma0: f64, clearance: f64 },

    #[error("boundary-crossing root of multiplicity > 1 at omega = {omega}, delay = {delay}")]
    MultipleRoot { omega: f64, delay: f64 },

    #[error("no horizontal phase line intersects phi on [{omega_lo}, {omega_hi}]")]
    NoIntersection { omega_lo: f64, omega_hi: f64 },

    #[error("root count would become negative at delay {delay}")]
    NegativeCount { delay: f64 },

    #[error("leaving interval [{omega_lo}, inf) has an unbounded phase range")]
    UnboundedLeavingInterval { omega_lo: f64 },

    #[error("a zero-delay characteristic root lies on the boundary Re(s) = {sigma0}")]
    RootOnBoundary { sigma0: f64 },

    #[error("s = 0 is a characteristic root for every delay (G(0) = -1)")]
    CriticalFrequencyZero,

    #[error("plant has a pole or zero on the imaginary axis")]
    ImaginaryAxisSingularity,

    #[error("characteristic function vanishes on the counting contour")]
    BoundaryRoot,

    #[error("no finite enclosure of the roots in the complementary region (|G(inf)| >= e^(h*sigma0))")]
    UnboundedRegion,

    #[error("argument-principle sampling exceeded {0} evaluations")]
    ContourBudget(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable identifier printed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ZeroPolynomial => "ZeroPolynomial",
            Error::DidNotConverge { .. } => "DidNotConverge",
            Error::NotProper { .. } => "NotProper",
            Error::NotConjugateClosed { .. } => "NotConjugateClosed",
            Error::ZeroGain => "ZeroGain",
            Error::NonFinite => "NonFinite",
            Error::PoleEvaluation { .. } => "PoleEvaluation",
            Error::DegenerateClosedLoop => "DegenerateClosedLoop",
            Error::PoleZeroCancellation { .. } => "PoleZeroCancellation",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::InvalidBoundary(_) => "InvalidBoundary",
            Error::BoundaryClearance { .. } => "BoundaryClearance",
            Error::MultipleRoot { .. } => "MultipleRoot",
            Error::NoIntersection { .. } => "NoIntersection",
            Error::NegativeCount { .. } => "NegativeCount",
            Error::UnboundedLeavingInterval { .. } => "UnboundedLeavingInterval",
            Error::RootOnBoundary { .. } => "RootOnBoundary",
            Error::CriticalFrequencyZero => "CriticalFrequencyZero",
            Error::ImaginaryAxisSingularity => "ImaginaryAxisSingularity",
            Error::BoundaryRoot => "BoundaryRoot",
            Error::UnboundedRegion => "UnboundedRegion",
            Error::ContourBudget(_) => "ContourBudget",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }

    /// Violations of the analysis assumptions that were repaired by
    /// perturbing the boundary; `--strict` escalates these.
    pub fn is_assumption_violation(&self) -> bool {
        matches!(
            self,
            Error::BoundaryClearance { .. } | Error::MultipleRoot { .. } | Error::RootOnBoundary { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
