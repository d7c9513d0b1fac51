use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Successive refinements disagree, or a result left its admissible range.
    NumericalAccuracy {
        what: &'static str,
        residual: f64,
    },
    /// Resolvent evaluated on top of a chain eigenvalue.
    Pole {
        x: f64,
    },
    /// `1 - v^4 f f^sigma` vanished (to threshold) at `p`.
    SingularDenominator {
        p: f64,
        modulus: f64,
    },
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
    /// The spectral tail could not be cut below tolerance before the cap.
    TailUnreachable {
        cap: f64,
        tail: f64,
    },
    OrderOutOfRange {
        order: i64,
        max: i64,
    },
    /// Argument must lie in the closed lower half plane.
    HalfPlane {
        im: f64,
    },
    InsufficientData {
        usable: usize,
        required: usize,
    },
    TimeOutOfRange {
        t: f64,
        t_max: f64,
    },
    Eigensolver {
        iterations: usize,
    },
}

impl Error {
    /// Errors caused by bad input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::TailUnreachable { .. }
                | Error::IndexOutOfRange { .. }
                | Error::OrderOutOfRange { .. }
                | Error::TimeOutOfRange { .. }
                | Error::HalfPlane { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NumericalAccuracy { what, residual } => {
                write!(f, "numerical accuracy lost in {what} (residual {residual:e})")
            }
            Error::Pole { x } => write!(f, "resolvent evaluated at the pole x = {x}"),
            Error::SingularDenominator { p, modulus } => {
                write!(f, "denominator |1 - v^4 f_NN f_sigma| = {modulus:e} at p = {p}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for chain length {len}")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            Error::TailUnreachable { cap, tail } => {
                write!(f, "spectral tail mass {tail:e} still above tolerance at the cap eps = {cap}")
            }
            Error::OrderOutOfRange { order, max } => {
                write!(f, "Bessel order {order} exceeds configured maximum {max}")
            }
            Error::HalfPlane { im } => {
                write!(f, "argument must have Im <= 0, got Im = {im}")
            }
            Error::InsufficientData { usable, required } => {
                write!(f, "only {usable} usable points, need at least {required}")
            }
            Error::TimeOutOfRange { t, t_max } => {
                write!(f, "time {t} outside the supported range |t| <= {t_max}")
            }
            Error::Eigensolver { iterations } => {
                write!(f, "tridiagonal eigensolver did not converge after {iterations} iterations")
            }
        }
    }
}

impl core::error::Error for Error {}
