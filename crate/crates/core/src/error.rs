use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({re}, {im}) is not in the open unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("euclidean radius {0:e} of pseudohyperbolic disk underflows")]
    RadiusUnderflow(f64),

    #[error("duplicate zeros at index {0} and {1}")]
    DuplicateZero(usize, usize),

    #[error("constraint points {0} and {1} coincide with different bounds")]
    DegenerateConstraints(usize, usize),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("too many pair constraints: {0} (limit {1})")]
    Oversize(usize, usize),

    #[error("start point is inside or within the shell of a boundary")]
    StartOnBoundary,

    #[error("{censored} of {walks} walks hit the step cap")]
    Censored { censored: u64, walks: u64 },

    #[error("holes {0} and {1} overlap")]
    OverlappingHoles(usize, usize),

    #[error("all generators vanish at grid point {0}")]
    CommonZero(usize),

    #[error("no bracket: local maximum {max} of log|B| is below target {target}")]
    NoBracket { max: f64, target: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
