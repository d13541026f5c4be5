use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// A pairwise distance in the potential vanished (two polygons or two
    /// vertices coincide). `term` identifies the offending summand.
    #[error("collision singularity in potential term {term}")]
    Singular { term: usize },

    /// A loop node sits on (or numerically at) one of the collision axes.
    #[error("generating loop node {index} lies on a collision axis (distance {distance:e})")]
    OnCollisionAxis { index: usize, distance: f64 },

    /// A node violates its endpoint plane constraint.
    #[error("endpoint node {index} is off its symmetry plane by {offset:e}")]
    OffPlane { index: usize, offset: f64 },

    /// The initial guess handed to the solver is not inside the open cone.
    #[error("initial loop is not inside the cone (start margin {start:e}, end margin {end:e})")]
    OutsideCone { start: f64, end: f64 },
}
