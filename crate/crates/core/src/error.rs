use thiserror::Error;

use crate::mesh::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh has no cells")]
    EmptyMesh,
    #[error("vertex {0} has non-finite coordinates")]
    NonFiniteVertex(usize),
    #[error("cell {cell}: vertex index {index} is out of range")]
    VertexOutOfRange { cell: usize, index: usize },
    #[error("cell {0} has fewer than three distinct vertices")]
    TooFewVertices(usize),
    #[error("cell {0} is degenerate (zero or non-finite area)")]
    DegenerateCell(usize),
    #[error("cell {0} is not counter-clockwise")]
    ClockwiseCell(usize),
    #[error("cell {0} is not a simple polygon")]
    NonSimpleCell(usize),
    #[error("cell coverage overlap or gap at segment ({}, {}) - ({}, {}): {detail}", .a.x, .a.y, .b.x, .b.y)]
    Coverage { a: Point, b: Point, detail: String },
    #[error("invalid generator argument: {0}")]
    InvalidGenerator(String),
    #[error("cell {0} could not be triangulated")]
    Triangulation(usize),
    #[error("quadrature order {0} is not supported (max {max})", max = crate::quadrature::MAX_ORDER)]
    UnsupportedOrder(usize),
    #[error("polynomial degree {0} is not supported (max {max})", max = crate::poly_space::MAX_DEGREE)]
    UnsupportedDegree(usize),
    #[error("cell id {0} is out of range")]
    CellOutOfRange(usize),
    #[error("local mass matrix of cell {0} is singular")]
    SingularMass(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("discrete functions live on different meshes or spaces")]
    MismatchedSpaces,
    #[error("matrix not positive definite: penalty α is likely below the coercivity threshold")]
    NotPositiveDefinite,
    #[error("solver did not converge at level {level} (relative residual {residual:.3e})")]
    NotConverged { level: usize, residual: f64 },
    #[error("diagonal block starting at row {0} is singular")]
    SingularBlock(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("power iteration stagnated after {0} iterations")]
    Stagnation(usize),
    #[error("levels must strictly decrease h")]
    LevelOrder,
    #[error("need at least {0} levels")]
    TooFewLevels(usize),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
