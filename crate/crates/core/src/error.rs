use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point fell outside [0,1] or outside a map's stated domain.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// A constructed map would exceed the configured breakpoint budget.
    #[error("piece cap exceeded: operation would create {needed} pieces (cap {cap})")]
    PieceCapExceeded { needed: usize, cap: usize },

    /// Breakpoint list fails the structural rules (ordering, endpoints, range).
    #[error("invalid map: {0}")]
    InvalidMap(String),

    /// A density fails the structural rules (cuts, nonnegativity, total mass).
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// A request is self-inconsistent (bad parameters, malformed plan).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A construction is well-formed but geometrically impossible here
    /// (window too wide, image does not cover, interval collisions...).
    #[error("construction infeasible: {0}")]
    Infeasible(String),

    /// Text input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}
