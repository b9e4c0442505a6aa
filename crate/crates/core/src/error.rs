use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate geometry: stem length {ell} at bar position {y_b} is not positive")]
    DegenerateGeometry { y_b: f64, ell: f64 },

    #[error("throat width {w} outside [0, {h}]")]
    WidthOutOfRange { w: f64, h: f64 },

    #[error("point ({x}, {y}) lies outside the billiard (bar at {y_b})")]
    OutsideDomain { x: f64, y: f64, y_b: f64 },

    #[error("bar energy {e_b} exceeds total energy {e}")]
    EnergyExceeded { e_b: f64, e: f64 },

    #[error("missed collision at t={t}: penetration {depth} beyond tolerance")]
    MissedCollision { t: f64, depth: f64 },

    #[error("event stall at t={t}: {events} events without time advancing")]
    EventStall { t: f64, events: usize },

    #[error("penetration budget exhausted at t={t}: {projections} boundary projections")]
    PenetrationBudget { t: f64, projections: usize },

    #[error("integrator failure at t={t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("captured orbit never restores throat width {w_c} (t={t})")]
    NoRelease { t: f64, w_c: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("half-way crossing not reached before t_end={t_end}")]
    NoCrossing { t_end: f64 },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("member {member} of run {run} failed: {source}")]
    Member {
        run: u32,
        member: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory failed at t={t}: {source}")]
    Trajectory {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}
