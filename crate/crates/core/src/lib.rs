//! Springy billiards: event-driven simulation of a light particle bouncing in a
//! billiard whose bottom wall is a spring-mounted heavy bar, the stochastic
//! reduced models of the slow bar motion, and the ensemble pipeline that
//! measures energy equilibration rates.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod reduced;
pub mod roots;

pub use error::{Error, Result};
