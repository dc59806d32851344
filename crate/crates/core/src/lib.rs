//! Numerical toolkit for the free Jacobi process: moment hierarchies,
//! characteristic flows, the deformed map and its phase transitions,
//! saddle-point asymptotics, Wachter-type measures, the dynamical identity and
//! random-matrix checks.
//!
//! The analytic core is generic over [`Real`] (`f32` or `f64`); the matrix,
//! quadrature and acceptance layers work in `f64`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod chi_saddle;
pub mod dynamic;
pub mod flow;
pub mod fubm;
pub mod jacobi_moments;
pub mod linalg;
pub mod matrix_mc;
pub mod positivity;
pub mod scalar;
pub mod series;
pub mod vmap;
pub mod wachter;

pub use scalar::Real;

pub type Series = series::TruncatedSeries<f64>;
pub type Series32 = series::TruncatedSeries<f32>;
pub type Trajectory = jacobi_moments::MomentTrajectory<f64>;
pub type Trajectory32 = jacobi_moments::MomentTrajectory<f32>;
pub type FlowPoint = flow::FlowPoint<f64>;
pub type FlowPoint32 = flow::FlowPoint<f32>;
pub type PhaseReport = vmap::PhaseReport<f64>;
pub type PhaseReport32 = vmap::PhaseReport<f32>;
pub type SaddleReport = chi_saddle::SaddleReport<f64>;
pub type SaddleReport32 = chi_saddle::SaddleReport<f32>;
