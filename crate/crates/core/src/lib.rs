//! Vapor-compression refrigeration cycle toolkit.
//!
//! The crate is organised around one plant description ([`components::PlantParams`])
//! and one refrigerant property interface ([`fluid::PropertyProvider`]):
//!
//! - [`fluid`] — saturation-curve correlations and (P, h) / (P, s) flashes for an
//!   R404a-class refrigerant, plus the partial derivatives the dynamic model needs.
//! - [`components`] — static models of the expansion valve, compressor, evaporator
//!   and condenser built on the effectiveness-NTU method.
//! - [`cycle`] — full steady-cycle closure and the COP-maximizing constrained
//!   optimizer (SQP over the five-variable cycle parametrization).
//! - [`dynmodel`] — the reduced third-order condenser state-space model coupled to
//!   the static components, with an adaptive Runge-Kutta integrator.
//! - [`controllability`] — linear rank analysis and the phase-portrait slope study
//!   of the underactuated condenser dynamics.
//! - [`control`] — the practical NMPC controller and the feedback-plus-feedforward
//!   baseline, sharing one closed-loop log schema.
//! - [`numerics`] — the scalar/vector root solvers, dual active-set QP, SQP driver,
//!   Runge-Kutta pair and Riccati recursions used by the modules above.

pub mod components;
pub mod controllability;
pub mod control;
pub mod cycle;
pub mod dynmodel;
pub mod fluid;
pub mod io;
pub mod numerics;

pub use components::{Disturbances, PlantParams};
pub use fluid::{CorrelationFluid, PropertyProvider, ThermoState};
