//! Train motion planning and tracking control on a track-condition map.
//!
//! The crate is organized as a pipeline:
//!
//! * [`trackmap`] — location-indexed track data: inclination, speed limits,
//!   weather-dependent adhesion profiles, and the station timetable.
//! * [`dynamics`] — longitudinal train model, the 7-row feasibility
//!   constraint vector, and a fixed-step plant integrator.
//! * [`qpcore`] — dense convex QP solver with two-sided linear constraints,
//!   shared by the reference solver and the online controller.
//! * [`refsolve`] — offline computation of input-minimal reference
//!   trajectories per route leg by direct multiple shooting + SQP.
//! * [`ltv`] — linearization of the dynamics along a reference and exact
//!   zero-order-hold discretization.
//! * [`trackmpc`] — receding-horizon tracking controller that keeps the
//!   applied lever inside the adhesion and comfort envelopes.
//! * [`simloop`] — closed-loop scenario harness (good traction, weather
//!   switch, departure delay) with metrics and CSV export.

pub mod demo;
pub mod dynamics;
pub mod ltv;
pub mod qpcore;
pub mod refsolve;
pub mod simloop;
pub mod trackmap;
pub mod trackmpc;

pub use dynamics::{MassInterval, State, TrainParams};
pub use trackmap::{Leg, Map, Station, TrackSegment, TractionCondition};
