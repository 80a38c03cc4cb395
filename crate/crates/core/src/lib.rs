//! Reactive navigation by projecting a goal-seeking velocity onto the
//! tangent cone of the free space.
//!
//! The core is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`). The aliases at the crate root fix it to `f64`, with `*32`
//! variants for single precision.

// `!(a > b)` is used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod geometry;
mod linalg;
pub mod real;
pub mod scenes;
pub mod sensors;
pub mod sim;
pub mod sphere_world;
pub mod vector;

pub use error::{Error, Result};
pub use real::Real;

pub use control::{
    cone_contains, margin_violated, nominal_control, project_discontinuous, project_smooth, smoothing_factor,
    Mode,
};
pub use geometry::{Feature, LevelField, ValidationReport, Violation, WallSide};
pub use sim::{batch_run, run, run_from, safety_audit, BatchSummary, ControllerKind, Outcome};

pub type Vector = vector::Vector<f64>;
pub type Point = vector::Point<f64>;
pub type Ball = geometry::Ball<f64>;
pub type Obstacle = geometry::Obstacle<f64>;
pub type LevelFunction = geometry::LevelFunction<f64>;
pub type Environment = geometry::Environment<f64>;
pub type BoundaryQuery = geometry::BoundaryQuery<f64>;
pub type QueryOptions = geometry::QueryOptions<f64>;
pub type ControllerConfig = control::ControllerConfig<f64>;
pub type SafetyInput = control::SafetyInput<f64>;
pub type Command = control::Command<f64>;
pub type TangentProjector = control::TangentProjector<f64>;
pub type LidarScan = sensors::LidarScan<f64>;
pub type StereoRig = sensors::StereoRig<f64>;
pub type DepthMap = sensors::DepthMap<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type Trajectory = sim::Trajectory<f64>;
pub type SphereWorld = sphere_world::SphereWorld<f64>;

pub type Vector32 = vector::Vector<f32>;
pub type Point32 = vector::Point<f32>;
pub type Environment32 = geometry::Environment<f32>;
pub type ControllerConfig32 = control::ControllerConfig<f32>;
pub type SimConfig32 = sim::SimConfig<f32>;
