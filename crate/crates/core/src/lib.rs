//! Deterministic 2D multi-UAV simulator with a self-reconfigurable V-shape
//! formation controller.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases. Scenario files,
//! logs and the CLI work in `f64`.

pub mod behaviors;
pub mod cli;
pub mod formation;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod scalar;
pub mod scenario;
pub mod simulator;

pub use scalar::Scalar;

pub type Vec2F64 = geometry::Vec2<f64>;
pub type Vec2F32 = geometry::Vec2<f32>;
pub type ObstacleF64 = geometry::Obstacle<f64>;
pub type ObstacleF32 = geometry::Obstacle<f32>;
pub type FormationSpecF64 = formation::FormationSpec<f64>;
pub type FormationSpecF32 = formation::FormationSpec<f32>;
pub type UavStateF64 = formation::UavState<f64>;
pub type GainsF64 = behaviors::Gains<f64>;
pub type GainsF32 = behaviors::Gains<f32>;
pub type SimConfigF64 = simulator::SimConfig<f64>;
pub type SimConfigF32 = simulator::SimConfig<f32>;
pub type WorldStateF64 = simulator::WorldState<f64>;
pub type ScenarioF64 = scenario::Scenario<f64>;
pub type ScenarioF32 = scenario::Scenario<f32>;
pub type RunOutputF64 = simulator::RunOutput<f64>;
