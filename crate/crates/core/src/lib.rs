//! Geometric trajectory tracking for multirotor vehicles from position and
//! heading references alone, with the reference-derivative filter chain,
//! the auxiliary attitude filter on SO(3), and numerical certification of
//! the closed loop's gain conditions and ultimate bound.

pub mod analysis;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod estimator;
pub mod sim;
pub mod so3;
pub mod telemetry;
pub mod trajectory;

pub use analysis::{CertificateInputs, CertificateReport, Monitors};
pub use config::{ConfigError, ScenarioConfig};
pub use controller::{AttitudeFilterState, ControllerGains, PositionLoopState, ThrustStrategy};
pub use dynamics::{ControlInput, MixerConfig, MultirotorState, VehicleParams};
pub use estimator::{Estimator, EstimatorGains, EstimatorOutput};
pub use sim::{RunMode, RunSummary, SimSetup, StepRecord};
pub use so3::{AttitudeErrorPair, RotationMatrix, SkewMatrix};
pub use trajectory::{Trajectory, TrajectoryBounds, TrajectorySample};
