//! Detection of primary user emulation (PUE) attacks against a mobile
//! primary user.
//!
//! The primary user is tracked with a linear Kalman filter; the distance
//! between the tracked position and an anchor node is compared with the
//! distance implied by the received signal strength under a free-space
//! path-loss model. A large disagreement flags the transmitter as an
//! emulation attacker.
//!
//! Modules, bottom-up:
//!
//! * [`tracking`]: constant-velocity Kalman filter with acceleration input.
//! * [`propagation`]: free-space path loss, noisy RSS and distance inversion.
//! * [`scenario`]: ground truth, anchors, attacker geometry, synthetic
//!   measurements.
//! * [`detection`]: the threshold decision, the fixed-reference RSS baseline,
//!   and threshold calibration.
//! * [`experiments`]: seeded Monte Carlo harness and sweeps producing
//!   P_d / P_fa / P_m.

pub mod detection;
pub mod error;
pub mod experiments;
pub mod propagation;
pub mod rng;
pub mod scenario;
pub mod tracking;

pub use detection::{DetectorConfig, Fusion, Label, Observation, Verdict};
pub use error::{Error, Result};
pub use experiments::{Experiment, MetricsReport, ThresholdPolicy, TrackPoint, TrialOutcome};
pub use propagation::{LinkModel, NoiseModel, RssSample};
pub use scenario::{AnchorNode, Scenario, Segment, Trajectory, Transmitter};
pub use tracking::{Covariance, FilterEstimate, MeasurementModel, MotionModel, TargetState};

/// A point or 2-vector in the plane, `[x, y]`.
pub type Vec2 = [f64; 2];
