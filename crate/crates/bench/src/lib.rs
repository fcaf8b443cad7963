//! Shared fixtures for the criterion benches under `benches/`.

use pue_core::experiments::Experiment;
use pue_core::tracking::{Covariance, FilterEstimate, MeasurementModel, MotionModel, TargetState};
use pue_core::Scenario;

pub fn prior() -> FilterEstimate {
    FilterEstimate::new(
        TargetState::new(100.0, 100.0, 5.0, 3.0),
        Covariance::from_diagonal([25.0, 25.0, 100.0, 100.0]).unwrap(),
    )
}

pub fn models() -> (MotionModel, MeasurementModel) {
    (MotionModel::new(1.0, 0.01, 0.01).unwrap(), MeasurementModel::isotropic(5.0).unwrap())
}

/// The default scenario evaluated at `eval_step`.
pub fn scenario(eval_step: usize) -> Scenario {
    Scenario { eval_step: Some(eval_step), ..Scenario::default() }
}

pub fn experiment(n_trials: usize) -> Experiment {
    Experiment::new(Scenario::default(), n_trials, 1)
}
