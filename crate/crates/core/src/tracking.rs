//! Linear Kalman filter for a planar constant-velocity target driven by a
//! known acceleration input.
//!
//! State order is `[x, y, vx, vy]`. The acceleration noise enters through
//! the control matrix, so the state-space process noise is
//! `B · diag(σ²_wx, σ²_wy) · Bᵀ`.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Vec2;

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Eigenvalues may dip this far below zero, relative to the trace.
pub const PSD_TOL: f64 = 1e-9;
/// `S` is treated as singular when `|det S| < DEGENERACY_TOL · trace(S)²`.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl TargetState {
    pub const fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self { x, y, vx, vy }
    }

    pub fn position(&self) -> Vec2 {
        [self.x, self.y]
    }

    pub fn velocity(&self) -> Vec2 {
        [self.vx, self.vy]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.vx.is_finite() && self.vy.is_finite()
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.vx, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// 4×4 state error covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance(Matrix4<f64>);

impl Covariance {
    /// Wrap a matrix, checking that it is finite, symmetric and PSD.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let c = Self(m);
        c.check()?;
        Ok(c)
    }

    pub fn from_diagonal(d: [f64; 4]) -> Result<Self> {
        Self::new(Matrix4::from_diagonal(&Vector4::from(d)))
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.0;
        (0..4).all(|i| (0..4).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOL * m[(i, j)].abs().max(1.0)))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn is_psd(&self) -> bool {
        let floor = -PSD_TOL * self.trace().abs().max(f64::MIN_POSITIVE);
        self.min_eigenvalue() >= floor
    }

    pub fn check(&self) -> Result<()> {
        if !self.0.iter().all(|v| v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        if !self.is_symmetric() {
            return Err(invalid("covariance is not symmetric"));
        }
        if !self.is_psd() {
            return Err(invalid(format!(
                "covariance is not positive semidefinite (min eigenvalue {:e})",
                self.min_eigenvalue()
            )));
        }
        Ok(())
    }

    fn symmetrized(m: Matrix4<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }
}

/// Constant-velocity motion with white acceleration noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub dt: f64,
    pub sigma_wx2: f64,
    pub sigma_wy2: f64,
}

impl MotionModel {
    pub fn new(dt: f64, sigma_wx2: f64, sigma_wy2: f64) -> Result<Self> {
        let m = Self { dt, sigma_wx2, sigma_wy2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return Err(invalid(format!("dt must be finite and >= 0, got {}", self.dt)));
        }
        for (name, v) in [("sigma_wx2", self.sigma_wx2), ("sigma_wy2", self.sigma_wy2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn transition(&self) -> Matrix4<f64> {
        let mut a = Matrix4::identity();
        a[(0, 2)] = self.dt;
        a[(1, 3)] = self.dt;
        a
    }

    /// Maps `(a_x, a_y)` onto `(x, y, vx, vy)` increments.
    pub fn control(&self) -> Matrix4x2<f64> {
        let h = 0.5 * self.dt * self.dt;
        Matrix4x2::new(
            h, 0.0, //
            0.0, h, //
            self.dt, 0.0, //
            0.0, self.dt,
        )
    }

    pub fn process_noise(&self) -> Matrix4<f64> {
        let b = self.control();
        b * Matrix2::from_diagonal(&Vector2::new(self.sigma_wx2, self.sigma_wy2)) * b.transpose()
    }
}

/// Direct position observation `z = C·x + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    r: Matrix2<f64>,
}

impl MeasurementModel {
    pub fn new(r: Matrix2<f64>) -> Result<Self> {
        if !r.iter().all(|v| v.is_finite()) {
            return Err(invalid("measurement covariance has non-finite entries"));
        }
        if (r[(0, 1)] - r[(1, 0)]).abs() > SYMMETRY_TOL * r[(0, 1)].abs().max(1.0) {
            return Err(invalid("measurement covariance is not symmetric"));
        }
        let det = r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)];
        let tr = r.trace().abs();
        if r[(0, 0)] < -PSD_TOL * tr || r[(1, 1)] < -PSD_TOL * tr || det < -PSD_TOL * tr * tr {
            return Err(invalid("measurement covariance is not positive semidefinite"));
        }
        Ok(Self { r })
    }

    /// `R = σ²·I`.
    pub fn isotropic(std: f64) -> Result<Self> {
        if !(std.is_finite() && std >= 0.0) {
            return Err(invalid(format!("measurement std must be finite and >= 0, got {std}")));
        }
        Self::new(Matrix2::identity() * (std * std))
    }

    pub fn noise(&self) -> &Matrix2<f64> {
        &self.r
    }

    pub fn selector() -> Matrix2x4<f64> {
        Matrix2x4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterEstimate {
    pub state: TargetState,
    pub covariance: Covariance,
}

impl FilterEstimate {
    pub fn new(state: TargetState, covariance: Covariance) -> Self {
        Self { state, covariance }
    }

    /// Position from the first measurement, zero velocity, and
    /// `P₀ = diag(R₁₁, R₂₂, v_max², v_max²)`.
    pub fn from_first_measurement(z: Vec2, meas: &MeasurementModel, v_max: f64) -> Result<Self> {
        if !(z[0].is_finite() && z[1].is_finite()) {
            return Err(invalid("initial measurement is not finite"));
        }
        if !(v_max.is_finite() && v_max >= 0.0) {
            return Err(invalid(format!("v_max must be finite and >= 0, got {v_max}")));
        }
        let r = meas.noise();
        let p0 = Covariance::from_diagonal([r[(0, 0)], r[(1, 1)], v_max * v_max, v_max * v_max])?;
        Ok(Self::new(TargetState::new(z[0], z[1], 0.0, 0.0), p0))
    }

    fn check_finite(&self) -> Result<()> {
        if !self.state.is_finite() {
            return Err(invalid("state estimate is not finite"));
        }
        if !self.covariance.0.iter().all(|v| v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        Ok(())
    }
}

/// Time update: `x' = A·x + B·u`, `P' = A·P·Aᵀ + B·Q·Bᵀ`.
pub fn predict(est: &FilterEstimate, model: &MotionModel, accel: Vec2) -> Result<FilterEstimate> {
    model.validate()?;
    est.check_finite()?;
    if !(accel[0].is_finite() && accel[1].is_finite()) {
        return Err(invalid("acceleration input is not finite"));
    }
    let a = model.transition();
    let b = model.control();
    let x = a * est.state.to_vector() + b * Vector2::from(accel);
    let p = a * est.covariance.0 * a.transpose() + model.process_noise();
    Ok(FilterEstimate::new(TargetState::from_vector(&x), Covariance::symmetrized(p)))
}

/// The Kalman gain `P·Cᵀ·S⁻¹`, with `S` inverted in closed form.
pub fn gain(p: &Covariance, meas: &MeasurementModel) -> Result<Matrix4x2<f64>> {
    let c = MeasurementModel::selector();
    let s = c * p.0 * c.transpose() + meas.r;
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let tr = s.trace();
    // NaN in det or trace fails the comparison.
    let well_conditioned = det.abs() >= DEGENERACY_TOL * tr * tr;
    if !well_conditioned || det == 0.0 {
        return Err(Error::Degenerate {
            what: "innovation covariance",
            detail: format!("det(S) = {det:e}, trace(S) = {tr:e}"),
        });
    }
    let s_inv = Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]) / det;
    Ok(p.0 * c.transpose() * s_inv)
}

/// Measurement update with position observation `z`.
pub fn update(est: &FilterEstimate, meas: &MeasurementModel, z: Vec2) -> Result<FilterEstimate> {
    est.check_finite()?;
    if !(z[0].is_finite() && z[1].is_finite()) {
        return Err(invalid("measurement is not finite"));
    }
    let c = MeasurementModel::selector();
    let g = gain(&est.covariance, meas)?;
    let x = est.state.to_vector();
    let innovation = Vector2::from(z) - c * x;
    let x = x + g * innovation;
    let p = (Matrix4::identity() - g * c) * est.covariance.0;
    Ok(FilterEstimate::new(TargetState::from_vector(&x), Covariance::symmetrized(p)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedMeasurement {
    pub t: f64,
    pub z: Vec2,
}

/// Run the filter over a measurement sequence.
///
/// `init` is the prior at the first timestamp and is updated with the first
/// measurement. Every later step predicts over the timestamp gap, using
/// `accels[i - 1]` as input (zero when `accels` is empty), then updates.
pub fn track(
    measurements: &[TimedMeasurement],
    model: &MotionModel,
    meas: &MeasurementModel,
    init: &FilterEstimate,
    accels: &[Vec2],
) -> Result<Vec<FilterEstimate>> {
    let Some(first) = measurements.first() else {
        return Err(invalid("track needs at least one measurement"));
    };
    if !accels.is_empty() && accels.len() + 1 < measurements.len() {
        return Err(invalid(format!("{} accelerations for {} measurements", accels.len(), measurements.len())));
    }
    if let Some(w) = measurements.windows(2).find(|w| w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater))
    {
        return Err(invalid(format!("timestamps must be strictly increasing ({} then {})", w[0].t, w[1].t)));
    }

    let mut out = Vec::with_capacity(measurements.len());
    let mut est = update(init, meas, first.z)?;
    out.push(est);
    for (i, w) in measurements.windows(2).enumerate() {
        let u = accels.get(i).copied().unwrap_or([0.0, 0.0]);
        est = predict(&est, &model.with_dt(w[1].t - w[0].t), u)?;
        est = update(&est, meas, w[1].z)?;
        out.push(est);
    }
    Ok(out)
}
