//! Ground truth for a run: the primary user's trajectory, the static
//! attacker, the anchor nodes, and the synthetic observations derived from
//! them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::propagation::{LinkModel, NoiseModel, RssSample};
use crate::tracking::{MeasurementModel, MotionModel, TargetState};
use crate::Vec2;

/// Slack allowed when a step time lands a hair past the last waypoint.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl AnchorNode {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self { id, x, y }
    }

    pub fn position(&self) -> Vec2 {
        [self.x, self.y]
    }
}

/// Which transmitter is on the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transmitter {
    Pu,
    Pue,
}

/// Constant acceleration held for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub accel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub state: TargetState,
}

/// Piecewise-constant-acceleration trajectory starting at `t = 0`.
///
/// Waypoints are integrated in closed form at construction, so evaluating
/// the trajectory never accumulates drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
    accels: Vec<Vec2>,
}

fn advance(s: &TargetState, a: Vec2, tau: f64) -> TargetState {
    TargetState::new(
        s.x + s.vx * tau + 0.5 * a[0] * tau * tau,
        s.y + s.vy * tau + 0.5 * a[1] * tau * tau,
        s.vx + a[0] * tau,
        s.vy + a[1] * tau,
    )
}

impl Trajectory {
    pub fn new(start: TargetState, segments: &[Segment]) -> Result<Self> {
        if !start.is_finite() {
            return Err(invalid("trajectory start state is not finite"));
        }
        if segments.is_empty() {
            return Err(invalid("trajectory needs at least one segment"));
        }
        let mut waypoints = vec![Waypoint { t: 0.0, state: start }];
        let mut accels = Vec::with_capacity(segments.len());
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(invalid(format!("segment {i}: duration must be > 0, got {}", seg.duration)));
            }
            if !(seg.accel[0].is_finite() && seg.accel[1].is_finite()) {
                return Err(invalid(format!("segment {i}: acceleration is not finite")));
            }
            let last = waypoints[waypoints.len() - 1];
            waypoints.push(Waypoint { t: last.t + seg.duration, state: advance(&last.state, seg.accel, seg.duration) });
            accels.push(seg.accel);
        }
        Ok(Self { waypoints, accels })
    }

    /// Constant velocity for `duration` seconds.
    pub fn straight(start: Vec2, velocity: Vec2, duration: f64) -> Result<Self> {
        Self::new(
            TargetState::new(start[0], start[1], velocity[0], velocity[1]),
            &[Segment { duration, accel: [0.0, 0.0] }],
        )
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn accel_profile(&self) -> &[Vec2] {
        &self.accels
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.waypoints
            .windows(2)
            .zip(&self.accels)
            .map(|(w, &accel)| Segment { duration: w[1].t - w[0].t, accel })
            .collect()
    }

    pub fn start(&self) -> TargetState {
        self.waypoints[0].state
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].t
    }

    fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t.is_finite() && t >= 0.0 && t <= self.end_time() + TIME_EPS) {
            return Err(invalid(format!("time {t} outside trajectory span [0, {}]", self.end_time())));
        }
        // Last waypoint whose time is <= t, clamped to the final segment.
        let k = self.waypoints.partition_point(|w| w.t <= t);
        Ok(k.saturating_sub(1).min(self.accels.len() - 1))
    }

    pub fn state_at(&self, t: f64) -> Result<TargetState> {
        let k = self.segment_index(t)?;
        let w = self.waypoints[k];
        Ok(advance(&w.state, self.accels[k], t - w.t))
    }

    /// Acceleration in force at `t` (segments are closed on the left).
    pub fn accel_at(&self, t: f64) -> Result<Vec2> {
        Ok(self.accels[self.segment_index(t)?])
    }
}

impl Default for Trajectory {
    /// Starts at (100, 100) m moving at (5, 3) m/s, bends through three gentle
    /// turns and stays inside a 1000 m × 1000 m field for 200 s.
    fn default() -> Self {
        Self::new(TargetState::new(100.0, 100.0, 5.0, 3.0), &default_segments()).expect("default trajectory is valid")
    }
}

pub fn default_segments() -> Vec<Segment> {
    vec![
        Segment { duration: 50.0, accel: [0.0, 0.0] },
        Segment { duration: 50.0, accel: [0.0, -0.1] },
        Segment { duration: 50.0, accel: [-0.1, 0.0] },
        Segment { duration: 50.0, accel: [-0.1, 0.1] },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub trajectory: Trajectory,
    /// Static attacker position.
    pub attacker: Vec2,
    /// The first anchor is the designated one for single-anchor decisions.
    pub anchors: Vec<AnchorNode>,
    pub dt: f64,
    pub steps: usize,
    /// Step at which a Monte Carlo trial is evaluated; `None` means the last.
    pub eval_step: Option<usize>,
    /// Per-axis std of the synthetic position measurements (m).
    pub meas_noise_std: f64,
    /// Filter acceleration-noise variances `(σ²_wx, σ²_wy)`.
    pub process_noise: Vec2,
    /// Velocity prior scale for filter initialization (m/s).
    pub v_max: f64,
    pub link: LinkModel,
    pub rss_noise: NoiseModel,
    /// One label per step; empty means the primary user transmits throughout.
    pub schedule: Vec<Transmitter>,
}

impl Default for Scenario {
    fn default() -> Self {
        let trajectory = Trajectory::default();
        let attacker = trajectory.start().position();
        Self {
            trajectory,
            attacker,
            anchors: vec![AnchorNode::new(0, 500.0, 0.0)],
            dt: 1.0,
            steps: 200,
            eval_step: None,
            meas_noise_std: 5.0,
            process_noise: [0.01, 0.01],
            v_max: 10.0,
            link: LinkModel::default(),
            rss_noise: NoiseModel::default(),
            schedule: Vec::new(),
        }
    }
}

fn check_point(name: &str, p: Vec2) -> Result<()> {
    if p[0].is_finite() && p[1].is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} position is not finite")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be >= 1"));
        }
        let last_t = (self.steps - 1) as f64 * self.dt;
        if last_t > self.trajectory.end_time() + TIME_EPS {
            return Err(invalid(format!(
                "{} steps of {} s outrun the trajectory ({} s)",
                self.steps,
                self.dt,
                self.trajectory.end_time()
            )));
        }
        if let Some(e) = self.eval_step {
            if e >= self.steps {
                return Err(invalid(format!("eval_step {e} >= steps {}", self.steps)));
            }
        }
        if self.anchors.is_empty() {
            return Err(invalid("at least one anchor is required"));
        }
        for a in &self.anchors {
            check_point(&format!("anchor {}", a.id), a.position())?;
        }
        check_point("attacker", self.attacker)?;
        if !(self.meas_noise_std.is_finite() && self.meas_noise_std >= 0.0) {
            return Err(invalid(format!("meas_noise_std must be >= 0, got {}", self.meas_noise_std)));
        }
        if !(self.v_max.is_finite() && self.v_max >= 0.0) {
            return Err(invalid(format!("v_max must be >= 0, got {}", self.v_max)));
        }
        self.motion_model()?;
        self.link.validate()?;
        NoiseModel::new(self.rss_noise.sigma_db)?;
        if !self.schedule.is_empty() && self.schedule.len() != self.steps {
            return Err(invalid(format!("schedule has {} labels for {} steps", self.schedule.len(), self.steps)));
        }
        Ok(())
    }

    pub fn eval_step(&self) -> usize {
        self.eval_step.unwrap_or(self.steps.saturating_sub(1))
    }

    pub fn designated_anchor(&self) -> &AnchorNode {
        &self.anchors[0]
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        MotionModel::new(self.dt, self.process_noise[0], self.process_noise[1])
    }

    pub fn measurement_model(&self) -> Result<MeasurementModel> {
        MeasurementModel::isotropic(self.meas_noise_std)
    }

    fn check_step(&self, step: usize) -> Result<()> {
        if step >= self.steps {
            return Err(invalid(format!("step {step} out of range (steps = {})", self.steps)));
        }
        Ok(())
    }

    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn truth_at(&self, step: usize) -> Result<TargetState> {
        self.check_step(step)?;
        self.trajectory.state_at(self.time_at(step))
    }

    /// Known acceleration input between `step` and `step + 1`.
    pub fn accel_at(&self, step: usize) -> Result<Vec2> {
        self.check_step(step)?;
        self.trajectory.accel_at(self.time_at(step))
    }

    /// Truth position plus per-axis Gaussian noise. Consumes two normal
    /// draws regardless of the noise level.
    pub fn emit_position_measurement<R: Rng + ?Sized>(&self, step: usize, rng: &mut R) -> Result<Vec2> {
        let p = self.truth_at(step)?.position();
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        Ok([p[0] + self.meas_noise_std * nx, p[1] + self.meas_noise_std * ny])
    }

    pub fn label_at(&self, step: usize) -> Transmitter {
        self.schedule.get(step).copied().unwrap_or(Transmitter::Pu)
    }

    pub fn transmitter_position(&self, step: usize, label: Transmitter) -> Result<Vec2> {
        match label {
            Transmitter::Pu => Ok(self.truth_at(step)?.position()),
            Transmitter::Pue => {
                self.check_step(step)?;
                Ok(self.attacker)
            }
        }
    }

    /// RSS at `anchor` from whichever transmitter the schedule puts on air.
    pub fn emit_rss<R: Rng + ?Sized>(&self, step: usize, anchor: &AnchorNode, rng: &mut R) -> Result<RssSample> {
        let tx = self.transmitter_position(step, self.label_at(step))?;
        self.emit_rss_from(tx, step, anchor, rng)
    }

    /// RSS at `anchor` from a transmitter at `tx`.
    pub fn emit_rss_from<R: Rng + ?Sized>(
        &self,
        tx: Vec2,
        step: usize,
        anchor: &AnchorNode,
        rng: &mut R,
    ) -> Result<RssSample> {
        let d = distance(tx, anchor.position());
        if d <= 0.0 {
            return Err(invalid(format!("transmitter sits on anchor {}", anchor.id)));
        }
        self.link.sample_rss(d, self.rss_noise, rng, anchor.id, self.time_at(step))
    }

    pub fn place_attacker_at_offset(&self, reference_step: usize, d_pu_pue: f64, bearing: f64) -> Result<Vec2> {
        if !(d_pu_pue.is_finite() && d_pu_pue >= 0.0) {
            return Err(invalid(format!("d_pu_pue must be >= 0, got {d_pu_pue}")));
        }
        Ok(offset_point(self.truth_at(reference_step)?.position(), d_pu_pue, bearing))
    }
}

pub fn distance(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn offset_point(origin: Vec2, d: f64, bearing: f64) -> Vec2 {
    let (s, c) = bearing.sin_cos();
    [origin[0] + d * c, origin[1] + d * s]
}

/// Bearing (rad) of `to` as seen from `from`.
pub fn bearing(from: Vec2, to: Vec2) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}
