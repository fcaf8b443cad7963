//! Experiment configuration files.
//!
//! A config is a TOML document with five optional sections. Every key has a
//! default, so an empty file is a valid config. Unknown keys are rejected.
//!
//! ```toml
//! [scenario]
//! meas_noise_std = 5.0
//!
//! [detector]
//! threshold = "fixed"
//! tau = 80.0
//!
//! [run]
//! trials = 2000
//! seed = 7
//! ```

use std::fmt::Display;
use std::path::{Path, PathBuf};

use pue_core::experiments::ThresholdPolicy;
use pue_core::scenario::{Segment, Trajectory};
use pue_core::{AnchorNode, DetectorConfig, Experiment, Fusion, LinkModel, Scenario, TargetState};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.to_string() }
}

fn ensure(ok: bool, key: &str, message: impl Display) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, message))
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    ensure(v.is_finite() && v > 0.0, key, format!("must be a finite number > 0, got {v}"))
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    ensure(v.is_finite() && v >= 0.0, key, format!("must be a finite number >= 0, got {v}"))
}

fn finite_list(key: &str, v: &[f64], min: f64) -> Result<(), ConfigError> {
    ensure(!v.is_empty(), key, "must not be empty")?;
    match v.iter().find(|x| !(x.is_finite() && **x >= min)) {
        Some(x) => Err(invalid(key, format!("entries must be finite and >= {min}, got {x}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub link: LinkConfig,
    pub detector: DetectorSection,
    pub sweep: SweepConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    /// Seconds.
    pub duration: f64,
    /// m/s², held constant over the segment.
    pub accel: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square field, metres. The PU and anchors must stay inside.
    pub field_size: f64,
    pub start: [f64; 2],
    pub start_velocity: [f64; 2],
    pub segments: Vec<SegmentConfig>,
    /// The first anchor is the one the single-anchor detector uses.
    pub anchors: Vec<[f64; 2]>,
    /// Static attacker for `compare-baseline`; defaults to the PU start.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacker: Option<[f64; 2]>,
    pub dt: f64,
    pub steps: usize,
    /// Step at which sweeps evaluate the detector; defaults to the last step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_step: Option<usize>,
    pub meas_noise_std: f64,
    pub process_noise_var: [f64; 2],
    pub v_max: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = Scenario::default();
        let start = s.trajectory.start();
        Self {
            field_size: 1000.0,
            start: start.position(),
            start_velocity: start.velocity(),
            segments: s
                .trajectory
                .segments()
                .into_iter()
                .map(|g| SegmentConfig { duration: g.duration, accel: g.accel })
                .collect(),
            anchors: s.anchors.iter().map(AnchorNode::position).collect(),
            attacker: None,
            dt: s.dt,
            steps: s.steps,
            eval_step: None,
            meas_noise_std: s.meas_noise_std,
            process_noise_var: s.process_noise,
            v_max: s.v_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Watts.
    pub pt: f64,
    pub gt: f64,
    pub gr: f64,
    /// Metres.
    pub wavelength: f64,
    pub alpha: f64,
    /// `c` in `sigma_dB = c * 10^(-SNR/20)`.
    pub snr_calibration_db: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let l = LinkModel::default();
        Self { pt: l.pt, gt: l.gt, gr: l.gr, wavelength: l.wavelength, alpha: l.alpha, snr_calibration_db: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Calibrate `tau` per SNR to `target_pfa` on legitimate trials.
    TargetPfa,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    /// Metres. Used by `compare-baseline`, and by `sweep-distance` in fixed mode.
    pub tau: f64,
    pub target_pfa: f64,
    pub threshold: ThresholdMode,
    pub fusion: Fusion,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { tau: 100.0, target_pfa: 0.1, threshold: ThresholdMode::TargetPfa, fusion: Fusion::Single }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub distances: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub pfa_targets: Vec<f64>,
    pub roc_distance: f64,
    pub roc_snr_db: Vec<f64>,
    /// Attacker bearings in degrees, relative to the anchor-to-PU direction.
    pub bearings_deg: Vec<f64>,
    pub baseline_distances: Vec<f64>,
    pub baseline_snr_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            distances: vec![30.0, 50.0, 70.0, 90.0, 110.0, 130.0, 150.0],
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            pfa_targets: vec![0.02, 0.05, 0.1, 0.2, 0.3, 0.5],
            roc_distance: 50.0,
            roc_snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            bearings_deg: vec![0.0, 180.0],
            baseline_distances: vec![0.0, 30.0, 60.0, 90.0, 120.0, 150.0],
            baseline_snr_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Trials per sweep cell.
    pub trials: usize,
    /// Master seed, at most 2^63 - 1.
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { trials: 10_000, seed: 2024, out: PathBuf::from("results"), threads: 0 }
    }
}

/// Read, parse and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_named(&text, &path.display().to_string())
}

/// Parse and validate config text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_named(text, "config")
}

fn parse_config_named(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse { origin: origin.to_string(), message: e.to_string() })?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse { origin: "serializer".into(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        positive("scenario.field_size", s.field_size)?;
        let inside = |p: [f64; 2]| p.iter().all(|c| c.is_finite() && (0.0..=s.field_size).contains(c));
        ensure(inside(s.start), "scenario.start", format!("{:?} is outside the field", s.start))?;
        ensure(s.start_velocity.iter().all(|v| v.is_finite()), "scenario.start_velocity", "must be finite")?;
        ensure(!s.segments.is_empty(), "scenario.segments", "must not be empty")?;
        for g in &s.segments {
            positive("scenario.segments.duration", g.duration)?;
            ensure(g.accel.iter().all(|a| a.is_finite()), "scenario.segments.accel", "must be finite")?;
        }
        ensure(!s.anchors.is_empty(), "scenario.anchors", "must not be empty")?;
        if let Some(a) = s.anchors.iter().find(|a| !inside(**a)) {
            return Err(invalid("scenario.anchors", format!("{a:?} is outside the field")));
        }
        if let Some(a) = s.attacker {
            ensure(inside(a), "scenario.attacker", format!("{a:?} is outside the field"))?;
        }
        positive("scenario.dt", s.dt)?;
        ensure(s.steps >= 1, "scenario.steps", "must be >= 1")?;
        let duration: f64 = s.segments.iter().map(|g| g.duration).sum();
        ensure(
            (s.steps - 1) as f64 * s.dt <= duration + 1e-9,
            "scenario.steps",
            format!("{} steps of {} s outrun the {duration} s trajectory", s.steps, s.dt),
        )?;
        if let Some(e) = s.eval_step {
            ensure(e < s.steps, "scenario.eval_step", format!("{e} must be < steps ({})", s.steps))?;
        }
        non_negative("scenario.meas_noise_std", s.meas_noise_std)?;
        for q in s.process_noise_var {
            non_negative("scenario.process_noise_var", q)?;
        }
        non_negative("scenario.v_max", s.v_max)?;

        let l = &self.link;
        positive("link.pt", l.pt)?;
        positive("link.gt", l.gt)?;
        positive("link.gr", l.gr)?;
        positive("link.wavelength", l.wavelength)?;
        positive("link.alpha", l.alpha)?;
        positive("link.snr_calibration_db", l.snr_calibration_db)?;

        let d = &self.detector;
        non_negative("detector.tau", d.tau)?;
        ensure(
            d.target_pfa > 0.0 && d.target_pfa < 1.0,
            "detector.target_pfa",
            format!("must be in (0, 1), got {}", d.target_pfa),
        )?;

        let w = &self.sweep;
        finite_list("sweep.distances", &w.distances, 0.0)?;
        finite_list("sweep.snr_db", &w.snr_db, f64::MIN)?;
        ensure(!w.pfa_targets.is_empty(), "sweep.pfa_targets", "must not be empty")?;
        if let Some(t) = w.pfa_targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(invalid("sweep.pfa_targets", format!("entries must be in (0, 1), got {t}")));
        }
        non_negative("sweep.roc_distance", w.roc_distance)?;
        finite_list("sweep.roc_snr_db", &w.roc_snr_db, f64::MIN)?;
        finite_list("sweep.bearings_deg", &w.bearings_deg, f64::MIN)?;
        finite_list("sweep.baseline_distances", &w.baseline_distances, 0.0)?;
        ensure(w.baseline_snr_db.is_finite(), "sweep.baseline_snr_db", "must be finite")?;

        let r = &self.run;
        ensure(r.trials >= 1, "run.trials", "must be >= 1")?;
        ensure(r.seed <= i64::MAX as u64, "run.seed", format!("must be at most {}", i64::MAX))?;
        ensure(!r.out.as_os_str().is_empty(), "run.out", "must not be empty")?;

        let scenario = self.scenario()?;
        for k in 0..s.steps {
            let p = scenario.truth_at(k).map_err(|e| invalid("scenario", e))?.position();
            ensure(
                inside(p),
                "scenario.segments",
                format!("the PU leaves the field at t = {} s ({:.1}, {:.1})", scenario.time_at(k), p[0], p[1]),
            )?;
        }
        Ok(())
    }

    /// The core scenario described by the `[scenario]` and `[link]` sections.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let s = &self.scenario;
        let start = TargetState::new(s.start[0], s.start[1], s.start_velocity[0], s.start_velocity[1]);
        let segments: Vec<Segment> =
            s.segments.iter().map(|g| Segment { duration: g.duration, accel: g.accel }).collect();
        let trajectory = Trajectory::new(start, &segments).map_err(|e| invalid("scenario.segments", e))?;
        let l = &self.link;
        let link = LinkModel::new(l.pt, l.gt, l.gr, l.wavelength, l.alpha).map_err(|e| invalid("link", e))?;
        let scenario = Scenario {
            trajectory,
            attacker: s.attacker.unwrap_or(s.start),
            anchors: s.anchors.iter().enumerate().map(|(i, a)| AnchorNode::new(i, a[0], a[1])).collect(),
            dt: s.dt,
            steps: s.steps,
            eval_step: s.eval_step,
            meas_noise_std: s.meas_noise_std,
            process_noise: s.process_noise_var,
            v_max: s.v_max,
            link,
            ..Scenario::default()
        };
        scenario.validate().map_err(|e| invalid("scenario", e))?;
        Ok(scenario)
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        let mut exp = Experiment::new(self.scenario()?, self.run.trials, self.run.seed);
        exp.snr_calibration_db = self.link.snr_calibration_db;
        exp.bearings = self.sweep.bearings_deg.iter().map(|b| b.to_radians()).collect();
        Ok(exp)
    }

    /// Detector with the configured fixed `tau`.
    pub fn fixed_detector(&self) -> Result<DetectorConfig, ConfigError> {
        DetectorConfig::new(self.detector.tau, self.detector.fusion).map_err(|e| invalid("detector.tau", e))
    }

    pub fn threshold_policy(&self) -> Result<ThresholdPolicy, ConfigError> {
        Ok(match self.detector.threshold {
            ThresholdMode::Fixed => ThresholdPolicy::Fixed(self.fixed_detector()?),
            ThresholdMode::TargetPfa => {
                ThresholdPolicy::TargetPfa { target: self.detector.target_pfa, fusion: self.detector.fusion }
            }
        })
    }
}
