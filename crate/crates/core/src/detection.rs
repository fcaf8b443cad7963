//! The attacker decision.
//!
//! For each anchor, the distance to the tracked primary-user position is
//! compared with the distance implied by the received power. A residual of
//! at least `tau` flags the transmitter as an emulation attacker.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::propagation::{LinkModel, RssSample};
use crate::scenario::{distance, AnchorNode};
use crate::tracking::FilterEstimate;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fusion {
    /// Only the designated (first) anchor decides.
    #[default]
    Single,
    /// Attacker if any anchor says attacker.
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub tau: f64,
    pub fusion: Fusion,
}

impl DetectorConfig {
    pub fn new(tau: f64, fusion: Fusion) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(invalid(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { tau, fusion })
    }

    pub fn single(tau: f64) -> Result<Self> {
        Self::new(tau, Fusion::Single)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Legitimate,
    Attacker,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub d_kf: f64,
    pub d_rss: f64,
    pub residual: f64,
}

/// One anchor together with the RSS it measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub anchor: AnchorNode,
    pub rss: RssSample,
}

pub fn anchor_distance(estimate: &FilterEstimate, anchor: &AnchorNode) -> f64 {
    distance(estimate.state.position(), anchor.position())
}

/// `Attacker` iff `|d_kf − d_rss| >= tau`; equality counts as an attack.
pub fn decide(d_kf: f64, d_rss: f64, config: &DetectorConfig) -> Verdict {
    let residual = (d_kf - d_rss).abs();
    let label = if residual >= config.tau { Label::Attacker } else { Label::Legitimate };
    Verdict { label, d_kf, d_rss, residual }
}

/// Run the decision over the anchors selected by `config.fusion` and return
/// the verdict with the largest residual. Under or-fusion that verdict is an
/// attack exactly when some anchor's is.
pub fn detect_step(
    estimate: &FilterEstimate,
    observations: &[Observation],
    link: &LinkModel,
    config: &DetectorConfig,
) -> Result<Verdict> {
    let used = match config.fusion {
        Fusion::Single => observations.get(..1).unwrap_or(&[]),
        Fusion::Or => observations,
    };
    if used.is_empty() {
        return Err(invalid("detection needs at least one anchor observation"));
    }
    let mut best: Option<Verdict> = None;
    for obs in used {
        let d_kf = anchor_distance(estimate, &obs.anchor);
        let d_rss = link.distance_from_rss(obs.rss.pr_db)?;
        let v = decide(d_kf, d_rss, config);
        if best.is_none_or(|b| v.residual > b.residual) {
            best = Some(v);
        }
    }
    Ok(best.expect("non-empty"))
}

/// Baseline that assumes the primary user never leaves `reference`.
pub fn rss_baseline_decide(
    reference: Vec2,
    anchor: &AnchorNode,
    rss: &RssSample,
    link: &LinkModel,
    config: &DetectorConfig,
) -> Result<Verdict> {
    let d_ref = distance(reference, anchor.position());
    let d_rss = link.distance_from_rss(rss.pr_db)?;
    Ok(decide(d_ref, d_rss, config))
}

/// Baseline counterpart of [`detect_step`], with the same fusion rule.
pub fn rss_baseline_step(
    reference: Vec2,
    observations: &[Observation],
    link: &LinkModel,
    config: &DetectorConfig,
) -> Result<Verdict> {
    let used = match config.fusion {
        Fusion::Single => observations.get(..1).unwrap_or(&[]),
        Fusion::Or => observations,
    };
    if used.is_empty() {
        return Err(invalid("detection needs at least one anchor observation"));
    }
    let mut best: Option<Verdict> = None;
    for obs in used {
        let v = rss_baseline_decide(reference, &obs.anchor, &obs.rss, link, config)?;
        if best.is_none_or(|b| v.residual > b.residual) {
            best = Some(v);
        }
    }
    Ok(best.expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub config: DetectorConfig,
    /// False-alarm rate of `config` on the calibration sample itself.
    pub empirical_pfa: f64,
    /// Every residual was identical, so no threshold separates them.
    pub degenerate: bool,
}

/// Threshold at the empirical `(1 − target_pfa)` quantile of legitimate
/// residuals (the "higher" sample at the fractional index).
///
/// Ties at the quantile can push the in-sample false-alarm rate above the
/// target under the `>=` rule; the threshold is then nudged to the next
/// float above the quantile. A constant sample cannot be separated: the
/// threshold is that value and the calibration is flagged degenerate.
pub fn calibrate_tau(residuals: &[f64], target_pfa: f64, fusion: Fusion) -> Result<Calibration> {
    if residuals.is_empty() {
        return Err(invalid("calibration needs at least one legitimate residual"));
    }
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(invalid(format!("target_pfa must be in (0, 1), got {target_pfa}")));
    }
    if let Some(bad) = residuals.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(invalid(format!("residuals must be finite and >= 0, got {bad}")));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pfa_at = |tau: f64| sorted.iter().filter(|&&r| r >= tau).count() as f64 / n as f64;

    if sorted[0] == sorted[n - 1] {
        let config = DetectorConfig::new(sorted[0], fusion)?;
        return Ok(Calibration { config, empirical_pfa: 1.0, degenerate: true });
    }

    let pos = (1.0 - target_pfa) * (n - 1) as f64;
    let mut tau = sorted[(pos.ceil() as usize).min(n - 1)];
    if pfa_at(tau) > target_pfa {
        tau = tau.next_up();
    }
    let config = DetectorConfig::new(tau, fusion)?;
    Ok(Calibration { config, empirical_pfa: pfa_at(tau), degenerate: false })
}
