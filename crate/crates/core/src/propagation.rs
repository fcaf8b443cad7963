//! Free-space path loss in the dB domain.
//!
//! `P_r(dB) = −10·α·log10(d) + A_link`, with
//! `A_link = 10·log10(P_t·G_t·G_r·λ²) − 20·log10(4π)`. Powers are plain dB of
//! watts with no reference offset; every comparison stays in this convention.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Transmit power (W).
    pub pt: f64,
    pub gt: f64,
    pub gr: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Path-loss exponent; 2 in free space.
    pub alpha: f64,
}

impl Default for LinkModel {
    /// 1 W, unit gains, ~900 MHz, free space.
    fn default() -> Self {
        Self { pt: 1.0, gt: 1.0, gr: 1.0, wavelength: 0.333, alpha: 2.0 }
    }
}

impl LinkModel {
    pub fn new(pt: f64, gt: f64, gr: f64, wavelength: f64, alpha: f64) -> Result<Self> {
        let link = Self { pt, gt, gr, wavelength, alpha };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("pt", self.pt), ("gt", self.gt), ("gr", self.gr), ("wavelength", self.wavelength), ("alpha", self.alpha)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// The link constant `A_link` (dB): received power at 1 m.
    pub fn link_constant_db(&self) -> f64 {
        10.0 * (self.pt * self.gt * self.gr * self.wavelength * self.wavelength).log10()
            - 20.0 * (4.0 * std::f64::consts::PI).log10()
    }

    pub fn received_power_db(&self, distance: f64) -> Result<f64> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(invalid(format!("distance must be finite and > 0, got {distance}")));
        }
        Ok(-10.0 * self.alpha * distance.log10() + self.link_constant_db())
    }

    /// Noisy RSS at `distance`. Always consumes exactly one normal draw from
    /// `rng`, also when `noise.sigma_db` is zero.
    pub fn sample_rss<R: Rng + ?Sized>(
        &self,
        distance: f64,
        noise: NoiseModel,
        rng: &mut R,
        anchor_id: usize,
        timestamp: f64,
    ) -> Result<RssSample> {
        let clean = self.received_power_db(distance)?;
        let n: f64 = rng.sample(StandardNormal);
        Ok(RssSample { pr_db: clean + noise.sigma_db * n, anchor_id, timestamp })
    }

    /// Invert the path-loss law: `d = 10^((A_link − P_r) / (10·α))`.
    pub fn distance_from_rss(&self, pr_db: f64) -> Result<f64> {
        if !pr_db.is_finite() {
            return Err(invalid(format!("received power must be finite, got {pr_db}")));
        }
        Ok(10f64.powf((self.link_constant_db() - pr_db) / (10.0 * self.alpha)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssSample {
    pub pr_db: f64,
    pub anchor_id: usize,
    pub timestamp: f64,
}

/// Zero-mean Gaussian noise on the dB-domain RSS.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_db: f64,
}

impl NoiseModel {
    pub fn new(sigma_db: f64) -> Result<Self> {
        if !(sigma_db.is_finite() && sigma_db >= 0.0) {
            return Err(invalid(format!("sigma_db must be finite and >= 0, got {sigma_db}")));
        }
        Ok(Self { sigma_db })
    }

    /// Amplitude-proportional SNR mapping: `σ = c · 10^(−SNR/20)`.
    pub fn from_snr(snr_db: f64, calibration_db: f64) -> Result<Self> {
        if !(calibration_db.is_finite() && calibration_db > 0.0) {
            return Err(invalid(format!("SNR calibration must be > 0, got {calibration_db}")));
        }
        if !snr_db.is_finite() {
            return Err(invalid(format!("SNR must be finite, got {snr_db}")));
        }
        Self::new(calibration_db * 10f64.powf(-snr_db / 20.0))
    }
}

/// Free-function form of [`NoiseModel::from_snr`].
pub fn sigma_from_snr(snr_db: f64, calibration_db: f64) -> Result<NoiseModel> {
    NoiseModel::from_snr(snr_db, calibration_db)
}
