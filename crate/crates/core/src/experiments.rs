//! Seeded Monte Carlo harness.
//!
//! A trial is one full tracking run up to the evaluation step, followed by a
//! single RSS emission from either the primary user or the attacker and a
//! detector verdict. Each trial draws from its own generator seeded by
//! `(master_seed, trial index)`, so outcomes are identical for any thread
//! count and any execution order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{self, calibrate_tau, DetectorConfig, Fusion, Label, Observation, Verdict};
use crate::error::{invalid, Result};
use crate::propagation::NoiseModel;
use crate::rng::{self, derive_path, derive_seed};
use crate::scenario::{bearing, distance, Scenario, Transmitter};
use crate::tracking::{predict, update, FilterEstimate, TargetState};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub scheduled: Transmitter,
    pub verdict: Label,
    pub residual: f64,
    /// Seed of the trial's own generator.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bucket {
    Detection,
    Miss,
    FalseAlarm,
    CorrectRejection,
}

impl TrialOutcome {
    pub fn bucket(&self) -> Bucket {
        match (self.scheduled, self.verdict) {
            (Transmitter::Pue, Label::Attacker) => Bucket::Detection,
            (Transmitter::Pue, Label::Legitimate) => Bucket::Miss,
            (Transmitter::Pu, Label::Attacker) => Bucket::FalseAlarm,
            (Transmitter::Pu, Label::Legitimate) => Bucket::CorrectRejection,
        }
    }

    /// The same trial judged against a different threshold. Valid for both
    /// fusion modes because the reported residual is the largest one.
    pub fn rethreshold(&self, tau: f64) -> Self {
        let verdict = if self.residual >= tau { Label::Attacker } else { Label::Legitimate };
        Self { verdict, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCoords {
    pub d_pu_pue: f64,
    pub snr_db: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Detections over attack trials; absent without attack trials.
    pub pd: Option<f64>,
    /// False alarms over legitimate trials; absent without legitimate trials.
    pub pfa: Option<f64>,
    /// Miss probability, `1 - pd`. Agrees with misses over attack trials to
    /// within one ulp.
    pub pm: Option<f64>,
    pub detections: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub correct_rejections: usize,
    pub n_attack_trials: usize,
    pub n_legit_trials: usize,
    pub coords: Option<SweepCoords>,
}

impl MetricsReport {
    pub fn from_counts(detections: usize, misses: usize, false_alarms: usize, correct_rejections: usize) -> Self {
        let n_attack = detections + misses;
        let n_legit = false_alarms + correct_rejections;
        let ratio = |k: usize, n: usize| (n > 0).then(|| k as f64 / n as f64);
        let pd = ratio(detections, n_attack);
        Self {
            pd,
            pfa: ratio(false_alarms, n_legit),
            pm: pd.map(|p| 1.0 - p),
            detections,
            misses,
            false_alarms,
            correct_rejections,
            n_attack_trials: n_attack,
            n_legit_trials: n_legit,
            coords: None,
        }
    }

    pub fn with_coords(self, coords: SweepCoords) -> Self {
        Self { coords: Some(coords), ..self }
    }
}

pub fn metrics(outcomes: &[TrialOutcome]) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(invalid("metrics need at least one trial outcome"));
    }
    let (mut det, mut miss, mut fa, mut cr) = (0, 0, 0, 0);
    for o in outcomes {
        match o.bucket() {
            Bucket::Detection => det += 1,
            Bucket::Miss => miss += 1,
            Bucket::FalseAlarm => fa += 1,
            Bucket::CorrectRejection => cr += 1,
        }
    }
    Ok(MetricsReport::from_counts(det, miss, fa, cr))
}

/// Everything a detector needs from one simulated trial.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub seed: u64,
    pub scheduled: Transmitter,
    pub estimate: FilterEstimate,
    pub observations: Vec<Observation>,
}

/// Simulate one trial. Draw order: schedule label, one position measurement
/// per step `0..=eval`, then one RSS sample per anchor.
pub fn simulate_trial(scenario: &Scenario, seed: u64, schedule_mix: f64) -> Result<TrialRun> {
    let mut rng = rng::stream(seed);
    let u: f64 = rng.random();
    let scheduled = if u < schedule_mix { Transmitter::Pue } else { Transmitter::Pu };

    let eval = scenario.eval_step();
    let estimate = filter_through(scenario, eval, &mut rng, |_, _, _| ())?;

    let tx = scenario.transmitter_position(eval, scheduled)?;
    let observations = scenario
        .anchors
        .iter()
        .map(|&anchor| {
            let rss = scenario.emit_rss_from(tx, eval, &anchor, &mut rng)?;
            Ok(Observation { anchor, rss })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrialRun { seed, scheduled, estimate, observations })
}

/// Filter the measurements of steps `0..=last`, drawing one measurement per
/// step from `rng`. `visit` sees every step's measurement and posterior.
fn filter_through<R: Rng + ?Sized>(
    scenario: &Scenario,
    last: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, Vec2, &FilterEstimate),
) -> Result<FilterEstimate> {
    let motion = scenario.motion_model()?;
    let meas = scenario.measurement_model()?;
    let z0 = scenario.emit_position_measurement(0, rng)?;
    let mut estimate = FilterEstimate::from_first_measurement(z0, &meas, scenario.v_max)?;
    visit(0, z0, &estimate);
    for k in 1..=last {
        estimate = predict(&estimate, &motion, scenario.accel_at(k - 1)?)?;
        let z = scenario.emit_position_measurement(k, rng)?;
        estimate = update(&estimate, &meas, z)?;
        visit(k, z, &estimate);
    }
    Ok(estimate)
}

/// One step of a tracking run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub step: usize,
    pub t: f64,
    pub truth: TargetState,
    pub measurement: Vec2,
    pub estimate: FilterEstimate,
}

impl TrackPoint {
    pub fn estimate_error(&self) -> f64 {
        distance(self.estimate.state.position(), self.truth.position())
    }

    pub fn measurement_error(&self) -> f64 {
        distance(self.measurement, self.truth.position())
    }
}

/// Track the primary user over every scenario step.
pub fn simulate_track(scenario: &Scenario, seed: u64) -> Result<Vec<TrackPoint>> {
    scenario.validate()?;
    let truths = (0..scenario.steps).map(|k| scenario.truth_at(k)).collect::<Result<Vec<_>>>()?;
    let mut rng = rng::stream(seed);
    let mut points = Vec::with_capacity(scenario.steps);
    filter_through(scenario, scenario.steps - 1, &mut rng, |step, measurement, estimate| {
        points.push(TrackPoint {
            step,
            t: scenario.time_at(step),
            truth: truths[step],
            measurement,
            estimate: *estimate,
        })
    })?;
    Ok(points)
}

/// Root-mean-square of a set of position errors.
pub fn rmse(errors: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = errors.into_iter().fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn check_trials(n_trials: usize, schedule_mix: f64) -> Result<()> {
    if n_trials == 0 {
        return Err(invalid("n_trials must be >= 1"));
    }
    if !(0.0..=1.0).contains(&schedule_mix) {
        return Err(invalid(format!("schedule_mix must be in [0, 1], got {schedule_mix}")));
    }
    Ok(())
}

/// Run `n_trials` independent trials of the proposed detector. Each trial
/// puts the attacker on air with probability `schedule_mix`.
pub fn run_trials(
    template: &Scenario,
    config: &DetectorConfig,
    n_trials: usize,
    schedule_mix: f64,
    master_seed: u64,
) -> Result<Vec<TrialOutcome>> {
    check_trials(n_trials, schedule_mix)?;
    template.validate()?;
    DetectorConfig::new(config.tau, config.fusion)?;
    (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let run = simulate_trial(template, derive_seed(master_seed, i), schedule_mix)?;
            let v = detection::detect_step(&run.estimate, &run.observations, &template.link, config)?;
            Ok(TrialOutcome { scheduled: run.scheduled, verdict: v.label, residual: v.residual, seed: run.seed })
        })
        .collect()
}

/// The proposed detector and the fixed-reference baseline judging the very
/// same trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedOutcome {
    pub scheduled: Transmitter,
    pub proposed: Verdict,
    pub baseline: Verdict,
    pub seed: u64,
}

impl PairedOutcome {
    pub fn proposed_outcome(&self) -> TrialOutcome {
        TrialOutcome {
            scheduled: self.scheduled,
            verdict: self.proposed.label,
            residual: self.proposed.residual,
            seed: self.seed,
        }
    }

    pub fn baseline_outcome(&self) -> TrialOutcome {
        TrialOutcome {
            scheduled: self.scheduled,
            verdict: self.baseline.label,
            residual: self.baseline.residual,
            seed: self.seed,
        }
    }
}

pub fn run_paired_trials(
    template: &Scenario,
    reference: Vec2,
    config: &DetectorConfig,
    n_trials: usize,
    schedule_mix: f64,
    master_seed: u64,
) -> Result<Vec<PairedOutcome>> {
    check_trials(n_trials, schedule_mix)?;
    template.validate()?;
    DetectorConfig::new(config.tau, config.fusion)?;
    (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let run = simulate_trial(template, derive_seed(master_seed, i), schedule_mix)?;
            let proposed = detection::detect_step(&run.estimate, &run.observations, &template.link, config)?;
            let baseline = detection::rss_baseline_step(reference, &run.observations, &template.link, config)?;
            Ok(PairedOutcome { scheduled: run.scheduled, proposed, baseline, seed: run.seed })
        })
        .collect()
}

/// How a sweep picks its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    Fixed(DetectorConfig),
    /// Calibrate `tau` per SNR row on legitimate trials.
    TargetPfa {
        target: f64,
        fusion: Fusion,
    },
}

impl ThresholdPolicy {
    fn fusion(&self) -> Fusion {
        match self {
            Self::Fixed(c) => c.fusion,
            Self::TargetPfa { fusion, .. } => *fusion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocCell {
    pub target_pfa: f64,
    pub calibration_degenerate: bool,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRow {
    /// True PU–attacker distance at the evaluation step.
    pub distance: f64,
    pub step: usize,
    pub proposed: MetricsReport,
    pub baseline: MetricsReport,
}

// Seed-path tags, one per sweep kind.
const SWEEP_DISTANCE: u64 = 1;
const SWEEP_ROC: u64 = 2;
const COMPARE_BASELINE: u64 = 3;

/// A base scenario plus the knobs shared by every sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub base: Scenario,
    /// `c` in `σ_dB = c · 10^(−SNR/20)`.
    pub snr_calibration_db: f64,
    /// Attacker bearings relative to the anchor → PU direction; trials are
    /// split evenly across them.
    pub bearings: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

impl Experiment {
    pub fn new(base: Scenario, n_trials: usize, seed: u64) -> Self {
        Self { base, snr_calibration_db: 1.5, bearings: vec![0.0, std::f64::consts::PI], n_trials, seed }
    }

    pub fn scenario_at_snr(&self, snr_db: f64) -> Result<Scenario> {
        let mut s = self.base.clone();
        s.rss_noise = NoiseModel::from_snr(snr_db, self.snr_calibration_db)?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_trials == 0 {
            return Err(invalid("n_trials must be >= 1"));
        }
        if self.bearings.is_empty() || self.bearings.iter().any(|b| !b.is_finite()) {
            return Err(invalid("bearings must be a non-empty list of finite angles"));
        }
        NoiseModel::from_snr(0.0, self.snr_calibration_db)?;
        Ok(())
    }

    fn legit_trials(&self, scenario: &Scenario, fusion: Fusion, seed: u64) -> Result<Vec<TrialOutcome>> {
        run_trials(scenario, &DetectorConfig::new(0.0, fusion)?, self.n_trials, 0.0, seed)
    }

    /// Attack trials with the attacker `d_pu_pue` from the PU at the
    /// evaluation step, split across the configured bearings.
    pub fn attack_trials(
        &self,
        scenario: &Scenario,
        d_pu_pue: f64,
        config: &DetectorConfig,
        seed: u64,
    ) -> Result<Vec<TrialOutcome>> {
        let eval = scenario.eval_step();
        let pu = scenario.truth_at(eval)?.position();
        let radial = bearing(scenario.designated_anchor().position(), pu);
        let nb = self.bearings.len();
        let mut out = Vec::with_capacity(self.n_trials);
        for (j, b) in self.bearings.iter().enumerate() {
            let n_j = self.n_trials / nb + usize::from(j < self.n_trials % nb);
            if n_j == 0 {
                continue;
            }
            let mut s = scenario.clone();
            s.attacker = scenario.place_attacker_at_offset(eval, d_pu_pue, radial + b)?;
            out.extend(run_trials(&s, config, n_j, 1.0, derive_seed(seed, j as u64))?);
        }
        Ok(out)
    }

    /// P_d / P_m (and P_fa on legitimate trials) per `(snr, distance)` cell,
    /// SNR-major.
    pub fn sweep_distance(
        &self,
        distances: &[f64],
        snr_db: &[f64],
        policy: &ThresholdPolicy,
    ) -> Result<Vec<MetricsReport>> {
        self.validate()?;
        if distances.is_empty() || snr_db.is_empty() {
            return Err(invalid("sweep needs at least one distance and one SNR"));
        }
        let mut table = Vec::with_capacity(distances.len() * snr_db.len());
        for (si, &snr) in snr_db.iter().enumerate() {
            let scenario = self.scenario_at_snr(snr)?;
            let legit =
                self.legit_trials(&scenario, policy.fusion(), derive_path(self.seed, &[SWEEP_DISTANCE, si as u64, 0]))?;
            let config = match *policy {
                ThresholdPolicy::Fixed(c) => c,
                ThresholdPolicy::TargetPfa { target, fusion } => {
                    let residuals: Vec<f64> = legit.iter().map(|o| o.residual).collect();
                    calibrate_tau(&residuals, target, fusion)?.config
                }
            };
            let legit: Vec<TrialOutcome> = legit.iter().map(|o| o.rethreshold(config.tau)).collect();
            for (di, &d) in distances.iter().enumerate() {
                let seed = derive_path(self.seed, &[SWEEP_DISTANCE, si as u64, di as u64 + 1]);
                let mut outcomes = self.attack_trials(&scenario, d, &config, seed)?;
                outcomes.extend_from_slice(&legit);
                let coords = SweepCoords { d_pu_pue: d, snr_db: snr, tau: config.tau };
                table.push(metrics(&outcomes)?.with_coords(coords));
            }
        }
        Ok(table)
    }

    /// P_d against P_fa at a fixed attacker distance. Per SNR row, thresholds
    /// are calibrated on one legitimate set and evaluated on a second,
    /// held-out legitimate set and an attack set.
    pub fn sweep_roc(
        &self,
        d_pu_pue: f64,
        snr_db: &[f64],
        pfa_targets: &[f64],
        fusion: Fusion,
    ) -> Result<Vec<RocCell>> {
        self.validate()?;
        if snr_db.is_empty() || pfa_targets.is_empty() {
            return Err(invalid("ROC sweep needs at least one SNR and one target"));
        }
        if let Some(t) = pfa_targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(invalid(format!("pfa targets must be in (0, 1), got {t}")));
        }
        let mut table = Vec::with_capacity(snr_db.len() * pfa_targets.len());
        for (si, &snr) in snr_db.iter().enumerate() {
            let scenario = self.scenario_at_snr(snr)?;
            let path = |role: u64| derive_path(self.seed, &[SWEEP_ROC, si as u64, role]);
            let calibration: Vec<f64> =
                self.legit_trials(&scenario, fusion, path(0))?.iter().map(|o| o.residual).collect();
            let held_out = self.legit_trials(&scenario, fusion, path(1))?;
            let attack = self.attack_trials(&scenario, d_pu_pue, &DetectorConfig::new(0.0, fusion)?, path(2))?;
            for &target in pfa_targets {
                let cal = calibrate_tau(&calibration, target, fusion)?;
                let tau = cal.config.tau;
                let outcomes: Vec<TrialOutcome> = held_out.iter().chain(&attack).map(|o| o.rethreshold(tau)).collect();
                let report = metrics(&outcomes)?.with_coords(SweepCoords { d_pu_pue, snr_db: snr, tau });
                table.push(RocCell { target_pfa: target, calibration_degenerate: cal.degenerate, report });
            }
        }
        Ok(table)
    }

    /// Proposed detector against the fixed-reference RSS baseline while the
    /// PU drives away from a static attacker.
    ///
    /// The baseline reference is the PU's initial position. Each distance bin
    /// is evaluated at the first step where the true PU–attacker distance
    /// reaches the bin value. Both detectors judge the same trials.
    pub fn compare_baseline(
        &self,
        distances: &[f64],
        snr_db: f64,
        config: &DetectorConfig,
    ) -> Result<Vec<BaselineRow>> {
        self.validate()?;
        if distances.is_empty() {
            return Err(invalid("comparison needs at least one distance bin"));
        }
        let scenario = self.scenario_at_snr(snr_db)?;
        let reference = scenario.trajectory.start().position();
        let attacker = scenario.attacker;
        let last = scenario.eval_step();

        let mut rows = Vec::with_capacity(distances.len());
        for (bi, &d) in distances.iter().enumerate() {
            let step = (0..=last)
                .find(|&k| scenario.truth_at(k).is_ok_and(|s| distance(s.position(), attacker) >= d))
                .ok_or_else(|| invalid(format!("the PU never gets {d} m away from the attacker")))?;
            let mut s = scenario.clone();
            s.eval_step = Some(step);
            let path = |role: u64| derive_path(self.seed, &[COMPARE_BASELINE, bi as u64, role]);
            let attack = run_paired_trials(&s, reference, config, self.n_trials, 1.0, path(0))?;
            let legit = run_paired_trials(&s, reference, config, self.n_trials, 0.0, path(1))?;
            let all = || attack.iter().chain(&legit);
            let actual = distance(s.truth_at(step)?.position(), attacker);
            let coords = SweepCoords { d_pu_pue: actual, snr_db, tau: config.tau };
            let proposed: Vec<TrialOutcome> = all().map(PairedOutcome::proposed_outcome).collect();
            let baseline: Vec<TrialOutcome> = all().map(PairedOutcome::baseline_outcome).collect();
            rows.push(BaselineRow {
                distance: actual,
                step,
                proposed: metrics(&proposed)?.with_coords(coords),
                baseline: metrics(&baseline)?.with_coords(coords),
            });
        }
        Ok(rows)
    }
}

/// Small statistics helpers for trend checks on Monte Carlo proportions.
pub mod stats {
    /// Standard error of a proportion estimated from `n` trials.
    pub fn binomial_sigma(p: f64, n: usize) -> f64 {
        (p * (1.0 - p) / n as f64).sqrt()
    }

    /// Standard error of the difference of two independent proportions.
    pub fn diff_sigma(p1: f64, n1: usize, p2: f64, n2: usize) -> f64 {
        (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt()
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct SlopeFit {
        pub slope: f64,
        pub stderr: f64,
    }

    impl SlopeFit {
        pub fn interval(&self, z: f64) -> (f64, f64) {
            (self.slope - z * self.stderr, self.slope + z * self.stderr)
        }
    }

    /// Least-squares slope of proportions `ps` (from `ns` trials each) over
    /// `xs`. The standard error uses the pooled proportion, i.e. the
    /// binomial noise expected if the curve were flat.
    pub fn proportion_slope(xs: &[f64], ps: &[f64], ns: &[usize]) -> SlopeFit {
        assert!(xs.len() == ps.len() && ps.len() == ns.len() && xs.len() >= 2);
        let m = xs.len() as f64;
        let x_bar = xs.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
        let slope = xs.iter().zip(ps).map(|(x, p)| (x - x_bar) * p).sum::<f64>() / sxx;
        let total: usize = ns.iter().sum();
        let pooled = ps.iter().zip(ns).map(|(p, &n)| p * n as f64).sum::<f64>() / total as f64;
        let var: f64 =
            xs.iter().zip(ns).map(|(x, &n)| (x - x_bar).powi(2) * pooled * (1.0 - pooled) / n as f64).sum::<f64>()
                / (sxx * sxx);
        SlopeFit { slope, stderr: var.sqrt() }
    }

    /// McNemar statistic for paired binary outcomes: `b` pairs where only
    /// the first says yes, `c` where only the second does.
    pub fn mcnemar_z(b: usize, c: usize) -> f64 {
        if b + c == 0 {
            0.0
        } else {
            (b as f64 - c as f64) / ((b + c) as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Trajectory;

    fn outcome(scheduled: Transmitter, verdict: Label) -> TrialOutcome {
        TrialOutcome { scheduled, verdict, residual: 0.0, seed: 0 }
    }

    #[test]
    fn buckets_are_exhaustive() {
        use Label::*;
        use Transmitter::*;
        assert_eq!(outcome(Pue, Attacker).bucket(), Bucket::Detection);
        assert_eq!(outcome(Pue, Legitimate).bucket(), Bucket::Miss);
        assert_eq!(outcome(Pu, Attacker).bucket(), Bucket::FalseAlarm);
        assert_eq!(outcome(Pu, Legitimate).bucket(), Bucket::CorrectRejection);
    }

    #[test]
    fn ratio_arithmetic() {
        let mut o = vec![outcome(Transmitter::Pue, Label::Attacker); 37];
        o.extend(vec![outcome(Transmitter::Pue, Label::Legitimate); 63]);
        let r = metrics(&o).unwrap();
        assert_eq!(r.pd, Some(0.37));
        assert_eq!(r.pm, Some(0.63));
        assert_eq!(r.pfa, None);
        assert_eq!(r.n_attack_trials, 100);
    }

    #[test]
    fn all_legit_report() {
        let o = vec![outcome(Transmitter::Pu, Label::Legitimate); 20];
        let r = metrics(&o).unwrap();
        assert_eq!(r.pfa, Some(0.0));
        assert_eq!((r.pd, r.pm), (None, None));
        assert!(metrics(&[]).is_err());
    }

    #[test]
    fn rethreshold_uses_ge() {
        let o = TrialOutcome { scheduled: Transmitter::Pu, verdict: Label::Legitimate, residual: 3.0, seed: 1 };
        assert_eq!(o.rethreshold(3.0).verdict, Label::Attacker);
        assert_eq!(o.rethreshold(3.1).verdict, Label::Legitimate);
    }

    fn quiet() -> Scenario {
        Scenario {
            trajectory: Trajectory::straight([0.0, 100.0], [2.0, 0.0], 100.0).unwrap(),
            steps: 20,
            meas_noise_std: 0.0,
            ..Scenario::default()
        }
    }

    #[test]
    fn single_noiseless_pu_trial() {
        let out = run_trials(&quiet(), &DetectorConfig::single(1.0).unwrap(), 1, 0.0, 5).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bucket(), Bucket::CorrectRejection);
        assert!(out[0].residual < 1e-9);
    }

    #[test]
    fn trials_are_deterministic() {
        let mut s = quiet();
        s.meas_noise_std = 5.0;
        s.rss_noise = NoiseModel::new(2.0).unwrap();
        let c = DetectorConfig::single(20.0).unwrap();
        let a = run_trials(&s, &c, 200, 0.5, 99).unwrap();
        let b = run_trials(&s, &c, 200, 0.5, 99).unwrap();
        assert_eq!(a, b);
        let c2 = run_trials(&s, &c, 200, 0.5, 100).unwrap();
        assert_ne!(a, c2);
        assert!(a.iter().any(|o| o.scheduled == Transmitter::Pu));
        assert!(a.iter().any(|o| o.scheduled == Transmitter::Pue));
    }

    #[test]
    fn run_trials_validates() {
        let c = DetectorConfig::single(1.0).unwrap();
        assert!(run_trials(&quiet(), &c, 0, 0.5, 1).is_err());
        assert!(run_trials(&quiet(), &c, 1, 1.5, 1).is_err());
        let mut bad = quiet();
        bad.anchors.clear();
        assert!(run_trials(&bad, &c, 1, 0.5, 1).is_err());
    }

    #[test]
    fn noiseless_track_follows_truth() {
        let pts = simulate_track(&quiet(), 3).unwrap();
        assert_eq!(pts.len(), 20);
        for p in &pts {
            assert_eq!(p.measurement, p.truth.position());
            assert!(p.estimate_error() < 1e-9, "step {}: {}", p.step, p.estimate_error());
        }
    }

    #[test]
    fn track_is_seeded() {
        let mut s = quiet();
        s.meas_noise_std = 3.0;
        assert_eq!(simulate_track(&s, 42).unwrap(), simulate_track(&s, 42).unwrap());
        assert_ne!(simulate_track(&s, 42).unwrap(), simulate_track(&s, 43).unwrap());
    }

    #[test]
    fn rmse_of_constant_errors() {
        assert_eq!(rmse([3.0, 3.0, 3.0]), 3.0);
        assert_eq!(rmse([3.0, 4.0]), 12.5f64.sqrt());
        assert_eq!(rmse(std::iter::empty()), 0.0);
    }

    #[test]
    fn slope_of_flat_line() {
        let fit = stats::proportion_slope(&[0.0, 1.0, 2.0], &[0.5, 0.5, 0.5], &[100, 100, 100]);
        assert_eq!(fit.slope, 0.0);
        assert!(fit.stderr > 0.0);
        let (lo, hi) = fit.interval(3.0);
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn mcnemar() {
        assert_eq!(stats::mcnemar_z(0, 0), 0.0);
        assert_eq!(stats::mcnemar_z(9, 0), 3.0);
    }
}
