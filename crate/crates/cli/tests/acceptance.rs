//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Matrix4};
use pue_cli::commands::{self, Command};
use pue_cli::ExperimentConfig;
use pue_core::experiments::{rmse, run_trials, simulate_track, stats};
use pue_core::rng::{self, derive_seed};
use pue_core::scenario::{bearing, offset_point};
use pue_core::tracking::{
    gain, predict, update, Covariance, FilterEstimate, MeasurementModel, MotionModel, TargetState,
};
use pue_core::{DetectorConfig, Fusion, MetricsReport, NoiseModel, Scenario};
use rand::Rng;

#[path = "../../core/tests/support/kf_oracle.rs"]
mod oracle;

use oracle::M4;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn defaults() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn max_abs_diff_m4(got: &Matrix4<f64>, want: &M4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((got[(i, j)] - want[i][j]).abs());
        }
    }
    worst
}

fn kf_oracle() -> Check {
    // Hand-computed predict: P = A·Aᵀ + B·diag(0.04, 0.04)·Bᵀ, dt = 0.5.
    let est = FilterEstimate::new(TargetState::new(1.0, 1.0, 0.5, -0.5), Covariance::identity());
    let model = MotionModel::new(0.5, 0.04, 0.04).unwrap();
    let pred = predict(&est, &model, [0.0, 0.0]).unwrap();
    let frozen_pred: M4 = [
        [1.250625, 0.0, 0.5025, 0.0],
        [0.0, 1.250625, 0.0, 0.5025],
        [0.5025, 0.0, 1.01, 0.0],
        [0.0, 0.5025, 0.0, 1.01],
    ];
    let s = pred.state;
    ensure!([s.x, s.y, s.vx, s.vy] == [1.25, 0.75, 0.5, -0.5], "predicted state {s:?}");
    ensure!(max_abs_diff_m4(pred.covariance.matrix(), &frozen_pred) <= 1e-9, "predicted covariance differs");
    let (_, p_or) = oracle::predict([1.0, 1.0, 0.5, -0.5], &Matrix4::identity().into(), 0.5, [0.04, 0.04], [0.0, 0.0]);
    ensure!(max_abs_diff_m4(pred.covariance.matrix(), &p_or) <= 1e-9, "predict disagrees with oracle");

    // Coupled-noise update, frozen from exact rational arithmetic.
    let meas = MeasurementModel::new(Matrix2::new(0.25, 0.1, 0.1, 0.5)).unwrap();
    let g = gain(&pred.covariance, &meas).unwrap();
    let frozen_gain = [
        [0.8365872833322462, -0.0477879205045196],
        [-0.0477879205045196, 0.7171174820709472],
        [0.33614001789061765, -0.019201143471081338],
        [-0.019201143471081338, 0.28813715921291433],
    ];
    for (i, row) in frozen_gain.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            ensure!((g[(i, j)] - want).abs() <= 1e-9, "gain[{i}][{j}] = {}", g[(i, j)]);
        }
    }
    let upd = update(&pred, &meas, [1.5, 0.5]).unwrap();
    let frozen_state = [1.4710938009591914, 0.5587736493561333, 0.5888352903404247, -0.5768345756709989];
    let u = upd.state;
    for (a, b) in [u.x, u.y, u.vx, u.vy].iter().zip(frozen_state) {
        ensure!((a - b).abs() <= 1e-9, "updated state {u:?}");
    }
    let frozen_upd: M4 = [
        [0.2043680287826096, 0.05976476808096482, 0.08211489012554628, 0.024013430053521096],
        [0.05976476808096482, 0.35377994898502163, 0.024013430053521096, 0.14214846525934902],
        [0.08211489012554628, 0.024013430053521096, 0.8410896410099646, 0.009648574594218372],
        [0.024013430053521096, 0.14214846525934902, 0.009648574594218372, 0.8652110774955105],
    ];
    ensure!(max_abs_diff_m4(upd.covariance.matrix(), &frozen_upd) <= 1e-9, "updated covariance differs");

    // Randomized predict/update chains against the oracle.
    let mut r = rng::stream(0x5EED_0001);
    let mut steps = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..2_000 {
        let scale: f64 = r.random_range(0.1..10.0);
        let l = Matrix4::from_fn(|_, _| r.random_range(-1.0..1.0) * scale);
        let p0 = l * l.transpose() + Matrix4::identity() * 1e-6;
        let mut p_ref: M4 = p0.into();
        let mut x_ref = [0.0; 4].map(|_| r.random_range(-100.0..100.0));
        let mut est =
            FilterEstimate::new(TargetState::new(x_ref[0], x_ref[1], x_ref[2], x_ref[3]), Covariance::new(p0).unwrap());
        let q = [r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let (r11, r22): (f64, f64) = (r.random_range(0.01..25.0), r.random_range(0.01..25.0));
        let r12 = r.random_range(-0.9..0.9) * (r11 * r22).sqrt();
        let meas = MeasurementModel::new(Matrix2::new(r11, r12, r12, r22)).unwrap();
        for _ in 0..250 {
            let dt = r.random_range(0.0..2.0);
            let u = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let z = [x_ref[0] + r.random_range(-10.0..10.0), x_ref[1] + r.random_range(-10.0..10.0)];
            let model = MotionModel::new(dt, q[0], q[1]).unwrap();
            est = predict(&est, &model, u).map_err(|e| e.to_string())?;
            est.covariance.check().map_err(|e| format!("after predict: {e}"))?;
            est = update(&est, &meas, z).map_err(|e| e.to_string())?;
            est.covariance.check().map_err(|e| format!("after update: {e}"))?;
            steps += 2;

            (x_ref, p_ref) = oracle::predict(x_ref, &p_ref, dt, q, u);
            (x_ref, p_ref) = oracle::update(x_ref, &p_ref, [[r11, r12], [r12, r22]], z);
            let p_scale = 1.0 + p_ref.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let dp = max_abs_diff_m4(est.covariance.matrix(), &p_ref) / p_scale;
            let s = est.state;
            let dx = [s.x, s.y, s.vx, s.vy]
                .iter()
                .zip(x_ref)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())));
            worst = worst.max(dp).max(dx);
            ensure!(dp <= 1e-9 && dx <= 1e-9, "step {steps}: relative deviation {}", dp.max(dx));
        }
    }
    Ok(format!("frozen cases within 1e-9; {steps} randomized steps symmetric PSD, worst deviation {worst:.1e}"))
}

fn tracking_fidelity() -> Check {
    let scenario = defaults().scenario().unwrap();
    ensure!(scenario.meas_noise_std == 5.0, "default sigma_z is {}", scenario.meas_noise_std);
    let runs = 100u64;
    let (mut filt_sum, mut raw_sum) = (0.0, 0.0);
    for run in 0..runs {
        let pts = simulate_track(&scenario, derive_seed(0xACCE_0002, run)).unwrap();
        let filt = rmse(pts.iter().map(|p| p.estimate_error()));
        let raw = rmse(pts.iter().map(|p| p.measurement_error()));
        ensure!(filt < raw, "run {run}: filter RMSE {filt:.3} m not below raw {raw:.3} m");
        filt_sum += filt;
        raw_sum += raw;
    }
    let (filt, raw) = (filt_sum / runs as f64, raw_sum / runs as f64);
    ensure!(filt < 5.0, "mean filter RMSE {filt:.3} m");
    Ok(format!("{runs} runs; mean RMSE filter {filt:.3} m vs raw {raw:.3} m"))
}

fn distance_trend(all: &mut Vec<MetricsReport>) -> Check {
    let config = defaults();
    let exp = config.experiment().unwrap();
    let (distances, snrs) = (&config.sweep.distances, &config.sweep.snr_db);
    ensure!(exp.n_trials >= 10_000, "only {} trials per cell", exp.n_trials);
    let table = exp.sweep_distance(distances, snrs, &config.threshold_policy().unwrap()).map_err(|e| e.to_string())?;
    all.extend_from_slice(&table);
    let mut worst_drop = 0.0f64;
    for (si, snr) in snrs.iter().enumerate() {
        let row = &table[si * distances.len()..(si + 1) * distances.len()];
        for w in row.windows(2) {
            let (a, b) = (w[0].pd.unwrap(), w[1].pd.unwrap());
            let tol = 3.0 * stats::diff_sigma(a, w[0].n_attack_trials, b, w[1].n_attack_trials);
            ensure!(b >= a - tol, "SNR {snr} dB: pd falls {a} -> {b} beyond 3 sigma ({tol:.4})");
            worst_drop = worst_drop.max(a - b);
        }
    }
    let mid = snrs.len() / 2;
    let row = &table[mid * distances.len()..(mid + 1) * distances.len()];
    let (first, last) = (row[0].pd.unwrap(), row[row.len() - 1].pd.unwrap());
    ensure!(last - first >= 0.15, "mid SNR {} dB: pd {first} -> {last}", snrs[mid]);
    Ok(format!(
        "{} cells x {} trials; largest drop {worst_drop:.4}; at {} dB pd {first:.4} -> {last:.4}",
        table.len(),
        exp.n_trials,
        snrs[mid]
    ))
}

fn snr_trend(all: &mut Vec<MetricsReport>) -> Check {
    let config = defaults();
    let exp = config.experiment().unwrap();
    let snrs = &config.sweep.snr_db;
    let table = exp.sweep_distance(&[50.0], snrs, &config.threshold_policy().unwrap()).map_err(|e| e.to_string())?;
    all.extend_from_slice(&table);
    let pd: Vec<f64> = table.iter().map(|r| r.pd.unwrap()).collect();
    for (i, w) in table.windows(2).enumerate() {
        let (a, b) = (pd[i], pd[i + 1]);
        let tol = 3.0 * stats::diff_sigma(a, w[0].n_attack_trials, b, w[1].n_attack_trials);
        ensure!(b - a > tol, "pd {a} at {} dB -> {b} at {} dB is not a significant increase", snrs[i], snrs[i + 1]);
    }
    let top = *pd.last().unwrap();
    ensure!(top >= 0.95, "top SNR pd {top}");
    let shown: Vec<String> = pd.iter().map(|p| format!("{p:.4}")).collect();
    Ok(format!("pd at 50 m over {snrs:?} dB: [{}]", shown.join(", ")))
}

fn roc_behaviour(all: &mut Vec<MetricsReport>) -> Check {
    let config = defaults();
    let exp = config.experiment().unwrap();
    let w = &config.sweep;
    let cells =
        exp.sweep_roc(w.roc_distance, &w.roc_snr_db, &w.pfa_targets, Fusion::Single).map_err(|e| e.to_string())?;
    all.extend(cells.iter().map(|c| c.report));
    let n_cal = exp.n_trials;
    let mut worst_z = 0.0f64;
    for row in cells.chunks(w.pfa_targets.len()) {
        let snr = row[0].report.coords.unwrap().snr_db;
        let mut pts: Vec<(f64, f64)> = row.iter().map(|c| (c.report.pfa.unwrap(), c.report.pd.unwrap())).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        ensure!(pts.windows(2).all(|p| p[1].1 >= p[0].1), "SNR {snr} dB: pd not monotone in pfa {pts:?}");
        for c in row {
            let (t, n_eval) = (c.target_pfa, c.report.n_legit_trials);
            let sigma = (t * (1.0 - t) * (1.0 / n_eval as f64 + 1.0 / n_cal as f64)).sqrt();
            let z = (c.report.pfa.unwrap() - t).abs() / sigma;
            worst_z = worst_z.max(z);
            ensure!(z <= 3.0, "SNR {snr} dB target {t}: achieved pfa {} is {z:.2} sigma off", c.report.pfa.unwrap());
        }
    }

    let null = exp.sweep_roc(0.0, &w.roc_snr_db, &w.pfa_targets, Fusion::Single).map_err(|e| e.to_string())?;
    all.extend(null.iter().map(|c| c.report));
    let mut worst_null = 0.0f64;
    for c in &null {
        let r = &c.report;
        let (pd, pfa) = (r.pd.unwrap(), r.pfa.unwrap());
        let pooled = (r.detections + r.false_alarms) as f64 / (r.n_attack_trials + r.n_legit_trials) as f64;
        let sigma = stats::diff_sigma(pooled, r.n_attack_trials, pooled, r.n_legit_trials);
        let z = if sigma > 0.0 { (pd - pfa).abs() / sigma } else { 0.0 };
        worst_null = worst_null.max(z);
        ensure!(z <= 3.0, "null case at target {}: pd {pd} vs pfa {pfa} ({z:.2} sigma)", c.target_pfa);
    }
    Ok(format!(
        "{} ROC cells monotone; pfa within {worst_z:.2} sigma of target; null case within {worst_null:.2} sigma of the diagonal",
        cells.len()
    ))
}

fn baseline_comparison(all: &mut Vec<MetricsReport>) -> Check {
    let config = defaults();
    let exp = config.experiment().unwrap();
    let rows = exp
        .compare_baseline(
            &config.sweep.baseline_distances,
            config.sweep.baseline_snr_db,
            &config.fixed_detector().unwrap(),
        )
        .map_err(|e| e.to_string())?;
    for r in &rows {
        all.push(r.proposed);
        all.push(r.baseline);
        ensure!(r.proposed.n_attack_trials >= 10_000, "only {} paired trials per bin", r.proposed.n_attack_trials);
    }
    let last = rows.last().unwrap();
    let (p, b) = (last.proposed.pd.unwrap(), last.baseline.pd.unwrap());
    ensure!(p - b >= 0.20, "at {:.1} m proposed pd {p} vs baseline {b}", last.distance);
    let xs: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.baseline.pd.unwrap()).collect();
    let ns: Vec<usize> = rows.iter().map(|r| r.baseline.n_attack_trials).collect();
    let fit = stats::proportion_slope(&xs, &ps, &ns);
    let (lo, hi) = fit.interval(3.0);
    ensure!(lo <= 0.0 && hi >= 0.0, "baseline slope {:.3e} per m, 3-sigma interval [{lo:.3e}, {hi:.3e}]", fit.slope);
    let (pm_p, pm_b) = (last.proposed.pm.unwrap(), last.baseline.pm.unwrap());
    ensure!(pm_p < pm_b, "pm proposed {pm_p} vs baseline {pm_b}");
    Ok(format!(
        "at {:.1} m pd {p:.4} vs {b:.4}, pm {pm_p:.4} vs {pm_b:.4}; baseline slope CI [{lo:.2e}, {hi:.2e}] per m",
        last.distance
    ))
}

fn pm_identity(all: &[MetricsReport]) -> Check {
    ensure!(!all.is_empty(), "no reports were produced by the sweeps");
    let mut checked = 0;
    for r in all {
        if let (Some(pd), Some(pm)) = (r.pd, r.pm) {
            ensure!(pm == 1.0 - pd && pd + pm == 1.0, "pd {pd:?} pm {pm:?} at {:?}", r.coords);
            checked += 1;
        } else {
            ensure!(r.pd.is_none() && r.pm.is_none(), "pd/pm presence differs at {:?}", r.coords);
        }
    }
    Ok(format!("{checked} reports, pm == 1 - pd bitwise"))
}

fn noiseless_oracle() -> Check {
    // Only the simulated noise sources are zeroed; q is the filter's own model.
    let base =
        Scenario { meas_noise_std: 0.0, rss_noise: NoiseModel::new(0.0).unwrap(), ..defaults().scenario().unwrap() };
    let eval = base.eval_step();
    let pu = base.truth_at(eval).unwrap().position();
    let radial = bearing(base.designated_anchor().position(), pu);
    let mut cases = 0;
    for d in [30.0, 50.0, 70.0, 90.0, 110.0, 130.0, 150.0] {
        for turn in [0.0, std::f64::consts::PI] {
            let mut s = base.clone();
            s.attacker = offset_point(pu, d, radial + turn);
            let pd_at = |tau: f64| -> Result<(f64, Vec<f64>), String> {
                let out =
                    run_trials(&s, &DetectorConfig::single(tau).unwrap(), 50, 1.0, 8).map_err(|e| e.to_string())?;
                let r = pue_core::experiments::metrics(&out).map_err(|e| e.to_string())?;
                Ok((r.pd.unwrap(), out.iter().map(|o| o.residual).collect()))
            };
            let (below, residuals) = pd_at(d * (1.0 - 1e-9))?;
            for res in &residuals {
                ensure!((res - d).abs() <= 1e-9 * d, "d {d}: residual {res}");
            }
            ensure!(below == 1.0, "d {d}: pd {below} just below tau = d");
            let (above, _) = pd_at(d * (1.0 + 1e-9))?;
            ensure!(above == 0.0, "d {d}: pd {above} just above tau = d");
            let (at, _) = pd_at(residuals[0])?;
            ensure!(at == 1.0, "d {d}: pd {at} at tau equal to the residual");
            cases += 1;
        }
    }
    let legit = run_trials(&base, &DetectorConfig::single(1e-6).unwrap(), 50, 0.0, 8).map_err(|e| e.to_string())?;
    ensure!(legit.iter().all(|o| o.residual <= 1e-9 * 223.0), "legitimate residual is not zero");
    Ok(format!("{cases} geometries: residual = d to 1e-9, pd flips 1 -> 0 across tau = d"))
}

fn reproducibility() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for cmd in [Command::SweepDistance, Command::SweepRoc, Command::CompareBaseline] {
        let mut reference: Option<Vec<Vec<u8>>> = None;
        for threads in [1, 2, 5] {
            let mut config = defaults();
            config.run.trials = 1_000;
            config.run.threads = threads;
            config.run.out = tmp.path().join(format!("{}-{threads}", cmd.name()));
            commands::run(cmd, &config).map_err(|e| format!("{e:#}"))?;
            let csvs: Vec<Vec<u8>> = commands::expected_outputs(cmd, &config.run.out)
                .iter()
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(|p| std::fs::read(p).unwrap())
                .collect();
            match &reference {
                None => reference = Some(csvs),
                Some(r) => {
                    ensure!(*r == csvs, "{} CSV differs with {threads} threads", cmd.name());
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{compared} reruns across 1/2/5 threads byte-identical"))
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
}

fn run(c: Criterion, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let took = start.elapsed();
    let result = match result {
        Ok(detail) if took > c.limit => Err(format!("{detail}; took {took:.1?}, limit {:?}", c.limit)),
        other => other,
    };
    let ok = result.is_ok();
    let (tag, detail) = match result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{}] {}: {detail} ({:.2} s)", c.id, c.name, took.as_secs_f64());
    ok
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut reports = Vec::new();
    let mut results = Vec::new();
    let crit = |id, name, secs| Criterion { id, name, limit: Duration::from_secs(secs) };
    results.push(run(crit(1, "Kalman filter oracle", 30), kf_oracle));
    results.push(run(crit(2, "tracking fidelity", 60), tracking_fidelity));
    results.push(run(crit(3, "pd increases with distance", 300), || distance_trend(&mut reports)));
    results.push(run(crit(4, "pd increases with SNR", 180), || snr_trend(&mut reports)));
    results.push(run(crit(6, "ROC behaviour", 300), || roc_behaviour(&mut reports)));
    results.push(run(crit(7, "baseline comparison", 300), || baseline_comparison(&mut reports)));
    results.push(run(crit(5, "pm = 1 - pd on every report", 5), || pm_identity(&reports)));
    results.push(run(crit(8, "noiseless end-to-end oracle", 10), noiseless_oracle));
    results.push(run(crit(9, "reproducibility across thread counts", 300), reproducibility));
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
