//! Subcommands: run an experiment, turn its results into tables and charts,
//! and write them with a manifest.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use pue_core::experiments::{simulate_track, BaselineRow, RocCell, TrackPoint};
use pue_core::rng::derive_seed;
use pue_core::MetricsReport;

use crate::config::ExperimentConfig;
use crate::svg::{LineChart, Series};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Track,
    SweepDistance,
    SweepRoc,
    CompareBaseline,
}

impl Command {
    pub const ALL: [Command; 4] = [Command::Track, Command::SweepDistance, Command::SweepRoc, Command::CompareBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Command::Track => "track",
            Command::SweepDistance => "sweep-distance",
            Command::SweepRoc => "sweep-roc",
            Command::CompareBaseline => "compare-baseline",
        }
    }
}

/// One output file, rendered in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn csv(name: &str, table: &Table) -> anyhow::Result<Self> {
        let bytes = table.to_csv_bytes().with_context(|| format!("rendering {name}"))?;
        Ok(Self { name: name.to_string(), bytes })
    }

    fn svg(name: &str, chart: &LineChart) -> Self {
        Self { name: name.to_string(), bytes: chart.render().into_bytes() }
    }
}

pub const MANIFEST: &str = "manifest.toml";

/// Run `command`, write its artifacts and a manifest into `config.run.out`,
/// and return the written paths.
pub fn run(command: Command, config: &ExperimentConfig) -> anyhow::Result<Vec<PathBuf>> {
    config.validate()?;
    let artifacts = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.threads)
        .build()
        .context("starting the worker pool")?
        .install(|| render(command, config))?;

    let dir = &config.run.out;
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts.iter().chain(std::iter::once(&manifest(command, config)?)) {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Run `command` on the current thread pool and render its artifacts.
pub fn render(command: Command, config: &ExperimentConfig) -> anyhow::Result<Vec<Artifact>> {
    match command {
        Command::Track => {
            let scenario = config.scenario()?;
            let points = simulate_track(&scenario, derive_seed(config.run.seed, 0))?;
            Ok(vec![
                Artifact::csv("track.csv", &track_table(&points)?)?,
                Artifact::svg("track.svg", &track_chart(&points)),
            ])
        }
        Command::SweepDistance => {
            let exp = config.experiment()?;
            let reports =
                exp.sweep_distance(&config.sweep.distances, &config.sweep.snr_db, &config.threshold_policy()?)?;
            Ok(vec![
                Artifact::csv("sweep_distance.csv", &distance_table(&reports)?)?,
                Artifact::svg("sweep_distance_pd.svg", &distance_chart(&reports, Metric::Pd)),
                Artifact::svg("sweep_distance_pm.svg", &distance_chart(&reports, Metric::Pm)),
            ])
        }
        Command::SweepRoc => {
            let exp = config.experiment()?;
            let w = &config.sweep;
            let cells = exp.sweep_roc(w.roc_distance, &w.roc_snr_db, &w.pfa_targets, config.detector.fusion)?;
            Ok(vec![
                Artifact::csv("sweep_roc.csv", &roc_table(&cells)?)?,
                Artifact::svg("sweep_roc.svg", &roc_chart(&cells)),
            ])
        }
        Command::CompareBaseline => {
            let exp = config.experiment()?;
            let rows = exp.compare_baseline(
                &config.sweep.baseline_distances,
                config.sweep.baseline_snr_db,
                &config.fixed_detector()?,
            )?;
            Ok(vec![
                Artifact::csv("compare_baseline.csv", &baseline_table(&rows)?)?,
                Artifact::svg("compare_baseline_pd.svg", &baseline_chart(&rows, Metric::Pd)),
                Artifact::svg("compare_baseline_pm.svg", &baseline_chart(&rows, Metric::Pm)),
            ])
        }
    }
}

/// The resolved config with a comment header; it loads back as a config.
pub fn manifest(command: Command, config: &ExperimentConfig) -> anyhow::Result<Artifact> {
    let mut text = format!(
        "# pue-sim {} manifest\n# command: {}\n# master seed: {}\n# reproduce: pue-sim {} --config {}\n\n",
        env!("CARGO_PKG_VERSION"),
        command.name(),
        config.run.seed,
        command.name(),
        MANIFEST,
    );
    text.push_str(&config.to_toml()?);
    Ok(Artifact { name: MANIFEST.to_string(), bytes: text.into_bytes() })
}

pub fn track_table(points: &[TrackPoint]) -> anyhow::Result<Table> {
    let mut t = Table::new(&[
        "step",
        "t",
        "true_x",
        "true_y",
        "true_vx",
        "true_vy",
        "meas_x",
        "meas_y",
        "est_x",
        "est_y",
        "est_vx",
        "est_vy",
        "est_error",
        "meas_error",
    ]);
    for p in points {
        let (tr, est) = (p.truth, p.estimate.state);
        t.push(vec![
            p.step.into(),
            p.t.into(),
            tr.x.into(),
            tr.y.into(),
            tr.vx.into(),
            tr.vy.into(),
            p.measurement[0].into(),
            p.measurement[1].into(),
            est.x.into(),
            est.y.into(),
            est.vx.into(),
            est.vy.into(),
            p.estimate_error().into(),
            p.measurement_error().into(),
        ])?;
    }
    Ok(t)
}

pub fn track_chart(points: &[TrackPoint]) -> LineChart {
    let mut c = LineChart::new("Primary user trajectory", "x (m)", "y (m)");
    c.push(Series::new("true", points.iter().map(|p| (p.truth.x, p.truth.y)).collect()));
    c.push(Series::new("estimated", points.iter().map(|p| (p.estimate.state.x, p.estimate.state.y)).collect()));
    c.push(Series::new("measured", points.iter().map(|p| (p.measurement[0], p.measurement[1])).collect()));
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Pd,
    Pm,
}

impl Metric {
    fn of(self, r: &MetricsReport) -> Option<f64> {
        match self {
            Metric::Pd => r.pd,
            Metric::Pm => r.pm,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Pd => "P_d",
            Metric::Pm => "P_m",
        }
    }
}

const COUNT_COLUMNS: [&str; 6] = ["detections", "misses", "false_alarms", "correct_rejections", "n_attack", "n_legit"];

fn counts(r: &MetricsReport) -> [Cell; 6] {
    [
        r.detections.into(),
        r.misses.into(),
        r.false_alarms.into(),
        r.correct_rejections.into(),
        r.n_attack_trials.into(),
        r.n_legit_trials.into(),
    ]
}

fn coords(r: &MetricsReport) -> anyhow::Result<pue_core::experiments::SweepCoords> {
    r.coords.ok_or_else(|| anyhow!("report without sweep coordinates"))
}

fn header(lead: &[&str]) -> Vec<String> {
    lead.iter().chain(COUNT_COLUMNS.iter()).map(|s| s.to_string()).collect()
}

pub fn distance_table(reports: &[MetricsReport]) -> anyhow::Result<Table> {
    let mut t = Table::new(&header(&["snr_db", "d_pu_pue", "tau", "pd", "pm", "pfa"]));
    for r in reports {
        let c = coords(r)?;
        let mut row: Vec<Cell> =
            vec![c.snr_db.into(), c.d_pu_pue.into(), c.tau.into(), r.pd.into(), r.pm.into(), r.pfa.into()];
        row.extend(counts(r));
        t.push(row)?;
    }
    Ok(t)
}

fn snr_label(snr: f64) -> String {
    format!("SNR = {snr} dB")
}

/// Groups consecutive reports sharing an SNR, preserving order.
fn by_snr<T>(items: &[T], snr: impl Fn(&T) -> f64) -> Vec<(f64, Vec<&T>)> {
    let mut groups: Vec<(f64, Vec<&T>)> = Vec::new();
    for it in items {
        let s = snr(it);
        match groups.iter_mut().find(|g| g.0 == s) {
            Some(g) => g.1.push(it),
            None => groups.push((s, vec![it])),
        }
    }
    groups
}

pub fn distance_chart(reports: &[MetricsReport], metric: Metric) -> LineChart {
    let mut chart =
        LineChart::new(format!("{} vs PU-attacker distance", metric.label()), "d_pu_pue (m)", metric.label())
            .with_y_range(0.0, 1.0);
    for (snr, group) in by_snr(reports, |r| r.coords.map_or(f64::NAN, |c| c.snr_db)) {
        let points = group.iter().filter_map(|r| Some((r.coords?.d_pu_pue, metric.of(r)?))).collect();
        chart.push(Series::new(snr_label(snr), points));
    }
    chart
}

pub fn roc_table(cells: &[RocCell]) -> anyhow::Result<Table> {
    let mut t =
        Table::new(&header(&["snr_db", "d_pu_pue", "target_pfa", "tau", "pfa", "pd", "pm", "calibration_degenerate"]));
    for cell in cells {
        let r = &cell.report;
        let c = coords(r)?;
        let mut row: Vec<Cell> = vec![
            c.snr_db.into(),
            c.d_pu_pue.into(),
            cell.target_pfa.into(),
            c.tau.into(),
            r.pfa.into(),
            r.pd.into(),
            r.pm.into(),
            cell.calibration_degenerate.into(),
        ];
        row.extend(counts(r));
        t.push(row)?;
    }
    Ok(t)
}

pub fn roc_chart(cells: &[RocCell]) -> LineChart {
    let mut chart = LineChart::new("ROC", "achieved P_fa", "P_d").with_y_range(0.0, 1.0);
    for (snr, group) in by_snr(cells, |c| c.report.coords.map_or(f64::NAN, |c| c.snr_db)) {
        let mut points: Vec<(f64, f64)> = group.iter().filter_map(|c| Some((c.report.pfa?, c.report.pd?))).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        chart.push(Series::new(snr_label(snr), points));
    }
    chart
}

pub fn baseline_table(rows: &[BaselineRow]) -> anyhow::Result<Table> {
    let mut t = Table::new(&[
        "bin",
        "step",
        "d_pu_pue",
        "snr_db",
        "tau",
        "proposed_pd",
        "proposed_pm",
        "proposed_pfa",
        "baseline_pd",
        "baseline_pm",
        "baseline_pfa",
        "n_attack",
        "n_legit",
    ]);
    for (i, row) in rows.iter().enumerate() {
        let (p, b) = (&row.proposed, &row.baseline);
        let c = coords(p)?;
        t.push(vec![
            i.into(),
            row.step.into(),
            row.distance.into(),
            c.snr_db.into(),
            c.tau.into(),
            p.pd.into(),
            p.pm.into(),
            p.pfa.into(),
            b.pd.into(),
            b.pm.into(),
            b.pfa.into(),
            p.n_attack_trials.into(),
            p.n_legit_trials.into(),
        ])?;
    }
    Ok(t)
}

pub fn baseline_chart(rows: &[BaselineRow], metric: Metric) -> LineChart {
    let mut chart = LineChart::new(
        format!("{}: Kalman-tracked reference vs fixed reference", metric.label()),
        "d_pu_pue (m)",
        metric.label(),
    )
    .with_y_range(0.0, 1.0);
    let series = |name: &str, pick: fn(&BaselineRow) -> &MetricsReport| {
        Series::new(name, rows.iter().filter_map(|r| Some((r.distance, metric.of(pick(r))?))).collect())
    };
    chart.push(series("Kalman filter", |r| &r.proposed));
    chart.push(series("RSS baseline", |r| &r.baseline));
    chart
}

/// Paths of the files `command` writes into `dir`, manifest last.
pub fn expected_outputs(command: Command, dir: &Path) -> Vec<PathBuf> {
    let names: &[&str] = match command {
        Command::Track => &["track.csv", "track.svg"],
        Command::SweepDistance => &["sweep_distance.csv", "sweep_distance_pd.svg", "sweep_distance_pm.svg"],
        Command::SweepRoc => &["sweep_roc.csv", "sweep_roc.svg"],
        Command::CompareBaseline => &["compare_baseline.csv", "compare_baseline_pd.svg", "compare_baseline_pm.svg"],
    };
    names.iter().chain(std::iter::once(&MANIFEST)).map(|n| dir.join(n)).collect()
}
