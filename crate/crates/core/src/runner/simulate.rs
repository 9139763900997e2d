use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ObserverKind, ScenarioConfig};
use super::output::{self, PlotSeries};
use super::{RunManifest, RunnerError};
use crate::analysis::{convergence_report, metric_series, ConvergenceReport, MetricSeries};
use crate::gains::{build_blocks, certify_lmi, continuous_lyapunov, LyapunovCertificate, QMatrices};
use crate::observer::{
    run_continuous, run_hybrid, ContinuousVariant, EstimatorState, GainSet, HybridTrace, MeasurementFeed,
};
use crate::world::{emit_events, emit_imu, propagate_truth, MeasurementEvent, SensorFrame, TruthTrack, WorldConstants};

/// Summary written to `report_<observer>.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub observer: String,
    pub gains: GainSet,
    pub samples: usize,
    pub jumps: u64,
    pub final_attitude_error: f64,
    pub convergence: ConvergenceReport,
    /// Strictness of the interval Lyapunov certificate, when one was found.
    pub lyapunov_margin: Option<f64>,
}

/// One observer's trace with its metrics.
#[derive(Debug, Clone)]
pub struct ObserverRun {
    pub kind: ObserverKind,
    pub trace: HybridTrace,
    pub series: MetricSeries,
    pub report: ObserverReport,
    pub certificate: Option<LyapunovCertificate>,
}

/// Shared sensor streams and every observer run of one scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub consts: WorldConstants,
    pub truth: TruthTrack,
    pub frames: Vec<SensorFrame>,
    /// Intermittent measurements.
    pub events: Vec<MeasurementEvent>,
    pub runs: Vec<ObserverRun>,
}

impl Simulation {
    pub fn run(&self, kind: ObserverKind) -> Option<&ObserverRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

struct Streams<'a> {
    config: &'a ScenarioConfig,
    consts: &'a WorldConstants,
    truth: &'a TruthTrack,
    frames: &'a [SensorFrame],
    events: &'a [MeasurementEvent],
    dense: &'a [MeasurementEvent],
}

fn run_one(kind: ObserverKind, s: &Streams<'_>) -> Result<ObserverRun, RunnerError> {
    let gains = &s.config.gains[&kind];
    let n = s.consts.n_vectors();
    let initial = EstimatorState::new(s.config.initial_attitude(), n);
    let q = QMatrices::from_gains(gains, s.consts)?;
    let schedule = s.config.sampling_schedule();

    let (trace, certificate) = match kind {
        ObserverKind::Hybrid => {
            let trace = run_hybrid(&initial, s.frames, s.events, gains, s.consts, &schedule)?;
            (trace, certify_lmi(gains, n, schedule.t_min, schedule.t_max).ok())
        }
        ObserverKind::Continuous => {
            let feed = MeasurementFeed::Continuous(s.dense);
            (run_continuous(&initial, s.frames, feed, gains, s.consts, ContinuousVariant::Full)?, None)
        }
        ObserverKind::ContinuousZoh => {
            let feed = MeasurementFeed::ZeroOrderHold(s.events);
            (run_continuous(&initial, s.frames, feed, gains, s.consts, ContinuousVariant::Full)?, None)
        }
        ObserverKind::Reduced => {
            let feed = MeasurementFeed::Continuous(s.dense);
            (run_continuous(&initial, s.frames, feed, gains, s.consts, ContinuousVariant::Reduced)?, None)
        }
    };

    let p_zeta =
        matches!(kind, ObserverKind::Continuous | ObserverKind::ContinuousZoh).then(|| continuous_lyapunov(gains));
    let blocks = build_blocks(n, gains);
    let series =
        metric_series(&trace, s.truth, s.consts, &q, p_zeta.as_ref(), certificate.as_ref().map(|c| (c, &blocks)))?;
    let convergence = convergence_report(&series, s.config.report.threshold, s.config.report.tail_fraction)?;
    let report = ObserverReport {
        observer: kind.name().into(),
        gains: gains.clone(),
        samples: trace.len(),
        jumps: trace.jump_count(),
        final_attitude_error: series.rows.last().map_or(f64::NAN, |r| r.attitude_error),
        convergence,
        lyapunov_margin: certificate.as_ref().map(|c| c.margin),
    };
    Ok(ObserverRun { kind, trace, series, report, certificate })
}

/// Generates the sensor streams and runs every selected observer in parallel.
pub fn simulate(config: &ScenarioConfig) -> Result<Simulation, RunnerError> {
    config.validate()?;
    let consts = config.world.constants();
    let trajectory = config.trajectory.build();
    let truth = propagate_truth(trajectory.as_ref(), config.duration, 1.0 / config.imu_rate)?;
    let noise = config.noise_spec();
    let frames = emit_imu(&truth, trajectory.as_ref(), &consts, &noise)?;
    let arrivals = config.sampling_schedule().generate(truth.end())?;
    let events = emit_events(&truth, &consts, &arrivals, &noise)?;
    let needs_dense = config.observers.iter().any(|k| matches!(k, ObserverKind::Continuous | ObserverKind::Reduced));
    let dense = if needs_dense {
        let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
        emit_events(&truth, &consts, &times, &noise)?
    } else {
        Vec::new()
    };

    let streams = Streams { config, consts: &consts, truth: &truth, frames: &frames, events: &events, dense: &dense };
    let runs = config.observers.par_iter().map(|k| run_one(*k, &streams)).collect::<Result<Vec<_>, _>>()?;
    Ok(Simulation { consts, truth, frames, events, runs })
}

/// Runs [`simulate`] and writes its artifacts under `out`.
///
/// Shared files: `truth.csv`, `imu.csv`, `events.csv`, `comparison.svg`.
/// Per observer: `trace_<name>.csv`, `report_<name>.json`.
pub fn cmd_simulate(config: &ScenarioConfig, out: &Path) -> Result<(super::RunManifest, Simulation), RunnerError> {
    config.validate()?;
    let (mut manifest, started) = RunManifest::start("simulate", config, out)?;
    let sim = simulate(config)?;
    let n = sim.consts.n_vectors();

    output::write_truth(&out.join("truth.csv"), &sim.truth)?;
    output::write_imu(&out.join("imu.csv"), &sim.frames)?;
    output::write_events(&out.join("events.csv"), &sim.events, n)?;
    manifest.files.extend(["truth.csv", "imu.csv", "events.csv"].map(String::from));

    for run in &sim.runs {
        let name = run.kind.name();
        let trace = format!("trace_{name}.csv");
        let report = format!("report_{name}.json");
        output::write_trace(&out.join(&trace), &run.series, n)?;
        output::write_json(&out.join(&report), &run.report)?;
        manifest.observer_files.insert(name.into(), vec![trace, report]);
    }

    let curves: Vec<PlotSeries<'_>> = sim
        .runs
        .iter()
        .map(|r| PlotSeries {
            label: r.kind.name(),
            times: r.series.times(),
            attitude: r.series.attitude_errors(),
            state: r
                .series
                .rows
                .iter()
                .map(|row| if r.kind == ObserverKind::Hybrid { row.zeta_bar_norm } else { row.zeta_norm })
                .collect(),
        })
        .collect();
    let svg_path = out.join("comparison.svg");
    std::fs::write(&svg_path, output::comparison_svg(&curves)).map_err(|e| RunnerError::io(&svg_path, e))?;
    manifest.files.push("comparison.svg".into());

    let manifest = manifest.finish(started, out)?;
    Ok((manifest, sim))
}
