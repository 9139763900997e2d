use super::step::{flow_continuous, flow_hybrid, flow_reduced, jump_hybrid, Aiding, ImuSegment};
use super::{EstimatorState, GainSet, HybridTime, ObserverError, Timer};
use crate::world::{MeasurementEvent, SamplingSchedule, SensorFrame, WorldConstants};

/// Event times closer than this to an IMU sample are treated as coinciding with it.
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// State at the end of a flow interval (or the initial state).
    Flow,
    /// State right after a jump.
    Jump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub time: HybridTime,
    pub kind: TraceKind,
    pub state: EstimatorState,
    /// Timer value; `None` for the continuous observers.
    pub tau: Option<f64>,
}

/// Observer output ordered by hybrid time.
///
/// Every jump contributes two samples with the same `t`: the pre-jump state
/// (kind `Flow`, index `j`) and the post-jump state (kind `Jump`, index `j + 1`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HybridTrace {
    pub samples: Vec<TraceSample>,
}

impl HybridTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn jump_count(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.time.j)
    }

    /// `(pre-jump, post-jump)` pairs.
    pub fn jumps(&self) -> impl Iterator<Item = (&TraceSample, &TraceSample)> {
        self.samples.windows(2).filter(|w| w[1].kind == TraceKind::Jump).map(|w| (&w[0], &w[1]))
    }

    fn push(&mut self, t: f64, j: u64, kind: TraceKind, state: &EstimatorState, tau: Option<f64>) {
        self.samples.push(TraceSample { time: HybridTime { t, j }, kind, state: state.clone(), tau });
    }
}

fn check_frames(frames: &[SensorFrame]) -> Result<(), ObserverError> {
    if frames.is_empty() {
        return Err(ObserverError::InvalidStream("no IMU frames".into()));
    }
    if frames.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(ObserverError::InvalidStream("IMU timestamps must increase strictly".into()));
    }
    Ok(())
}

fn check_events(events: &[MeasurementEvent], frames: &[SensorFrame], n: usize) -> Result<(), ObserverError> {
    let (start, end) = (frames[0].t, frames[frames.len() - 1].t);
    if events.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(ObserverError::InvalidStream("measurement timestamps must increase strictly".into()));
    }
    for e in events {
        if e.t < start - SNAP_TOL || e.t > end + SNAP_TOL {
            return Err(ObserverError::InvalidStream(format!(
                "measurement at t = {} outside the IMU horizon [{start}, {end}]",
                e.t
            )));
        }
        if e.vectors.len() != n {
            return Err(ObserverError::DimensionMismatch { expected: n, got: e.vectors.len() });
        }
    }
    Ok(())
}

/// Runs the hybrid observer: flows between arrivals, one jump per arrival.
///
/// The timer starts at the first arrival time and is reset to the gap until
/// the following arrival; after the last arrival it is reset to `t_max`.
/// Every gap must lie in `[t_min, t_max]` of `schedule`.
pub fn run_hybrid(
    initial: &EstimatorState,
    frames: &[SensorFrame],
    events: &[MeasurementEvent],
    gains: &GainSet,
    consts: &WorldConstants,
    schedule: &SamplingSchedule,
) -> Result<HybridTrace, ObserverError> {
    let n = consts.n_vectors();
    gains.validate(n, true, true)?;
    check_frames(frames)?;
    check_events(events, frames, n)?;
    if initial.vectors.len() != n {
        return Err(ObserverError::DimensionMismatch { expected: n, got: initial.vectors.len() });
    }
    let (t_min, t_max) = (schedule.t_min, schedule.t_max);
    let gap_ok = |gap: f64| gap >= t_min - SNAP_TOL && gap <= t_max + SNAP_TOL;
    let mut prev_t = frames[0].t;
    for e in events {
        let gap = e.t - prev_t;
        if !gap_ok(gap) {
            return Err(ObserverError::GapOutOfBounds { gap, t_min, t_max });
        }
        prev_t = e.t;
    }

    let mut trace = HybridTrace { samples: Vec::with_capacity(frames.len() + 2 * events.len()) };
    let mut state = initial.clone();
    let mut j = 0u64;
    let mut next = 0usize;
    let mut timer = Timer { tau: events.first().map_or(t_max, |e| e.t - frames[0].t) };
    trace.push(frames[0].t, j, TraceKind::Flow, &state, Some(timer.tau));

    for pair in frames.windows(2) {
        let segment = ImuSegment::between(&pair[0], &pair[1]);
        let mut t = segment.t0;
        loop {
            let pending = events.get(next).filter(|e| e.t <= segment.t1 + SNAP_TOL);
            let stop = pending.map_or(segment.t1, |e| e.t.min(segment.t1));
            let stop = if (segment.t1 - stop).abs() <= SNAP_TOL { segment.t1 } else { stop };
            if stop - t > SNAP_TOL {
                (state, timer) = flow_hybrid(&state, timer, &segment.slice(t, stop), gains, consts);
                if let Some(e) = events.get(next) {
                    timer.tau = (e.t - stop).max(0.0);
                }
                t = stop;
                trace.push(t, j, TraceKind::Flow, &state, Some(timer.tau));
            }
            let Some(event) = pending else { break };
            if stop < event.t - SNAP_TOL {
                break;
            }
            timer.tau = 0.0f64.max(timer.tau.min(event.t - t));
            let gap = events.get(next + 1).map_or(t_max, |e| e.t - event.t);
            (state, timer) = jump_hybrid(&state, timer, event, gains, gap)?;
            j += 1;
            next += 1;
            trace.push(t, j, TraceKind::Jump, &state, Some(timer.tau));
            if (segment.t1 - t).abs() <= SNAP_TOL {
                break;
            }
        }
    }
    Ok(trace)
}

/// How the continuous observers receive velocity and vector measurements.
#[derive(Debug, Clone, Copy)]
pub enum MeasurementFeed<'a> {
    /// One measurement per IMU frame, same timestamps, interpolated in between.
    Continuous(&'a [MeasurementEvent]),
    /// Intermittent measurements, each held until the next arrives.
    ZeroOrderHold(&'a [MeasurementEvent]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuousVariant {
    /// `ĝ` is a state.
    Full,
    /// `ĝ = k_v(R̂ v_m − v̂)`.
    Reduced,
}

/// Runs the continuous or reduced observer; the trace has one sample per IMU frame and no jumps.
pub fn run_continuous(
    initial: &EstimatorState,
    frames: &[SensorFrame],
    feed: MeasurementFeed<'_>,
    gains: &GainSet,
    consts: &WorldConstants,
    variant: ContinuousVariant,
) -> Result<HybridTrace, ObserverError> {
    let n = consts.n_vectors();
    gains.validate(n, variant == ContinuousVariant::Full, false)?;
    check_frames(frames)?;
    let flow = match variant {
        ContinuousVariant::Full => flow_continuous,
        ContinuousVariant::Reduced => flow_reduced,
    };
    let mut trace = HybridTrace { samples: Vec::with_capacity(frames.len()) };
    let mut state = initial.clone();

    match feed {
        MeasurementFeed::Continuous(events) => {
            if events.len() != frames.len() {
                return Err(ObserverError::InvalidStream(format!(
                    "continuous feed needs one measurement per IMU frame ({} frames, {} measurements)",
                    frames.len(),
                    events.len()
                )));
            }
            check_events(events, frames, n)?;
            if let Some((f, e)) = frames.iter().zip(events).find(|(f, e)| (f.t - e.t).abs() > SNAP_TOL) {
                return Err(ObserverError::InvalidStream(format!(
                    "measurement at t = {} does not match IMU frame at t = {}",
                    e.t, f.t
                )));
            }
            trace.push(frames[0].t, 0, TraceKind::Flow, &state, None);
            for (pair, ev) in frames.windows(2).zip(events.windows(2)) {
                let segment = ImuSegment::between(&pair[0], &pair[1]);
                let aiding = Aiding::between(&ev[0], &ev[1], &segment);
                state = flow(&state, &segment, &aiding, gains, consts);
                trace.push(segment.t1, 0, TraceKind::Flow, &state, None);
            }
        }
        MeasurementFeed::ZeroOrderHold(events) => {
            check_events(events, frames, n)?;
            let mut next = 0usize;
            let mut aiding = Aiding::Unavailable;
            let absorb = |t: f64, next: &mut usize, aiding: &mut Aiding| {
                while let Some(e) = events.get(*next).filter(|e| e.t <= t + SNAP_TOL) {
                    *aiding = Aiding::held(e);
                    *next += 1;
                }
            };
            absorb(frames[0].t, &mut next, &mut aiding);
            trace.push(frames[0].t, 0, TraceKind::Flow, &state, None);
            for pair in frames.windows(2) {
                let segment = ImuSegment::between(&pair[0], &pair[1]);
                let mut t = segment.t0;
                while let Some(e) = events.get(next).filter(|e| e.t < segment.t1 - SNAP_TOL) {
                    if e.t - t > SNAP_TOL {
                        state = flow(&state, &segment.slice(t, e.t), &aiding, gains, consts);
                        t = e.t;
                    }
                    absorb(t, &mut next, &mut aiding);
                }
                state = flow(&state, &segment.slice(t, segment.t1), &aiding, gains, consts);
                absorb(segment.t1, &mut next, &mut aiding);
                trace.push(segment.t1, 0, TraceKind::Flow, &state, None);
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::error_state;
    use crate::so3::{RotationMatrix, Vec3};
    use crate::world::{emit_events, emit_imu, propagate_truth, FigureEight, NoiseSpec, Trajectory};

    fn hybrid_gains() -> GainSet {
        GainSet { k_o: 15.0, k_v: 0.7, k_g: 4.0, k_r: 0.1, rho: vec![1.85, 0.02] }
    }

    #[test]
    fn open_loop_tracks_truth() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 5.0, 0.0025).unwrap();
        let frames = emit_imu(&truth, &traj, &consts, &NoiseSpec::noise_free()).unwrap();
        let initial = EstimatorState::exact(traj.initial_attitude(), traj.velocity(0.0), &consts);
        let trace =
            run_hybrid(&initial, &frames, &[], &hybrid_gains(), &consts, &SamplingSchedule::jittered(0.09, 0.11, 0))
                .unwrap();
        assert_eq!(trace.jump_count(), 0);
        let last = trace.last().unwrap();
        let s = truth.samples.last().unwrap();
        let e = error_state(&s.attitude, &s.velocity, &last.state, &consts);
        assert!(e.attitude.distance_to_identity() < 1e-6);
        assert!(e.velocity.norm() < 1e-4);
    }

    #[test]
    fn one_jump_per_event_and_continuous_attitude() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 3.0, 0.0025).unwrap();
        let frames = emit_imu(&truth, &traj, &consts, &NoiseSpec::noise_free()).unwrap();
        let schedule = SamplingSchedule::jittered(0.09, 0.11, 4);
        let times = schedule.generate(3.0).unwrap();
        let events = emit_events(&truth, &consts, &times, &NoiseSpec::noise_free()).unwrap();
        let initial = EstimatorState::new(RotationMatrix::identity(), 1);
        let trace = run_hybrid(&initial, &frames, &events, &hybrid_gains(), &consts, &schedule).unwrap();
        assert_eq!(trace.jump_count() as usize, events.len());
        for ((pre, post), e) in trace.jumps().zip(&events) {
            assert_eq!(pre.state.attitude, post.state.attitude);
            assert!((pre.time.t - e.t).abs() < 1e-12);
            assert_eq!(pre.tau, Some(0.0));
        }
        assert!(trace.samples.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn out_of_bounds_gap_is_rejected() {
        let consts = WorldConstants::default();
        let frames: Vec<SensorFrame> =
            (0..100).map(|k| SensorFrame { t: k as f64 * 0.01, omega: Vec3::zeros(), accel: Vec3::zeros() }).collect();
        let event = |t| MeasurementEvent { t, velocity: Vec3::zeros(), vectors: vec![Vec3::x()] };
        let events = vec![event(0.1), event(0.5)];
        let initial = EstimatorState::new(RotationMatrix::identity(), 1);
        let err = run_hybrid(
            &initial,
            &frames,
            &events,
            &hybrid_gains(),
            &consts,
            &SamplingSchedule::jittered(0.09, 0.11, 0),
        );
        assert!(matches!(err, Err(ObserverError::GapOutOfBounds { .. })));
    }

    #[test]
    fn zoh_holds_last_measurement() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 1.0, 0.0025).unwrap();
        let frames = emit_imu(&truth, &traj, &consts, &NoiseSpec::noise_free()).unwrap();
        let times = SamplingSchedule::periodic(0.1).generate(1.0).unwrap();
        let events = emit_events(&truth, &consts, &times, &NoiseSpec::noise_free()).unwrap();
        let gains = GainSet { k_v: 2.5, k_g: 8.0, ..hybrid_gains() };
        let initial = EstimatorState::new(RotationMatrix::identity(), 1);
        let trace = run_continuous(
            &initial,
            &frames,
            MeasurementFeed::ZeroOrderHold(&events),
            &gains,
            &consts,
            ContinuousVariant::Full,
        )
        .unwrap();
        assert_eq!(trace.len(), frames.len());
        assert_eq!(trace.jump_count(), 0);
        // Before the first arrival the observer only integrates the IMU.
        let early = &trace.samples[10].state;
        assert_eq!(early.gravity, Vec3::zeros());
    }
}
