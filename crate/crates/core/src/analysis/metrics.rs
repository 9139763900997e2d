use nalgebra::Matrix6;
use serde::Serialize;

use super::{lyapunov_vr, lyapunov_vzeta, lyapunov_vzeta_prime, AnalysisError};
use crate::gains::{LinearBlocks, LyapunovCertificate, QMatrices};
use crate::observer::{error_state, HybridTrace, TraceKind};
use crate::world::{TruthTrack, WorldConstants};

/// Error metrics for one trace sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub t: f64,
    pub j: u64,
    pub jump: bool,
    /// `|R̃|_I`.
    pub attitude_error: f64,
    pub velocity_error: f64,
    pub gravity_error: f64,
    pub vector_errors: Vec<f64>,
    /// `‖ζ‖`.
    pub zeta_norm: f64,
    /// `‖ζ̄‖`.
    pub zeta_bar_norm: f64,
    pub v_r: f64,
    pub v_zeta: Option<f64>,
    pub v_zeta_prime: Option<f64>,
    pub tau: Option<f64>,
}

/// Metric rows in trace order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricSeries {
    pub rows: Vec<MetricRow>,
}

impl MetricSeries {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn attitude_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.attitude_error).collect()
    }
}

/// Evaluates the metrics of `trace` against `truth`.
///
/// `p_zeta` enables `V(ζ)`; a certificate with its blocks enables `V(ζ′)` on
/// samples that carry a timer value.
pub fn metric_series(
    trace: &HybridTrace,
    truth: &TruthTrack,
    consts: &WorldConstants,
    q: &QMatrices,
    p_zeta: Option<&Matrix6<f64>>,
    certificate: Option<(&LyapunovCertificate, &LinearBlocks)>,
) -> Result<MetricSeries, AnalysisError> {
    let mut rows = Vec::with_capacity(trace.len());
    for s in &trace.samples {
        let (r, v) = truth.at(s.time.t)?;
        let e = error_state(&r, &v, &s.state, consts);
        let zeta = e.zeta();
        let zeta_bar = e.zeta_bar();
        let v_zeta_prime = match (certificate, s.tau) {
            (Some((cert, blocks)), Some(tau)) => Some(lyapunov_vzeta_prime(&zeta_bar, tau, cert, blocks)?),
            _ => None,
        };
        rows.push(MetricRow {
            t: s.time.t,
            j: s.time.j,
            jump: s.kind == TraceKind::Jump,
            attitude_error: e.attitude.distance_to_identity(),
            velocity_error: e.velocity.norm(),
            gravity_error: e.gravity.norm(),
            vector_errors: e.vectors.iter().map(|x| x.norm()).collect(),
            zeta_norm: zeta.norm(),
            zeta_bar_norm: zeta_bar.norm(),
            v_r: lyapunov_vr(&e.attitude, q),
            v_zeta: p_zeta.map(|p| lyapunov_vzeta(&zeta, p)),
            v_zeta_prime,
            tau: s.tau,
        });
    }
    Ok(MetricSeries { rows })
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln y = intercept + slope·x` over the points with `y > 0`.
pub fn log_linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(_, y)| **y > 0.0 && y.is_finite()).map(|(x, y)| (*x, y.ln())).collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared, points: n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Mean `|R̃|_I` over the final window.
    pub steady_state_error: f64,
    /// Largest `|R̃|_I` over the final window.
    pub steady_state_max: f64,
    pub tail_fraction: f64,
    pub threshold: f64,
    /// Time after which `|R̃|_I` stays below the threshold.
    pub time_to_threshold: Option<f64>,
    /// Exponential rate fitted to the transient; `None` when there is nothing to fit.
    pub fitted_decay_rate: Option<f64>,
    pub fit_r_squared: Option<f64>,
    pub monotonicity_violations: usize,
    pub max_violation: f64,
}

/// Steady-state level, settling time, decay rate and monotonicity of `|R̃|_I`.
///
/// The decay rate is fitted to the samples before the error first drops below
/// `threshold` (or before the final window if it never does).
pub fn convergence_report(
    series: &MetricSeries,
    threshold: f64,
    tail_fraction: f64,
) -> Result<ConvergenceReport, AnalysisError> {
    if series.rows.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(AnalysisError::InvalidTail(tail_fraction));
    }
    let ts = series.times();
    let es = series.attitude_errors();
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    let cut = t1 - tail_fraction * (t1 - t0);
    let tail: Vec<f64> = ts.iter().zip(&es).filter(|(t, _)| **t >= cut).map(|(_, e)| *e).collect();
    let steady_state_error = tail.iter().sum::<f64>() / tail.len() as f64;
    let steady_state_max = tail.iter().copied().fold(0.0, f64::max);

    let last_above = es.iter().rposition(|e| *e >= threshold);
    let time_to_threshold = match last_above {
        None => Some(t0),
        Some(i) if i + 1 < es.len() => Some(ts[i + 1]),
        Some(_) => None,
    };
    let first_below = es.iter().position(|e| *e < threshold);
    let end = first_below.unwrap_or_else(|| ts.iter().position(|t| *t >= cut).unwrap_or(ts.len()));
    let fit = log_linear_fit(&ts[..end], &es[..end]).filter(|f| f.slope.is_finite());

    let mut monotonicity_violations = 0;
    let mut max_violation: f64 = 0.0;
    for w in es.windows(2) {
        let rise = w[1] - w[0];
        if rise > 1e-12 * w[0].max(1e-300) {
            monotonicity_violations += 1;
            max_violation = max_violation.max(rise);
        }
    }
    Ok(ConvergenceReport {
        steady_state_error,
        steady_state_max,
        tail_fraction,
        threshold,
        time_to_threshold,
        fitted_decay_rate: fit.map(|f| -f.slope),
        fit_r_squared: fit.map(|f| f.r_squared),
        monotonicity_violations,
        max_violation,
    })
}
