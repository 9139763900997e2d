use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::RunnerError;
use crate::analysis::MetricSeries;
use crate::world::{MeasurementEvent, SensorFrame, TruthTrack};

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunnerError::io(path, e))?;
    w.write_record(&header).map_err(|e| RunnerError::io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| RunnerError::io(path, e))?;
    }
    w.flush().map_err(|e| RunnerError::io(path, e))
}

fn xyz(prefix: &str) -> [String; 3] {
    ["x", "y", "z"].map(|a| format!("{prefix}_{a}"))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunnerError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RunnerError::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| RunnerError::io(path, e))
}

/// `t, r11..r33, v_x, v_y, v_z`; attitude row-major.
pub(crate) fn write_truth(path: &Path, truth: &TruthTrack) -> Result<(), RunnerError> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=3).flat_map(|i| (1..=3).map(move |j| format!("r{i}{j}"))));
    header.extend(xyz("v"));
    let rows = truth.samples.iter().map(|s| {
        let m = s.attitude.matrix();
        let mut row = vec![s.t.to_string()];
        row.extend((0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)].to_string())));
        row.extend(s.velocity.iter().map(f64::to_string));
        row
    });
    write_rows(path, header, rows)
}

/// `t, omega_x..z, accel_x..z`.
pub(crate) fn write_imu(path: &Path, frames: &[SensorFrame]) -> Result<(), RunnerError> {
    let mut header = vec!["t".to_string()];
    header.extend(xyz("omega"));
    header.extend(xyz("accel"));
    let rows = frames.iter().map(|f| {
        let mut row = vec![f.t.to_string()];
        row.extend(f.omega.iter().chain(f.accel.iter()).map(f64::to_string));
        row
    });
    write_rows(path, header, rows)
}

/// `t, vm_x..z, b1_x..z, …`.
pub(crate) fn write_events(path: &Path, events: &[MeasurementEvent], n_vectors: usize) -> Result<(), RunnerError> {
    let mut header = vec!["t".to_string()];
    header.extend(xyz("vm"));
    for i in 1..=n_vectors {
        header.extend(xyz(&format!("b{i}")));
    }
    let rows = events.iter().map(|e| {
        let mut row = vec![e.t.to_string()];
        row.extend(e.velocity.iter().map(f64::to_string));
        row.extend(e.vectors.iter().flat_map(|b| b.iter().map(f64::to_string)));
        row
    });
    write_rows(path, header, rows)
}

/// One row per trace sample; Lyapunov columns are empty when not defined.
pub(crate) fn write_trace(path: &Path, series: &MetricSeries, n_vectors: usize) -> Result<(), RunnerError> {
    let mut header: Vec<String> =
        ["t", "j", "kind", "attitude_error", "velocity_error", "gravity_error"].map(String::from).to_vec();
    header.extend((1..=n_vectors).map(|i| format!("vector_error_{i}")));
    header.extend(["zeta_norm", "zeta_bar_norm", "tau", "v_r", "v_zeta", "v_zeta_prime"].map(String::from));
    let rows = series.rows.iter().map(|r| {
        let mut row = vec![
            r.t.to_string(),
            r.j.to_string(),
            if r.jump { "jump" } else { "flow" }.to_string(),
            r.attitude_error.to_string(),
            r.velocity_error.to_string(),
            r.gravity_error.to_string(),
        ];
        row.extend(r.vector_errors.iter().map(f64::to_string));
        row.extend([
            r.zeta_norm.to_string(),
            r.zeta_bar_norm.to_string(),
            opt(r.tau),
            r.v_r.to_string(),
            opt(r.v_zeta),
            opt(r.v_zeta_prime),
        ]);
        row
    });
    write_rows(path, header, rows)
}

/// One curve of the comparison plot.
pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub times: Vec<f64>,
    pub attitude: Vec<f64>,
    pub state: Vec<f64>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const WIDTH: f64 = 900.0;
const PANEL: f64 = 300.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const GAP: f64 = 60.0;
const MAX_POINTS: usize = 2000;
const FLOOR: f64 = 1e-12;

struct Axis {
    t0: f64,
    t1: f64,
    lo: f64,
    hi: f64,
    y0: f64,
}

impl Axis {
    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.t0) / (self.t1 - self.t0).max(f64::MIN_POSITIVE) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let l = v.max(FLOOR).log10();
        self.y0 + PANEL - (l - self.lo) / (self.hi - self.lo) * PANEL
    }
}

fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        let l = v.max(FLOOR).log10();
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if !lo.is_finite() {
        return (-1.0, 0.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn panel(svg: &mut String, axis: &Axis, title: &str, curves: &[(usize, &[f64], &[f64])]) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{}" width="{}" height="{PANEL}" fill="none" stroke="black"/>"#,
        axis.y0,
        x1 - x0
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}" font-size="14">{title}</text>"#, axis.y0 - 8.0);
    let mut d = axis.lo;
    while d <= axis.hi + 0.5 {
        let y = axis.y(10f64.powf(d));
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">1e{}</text>"#,
            x0 - 5.0,
            y + 4.0,
            d as i64
        );
        d += 1.0;
    }
    let ticks = 6;
    for k in 0..=ticks {
        let t = axis.t0 + (axis.t1 - axis.t0) * k as f64 / ticks as f64;
        let x = axis.x(t);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            axis.y0 + PANEL + 15.0,
            (t * 100.0).round() / 100.0
        );
    }
    for (color, ts, vs) in curves {
        let stride = ts.len().div_ceil(MAX_POINTS).max(1);
        let mut path = String::new();
        for (k, (t, v)) in ts.iter().zip(vs.iter()).enumerate().step_by(stride) {
            let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, axis.x(*t), axis.y(*v));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            path.trim_end(),
            COLORS[*color % COLORS.len()]
        );
    }
}

/// Two stacked log-scale panels: attitude error and linear-state error norm against time.
pub fn comparison_svg(series: &[PlotSeries<'_>]) -> String {
    let height = TOP + 2.0 * PANEL + GAP + 40.0 + 20.0 * series.len() as f64;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif">"#
    );
    svg.push('\n');
    let t0 = series.iter().filter_map(|s| s.times.first()).copied().fold(f64::INFINITY, f64::min);
    let t1 = series.iter().filter_map(|s| s.times.last()).copied().fold(f64::NEG_INFINITY, f64::max);
    let (t0, t1) = if t0.is_finite() && t1 > t0 { (t0, t1) } else { (0.0, 1.0) };

    let (lo, hi) = decade_range(series.iter().flat_map(|s| s.attitude.iter().copied()));
    let top = Axis { t0, t1, lo, hi, y0: TOP };
    let curves: Vec<_> = series.iter().enumerate().map(|(i, s)| (i, &s.times[..], &s.attitude[..])).collect();
    panel(&mut svg, &top, "attitude error |R̃|_I", &curves);

    let (lo, hi) = decade_range(series.iter().flat_map(|s| s.state.iter().copied()));
    let bottom = Axis { t0, t1, lo, hi, y0: TOP + PANEL + GAP };
    let curves: Vec<_> = series.iter().enumerate().map(|(i, s)| (i, &s.times[..], &s.state[..])).collect();
    panel(&mut svg, &bottom, "linear error ‖ζ̄‖ (hybrid), ‖ζ‖ (continuous)", &curves);

    let legend_y = bottom.y0 + PANEL + 40.0;
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">t (s)</text>"#,
        WIDTH / 2.0,
        legend_y - 5.0
    );
    for (i, s) in series.iter().enumerate() {
        let y = legend_y + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
            LEFT + 30.0,
            COLORS[i % COLORS.len()]
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, LEFT + 40.0, y + 4.0, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}
