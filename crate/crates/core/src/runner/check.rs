use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix2;
use serde::Serialize;

use super::config::{ObserverKind, ScenarioConfig};
use super::{output, RunManifest, RunnerError};
use crate::gains::{
    certify_lmi, check_lemma3, continuous_lyapunov_2, discriminant, prop3_bound, prop3_check, spectral_radius,
    Lemma3Report, Lemma3Status, QMatrices, VERIFY_GRID,
};
use crate::observer::GainSet;

/// Relative tolerance for the `Q̄` eigenvalue tests.
const LEMMA3_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmiSummary {
    pub margin: f64,
    pub grid_max_eigenvalue: f64,
    /// Per-axis `ζ` block of `P`.
    pub p_zeta: [[f64; 2]; 2],
    pub p_vectors: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridChecks {
    pub spectral_radius_t_min: f64,
    pub spectral_radius_t_max: f64,
    /// Largest modulus over the verification grid.
    pub spectral_radius: f64,
    pub spectral_radius_ok: bool,
    /// Largest `k_g` admitted by the closed-form condition, when `k_v ∈ (0, 1)`.
    pub prop3_k_g_bound: Option<f64>,
    /// Reported only; not part of the verdict.
    pub prop3_satisfied: bool,
    pub discriminant_t_min: f64,
    pub discriminant_t_max: f64,
    pub lmi: Option<LmiSummary>,
    pub lmi_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousChecks {
    /// `A − KC` is Hurwitz exactly when the gains it uses are positive.
    pub hurwitz: bool,
    /// Per-axis solution of the continuous Lyapunov equation, when it applies.
    pub lyapunov_p_zeta: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainsCheckEntry {
    pub observer: String,
    pub gains: GainSet,
    pub q_bar_eigenvalues: [f64; 3],
    pub lemma3: Lemma3Report,
    pub hybrid: Option<HybridChecks>,
    pub continuous: Option<ContinuousChecks>,
    pub passed: bool,
}

/// Feasibility report for every selected observer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainsCheckReport {
    pub t_min: f64,
    pub t_max: f64,
    pub entries: Vec<GainsCheckEntry>,
    pub passed: bool,
}

fn rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn hybrid_checks(gains: &GainSet, n: usize, t_min: f64, t_max: f64) -> Result<HybridChecks, RunnerError> {
    let radius = spectral_radius(gains, t_min, t_max, VERIFY_GRID)?;
    let (lmi, lmi_error) = match certify_lmi(gains, n, t_min, t_max) {
        Ok(c) => (
            Some(LmiSummary {
                margin: c.margin,
                grid_max_eigenvalue: c.grid_max_eigenvalue,
                p_zeta: rows(&c.p_zeta),
                p_vectors: c.p_vectors,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(HybridChecks {
        spectral_radius_t_min: spectral_radius(gains, t_min, t_min, 1)?,
        spectral_radius_t_max: spectral_radius(gains, t_max, t_max, 1)?,
        spectral_radius: radius,
        spectral_radius_ok: radius < 1.0,
        prop3_k_g_bound: prop3_bound(gains.k_v, t_max).ok(),
        prop3_satisfied: prop3_check(gains, t_max),
        discriminant_t_min: discriminant(gains.k_v, gains.k_g, t_min),
        discriminant_t_max: discriminant(gains.k_v, gains.k_g, t_max),
        lmi,
        lmi_error,
    })
}

/// Evaluates the gains of every observer listed in `config.observers`.
///
/// An entry passes when `Q̄ ≻ 0` and, for the hybrid observer, the jump-to-jump
/// spectral radius stays below one and an interval Lyapunov certificate exists.
pub fn gains_check(config: &ScenarioConfig) -> Result<GainsCheckReport, RunnerError> {
    config.validate_common()?;
    let consts = config.world.constants();
    let n = consts.n_vectors();
    let (t_min, t_max) = (config.schedule.t_min, config.schedule.t_max);
    let mut entries = Vec::new();
    for kind in &config.observers {
        let gains = config
            .gains
            .get(kind)
            .ok_or_else(|| RunnerError::Config(format!("observers: gains.{} is missing", kind.name())))?;
        let q = QMatrices::from_gains(gains, &consts)?;
        let lemma3 = check_lemma3(&q, LEMMA3_TOL);
        let (hybrid, continuous) = match kind {
            ObserverKind::Hybrid => (Some(hybrid_checks(gains, n, t_min, t_max)?), None),
            ObserverKind::Reduced => (None, Some(ContinuousChecks { hurwitz: gains.k_v > 0.0, lyapunov_p_zeta: None })),
            _ => {
                let hurwitz = gains.k_v > 0.0 && gains.k_g > 0.0;
                let p = hurwitz.then(|| rows(&continuous_lyapunov_2(gains.k_v, gains.k_g)));
                (None, Some(ContinuousChecks { hurwitz, lyapunov_p_zeta: p }))
            }
        };
        let passed = lemma3.status != Lemma3Status::NotSatisfied
            && hybrid.as_ref().is_none_or(|h| h.spectral_radius_ok && h.lmi.is_some())
            && continuous.as_ref().is_none_or(|c| c.hurwitz);
        entries.push(GainsCheckEntry {
            observer: kind.name().into(),
            gains: gains.clone(),
            q_bar_eigenvalues: q.eigenvalues,
            lemma3,
            hybrid,
            continuous,
            passed,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(GainsCheckReport { t_min, t_max, entries, passed })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl GainsCheckReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sampling interval [{}, {}] s", self.t_min, self.t_max);
        for e in &self.entries {
            let g = &e.gains;
            let _ = writeln!(
                s,
                "\n[{}] k_o = {}, k_v = {}, k_g = {}, k_r = {}: {}",
                e.observer,
                g.k_o,
                g.k_v,
                g.k_g,
                g.k_r,
                verdict(e.passed)
            );
            let ev = e.q_bar_eigenvalues;
            let _ = writeln!(
                s,
                "  Q̄ eigenvalues {:.6} {:.6} {:.6}; observability condition {:?}, distinct: {}",
                ev[0], ev[1], ev[2], e.lemma3.status, e.lemma3.distinct_eigenvalues
            );
            if let Some(c) = &e.continuous {
                let _ = writeln!(s, "  A − KC Hurwitz: {}", c.hurwitz);
            }
            if let Some(h) = &e.hybrid {
                let _ = writeln!(
                    s,
                    "  spectral radius: {:.6} at T_m, {:.6} at T_M, {:.6} over the interval ({})",
                    h.spectral_radius_t_min,
                    h.spectral_radius_t_max,
                    h.spectral_radius,
                    verdict(h.spectral_radius_ok)
                );
                let bound = h.prop3_k_g_bound.map_or_else(|| "undefined".to_string(), |b| format!("{b:.6}"));
                let _ = writeln!(
                    s,
                    "  closed-form sufficient condition: k_g bound {bound}, satisfied: {}",
                    h.prop3_satisfied
                );
                let _ = writeln!(
                    s,
                    "  discriminant: {:.6} at T_m, {:.6} at T_M",
                    h.discriminant_t_min, h.discriminant_t_max
                );
                match (&h.lmi, &h.lmi_error) {
                    (Some(l), _) => {
                        let _ = writeln!(
                            s,
                            "  Lyapunov certificate: margin {:.3e}, grid max eigenvalue {:.3e}",
                            l.margin, l.grid_max_eigenvalue
                        );
                    }
                    (None, Some(err)) => {
                        let _ = writeln!(s, "  Lyapunov certificate: none ({err})");
                    }
                    (None, None) => {}
                }
            }
        }
        let _ = writeln!(s, "\noverall: {}", verdict(self.passed));
        s
    }
}

/// Runs [`gains_check`] and writes `gains_report.json` and `gains_report.txt`.
/// A failed entry is reported through [`GainsCheckReport::passed`], not as an error.
pub fn cmd_gains_check(config: &ScenarioConfig, out: &Path) -> Result<(RunManifest, GainsCheckReport), RunnerError> {
    config.validate_common()?;
    let (mut manifest, started) = RunManifest::start("gains-check", config, out)?;
    let report = gains_check(config)?;
    output::write_json(&out.join("gains_report.json"), &report)?;
    let txt = out.join("gains_report.txt");
    std::fs::write(&txt, report.to_text()).map_err(|e| RunnerError::io(&txt, e))?;
    manifest.files.extend(["gains_report.json", "gains_report.txt"].map(String::from));
    let manifest = manifest.finish(started, out)?;
    Ok((manifest, report))
}
