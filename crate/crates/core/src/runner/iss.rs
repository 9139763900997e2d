use std::path::Path;

use super::config::ScenarioConfig;
use super::{output, RunManifest, RunnerError};
use crate::analysis::{iss_study, IssStudyResult};
use crate::gains::build_q;
use crate::so3::Vec3;

/// Bound required at zero input amplitude.
const ZERO_INPUT_BOUND: f64 = 1e-6;

/// Problems with a study result: non-monotone bounds, inequality violations,
/// or a zero-amplitude bound that did not vanish.
pub fn iss_verdict(result: &IssStudyResult) -> Vec<String> {
    let mut problems = Vec::new();
    if !result.monotone() {
        problems.push(format!("ultimate bounds not monotone in amplitude: {:?}", result.ultimate_bounds));
    }
    if result.violations > 0 {
        problems.push(format!("derivative bound exceeded at {} of {} points", result.violations, result.checks));
    }
    for (a, b) in result.amplitudes.iter().zip(&result.ultimate_bounds) {
        if *a == 0.0 && *b >= ZERO_INPUT_BOUND {
            problems.push(format!("zero-input ultimate bound {b:e} not below {ZERO_INPUT_BOUND:e}"));
        }
    }
    problems
}

/// Runs the ultimate-bound study and writes `iss_study.json`, `iss_bounds.csv`
/// (`amplitude, ultimate_bound`) and `iss_runs.csv` (one row per simulated run).
/// Judge the result with [`iss_verdict`].
pub fn cmd_iss_study(config: &ScenarioConfig, out: &Path) -> Result<(RunManifest, IssStudyResult), RunnerError> {
    config.validate_iss()?;
    let (mut manifest, started) = RunManifest::start("iss-study", config, out)?;
    let consts = config.world.constants();
    let q = build_q(&config.iss.rho, &consts.inertial_vectors, &Vec3::from(config.world.gravity))?;
    let result = iss_study(&config.iss_config(), &q)?;

    output::write_json(&out.join("iss_study.json"), &result)?;
    let bounds = out.join("iss_bounds.csv");
    let mut w = csv::Writer::from_path(&bounds).map_err(|e| RunnerError::io(&bounds, e))?;
    let mut rows = vec![vec!["amplitude".to_string(), "ultimate_bound".to_string()]];
    rows.extend(result.amplitudes.iter().zip(&result.ultimate_bounds).map(|(a, b)| vec![a.to_string(), b.to_string()]));
    for row in rows {
        w.write_record(&row).map_err(|e| RunnerError::io(&bounds, e))?;
    }
    w.flush().map_err(|e| RunnerError::io(&bounds, e))?;

    let runs = out.join("iss_runs.csv");
    let mut w = csv::Writer::from_path(&runs).map_err(|e| RunnerError::io(&runs, e))?;
    for r in &result.runs {
        w.serialize(r).map_err(|e| RunnerError::io(&runs, e))?;
    }
    w.flush().map_err(|e| RunnerError::io(&runs, e))?;
    manifest.files.extend(["iss_study.json", "iss_bounds.csv", "iss_runs.csv"].map(String::from));
    let manifest = manifest.finish(started, out)?;
    Ok((manifest, result))
}
