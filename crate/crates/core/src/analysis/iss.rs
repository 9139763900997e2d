//! Ultimate-bound study of the attitude error system driven by bounded inputs:
//! `R̃̇ = R̃(−k_o ψ(QR̃) + Γ(R̃)u)^×`.

use nalgebra::Vector6;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{random_rotation_away_from, AnalysisError};
use crate::gains::{enumerate_equilibria, QMatrices};
use crate::so3::{exp, psi, RotationMatrix, Vec3};
use crate::world::stream_rng;

/// Inputs are held constant over intervals of this length (s).
pub const INPUT_INTERVAL: f64 = 0.5;

const PATTERN_STREAM: u64 = 1000;

fn default_dt() -> f64 {
    1e-3
}

fn default_tail() -> f64 {
    0.25
}

fn default_exclusion() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssConfig {
    /// Input amplitudes; every input component is uniform in `[−a, a]`.
    pub amplitudes: Vec<f64>,
    pub k_o: f64,
    /// Simulated time per run (s).
    pub horizon: f64,
    /// Independent initial attitudes and input patterns per amplitude.
    pub seeds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Initial attitudes closer than this to an undesired equilibrium are redrawn.
    #[serde(default = "default_exclusion")]
    pub exclusion: f64,
}

impl IssConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let ok = !self.amplitudes.is_empty()
            && self.amplitudes.iter().all(|a| a.is_finite() && *a >= 0.0)
            && self.amplitudes.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(AnalysisError::InvalidAmplitudes);
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(AnalysisError::InvalidTail(self.tail_fraction));
        }
        Ok(())
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IssRun {
    pub amplitude: f64,
    pub seed_index: usize,
    pub initial_error: f64,
    /// Largest `|R̃|_I` over the final window.
    pub tail_sup: f64,
    /// Interior points where the derivative bound was checked.
    pub checks: usize,
    /// Points where the finite-difference derivative of `|R̃|_I²` exceeded the bound by more than 2 %.
    pub violations: usize,
    /// Largest `(d|R̃|²/dt − bound) / |bound|` seen.
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IssStudyResult {
    pub amplitudes: Vec<f64>,
    /// Largest tail sup over seeds, per amplitude.
    pub ultimate_bounds: Vec<f64>,
    /// `c_Γ = ρ_{N+1}‖g‖`.
    pub c_gamma: f64,
    pub lambda_min: f64,
    pub checks: usize,
    pub violations: usize,
    pub runs: Vec<IssRun>,
}

impl IssStudyResult {
    pub fn monotone(&self) -> bool {
        self.ultimate_bounds.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Angular velocity of the error system, `−k_o ψ(QR̃) + ρ_{N+1} g^× R̃ᵀ u_g`.
fn error_rate(r: &RotationMatrix, q: &QMatrices, k_o: f64, u: &Vector6<f64>) -> Vec3 {
    let rho_g = q.rhos.last().copied().unwrap_or(0.0);
    let u_g = Vec3::new(u[3], u[4], u[5]);
    -psi(&(q.q * r.matrix())) * k_o + q.gravity.cross(&(r.matrix().transpose() * u_g)) * rho_g
}

/// Integrates the error system with a fourth-order Runge–Kutta scheme on the
/// group (stages composed through `exp`). Returns `R̃` at `0, dt, …, horizon`.
pub fn simulate_attitude_error(
    r0: &RotationMatrix,
    q: &QMatrices,
    k_o: f64,
    input: impl Fn(f64) -> Vector6<f64>,
    dt: f64,
    horizon: f64,
) -> Vec<RotationMatrix> {
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut r = *r0;
    out.push(r);
    for k in 0..steps {
        let t = k as f64 * dt;
        // Inputs are sampled inside the step so interval boundaries never split a stage.
        let u = input(t + 0.5 * dt);
        let k1 = error_rate(&r, q, k_o, &u);
        let k2 = error_rate(&(r * exp(&(k1 * (0.5 * dt)))), q, k_o, &u);
        let k3 = error_rate(&(r * exp(&(k2 * (0.5 * dt)))), q, k_o, &u);
        let k4 = error_rate(&(r * exp(&(k3 * dt))), q, k_o, &u);
        r = r * exp(&((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)));
        out.push(r);
    }
    out
}

fn input_pattern(seed: u64, index: usize, intervals: usize) -> Vec<Vector6<f64>> {
    let mut rng = stream_rng(seed, PATTERN_STREAM + index as u64);
    (0..intervals).map(|_| Vector6::from_fn(|_, _| rng.random_range(-1.0..=1.0))).collect()
}

/// Runs every amplitude against the same initial attitudes and input patterns.
pub fn iss_study(config: &IssConfig, q: &QMatrices) -> Result<IssStudyResult, AnalysisError> {
    config.validate()?;
    let equilibria = enumerate_equilibria(q);
    let intervals = (config.horizon / INPUT_INTERVAL).ceil() as usize + 1;
    let seeds: Vec<(RotationMatrix, Vec<Vector6<f64>>)> = (0..config.seeds)
        .map(|i| {
            let mut rng = stream_rng(config.seed, i as u64);
            let r0 = random_rotation_away_from(&mut rng, &equilibria, config.exclusion);
            (r0, input_pattern(config.seed, i, intervals))
        })
        .collect();

    let c_gamma = q.rhos.last().copied().unwrap_or(0.0) * q.gravity.norm();
    let lambda_min = q.lambda_min();
    let dt = config.dt;
    let jobs: Vec<(f64, usize)> =
        config.amplitudes.iter().flat_map(|a| (0..config.seeds).map(move |i| (*a, i))).collect();

    let runs: Vec<IssRun> = jobs
        .par_iter()
        .map(|&(amplitude, i)| {
            let (r0, pattern) = &seeds[i];
            let at = |t: f64| pattern[((t / INPUT_INTERVAL).floor() as usize).min(pattern.len() - 1)] * amplitude;
            let path = simulate_attitude_error(r0, q, config.k_o, at, dt, config.horizon);
            let x: Vec<f64> = path.iter().map(|r| r.distance_to_identity().powi(2)).collect();
            let c_u = amplitude * 6f64.sqrt();
            let slack = 3f64.sqrt() * c_gamma * c_u / 4.0;
            let kl = 2.0 * config.k_o * lambda_min;
            let (mut checks, mut violations, mut worst_excess) = (0, 0, f64::NEG_INFINITY);
            for k in 1..x.len() - 1 {
                let (ta, tb) = ((k - 1) as f64 * dt, (k + 1) as f64 * dt);
                let same_input =
                    ((ta + 0.5 * dt) / INPUT_INTERVAL).floor() == ((tb - 0.5 * dt) / INPUT_INTERVAL).floor();
                if !same_input {
                    continue;
                }
                let fd = (x[k + 1] - x[k - 1]) / (2.0 * dt);
                let bound = -kl * x[k] + kl + slack;
                let excess = (fd - bound) / bound.abs().max(1e-300);
                checks += 1;
                worst_excess = worst_excess.max(excess);
                if fd > bound + 0.02 * bound.abs() {
                    violations += 1;
                }
            }
            let cut = ((1.0 - config.tail_fraction) * (path.len() - 1) as f64).floor() as usize;
            let tail_sup = path[cut..].iter().map(|r| r.distance_to_identity()).fold(0.0, f64::max);
            IssRun {
                amplitude,
                seed_index: i,
                initial_error: r0.distance_to_identity(),
                tail_sup,
                checks,
                violations,
                worst_excess,
            }
        })
        .collect();

    let ultimate_bounds = config
        .amplitudes
        .iter()
        .map(|a| runs.iter().filter(|r| r.amplitude == *a).map(|r| r.tail_sup).fold(0.0, f64::max))
        .collect();
    Ok(IssStudyResult {
        amplitudes: config.amplitudes.clone(),
        ultimate_bounds,
        c_gamma,
        lambda_min,
        checks: runs.iter().map(|r| r.checks).sum(),
        violations: runs.iter().map(|r| r.violations).sum(),
        runs,
    })
}
