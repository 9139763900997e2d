//! Interval Lyapunov certificate for the jump-to-jump map.
//!
//! `M(τ) = A_gᵀ e^{Āᵀτ} P e^{Āτ} A_g − P` is a quadratic matrix polynomial in
//! `τ` whose leading coefficient `A_gᵀ Āᵀ P Ā A_g` is positive semidefinite,
//! so `xᵀM(τ)x` is convex in `τ` for every `x`. Negativity at both interval
//! endpoints therefore covers the whole interval.
//!
//! Every matrix involved is a Kronecker product with `I₃` on the `ζ` block and
//! a multiple of the identity on the vector block, so `P` is searched as
//! `diag(P₂ ⊗ I₃, p_r I)`: a 2×2 problem over `P₂` plus a scalar condition
//! `(1 − k_r)² < 1` on the vector block.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use serde::Serialize;

use super::{build_blocks, check_interval, expm_abar, kron_i3, GainsError, LinearBlocks};
use crate::observer::GainSet;

/// Required strictness `ε`, relative to the spectral norm of `P`.
pub const DEFAULT_MARGIN: f64 = 1e-8;
/// Points used to verify a certificate over the interval.
pub const VERIFY_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovCertificate {
    /// Full `(3N + 6)`-square matrix.
    pub p: DMatrix<f64>,
    /// Per-axis `ζ` block; `P = diag(P₂ ⊗ I₃, p_r I)`.
    pub p_zeta: Matrix2<f64>,
    pub p_vectors: f64,
    /// `ε` with `M(τ) ⪯ −εI` at both endpoints.
    pub margin: f64,
    pub tau_range: (f64, f64),
    /// Largest eigenvalue of `M(τ)` over the verification grid.
    pub grid_max_eigenvalue: f64,
    pub k_v: f64,
    pub k_g: f64,
    pub k_r: f64,
    pub n_vectors: usize,
}

impl LyapunovCertificate {
    /// Whether the certificate was issued for these gains and dimension.
    pub fn matches(&self, gains: &GainSet, n_vectors: usize) -> bool {
        self.k_v == gains.k_v && self.k_g == gains.k_g && self.k_r == gains.k_r && self.n_vectors == n_vectors
    }
}

fn per_axis(k_v: f64, k_g: f64, tau: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, tau, 0.0, 1.0) * Matrix2::new(1.0 - k_v, 0.0, -k_g, 1.0)
}

fn m2(f: &Matrix2<f64>, p: &Matrix2<f64>) -> Matrix2<f64> {
    f.transpose() * p * f - p
}

fn max_eig2(m: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_gap = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    mean + half_gap.hypot(off)
}

/// Solves `FᵀPF − P = −I` for a 2×2 `F` with spectral radius below one.
fn discrete_lyapunov2(f: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let ft = f.transpose();
    // vec(FᵀPF) = (Fᵀ ⊗ Fᵀ) vec(P), column-major.
    let mut kron = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            kron.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(&(ft * ft[(i, j)]));
        }
    }
    let lhs = kron - Matrix4::identity();
    let rhs = -Vector4::new(1.0, 0.0, 0.0, 1.0);
    let x = lhs.lu().solve(&rhs)?;
    let p = Matrix2::new(x[0], x[2], x[1], x[3]);
    Some((p + p.transpose()) * 0.5)
}

/// `P₂ = L Lᵀ / tr(L Lᵀ)` with `L = [[1, 0], [x₀, e^{x₁}]]`: every trace-one SPD matrix.
fn unpack(x: &[f64]) -> Matrix2<f64> {
    let l = Matrix2::new(1.0, 0.0, x[0], x[1].exp());
    let p = l * l.transpose();
    p / p.trace()
}

fn pack(p: &Matrix2<f64>) -> Option<Vec<f64>> {
    let c = p.cholesky()?;
    let l = c.l();
    let x0 = l[(1, 0)] / l[(0, 0)];
    let x1 = (l[(1, 1)] / l[(0, 0)]).ln();
    Some(vec![x0, x1])
}

struct EndpointCost {
    ends: [Matrix2<f64>; 2],
}

impl EndpointCost {
    fn eval(&self, x: &[f64]) -> f64 {
        let p = unpack(x);
        self.ends.iter().map(|f| max_eig2(&m2(f, &p))).fold(f64::NEG_INFINITY, f64::max)
    }
}

impl CostFunction for EndpointCost {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        let c = self.eval(x);
        Ok(if c.is_finite() { c } else { f64::MAX })
    }
}

fn minimize(cost: &EndpointCost, start: Vec<f64>) -> (Vec<f64>, f64) {
    let simplex = vec![start.clone(), vec![start[0] + 0.5, start[1]], vec![start[0], start[1] + 0.5]];
    let fallback = (start.clone(), cost.eval(&start));
    let Ok(solver) = NelderMead::new(simplex).with_sd_tolerance(1e-15) else { return fallback };
    let cost = EndpointCost { ends: cost.ends };
    match Executor::new(cost, solver).configure(|s| s.max_iters(4000)).run() {
        Ok(res) => {
            let state = res.state();
            match state.get_best_param() {
                Some(x) => (x.clone(), state.get_best_cost()),
                None => fallback,
            }
        }
        Err(_) => fallback,
    }
}

/// Largest eigenvalue of `M(τ)` for the given `P`.
pub fn lmi_residual(p: &DMatrix<f64>, blocks: &LinearBlocks, tau: f64) -> f64 {
    let f = expm_abar(blocks, tau) * &blocks.a_g;
    let m = f.transpose() * p * &f - p;
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigenvalues().max()
}

/// Certificate with the default strictness margin.
pub fn certify_lmi(
    gains: &GainSet,
    n_vectors: usize,
    t_min: f64,
    t_max: f64,
) -> Result<LyapunovCertificate, GainsError> {
    certify_lmi_with_margin(gains, n_vectors, t_min, t_max, DEFAULT_MARGIN)
}

/// Searches for `P ≻ 0` with `M(τ) ⪯ −εI` on `[t_min, t_max]`, `ε ≥ margin·‖P‖`.
pub fn certify_lmi_with_margin(
    gains: &GainSet,
    n_vectors: usize,
    t_min: f64,
    t_max: f64,
    margin: f64,
) -> Result<LyapunovCertificate, GainsError> {
    check_interval(t_min, t_max)?;
    let vector_decay = 1.0 - (1.0 - gains.k_r).powi(2);
    if n_vectors > 0 && !(vector_decay > 0.0) {
        return Err(GainsError::Infeasible { best: -vector_decay });
    }
    let cost = EndpointCost { ends: [per_axis(gains.k_v, gains.k_g, t_min), per_axis(gains.k_v, gains.k_g, t_max)] };

    let mut starts = Vec::new();
    for tau in [t_min, 0.5 * (t_min + t_max), t_max] {
        if let Some(x) = discrete_lyapunov2(&per_axis(gains.k_v, gains.k_g, tau))
            .filter(|p| p.iter().all(|v| v.is_finite()))
            .and_then(|p| pack(&(p / p.trace())))
        {
            starts.push(x);
        }
    }
    starts.push(vec![0.0, 0.0]);

    let (mut best_x, mut best) = (starts[0].clone(), f64::INFINITY);
    for start in starts {
        let c0 = cost.eval(&start);
        if c0 < best {
            (best_x, best) = (start.clone(), c0);
        }
        let (x, c) = minimize(&cost, start);
        if c < best {
            (best_x, best) = (x, c);
        }
    }

    let p_zeta = unpack(&best_x);
    let p_vectors = 1.0;
    let mut margin_found = -best;
    if n_vectors > 0 {
        margin_found = margin_found.min(vector_decay * p_vectors);
    }
    let p = assemble(&p_zeta, p_vectors, n_vectors);
    let p_norm = p.symmetric_eigenvalues().max();
    if !(best < 0.0) || margin_found < margin * p_norm {
        return Err(GainsError::Infeasible { best });
    }

    let blocks = build_blocks(n_vectors, gains);
    let grid_max_eigenvalue = (0..VERIFY_GRID)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (VERIFY_GRID - 1) as f64)
        .map(|tau| lmi_residual(&p, &blocks, tau))
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(LyapunovCertificate {
        p,
        p_zeta,
        p_vectors,
        margin: margin_found,
        tau_range: (t_min, t_max),
        grid_max_eigenvalue,
        k_v: gains.k_v,
        k_g: gains.k_g,
        k_r: gains.k_r,
        n_vectors,
    })
}

fn assemble(p_zeta: &Matrix2<f64>, p_vectors: f64, n_vectors: usize) -> DMatrix<f64> {
    let d = 3 * n_vectors + 6;
    let mut p = DMatrix::zeros(d, d);
    let z = kron_i3(p_zeta);
    p.view_mut((0, 0), (6, 6)).copy_from(&z);
    for i in 6..d {
        p[(i, i)] = p_vectors;
    }
    p
}
