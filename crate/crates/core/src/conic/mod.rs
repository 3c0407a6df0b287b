//! Semidefinite relaxation of the sparse max-SINR problem
//!
//! ```text
//! minimize    tr(R_xx W) + μ tr(B W̃)
//! subject to  tr(R_k W) ≥ 1 for every constraint matrix R_k,
//!             W̃_mn ≥ |W_mn|,  W ⪰ 0,
//! ```
//!
//! and recovery of a rank-one weight vector from its solution.
//!
//! Diagonal moduli are eliminated (`W̃_mm = W_mm` at any optimum) and an
//! off-diagonal `W̃_mn` only enters the cone program when its penalty
//! `μ B_mn` is positive; otherwise it is reported as `|W_mn|`.

mod cones;
mod ipm;
pub mod matio;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eig_desc, hermitian_part, quad_form, C64, CMatrix, CVector};

pub use ipm::{svec, unsvec};

/// Tunables of the interior-point solve and of rank-one extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Below this `λ₁/tr W`, rank-one extraction falls back to randomization.
    pub rank_ratio_threshold: f64,
    pub n_rand: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 100,
            rank_ratio_threshold: 0.95,
            n_rand: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrProblem {
    r_xx: CMatrix,
    mu: f64,
    b: DMatrix<f64>,
    constraints: Vec<CMatrix>,
}

impl SdrProblem {
    pub fn new(r_xx: CMatrix, mu: f64, b: DMatrix<f64>, constraints: Vec<CMatrix>) -> Result<Self> {
        let n = r_xx.nrows();
        if n == 0 || r_xx.ncols() != n {
            return Err(Error::Config("R_xx must be a nonempty square matrix".into()));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::Config(format!("mu must be nonnegative, got {mu}")));
        }
        if b.shape() != (n, n) {
            return Err(Error::Config("B must match the dimension of R_xx".into()));
        }
        if b.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::Config("B must be finite and nonnegative".into()));
        }
        if (&b - b.transpose()).amax() > 1e-12 * b.amax().max(1.0) {
            return Err(Error::Config("B must be symmetric".into()));
        }
        if constraints.is_empty() {
            return Err(Error::Config("at least one power constraint is required".into()));
        }
        let scale = |m: &CMatrix| m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for m in std::iter::once(&r_xx).chain(&constraints) {
            if m.shape() != (n, n) {
                return Err(Error::Config("constraint dimension mismatch".into()));
            }
            if hermitian_defect(m) > 1e-10 * scale(m) {
                return Err(Error::Config("matrices must be Hermitian".into()));
            }
        }
        if constraints.iter().any(|m| !(m.trace().re > 0.0)) {
            return Err(Error::Config("constraint matrices must have positive trace".into()));
        }
        Ok(Self {
            r_xx,
            mu,
            b,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.r_xx.nrows()
    }

    pub fn r_xx(&self) -> &CMatrix {
        &self.r_xx
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn constraints(&self) -> &[CMatrix] {
        &self.constraints
    }

    /// Objective `tr(R_xx W) + μ tr(B W̃)`.
    pub fn objective(&self, w: &CMatrix, w_tilde: &DMatrix<f64>) -> f64 {
        let quad = (&self.r_xx * w).trace().re;
        let pen: f64 = self.b.iter().zip(w_tilde.iter()).map(|(b, t)| b * t).sum();
        quad + self.mu * pen
    }

    /// `min_k tr(R_k W)`.
    pub fn min_constraint(&self, w: &CMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|r| (r * w).trace().re)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdrStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrSolution {
    pub w: CMatrix,
    pub w_tilde: DMatrix<f64>,
    pub objective: f64,
    /// `λ₁(W) / tr W`.
    pub rank_ratio: f64,
    pub status: SdrStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

/// Solves the relaxation with an interior-point method.
///
/// Internally `R_xx` is divided by its mean diagonal and the variable is
/// rescaled so the largest constraint matrix has unit trace; the reported
/// solution and objective are in the original units.
pub fn solve_sdr(problem: &SdrProblem, settings: &SolverSettings) -> Result<SdrSolution> {
    if !(settings.tol > 0.0) {
        return Err(Error::Config("solver tolerance must be positive".into()));
    }
    let n = problem.dim();
    let tau = problem
        .constraints
        .iter()
        .map(|m| m.trace().re)
        .fold(0.0, f64::max);
    let rho = problem.r_xx.trace().re / n as f64;
    if !(rho > 0.0) {
        return Err(Error::Config("R_xx must have positive trace".into()));
    }
    let mut c = hermitian_part(&problem.r_xx) / C64::new(rho, 0.0);
    for i in 0..n {
        c[(i, i)] += C64::new(problem.mu * problem.b[(i, i)] / rho, 0.0);
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let pen = problem.mu * problem.b[(i, j)];
            if pen > 0.0 {
                pairs.push((i, j, 2.0 * pen / rho));
            }
        }
    }
    let data = ipm::ConicData {
        n,
        c,
        a: problem
            .constraints
            .iter()
            .map(|m| hermitian_part(m) / C64::new(tau, 0.0))
            .collect(),
        pairs,
    };
    let out = ipm::solve(&data, settings.tol, settings.max_iters)?;

    let w = hermitian_part(&out.v) / C64::new(tau, 0.0);
    let mut w_tilde = DMatrix::from_fn(n, n, |i, j| w[(i, j)].norm());
    for (&(i, j, _), &t) in data.pairs.iter().zip(&out.t) {
        let t = (t / tau).max(w_tilde[(i, j)]);
        w_tilde[(i, j)] = t;
        w_tilde[(j, i)] = t;
    }
    for i in 0..n {
        w_tilde[(i, i)] = w[(i, i)].re.max(0.0);
    }
    let (vals, _) = hermitian_eig_desc(&w);
    let trace: f64 = vals.iter().sum();
    let rank_ratio = if trace > 0.0 { vals[0] / trace } else { 0.0 };
    let status = match out.status {
        ipm::IpmStatus::Optimal => SdrStatus::Optimal,
        ipm::IpmStatus::MaxIterations => SdrStatus::MaxIterations,
        ipm::IpmStatus::Diverged => SdrStatus::Infeasible,
    };
    Ok(SdrSolution {
        objective: problem.objective(&w, &w_tilde),
        w,
        w_tilde,
        rank_ratio,
        status,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        gap: out.gap * rho / tau,
    })
}

/// Rescales `w` so that its tightest power constraint holds with equality.
fn rescale_to_constraints(problem: &SdrProblem, w: &CVector) -> Option<CVector> {
    let worst = problem
        .constraints
        .iter()
        .map(|r| quad_form(r, w))
        .fold(f64::INFINITY, f64::min);
    (worst > 0.0 && worst.is_finite()).then(|| w / C64::new(worst.sqrt(), 0.0))
}

/// Rank-one weights from a relaxed solution.
///
/// A nearly rank-one `W` yields its scaled principal eigenvector. Otherwise
/// `n_rand` vectors are drawn from `CN(0, W)`, each rescaled to satisfy every
/// power constraint, and the one with the least output power `wᴴ R_xx w` is
/// kept; the scaled principal eigenvector competes as one more candidate.
pub fn extract_rank1(
    solution: &SdrSolution,
    problem: &SdrProblem,
    settings: &SolverSettings,
    seed: u64,
) -> Result<CVector> {
    if solution.status == SdrStatus::Infeasible {
        return Err(Error::Infeasible("cannot extract weights from an infeasible solve".into()));
    }
    let n = problem.dim();
    let (vals, vecs) = hermitian_eig_desc(&solution.w);
    let principal = vecs.column(0) * C64::new(vals[0].max(0.0).sqrt(), 0.0);
    let mut best = rescale_to_constraints(problem, &principal);
    if solution.rank_ratio >= settings.rank_ratio_threshold {
        return best.ok_or_else(|| Error::Numeric("principal eigenvector violates constraints".into()));
    }

    let factor = CMatrix::from_fn(n, n, |r, c| vecs[(r, c)] * vals[c].max(0.0).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_power = best
        .as_ref()
        .map_or(f64::INFINITY, |w| quad_form(&problem.r_xx, w));
    for _ in 0..settings.n_rand {
        let xi = CVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        if let Some(w) = rescale_to_constraints(problem, &(&factor * xi)) {
            let power = quad_form(&problem.r_xx, &w);
            if power < best_power {
                best_power = power;
                best = Some(w);
            }
        }
    }
    best.ok_or_else(|| Error::Numeric("randomization produced no feasible vector".into()))
}
