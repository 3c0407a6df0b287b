//! Iteratively reweighted SDR design of a `P`-sensor array: free (NFSDR),
//! symmetry-breaking (perturbed NFSDR) and prefix-constrained hybrid (FSDR)
//! variants, each optionally with per-source fair-gain constraints.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::beamform::{max_sinr, output_sinr, Beamformer};
use crate::conic::{extract_rank1, solve_sdr, SdrProblem, SdrSolution, SdrStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{canonicalize_phase, CMatrix, CVector};
use crate::scene::{build_covariances, check_support, subselect, CovarianceSet, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    Nfsdr,
    PerturbedNfsdr,
    Fsdr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Number of sensors to select.
    pub p: usize,
    pub mu_lower: f64,
    pub mu_upper: f64,
    /// Smoothing in the reweight update.
    pub epsilon: f64,
    /// Perturbation added to the selection vector in perturbed NFSDR.
    pub gamma: f64,
    pub max_reweight_iters: usize,
    pub mode: DesignMode,
    /// One power constraint per desired source instead of one on `R_s`.
    pub fair_gain: bool,
    /// Sensors fixed in advance (FSDR only); they get a zero entry in the
    /// selection vector.
    pub prefix: Vec<usize>,
    /// Relative `sqrt(W_ii)` cutoff below which a sensor counts as unused.
    pub support_threshold: f64,
    pub binary_search_max_steps: usize,
    /// The binary search also ends once `upper − lower` falls below this
    /// fraction of `upper`.
    pub mu_rel_tol: f64,
    /// Early stop of the reweighting loop once the support repeats and `B`
    /// moves by less than this relative amount.
    pub reweight_tol: f64,
    pub solver: SolverSettings,
    /// Seed for Gaussian randomization during rank-one extraction.
    pub seed: u64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            p: 1,
            mu_lower: 0.01,
            mu_upper: 1.5,
            epsilon: 0.1,
            gamma: 0.05,
            max_reweight_iters: 6,
            mode: DesignMode::Nfsdr,
            fair_gain: false,
            prefix: Vec::new(),
            support_threshold: 1e-3,
            binary_search_max_steps: 20,
            mu_rel_tol: 1e-3,
            reweight_tol: 1e-3,
            solver: SolverSettings::default(),
            seed: 0,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.p == 0 || self.p > n {
            return bad(format!("P = {} must lie in 1..={n}", self.p));
        }
        if !(self.mu_lower >= 0.0 && self.mu_lower < self.mu_upper && self.mu_upper.is_finite()) {
            return bad(format!(
                "mu bracket [{}, {}] must satisfy 0 <= lower < upper",
                self.mu_lower, self.mu_upper
            ));
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if !(self.gamma >= 0.0) {
            return bad("gamma must be nonnegative".into());
        }
        if !(self.mu_rel_tol >= 0.0) {
            return bad("mu_rel_tol must be nonnegative".into());
        }
        if self.max_reweight_iters == 0 {
            return bad("max_reweight_iters must be at least 1".into());
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return bad("support_threshold must lie in (0, 1)".into());
        }
        match self.mode {
            DesignMode::Fsdr => {
                if self.prefix.is_empty() {
                    return bad("FSDR needs a nonempty prefix".into());
                }
                check_support(&self.prefix, n)?;
                if self.prefix.len() > self.p {
                    return bad(format!(
                        "prefix of {} sensors exceeds P = {}",
                        self.prefix.len(),
                        self.p
                    ));
                }
            }
            _ if !self.prefix.is_empty() => {
                return bad("a prefix is only meaningful in FSDR mode".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Hybrid selection vector: zero on prefixed sensors, one elsewhere.
    pub fn selection_vector(&self, n: usize) -> DVector<f64> {
        let mut z = DVector::from_element(n, 1.0);
        for &i in &self.prefix {
            z[i] = 0.0;
        }
        z
    }
}

/// One SDR solve inside the binary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub search_step: usize,
    pub reweight_iter: usize,
    pub mu: f64,
    pub support_size: usize,
    pub objective: f64,
    pub rank_ratio: f64,
    pub solver_iterations: usize,
    pub status: SdrStatus,
}

fn serialize_weights<S: Serializer>(w: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(w.iter().map(|z| [z.re, z.im]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub support: Vec<usize>,
    /// Weights aligned with `support`, serialized as `[re, im]` pairs.
    #[serde(serialize_with = "serialize_weights")]
    pub weights: CVector,
    pub sinr_db: f64,
    /// The μ whose solution fixed the support; absent when `P = N`.
    pub mu_final: Option<f64>,
    /// Set when no μ in the bracket produced exactly `P` sensors and the
    /// support was chosen by magnitude instead.
    pub fallback: bool,
    /// Selection vector used for reweighting (with any perturbation).
    pub selection_vector: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

impl DesignResult {
    pub fn beamformer(&self) -> Result<Beamformer> {
        Beamformer::new(self.support.clone(), self.weights.clone())
    }
}

/// `B = (z zᵀ) ⊘ (|W| + ε)`.
pub fn reweight_update(w: &CMatrix, z: &DVector<f64>, epsilon: f64) -> DMatrix<f64> {
    let n = w.nrows();
    DMatrix::from_fn(n, n, |i, j| z[i] * z[j] / (w[(i, j)].norm() + epsilon))
}

/// Sensors whose `sqrt(W_ii)` exceeds `threshold` times the largest one.
pub fn support_of(solution: &SdrSolution, threshold: f64) -> Vec<usize> {
    let d: Vec<f64> = (0..solution.w.nrows())
        .map(|i| solution.w[(i, i)].re.max(0.0).sqrt())
        .collect();
    let peak = d.iter().copied().fold(0.0, f64::max);
    (0..d.len()).filter(|&i| d[i] > threshold * peak).collect()
}

/// Selection vector for perturbed NFSDR: all ones except `1 + γ` at the
/// sensor whose removal costs the least SINR (lowest index on ties).
pub fn perturb_init(cov: &CovarianceSet, gamma: f64) -> Result<DVector<f64>> {
    let n = cov.dim();
    let mut z = DVector::from_element(n, 1.0);
    if n < 2 || gamma == 0.0 {
        return Ok(z);
    }
    let losses = (0..n)
        .map(|i| {
            let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            Ok(max_sinr(&subselect(cov, &rest)?)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pick = losses
        .iter()
        .position(|&v| v >= best - 1e-9 * best.abs())
        .unwrap_or(0);
    z[pick] += gamma;
    Ok(z)
}

fn constraint_matrices(cov: &CovarianceSet, fair_gain: bool) -> Vec<CMatrix> {
    if fair_gain {
        cov.r_k.clone()
    } else {
        vec![cov.relative_signal()]
    }
}

/// The unregularized (`μ = 0`) relaxation on the covariances restricted to
/// `support`, as solved in the last step of [`design`].
pub fn reduced_problem(cov: &CovarianceSet, support: &[usize], fair_gain: bool) -> Result<SdrProblem> {
    let sub = subselect(cov, support)?;
    SdrProblem::new(
        sub.r_xx.clone(),
        0.0,
        DMatrix::zeros(support.len(), support.len()),
        constraint_matrices(&sub, fair_gain),
    )
}

struct Candidate {
    mu: f64,
    support: Vec<usize>,
    diag: Vec<f64>,
}

/// Runs the full design for `scenario`.
pub fn design(scenario: &Scenario, config: &DesignConfig) -> Result<DesignResult> {
    let cov = build_covariances(scenario)?;
    design_with_covariances(&cov, config)
}

/// Same as [`design`] for precomputed covariances.
pub fn design_with_covariances(cov: &CovarianceSet, config: &DesignConfig) -> Result<DesignResult> {
    let n = cov.dim();
    config.validate(n)?;
    let z = match config.mode {
        DesignMode::PerturbedNfsdr => perturb_init(cov, config.gamma)?,
        _ => config.selection_vector(n),
    };
    let constraints = constraint_matrices(cov, config.fair_gain);
    let mut trace = Vec::new();

    let (support, mu_final, fallback) = if config.p == n {
        ((0..n).collect(), None, false)
    } else {
        let zz = &z * z.transpose();
        let mut lo = config.mu_lower;
        let mut hi = config.mu_upper;
        let mut hit = None;
        let mut candidates: Vec<Candidate> = Vec::new();
        for step in 0..config.binary_search_max_steps {
            let mu = 0.5 * (lo + hi);
            let mut b = zz.clone();
            let mut prev: Option<Vec<usize>> = None;
            let mut last = None;
            for it in 0..config.max_reweight_iters {
                let problem = SdrProblem::new(cov.r_xx.clone(), mu, b.clone(), constraints.clone())?;
                let sol = solve_sdr(&problem, &config.solver)?;
                if sol.status == SdrStatus::Infeasible {
                    return Err(Error::Infeasible(format!("SDR diverged at mu = {mu}")));
                }
                let mut s = support_of(&sol, config.support_threshold);
                s.extend(config.prefix.iter().copied());
                s.sort_unstable();
                s.dedup();
                trace.push(TraceEntry {
                    search_step: step,
                    reweight_iter: it,
                    mu,
                    support_size: s.len(),
                    objective: sol.objective,
                    rank_ratio: sol.rank_ratio,
                    solver_iterations: sol.iterations,
                    status: sol.status,
                });
                let b_next = reweight_update(&sol.w, &z, config.epsilon);
                let settled = (&b_next - &b).norm() <= config.reweight_tol * b.norm();
                b = b_next;
                let repeat = prev.as_ref() == Some(&s);
                let diag = (0..n).map(|i| sol.w[(i, i)].re.max(0.0)).collect();
                last = Some(Candidate {
                    mu,
                    support: s.clone(),
                    diag,
                });
                if repeat && settled {
                    break;
                }
                prev = Some(s);
            }
            let cand = last.expect("at least one reweight iteration");
            let size = cand.support.len();
            if size == config.p {
                hit = Some(cand);
                break;
            }
            if size > config.p {
                lo = mu;
            } else {
                hi = mu;
            }
            candidates.push(cand);
            if hi - lo <= config.mu_rel_tol * hi {
                break;
            }
        }
        match hit {
            Some(c) => (c.support, Some(c.mu), false),
            None => {
                let c = pick_fallback(&candidates, config.p)
                    .ok_or_else(|| Error::Numeric("binary search made no SDR solves".into()))?;
                (largest_p(c, &config.prefix, config.p), Some(c.mu), true)
            }
        }
    };

    let problem = reduced_problem(cov, &support, config.fair_gain)?;
    let sol = solve_sdr(&problem, &config.solver)?;
    let mut weights = extract_rank1(&sol, &problem, &config.solver, config.seed)?;
    canonicalize_phase(&mut weights);
    let bf = Beamformer::new(support.clone(), weights.clone())?;
    let sinr_db = output_sinr(&bf, cov)?;
    Ok(DesignResult {
        support,
        weights,
        sinr_db,
        mu_final,
        fallback,
        selection_vector: z.iter().copied().collect(),
        trace,
    })
}

/// Among solutions with at least `p` sensors, the one closest to `p`
/// (smaller μ on ties); without any, the least sparse one.
fn pick_fallback(candidates: &[Candidate], p: usize) -> Option<&Candidate> {
    let above = candidates
        .iter()
        .filter(|c| c.support.len() >= p)
        .min_by(|a, b| {
            a.support
                .len()
                .cmp(&b.support.len())
                .then(a.mu.total_cmp(&b.mu))
        });
    above.or_else(|| {
        candidates.iter().max_by(|a, b| {
            a.support
                .len()
                .cmp(&b.support.len())
                .then(b.mu.total_cmp(&a.mu))
        })
    })
}

/// Prefix plus the strongest remaining sensors by `W_ii`, `p` in total.
fn largest_p(c: &Candidate, prefix: &[usize], p: usize) -> Vec<usize> {
    let mut rest: Vec<usize> = (0..c.diag.len()).filter(|i| !prefix.contains(i)).collect();
    rest.sort_by(|&a, &b| c.diag[b].total_cmp(&c.diag[a]).then(a.cmp(&b)));
    let mut support: Vec<usize> = prefix.to_vec();
    support.extend(rest.into_iter().take(p - prefix.len()));
    support.sort_unstable();
    support
}
