//! Monte Carlo comparison of every selection method over random interference
//! environments. Trial `i` draws everything from the seed `seed + i`, so a
//! trial can be replayed on its own and results do not depend on the pool
//! size.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sparsearray::beamform::max_sinr_db;
use sparsearray::design::{design_with_covariances, DesignMode};
use sparsearray::oracle::enumerate_covariances;
use sparsearray::scene::{build_covariances, subselect, Dimensionality, Scenario, SourceRole, SourceSpec};
use sparsearray::Error;

use crate::commands::{json_with_config, write_file};
use crate::config::{MonteCarloConfig, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumeration,
    Nfsdr,
    PerturbedNfsdr,
    Fsdr,
    CompactUla,
    RandomSparse,
}

pub const METHODS: [Method; 6] = [
    Method::Enumeration,
    Method::Nfsdr,
    Method::PerturbedNfsdr,
    Method::Fsdr,
    Method::CompactUla,
    Method::RandomSparse,
];

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Enumeration => "enumeration",
            Method::Nfsdr => "nfsdr",
            Method::PerturbedNfsdr => "perturbed_nfsdr",
            Method::Fsdr => "fsdr",
            Method::CompactUla => "compact_ula",
            Method::RandomSparse => "random_sparse",
        }
    }
}

/// Output SINR per method in [`METHODS`] order; `None` marks a skipped method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub trial: usize,
    pub seed: u64,
    pub sinr_db: [Option<f64>; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_sinr_db: Option<f64>,
    pub completed: usize,
    pub skipped: usize,
}

fn validate(mc: &MonteCarloConfig) -> Result<u64, CliError> {
    let bad = |m: &str| Err(CliError::Config(format!("montecarlo: {m}")));
    let Some(seed) = mc.seed else {
        return bad("a master seed is required (montecarlo.seed or --seed)");
    };
    if mc.trials == 0 {
        return bad("trials must be at least 1");
    }
    if mc.interferers_min > mc.interferers_max {
        return bad("interferers_min exceeds interferers_max");
    }
    let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
    if !ordered(mc.doa_min_deg, mc.doa_max_deg) || mc.doa_min_deg < 0.0 || mc.doa_max_deg > 180.0 {
        return bad("DOA range must be an ordered subrange of [0, 180]");
    }
    if !ordered(mc.phi_min_deg, mc.phi_max_deg) {
        return bad("azimuth range must be ordered");
    }
    if !ordered(mc.inr_min_db, mc.inr_max_db) {
        return bad("INR range must be ordered");
    }
    Ok(seed)
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Desired sources of the configured scenario plus freshly drawn interferers.
pub fn trial_scenario(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Scenario, CliError> {
    let mc = &config.montecarlo;
    let geometry = config.scenario.geometry.build()?;
    let planar = geometry.dimensionality() == Dimensionality::Planar;
    let mut sources: Vec<SourceSpec> = config
        .scenario
        .sources
        .iter()
        .filter(|s| s.role == SourceRole::Desired)
        .copied()
        .collect();
    let count = rng.random_range(mc.interferers_min..=mc.interferers_max);
    for _ in 0..count {
        let theta = draw(rng, mc.doa_min_deg, mc.doa_max_deg);
        let inr = draw(rng, mc.inr_min_db, mc.inr_max_db);
        let mut s = SourceSpec::interferer(theta, inr);
        if planar {
            s = s.with_azimuth(draw(rng, mc.phi_min_deg, mc.phi_max_deg));
        }
        sources.push(s);
    }
    Ok(Scenario::new(geometry, sources)?)
}

/// Runs one trial with seed `seed`.
pub fn run_trial(config: &RunConfig, trial: usize, seed: u64) -> Result<Trial, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = trial_scenario(config, &mut rng)?;
    let cov = build_covariances(&scenario)?;
    let n = cov.dim();
    let p = config.design.p;
    if p == 0 || p > n {
        return Err(CliError::Config(format!("design.p = {p} must lie in 1..={n}")));
    }

    let mut oracle = config.oracle.oracle_config();
    oracle.full_ranking = false;
    let enumeration = match enumerate_covariances(&cov, p, &[], &oracle) {
        Ok(e) => Some(e.best.sinr_db),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let designed = |mode: DesignMode| -> Result<Option<f64>, CliError> {
        let mut dc = config.design.clone();
        dc.seed = seed;
        dc.mode = mode;
        if mode != DesignMode::Fsdr {
            dc.prefix.clear();
        } else if dc.prefix.is_empty() {
            return Ok(None);
        }
        Ok(Some(design_with_covariances(&cov, &dc)?.sinr_db))
    };
    let nfsdr = designed(DesignMode::Nfsdr)?;
    let perturbed = designed(DesignMode::PerturbedNfsdr)?;
    let fsdr = designed(DesignMode::Fsdr)?;

    let compact: Vec<usize> = (0..p).collect();
    let compact = max_sinr_db(&subselect(&cov, &compact)?)?;
    let mut random = sample(&mut rng, n, p).into_vec();
    random.sort_unstable();
    let random = max_sinr_db(&subselect(&cov, &random)?)?;

    Ok(Trial {
        trial,
        seed,
        sinr_db: [enumeration, nfsdr, perturbed, fsdr, Some(compact), Some(random)],
    })
}

/// All trials in trial order, evaluated on the current rayon pool.
pub fn run_trials(config: &RunConfig) -> Result<Vec<Trial>, CliError> {
    let seed = validate(&config.montecarlo)?;
    (0..config.montecarlo.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i, seed.wrapping_add(i as u64)))
        .collect()
}

pub fn summarize(trials: &[Trial]) -> Vec<MethodSummary> {
    METHODS
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let done: Vec<f64> = trials.iter().filter_map(|t| t.sinr_db[m]).collect();
            MethodSummary {
                method,
                mean_sinr_db: (!done.is_empty()).then(|| done.iter().sum::<f64>() / done.len() as f64),
                completed: done.len(),
                skipped: trials.len() - done.len(),
            }
        })
        .collect()
}

pub fn trials_csv(config: &RunConfig, trials: &[Trial]) -> String {
    let mut out = format!("# config: {}\ntrial,seed", config.provenance());
    for m in METHODS {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for t in trials {
        let _ = write!(out, "{},{}", t.trial, t.seed);
        for v in &t.sinr_db {
            match v {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push_str(",skipped"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(config: &RunConfig) -> Result<String, CliError> {
    let trials = run_trials(config)?;
    let summary = summarize(&trials);
    let dir = &config.output.dir;
    write_file(dir, "montecarlo_trials.csv", &trials_csv(config, &trials))?;
    write_file(dir, "montecarlo_summary.json", &json_with_config(config, "summary", &summary))?;
    let mut out = format!("trials: {}\n", trials.len());
    for s in &summary {
        match s.mean_sinr_db {
            Some(mean) => {
                let _ = writeln!(out, "{:<16} {mean:>9.4} dB ({} skipped)", s.method.name(), s.skipped);
            }
            None => {
                let _ = writeln!(out, "{:<16} skipped", s.method.name());
            }
        }
    }
    Ok(out)
}
