//! Acceptance suite: one PASS/FAIL line per criterion, followed by the
//! individual checks. Criteria listed in `KNOWN_RED` are reported but do not
//! fail the target; any other failing criterion does. Pass criterion numbers
//! as arguments to run a subset.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsearray::beamform::{
    conjugate_symmetry_residual, desired_gains_db, max_sinr, max_sinr_db, max_sinr_weights,
    output_sinr,
};
use sparsearray::coarray::{find_augmentable_prefix, is_fully_augmentable};
use sparsearray::conic::{solve_sdr, SdrProblem, SolverSettings};
use sparsearray::design::{design, design_with_covariances, DesignConfig, DesignMode, DesignResult};
use sparsearray::linalg::{hermitian_defect, min_eigenvalue, CMatrix};
use sparsearray::oracle::{binomial, enumerate, enumerate_covariances, OracleConfig};
use sparsearray::scene::{build_covariances, subselect, GridGeometry, Scenario, SourceSpec};
use sparsearray::Error;
use sparsearray_cli::montecarlo::{run_trials, summarize};
use sparsearray_cli::RunConfig;

/// Criteria expected to fail; the analysis is kept with the project notes.
const KNOWN_RED: &[usize] = &[3, 5];

struct Criterion {
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.checks.push((ok, detail));
    }

    fn within(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        self.check(
            (value - target).abs() <= tol,
            format!("{what} = {value:.4} (target {target} ± {tol})"),
        );
    }

    fn at_least(&mut self, what: &str, value: f64, floor: f64) {
        self.check(value >= floor, format!("{what} = {value:.4} (≥ {floor})"));
    }

    fn faster(&mut self, what: &str, took: Duration, limit: Duration) {
        self.check(
            took < limit,
            format!("{what} took {:.2} s (< {} s)", took.as_secs_f64(), limit.as_secs()),
        );
    }
}

type Outcome = Result<Criterion, Error>;

fn linear(n: usize, desired: &[(f64, f64)], interferers: &[(f64, f64)]) -> Scenario {
    let sources = desired
        .iter()
        .map(|&(t, p)| SourceSpec::desired(t, p))
        .chain(interferers.iter().map(|&(t, p)| SourceSpec::interferer(t, p)))
        .collect();
    Scenario::new(GridGeometry::linear(n, 0.5).unwrap(), sources).unwrap()
}

fn broadside() -> Scenario {
    linear(16, &[(90.0, 10.0)], &[(70.0, 10.0), (80.0, 10.0), (100.0, 10.0)])
}

fn multi_source() -> Scenario {
    linear(
        18,
        &[(40.0, 0.0), (65.0, 0.0), (90.0, 0.0)],
        &[(50.0, 30.0), (60.0, 30.0), (120.0, 30.0), (150.0, 30.0)],
    )
}

fn hybrid_1d() -> Scenario {
    linear(24, &[(30.0, 10.0)], &[(20.0, 10.0), (40.0, 10.0), (120.0, 10.0)])
}

fn planar() -> Scenario {
    let mut sources = vec![SourceSpec::desired(50.0, 0.0).with_azimuth(90.0)];
    for (theta, phi) in [(20.0, 30.0), (40.0, 80.0), (120.0, 75.0), (35.0, 20.0)] {
        sources.push(SourceSpec::interferer(theta, 20.0).with_azimuth(phi));
    }
    Scenario::new(GridGeometry::planar(7, 7, 0.5).unwrap(), sources).unwrap()
}

fn centro_symmetric(support: &[usize]) -> bool {
    let n = support.len();
    (0..n).all(|i| support[i] + support[n - 1 - i] == support[0] + support[n - 1])
}

fn spread(result: &DesignResult, scenario: &Scenario) -> Result<f64, Error> {
    let gains = desired_gains_db(&result.beamformer()?, &build_covariances(scenario)?)?;
    let hi = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = gains.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn criterion_1() -> Outcome {
    let mut c = Criterion::new();
    let scenario = broadside();
    let start = Instant::now();
    let e = single_threaded(|| enumerate(&scenario, 8, &[], &OracleConfig::default()))?;
    let took = start.elapsed();
    c.check(e.count == 12870, format!("{} supports enumerated", e.count));
    c.within("enumeration best", e.best.sinr_db, 19.0, 0.15);
    c.within("enumeration worst", e.worst.sinr_db, 2.06, 0.15);
    c.faster("single-threaded enumeration", took, Duration::from_secs(10));

    let cov = build_covariances(&scenario)?;
    let compact: Vec<usize> = (0..8).collect();
    c.within("compact 8-ULA", max_sinr_db(&subselect(&cov, &compact)?)?, 15.07, 0.1);

    let config = DesignConfig {
        p: 8,
        ..DesignConfig::default()
    };
    let nfsdr = design(&scenario, &config)?;
    c.at_least("NFSDR", nfsdr.sinr_db, 18.3);
    c.check(
        centro_symmetric(&nfsdr.support),
        format!("NFSDR support {:?} is centro-symmetric", nfsdr.support),
    );
    let perturbed = design(
        &scenario,
        &DesignConfig {
            mode: DesignMode::PerturbedNfsdr,
            ..config
        },
    )?;
    c.at_least("perturbed-NFSDR", perturbed.sinr_db, 18.4);
    Ok(c)
}

fn criterion_2() -> Outcome {
    let mut c = Criterion::new();
    let single = |scenario: &Scenario| -> Result<f64, Error> {
        max_sinr_db(&subselect(&build_covariances(scenario)?, &[0])?)
    };
    c.within("broadside scenario single-sensor input SINR", single(&broadside())?, -4.91, 0.01);
    let interferers = [(50.0, 30.0), (60.0, 30.0), (120.0, 30.0), (150.0, 30.0)];
    for theta in [40.0, 65.0, 90.0] {
        let alone = linear(18, &[(theta, 0.0)], &interferers);
        c.within(&format!("multi-source input SINR at {theta}°"), single(&alone)?, -36.02, 0.01);
    }
    Ok(c)
}

fn criterion_3() -> Outcome {
    let mut c = Criterion::new();
    let scenario = multi_source();
    let e = enumerate(&scenario, 10, &[], &OracleConfig::default())?;
    c.within("enumeration best", e.best.sinr_db, 12.1, 0.2);

    let config = DesignConfig {
        p: 10,
        mu_upper: 3.0,
        epsilon: 0.01,
        ..DesignConfig::default()
    };
    let nfsdr = design(&scenario, &config)?;
    c.at_least("NFSDR", nfsdr.sinr_db, 11.5);
    let fair = design(
        &scenario,
        &DesignConfig {
            fair_gain: true,
            ..config
        },
    )?;
    c.check(
        (11.0..=12.1).contains(&fair.sinr_db),
        format!("fair-gain design = {:.4} (in [11.0, 12.1])", fair.sinr_db),
    );
    let fair_spread = spread(&fair, &scenario)?;
    c.check(fair_spread <= 4.5, format!("fair-gain spread = {fair_spread:.4} dB (≤ 4.5)"));
    let plain_spread = spread(&nfsdr, &scenario)?;
    c.check(plain_spread >= 6.0, format!("non-fair spread = {plain_spread:.4} dB (≥ 6)"));
    Ok(c)
}

fn criterion_4() -> Outcome {
    let mut c = Criterion::new();
    let scenario = hybrid_1d();
    let start = Instant::now();
    let e = enumerate(&scenario, 14, &[], &OracleConfig::default())?;
    let took = start.elapsed();
    c.check(e.count == 1_961_256, format!("{} supports enumerated", e.count));
    c.within("free enumeration best", e.best.sinr_db, 21.32, 0.1);
    c.faster("free enumeration", took, Duration::from_secs(300));

    let config = DesignConfig {
        p: 14,
        mu_upper: 3.0,
        epsilon: 0.05,
        ..DesignConfig::default()
    };
    c.at_least("NFSDR", design(&scenario, &config)?.sinr_db, 20.9);

    let prefix = find_augmentable_prefix(24, 8, 0)?;
    c.check(
        is_fully_augmentable(&prefix, scenario.geometry())?,
        format!("prefix {prefix:?} fills the co-array"),
    );
    let hybrid = enumerate(&scenario, 14, &prefix, &OracleConfig::default())?;
    c.check(hybrid.count == 8008, format!("{} hybrid supports", hybrid.count));
    c.check(
        (17.4..=18.2).contains(&hybrid.worst.sinr_db),
        format!("hybrid bottom = {:.4} (≈ 17.5 to 18.1)", hybrid.worst.sinr_db),
    );
    c.within("hybrid top", hybrid.best.sinr_db, 21.3, 0.1);
    let fsdr = design(
        &scenario,
        &DesignConfig {
            mode: DesignMode::Fsdr,
            prefix: prefix.clone(),
            ..config
        },
    )?;
    c.check(
        prefix.iter().all(|i| fsdr.support.contains(i)),
        "FSDR keeps the prefix".into(),
    );
    c.check(
        hybrid.best.sinr_db - fsdr.sinr_db <= 0.5,
        format!(
            "FSDR = {:.4}, {:.4} dB below the hybrid optimum (≤ 0.5)",
            fsdr.sinr_db,
            hybrid.best.sinr_db - fsdr.sinr_db
        ),
    );
    Ok(c)
}

/// Column `x = 0` plus rows `y = 0` and `y = 6` of the 7×7 grid.
fn planar_prefix() -> Vec<usize> {
    let mut p: Vec<usize> = (0..49).filter(|i| i % 7 == 0 || i / 7 == 0 || i / 7 == 6).collect();
    p.sort_unstable();
    p
}

fn criterion_5() -> Outcome {
    let mut c = Criterion::new();
    let scenario = planar();
    let cov = build_covariances(&scenario)?;
    let bound = 10.0 * 24f64.log10();
    c.within("upper bound 10·log10(24)", bound, 13.80, 0.005);
    let quiet = Scenario::new(scenario.geometry().clone(), vec![scenario.sources()[0]])?;
    let quiet_cov = build_covariances(&quiet)?;
    let any24: Vec<usize> = (0..24).collect();
    let quiet_sinr = max_sinr_db(&subselect(&quiet_cov, &any24)?)?;
    c.check(
        (quiet_sinr - bound).abs() <= 1e-9,
        format!("interference-free 24-sensor SINR = {quiet_sinr:.4} (equals the bound to 1e-9)"),
    );

    let config = DesignConfig {
        p: 24,
        mu_upper: 3.0,
        epsilon: 0.05,
        ..DesignConfig::default()
    };
    let nfsdr = design_with_covariances(&cov, &config)?;
    c.at_least("NFSDR", nfsdr.sinr_db, 13.0);
    c.check(nfsdr.sinr_db <= bound + 1e-9, "NFSDR respects the bound".into());

    let prefix = planar_prefix();
    c.check(
        prefix.len() == 19 && is_fully_augmentable(&prefix, scenario.geometry())?,
        "19-sensor prefix fills the 2D co-array".into(),
    );
    let fsdr = design_with_covariances(
        &cov,
        &DesignConfig {
            mode: DesignMode::Fsdr,
            prefix: prefix.clone(),
            ..config
        },
    )?;
    c.at_least("FSDR", fsdr.sinr_db, 12.7);
    let hybrid = enumerate_covariances(&cov, 24, &prefix, &OracleConfig::default())?;
    c.check(hybrid.count == 142_506, format!("{} hybrid supports", hybrid.count));
    c.within("hybrid bottom", hybrid.worst.sinr_db, 11.4, 0.3);

    let compact: Vec<usize> = (0..49).filter(|i| i % 7 < 6 && i / 7 < 4).collect();
    c.within("6×4 compact array", max_sinr_db(&subselect(&cov, &compact)?)?, 7.8, 0.2);

    match enumerate_covariances(&cov, 24, &[], &OracleConfig::default()) {
        Err(e @ Error::BudgetExceeded { count, .. }) => {
            let msg = e.to_string();
            c.check(
                count == binomial(49, 24) && (1e13..1e15).contains(&(count as f64)) && msg.contains("e13"),
                format!("free enumeration refused: {msg}"),
            );
        }
        other => c.check(false, format!("free enumeration not refused: {:?}", other.map(|e| e.count))),
    }
    Ok(c)
}

fn random_scenario(rng: &mut ChaCha8Rng, n: usize, desired: usize) -> Scenario {
    let mut d = Vec::new();
    for _ in 0..desired {
        d.push((rng.random_range(0.0..180.0), rng.random_range(-5.0..20.0)));
    }
    let k = rng.random_range(0..6);
    let mut i = Vec::new();
    for _ in 0..k {
        i.push((rng.random_range(0.0..180.0), rng.random_range(0.0..30.0)));
    }
    linear(n, &d, &i)
}

fn criterion_6() -> Outcome {
    let mut c = Criterion::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let scale = |m: &CMatrix| m.iter().map(|z| z.norm()).fold(1.0, f64::max);

    let mut worst_defect = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(1..20);
        let desired = rng.random_range(1..4);
        let cov = build_covariances(&random_scenario(&mut rng, n, desired))?;
        for m in [&cov.r_s, &cov.r_sprime, &cov.r_xx] {
            worst_defect = worst_defect.max(hermitian_defect(m) / scale(m));
        }
        worst_eig = worst_eig.min(min_eigenvalue(&cov.r_s) / scale(&cov.r_s));
    }
    c.check(
        worst_defect <= 1e-12 && worst_eig >= -1e-9,
        format!("Hermitian defect {worst_defect:.1e}, min relative eigenvalue {worst_eig:.1e}"),
    );

    let mut worst_shift = 0.0f64;
    for _ in 0..50 {
        let positions: Vec<usize> = {
            let mut p: Vec<usize> = (0..30).filter(|_| rng.random_bool(0.3)).collect();
            p.extend([30, 31]);
            p
        };
        let shift = rng.random_range(1..40);
        let base = random_scenario(&mut rng, 2, 1);
        let sinr = |pos: Vec<usize>| -> Result<f64, Error> {
            let s = base.with_geometry(GridGeometry::from_positions_1d(pos, 0.5)?)?;
            Ok(max_sinr(&build_covariances(&s)?)?.0)
        };
        let a = sinr(positions.clone())?;
        let b = sinr(positions.iter().map(|p| p + shift).collect())?;
        worst_shift = worst_shift.max((a - b).abs() / a);
    }
    c.check(worst_shift <= 1e-9, format!("translation invariance rel error {worst_shift:.1e} (≤ 1e-9)"));

    let mut worst_route = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..16);
        let desired = rng.random_range(1..4);
        let cov = build_covariances(&random_scenario(&mut rng, n, desired))?;
        let weighted = output_sinr(&max_sinr_weights(&cov)?, &cov)?;
        worst_route = worst_route.max((max_sinr_db(&cov)? - weighted).abs());
    }
    c.check(worst_route <= 1e-8, format!("eigenvalue vs weight route {worst_route:.1e} dB (≤ 1e-8)"));

    let mut worst_residual = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(3..20);
        let mut support = vec![0, n - 1];
        for i in 1..n / 2 {
            if rng.random_bool(0.5) {
                support.extend([i, n - 1 - i]);
            }
        }
        if n % 2 == 1 && rng.random_bool(0.5) {
            support.push(n / 2);
        }
        support.sort_unstable();
        let scenario = random_scenario(&mut rng, n, 1);
        let cov = subselect(&build_covariances(&scenario)?, &support)?;
        let bf = max_sinr_weights(&cov)?.lift(&support)?;
        worst_residual = worst_residual.max(conjugate_symmetry_residual(&bf, scenario.geometry())?);
    }
    c.check(
        worst_residual <= 1e-6,
        format!("conjugate-symmetry residual {worst_residual:.1e} over 50 symmetric supports (≤ 1e-6)"),
    );

    let mut worst_sdr = 0.0f64;
    let mut worst_dominance = f64::INFINITY;
    for _ in 0..20 {
        let n = rng.random_range(2..9);
        let cov = build_covariances(&random_scenario(&mut rng, n, 1))?;
        let problem = SdrProblem::new(cov.r_xx.clone(), 0.0, DMatrix::zeros(n, n), vec![cov.r_s.clone()])?;
        let sol = solve_sdr(&problem, &SolverSettings::default())?;
        let expected = 1.0 + 1.0 / max_sinr(&cov)?.0;
        worst_sdr = worst_sdr.max((sol.objective - expected).abs() / expected);

        let b = DMatrix::from_fn(n, n, |i, j| 1.0 + ((i + j) % 3) as f64);
        let regularized = SdrProblem::new(cov.r_xx.clone(), 0.5, b, vec![cov.relative_signal()])?;
        let sol = solve_sdr(&regularized, &SolverSettings::default())?;
        for i in 0..n {
            for j in 0..n {
                worst_dominance = worst_dominance.min(sol.w_tilde[(i, j)] - sol.w[(i, j)].norm());
            }
        }
    }
    c.check(worst_sdr <= 1e-6, format!("μ = 0 objective vs 1 + 1/SINR rel error {worst_sdr:.1e} (≤ 1e-6)"));
    c.check(
        worst_dominance >= -1e-6,
        format!("min of W̃ − |W| = {worst_dominance:.1e} (≥ −1e-6)"),
    );

    let scenario = random_scenario(&mut rng, 10, 1);
    let config = DesignConfig {
        p: 5,
        mu_upper: 3.0,
        epsilon: 0.05,
        mode: DesignMode::Fsdr,
        prefix: vec![0, 9],
        seed: 3,
        ..DesignConfig::default()
    };
    let a = design(&scenario, &config)?;
    let b = design(&scenario, &config)?;
    c.check(
        a.support.contains(&0) && a.support.contains(&9) && a.support.len() == 5,
        format!("FSDR support {:?} contains the prefix [0, 9]", a.support),
    );
    c.check(a == b, "repeated FSDR runs are identical".into());
    Ok(c)
}

fn criterion_7() -> Outcome {
    let mut c = Criterion::new();
    let config = RunConfig::from_json(
        r#"{
          "scenario": {
            "geometry": { "kind": "linear", "n": 16 },
            "sources": [{ "theta": 90, "power_db": 10, "role": "desired" }]
          },
          "design": { "p": 8, "mu_lower": 0.01, "mu_upper": 3.0, "epsilon": 0.05, "gamma": 0.1 },
          "montecarlo": {
            "trials": 200, "interferers_min": 8, "interferers_max": 8,
            "doa_min_deg": 20, "doa_max_deg": 160, "inr_min_db": 10, "inr_max_db": 15,
            "seed": 0
          }
        }"#,
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let trials = run_trials(&config).map_err(|e| Error::Config(e.to_string()))?;
    let summary = summarize(&trials);
    let mean = |m: usize| summary[m].mean_sinr_db.unwrap_or(f64::NAN);
    let (enumeration, nfsdr, perturbed, random) = (mean(0), mean(1), mean(2), mean(5));
    c.check(trials.len() == 200, format!("{} trials", trials.len()));
    c.check(
        enumeration >= perturbed && perturbed >= nfsdr && nfsdr >= random,
        format!(
            "means: enumeration {enumeration:.4} ≥ perturbed {perturbed:.4} ≥ NFSDR {nfsdr:.4} ≥ random {random:.4}"
        ),
    );
    c.check(
        enumeration - perturbed <= 2.0,
        format!("enumeration − perturbed = {:.4} dB (≤ 2)", enumeration - perturbed),
    );
    Ok(c)
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 7] = [
        (1, "broadside single source", criterion_1),
        (2, "input SINR identities", criterion_2),
        (3, "multi-source fair gain", criterion_3),
        (4, "hybrid 1D", criterion_4),
        (5, "2D hybrid", criterion_5),
        (6, "property suites", criterion_6),
        (7, "reduced Monte Carlo", criterion_7),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, lines) = match run() {
            Ok(c) => (
                c.checks.iter().all(|(ok, _)| *ok),
                c.checks
                    .into_iter()
                    .map(|(ok, d)| format!("    [{}] {d}", if ok { "ok" } else { "x" }))
                    .collect(),
            ),
            Err(e) => (false, vec![format!("    [x] error: {e}")]),
        };
        let known = KNOWN_RED.contains(&id);
        let tag = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id}: {name} ({:.1} s)", start.elapsed().as_secs_f64());
        for l in lines {
            println!("{l}");
        }
        if !ok && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
