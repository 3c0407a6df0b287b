//! Design, enumeration, beampattern and co-array subcommands.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sparsearray::beamform::{beampattern as pattern, beampattern_csv, max_sinr_weights, output_sinr, Beamformer};
use sparsearray::coarray::difference_coarray;
use sparsearray::conic::matio::dump_sdr;
use sparsearray::conic::solve_sdr;
use sparsearray::design::{design as run_design, reduced_problem};
use sparsearray::linalg::{CVector, C64};
use sparsearray::oracle::{enumerate as run_enumerate, ranking_csv};
use sparsearray::scene::{build_covariances, subselect};

use crate::config::RunConfig;
use crate::CliError;

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: dir.join(name),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(name), contents).map_err(io)
}

/// Pretty JSON `{ "config": ..., key: value }` with a trailing newline.
pub(crate) fn json_with_config<T: Serialize>(config: &RunConfig, key: &str, value: &T) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    doc.insert(key.into(), serde_json::to_value(value).expect("result serializes"));
    let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
    text.push('\n');
    text
}

fn join(support: &[usize]) -> String {
    support.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn design(config: &RunConfig) -> Result<String, CliError> {
    let scenario = config.scenario.build()?;
    let result = run_design(&scenario, &config.design)?;
    let dir = &config.output.dir;
    write_file(dir, "design.json", &json_with_config(config, "result", &result))?;

    let cov = build_covariances(&scenario)?;
    let problem = reduced_problem(&cov, &result.support, config.design.fair_gain)?;
    let solution = solve_sdr(&problem, &config.design.solver)?;
    let dump = format!("% config: {}\n{}", config.provenance(), dump_sdr(&problem, &solution));
    write_file(dir, "design_sdr.txt", &dump)?;

    let mut out = String::new();
    let _ = writeln!(out, "support: {}", join(&result.support));
    let _ = writeln!(out, "sinr_db: {:.4}", result.sinr_db);
    match result.mu_final {
        Some(mu) => {
            let _ = writeln!(out, "mu: {mu:.6}{}", if result.fallback { " (fallback)" } else { "" });
        }
        None => {
            let _ = writeln!(out, "mu: none");
        }
    }
    let _ = writeln!(out, "sdr solves: {}", result.trace.len());
    Ok(out)
}

pub fn enumerate(config: &RunConfig) -> Result<String, CliError> {
    let scenario = config.scenario.build()?;
    let oracle = config.oracle.oracle_config();
    let result = run_enumerate(&scenario, config.design.p, &config.oracle.prefix, &oracle)?;
    let dir = &config.output.dir;
    write_file(dir, "enumeration.json", &json_with_config(config, "enumeration", &result))?;
    if let Some(ranking) = &result.ranking {
        let csv = format!("# config: {}\n{}", config.provenance(), ranking_csv(ranking));
        write_file(dir, "ranking.csv", &csv)?;
    }
    let mut out = String::new();
    let _ = writeln!(out, "supports: {}", result.count);
    let _ = writeln!(out, "best: {} ({:.4} dB)", join(&result.best.support), result.best.sinr_db);
    let _ = writeln!(out, "worst: {} ({:.4} dB)", join(&result.worst.support), result.worst.sinr_db);
    Ok(out)
}

pub fn beampattern(config: &RunConfig) -> Result<String, CliError> {
    let bp = &config.beampattern;
    let scenario = config.scenario.build()?;
    let n = scenario.geometry().len();
    let support: Vec<usize> = if bp.support.is_empty() {
        (0..n).collect()
    } else {
        bp.support.clone()
    };
    let grid = build_covariances(&scenario)?;
    let bf = match &bp.weights {
        Some(w) => {
            let weights = CVector::from_iterator(w.len(), w.iter().map(|&[re, im]| C64::new(re, im)));
            Beamformer::new(support, weights)?
        }
        None => max_sinr_weights(&subselect(&grid, &support)?)?.lift(&support)?,
    };
    if !(bp.step_deg > 0.0 && bp.start_deg <= bp.stop_deg) {
        return Err(CliError::Config(
            "beampattern needs step_deg > 0 and start_deg <= stop_deg".into(),
        ));
    }
    let steps = ((bp.stop_deg - bp.start_deg) / bp.step_deg + 1e-9).floor() as usize;
    let angles: Vec<f64> = (0..=steps).map(|i| bp.start_deg + i as f64 * bp.step_deg).collect();
    let points = pattern(scenario.geometry(), &bf, &angles, bp.phi)?;
    let csv = format!("# config: {}\n{}", config.provenance(), beampattern_csv(&points));
    write_file(&config.output.dir, "beampattern.csv", &csv)?;

    Ok(format!(
        "points: {}\noutput sinr_db: {:.4}\n",
        points.len(),
        output_sinr(&bf, &grid)?
    ))
}

pub fn coarray(config: &RunConfig) -> Result<String, CliError> {
    let scenario = config.scenario.build()?;
    let geometry = scenario.geometry();
    let support: Vec<usize> = if config.coarray.support.is_empty() {
        (0..geometry.len()).collect()
    } else {
        config.coarray.support.clone()
    };
    let profile = difference_coarray(&support, geometry)?;
    let missing = profile.missing();
    let lags: Vec<[i64; 3]> = profile
        .lags
        .iter()
        .map(|(&(dx, dy), &m)| [dx, dy, m as i64])
        .collect();
    let report = json!({
        "support": support,
        "aperture": [profile.aperture.0, profile.aperture.1],
        "fully_augmentable": missing.is_empty(),
        "lags": lags,
        "missing": missing.iter().map(|&(dx, dy)| [dx, dy]).collect::<Vec<_>>(),
    });
    write_file(&config.output.dir, "coarray.json", &json_with_config(config, "coarray", &report))?;

    let fmt_lag = |&(dx, dy): &(i64, i64)| match profile.dimensionality {
        sparsearray::scene::Dimensionality::Linear => dx.to_string(),
        sparsearray::scene::Dimensionality::Planar => format!("({dx},{dy})"),
    };
    Ok(if missing.is_empty() {
        "fully augmentable\n".to_string()
    } else {
        format!(
            "not fully augmentable, missing lags {}\n",
            missing.iter().map(fmt_lag).collect::<Vec<_>>().join(",")
        )
    })
}
