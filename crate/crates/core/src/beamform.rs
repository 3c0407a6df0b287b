//! Closed-form max-SINR beamforming, SINR metrics and beampatterns.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonicalize_phase, flip, generalized_principal, quad_form, C64, CVector};
use crate::scene::{check_support, steering_vector, subselect, CovarianceSet, GridGeometry, SourceSpec};

/// Weights applied to a subset of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    support: Vec<usize>,
    weights: CVector,
}

impl Beamformer {
    pub fn new(support: Vec<usize>, weights: CVector) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::Support(format!(
                "{} indices but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::Support("support is empty".into()));
        }
        if weights.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Err(Error::Numeric("weights are identically zero".into()));
        }
        if weights.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numeric("weights are not finite".into()));
        }
        Ok(Self { support, weights })
    }

    /// Beamformer over the full set `0..weights.len()`.
    pub fn dense(weights: CVector) -> Result<Self> {
        Self::new((0..weights.len()).collect(), weights)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &CVector {
        &self.weights
    }

    /// Places the beamformer, defined relative to `outer`, onto the grid.
    pub fn lift(&self, outer: &[usize]) -> Result<Self> {
        let support = self
            .support
            .iter()
            .map(|&i| {
                outer
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::Support(format!("index {i} outside the outer support")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(support, self.weights.clone())
    }

    pub fn scaled(&self, alpha: C64) -> Result<Self> {
        Self::new(self.support.clone(), &self.weights * alpha)
    }
}

/// Λmax of R_s' ⁻¹ R_s in linear scale, with its unit-norm eigenvector.
pub fn max_sinr(cov: &CovarianceSet) -> Result<(f64, CVector)> {
    generalized_principal(&cov.r_s, &cov.r_sprime)
}

/// Optimal SINR of the given covariances in dB.
pub fn max_sinr_db(cov: &CovarianceSet) -> Result<f64> {
    Ok(10.0 * max_sinr(cov)?.0.log10())
}

/// Principal eigenvector of R_s' ⁻¹ R_s over every sensor of `cov`, unit
/// norm with the first non-negligible entry real and positive.
pub fn max_sinr_weights(cov: &CovarianceSet) -> Result<Beamformer> {
    let (_, mut w) = max_sinr(cov)?;
    canonicalize_phase(&mut w);
    Beamformer::dense(w)
}

fn covariance_for<'a>(
    bf: &Beamformer,
    cov: &'a CovarianceSet,
) -> Result<std::borrow::Cow<'a, CovarianceSet>> {
    let n = bf.weights.len();
    if cov.dim() == n {
        Ok(std::borrow::Cow::Borrowed(cov))
    } else {
        check_support(&bf.support, cov.dim())?;
        Ok(std::borrow::Cow::Owned(subselect(cov, &bf.support)?))
    }
}

/// Output SINR in dB, `wᴴ R_s w / wᴴ R_s' w`.
///
/// `cov` may either match the weight length, or be the grid covariance, in
/// which case it is restricted to the beamformer support first.
pub fn output_sinr(bf: &Beamformer, cov: &CovarianceSet) -> Result<f64> {
    let cov = covariance_for(bf, cov)?;
    let num = quad_form(&cov.r_s, &bf.weights);
    let den = quad_form(&cov.r_sprime, &bf.weights);
    if !(den > 0.0) {
        return Err(Error::Numeric("non-positive interference-plus-noise power".into()));
    }
    Ok(10.0 * (num / den).log10())
}

/// Per-desired-source gain `|wᴴ s_k|²` in dB.
pub fn desired_gains_db(bf: &Beamformer, cov: &CovarianceSet) -> Result<Vec<f64>> {
    let cov = covariance_for(bf, cov)?;
    Ok(cov
        .desired_steering
        .iter()
        .map(|s| 10.0 * bf.weights.dotc(s).norm_sqr().log10())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternPoint {
    pub angle_deg: f64,
    pub gain_db: f64,
    pub gain_db_normalized: f64,
}

/// Array response `|wᴴ s(θ)|²` over `angles` (degrees). Planar arrays are
/// cut at the fixed azimuth `phi`.
pub fn beampattern(
    geometry: &GridGeometry,
    bf: &Beamformer,
    angles: &[f64],
    phi: Option<f64>,
) -> Result<Vec<PatternPoint>> {
    if angles.is_empty() {
        return Err(Error::Config("beampattern needs at least one angle".into()));
    }
    let sub = geometry.restrict(&bf.support)?;
    let gains = angles
        .iter()
        .map(|&theta| {
            let source = SourceSpec {
                phi,
                ..SourceSpec::desired(theta, 0.0)
            };
            let s = steering_vector(&sub, &source)?;
            Ok(bf.weights.dotc(&s).norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = gains.iter().copied().fold(0.0, f64::max);
    Ok(angles
        .iter()
        .zip(gains)
        .map(|(&angle_deg, g)| PatternPoint {
            angle_deg,
            gain_db: 10.0 * g.log10(),
            gain_db_normalized: 10.0 * (g / peak).log10(),
        })
        .collect())
}

/// CSV with header `angle_deg,gain_db,gain_db_normalized`.
pub fn beampattern_csv(points: &[PatternPoint]) -> String {
    let mut out = String::from("angle_deg,gain_db,gain_db_normalized\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.angle_deg, p.gain_db, p.gain_db_normalized);
    }
    out
}

/// Checks that `positions` (in support order) is centro-symmetric with
/// the reversal of that order as the reflection.
fn is_centro_symmetric(positions: &[[usize; 2]]) -> bool {
    let n = positions.len();
    let cx = positions[0][0] + positions[n - 1][0];
    let cy = positions[0][1] + positions[n - 1][1];
    (0..n).all(|i| {
        let (a, b) = (positions[i], positions[n - 1 - i]);
        a[0] + b[0] == cx && a[1] + b[1] == cy
    })
}

/// `min_c ‖w − c·J·w̄‖ / ‖w‖` over unit-modulus `c`, with `J` the exchange
/// operator on the support sorted by grid index.
pub fn conjugate_symmetry_residual(bf: &Beamformer, geometry: &GridGeometry) -> Result<f64> {
    check_support(&bf.support, geometry.len())?;
    let mut order: Vec<usize> = (0..bf.support.len()).collect();
    order.sort_by_key(|&i| bf.support[i]);
    let positions: Vec<[usize; 2]> = order
        .iter()
        .map(|&i| geometry.positions()[bf.support[i]])
        .collect();
    if !is_centro_symmetric(&positions) {
        let mut sorted: Vec<usize> = order.iter().map(|&i| bf.support[i]).collect();
        sorted.sort_unstable();
        return Err(Error::NotCentroSymmetric(sorted));
    }
    let w = CVector::from_iterator(order.len(), order.iter().map(|&i| bf.weights[i]));
    let u = flip(&w.map(|z| z.conj()));
    let inner = u.dotc(&w);
    let c = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    Ok((&w - &u * c).norm() / w.norm())
}
