//! Array geometries, source environments and the correlation matrices they
//! induce.
//!
//! Angles are in degrees. For a linear array `theta` is measured from the
//! array axis (broadside is 90°). For a planar array `theta` is the elevation
//! measured from the plane carrying the array and `phi` the azimuth, so the
//! in-plane direction cosines are `cos θ cos φ` and `cos θ sin φ`. Powers are
//! in dB relative to a unit noise floor.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{outer, C64, CMatrix, CVector};

/// Whether the candidate lattice is a line or a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimensionality {
    Linear,
    Planar,
}

impl Dimensionality {
    pub fn rank(self) -> usize {
        match self {
            Dimensionality::Linear => 1,
            Dimensionality::Planar => 2,
        }
    }
}

/// Candidate sensor lattice. Coordinates are integer multiples of `spacing`
/// (in wavelengths); linear arrays keep `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    positions: Vec<[usize; 2]>,
    spacing: f64,
    dimensionality: Dimensionality,
}

impl GridGeometry {
    /// Uniform linear grid with `n` points.
    pub fn linear(n: usize, spacing: f64) -> Result<Self> {
        Self::from_positions_1d((0..n).collect(), spacing)
    }

    /// Uniform `nx × ny` rectangular grid, indexed row by row
    /// (`index = y * nx + x`).
    pub fn planar(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        let positions = (0..ny)
            .flat_map(|y| (0..nx).map(move |x| [x, y]))
            .collect();
        Self::from_positions_2d(positions, spacing)
    }

    pub fn from_positions_1d(positions: Vec<usize>, spacing: f64) -> Result<Self> {
        Self::new(
            positions.into_iter().map(|x| [x, 0]).collect(),
            spacing,
            Dimensionality::Linear,
        )
    }

    pub fn from_positions_2d(positions: Vec<[usize; 2]>, spacing: f64) -> Result<Self> {
        Self::new(positions, spacing, Dimensionality::Planar)
    }

    fn new(positions: Vec<[usize; 2]>, spacing: f64, dimensionality: Dimensionality) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Geometry("at least one grid position is required".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Geometry(format!("spacing must be positive, got {spacing}")));
        }
        let mut seen = positions.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != positions.len() {
            return Err(Error::Geometry("grid positions must be distinct".into()));
        }
        Ok(Self {
            positions,
            spacing,
            dimensionality,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[usize; 2]] {
        &self.positions
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dimensionality(&self) -> Dimensionality {
        self.dimensionality
    }

    /// Extent of the lattice bounding box in grid points, `(nx, ny)`.
    pub fn extent(&self) -> (usize, usize) {
        let nx = self.positions.iter().map(|p| p[0]).max().unwrap_or(0) + 1;
        let ny = self.positions.iter().map(|p| p[1]).max().unwrap_or(0) + 1;
        (nx, ny)
    }

    /// Geometry made of the listed grid points, in the given order.
    pub fn restrict(&self, support: &[usize]) -> Result<Self> {
        check_support(support, self.len())?;
        Self::new(
            support.iter().map(|&i| self.positions[i]).collect(),
            self.spacing,
            self.dimensionality,
        )
    }

    /// Index of the grid point at `position`, if present.
    pub fn index_of(&self, position: [usize; 2]) -> Option<usize> {
        self.positions.iter().position(|&p| p == position)
    }
}

/// Role of a plane-wave source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceRole {
    Desired,
    Interferer,
}

/// A narrowband plane-wave source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Degrees; axis angle (linear) or elevation above the array plane (planar).
    pub theta: f64,
    /// Azimuth in degrees, planar arrays only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// SNR for desired sources, INR for interferers.
    pub power_db: f64,
    pub role: SourceRole,
}

impl SourceSpec {
    pub fn desired(theta: f64, power_db: f64) -> Self {
        Self {
            theta,
            phi: None,
            power_db,
            role: SourceRole::Desired,
        }
    }

    pub fn interferer(theta: f64, power_db: f64) -> Self {
        Self {
            theta,
            phi: None,
            power_db,
            role: SourceRole::Interferer,
        }
    }

    pub fn with_azimuth(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn linear_power(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }

    fn validate(&self, index: usize, dims: Dimensionality) -> Result<()> {
        let bad = |reason: String| Error::Source { index, reason };
        if !self.power_db.is_finite() {
            return Err(bad("power must be finite".into()));
        }
        if !(0.0..=180.0).contains(&self.theta) {
            return Err(bad(format!("theta {} outside [0, 180]", self.theta)));
        }
        match (dims, self.phi) {
            (Dimensionality::Linear, Some(_)) => Err(Error::Dimensionality("azimuth", 1)),
            (Dimensionality::Planar, None) => Err(bad("planar geometry needs an azimuth".into())),
            (Dimensionality::Planar, Some(phi)) if !phi.is_finite() => {
                Err(bad("azimuth must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Sources over a geometry, with the noise floor fixed at unit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    geometry: GridGeometry,
    sources: Vec<SourceSpec>,
}

impl Scenario {
    pub const NOISE_POWER: f64 = 1.0;

    pub fn new(geometry: GridGeometry, sources: Vec<SourceSpec>) -> Result<Self> {
        for (i, s) in sources.iter().enumerate() {
            s.validate(i, geometry.dimensionality())?;
        }
        if !sources.iter().any(|s| s.role == SourceRole::Desired) {
            return Err(Error::NoDesiredSource);
        }
        Ok(Self { geometry, sources })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn desired(&self) -> impl Iterator<Item = &SourceSpec> {
        self.sources.iter().filter(|s| s.role == SourceRole::Desired)
    }

    pub fn interferers(&self) -> impl Iterator<Item = &SourceSpec> {
        self.sources.iter().filter(|s| s.role == SourceRole::Interferer)
    }

    /// Same sources seen by the sub-array `support`.
    pub fn restrict(&self, support: &[usize]) -> Result<Self> {
        Ok(Self {
            geometry: self.geometry.restrict(support)?,
            sources: self.sources.clone(),
        })
    }

    /// The same scenario on a different geometry of the same dimensionality.
    pub fn with_geometry(&self, geometry: GridGeometry) -> Result<Self> {
        Self::new(geometry, self.sources.clone())
    }
}

/// Unit-modulus array response to a plane wave from `source`.
pub fn steering_vector(geometry: &GridGeometry, source: &SourceSpec) -> Result<CVector> {
    let theta = source.theta.to_radians();
    let (ux, uy) = match (geometry.dimensionality(), source.phi) {
        (Dimensionality::Linear, None) => (theta.cos(), 0.0),
        (Dimensionality::Linear, Some(_)) => return Err(Error::Dimensionality("azimuth", 1)),
        (Dimensionality::Planar, Some(phi)) => {
            let phi = phi.to_radians();
            (theta.cos() * phi.cos(), theta.cos() * phi.sin())
        }
        (Dimensionality::Planar, None) => {
            return Err(Error::Config("planar steering needs an azimuth".into()))
        }
    };
    let k = 2.0 * PI * geometry.spacing();
    Ok(CVector::from_iterator(
        geometry.len(),
        geometry.positions().iter().map(|p| {
            let phase = k * (p[0] as f64 * ux + p[1] as f64 * uy);
            C64::from_polar(1.0, phase)
        }),
    ))
}

/// Correlation matrices of a scenario.
///
/// `r_xx = r_s + r_sprime` holds exactly; `r_k` are the unit-power rank-one
/// matrices of the individual desired sources.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub r_s: CMatrix,
    pub r_sprime: CMatrix,
    pub r_xx: CMatrix,
    pub r_k: Vec<CMatrix>,
    /// Steering vectors of the desired sources, aligned with `r_k`.
    pub desired_steering: Vec<CVector>,
    /// Linear powers of the desired sources, aligned with `r_k`.
    pub desired_powers: Vec<f64>,
}

impl CovarianceSet {
    pub fn dim(&self) -> usize {
        self.r_xx.nrows()
    }

    /// `r_s` scaled so the strongest desired source has unit power.
    pub fn relative_signal(&self) -> CMatrix {
        let peak = self.desired_powers.iter().copied().fold(0.0, f64::max);
        &self.r_s / C64::new(peak, 0.0)
    }
}

pub fn build_covariances(scenario: &Scenario) -> Result<CovarianceSet> {
    let n = scenario.geometry().len();
    let mut r_s = CMatrix::zeros(n, n);
    let mut r_sprime = CMatrix::identity(n, n) * C64::new(Scenario::NOISE_POWER, 0.0);
    let mut r_k = Vec::new();
    let mut desired_steering = Vec::new();
    let mut desired_powers = Vec::new();
    for source in scenario.sources() {
        let s = steering_vector(scenario.geometry(), source)?;
        let unit = outer(&s, &s);
        let power = C64::new(source.linear_power(), 0.0);
        match source.role {
            SourceRole::Desired => {
                r_s += &unit * power;
                r_k.push(unit);
                desired_steering.push(s);
                desired_powers.push(source.linear_power());
            }
            SourceRole::Interferer => r_sprime += &unit * power,
        }
    }
    let r_xx = &r_s + &r_sprime;
    Ok(CovarianceSet {
        r_s,
        r_sprime,
        r_xx,
        r_k,
        desired_steering,
        desired_powers,
    })
}

/// Simulated array snapshots and their sample covariance.
#[derive(Debug, Clone)]
pub struct Snapshots {
    /// `N × T` matrix, one snapshot per column.
    pub data: CMatrix,
    /// `(1/T) X Xᴴ`.
    pub sample_covariance: CMatrix,
}

/// Draws `t` snapshots of the narrowband model with circular complex
/// Gaussian source amplitudes and noise.
pub fn synthesize_snapshots(scenario: &Scenario, t: usize, seed: u64) -> Result<Snapshots> {
    if t == 0 {
        return Err(Error::Config("at least one snapshot is required".into()));
    }
    let n = scenario.geometry().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cgauss = |power: f64| -> C64 {
        let scale = (power / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * scale, im * scale)
    };
    let steering = scenario
        .sources()
        .iter()
        .map(|s| Ok((steering_vector(scenario.geometry(), s)?, s.linear_power())))
        .collect::<Result<Vec<_>>>()?;

    let mut data = CMatrix::zeros(n, t);
    for col in 0..t {
        let mut x = CVector::from_fn(n, |_, _| cgauss(Scenario::NOISE_POWER));
        for (s, power) in &steering {
            let amp = cgauss(*power);
            x.axpy(amp, s, C64::new(1.0, 0.0));
        }
        data.set_column(col, &x);
    }
    let sample_covariance = (&data * data.adjoint()) / C64::new(t as f64, 0.0);
    Ok(Snapshots {
        data,
        sample_covariance,
    })
}

pub(crate) fn check_support(support: &[usize], n: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Support("support is empty".into()));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= n) {
        return Err(Error::Support(format!("index {bad} out of range for {n} sensors")));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != support.len() {
        return Err(Error::Support("indices must be distinct".into()));
    }
    Ok(())
}

fn select(m: &CMatrix, support: &[usize]) -> CMatrix {
    DMatrix::from_fn(support.len(), support.len(), |r, c| m[(support[r], support[c])])
}

/// Restricts every matrix of `cov` to the rows and columns in `support`,
/// preserving order.
pub fn subselect(cov: &CovarianceSet, support: &[usize]) -> Result<CovarianceSet> {
    check_support(support, cov.dim())?;
    Ok(CovarianceSet {
        r_s: select(&cov.r_s, support),
        r_sprime: select(&cov.r_sprime, support),
        r_xx: select(&cov.r_xx, support),
        r_k: cov.r_k.iter().map(|m| select(m, support)).collect(),
        desired_steering: cov
            .desired_steering
            .iter()
            .map(|s| CVector::from_iterator(support.len(), support.iter().map(|&i| s[i])))
            .collect(),
        desired_powers: cov.desired_powers.clone(),
    })
}
