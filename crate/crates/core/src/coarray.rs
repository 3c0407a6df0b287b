//! Difference co-arrays, full augmentability and the search for fully
//! augmentable (minimum-redundancy style) prefixes.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{check_support, Dimensionality, GridGeometry};

/// Lag `(dx, dy)` between two sensors; linear arrays use `dy = 0`.
pub type Lag = (i64, i64);

/// Difference co-array restricted to its canonical half: `dx > 0`, or
/// `dx = 0` and `dy ≥ 0`. The zero lag counts every sensor once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagProfile {
    pub dimensionality: Dimensionality,
    /// Multiplicity of each canonical lag, in increasing `(dx, dy)` order.
    pub lags: BTreeMap<Lag, usize>,
    /// Bounding box of the grid the support lives on, `(nx, ny)`.
    pub aperture: (usize, usize),
}

fn canonical(dx: i64, dy: i64) -> Lag {
    if dx > 0 || (dx == 0 && dy >= 0) {
        (dx, dy)
    } else {
        (-dx, -dy)
    }
}

impl LagProfile {
    pub fn multiplicity(&self, lag: Lag) -> usize {
        self.lags.get(&canonical(lag.0, lag.1)).copied().unwrap_or(0)
    }

    /// Every canonical lag the aperture can produce.
    pub fn required(&self) -> Vec<Lag> {
        let (nx, ny) = (self.aperture.0 as i64, self.aperture.1 as i64);
        let mut out = Vec::new();
        for dx in 0..nx {
            for dy in -(ny - 1)..ny {
                if dx > 0 || dy > 0 {
                    out.push((dx, dy));
                }
            }
        }
        out
    }

    /// Canonical lags of the aperture that no sensor pair realizes.
    pub fn missing(&self) -> Vec<Lag> {
        self.required()
            .into_iter()
            .filter(|l| !self.lags.contains_key(l))
            .collect()
    }

    pub fn is_fully_augmentable(&self) -> bool {
        self.missing().is_empty()
    }
}

/// All pairwise differences of the sensors in `support` with multiplicity.
pub fn difference_coarray(support: &[usize], geometry: &GridGeometry) -> Result<LagProfile> {
    check_support(support, geometry.len())?;
    let pos: Vec<[i64; 2]> = support
        .iter()
        .map(|&i| {
            let p = geometry.positions()[i];
            [p[0] as i64, p[1] as i64]
        })
        .collect();
    let mut lags = BTreeMap::new();
    lags.insert((0, 0), pos.len());
    for (a, pa) in pos.iter().enumerate() {
        for pb in &pos[a + 1..] {
            *lags
                .entry(canonical(pb[0] - pa[0], pb[1] - pa[1]))
                .or_insert(0) += 1;
        }
    }
    Ok(LagProfile {
        dimensionality: geometry.dimensionality(),
        lags,
        aperture: geometry.extent(),
    })
}

/// Whether `support` realizes every lag of the grid's bounding box.
pub fn is_fully_augmentable(support: &[usize], geometry: &GridGeometry) -> Result<bool> {
    Ok(difference_coarray(support, geometry)?.is_fully_augmentable())
}

struct Search {
    n: usize,
    target: usize,
    order: Vec<usize>,
    chosen: Vec<usize>,
    /// Bit `d` set when lag `d` is covered.
    covered: u128,
}

impl Search {
    fn lags_from(&self, x: usize) -> u128 {
        self.chosen
            .iter()
            .fold(0u128, |acc, &c| acc | 1u128 << c.abs_diff(x))
            & !1
    }

    fn missing(&self) -> u32 {
        let full = if self.n >= 128 { u128::MAX } else { (1u128 << self.n) - 1 };
        (full & !self.covered & !1).count_ones()
    }

    fn run(&mut self, start: usize) -> bool {
        let missing = self.missing() as usize;
        if missing == 0 && self.chosen.len() <= self.target {
            return true;
        }
        let k = self.chosen.len();
        let r = self.target - k;
        if r == 0 || missing > r * k + r * (r - 1) / 2 {
            return false;
        }
        for idx in start..self.order.len() {
            let x = self.order[idx];
            let saved = self.covered;
            self.covered |= self.lags_from(x);
            self.chosen.push(x);
            if self.run(idx + 1) {
                return true;
            }
            self.chosen.pop();
            self.covered = saved;
        }
        false
    }
}

/// A `p`-sensor subset of `0..n` containing both ends whose difference
/// co-array covers every lag `1..n`. Backtracking over a seed-shuffled
/// candidate order, pruned by the number of lags the remaining sensors can
/// still add.
///
/// The returned support has exactly `p` sensors; if a cover is found with
/// fewer, the remaining sensors are filled in from the same shuffled order.
pub fn find_augmentable_prefix(n: usize, p: usize, seed: u64) -> Result<Vec<usize>> {
    let fail = || Error::NoAugmentablePrefix {
        aperture: n,
        sensors: p,
    };
    if n == 0 || n > 128 || p > n || p == 0 {
        return Err(fail());
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    if p < 2 || p * (p - 1) / 2 < n - 1 {
        return Err(fail());
    }
    let mut order: Vec<usize> = (1..n - 1).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut search = Search {
        n,
        target: p,
        order: order.clone(),
        chosen: vec![0, n - 1],
        covered: 1u128 << (n - 1),
    };
    if !search.run(0) {
        return Err(fail());
    }
    let mut support = search.chosen;
    for x in order {
        if support.len() == p {
            break;
        }
        if !support.contains(&x) {
            support.push(x);
        }
    }
    support.sort_unstable();
    Ok(support)
}
