//! Exhaustive enumeration of `P`-sensor supports, optionally containing a
//! fixed prefix, ranked by closed-form optimal SINR.
//!
//! Supports are visited in lexicographic order of their free indices. The
//! index space is split into contiguous rank ranges that are processed in
//! parallel on the current rayon pool; results do not depend on the split.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::max_sinr;
use crate::error::{Error, Result};
use crate::linalg::{C64, CVector};
use crate::scene::{build_covariances, check_support, subselect, CovarianceSet, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Largest number of supports that will be enumerated.
    pub budget: u128,
    /// How many of the best and worst supports to keep.
    pub k: usize,
    /// Keep every support, sorted from best to worst.
    pub full_ranking: bool,
    /// Use `σ² sᴴ R_s'⁻¹ s` with incremental Cholesky updates when there is a
    /// single desired source.
    pub fast_path: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            k: 10,
            full_ranking: false,
            fast_path: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSupport {
    pub support: Vec<usize>,
    pub sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub count: u128,
    pub best: RankedSupport,
    pub worst: RankedSupport,
    /// Best first.
    pub top: Vec<RankedSupport>,
    /// Worst first.
    pub bottom: Vec<RankedSupport>,
    /// Every support, best first, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<RankedSupport>>,
}

/// `C(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of `p`-sensor supports of an `n`-point grid containing a fixed
/// prefix of `prefix_len` sensors.
pub fn count_supports(n: usize, p: usize, prefix_len: usize) -> u128 {
    if prefix_len > p {
        return 0;
    }
    binomial(n - prefix_len, p - prefix_len)
}

/// Writes the lexicographic combination of rank `rank` (choosing `m` of
/// `0..f`) into `out`.
fn unrank(mut rank: u128, f: usize, m: usize, out: &mut [usize]) {
    let mut next = 0;
    for i in 0..m {
        let mut c = next;
        loop {
            let block = binomial(f - c - 1, m - i - 1);
            if rank < block {
                break;
            }
            rank -= block;
            c += 1;
        }
        out[i] = c;
        next = c + 1;
    }
}

/// Advances `comb` to its lexicographic successor; returns the first changed
/// position, or `None` past the last combination.
fn advance(comb: &mut [usize], f: usize) -> Option<usize> {
    let m = comb.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if comb[i] < f - m + i {
            comb[i] += 1;
            for j in i + 1..m {
                comb[j] = comb[j - 1] + 1;
            }
            return Some(i);
        }
    }
    None
}

#[derive(Clone, Copy)]
struct Scored {
    mask: u64,
    sinr: f64,
}

fn lex_cmp(a: u64, b: u64) -> Ordering {
    // Ascending index lists of equal length: the first differing index
    // decides, and the list holding the smaller index sorts first.
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let low = diff.trailing_zeros();
    if a >> low & 1 == 1 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Best first; ties broken by index-lexicographic order.
fn best_first(a: &Scored, b: &Scored) -> Ordering {
    b.sinr.total_cmp(&a.sinr).then(lex_cmp(a.mask, b.mask))
}

fn worst_first(a: &Scored, b: &Scored) -> Ordering {
    a.sinr.total_cmp(&b.sinr).then(lex_cmp(a.mask, b.mask))
}

/// Keeps the `k` smallest items under `cmp`.
struct Keep {
    k: usize,
    items: Vec<Scored>,
    cmp: fn(&Scored, &Scored) -> Ordering,
}

impl Keep {
    fn new(k: usize, cmp: fn(&Scored, &Scored) -> Ordering) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
            cmp,
        }
    }

    fn push(&mut self, s: Scored) {
        if self.items.len() == self.k {
            match self.items.last() {
                Some(last) if (self.cmp)(&s, last) == Ordering::Less => {}
                _ => return,
            }
        }
        let at = self
            .items
            .partition_point(|x| (self.cmp)(x, &s) != Ordering::Greater);
        self.items.insert(at, s);
        self.items.truncate(self.k);
    }

    fn merge(mut self, other: Keep) -> Keep {
        for s in other.items {
            self.push(s);
        }
        self
    }
}

struct ChunkResult {
    top: Keep,
    bottom: Keep,
    all: Vec<Scored>,
}

/// In-place Cholesky factor of a Hermitian positive definite matrix with
/// rows added one at a time, plus the forward solve `L y = s`.
struct IncrementalChol {
    p: usize,
    l: Vec<C64>,
    y: Vec<C64>,
}

impl IncrementalChol {
    fn new(p: usize) -> Self {
        Self {
            p,
            l: vec![C64::new(0.0, 0.0); p * p],
            y: vec![C64::new(0.0, 0.0); p],
        }
    }

    /// Recomputes row `r` of the factor from `a(r, c)` for `c ≤ r`.
    fn row(&mut self, r: usize, a: impl Fn(usize) -> C64, s: C64) -> bool {
        let p = self.p;
        for c in 0..r {
            let mut acc = a(c);
            for k in 0..c {
                acc -= self.l[r * p + k] * self.l[c * p + k].conj();
            }
            self.l[r * p + c] = acc / self.l[c * p + c].re;
        }
        let mut d = a(r).re;
        for k in 0..r {
            d -= self.l[r * p + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        self.l[r * p + r] = C64::new(d, 0.0);
        let mut acc = s;
        for k in 0..r {
            acc -= self.l[r * p + k] * self.y[k];
        }
        self.y[r] = acc / d;
        true
    }

    fn energy(&self) -> f64 {
        self.y.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn run_chunk(
    cov: &CovarianceSet,
    prefix: &[usize],
    free: &[usize],
    m: usize,
    range: (u128, u128),
    config: &OracleConfig,
    fast: bool,
) -> Result<ChunkResult> {
    let mut out = ChunkResult {
        top: Keep::new(config.k.max(1), best_first),
        bottom: Keep::new(config.k.max(1), worst_first),
        all: Vec::new(),
    };
    let f = free.len();
    let mut comb = vec![0usize; m];
    unrank(range.0, f, m, &mut comb);
    let np = prefix.len();
    let p = np + m;
    let mut support = vec![0usize; p];
    support[..np].copy_from_slice(prefix);

    let mut chol = IncrementalChol::new(p);
    let (steer, power) = if fast {
        (cov.desired_steering[0].clone(), cov.desired_powers[0])
    } else {
        (CVector::zeros(0), 0.0)
    };
    let prefix_mask: u64 = prefix.iter().fold(0, |acc, &i| acc | 1 << i);

    let mut first_changed = 0;
    let mut rank = range.0;
    while rank < range.1 {
        for (j, &c) in comb.iter().enumerate() {
            support[np + j] = free[c];
        }
        let sinr = if fast {
            let start = if rank == range.0 { 0 } else { np + first_changed };
            for r in start..p {
                let sr = support[r];
                let ok = chol.row(r, |c| cov.r_sprime[(sr, support[c])], steer[sr]);
                if !ok {
                    return Err(Error::Numeric("interference-plus-noise matrix lost definiteness".into()));
                }
            }
            power * chol.energy()
        } else {
            max_sinr(&subselect(cov, &support)?)?.0
        };
        let mask = comb.iter().fold(prefix_mask, |acc, &c| acc | 1 << free[c]);
        let scored = Scored {
            mask,
            sinr: 10.0 * sinr.log10(),
        };
        out.top.push(scored);
        out.bottom.push(scored);
        if config.full_ranking {
            out.all.push(scored);
        }
        rank += 1;
        if rank < range.1 {
            first_changed = advance(&mut comb, f).expect("rank within range");
        }
    }
    Ok(out)
}

fn to_ranked(s: &Scored) -> RankedSupport {
    RankedSupport {
        support: (0..64).filter(|i| s.mask >> i & 1 == 1).collect(),
        sinr_db: s.sinr,
    }
}

/// Enumerates every `p`-sensor support of `scenario`'s grid that contains
/// `prefix`.
pub fn enumerate(scenario: &Scenario, p: usize, prefix: &[usize], config: &OracleConfig) -> Result<Enumeration> {
    enumerate_covariances(&build_covariances(scenario)?, p, prefix, config)
}

pub fn enumerate_covariances(
    cov: &CovarianceSet,
    p: usize,
    prefix: &[usize],
    config: &OracleConfig,
) -> Result<Enumeration> {
    let n = cov.dim();
    if n > 64 {
        return Err(Error::Config(format!("enumeration supports at most 64 sensors, got {n}")));
    }
    if p == 0 || p > n {
        return Err(Error::Config(format!("P = {p} must lie in 1..={n}")));
    }
    let mut prefix = prefix.to_vec();
    prefix.sort_unstable();
    if !prefix.is_empty() {
        check_support(&prefix, n)?;
    }
    if prefix.len() > p {
        return Err(Error::Config(format!(
            "prefix of {} sensors exceeds P = {p}",
            prefix.len()
        )));
    }
    let count = count_supports(n, p, prefix.len());
    if count > config.budget {
        return Err(Error::BudgetExceeded {
            count,
            budget: config.budget,
        });
    }
    let free: Vec<usize> = (0..n).filter(|i| !prefix.contains(i)).collect();
    let m = p - prefix.len();
    let fast = config.fast_path && cov.desired_steering.len() == 1;

    let chunk = 4096u128;
    let ranges: Vec<(u128, u128)> = (0..count.div_ceil(chunk))
        .map(|c| (c * chunk, ((c + 1) * chunk).min(count)))
        .collect();
    let results = ranges
        .par_iter()
        .map(|&r| run_chunk(cov, &prefix, &free, m, r, config, fast))
        .collect::<Result<Vec<_>>>()?;

    let k = config.k.max(1);
    let mut top = Keep::new(k, best_first);
    let mut bottom = Keep::new(k, worst_first);
    let mut all = Vec::new();
    for r in results {
        top = top.merge(r.top);
        bottom = bottom.merge(r.bottom);
        all.extend(r.all);
    }
    let ranking = config.full_ranking.then(|| {
        all.sort_by(best_first);
        all.iter().map(to_ranked).collect()
    });
    Ok(Enumeration {
        count,
        best: to_ranked(&top.items[0]),
        worst: to_ranked(&bottom.items[0]),
        top: top.items.iter().take(config.k).map(to_ranked).collect(),
        bottom: bottom.items.iter().take(config.k).map(to_ranked).collect(),
        ranking,
    })
}

/// `support;sinr_db` rows, supports written as space-separated indices.
pub fn ranking_csv(ranking: &[RankedSupport]) -> String {
    let mut out = String::from("support;sinr_db\n");
    for r in ranking {
        let idx: Vec<String> = r.support.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{};{}", idx.join(" "), r.sinr_db);
    }
    out
}
