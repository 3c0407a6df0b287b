//! Product cone `R₊ᵏ × (SOC³)ᵖ × Hermitian PSD(n)`: vectors, Jordan algebra
//! and Nesterov-Todd scalings.

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, hermitian_eig_desc, hermitian_part, C64, CMatrix};

/// Element of the product cone's ambient space. The PSD block is stored as
/// a full Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConeVec {
    pub l: Vec<f64>,
    pub q: Vec<[f64; 3]>,
    pub s: CMatrix,
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `Re tr(Aᴴ B)`.
fn frob_dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

impl ConeVec {
    pub fn zeros(k: usize, p: usize, n: usize) -> Self {
        Self {
            l: vec![0.0; k],
            q: vec![[0.0; 3]; p],
            s: CMatrix::zeros(n, n),
        }
    }

    /// The identity element `e` of the Jordan algebra.
    pub fn identity(k: usize, p: usize, n: usize) -> Self {
        Self {
            l: vec![1.0; k],
            q: vec![[1.0, 0.0, 0.0]; p],
            s: CMatrix::identity(n, n),
        }
    }

    /// Sum of the cone degrees: one per nonnegative entry and second-order
    /// cone, `n` for the PSD block.
    pub fn degree(&self) -> usize {
        self.l.len() + self.q.len() + self.s.nrows()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let l: f64 = self.l.iter().zip(&other.l).map(|(a, b)| a * b).sum();
        let q: f64 = self.q.iter().zip(&other.q).map(|(a, b)| dot3(a, b)).sum();
        l + q + frob_dot(&self.s, &other.s)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.l.iter_mut().zip(&other.l) {
            *a += alpha * b;
        }
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            for i in 0..3 {
                a[i] += alpha * b[i];
            }
        }
        self.s += &other.s * C64::new(alpha, 0.0);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = Self::zeros(self.l.len(), self.q.len(), self.s.nrows());
        out.axpy(alpha, self);
        out
    }

    /// Smallest "eigenvalue" over all blocks: negative iff outside the cone.
    pub fn min_eigenvalue(&self) -> f64 {
        let l = self.l.iter().copied().fold(f64::INFINITY, f64::min);
        let q = self
            .q
            .iter()
            .map(|x| x[0] - x[1].hypot(x[2]))
            .fold(f64::INFINITY, f64::min);
        let s = if self.s.nrows() == 0 {
            f64::INFINITY
        } else {
            *hermitian_eig_desc(&self.s).0.last().unwrap()
        };
        l.min(q).min(s)
    }

    /// Strict membership in the interior of the product cone.
    pub fn is_interior(&self) -> bool {
        self.l.iter().all(|&x| x > 0.0)
            && self
                .q
                .iter()
                .all(|x| x[0] > 0.0 && x[0] * x[0] - x[1] * x[1] - x[2] * x[2] > 0.0)
            && (self.s.nrows() == 0 || cholesky(&self.s, "cone iterate").is_ok())
    }

    /// Jordan product `x ∘ y`.
    pub fn jordan(&self, other: &Self) -> Self {
        Self {
            l: self.l.iter().zip(&other.l).map(|(a, b)| a * b).collect(),
            q: self
                .q
                .iter()
                .zip(&other.q)
                .map(|(x, y)| {
                    [
                        dot3(x, y),
                        x[0] * y[1] + y[0] * x[1],
                        x[0] * y[2] + y[0] * x[2],
                    ]
                })
                .collect(),
            s: (&self.s * &other.s + &other.s * &self.s) * C64::new(0.5, 0.0),
        }
    }
}

/// Largest `α ≥ 0` with `x + α d` in the second-order cone, given `x`
/// strictly inside.
fn soc_step(x: &[f64; 3], d: &[f64; 3]) -> f64 {
    let jdot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] - a[1] * b[1] - a[2] * b[2];
    let a = jdot(d, d);
    let b = jdot(x, d);
    let c = jdot(x, x);
    // f(α) = a α² + 2 b α + c, f(0) = c > 0.
    let mut best = f64::INFINITY;
    if a.abs() <= 1e-300 {
        if b < 0.0 {
            best = -c / (2.0 * b);
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let qq = -(b + b.signum() * root);
            for r in [qq / a, if qq != 0.0 { c / qq } else { f64::INFINITY }] {
                if r > 0.0 && r < best {
                    best = r;
                }
            }
        }
    }
    // A negative leading coordinate can only be reached through f = 0, but
    // guard against rounding when x sits on the boundary of both nappes.
    if d[0] < 0.0 {
        best = best.min(-x[0] / d[0]);
    }
    best
}

/// Nesterov-Todd scaling point of one second-order cone: `W = β(2vvᵀ − J)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SocScaling {
    beta: f64,
    v: [f64; 3],
}

impl SocScaling {
    fn new(s: &[f64; 3], z: &[f64; 3]) -> Result<Self> {
        let jnorm = |x: &[f64; 3]| {
            let d = x[0] * x[0] - x[1] * x[1] - x[2] * x[2];
            if x[0] > 0.0 && d > 0.0 {
                Ok(d.sqrt())
            } else {
                Err(Error::Numeric("second-order cone iterate left the interior".into()))
            }
        };
        let a = jnorm(s)?;
        let b = jnorm(z)?;
        let sb = [s[0] / a, s[1] / a, s[2] / a];
        let zb = [z[0] / b, z[1] / b, z[2] / b];
        let gamma = ((1.0 + dot3(&sb, &zb)) / 2.0).sqrt();
        let wbar = [
            (sb[0] + zb[0]) / (2.0 * gamma),
            (sb[1] - zb[1]) / (2.0 * gamma),
            (sb[2] - zb[2]) / (2.0 * gamma),
        ];
        let k = (2.0 * (wbar[0] + 1.0)).sqrt();
        Ok(Self {
            beta: (a / b).sqrt(),
            v: [(wbar[0] + 1.0) / k, wbar[1] / k, wbar[2] / k],
        })
    }

    fn identity() -> Self {
        Self {
            beta: 1.0,
            v: [1.0, 0.0, 0.0],
        }
    }

    /// `W x`.
    fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let v = &self.v;
        let t = 2.0 * dot3(v, x);
        [
            self.beta * (t * v[0] - x[0]),
            self.beta * (t * v[1] + x[1]),
            self.beta * (t * v[2] + x[2]),
        ]
    }

    /// `W⁻¹ x = (1/β)(2 J v vᵀ J − J) x`.
    fn apply_inv(&self, x: &[f64; 3]) -> [f64; 3] {
        let v = &self.v;
        let jv = [v[0], -v[1], -v[2]];
        let t = 2.0 * dot3(&jv, x);
        [
            (t * jv[0] - x[0]) / self.beta,
            (t * jv[1] + x[1]) / self.beta,
            (t * jv[2] + x[2]) / self.beta,
        ]
    }

    /// Dense `W⁻²`.
    pub fn inv_sq(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let col = self.apply_inv(&self.apply_inv(&e));
            for i in 0..3 {
                out[i][j] = col[i];
            }
        }
        out
    }
}

/// Nesterov-Todd scaling of the full product cone at a primal-dual pair
/// `(s, z)` together with the scaled point `λ = W z = W⁻ᵀ s`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    w_l: Vec<f64>,
    pub soc: Vec<SocScaling>,
    r: CMatrix,
    r_inv: CMatrix,
    lambda_l: Vec<f64>,
    lambda_q: Vec<[f64; 3]>,
    lambda_s: Vec<f64>,
}

impl Scaling {
    pub fn new(s: &ConeVec, z: &ConeVec) -> Result<Self> {
        let mut w_l = Vec::with_capacity(s.l.len());
        let mut lambda_l = Vec::with_capacity(s.l.len());
        for (&si, &zi) in s.l.iter().zip(&z.l) {
            if !(si > 0.0 && zi > 0.0) {
                return Err(Error::Numeric("nonnegative iterate left the interior".into()));
            }
            w_l.push((si / zi).sqrt());
            lambda_l.push((si * zi).sqrt());
        }
        let soc = s
            .q
            .iter()
            .zip(&z.q)
            .map(|(a, b)| SocScaling::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        let lambda_q = soc.iter().zip(&z.q).map(|(w, zi)| w.apply(zi)).collect();

        let n = s.s.nrows();
        let (r, r_inv, lambda_s) = if n == 0 {
            (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0), Vec::new())
        } else {
            let ls = cholesky(&s.s, "primal PSD iterate")?.l();
            let lz = cholesky(&z.s, "dual PSD iterate")?.l();
            let svd = SVD::new(lz.adjoint() * &ls, true, true);
            let u = svd.u.ok_or_else(|| Error::Numeric("SVD failed".into()))?;
            let v = svd
                .v_t
                .ok_or_else(|| Error::Numeric("SVD failed".into()))?
                .adjoint();
            let sig = svd.singular_values;
            if sig.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Numeric("degenerate PSD scaling".into()));
            }
            let mut r = ls * v;
            let mut r_inv = u.adjoint() * lz.adjoint();
            for k in 0..n {
                let f = sig[k].sqrt();
                r.column_mut(k).scale_mut(1.0 / f);
                r_inv.row_mut(k).scale_mut(1.0 / f);
            }
            (r, r_inv, sig.iter().copied().collect())
        };
        Ok(Self {
            w_l,
            soc,
            r,
            r_inv,
            lambda_l,
            lambda_q,
            lambda_s,
        })
    }

    /// Scaling with `W = I` at `λ = e`.
    pub fn identity(k: usize, p: usize, n: usize) -> Self {
        Self {
            w_l: vec![1.0; k],
            soc: vec![SocScaling::identity(); p],
            r: CMatrix::identity(n, n),
            r_inv: CMatrix::identity(n, n),
            lambda_l: vec![1.0; k],
            lambda_q: vec![[1.0, 0.0, 0.0]; p],
            lambda_s: vec![1.0; n],
        }
    }

    /// `W z`.
    pub fn w(&self, x: &ConeVec) -> ConeVec {
        ConeVec {
            l: x.l.iter().zip(&self.w_l).map(|(a, w)| a * w).collect(),
            q: x.q.iter().zip(&self.soc).map(|(a, w)| w.apply(a)).collect(),
            s: self.r.adjoint() * &x.s * &self.r,
        }
    }

    /// `Wᵀ y`.
    #[cfg(test)]
    pub fn wt(&self, x: &ConeVec) -> ConeVec {
        ConeVec {
            l: x.l.iter().zip(&self.w_l).map(|(a, w)| a * w).collect(),
            q: x.q.iter().zip(&self.soc).map(|(a, w)| w.apply(a)).collect(),
            s: &self.r * &x.s * self.r.adjoint(),
        }
    }

    /// `W⁻¹ y`.
    pub fn w_inv(&self, x: &ConeVec) -> ConeVec {
        ConeVec {
            l: x.l.iter().zip(&self.w_l).map(|(a, w)| a / w).collect(),
            q: x.q.iter().zip(&self.soc).map(|(a, w)| w.apply_inv(a)).collect(),
            s: self.r_inv.adjoint() * &x.s * &self.r_inv,
        }
    }

    /// `W⁻ᵀ s`.
    pub fn w_inv_t(&self, x: &ConeVec) -> ConeVec {
        ConeVec {
            l: x.l.iter().zip(&self.w_l).map(|(a, w)| a / w).collect(),
            q: x.q.iter().zip(&self.soc).map(|(a, w)| w.apply_inv(a)).collect(),
            s: &self.r_inv * &x.s * self.r_inv.adjoint(),
        }
    }

    /// `H⁻¹ = W⁻¹ W⁻ᵀ`.
    pub fn h_inv(&self, x: &ConeVec) -> ConeVec {
        self.w_inv(&self.w_inv_t(x))
    }

    /// `Q = (R Rᴴ)⁻¹`, so that the PSD block of `H⁻¹` is `Y ↦ Q Y Q`.
    pub fn psd_q(&self) -> CMatrix {
        hermitian_part(&(self.r_inv.adjoint() * &self.r_inv))
    }

    /// Nonnegative block of `H⁻¹` (that is `z / s`).
    pub fn l_inv_sq(&self) -> Vec<f64> {
        self.w_l.iter().map(|w| 1.0 / (w * w)).collect()
    }

    pub fn lambda(&self) -> ConeVec {
        ConeVec {
            l: self.lambda_l.clone(),
            q: self.lambda_q.clone(),
            s: CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                self.lambda_s.len(),
                self.lambda_s.iter().map(|&x| C64::new(x, 0.0)),
            )),
        }
    }

    /// `λ ∘ λ`.
    pub fn lambda_sq(&self) -> ConeVec {
        let l = self.lambda();
        l.jordan(&l)
    }

    /// `λ ⋄ y`, the solution `x` of `λ ∘ x = y`.
    pub fn lambda_div(&self, y: &ConeVec) -> ConeVec {
        let l = y.l.iter().zip(&self.lambda_l).map(|(a, b)| a / b).collect();
        let q = y
            .q
            .iter()
            .zip(&self.lambda_q)
            .map(|(y, lam)| {
                let det = lam[0] * lam[0] - lam[1] * lam[1] - lam[2] * lam[2];
                let c = lam[1] * y[1] + lam[2] * y[2];
                let x0 = (lam[0] * y[0] - c) / det;
                [
                    x0,
                    (y[1] - x0 * lam[1]) / lam[0],
                    (y[2] - x0 * lam[2]) / lam[0],
                ]
            })
            .collect();
        let n = y.s.nrows();
        let s = CMatrix::from_fn(n, n, |i, j| {
            y.s[(i, j)] * (2.0 / (self.lambda_s[i] + self.lambda_s[j]))
        });
        ConeVec { l, q, s }
    }

    /// Largest `α ≥ 0` keeping `λ + α d` in the cone, for a direction `d`
    /// already in scaled coordinates.
    pub fn max_step(&self, d: &ConeVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for (&lam, &di) in self.lambda_l.iter().zip(&d.l) {
            if di < 0.0 {
                alpha = alpha.min(-lam / di);
            }
        }
        for (lam, di) in self.lambda_q.iter().zip(&d.q) {
            alpha = alpha.min(soc_step(lam, di));
        }
        let n = self.lambda_s.len();
        if n > 0 {
            let inv_sqrt: Vec<f64> = self.lambda_s.iter().map(|x| 1.0 / x.sqrt()).collect();
            let m = CMatrix::from_fn(n, n, |i, j| d.s[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
            let lo = *hermitian_eig_desc(&m).0.last().unwrap();
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        }
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{outer, CVector};

    fn sample() -> (ConeVec, ConeVec) {
        let a = CVector::from_vec(vec![C64::new(1.0, 0.2), C64::new(-0.3, 0.5), C64::new(0.1, 0.0)]);
        let b = CVector::from_vec(vec![C64::new(0.2, 0.0), C64::new(0.9, -0.1), C64::new(0.0, 0.4)]);
        let s = ConeVec {
            l: vec![2.0, 0.3],
            q: vec![[2.0, 0.5, -1.0], [1.0, 0.0, 0.2]],
            s: outer(&a, &a) + CMatrix::identity(3, 3) * C64::new(0.5, 0.0),
        };
        let z = ConeVec {
            l: vec![0.1, 4.0],
            q: vec![[1.5, -1.0, 0.3], [3.0, 2.0, 1.0]],
            s: outer(&b, &b) + CMatrix::identity(3, 3) * C64::new(0.2, 0.0),
        };
        (s, z)
    }

    fn diff(a: &ConeVec, b: &ConeVec) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.norm()
    }

    #[test]
    fn scaled_points_agree() {
        let (s, z) = sample();
        let w = Scaling::new(&s, &z).unwrap();
        let lam = w.lambda();
        assert!(diff(&w.w(&z), &lam) < 1e-12);
        assert!(diff(&w.w_inv_t(&s), &lam) < 1e-12);
        assert!((lam.dot(&lam) - s.dot(&z)).abs() < 1e-12);
    }

    #[test]
    fn inverses_and_transposes() {
        let (s, z) = sample();
        let w = Scaling::new(&s, &z).unwrap();
        assert!(diff(&w.w_inv(&w.w(&z)), &z) < 1e-12);
        assert!(diff(&w.w_inv_t(&w.wt(&s)), &s) < 1e-12);
        // ⟨W x, y⟩ = ⟨x, Wᵀ y⟩
        assert!((w.w(&z).dot(&s) - z.dot(&w.wt(&s))).abs() < 1e-12);
        let hz = w.h_inv(&s);
        let q = w.psd_q();
        assert!((&hz.s - &q * &s.s * &q).norm() < 1e-12);
    }

    #[test]
    fn lambda_division_inverts_jordan_product() {
        let (s, z) = sample();
        let w = Scaling::new(&s, &z).unwrap();
        let y = w.lambda_div(&z);
        assert!(diff(&w.lambda().jordan(&y), &z) < 1e-12);
    }

    #[test]
    fn soc_step_hits_boundary() {
        let x = [2.0, 0.5, -1.0];
        let d = [-1.0, 0.7, 0.2];
        let a = soc_step(&x, &d);
        let p = [x[0] + a * d[0], x[1] + a * d[1], x[2] + a * d[2]];
        assert!((p[0] - p[1].hypot(p[2])).abs() < 1e-12);
        assert_eq!(soc_step(&x, &[1.0, 0.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn max_step_reaches_boundary() {
        let (s, z) = sample();
        let w = Scaling::new(&s, &z).unwrap();
        let mut d = ConeVec::identity(2, 2, 3).scaled(-0.3);
        d.s[(0, 1)] = C64::new(0.4, 0.1);
        d.s[(1, 0)] = C64::new(0.4, -0.1);
        let a = w.max_step(&d);
        let mut p = w.lambda();
        p.axpy(a, &d);
        assert!(p.min_eigenvalue().abs() < 1e-10);
    }
}
