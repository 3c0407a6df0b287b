//! Primal-dual path-following interior-point method with Mehrotra
//! predictor-corrector steps and Nesterov-Todd scaling for
//!
//! ```text
//! minimize    cᵀx
//! subject to  G x + s = h,   s ∈ R₊ᵏ × (SOC³)ᵖ × Hermitian PSD(n)
//! ```
//!
//! where `x = (svec V, t)` collects a Hermitian matrix `V` and one epigraph
//! variable per coupled off-diagonal entry. The rows of `G` are, in order,
//! `−⟨A_k, V⟩ ≤ −1`, `(t_p, Re V_ij, Im V_ij) ∈ SOC` and `V ⪰ 0`.

use std::f64::consts::SQRT_2;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::DVector;

use super::cones::{ConeVec, Scaling};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix};

/// Position of the pair `(i, j)`, `i < j`, in row-major upper-triangle order.
pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Isometric real coordinates of a Hermitian matrix: the diagonal, then
/// `√2 Re`, `√2 Im` of each upper-triangle entry.
pub fn svec(m: &CMatrix) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(n * n);
    for i in 0..n {
        out[i] = m[(i, i)].re;
    }
    let mut p = n;
    for i in 0..n {
        for j in i + 1..n {
            out[p] = SQRT_2 * m[(i, j)].re;
            out[p + 1] = SQRT_2 * m[(i, j)].im;
            p += 2;
        }
    }
    out
}

pub fn unsvec(v: &DVector<f64>, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut p = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(v[p], v[p + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            p += 2;
        }
    }
    m
}

/// Problem data in solver form.
#[derive(Debug, Clone)]
pub(crate) struct ConicData {
    pub n: usize,
    /// Hermitian cost on `V`.
    pub c: CMatrix,
    /// Constraint matrices, `⟨A_k, V⟩ ≥ 1`.
    pub a: Vec<CMatrix>,
    /// Coupled pairs `(i, j)`, `i < j`, with the cost of their epigraph variable.
    pub pairs: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutput {
    pub v: CMatrix,
    pub t: Vec<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
struct Primal {
    v: DVector<f64>,
    t: Vec<f64>,
}

impl Primal {
    fn axpy(&mut self, alpha: f64, other: &Primal) {
        self.v.axpy(alpha, &other.v, 1.0);
        for (a, b) in self.t.iter_mut().zip(&other.t) {
            *a += alpha * b;
        }
    }

    fn dot(&self, other: &Primal) -> f64 {
        self.v.dot(&other.v) + self.t.iter().zip(&other.t).map(|(a, b)| a * b).sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn neg(&self) -> Primal {
        Primal {
            v: -&self.v,
            t: self.t.iter().map(|x| -x).collect(),
        }
    }
}

struct Operator<'a> {
    data: &'a ConicData,
    a_svec: Vec<DVector<f64>>,
    /// Offsets of `(Re, Im)` of each coupled pair inside `svec V`.
    pair_slots: Vec<usize>,
}

impl<'a> Operator<'a> {
    fn new(data: &'a ConicData) -> Self {
        let n = data.n;
        Self {
            data,
            a_svec: data.a.iter().map(svec).collect(),
            pair_slots: data
                .pairs
                .iter()
                .map(|&(i, j, _)| n + 2 * pair_index(n, i, j))
                .collect(),
        }
    }

    fn nv(&self) -> usize {
        self.data.n * self.data.n
    }

    fn cone_zeros(&self) -> ConeVec {
        ConeVec::zeros(self.data.a.len(), self.data.pairs.len(), self.data.n)
    }

    fn cone_identity(&self) -> ConeVec {
        ConeVec::identity(self.data.a.len(), self.data.pairs.len(), self.data.n)
    }

    fn cost(&self) -> Primal {
        Primal {
            v: svec(&self.data.c),
            t: self.data.pairs.iter().map(|p| p.2).collect(),
        }
    }

    fn h(&self) -> ConeVec {
        let mut h = self.cone_zeros();
        h.l.iter_mut().for_each(|x| *x = -1.0);
        h
    }

    fn g(&self, x: &Primal) -> ConeVec {
        ConeVec {
            l: self.a_svec.iter().map(|a| -a.dot(&x.v)).collect(),
            q: self
                .pair_slots
                .iter()
                .zip(&x.t)
                .map(|(&k, &t)| [-t, -x.v[k] / SQRT_2, -x.v[k + 1] / SQRT_2])
                .collect(),
            s: -unsvec(&x.v, self.data.n),
        }
    }

    fn gt(&self, z: &ConeVec) -> Primal {
        let mut v = -svec(&z.s);
        for (a, &zk) in self.a_svec.iter().zip(&z.l) {
            v.axpy(-zk, a, 1.0);
        }
        for (&k, q) in self.pair_slots.iter().zip(&z.q) {
            v[k] -= q[1] / SQRT_2;
            v[k + 1] -= q[2] / SQRT_2;
        }
        Primal {
            v,
            t: z.q.iter().map(|q| -q[0]).collect(),
        }
    }
}

/// Factorized reduced Schur complement `Gᵀ H⁻¹ G` with the epigraph
/// variables eliminated.
struct Schur {
    m: Mat<f64>,
    llt: faer::linalg::solvers::Llt<f64>,
    /// `(B_tt, B_t,re, B_t,im)` of each coupled pair.
    soc: Vec<[f64; 3]>,
}

impl Schur {
    fn assemble(op: &Operator, w: &Scaling) -> Result<Self> {
        let n = op.data.n;
        let nv = op.nv();
        let q = w.psd_q();
        let mut m = Mat::<f64>::zeros(nv, nv);

        // PSD block: column of basis element E is svec(Q E Q).
        let mut col = vec![0.0; nv];
        let fill = |m: &mut Mat<f64>, c: usize, col: &[f64]| {
            for (r, &x) in col.iter().enumerate() {
                m[(r, c)] = x;
            }
        };
        for i in 0..n {
            let mut p = n;
            for k in 0..n {
                col[k] = q[(k, i)].norm_sqr();
                for l in k + 1..n {
                    let y = q[(k, i)] * q[(l, i)].conj();
                    col[p] = SQRT_2 * y.re;
                    col[p + 1] = SQRT_2 * y.im;
                    p += 2;
                }
            }
            fill(&mut m, i, &col);
        }
        let mut c_re = n;
        for i in 0..n {
            for j in i + 1..n {
                // √2·Y for Y = Q E Q with E the Re / Im basis element of (i, j).
                let mut col_im = vec![0.0; nv];
                let mut p = n;
                for k in 0..n {
                    let p1 = q[(k, i)] * q[(k, j)].conj();
                    let p2 = q[(k, j)] * q[(k, i)].conj();
                    col[k] = (p1 + p2).re / SQRT_2;
                    col_im[k] = -(p1 - p2).im / SQRT_2;
                    for l in k + 1..n {
                        let p1 = q[(k, i)] * q[(l, j)].conj();
                        let p2 = q[(k, j)] * q[(l, i)].conj();
                        let re = p1 + p2;
                        let im = (p1 - p2) * C64::new(0.0, 1.0);
                        col[p] = re.re;
                        col[p + 1] = re.im;
                        col_im[p] = im.re;
                        col_im[p + 1] = im.im;
                        p += 2;
                    }
                }
                fill(&mut m, c_re, &col);
                fill(&mut m, c_re + 1, &col_im);
                c_re += 2;
            }
        }

        for (a, wk) in op.a_svec.iter().zip(w.l_inv_sq()) {
            for c in 0..nv {
                let ac = wk * a[c];
                if ac == 0.0 {
                    continue;
                }
                for r in 0..nv {
                    m[(r, c)] += ac * a[r];
                }
            }
        }

        let mut soc = Vec::with_capacity(op.pair_slots.len());
        for (&k, sc) in op.pair_slots.iter().zip(&w.soc) {
            let h = sc.inv_sq();
            let b00 = h[0][0];
            let b01 = h[0][1] / SQRT_2;
            let b02 = h[0][2] / SQRT_2;
            m[(k, k)] += h[1][1] / 2.0 - b01 * b01 / b00;
            m[(k, k + 1)] += h[1][2] / 2.0 - b01 * b02 / b00;
            m[(k + 1, k)] += h[2][1] / 2.0 - b01 * b02 / b00;
            m[(k + 1, k + 1)] += h[2][2] / 2.0 - b02 * b02 / b00;
            soc.push([b00, b01, b02]);
        }

        let llt = factor(&m)?;
        Ok(Self { m, llt, soc })
    }

    fn solve_reduced(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = rhs.len();
        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        let mut out = DVector::from_fn(n, |i, _| x[(i, 0)]);
        // One step of iterative refinement.
        let xm = Mat::<f64>::from_fn(n, 1, |i, _| out[i]);
        let mx = &self.m * &xm;
        let r = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i] - mx[(i, 0)]);
        let dx = self.llt.solve(&r);
        for i in 0..n {
            out[i] += dx[(i, 0)];
        }
        out
    }

    fn solve(&self, op: &Operator, rhs: &Primal) -> Primal {
        let mut rv = rhs.v.clone();
        for ((&k, b), &rt) in op.pair_slots.iter().zip(&self.soc).zip(&rhs.t) {
            rv[k] -= b[1] * rt / b[0];
            rv[k + 1] -= b[2] * rt / b[0];
        }
        let v = self.solve_reduced(&rv);
        let t = op
            .pair_slots
            .iter()
            .zip(&self.soc)
            .zip(&rhs.t)
            .map(|((&k, b), &rt)| (rt - b[1] * v[k] - b[2] * v[k + 1]) / b[0])
            .collect();
        Primal { v, t }
    }
}

fn factor(m: &Mat<f64>) -> Result<faer::linalg::solvers::Llt<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for delta in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += delta * scale;
        }
        if let Ok(llt) = shifted.llt(Side::Lower) {
            return Ok(llt);
        }
    }
    Err(Error::Numeric("Newton system is not positive definite".into()))
}

/// Newton direction for residuals `(r_x, r_z)` and scaled complementarity
/// target `d_s` (so that `λ ∘ (W dz + W⁻ᵀ ds) = d_s`).
fn newton(
    op: &Operator,
    w: &Scaling,
    schur: &Schur,
    r_x: &Primal,
    r_z: &ConeVec,
    d_s: &ConeVec,
) -> (Primal, ConeVec, ConeVec) {
    let t1 = w.lambda_div(d_s);
    let u = w.w_inv(&t1);
    let mut y = w.h_inv(r_z);
    y.axpy(1.0, &u);
    let mut rhs = r_x.neg();
    rhs.axpy(-1.0, &op.gt(&y));
    let mut dx = schur.solve(op, &rhs);
    let dz_of = |dx: &Primal| {
        let mut gdx = op.g(dx);
        gdx.axpy(1.0, r_z);
        let mut dz = w.h_inv(&gdx);
        dz.axpy(1.0, &u);
        dz
    };
    let mut dz = dz_of(&dx);
    // Refine against the dual equation Gᵀ dz = −r_x.
    let mut res = op.gt(&dz);
    res.axpy(1.0, r_x);
    let corr = schur.solve(op, &res.neg());
    dx.axpy(1.0, &corr);
    dz = dz_of(&dx);
    let mut ds = op.g(&dx);
    ds.axpy(1.0, r_z);
    let ds = ds.scaled(-1.0);
    (dx, dz, ds)
}

/// Moves `x` to `x + (1 + max(0, −λ_min(x)))·e` when it is not strictly
/// interior.
fn push_interior(x: &mut ConeVec, e: &ConeVec) {
    let shift = -x.min_eigenvalue();
    if shift >= -1e-8 * x.norm().max(1.0) {
        x.axpy(1.0 + shift, e);
    }
}

pub(crate) fn solve(data: &ConicData, tol: f64, max_iters: usize) -> Result<IpmOutput> {
    let op = Operator::new(data);
    let c = op.cost();
    let h = op.h();
    let e = op.cone_identity();
    let degree = e.degree() as f64;

    // Least-squares starting point under the identity scaling.
    let ident = Scaling::identity(data.a.len(), data.pairs.len(), data.n);
    let schur0 = Schur::assemble(&op, &ident)?;
    let mut x = schur0.solve(&op, &op.gt(&h));
    let mut s = h.clone();
    s.axpy(-1.0, &op.g(&x));
    let mut z = op.g(&schur0.solve(&op, &c.neg()));
    push_interior(&mut s, &e);
    push_interior(&mut z, &e);

    let h_norm = h.norm().max(1.0);
    let c_norm = c.norm().max(1.0);
    let mut out = IpmOutput {
        v: CMatrix::zeros(data.n, data.n),
        t: Vec::new(),
        status: IpmStatus::MaxIterations,
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
    };

    for iter in 0..=max_iters {
        let mut r_x = op.gt(&z);
        r_x.axpy(1.0, &c);
        let mut r_z = op.g(&x);
        r_z.axpy(1.0, &s);
        r_z.axpy(-1.0, &h);
        let gap = s.dot(&z);
        let pcost = c.dot(&x);

        out.iterations = iter;
        out.primal_residual = r_z.norm() / h_norm;
        out.dual_residual = r_x.norm() / c_norm;
        out.gap = gap;
        out.v = unsvec(&x.v, data.n);
        out.t = x.t.clone();

        if out.primal_residual <= tol && out.dual_residual <= tol && gap <= tol * pcost.abs().max(1e-12)
        {
            out.status = IpmStatus::Optimal;
            return Ok(out);
        }
        if !pcost.is_finite() || x.norm() > 1e13 || z.norm() > 1e13 {
            out.status = IpmStatus::Diverged;
            return Ok(out);
        }
        if iter == max_iters {
            break;
        }

        let w = match Scaling::new(&s, &z) {
            Ok(w) => w,
            Err(_) => break,
        };
        let schur = match Schur::assemble(&op, &w) {
            Ok(m) => m,
            Err(_) => break,
        };

        // Predictor.
        let lam_sq = w.lambda_sq();
        let (_, dz_a, ds_a) = newton(&op, &w, &schur, &r_x, &r_z, &lam_sq.scaled(-1.0));
        let ds_sc = w.w_inv_t(&ds_a);
        let dz_sc = w.w(&dz_a);
        let alpha_a = w.max_step(&ds_sc).min(w.max_step(&dz_sc)).min(1.0);
        let sigma = (1.0 - alpha_a).max(0.0).powi(3);

        // Corrector.
        let mut d_s = lam_sq.scaled(-1.0);
        d_s.axpy(-1.0, &ds_sc.jordan(&dz_sc));
        d_s.axpy(sigma * gap / degree, &e);
        let (dx, dz, ds) = newton(&op, &w, &schur, &r_x, &r_z, &d_s);
        let alpha_max = w.max_step(&w.w_inv_t(&ds)).min(w.max_step(&w.w(&dz)));
        let mut alpha = (0.99 * alpha_max).min(1.0);
        // The scaled step test can be off when the scaling is ill-conditioned,
        // so back off until both iterates are strictly interior.
        let (s_next, z_next) = loop {
            if !(alpha > 1e-14) {
                break (None, None);
            }
            let mut s_next = s.clone();
            let mut z_next = z.clone();
            s_next.axpy(alpha, &ds);
            z_next.axpy(alpha, &dz);
            s_next.s = crate::linalg::hermitian_part(&s_next.s);
            z_next.s = crate::linalg::hermitian_part(&z_next.s);
            if s_next.is_interior() && z_next.is_interior() {
                break (Some(s_next), Some(z_next));
            }
            alpha *= 0.8;
        };
        let (Some(s_next), Some(z_next)) = (s_next, z_next) else {
            break;
        };
        x.axpy(alpha, &dx);
        s = s_next;
        z = z_next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{outer, CVector};

    #[test]
    fn svec_round_trip_and_isometry() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let a = crate::linalg::hermitian_part(&a);
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 + 1.0, (j as f64) - (i as f64)));
        let b = crate::linalg::hermitian_part(&b);
        assert!((unsvec(&svec(&a), 3) - &a).norm() < 1e-14);
        let tr = (&a * &b).trace().re;
        assert!((svec(&a).dot(&svec(&b)) - tr).abs() < 1e-12);
        assert_eq!(pair_index(4, 0, 1), 0);
        assert_eq!(pair_index(4, 1, 2), 3);
        assert_eq!(pair_index(4, 2, 3), 5);
    }

    #[test]
    fn matched_filter_instance() {
        // min tr(V) s.t. ⟨s sᴴ, V⟩ ≥ 1 with ‖s‖² = n: optimum 1/n at V = s sᴴ/n².
        let n = 4;
        let s = CVector::from_fn(n, |i, _| C64::from_polar(1.0, 0.7 * i as f64));
        let data = ConicData {
            n,
            c: CMatrix::identity(n, n),
            a: vec![outer(&s, &s)],
            pairs: Vec::new(),
        };
        let out = solve(&data, 1e-9, 100).unwrap();
        assert_eq!(out.status, IpmStatus::Optimal);
        let expect = outer(&s, &s) / C64::new((n * n) as f64, 0.0);
        assert!((&out.v - expect).norm() < 1e-6, "{}", out.v);
    }

    #[test]
    fn coupled_pairs_bound_modulus() {
        let n = 3;
        let s = CVector::from_fn(n, |i, _| C64::from_polar(1.0, 1.1 * i as f64));
        let data = ConicData {
            n,
            c: CMatrix::identity(n, n),
            a: vec![outer(&s, &s)],
            pairs: vec![(0, 1, 0.3), (0, 2, 0.2), (1, 2, 0.5)],
        };
        let out = solve(&data, 1e-9, 100).unwrap();
        assert_eq!(out.status, IpmStatus::Optimal);
        for (p, &(i, j, _)) in data.pairs.iter().enumerate() {
            assert!(out.t[p] >= out.v[(i, j)].norm() - 1e-7);
        }
    }
}
