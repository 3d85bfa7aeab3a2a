//! Dense convex quadratic programming by a primal-dual interior-point
//! method with Mehrotra predictor-corrector steps.
//!
//! Solves `min 1/2 d'Pd + q'd  s.t.  A d = b,  G d <= h` for positive
//! semidefinite `P` (the SQP layer guarantees this). Each iteration
//! factorizes `K = P + G' W G (+ reg)` once by Cholesky and reuses it for
//! the equality Schur complement and both predictor and corrector solves.

use nalgebra::{Cholesky, DMatrix, DVector};

pub struct QpProblem<'a> {
    pub p: &'a DMatrix<f64>,
    pub q: &'a DVector<f64>,
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    pub g: &'a DMatrix<f64>,
    pub h: &'a DVector<f64>,
}

pub struct QpSolution {
    pub x: DVector<f64>,
    /// Equality multipliers.
    pub nu: DVector<f64>,
    /// Inequality multipliers, nonnegative.
    pub lam: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

const MAX_ITERS: usize = 60;
/// Regularization added to the condensed block before factorization.
const REG: f64 = 1e-11;

pub fn solve_qp(prob: &QpProblem, tol: f64) -> QpSolution {
    let n = prob.q.len();
    let m_eq = prob.b.len();
    let m_in = prob.h.len();
    debug_assert_eq!(prob.p.nrows(), n);
    debug_assert_eq!(prob.a.ncols(), if m_eq > 0 { n } else { prob.a.ncols() });
    debug_assert_eq!(prob.g.ncols(), if m_in > 0 { n } else { prob.g.ncols() });

    let mut x = DVector::zeros(n);
    let mut nu = DVector::zeros(m_eq);
    let mut s = DVector::from_element(m_in, 1.0);
    let mut z = DVector::from_element(m_in, 1.0);
    // Start slacks at the actual residual where that is comfortably positive.
    if m_in > 0 {
        let r = prob.h - prob.g * &x;
        for i in 0..m_in {
            s[i] = r[i].max(1.0);
        }
    }

    let norm_scale = 1.0
        + prob.q.amax().max(prob.h.amax().max(if m_eq > 0 { prob.b.amax() } else { 0.0 }));

    for iter in 0..MAX_ITERS {
        let r_dual = prob.p * &x + prob.q
            + if m_eq > 0 { prob.a.tr_mul(&nu) } else { DVector::zeros(n) }
            + if m_in > 0 { prob.g.tr_mul(&z) } else { DVector::zeros(n) };
        let r_eq = if m_eq > 0 { prob.a * &x - prob.b } else { DVector::zeros(0) };
        let r_in = if m_in > 0 { prob.g * &x + &s - prob.h } else { DVector::zeros(0) };
        let mu = if m_in > 0 { s.dot(&z) / m_in as f64 } else { 0.0 };

        let res = r_dual.amax().max(if m_eq > 0 { r_eq.amax() } else { 0.0 })
            .max(if m_in > 0 { r_in.amax() } else { 0.0 });
        if res <= tol * norm_scale && mu <= tol * norm_scale {
            return QpSolution { x, nu, lam: z, converged: true, iterations: iter };
        }

        // K = P + G' diag(z/s) G + reg I
        let mut k = prob.p.clone();
        for d in 0..n {
            k[(d, d)] += REG;
        }
        if m_in > 0 {
            for r in 0..m_in {
                let w = z[r] / s[r];
                // scatter the outer product of this (typically sparse) row
                let row = prob.g.row(r);
                let nz: Vec<usize> = (0..n).filter(|&c| row[c] != 0.0).collect();
                for &ci in &nz {
                    for &cj in &nz {
                        k[(ci, cj)] += w * row[ci] * row[cj];
                    }
                }
            }
        }
        let Some(chol) = Cholesky::new(k) else {
            return QpSolution { x, nu, lam: z, converged: false, iterations: iter };
        };

        // Predictor (affine) direction, then Mehrotra corrector, both via the
        // same factorization. rc is the target for the complementarity
        // product s.z -> rc.
        let solve_kkt = |chol: &Cholesky<f64, nalgebra::Dyn>,
                         rd: &DVector<f64>,
                         re: &DVector<f64>,
                         ri: &DVector<f64>,
                         rc: &DVector<f64>|
         -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
            // Eliminate (ds, dz):
            //   dz = (rc - z.ds)/s with ds = -ri - G dx + (implicit)
            // giving K dx + A' dnu = -rd - G'[(z/s).(-ri) + rc/s]  ... assembled below
            let mut rhs = -rd.clone();
            if m_in > 0 {
                for r in 0..m_in {
                    let coef = (z[r] * ri[r] - rc[r]) / s[r];
                    // rhs += G_r' * coef
                    let row = prob.g.row(r);
                    for c in 0..n {
                        if row[c] != 0.0 {
                            rhs[c] += row[c] * coef;
                        }
                    }
                }
            }
            let (dx, dnu) = if m_eq > 0 {
                // Schur complement on the equality block.
                let kinv_rhs = chol.solve(&rhs);
                let mut kinv_at = DMatrix::zeros(n, m_eq);
                for c in 0..m_eq {
                    let col = prob.a.row(c).transpose();
                    kinv_at.set_column(c, &chol.solve(&col));
                }
                let schur = prob.a * &kinv_at;
                let rhs2 = prob.a * &kinv_rhs + re;
                let dnu = schur
                    .lu()
                    .solve(&rhs2)
                    .unwrap_or_else(|| DVector::zeros(m_eq));
                let dx = kinv_rhs - kinv_at * &dnu;
                (dx, dnu)
            } else {
                (chol.solve(&rhs), DVector::zeros(0))
            };
            let mut ds = DVector::zeros(m_in);
            let mut dz = DVector::zeros(m_in);
            if m_in > 0 {
                let gdx = prob.g * &dx;
                for r in 0..m_in {
                    ds[r] = -ri[r] - gdx[r];
                    dz[r] = (rc[r] - z[r] * ds[r]) / s[r] - z[r];
                }
            }
            (dx, dnu, ds, dz)
        };

        let step_len = |s: &DVector<f64>, ds: &DVector<f64>| -> f64 {
            let mut a: f64 = 1.0;
            for i in 0..s.len() {
                if ds[i] < 0.0 {
                    a = a.min(-s[i] / ds[i]);
                }
            }
            a
        };

        // Affine predictor: drive s.z toward 0.
        let rc_aff = DVector::zeros(m_in);
        let (dx_a, _dnu_a, ds_a, dz_a) = solve_kkt(&chol, &r_dual, &r_eq, &r_in, &rc_aff);
        let (sigma, rc) = if m_in > 0 {
            let a_p = step_len(&s, &ds_a);
            let a_d = step_len(&z, &dz_a);
            let mu_aff = (0..m_in)
                .map(|i| (s[i] + a_p * ds_a[i]) * (z[i] + a_d * dz_a[i]))
                .sum::<f64>()
                / m_in as f64;
            let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(1e-8, 1.0) } else { 0.0 };
            let mut rc = DVector::zeros(m_in);
            for i in 0..m_in {
                rc[i] = sigma * mu - ds_a[i] * dz_a[i];
            }
            (sigma, rc)
        } else {
            (0.0, DVector::zeros(0))
        };
        let _ = sigma;

        let (dx, dnu, ds, dz) = if m_in > 0 {
            solve_kkt(&chol, &r_dual, &r_eq, &r_in, &rc)
        } else {
            (dx_a, _dnu_a, ds_a, dz_a)
        };

        let alpha = if m_in > 0 {
            0.995 * step_len(&s, &ds).min(step_len(&z, &dz)).min(1.0 / 0.995)
        } else {
            1.0
        };
        x += &dx * alpha;
        nu += &dnu * alpha;
        if m_in > 0 {
            s += &ds * alpha;
            z += &dz * alpha;
            for i in 0..m_in {
                s[i] = s[i].max(1e-300);
                z[i] = z[i].max(1e-300);
            }
        }
    }
    QpSolution { x, nu, lam: z, converged: false, iterations: MAX_ITERS }
}
