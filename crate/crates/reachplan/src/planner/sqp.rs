//! Sequential quadratic programming for the trajectory OCP.
//!
//! Direct multiple shooting hands this layer a dense nonlinear program with
//! exact first derivatives. Each iteration solves a convex QP built from a
//! damped-BFGS Hessian of the Lagrangian, globalized by a backtracking line
//! search on the l1 merit function. When a subproblem's linearized
//! constraints are inconsistent, the QP is retried in elastic mode with one
//! shared relaxation variable on the inequalities.

use super::qp::{solve_qp, QpProblem, QpSolution};
use nalgebra::{DMatrix, DVector};

/// Dense nonlinear program: `min f(z)  s.t.  c(z) = 0,  g(z) <= 0`.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn n_ineq(&self) -> usize;
    fn objective(&self, z: &DVector<f64>) -> f64;
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64>;
    fn eq_residuals(&self, z: &DVector<f64>) -> DVector<f64>;
    fn eq_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn ineq_residuals(&self, z: &DVector<f64>) -> DVector<f64>;
    fn ineq_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64>;
    /// Exact Hessian of the objective, used to seed BFGS.
    fn objective_hessian(&self) -> DMatrix<f64>;
}

pub struct SqpReport {
    pub z: DVector<f64>,
    pub eq_mult: DVector<f64>,
    pub ineq_mult: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
}

pub struct SqpOptions {
    pub kkt_tol: f64,
    pub max_iters: usize,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self { kkt_tol: 1e-6, max_iters: 100 }
    }
}

fn merit(f: f64, c: &DVector<f64>, g: &DVector<f64>, penalty: f64) -> f64 {
    let infeas: f64 =
        c.iter().map(|v| v.abs()).sum::<f64>() + g.iter().map(|v| v.max(0.0)).sum::<f64>();
    f + penalty * infeas
}

fn kkt_residual(
    grad: &DVector<f64>,
    jc: &DMatrix<f64>,
    jg: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DVector<f64>,
    nu: &DVector<f64>,
    lam: &DVector<f64>,
) -> f64 {
    let mut stat = grad.clone();
    if nu.len() > 0 {
        stat += jc.tr_mul(nu);
    }
    if lam.len() > 0 {
        stat += jg.tr_mul(lam);
    }
    let feas_eq = if c.len() > 0 { c.amax() } else { 0.0 };
    let feas_in = g.iter().fold(0.0f64, |m, &v| m.max(v));
    let comp = (0..g.len())
        .map(|i| (lam[i] * g[i]).abs())
        .fold(0.0f64, f64::max);
    stat.amax().max(feas_eq).max(feas_in).max(comp)
}

/// Solve the QP subproblem; on failure retry with one elastic variable `t`
/// relaxing every inequality (`g + Jg d <= t`), heavily penalized.
fn solve_subproblem(
    hess: &DMatrix<f64>,
    grad: &DVector<f64>,
    jc: &DMatrix<f64>,
    c: &DVector<f64>,
    jg: &DMatrix<f64>,
    g: &DVector<f64>,
    tol: f64,
) -> Option<QpSolution> {
    let neg_c = -c;
    let neg_g = -g;
    let sol = solve_qp(
        &QpProblem { p: hess, q: grad, a: jc, b: &neg_c, g: jg, h: &neg_g },
        tol,
    );
    if sol.converged {
        return Some(sol);
    }

    // Elastic retry.
    let n = grad.len();
    let m_in = g.len();
    let mut p2 = DMatrix::zeros(n + 1, n + 1);
    p2.view_mut((0, 0), (n, n)).copy_from(hess);
    p2[(n, n)] = 1.0;
    let mut q2 = DVector::zeros(n + 1);
    q2.rows_mut(0, n).copy_from(grad);
    q2[n] = 1e5;
    let mut a2 = DMatrix::zeros(jc.nrows(), n + 1);
    a2.view_mut((0, 0), (jc.nrows(), n)).copy_from(jc);
    let mut g2 = DMatrix::zeros(m_in + 1, n + 1);
    g2.view_mut((0, 0), (m_in, n)).copy_from(jg);
    for r in 0..m_in {
        g2[(r, n)] = -1.0;
    }
    g2[(m_in, n)] = -1.0; // t >= 0
    let mut h2 = DVector::zeros(m_in + 1);
    h2.rows_mut(0, m_in).copy_from(&neg_g);
    let sol2 = solve_qp(
        &QpProblem { p: &p2, q: &q2, a: &a2, b: &neg_c, g: &g2, h: &h2 },
        tol,
    );
    if !sol2.converged {
        return None;
    }
    Some(QpSolution {
        x: sol2.x.rows(0, n).into_owned(),
        nu: sol2.nu,
        lam: sol2.lam.rows(0, m_in).into_owned(),
        converged: true,
        iterations: sol2.iterations,
    })
}

pub fn solve_sqp<P: NlpProblem>(problem: &P, z0: DVector<f64>, opts: &SqpOptions) -> SqpReport {
    let n = problem.dim();
    debug_assert_eq!(z0.len(), n);
    let mut z = z0;
    let mut hess = problem.objective_hessian();
    for d in 0..n {
        hess[(d, d)] += 1e-8;
    }
    let mut nu = DVector::zeros(problem.n_eq());
    let mut lam = DVector::zeros(problem.n_ineq());
    let mut penalty = 1.0;

    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>)> = None;

    for iter in 0..opts.max_iters {
        let f = problem.objective(&z);
        let grad = problem.gradient(&z);
        let c = problem.eq_residuals(&z);
        let jc = problem.eq_jacobian(&z);
        let g = problem.ineq_residuals(&z);
        let jg = problem.ineq_jacobian(&z);

        let res = kkt_residual(&grad, &jc, &jg, &c, &g, &nu, &lam);
        if best.as_ref().map_or(true, |(r, _, _, _)| res < *r) {
            best = Some((res, z.clone(), nu.clone(), lam.clone()));
        }
        if res <= opts.kkt_tol {
            return SqpReport {
                z,
                eq_mult: nu,
                ineq_mult: lam,
                converged: true,
                iterations: iter,
                kkt_residual: res,
            };
        }

        // Solve the QP more loosely while far from a KKT point.
        let qp_tol = (res * res * 1e-2).clamp(1e-12, 1e-9);
        let Some(qp) = solve_subproblem(&hess, &grad, &jc, &c, &jg, &g, qp_tol) else {
            break;
        };
        let d = qp.x;
        if d.amax() < 1e-14 {
            // No progress direction; multipliers are as good as they get.
            nu = qp.nu;
            lam = qp.lam;
            continue;
        }

        // Penalty large enough to make d a descent direction for the merit.
        let mult_inf = qp.nu.amax().max(qp.lam.amax());
        if penalty < 1.1 * mult_inf {
            penalty = 1.2 * mult_inf;
        }

        let infeas0: f64 =
            c.iter().map(|v| v.abs()).sum::<f64>() + g.iter().map(|v| v.max(0.0)).sum::<f64>();
        let descent = grad.dot(&d) - penalty * infeas0;
        let phi0 = merit(f, &c, &g, penalty);

        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let zt = &z + &d * alpha;
            let phi = merit(
                problem.objective(&zt),
                &problem.eq_residuals(&zt),
                &problem.ineq_residuals(&zt),
                penalty,
            );
            if phi <= phi0 + 1e-4 * alpha * descent.min(0.0) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Merit stalled: take the tiny step anyway and let BFGS recover,
            // unless the residual is already near tolerance.
            alpha = 1e-6;
        }

        // Damped BFGS on the Lagrangian gradient difference.
        let step = &d * alpha;
        let lag_grad = |zz: &DVector<f64>| -> DVector<f64> {
            let mut gr = problem.gradient(zz);
            if problem.n_eq() > 0 {
                gr += problem.eq_jacobian(zz).tr_mul(&qp.nu);
            }
            if problem.n_ineq() > 0 {
                gr += problem.ineq_jacobian(zz).tr_mul(&qp.lam);
            }
            gr
        };
        let g_old = lag_grad(&z);
        let z_new = &z + &step;
        let g_new = lag_grad(&z_new);
        let yv = g_new - g_old;
        let bs = &hess * &step;
        let sts = step.dot(&bs);
        if sts > 1e-14 {
            let sty = step.dot(&yv);
            let yv = if sty < 0.2 * sts {
                let theta = 0.8 * sts / (sts - sty);
                &yv * theta + &bs * (1.0 - theta)
            } else {
                yv
            };
            let sty = step.dot(&yv).max(1e-12);
            hess = hess - (&bs * bs.transpose()) / sts + (&yv * yv.transpose()) / sty;
        }

        z = z_new;
        nu = qp.nu;
        lam = qp.lam;
    }

    let (kkt_residual, z, eq_mult, ineq_mult) = best.expect("at least one iterate evaluated");
    SqpReport {
        z,
        eq_mult,
        ineq_mult,
        converged: false,
        iterations: opts.max_iters,
        kkt_residual,
    }
}
