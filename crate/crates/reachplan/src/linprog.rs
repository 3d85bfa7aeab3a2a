//! Dense small-scale linear programming.
//!
//! Bounded-variable two-phase primal simplex with Bland's rule. Problems in
//! this crate stay below ~40 variables and ~200 rows, so a dense explicit
//! basis inverse is both fast enough and easy to audit. Determinism matters
//! more than speed here: identical inputs must give bit-identical outputs,
//! and Bland's smallest-index rule removes any cycling risk.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Feasibility tolerance for phase-1 termination and solution checks.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost threshold for entering-variable eligibility.
const COST_TOL: f64 = 1e-9;
/// Pivot magnitude below which a column entry is treated as zero.
const PIVOT_TOL: f64 = 1e-11;
/// Basis inverse is refactorized from scratch every this many pivots.
const REFRESH_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub`.
/// Infinite bounds are allowed in `lb`/`ub`.
#[derive(Clone, Debug, Serialize)]
pub struct LpProblem {
    #[serde(serialize_with = "ser_vec")]
    pub c: DVector<f64>,
    #[serde(serialize_with = "ser_mat")]
    pub a_ub: DMatrix<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub b_ub: DVector<f64>,
    #[serde(serialize_with = "ser_mat")]
    pub a_eq: DMatrix<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub b_eq: DVector<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub lb: DVector<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub ub: DVector<f64>,
    #[serde(skip)]
    pub(crate) feas_tol: f64,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    /// Row multipliers for `A_ub x <= b_ub` (non-positive at an optimum of a
    /// minimization, in the convention `c = A_ub' y_ub + A_eq' y_eq + d`).
    pub y_ub: DVector<f64>,
    /// Row multipliers for the equality rows.
    pub y_eq: DVector<f64>,
    /// Reduced costs of the structural variables at the final basis.
    pub reduced_costs: DVector<f64>,
}

impl LpProblem {
    /// Problem with only inequality rows.
    pub fn inequality_form(
        c: DVector<f64>,
        a_ub: DMatrix<f64>,
        b_ub: DVector<f64>,
        lb: DVector<f64>,
        ub: DVector<f64>,
    ) -> Self {
        let n = c.len();
        Self {
            c,
            a_ub,
            b_ub,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lb,
            ub,
            feas_tol: FEAS_TOL,
        }
    }

    pub fn with_feasibility_tol(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) {
        let n = self.n_vars();
        assert_eq!(self.a_ub.ncols(), n);
        assert_eq!(self.a_eq.ncols(), n);
        assert_eq!(self.a_ub.nrows(), self.b_ub.len());
        assert_eq!(self.a_eq.nrows(), self.b_eq.len());
        assert_eq!(self.lb.len(), n);
        assert_eq!(self.ub.len(), n);
        assert!(self.c.iter().all(|v| v.is_finite()), "non-finite cost");
        assert!(
            self.a_ub.iter().chain(self.a_eq.iter()).all(|v| v.is_finite()),
            "non-finite constraint matrix"
        );
    }
}

/// Where a nonbasic variable currently sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NonBasicAt {
    Lower,
    Upper,
    /// Free variable parked at zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    NonBasic(NonBasicAt),
}

struct Tableau {
    /// Columns of the standard-form constraint matrix (m rows each).
    cols: DMatrix<f64>,
    rhs: DVector<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    /// Index from which artificial variables start; they may never re-enter.
    artificial_from: usize,
    pivots: usize,
}

impl Tableau {
    fn n_total(&self) -> usize {
        self.cols.ncols()
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(_) => unreachable!("queried value of basic variable"),
            VarState::NonBasic(NonBasicAt::Lower) => self.lb[j],
            VarState::NonBasic(NonBasicAt::Upper) => self.ub[j],
            VarState::NonBasic(NonBasicAt::Zero) => 0.0,
        }
    }

    fn basic_values(&self) -> DVector<f64> {
        let mut r = self.rhs.clone();
        for j in 0..self.n_total() {
            if let VarState::NonBasic(_) = self.state[j] {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    r -= self.cols.column(j) * v;
                }
            }
        }
        &self.binv * r
    }

    fn refactorize(&mut self) {
        let m = self.m();
        let mut b = DMatrix::zeros(m, m);
        for (i, &j) in self.basis.iter().enumerate() {
            b.set_column(i, &self.cols.column(j));
        }
        self.binv = b
            .lu()
            .try_inverse()
            .expect("basis matrix must stay invertible");
    }

    /// Price all columns and pick the entering variable by Bland's rule.
    /// Returns (variable index, +1 to increase / -1 to decrease).
    fn select_entering(&self, y: &DVector<f64>) -> Option<(usize, f64)> {
        for j in 0..self.n_total() {
            if j >= self.artificial_from {
                continue;
            }
            let at = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::NonBasic(at) => at,
            };
            let d = self.cost[j] - y.dot(&self.cols.column(j));
            match at {
                NonBasicAt::Lower if d < -COST_TOL => return Some((j, 1.0)),
                NonBasicAt::Upper if d > COST_TOL => return Some((j, -1.0)),
                NonBasicAt::Zero if d < -COST_TOL => return Some((j, 1.0)),
                NonBasicAt::Zero if d > COST_TOL => return Some((j, -1.0)),
                _ => {}
            }
        }
        None
    }

    /// One simplex phase on the current cost vector. Returns false if the
    /// problem is unbounded in this phase.
    fn run(&mut self) -> bool {
        let max_iters = 10_000 + 200 * (self.m() + self.n_total());
        for _ in 0..max_iters {
            let cb = DVector::from_iterator(self.m(), self.basis.iter().map(|&j| self.cost[j]));
            let y = self.binv.tr_mul(&cb);
            let Some((enter, dir)) = self.select_entering(&y) else {
                return true; // optimal for this phase
            };
            let w = &self.binv * self.cols.column(enter);
            let xb = self.basic_values();

            // Ratio test: how far the entering variable can move.
            let own_range = self.ub[enter] - self.lb[enter];
            let mut best_step = if own_range.is_finite() { own_range } else { f64::INFINITY };
            let mut leaving: Option<(usize, bool)> = None; // (basis position, hits upper)
            for i in 0..self.m() {
                let rate = -dir * w[i]; // d x_B[i] / d step
                let bj = self.basis[i];
                if rate > PIVOT_TOL {
                    if self.ub[bj].is_finite() {
                        let step = (self.ub[bj] - xb[i]) / rate;
                        if step < best_step - 1e-12
                            || (step < best_step + 1e-12
                                && leaving.map_or(false, |(pos, _)| self.basis[pos] > bj))
                        {
                            best_step = step.max(0.0);
                            leaving = Some((i, true));
                        }
                    }
                } else if rate < -PIVOT_TOL {
                    if self.lb[bj].is_finite() {
                        let step = (xb[i] - self.lb[bj]) / -rate;
                        if step < best_step - 1e-12
                            || (step < best_step + 1e-12
                                && leaving.map_or(false, |(pos, _)| self.basis[pos] > bj))
                        {
                            best_step = step.max(0.0);
                            leaving = Some((i, false));
                        }
                    }
                }
            }
            if best_step.is_infinite() {
                return false; // unbounded ray
            }

            match leaving {
                None => {
                    // Bound flip: the entering variable runs to its other bound.
                    self.state[enter] = VarState::NonBasic(if dir > 0.0 {
                        NonBasicAt::Upper
                    } else {
                        NonBasicAt::Lower
                    });
                }
                Some((pos, hits_upper)) => {
                    let out = self.basis[pos];
                    self.state[out] = VarState::NonBasic(if hits_upper {
                        NonBasicAt::Upper
                    } else if self.lb[out].is_finite() {
                        NonBasicAt::Lower
                    } else {
                        NonBasicAt::Zero
                    });
                    self.basis[pos] = enter;
                    self.state[enter] = VarState::Basic(pos);
                    self.pivots += 1;
                    if self.pivots % REFRESH_EVERY == 0 {
                        self.refactorize();
                    } else {
                        // Eta update of the explicit inverse.
                        let piv = w[pos];
                        debug_assert!(piv.abs() > PIVOT_TOL);
                        let mut row = self.binv.row(pos).into_owned();
                        row /= piv;
                        for i in 0..self.m() {
                            if i == pos {
                                continue;
                            }
                            let f = w[i];
                            if f != 0.0 {
                                let adj = &row * f;
                                let mut ri = self.binv.row_mut(i);
                                ri -= adj.clone();
                            }
                        }
                        self.binv.row_mut(pos).copy_from(&row);
                    }
                }
            }
        }
        // Bland's rule precludes cycling; hitting the cap means the instance
        // is far outside this solver's intended scale.
        panic!("simplex iteration cap exceeded");
    }
}

/// Solve the LP. Infeasibility and unboundedness are reported as statuses.
pub fn solve_lp(p: &LpProblem) -> LpSolution {
    p.validate();
    let n = p.n_vars();
    let m_ub = p.a_ub.nrows();
    let m_eq = p.a_eq.nrows();
    let m = m_ub + m_eq;

    let fail = |status: LpStatus| LpSolution {
        status,
        x: DVector::zeros(n),
        objective: f64::NAN,
        y_ub: DVector::zeros(m_ub),
        y_eq: DVector::zeros(m_eq),
        reduced_costs: DVector::zeros(n),
    };

    for j in 0..n {
        if p.lb[j] > p.ub[j] {
            return fail(LpStatus::Infeasible);
        }
    }
    if m == 0 {
        // Pure box problem: each coordinate independently at its best bound.
        let mut x = DVector::zeros(n);
        for j in 0..n {
            x[j] = if p.c[j] > 0.0 {
                if p.lb[j].is_finite() { p.lb[j] } else { return fail(LpStatus::Unbounded) }
            } else if p.c[j] < 0.0 {
                if p.ub[j].is_finite() { p.ub[j] } else { return fail(LpStatus::Unbounded) }
            } else if p.lb[j].is_finite() {
                p.lb[j]
            } else if p.ub[j].is_finite() {
                p.ub[j].min(0.0)
            } else {
                0.0
            };
        }
        let objective = p.c.dot(&x);
        return LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            y_ub: DVector::zeros(0),
            y_eq: DVector::zeros(0),
            reduced_costs: p.c.clone(),
        };
    }

    // Standard form: structural vars, one slack per <= row, one artificial
    // per row. Row signs are flipped so every initial artificial value
    // (the residual) is nonnegative.
    let n_total = n + m_ub + m;
    let artificial_from = n + m_ub;
    let mut cols = DMatrix::zeros(m, n_total);
    let mut rhs = DVector::zeros(m);
    let mut row_sign = vec![1.0f64; m];

    let mut lb = vec![0.0f64; n_total];
    let mut ub = vec![f64::INFINITY; n_total];
    let mut state = Vec::with_capacity(n_total);
    for j in 0..n {
        lb[j] = p.lb[j];
        ub[j] = p.ub[j];
        state.push(VarState::NonBasic(if p.lb[j].is_finite() {
            NonBasicAt::Lower
        } else if p.ub[j].is_finite() {
            NonBasicAt::Upper
        } else {
            NonBasicAt::Zero
        }));
    }
    for _ in n..n_total {
        state.push(VarState::NonBasic(NonBasicAt::Lower));
    }

    // Initial structural values (at their initial bounds).
    let x0 = DVector::from_iterator(
        n,
        (0..n).map(|j| match state[j] {
            VarState::NonBasic(NonBasicAt::Lower) => lb[j],
            VarState::NonBasic(NonBasicAt::Upper) => ub[j],
            _ => 0.0,
        }),
    );

    for i in 0..m_ub {
        for j in 0..n {
            cols[(i, j)] = p.a_ub[(i, j)];
        }
        cols[(i, n + i)] = 1.0; // slack
        rhs[i] = p.b_ub[i];
    }
    for i in 0..m_eq {
        for j in 0..n {
            cols[(m_ub + i, j)] = p.a_eq[(i, j)];
        }
        rhs[m_ub + i] = p.b_eq[i];
    }
    // Residuals with structural vars at their bounds and slacks at zero.
    let mut resid = rhs.clone();
    for j in 0..n {
        if x0[j] != 0.0 {
            for i in 0..m {
                resid[i] -= cols[(i, j)] * x0[j];
            }
        }
    }
    for i in 0..m {
        if resid[i] < 0.0 {
            row_sign[i] = -1.0;
            for j in 0..n_total {
                cols[(i, j)] = -cols[(i, j)];
            }
            rhs[i] = -rhs[i];
        }
        cols[(i, artificial_from + i)] = 1.0;
    }

    let mut t = Tableau {
        cols,
        rhs,
        lb,
        ub,
        cost: vec![0.0; n_total],
        state,
        basis: (0..m).map(|i| artificial_from + i).collect(),
        binv: DMatrix::identity(m, m),
        artificial_from: n_total, // phase 1: artificials may move
        pivots: 0,
    };
    for i in 0..m {
        t.state[artificial_from + i] = VarState::Basic(i);
        t.cost[artificial_from + i] = 1.0;
    }

    // Phase 1: minimize the artificial sum.
    let bounded = t.run();
    debug_assert!(bounded, "phase 1 is bounded below by zero");
    let xb = t.basic_values();
    let phase1: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= artificial_from)
        .map(|(i, _)| xb[i])
        .sum();
    if phase1 > p.feas_tol {
        return fail(LpStatus::Infeasible);
    }

    // Phase 2: original costs; artificials pinned to zero and barred from
    // re-entering (any still basic sit at zero in degenerate rows).
    for j in 0..n_total {
        t.cost[j] = if j < n { p.c[j] } else { 0.0 };
    }
    for j in artificial_from..n_total {
        t.lb[j] = 0.0;
        t.ub[j] = 0.0;
    }
    t.artificial_from = artificial_from;
    if !t.run() {
        return fail(LpStatus::Unbounded);
    }

    // Extract the solution.
    let xb = t.basic_values();
    let mut x = DVector::zeros(n);
    for j in 0..n {
        x[j] = match t.state[j] {
            VarState::Basic(i) => xb[i],
            VarState::NonBasic(_) => t.nonbasic_value(j),
        };
    }
    let cb = DVector::from_iterator(m, t.basis.iter().map(|&j| t.cost[j]));
    let y = t.binv.tr_mul(&cb);
    let mut y_ub = DVector::zeros(m_ub);
    let mut y_eq = DVector::zeros(m_eq);
    for i in 0..m_ub {
        y_ub[i] = y[i] * row_sign[i];
    }
    for i in 0..m_eq {
        y_eq[i] = y[m_ub + i] * row_sign[m_ub + i];
    }
    let mut reduced = DVector::zeros(n);
    for j in 0..n {
        reduced[j] = t.cost[j] - y.dot(&t.cols.column(j));
        // columns were sign-flipped per row, so undo via the original data
        let mut d = p.c[j];
        for i in 0..m_ub {
            d -= p.a_ub[(i, j)] * y_ub[i];
        }
        for i in 0..m_eq {
            d -= p.a_eq[(i, j)] * y_eq[i];
        }
        reduced[j] = d;
    }
    let objective = p.c.dot(&x);
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        y_ub,
        y_eq,
        reduced_costs: reduced,
    }
}

fn ser_mat<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn ser_vec<S: serde::Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        seq.serialize_element(x)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn single_lower_bound() {
        // min x s.t. x >= 1
        let p = LpProblem::inequality_form(
            dv(&[1.0]),
            DMatrix::zeros(0, 1),
            dv(&[]),
            dv(&[1.0]),
            dv(&[f64::INFINITY]),
        );
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn simplex_facet() {
        // min -x-y s.t. x+y <= 1, x,y >= 0
        let p = LpProblem::inequality_form(
            dv(&[-1.0, -1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            dv(&[1.0]),
            dv(&[0.0, 0.0]),
            dv(&[f64::INFINITY, f64::INFINITY]),
        );
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        // x <= -1, x >= 0
        let p = LpProblem::inequality_form(
            dv(&[1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            dv(&[-1.0]),
            dv(&[0.0]),
            dv(&[f64::INFINITY]),
        );
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);

        // min -x, x >= 0, no upper bound
        let p = LpProblem::inequality_form(
            dv(&[-1.0]),
            DMatrix::zeros(0, 1),
            dv(&[]),
            dv(&[0.0]),
            dv(&[f64::INFINITY]),
        );
        assert_eq!(solve_lp(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows() {
        // min x+y s.t. x+y = 2, 0 <= x,y <= 3
        let p = LpProblem {
            c: dv(&[1.0, 1.0]),
            a_ub: DMatrix::zeros(0, 2),
            b_ub: dv(&[]),
            a_eq: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            b_eq: dv(&[2.0]),
            lb: dv(&[0.0, 0.0]),
            ub: dv(&[3.0, 3.0]),
            feas_tol: 1e-9,
        };
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.x[0] + s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables() {
        // min |shift|: min t s.t. t >= x, t >= -x, x free with x = 3 forced
        let p = LpProblem {
            c: dv(&[0.0, 1.0]),
            a_ub: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, -1.0]),
            b_ub: dv(&[0.0, 0.0]),
            a_eq: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            b_eq: dv(&[3.0]),
            lb: dv(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            ub: dv(&[f64::INFINITY, f64::INFINITY]),
            feas_tol: 1e-9,
        };
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
    }

    /// The batch-learning instance E1: min 1'theta + rho over (y, rho, theta)
    /// for the unit box and samples {(0.5,0.1),(-0.3,0.1),(0.1,-0.2)}.
    /// Hand-derived optimum: objective 1.5.
    #[test]
    fn learning_instance_objective() {
        let h = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let samples = [dv(&[0.5, 0.1]), dv(&[-0.3, 0.1]), dv(&[0.1, -0.2])];
        let p = crate::setlearn::build_batch_lp(&h, &samples);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.5).abs() < 1e-7, "objective {}", s.objective);
    }

    #[test]
    fn determinism_bit_identical() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = DMatrix::from_fn(8, 5, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let b = DVector::from_fn(8, |_, _| rng.random::<f64>() + 0.5);
        let c = DVector::from_fn(5, |_, _| rng.random::<f64>() - 0.5);
        let p = LpProblem::inequality_form(
            c,
            a,
            b,
            DVector::from_element(5, -2.0),
            DVector::from_element(5, 2.0),
        );
        let s1 = solve_lp(&p);
        let s2 = solve_lp(&p);
        assert_eq!(s1.status, s2.status);
        assert_eq!(s1.objective.to_bits(), s2.objective.to_bits());
        for j in 0..5 {
            assert_eq!(s1.x[j].to_bits(), s2.x[j].to_bits());
        }
    }

    #[test]
    fn cost_scaling_preserves_argmin() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..20 {
            let a = DMatrix::from_fn(6, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let b = DVector::from_fn(6, |_, _| rng.random::<f64>() + 0.5);
            let c = DVector::from_fn(4, |_, _| rng.random::<f64>() - 0.5);
            let p = LpProblem::inequality_form(
                c.clone(),
                a.clone(),
                b.clone(),
                DVector::from_element(4, -3.0),
                DVector::from_element(4, 3.0),
            );
            let s1 = solve_lp(&p);
            let alpha = 4.25;
            let p2 = LpProblem::inequality_form(
                c * alpha,
                a,
                b,
                DVector::from_element(4, -3.0),
                DVector::from_element(4, 3.0),
            );
            let s2 = solve_lp(&p2);
            assert_eq!(s1.status, LpStatus::Optimal);
            assert!((s2.objective - alpha * s1.objective).abs() < 1e-8);
            assert!((&s2.x - &s1.x).norm() < 1e-9);
        }
    }

    #[test]
    fn optimal_solutions_are_feasible() {
        let mut rng = StdRng::seed_from_u64(3);
        let mut optimal = 0;
        for _ in 0..200 {
            let m = rng.random_range(1..10);
            let n = rng.random_range(1..7);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let b = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0 - 0.5);
            let c = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let lb = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { f64::NEG_INFINITY } else { -1.5 });
            let ub = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { f64::INFINITY } else { 1.5 });
            let mut lb = lb;
            for j in 0..n {
                if lb[j] > ub[j] {
                    lb[j] = ub[j] - 1.0;
                }
            }
            let p = LpProblem::inequality_form(c, a.clone(), b.clone(), lb.clone(), ub.clone());
            let s = solve_lp(&p);
            if s.status == LpStatus::Optimal {
                optimal += 1;
                let r = &a * &s.x - &b;
                assert!(r.iter().all(|&v| v <= 1e-7), "ub violated by {:?}", r.max());
                for j in 0..p.n_vars() {
                    assert!(s.x[j] >= lb[j] - 1e-7 && s.x[j] <= ub[j] + 1e-7);
                }
            }
        }
        assert!(optimal > 50, "too few optimal instances to be meaningful");
    }

    /// Weak-duality spot check: reconstruct a dual certificate from the
    /// returned multipliers and match the primal objective.
    #[test]
    fn duality_certificate() {
        let mut rng = StdRng::seed_from_u64(4);
        let mut checked = 0;
        for _ in 0..100 {
            let m = rng.random_range(2..8);
            let n = rng.random_range(2..6);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let b = DVector::from_fn(m, |_, _| rng.random::<f64>() + 0.2);
            let c = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let lb = DVector::from_element(n, -2.0);
            let ub = DVector::from_element(n, 2.0);
            let p = LpProblem::inequality_form(c.clone(), a.clone(), b.clone(), lb.clone(), ub.clone());
            let s = solve_lp(&p);
            if s.status != LpStatus::Optimal {
                continue;
            }
            checked += 1;
            // Multiplier signs: y_ub <= 0 for <= rows of a minimization.
            assert!(s.y_ub.iter().all(|&y| y <= 1e-7));
            // Stationarity: c - A'y = d, with d_j >= 0 at lower bound,
            // d_j <= 0 at upper bound, |d_j| ~ 0 when strictly between.
            for j in 0..n {
                let d = s.reduced_costs[j];
                if (s.x[j] - lb[j]).abs() < 1e-7 {
                    assert!(d >= -1e-6);
                } else if (s.x[j] - ub[j]).abs() < 1e-7 {
                    assert!(d <= 1e-6);
                } else {
                    assert!(d.abs() < 1e-6, "interior reduced cost {d}");
                }
            }
            // Dual objective: y'b + sum_j d_j * (active bound value).
            let mut dual = s.y_ub.dot(&b);
            for j in 0..n {
                let d = s.reduced_costs[j];
                if d > 1e-9 {
                    dual += d * lb[j];
                } else if d < -1e-9 {
                    dual += d * ub[j];
                }
            }
            assert!(
                (dual - s.objective).abs() < 1e-6,
                "duality gap {}",
                dual - s.objective
            );
        }
        assert!(checked > 30);
    }

    #[test]
    fn debug_dump_mirrors_fields() {
        let p = LpProblem::inequality_form(
            dv(&[1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            dv(&[2.0]),
            dv(&[0.0]),
            dv(&[5.0]),
        );
        let s = serde_json::to_string(&p).unwrap();
        for key in ["\"c\"", "\"a_ub\"", "\"b_ub\"", "\"a_eq\"", "\"b_eq\"", "\"lb\"", "\"ub\""] {
            assert!(s.contains(key), "missing {key} in {s}");
        }
    }
}
