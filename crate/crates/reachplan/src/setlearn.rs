//! Online learning of an obstacle's intended control set.
//!
//! The admissible set `U = {u : Hu <= 1}` is known; the subset the obstacle
//! actually draws from is not. A parameterized family
//! `{u : Hu <= theta + Hy}` is fitted around observed inputs by linear
//! programming: the batch problem fits all samples at once, the
//! moving-horizon variant fits a sliding window, and the online recursion
//! grows the previous set to admit one new sample with a constraint count
//! that does not depend on how many samples have been seen.
//!
//! Parameter constraints `theta <= rho*1`, `Hy <= (1-rho)*1`, `rho in [0,1]`
//! keep every fitted set inside the admissible set.

use crate::geometry::{GeometryError, HPolytope, VPolytope};
use crate::linprog::{solve_lp, LpProblem, LpStatus};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Samples may violate `Hu <= 1` by at most this much before being rejected.
pub const ADMISSIBLE_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SetLearnError {
    #[error("information set is empty")]
    EmptyInfoSet,
    #[error("sample {index} violates the admissible set by {violation:e}")]
    SampleOutsideAdmissible { index: usize, violation: f64 },
    #[error("learning LP terminated with status {0:?}")]
    LpFailed(LpStatus),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The obstacle's admissible control set `{u : Hu <= 1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleSet {
    #[serde(
        rename = "H",
        serialize_with = "crate::geometry::ser_matrix",
        deserialize_with = "crate::geometry::de_matrix"
    )]
    pub h: DMatrix<f64>,
}

impl AdmissibleSet {
    pub fn new(h: DMatrix<f64>) -> Self {
        assert!(h.iter().all(|v| v.is_finite()), "non-finite admissible rows");
        assert!(h.nrows() > h.ncols(), "admissible set cannot be bounded");
        Self { h }
    }

    /// Axis-aligned box `[-a_k, a_k]` per input coordinate.
    pub fn symmetric_box(half_widths: &[f64]) -> Self {
        let dim = half_widths.len();
        let mut h = DMatrix::zeros(2 * dim, dim);
        for (k, &a) in half_widths.iter().enumerate() {
            assert!(a > 0.0);
            h[(2 * k, k)] = 1.0 / a;
            h[(2 * k + 1, k)] = -1.0 / a;
        }
        Self { h }
    }

    /// Regular polygon with `sides` faces and the given inradius (2-D).
    pub fn regular_polygon(sides: usize, inradius: f64) -> Self {
        assert!(sides >= 3 && inradius > 0.0);
        let mut h = DMatrix::zeros(sides, 2);
        for k in 0..sides {
            let th = std::f64::consts::TAU * k as f64 / sides as f64;
            h[(k, 0)] = th.cos() / inradius;
            h[(k, 1)] = th.sin() / inradius;
        }
        Self { h }
    }

    pub fn n_rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        (&self.h * u)
            .iter()
            .all(|&v| v <= 1.0 + tol)
    }

    /// Per-axis extent `max u_k - min u_k` over the admissible set,
    /// computed by LP so it works in any input dimension.
    pub fn axis_extents(&self) -> Vec<f64> {
        let n = self.dim();
        let m = self.n_rows();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut c = DVector::zeros(n);
            c[k] = 1.0;
            let base = LpProblem::inequality_form(
                c.clone(),
                self.h.clone(),
                DVector::from_element(m, 1.0),
                DVector::from_element(n, f64::NEG_INFINITY),
                DVector::from_element(n, f64::INFINITY),
            );
            let lo = solve_lp(&base);
            let hi = solve_lp(&LpProblem { c: -c, ..base });
            assert_eq!(lo.status, LpStatus::Optimal, "admissible set unbounded");
            assert_eq!(hi.status, LpStatus::Optimal, "admissible set unbounded");
            out.push(-hi.objective - lo.objective);
        }
        out
    }

    /// Admissible set as an HPolytope.
    pub fn to_polytope(&self) -> HPolytope {
        HPolytope::new(self.h.clone(), DVector::from_element(self.n_rows(), 1.0))
    }

    fn check_samples(&self, samples: &[DVector<f64>]) -> Result<(), SetLearnError> {
        for (index, u) in samples.iter().enumerate() {
            let worst = (&self.h * u)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > 1.0 + ADMISSIBLE_TOL {
                return Err(SetLearnError::SampleOutsideAdmissible {
                    index,
                    violation: worst - 1.0,
                });
            }
        }
        Ok(())
    }
}

/// Observed obstacle inputs, optionally windowed to the last `capacity`.
#[derive(Clone, Debug, Default)]
pub struct InfoSet {
    samples: Vec<DVector<f64>>,
    capacity: Option<usize>,
}

impl InfoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(window: usize) -> Self {
        assert!(window >= 1);
        Self {
            samples: Vec::new(),
            capacity: Some(window),
        }
    }

    pub fn from_samples(samples: Vec<DVector<f64>>) -> Self {
        Self {
            samples,
            capacity: None,
        }
    }

    pub fn push(&mut self, u: DVector<f64>) {
        assert!(u.iter().all(|v| v.is_finite()), "non-finite sample");
        self.samples.push(u);
        if let Some(cap) = self.capacity {
            while self.samples.len() > cap {
                self.samples.remove(0);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }
}

/// Optimal parameters of the learned set `{u : Hu <= theta + Hy}`.
///
/// Storing `y` instead of the translation vertex `v = y/(1-rho)` keeps the
/// `rho = 1` case singularity-free (there `y = 0` is forced).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnedSet {
    #[serde(
        rename = "H",
        serialize_with = "crate::geometry::ser_matrix",
        deserialize_with = "crate::geometry::de_matrix"
    )]
    pub h: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::ser_vector",
        deserialize_with = "crate::geometry::de_vector"
    )]
    pub theta: DVector<f64>,
    #[serde(
        serialize_with = "crate::geometry::ser_vector",
        deserialize_with = "crate::geometry::de_vector"
    )]
    pub y: DVector<f64>,
    pub rho: f64,
    pub objective: f64,
}

impl LearnedSet {
    /// The learned set in halfspace form: `(H, theta + Hy)`.
    pub fn to_polytope(&self) -> HPolytope {
        HPolytope::new(self.h.clone(), &self.theta + &self.h * &self.y)
    }

    /// Vertex form of a 2-D learned set.
    pub fn vertices_2d(&self) -> Result<VPolytope, GeometryError> {
        self.to_polytope().vertices_2d()
    }

    /// Area of a 2-D learned set (0 for degenerate sets).
    pub fn area_2d(&self) -> f64 {
        match self.vertices_2d() {
            Ok(v) => v.area_2d(),
            Err(_) => 0.0,
        }
    }

    /// One CSV log line: `t, rho, objective, area`.
    pub fn csv_line(&self, t: usize) -> String {
        format!(
            "{},{},{},{}",
            t,
            crate::jsonio::fmt_f64(self.rho),
            crate::jsonio::fmt_f64(self.objective),
            crate::jsonio::fmt_f64(self.area_2d())
        )
    }
}

/// Shared layout of the learning LPs: variables ordered `(y, rho, theta)`.
/// The fixed order pins which of several degenerate optima the deterministic
/// simplex returns.
fn lp_skeleton(h: &DMatrix<f64>, extra_rows: usize) -> (LpProblem, usize, usize) {
    let n_v = h.nrows();
    let n_u = h.ncols();
    let n = n_u + 1 + n_v;
    let m = extra_rows + 2 * n_v;
    let mut a = DMatrix::zeros(m, n);
    let b = DVector::zeros(m);
    // Rows [extra .. extra+n_v): H y + rho 1 <= 1
    // Rows [extra+n_v .. extra+2n_v): theta - rho 1 <= 0
    for i in 0..n_v {
        for j in 0..n_u {
            a[(extra_rows + i, j)] = h[(i, j)];
        }
        a[(extra_rows + i, n_u)] = 1.0;
        a[(extra_rows + n_v + i, n_u)] = -1.0;
        a[(extra_rows + n_v + i, n_u + 1 + i)] = 1.0;
    }
    let mut b = b;
    for i in 0..n_v {
        b[extra_rows + i] = 1.0;
    }
    let mut lb = DVector::from_element(n, f64::NEG_INFINITY);
    let mut ub = DVector::from_element(n, f64::INFINITY);
    for j in n_u..n {
        lb[j] = 0.0;
        ub[j] = 1.0;
    }
    let mut c = DVector::zeros(n);
    c[n_u] = 1.0;
    for j in (n_u + 1)..n {
        c[j] = 1.0;
    }
    (
        LpProblem::inequality_form(c, a, b, lb, ub),
        n_u,
        n_v,
    )
}

/// Batch learning LP over a set of samples:
/// `min 1'theta + rho  s.t.  Hu - Hy <= theta  (per sample),
///  Hy <= (1-rho)1,  rho in [0,1],  theta in [0,1]^{n_v},  theta <= rho 1`.
pub(crate) fn build_batch_lp(h: &DMatrix<f64>, samples: &[DVector<f64>]) -> LpProblem {
    let n_v = h.nrows();
    let n_u = h.ncols();
    let extra = samples.len() * n_v;
    let (mut p, _, _) = lp_skeleton(h, extra);
    for (k, u) in samples.iter().enumerate() {
        let hu = h * u;
        for i in 0..n_v {
            let r = k * n_v + i;
            for j in 0..n_u {
                p.a_ub[(r, j)] = -h[(i, j)];
            }
            p.a_ub[(r, n_u + 1 + i)] = -1.0;
            p.b_ub[r] = -hu[i];
        }
    }
    p
}

/// Recursion LP: one fresh sample plus the row-wise condition
/// `H y_pre + theta_pre <= H y + theta` that keeps the previous set inside.
fn build_recursive_lp(prev: &LearnedSet, u_new: &DVector<f64>) -> LpProblem {
    let h = &prev.h;
    let n_v = h.nrows();
    let n_u = h.ncols();
    let (mut p, _, _) = lp_skeleton(h, 2 * n_v);
    let hu = h * u_new;
    let keep = h * &prev.y + &prev.theta;
    for i in 0..n_v {
        for j in 0..n_u {
            p.a_ub[(i, j)] = -h[(i, j)];
            p.a_ub[(n_v + i, j)] = -h[(i, j)];
        }
        p.a_ub[(i, n_u + 1 + i)] = -1.0;
        p.b_ub[i] = -hu[i];
        p.a_ub[(n_v + i, n_u + 1 + i)] = -1.0;
        p.b_ub[n_v + i] = -keep[i];
    }
    p
}

fn solution_to_set(h: &DMatrix<f64>, sol: crate::linprog::LpSolution) -> Result<LearnedSet, SetLearnError> {
    if sol.status != LpStatus::Optimal {
        return Err(SetLearnError::LpFailed(sol.status));
    }
    let n_u = h.ncols();
    let n_v = h.nrows();
    let y = DVector::from_iterator(n_u, (0..n_u).map(|j| sol.x[j]));
    let rho = sol.x[n_u];
    let theta = DVector::from_iterator(n_v, (0..n_v).map(|i| sol.x[n_u + 1 + i]));
    Ok(LearnedSet {
        h: h.clone(),
        theta,
        y,
        rho,
        objective: sol.objective,
    })
}

/// Fit the minimal parameterized set containing every sample in `info`.
pub fn batch_learn(adm: &AdmissibleSet, info: &InfoSet) -> Result<LearnedSet, SetLearnError> {
    if info.is_empty() {
        return Err(SetLearnError::EmptyInfoSet);
    }
    adm.check_samples(info.samples())?;
    let p = build_batch_lp(&adm.h, info.samples());
    solution_to_set(&adm.h, solve_lp(&p))
}

/// Moving-horizon variant: batch learning over the sliding window that
/// `InfoSet::with_capacity` maintains.
pub fn moving_horizon_learn(adm: &AdmissibleSet, info: &InfoSet) -> Result<LearnedSet, SetLearnError> {
    debug_assert!(
        info.capacity().is_some(),
        "moving-horizon learning expects a windowed InfoSet"
    );
    batch_learn(adm, info)
}

/// Grow `prev` minimally so the new sample is contained. The LP has a fixed
/// number of constraints regardless of how many samples preceded it.
pub fn recursive_update(prev: &LearnedSet, u_new: &DVector<f64>) -> Result<LearnedSet, SetLearnError> {
    let adm = AdmissibleSet { h: prev.h.clone() };
    adm.check_samples(std::slice::from_ref(u_new))?;
    let p = build_recursive_lp(prev, u_new);
    solution_to_set(&prev.h, solve_lp(&p))
}

/// Initialize learning from artificial seed samples.
pub fn init_seed(adm: &AdmissibleSet, seed_samples: &[DVector<f64>]) -> Result<LearnedSet, SetLearnError> {
    if seed_samples.is_empty() {
        return Err(SetLearnError::EmptyInfoSet);
    }
    batch_learn(adm, &InfoSet::from_samples(seed_samples.to_vec()))
}

/// Default artificial seeds: one pair of axis samples per input coordinate
/// at 1% of the admissible extent along that axis.
pub fn default_seed_samples(adm: &AdmissibleSet) -> Vec<DVector<f64>> {
    let extents = adm.axis_extents();
    let n = adm.dim();
    let mut seeds = Vec::with_capacity(2 * n);
    for k in 0..n {
        let mag = 0.01 * extents[k];
        let mut up = DVector::zeros(n);
        up[k] = mag;
        seeds.push(up.clone());
        seeds.push(-up);
    }
    seeds
}
