//! Forward reachable sets and predicted occupancies of an LTV obstacle.
//!
//! The tube recursion is `R[0] = {x0}`, `R[i+1] = A_i R[i] (+) B_i U`, with
//! the occupancy `O[i]` the position projection of `R[i+1]`. Everything is
//! propagated in vertex form, where images and Minkowski sums are exact.
//!
//! For the double-integrator obstacle model the x and y axes decouple, so
//! the 4-D tube is maintained as two 2-D per-axis tubes recombined by
//! Cartesian product — no higher-dimensional hull code is needed. The
//! per-axis control sets are the axis projections of `U`, which makes the
//! product exact when `U` is itself a product set and a sound outer bound
//! otherwise. Coupled LTV models fall back to direct pairwise-sum
//! propagation with LP-based pruning of non-extreme vertices.

use crate::geometry::{hull_2d, GeometryError, HPolytope, VPolytope, DEGENERACY_TOL, INFLATE_EPS};
use nalgebra::{DMatrix, DVector, Vector2};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("model provides {got} steps of matrices, horizon needs {needed}")]
    HorizonTooLong { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Linear time-varying obstacle model `x_{k+1} = A_k x_k + B_k u_k` plus the
/// coordinates of the state that are positions.
#[derive(Clone, Debug)]
pub struct LtvModel {
    pub a_seq: Vec<DMatrix<f64>>,
    pub b_seq: Vec<DMatrix<f64>>,
    pub position_dims: Vec<usize>,
}

impl LtvModel {
    /// Time-invariant double-integrator model repeated over `n` steps,
    /// state `(p_x, v_x, p_y, v_y)`.
    pub fn sv_lti(t_s: f64, n: usize) -> Self {
        let (a, b) = crate::vehicle::sv_matrices(t_s);
        let a = DMatrix::from_fn(4, 4, |i, j| a[(i, j)]);
        let b = DMatrix::from_fn(4, 2, |i, j| b[(i, j)]);
        Self {
            a_seq: vec![a; n],
            b_seq: vec![b; n],
            position_dims: vec![0, 2],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a_seq[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b_seq[0].ncols()
    }

    /// True when the model splits into independent (position, velocity)
    /// blocks per axis, each driven by its own input coordinate — the
    /// double-integrator structure.
    fn is_axis_decoupled(&self) -> bool {
        if self.state_dim() != 4 || self.input_dim() != 2 || self.position_dims != [0, 2] {
            return false;
        }
        let in_block = |i: usize, j: usize| (i < 2) == (j < 2);
        for a in &self.a_seq {
            for i in 0..4 {
                for j in 0..4 {
                    if !in_block(i, j) && a[(i, j)].abs() > 1e-14 {
                        return false;
                    }
                }
            }
        }
        for b in &self.b_seq {
            for i in 0..4 {
                let axis = usize::from(i >= 2);
                for j in 0..2 {
                    if j != axis && b[(i, j)].abs() > 1e-14 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Forward tube: `r` has length N+1 in state space (`r[0]` is the single
/// measured state), `o` has length N in position space with
/// `o[i] = project(r[i+1], position_dims)`.
#[derive(Clone, Debug)]
pub struct ReachTube {
    pub r: Vec<VPolytope>,
    pub o: Vec<VPolytope>,
}

/// JSON export of a tube: per-step vertex lists for plotting overlays.
#[derive(Serialize)]
pub struct TubeExport {
    pub reach: Vec<Vec<Vec<f64>>>,
    pub occupancy: Vec<Vec<Vec<f64>>>,
}

impl ReachTube {
    pub fn horizon(&self) -> usize {
        self.o.len()
    }

    pub fn export(&self) -> TubeExport {
        let dump = |polys: &[VPolytope]| {
            polys
                .iter()
                .map(|p| p.vertices.iter().map(|v| v.as_slice().to_vec()).collect())
                .collect()
        };
        TubeExport {
            reach: dump(&self.r),
            occupancy: dump(&self.o),
        }
    }
}

/// Interval hull of one coordinate of a vertex set.
fn axis_interval(u: &VPolytope, axis: usize) -> (f64, f64) {
    let lo = u.vertices.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
    let hi = u.vertices.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Per-axis 2-D tube step: `hull(A2 R (+) B2 [lo, hi])` with `A2` the 2x2
/// axis block and `B2` its 2x1 input column.
fn axis_step(
    tube: &VPolytope,
    a2: &DMatrix<f64>,
    b2: &Vector2<f64>,
    interval: (f64, f64),
) -> VPolytope {
    let mut pts: Vec<Vector2<f64>> = Vec::with_capacity(tube.n_vertices() * 2);
    for v in &tube.vertices {
        let base = Vector2::new(
            a2[(0, 0)] * v[0] + a2[(0, 1)] * v[1],
            a2[(1, 0)] * v[0] + a2[(1, 1)] * v[1],
        );
        pts.push(base + b2 * interval.0);
        pts.push(base + b2 * interval.1);
    }
    hull_2d(&pts)
}

/// Cartesian product of the per-axis tubes, reassembled in state order
/// `(p_x, v_x, p_y, v_y)`. Extreme points of a product are exactly the
/// products of extreme points.
fn recombine(x_tube: &VPolytope, y_tube: &VPolytope) -> VPolytope {
    let mut verts = Vec::with_capacity(x_tube.n_vertices() * y_tube.n_vertices());
    for vx in &x_tube.vertices {
        for vy in &y_tube.vertices {
            verts.push(DVector::from_column_slice(&[vx[0], vx[1], vy[0], vy[1]]));
        }
    }
    VPolytope::new(verts)
}

/// Prune vertices that are convex combinations of the others. Only needed on
/// the generic path where sums cannot be re-hulled exactly.
fn prune_non_extreme(v: VPolytope) -> VPolytope {
    if v.dim() <= 2 || v.n_vertices() <= v.dim() + 1 {
        return v;
    }
    let mut keep: Vec<DVector<f64>> = Vec::with_capacity(v.n_vertices());
    for (i, cand) in v.vertices.iter().enumerate() {
        let others: Vec<DVector<f64>> = v
            .vertices
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, w)| w.clone())
            .collect();
        let hull = VPolytope::new(others);
        if !hull.contains_lp(cand, 1e-9).unwrap_or(false) {
            keep.push(cand.clone());
        }
    }
    if keep.is_empty() {
        // fully degenerate set (all vertices coincide)
        keep.push(v.vertices[0].clone());
    }
    VPolytope::new(keep)
}

/// Forward occupancy of the obstacle over `n` steps with the control set
/// held fixed across the horizon.
pub fn forward_occupancy(
    model: &LtvModel,
    x0: &DVector<f64>,
    u_set: &VPolytope,
    n: usize,
) -> Result<ReachTube, ReachError> {
    if n == 0 {
        return Err(ReachError::ZeroHorizon);
    }
    if model.a_seq.len() < n || model.b_seq.len() < n {
        return Err(ReachError::HorizonTooLong {
            needed: n,
            got: model.a_seq.len().min(model.b_seq.len()),
        });
    }
    if x0.len() != model.state_dim() {
        return Err(ReachError::Dimension(format!(
            "x0 has dim {}, model expects {}",
            x0.len(),
            model.state_dim()
        )));
    }
    if u_set.dim() != model.input_dim() {
        return Err(ReachError::Dimension(format!(
            "control set has dim {}, model expects {}",
            u_set.dim(),
            model.input_dim()
        )));
    }

    if model.is_axis_decoupled() {
        let mut x_tube = VPolytope::point(&[x0[0], x0[1]]);
        let mut y_tube = VPolytope::point(&[x0[2], x0[3]]);
        let ux = axis_interval(u_set, 0);
        let uy = axis_interval(u_set, 1);
        let mut r = vec![VPolytope::new(vec![x0.clone()])];
        let mut o = Vec::with_capacity(n);
        for i in 0..n {
            let a = &model.a_seq[i];
            let b = &model.b_seq[i];
            let ax = DMatrix::from_fn(2, 2, |p, q| a[(p, q)]);
            let ay = DMatrix::from_fn(2, 2, |p, q| a[(p + 2, q + 2)]);
            let bx = Vector2::new(b[(0, 0)], b[(1, 0)]);
            let by = Vector2::new(b[(2, 1)], b[(3, 1)]);
            x_tube = axis_step(&x_tube, &ax, &bx, ux);
            y_tube = axis_step(&y_tube, &ay, &by, uy);
            let state_set = recombine(&x_tube, &y_tube);
            o.push(state_set.project(&model.position_dims)?);
            r.push(state_set);
        }
        return Ok(ReachTube { r, o });
    }

    // Generic coupled path: direct pairwise-sum propagation.
    let mut r = vec![VPolytope::new(vec![x0.clone()])];
    let mut o = Vec::with_capacity(n);
    for i in 0..n {
        let a = &model.a_seq[i];
        let b = &model.b_seq[i];
        let imaged = r[i].affine_image(a)?;
        let driven = u_set.affine_image(b)?;
        let next = prune_non_extreme(imaged.minkowski_sum(&driven)?);
        o.push(next.project(&model.position_dims)?);
        r.push(next);
    }
    Ok(ReachTube { r, o })
}

/// Halfspace form of each occupancy, inflating degenerate (point or segment)
/// sets by the geometry policy's epsilon box first.
pub fn occupancy_hrep(tube: &ReachTube) -> Vec<HPolytope> {
    tube.o
        .iter()
        .map(|occ| {
            let fat = if occ.area_2d() <= DEGENERACY_TOL {
                occ.inflate_2d(INFLATE_EPS)
            } else {
                occ.clone()
            };
            fat.hrep().expect("inflated occupancy is full-dimensional")
        })
        .collect()
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
    fn zero_input_single_point() {
        let m = LtvModel::sv_lti(0.25, 10);
        let x0 = dv(&[0.0, 1.0, 0.0, 0.0]);
        let u = VPolytope::point(&[0.0, 0.0]);
        let tube = forward_occupancy(&m, &x0, &u, 10).unwrap();
        assert_eq!(tube.r.len(), 11);
        assert_eq!(tube.o.len(), 10);
        assert_eq!(tube.r[0].n_vertices(), 1);
        let o0 = &tube.o[0];
        assert_eq!(o0.n_vertices(), 1);
        assert!((o0.vertices[0][0] - 0.25).abs() < 1e-15);
        assert!(o0.vertices[0][1].abs() < 1e-15);
    }

    #[test]
    fn constant_acceleration_point() {
        let m = LtvModel::sv_lti(0.25, 3);
        let x0 = dv(&[0.0, 1.0, 0.0, 0.0]);
        let u = VPolytope::point(&[1.0, 0.0]);
        let tube = forward_occupancy(&m, &x0, &u, 3).unwrap();
        let o0 = &tube.o[0];
        assert!((o0.vertices[0][0] - (0.25 + 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn horizon_errors() {
        let m = LtvModel::sv_lti(0.25, 2);
        let x0 = dv(&[0.0; 4]);
        let u = VPolytope::point(&[0.0, 0.0]);
        assert!(matches!(
            forward_occupancy(&m, &x0, &u, 0),
            Err(ReachError::ZeroHorizon)
        ));
        assert!(matches!(
            forward_occupancy(&m, &x0, &u, 3),
            Err(ReachError::HorizonTooLong { .. })
        ));
        assert!(matches!(
            forward_occupancy(&m, &dv(&[0.0; 3]), &u, 2),
            Err(ReachError::Dimension(_))
        ));
    }

    /// Monte-Carlo rollout oracle: every simulated trajectory with admissible
    /// inputs must stay inside the tube.
    #[test]
    fn rollouts_stay_inside_tube() {
        let n = 3;
        let m = LtvModel::sv_lti(0.25, n);
        let x0 = dv(&[0.0, 0.0, 0.0, 0.0]);
        let u_box = VPolytope::from_points_2d(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        let tube = forward_occupancy(&m, &x0, &u_box, n).unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..1000 {
            let mut x = x0.clone();
            for i in 0..n {
                let u = dv(&[rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0]);
                x = &m.a_seq[i] * &x + &m.b_seq[i] * &u;
                assert!(
                    tube.r[i + 1].contains_lp(&x, 1e-7).unwrap(),
                    "state escaped tube at step {i}"
                );
                let p = dv(&[x[0], x[2]]);
                assert!(tube.o[i].contains_lp(&p, 1e-7).unwrap());
            }
        }
    }

    #[test]
    fn generic_path_matches_fast_path_for_box_input() {
        // A coupled-looking copy of the same model (force the generic path by
        // perturbing position_dims order is invalid; instead compare via a
        // tiny cross-coupling of exactly zero magnitude built as generic).
        let n = 3;
        let fast = LtvModel::sv_lti(0.25, n);
        let mut generic = fast.clone();
        // a structurally identical matrix that defeats the block test
        generic.a_seq[0][(0, 2)] = 1e-13;
        assert!(!generic.is_axis_decoupled());
        let x0 = dv(&[0.1, 0.4, -0.2, 0.3]);
        let u = VPolytope::from_points_2d(&[[-0.5, -0.2], [0.5, -0.2], [0.5, 0.2], [-0.5, 0.2]]);
        let a = forward_occupancy(&fast, &x0, &u, n).unwrap();
        let b = forward_occupancy(&generic, &x0, &u, n).unwrap();
        for i in 0..n {
            // same occupancies up to the 1e-13 perturbation
            for v in &a.o[i].vertices {
                assert!(b.o[i].contains_lp(v, 1e-6).unwrap());
            }
            for v in &b.o[i].vertices {
                assert!(a.o[i].contains_lp(v, 1e-6).unwrap());
            }
        }
    }

    #[test]
    fn monotone_in_control_set() {
        let n = 5;
        let m = LtvModel::sv_lti(0.25, n);
        let x0 = dv(&[1.0, -0.3, 2.0, 0.2]);
        let small = VPolytope::from_points_2d(&[[-0.3, -0.3], [0.3, -0.3], [0.3, 0.3], [-0.3, 0.3]]);
        let zero = VPolytope::point(&[0.0, 0.0]);
        let big = VPolytope::from_points_2d(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        let t0 = forward_occupancy(&m, &x0, &zero, n).unwrap();
        let t1 = forward_occupancy(&m, &x0, &small, n).unwrap();
        let t2 = forward_occupancy(&m, &x0, &big, n).unwrap();
        for i in 0..n {
            for v in &t0.o[i].vertices {
                assert!(t1.o[i].contains_lp(v, 1e-9).unwrap());
            }
            for v in &t1.o[i].vertices {
                assert!(t2.o[i].contains_lp(v, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn translation_covariance() {
        let n = 4;
        let m = LtvModel::sv_lti(0.25, n);
        let u = VPolytope::from_points_2d(&[[-0.4, 0.0], [0.4, 0.0], [0.0, 0.4], [0.0, -0.4]]);
        let x0 = dv(&[0.0, 0.5, 0.0, -0.1]);
        let shift = [3.0, -2.0];
        let x1 = dv(&[shift[0], 0.5, shift[1], -0.1]);
        let t0 = forward_occupancy(&m, &x0, &u, n).unwrap();
        let t1 = forward_occupancy(&m, &x1, &u, n).unwrap();
        for i in 0..n {
            assert_eq!(t0.o[i].n_vertices(), t1.o[i].n_vertices());
            for v in &t0.o[i].vertices {
                let moved = dv(&[v[0] + shift[0], v[1] + shift[1]]);
                assert!(t1.o[i].vertices.iter().any(|w| (w - &moved).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn hrep_inflates_degenerate_occupancy() {
        let m = LtvModel::sv_lti(0.25, 2);
        let x0 = dv(&[0.0, 1.0, 0.0, 0.0]);
        let u = VPolytope::point(&[0.0, 0.0]);
        let tube = forward_occupancy(&m, &x0, &u, 2).unwrap();
        let hs = occupancy_hrep(&tube);
        assert_eq!(hs.len(), 2);
        // the inflated box contains the point and is tiny
        assert!(hs[0].contains(&dv(&[0.25, 0.0]), 1e-12).unwrap());
        assert!(!hs[0].contains(&dv(&[0.25 + 1e-3, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn hrep_membership_agrees_with_vform() {
        let n = 4;
        let m = LtvModel::sv_lti(0.25, n);
        let x0 = dv(&[0.5, 0.2, -0.4, 0.6]);
        let u = VPolytope::from_points_2d(&[[-0.6, -0.1], [0.6, -0.1], [0.6, 0.1], [-0.6, 0.1]]);
        let tube = forward_occupancy(&m, &x0, &u, n).unwrap();
        let hs = occupancy_hrep(&tube);
        let mut rng = StdRng::seed_from_u64(33);
        for i in 0..n {
            for _ in 0..500 {
                let p = dv(&[
                    x0[0] + rng.random::<f64>() * 3.0 - 1.0,
                    x0[2] + rng.random::<f64>() * 3.0 - 1.0,
                ]);
                let in_h = hs[i].contains(&p, 1e-9).unwrap();
                let in_v = tube.o[i].contains_lp(&p, 1e-9).unwrap();
                if in_h != in_v {
                    // disagreement is only allowed within a hair of the boundary
                    let strict_h = hs[i].contains(&p, -1e-6).unwrap();
                    let loose_v = tube.o[i].contains_lp(&p, 1e-6).unwrap();
                    assert!(!strict_h || loose_v, "membership mismatch at step {i}");
                }
            }
        }
    }

    #[test]
    fn export_shape() {
        let m = LtvModel::sv_lti(0.25, 2);
        let tube = forward_occupancy(
            &m,
            &dv(&[0.0, 0.0, 0.0, 0.0]),
            &VPolytope::from_points_2d(&[[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]]),
            2,
        )
        .unwrap();
        let e = tube.export();
        assert_eq!(e.reach.len(), 3);
        assert_eq!(e.occupancy.len(), 2);
        assert_eq!(e.reach[0][0].len(), 4);
        assert_eq!(e.occupancy[0][0].len(), 2);
        let json = crate::jsonio::to_json_string(&e).unwrap();
        assert!(json.contains("\"occupancy\""));
    }
}
