//! Exact small-dimension convex-polytope kernel.
//!
//! Two representations are used side by side: halfspace form for membership
//! tests and planner constraints, vertex form for the set arithmetic
//! (affine images, Minkowski sums, projections) needed by reachability.
//! All 2-D hull and distance routines are closed-form and deterministic.
//!
//! Tolerance policy, used everywhere in this crate:
//! membership 1e-9, degeneracy 1e-12, hull orientation 1e-12,
//! degenerate-set inflation 1e-6.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Membership slack: `x` satisfies a halfspace if `n·x <= b + MEMBERSHIP_TOL`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Below this area a 2-D set is treated as degenerate (point or segment).
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Epsilon for cross-product sign decisions in hull construction.
pub const ORIENTATION_EPS: f64 = 1e-12;
/// Half-width of the box used to inflate degenerate sets before H-conversion.
pub const INFLATE_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polytope is empty")]
    EmptySet,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("degenerate hull (area <= {0:e}); inflate before converting")]
    DegenerateHull(f64),
    #[error("projection dimension list is empty")]
    EmptyDims,
}

/// Convex polytope in halfspace form, `{x : Hx <= b}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HPolytope {
    #[serde(
        rename = "H",
        serialize_with = "ser_matrix",
        deserialize_with = "de_matrix"
    )]
    pub h: DMatrix<f64>,
    #[serde(serialize_with = "ser_vector", deserialize_with = "de_vector")]
    pub b: DVector<f64>,
}

/// Convex polytope as the hull of its vertices; counter-clockwise for dim 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VPolytope {
    #[serde(
        serialize_with = "ser_vertices",
        deserialize_with = "de_vertices"
    )]
    pub vertices: Vec<DVector<f64>>,
}

impl HPolytope {
    pub fn new(h: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(h.nrows(), b.len(), "row count of H must match b");
        Self { h, b }
    }

    /// Axis-aligned box `[lo_k, hi_k]` per coordinate.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        let mut h = DMatrix::zeros(2 * dim, dim);
        let mut b = DVector::zeros(2 * dim);
        for k in 0..dim {
            h[(2 * k, k)] = 1.0;
            b[2 * k] = hi[k];
            h[(2 * k + 1, k)] = -1.0;
            b[2 * k + 1] = -lo[k];
        }
        Self { h, b }
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.h.nrows()
    }

    /// `true` iff `Hx <= b + tol` component-wise.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool, GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let r = &self.h * x - &self.b;
        Ok(r.iter().all(|&v| v <= tol))
    }

    /// Translate by `y`: `{x : Hx <= b + Hy}`.
    pub fn translate(&self, y: &DVector<f64>) -> Result<HPolytope, GeometryError> {
        if y.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(HPolytope {
            h: self.h.clone(),
            b: &self.b + &self.h * y,
        })
    }

    /// Exact vertex enumeration for 2-D polytopes: intersect halfspace
    /// boundaries pairwise, keep feasible points, hull them CCW.
    /// Redundant rows are ignored by construction.
    pub fn vertices_2d(&self) -> Result<VPolytope, GeometryError> {
        if self.dim() != 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        // Normalized rows; a zero-normal row is either vacuous or infeasible.
        let mut rows: Vec<(Vector2<f64>, f64)> = Vec::with_capacity(self.n_rows());
        for i in 0..self.n_rows() {
            let n = Vector2::new(self.h[(i, 0)], self.h[(i, 1)]);
            let norm = n.norm();
            if norm <= DEGENERACY_TOL {
                if self.b[i] < -MEMBERSHIP_TOL {
                    return Err(GeometryError::EmptySet);
                }
                continue;
            }
            rows.push((n / norm, self.b[i] / norm));
        }
        // Bounded iff the recession cone {d : Hd <= 0} is trivial, which for
        // normalized normals means no circular gap of >= pi between them.
        if rows.len() < 3 {
            return Err(GeometryError::Unbounded);
        }
        let mut angles: Vec<f64> = rows.iter().map(|(n, _)| n.y.atan2(n.x)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut max_gap = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
        for w in angles.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        if max_gap >= std::f64::consts::PI - 1e-9 {
            return Err(GeometryError::Unbounded);
        }

        let feasible = |p: &Vector2<f64>| rows.iter().all(|(n, b)| n.dot(p) <= b + MEMBERSHIP_TOL);
        let mut pts: Vec<Vector2<f64>> = Vec::new();
        for i in 0..rows.len() {
            for j in (i + 1)..rows.len() {
                let (n1, b1) = rows[i];
                let (n2, b2) = rows[j];
                let det = n1.x * n2.y - n1.y * n2.x;
                if det.abs() <= ORIENTATION_EPS {
                    continue;
                }
                let p = Vector2::new((b1 * n2.y - b2 * n1.y) / det, (n1.x * b2 - n2.x * b1) / det);
                if feasible(&p) {
                    pts.push(p);
                }
            }
        }
        if pts.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        Ok(hull_2d(&pts))
    }
}

impl VPolytope {
    pub fn new(vertices: Vec<DVector<f64>>) -> Self {
        assert!(!vertices.is_empty(), "vertex polytope must be nonempty");
        let dim = vertices[0].len();
        assert!(vertices.iter().all(|v| v.len() == dim));
        Self { vertices }
    }

    pub fn point(x: &[f64]) -> Self {
        Self {
            vertices: vec![DVector::from_column_slice(x)],
        }
    }

    pub fn from_points_2d(points: &[[f64; 2]]) -> Self {
        hull_2d(
            &points
                .iter()
                .map(|p| Vector2::new(p[0], p[1]))
                .collect::<Vec<_>>(),
        )
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Linear image `{Av : v in V}`, re-hulled where the target dimension
    /// allows (1-D and 2-D); higher-dimensional images are deduplicated only.
    pub fn affine_image(&self, a: &DMatrix<f64>) -> Result<VPolytope, GeometryError> {
        if a.ncols() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: a.ncols(),
            });
        }
        let mapped: Vec<DVector<f64>> = self.vertices.iter().map(|v| a * v).collect();
        Ok(reduce_vertex_set(mapped))
    }

    /// Minkowski sum via pairwise vertex sums; exact for convex polytopes.
    pub fn minkowski_sum(&self, other: &VPolytope) -> Result<VPolytope, GeometryError> {
        if other.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let mut sums = Vec::with_capacity(self.n_vertices() * other.n_vertices());
        for p in &self.vertices {
            for q in &other.vertices {
                sums.push(p + q);
            }
        }
        Ok(reduce_vertex_set(sums))
    }

    /// Coordinate projection onto `dims`.
    pub fn project(&self, dims: &[usize]) -> Result<VPolytope, GeometryError> {
        if dims.is_empty() {
            return Err(GeometryError::EmptyDims);
        }
        if let Some(&bad) = dims.iter().find(|&&d| d >= self.dim()) {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: bad,
            });
        }
        let projected: Vec<DVector<f64>> = self
            .vertices
            .iter()
            .map(|v| DVector::from_iterator(dims.len(), dims.iter().map(|&d| v[d])))
            .collect();
        Ok(reduce_vertex_set(projected))
    }

    /// Shoelace area; 0 for degenerate sets.
    pub fn area_2d(&self) -> f64 {
        assert_eq!(self.dim(), 2, "area_2d requires a 2-D polytope");
        if self.n_vertices() < 3 {
            return 0.0;
        }
        let n = self.n_vertices();
        let mut acc = 0.0;
        for i in 0..n {
            let p = &self.vertices[i];
            let q = &self.vertices[(i + 1) % n];
            acc += p[0] * q[1] - q[0] * p[1];
        }
        acc.abs() / 2.0
    }

    /// Minimum Euclidean distance between two 2-D polytopes; 0 iff they
    /// intersect. Minimizes over boundary segment pairs in closed form.
    pub fn distance_2d(&self, other: &VPolytope) -> f64 {
        assert_eq!(self.dim(), 2);
        assert_eq!(other.dim(), 2);
        let pa: Vec<Vector2<f64>> = self.vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect();
        let pb: Vec<Vector2<f64>> = other.vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect();
        // Containment covers the case where one set lies strictly inside the
        // other and no boundary segments come close.
        if point_in_ccw_polygon(&pa, &pb[0]) || point_in_ccw_polygon(&pb, &pa[0]) {
            return 0.0;
        }
        let segs = |pts: &[Vector2<f64>]| -> Vec<(Vector2<f64>, Vector2<f64>)> {
            match pts.len() {
                1 => vec![(pts[0], pts[0])],
                n => (0..n).map(|i| (pts[i], pts[(i + 1) % n])).collect(),
            }
        };
        let mut best = f64::INFINITY;
        for (a1, a2) in segs(&pa) {
            for (b1, b2) in segs(&pb) {
                best = best.min(segment_distance(a1, a2, b1, b2));
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
        best
    }

    /// Halfspace form of a full-dimensional 2-D polytope, one row per hull
    /// edge with unit outward normals.
    pub fn hrep(&self) -> Result<HPolytope, GeometryError> {
        if self.dim() != 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        if self.area_2d() <= DEGENERACY_TOL {
            return Err(GeometryError::DegenerateHull(DEGENERACY_TOL));
        }
        let n = self.n_vertices();
        let mut h = DMatrix::zeros(n, 2);
        let mut b = DVector::zeros(n);
        for i in 0..n {
            let p = &self.vertices[i];
            let q = &self.vertices[(i + 1) % n];
            let e = Vector2::new(q[0] - p[0], q[1] - p[1]);
            // CCW boundary keeps the interior on the left; rotating the edge
            // by -90 degrees points outward.
            let normal = Vector2::new(e.y, -e.x).normalize();
            h[(i, 0)] = normal.x;
            h[(i, 1)] = normal.y;
            b[i] = normal.x * p[0] + normal.y * p[1];
        }
        Ok(HPolytope { h, b })
    }

    /// Minkowski-inflate by an axis box of half-width `eps` (2-D only).
    /// Used to make degenerate occupancies full-dimensional.
    pub fn inflate_2d(&self, eps: f64) -> VPolytope {
        assert_eq!(self.dim(), 2);
        let cube = VPolytope::from_points_2d(&[
            [-eps, -eps],
            [eps, -eps],
            [eps, eps],
            [-eps, eps],
        ]);
        self.minkowski_sum(&cube).expect("dimensions match")
    }

    /// Membership in the convex hull of the vertices, via a small feasibility
    /// LP. Works in any dimension; used where 2-D cross-product tests do not
    /// apply.
    pub fn contains_lp(&self, x: &DVector<f64>, tol: f64) -> Result<bool, GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.dim() == 2 && self.n_vertices() >= 3 {
            let poly: Vec<Vector2<f64>> =
                self.vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect();
            return Ok(point_in_ccw_polygon_tol(&poly, &Vector2::new(x[0], x[1]), tol));
        }
        let m = self.n_vertices();
        let d = self.dim();
        // lambda >= 0, sum lambda = 1, V lambda = x
        let mut a_eq = DMatrix::zeros(d + 1, m);
        let mut b_eq = DVector::zeros(d + 1);
        for (j, v) in self.vertices.iter().enumerate() {
            for i in 0..d {
                a_eq[(i, j)] = v[i];
            }
            a_eq[(d, j)] = 1.0;
        }
        for i in 0..d {
            b_eq[i] = x[i];
        }
        b_eq[d] = 1.0;
        let problem = crate::linprog::LpProblem::inequality_form(
            DVector::zeros(m),
            DMatrix::zeros(0, m),
            DVector::zeros(0),
            DVector::zeros(m),
            DVector::from_element(m, f64::INFINITY),
        );
        let problem = crate::linprog::LpProblem {
            a_eq,
            b_eq,
            ..problem
        }
        .with_feasibility_tol(tol.max(1e-9));
        let sol = crate::linprog::solve_lp(&problem);
        Ok(sol.status == crate::linprog::LpStatus::Optimal)
    }
}

/// Convex hull of 2-D points (monotone chain), CCW, collinear interior
/// points dropped. Degenerate inputs yield 1 or 2 vertices.
pub fn hull_2d(points: &[Vector2<f64>]) -> VPolytope {
    assert!(!points.is_empty(), "hull of an empty point set");
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    pts.dedup_by(|a, b| (*a - *b).norm() <= DEGENERACY_TOL);

    let to_v = |pts: &[Vector2<f64>]| {
        VPolytope::new(
            pts.iter()
                .map(|p| DVector::from_column_slice(&[p.x, p.y]))
                .collect(),
        )
    };
    if pts.len() == 1 {
        return to_v(&pts);
    }
    if pts.len() == 2 {
        return to_v(&pts);
    }

    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Vector2<f64>> = Vec::with_capacity(pts.len());
    for p in &pts {
        while lower.len() >= 2
            && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= ORIENTATION_EPS
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= ORIENTATION_EPS
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All input points collinear: keep the two extremes.
        let a = pts[0];
        let b = pts[pts.len() - 1];
        return to_v(&[a, b]);
    }
    to_v(&lower)
}

/// Canonical post-processing for vertex sets produced by images, sums, and
/// projections: exact 1-D and 2-D reduction, deduplication otherwise.
fn reduce_vertex_set(mut vs: Vec<DVector<f64>>) -> VPolytope {
    assert!(!vs.is_empty());
    let dim = vs[0].len();
    match dim {
        1 => {
            let lo = vs.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = vs.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            if (hi - lo).abs() <= DEGENERACY_TOL {
                VPolytope::new(vec![DVector::from_column_slice(&[lo])])
            } else {
                VPolytope::new(vec![
                    DVector::from_column_slice(&[lo]),
                    DVector::from_column_slice(&[hi]),
                ])
            }
        }
        2 => hull_2d(
            &vs.iter()
                .map(|v| Vector2::new(v[0], v[1]))
                .collect::<Vec<_>>(),
        ),
        _ => {
            vs.sort_by(|a, b| {
                for k in 0..a.len() {
                    match a[k].partial_cmp(&b[k]).unwrap() {
                        std::cmp::Ordering::Equal => continue,
                        o => return o,
                    }
                }
                std::cmp::Ordering::Equal
            });
            vs.dedup_by(|a, b| (&*a - &*b).norm() <= DEGENERACY_TOL);
            VPolytope::new(vs)
        }
    }
}

/// Strict point-in-polygon for CCW polygons with >= 3 vertices.
fn point_in_ccw_polygon(poly: &[Vector2<f64>], p: &Vector2<f64>) -> bool {
    point_in_ccw_polygon_tol(poly, p, MEMBERSHIP_TOL)
}

fn point_in_ccw_polygon_tol(poly: &[Vector2<f64>], p: &Vector2<f64>, tol: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = b - a;
        let len = e.norm().max(DEGENERACY_TOL);
        let cross = e.x * (p.y - a.y) - e.y * (p.x - a.x);
        if cross / len < -tol {
            return false;
        }
    }
    true
}

fn orient(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn point_segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= DEGENERACY_TOL * DEGENERACY_TOL {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closed-form distance between two closed segments; 0 when they cross.
fn segment_distance(
    a1: Vector2<f64>,
    a2: Vector2<f64>,
    b1: Vector2<f64>,
    b2: Vector2<f64>,
) -> f64 {
    let d1 = orient(a1, a2, b1);
    let d2 = orient(a1, a2, b2);
    let d3 = orient(b1, b2, a1);
    let d4 = orient(b1, b2, a2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    point_segment_distance(b1, a1, a2)
        .min(point_segment_distance(b2, a1, a2))
        .min(point_segment_distance(a1, b1, b2))
        .min(point_segment_distance(a2, b1, b2))
}

// ---------------------------------------------------------------------------
// JSON forms: {"H": [[..]], "b": [..]} and {"vertices": [[..], ..]}.
// ---------------------------------------------------------------------------

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    rows.serialize(s)
}

pub(crate) fn de_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(serde::de::Error::custom("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn ser_vector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

pub(crate) fn de_vector<'de, D: serde::Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
    let v: Vec<f64> = Vec::deserialize(d)?;
    Ok(DVector::from_vec(v))
}

fn ser_vertices<S: serde::Serializer>(vs: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = vs.iter().map(|v| v.as_slice().to_vec()).collect();
    rows.serialize(s)
}

fn de_vertices<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
    let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
    if rows.is_empty() {
        return Err(serde::de::Error::custom("vertex polytope must be nonempty"));
    }
    Ok(rows.into_iter().map(DVector::from_vec).collect())
}
