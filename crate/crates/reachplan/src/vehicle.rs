//! Vehicle models: the ego kinematic single-track model with RK4
//! discretization (including analytic step Jacobians for the planner), the
//! obstacle's double-integrator matrices, and obstacle input estimation from
//! consecutive velocity observations.

use nalgebra::{Matrix4, SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateVec = SVector<f64, 5>;
pub type StateMat = SMatrix<f64, 5, 5>;
pub type InputMat = SMatrix<f64, 5, 2>;
pub type SvInputMat = SMatrix<f64, 4, 2>;

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("observations are not consecutive: steps {prev} and {curr}")]
    NonConsecutiveObservations { prev: usize, curr: usize },
}

/// Ego state: position, yaw, longitudinal speed and acceleration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub p_x: f64,
    pub p_y: f64,
    pub phi: f64,
    pub v: f64,
    pub a: f64,
}

/// Ego input: front tire angle and longitudinal jerk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoInput {
    pub delta: f64,
    pub eta: f64,
}

/// Geometry, sampling interval, and input/state bounds of the ego platform.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EgoParams {
    pub l_f: f64,
    pub l_r: f64,
    /// Sampling interval [s].
    pub t_s: f64,
    /// Bounds on (v, a, delta), lower then upper.
    pub v_bounds: (f64, f64),
    pub a_bounds: (f64, f64),
    pub delta_bounds: (f64, f64),
    /// Footprint length and width [m].
    pub length: f64,
    pub width: f64,
    /// Reduced 4-state model (inputs `(delta, a)`, no jerk state); available
    /// for hardware-style configurations.
    #[serde(default)]
    pub reduced_model: bool,
}

impl Default for EgoParams {
    /// Desk-scale platform defaults.
    fn default() -> Self {
        Self {
            l_f: 0.08,
            l_r: 0.08,
            t_s: 0.25,
            v_bounds: (-1.5, 1.5),
            a_bounds: (-0.5, 0.5),
            delta_bounds: (-0.3, 0.3),
            length: 0.26,
            width: 0.25,
            reduced_model: false,
        }
    }
}

impl EgoState {
    pub fn new(p_x: f64, p_y: f64, phi: f64, v: f64, a: f64) -> Self {
        Self { p_x, p_y, phi, v, a }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.p_x, self.p_y)
    }

    pub fn as_vector(&self) -> StateVec {
        StateVec::from_column_slice(&[self.p_x, self.p_y, self.phi, self.v, self.a])
    }

    pub fn from_vector(x: &StateVec) -> Self {
        Self {
            p_x: x[0],
            p_y: x[1],
            phi: x[2],
            v: x[3],
            a: x[4],
        }
    }
}

/// One observation of an obstacle: ground-frame position and velocity,
/// heading, and the control step it was taken at.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SvObservation {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub heading: f64,
    pub step: usize,
}

fn slip_angle(delta: f64, p: &EgoParams) -> (f64, f64) {
    let k = p.l_r / (p.l_f + p.l_r);
    let t = delta.tan();
    let beta = (k * t).atan();
    // d beta / d delta
    let sec2 = 1.0 + t * t;
    let dbeta = k * sec2 / (1.0 + (k * t) * (k * t));
    (beta, dbeta)
}

/// Continuous-time single-track dynamics
/// `(p_x', p_y', phi', v', a') = (v cos(phi+beta), v sin(phi+beta),
///  v sin(beta)/l_r, a, eta)` with `beta = atan(l_r tan(delta)/(l_f+l_r))`.
pub fn ego_derivative(x: &EgoState, u: &EgoInput, p: &EgoParams) -> StateVec {
    let (beta, _) = slip_angle(u.delta, p);
    let heading = x.phi + beta;
    StateVec::from_column_slice(&[
        x.v * heading.cos(),
        x.v * heading.sin(),
        x.v * beta.sin() / p.l_r,
        x.a,
        u.eta,
    ])
}

/// Derivative plus Jacobians w.r.t. state and input.
fn ego_derivative_jac(x: &StateVec, u: &EgoInput, p: &EgoParams) -> (StateVec, StateMat, InputMat) {
    let (beta, dbeta) = slip_angle(u.delta, p);
    let (phi, v) = (x[2], x[3]);
    let heading = phi + beta;
    let (sh, ch) = heading.sin_cos();
    let f = StateVec::from_column_slice(&[v * ch, v * sh, v * beta.sin() / p.l_r, x[4], u.eta]);
    let mut a = StateMat::zeros();
    a[(0, 2)] = -v * sh;
    a[(0, 3)] = ch;
    a[(1, 2)] = v * ch;
    a[(1, 3)] = sh;
    a[(2, 3)] = beta.sin() / p.l_r;
    a[(3, 4)] = 1.0;
    let mut b = InputMat::zeros();
    b[(0, 0)] = -v * sh * dbeta;
    b[(1, 0)] = v * ch * dbeta;
    b[(2, 0)] = v * beta.cos() / p.l_r * dbeta;
    b[(4, 1)] = 1.0;
    (f, a, b)
}

/// Classical RK4 step with zero-order-hold input over one sampling interval.
pub fn ego_step_rk4(x: &EgoState, u: &EgoInput, p: &EgoParams) -> EgoState {
    let x0 = x.as_vector();
    let h = p.t_s;
    let f = |x: &StateVec| {
        let s = EgoState::from_vector(x);
        ego_derivative(&s, u, p)
    };
    let k1 = f(&x0);
    let k2 = f(&(x0 + k1 * (h / 2.0)));
    let k3 = f(&(x0 + k2 * (h / 2.0)));
    let k4 = f(&(x0 + k3 * h));
    EgoState::from_vector(&(x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)))
}

/// RK4 step with exact Jacobians of the discrete map, chained analytically
/// through the four stages. Used by the planner for constraint derivatives.
pub fn ego_step_rk4_jac(x: &StateVec, u: &EgoInput, p: &EgoParams) -> (StateVec, StateMat, InputMat) {
    let h = p.t_s;
    let eye = StateMat::identity();

    let (k1, a1, b1) = ego_derivative_jac(x, u, p);
    let dk1_dx = a1;
    let dk1_du = b1;

    let x2 = x + k1 * (h / 2.0);
    let (k2, a2, b2) = ego_derivative_jac(&x2, u, p);
    let dk2_dx = a2 * (eye + dk1_dx * (h / 2.0));
    let dk2_du = a2 * dk1_du * (h / 2.0) + b2;

    let x3 = x + k2 * (h / 2.0);
    let (k3, a3, b3) = ego_derivative_jac(&x3, u, p);
    let dk3_dx = a3 * (eye + dk2_dx * (h / 2.0));
    let dk3_du = a3 * dk2_du * (h / 2.0) + b3;

    let x4 = x + k3 * h;
    let (k4, a4, b4) = ego_derivative_jac(&x4, u, p);
    let dk4_dx = a4 * (eye + dk3_dx * h);
    let dk4_du = a4 * dk3_du * h + b4;

    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let jx = eye + (dk1_dx + dk2_dx * 2.0 + dk3_dx * 2.0 + dk4_dx) * (h / 6.0);
    let ju = (dk1_du + dk2_du * 2.0 + dk3_du * 2.0 + dk4_du) * (h / 6.0);
    (next, jx, ju)
}

/// Reduced 4-state dynamics `(p_x, p_y, phi, v)` with inputs
/// `(delta, a_cmd)`: the acceleration is commanded directly and the jerk
/// state disappears.
pub fn ego_derivative_reduced(
    x: &SVector<f64, 4>,
    delta: f64,
    a_cmd: f64,
    p: &EgoParams,
) -> SVector<f64, 4> {
    let (beta, _) = slip_angle(delta, p);
    let heading = x[2] + beta;
    SVector::<f64, 4>::from_column_slice(&[
        x[3] * heading.cos(),
        x[3] * heading.sin(),
        x[3] * beta.sin() / p.l_r,
        a_cmd,
    ])
}

/// RK4 step of the reduced model.
pub fn ego_step_rk4_reduced(
    x: &SVector<f64, 4>,
    delta: f64,
    a_cmd: f64,
    p: &EgoParams,
) -> SVector<f64, 4> {
    let h = p.t_s;
    let f = |x: &SVector<f64, 4>| ego_derivative_reduced(x, delta, a_cmd, p);
    let k1 = f(x);
    let k2 = f(&(x + k1 * (h / 2.0)));
    let k3 = f(&(x + k2 * (h / 2.0)));
    let k4 = f(&(x + k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Discrete double-integrator matrices of the obstacle model with state
/// `(p_x, v_x, p_y, v_y)` and ground-frame acceleration input:
/// `A` has `T` on the position rows, `B` carries `T^2/2` and `T`.
pub fn sv_matrices(t_s: f64) -> (Matrix4<f64>, SvInputMat) {
    assert!(t_s > 0.0);
    let mut a = Matrix4::identity();
    a[(0, 1)] = t_s;
    a[(2, 3)] = t_s;
    let mut b = SvInputMat::zeros();
    b[(0, 0)] = t_s * t_s / 2.0;
    b[(1, 0)] = t_s;
    b[(2, 1)] = t_s * t_s / 2.0;
    b[(3, 1)] = t_s;
    (a, b)
}

/// Ground-frame acceleration estimate from two consecutive velocity
/// observations: `(v_curr - v_prev) / T`.
pub fn estimate_sv_input(
    prev: &SvObservation,
    curr: &SvObservation,
    t_s: f64,
) -> Result<Vector2<f64>, VehicleError> {
    if curr.step != prev.step + 1 {
        return Err(VehicleError::NonConsecutiveObservations {
            prev: prev.step,
            curr: curr.step,
        });
    }
    Ok(Vector2::new(
        (curr.velocity[0] - prev.velocity[0]) / t_s,
        (curr.velocity[1] - prev.velocity[1]) / t_s,
    ))
}
