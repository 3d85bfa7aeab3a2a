//! Robust predictive motion planning with online-learned obstacle control sets.
//!
//! The toolkit plans collision-free trajectories for an ego vehicle among
//! dynamic obstacles whose control behavior is unknown. The pipeline:
//!
//! 1. [`setlearn`] — estimate each obstacle's intended control set from
//!    observed inputs by solving small linear programs, either in batch,
//!    over a moving horizon, or by a constant-size online recursion.
//! 2. [`reach`] — propagate the learned set through the obstacle's
//!    linear time-varying model to predict its forward occupancy.
//! 3. [`planner`] — solve a receding-horizon optimal control problem that
//!    keeps the ego outside every predicted occupancy, with the
//!    polytope-exclusion constraint written in its dual (multiplier) form.
//! 4. [`sim`] — closed-loop simulation, baselines (worst-case robust and
//!    deterministic planners), and Monte-Carlo evaluation campaigns.
//!
//! [`geometry`] supplies the exact 2-D polytope kernel used throughout, and
//! [`linprog`] a dense deterministic simplex solver for the learning LPs.

pub mod cli;
pub mod config;
pub mod geometry;
pub mod jsonio;
pub mod linprog;
pub mod planner;
pub mod reach;
pub mod setlearn;
pub mod sim;
pub mod vehicle;

pub use geometry::{HPolytope, VPolytope};
pub use linprog::{solve_lp, LpProblem, LpSolution, LpStatus};
pub use planner::{PlanResult, PlannerConfig, PlannerMode};
pub use reach::{LtvModel, ReachTube};
pub use setlearn::{AdmissibleSet, InfoSet, LearnedSet};
pub use sim::{Metrics, Scenario, Trace};
pub use vehicle::{EgoInput, EgoParams, EgoState, SvObservation};
