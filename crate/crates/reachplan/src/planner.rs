//! Receding-horizon trajectory planner (under construction).
pub struct PlannerConfig;
pub struct PlanResult;
pub enum PlannerMode { Proposed, Rmpc, Dmpc }
