//! Closed-loop simulation (under construction).
pub struct Scenario;
pub struct Trace;
pub struct Metrics;
