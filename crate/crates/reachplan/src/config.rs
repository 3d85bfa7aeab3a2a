//! Scenario configuration (under construction).
