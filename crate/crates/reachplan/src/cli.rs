//! Command-line pipelines (under construction).
