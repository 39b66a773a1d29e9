//! Fixed-kernel U-statistics, random geometric graph counts and the
//! Ornstein–Uhlenbeck quadratic functional.

pub mod fixed;
pub mod ou;
pub mod rgg;

pub use fixed::{tau_fixed, v_f, FixedKernelConfig, FixedKernelSummary};
pub use ou::{ou_simulate, ou_variance_exact, tau_ou, OuConfig, OuSummary};
pub use rgg::{rgg_counts, tau_rgg, vrgg_bound, CountMode, GraphCounts, GraphTerm, PatternGraph, RggConfig};
