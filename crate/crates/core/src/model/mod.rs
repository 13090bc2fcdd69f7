//! Model description, test functions and hypothesis checks.

pub mod applicability;
pub mod catalog;
pub mod checks;
pub mod coefficient;
pub mod cutoff;
pub mod function;
pub mod jumps;
pub mod spec;

pub use applicability::{check_applicability, ApplicabilityReport, Verdict};
pub use catalog::{build_catalog, lookup, FunctionSpec};
pub use coefficient::Coefficient;
pub use function::{Derivatives, FunctionMeta, Kernel, Parity, TestFunction};
pub use jumps::{JumpLaw, JumpSpec, ScheduledJump, VolJumps};
pub use spec::{HypothesisFlags, ModelBuilder, ModelSpec, VolSpec};
