//! Exhaustive enumeration of Latin squares with diagonal and symmetry
//! constraints.

pub mod bench;
pub mod engine;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod plan;
pub mod square;
pub mod symenum;
pub mod transform;
pub mod workunit;

pub use engine::{enumerate, Engine, EnumerationReport};
pub use error::{Error, Result};
pub use plan::{compute_plan, FillPlan, FixedPrefix, PlanStep, StepKind};
pub use square::{Cell, ConstraintSet, Order, SquareGrid, SymbolMask, Unit};
