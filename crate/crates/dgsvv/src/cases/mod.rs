//! Run configuration, the built-in benchmark presets, diagnostics and file
//! outputs.

mod config;
pub mod diagnostics;
pub mod driver;
pub mod output;
pub mod presets;
pub mod spectrum;

pub use config::{
    BoundaryConfig, BoxMesh, FluxConfig, InitialCondition, LesConfig, MeshConfig, OutputConfig, RunConfig, SideTags,
    StepMesh, SvvConfig, WarmStart, initial_primitive,
};
pub use diagnostics::DiagnosticsRow;
pub use driver::{run, run_with, RunOutcome};
