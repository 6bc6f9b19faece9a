//! Structured triangular mesh, Galerkin assembly, and the bound-constrained
//! backward-Euler stepper that produces non-negative invariant fields.

mod assembly;
mod box_qp;
mod mesh;
mod stepper;

pub use assembly::{assemble, AssembledSystem};
pub use box_qp::{solve_box_qp, ActiveSetQp, Activity, BoxBounds};
pub use mesh::Mesh;
pub use stepper::{
    run_simulation, step_invariant, ConcentrationField, SimulationRun, Species, StepDiagnostics,
};
