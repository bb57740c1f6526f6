//! Compiler for zoned neutral-atom architectures.
//!
//! Input circuits over the {CZ, U3} gate set are staged into Rydberg and 1Q
//! stages, qubits are placed with a reuse-aware strategy (simulated-annealing
//! initial placement, per-stage matchings for reuse, gate sites, and storage
//! returns), placement deltas become rearrangement jobs batched by maximal
//! independent sets, jobs are distributed across AODs longest-first, and the
//! result is emitted as a ZAIR program together with a fidelity report and
//! the perfect-movement / perfect-placement / perfect-reuse bounds.

pub mod arch;
pub mod blocks;
pub mod bounds;
pub mod circuit;
pub mod error;
pub mod fidelity;
pub mod geom;
pub mod matching;
pub mod pipeline;
pub mod placement;
pub mod routing;
pub mod scheduler;
pub mod zair;

#[doc(hidden)]
pub mod testutil;

pub use arch::Architecture;
pub use circuit::{parse_circuit, stage_asap, CircuitFormat, StagedCircuit};
pub use error::{CompileError, Result};
pub use fidelity::HardwareParams;
pub use pipeline::{compile_circuit, CompileArtifacts, PipelineOptions};
pub use placement::CompilerConfig;
pub use zair::{parse_zair, validate_replay, ZairProgram};
