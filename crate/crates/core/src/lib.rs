//! Monitored free fermions on a ring: Gaussian-state trajectories under quantum
//! state diffusion, quantum jumps and projective measurements.
//!
//! Everything numerical is generic over [`Real`]; the `f64` aliases below are
//! what the runner and the statistics crate use.

pub mod entropy;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod measure;
pub mod protocol;
pub mod scalar;
pub mod state;

pub use entropy::{binary_entropy, entanglement_entropy, mutual_information, MutualInformation};
pub use error::{Error, Result};
pub use evolve::{evolve_one_body, Generator, Propagator};
pub use lattice::{hopping_matrix, Hamiltonian, HamiltonianSpec, Region};
pub use measure::{apply_jump, apply_projection, measure_state, Outcome, Restoration};
pub use protocol::pm::{run_pm_trajectory, ProjectiveEvent, ProjectiveTrajectory};
pub use protocol::qj::{run_qj_trajectory, JumpEvent, JumpTrajectory};
pub use protocol::qsd::{qsd_step, run_qsd_trajectory, QsdStepParams, QsdStepRecord, QsdTrajectory};
pub use protocol::{Audit, EeSample, Snapshot, TrajectoryParams, WaitingTimes};
pub use scalar::{Cplx, Real};
pub use state::{correlation_matrix, neel_state, state_from_correlation, CorrelationMatrix, GaussianState};

pub type Complex64 = num_complex::Complex64;
pub type State = GaussianState<f64>;
pub type Correlation = CorrelationMatrix<f64>;
pub type Ham = Hamiltonian<f64>;
pub type Params = TrajectoryParams<f64>;
pub type QsdRun = QsdTrajectory<f64>;
pub type JumpRun = JumpTrajectory<f64>;
pub type ProjectiveRun = ProjectiveTrajectory<f64>;
