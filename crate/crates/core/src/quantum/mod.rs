//! Dense operator algebra, states, and open-system evolution.

pub mod eigen;
pub mod lindblad;
pub mod ode;
pub mod operator;
pub mod space;
pub mod state;
pub mod steady;

pub use eigen::{eig_hermitian, EigenDecomposition};
pub use lindblad::{apply_generator, evolve_lindblad, liouvillian, CollapseOp, Envelope, Hamiltonian};
pub use ode::OdeOptions;
pub use operator::{max_abs, tensor, tensor_on, CMatrix, Factor, Operator};
pub use space::HilbertSpace;
pub use state::{coherent_amplitudes, trace_distance, CVector, QuantumState};
pub use steady::steady_state;
