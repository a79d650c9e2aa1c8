//! Finite-element simulator and verification suite for quasistatic evolutions
//! of a coupled gradient-damage / strain-gradient-plasticity model of
//! geomaterials under compression.
//!
//! The library computes three families of evolutions on 2D P1 meshes (plus a
//! spatially homogeneous one-point mode used by brute-force oracles):
//!
//! * energetic evolutions, by incremental global-in-time energy minimization,
//! * ε-viscous evolutions, with an L² penalty on the damage rate,
//! * Balanced Viscosity evolutions, obtained by arc-length rescaling of the
//!   viscous trajectories,
//!
//! and checks every optimality, balance and regularity condition the model
//! satisfies: irreversibility, stability, stress constraint, Kuhn–Tucker
//! inequalities/equalities, Hill's maximum plastic work principle, discrete
//! and continuous energy balances, and the continuity-in-time estimate.

pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod io;
pub mod la;
pub mod load;
pub mod material;
pub mod mesh;
pub mod oracle;
pub mod rescale;
pub mod solver;
pub mod space;
pub mod state;
pub mod tensor;

pub use config::RunConfig;
pub use energy::EnergyBreakdown;
pub use error::Error;
pub use evolution::{StepRecord, Trajectory};
pub use load::LoadProgram;
pub use material::{ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, MaterialLaw};
pub use mesh::Mesh;
pub use rescale::RescaledTrajectory;
pub use solver::SolverConfig;
pub use space::FeSpace;
pub use state::State;
pub use tensor::SymTensor;
