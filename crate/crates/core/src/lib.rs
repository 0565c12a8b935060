//! Mixed quantum-classical (Ehrenfest) simulation of electronic decoherence
//! in clamped tight-binding chains with bond-length-coupled hopping.
//!
//! Pipeline: relax a chain geometry on a chosen electronic surface
//! ([`relax`]), find the harmonic normal modes around it ([`phonons`]),
//! sample nuclear initial conditions from the vibrational ground-state
//! Wigner distribution ([`wigner`]), propagate each sample with coupled
//! electron-nuclear mean-field dynamics ([`dynamics`]) starting from a
//! two-determinant electronic superposition ([`superposition`]), and average
//! trajectory observables over the ensemble ([`ensemble`]). The decay of the
//! ensemble-averaged polarization is the decoherence observable.

pub mod config;
pub mod dynamics;
pub mod eigensolve;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod output;
pub mod phonons;
pub mod relax;
pub mod superposition;
pub mod wigner;

pub use config::{load_config, parse_config, ParamOverrides, RunConfig};
pub use dynamics::{
    compute_polarization, level_populations, propagate_trajectory, PopulationBasis, RunGrid,
    TrajectoryRecord, TrajectoryState,
};
pub use ensemble::{
    extract_metrics, run_ensemble, DecoherenceMetrics, EnsembleOptions, EnsembleResult,
};
pub use error::{Error, ErrorClass, Result};
pub use model::{LatticeState, ModelParams, SiteDensityMatrix, HBAR};
pub use phonons::{build_hessian, normal_modes, NormalModeBasis};
pub use relax::{
    excited_occupation, ground_state_occupation, optimize_geometry, OccupationFunction,
    RelaxOptions, RelaxedGeometry,
};
pub use superposition::{build_superposition, OccupationMatrix, SuperpositionSpec};
pub use wigner::{sample_initial_condition, SampledInitialCondition};
