//! Initial nuclear conditions drawn from the vibrational ground-state Wigner
//! distribution: independent Gaussians per normal mode, with a counter-based
//! per-trajectory RNG stream so any trajectory can be regenerated in
//! isolation.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{LatticeState, ModelParams};
use crate::phonons::NormalModeBasis;

#[derive(Debug, Clone)]
pub struct SampledInitialCondition {
    pub state: LatticeState,
    pub trajectory_index: u64,
    /// Seed of the dedicated stream this sample was drawn from.
    pub seed: u64,
}

/// SplitMix64 finalizer; bijective on u64.
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Stream seed for one trajectory; order-independent, so trajectories can be
/// generated in any order or in parallel with identical results.
pub fn trajectory_seed(master_seed: u64, trajectory_index: u64) -> u64 {
    mix64(master_seed ^ mix64(trajectory_index))
}

/// Uniform draw on (0, 1] built from the top 53 bits.
fn uniform_open01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// One Box-Muller pair of independent standard normals.
fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Draws (u, p) for one trajectory: Q_j ~ N(0, hbar/(2 M w_j)),
/// P_j ~ N(0, hbar M w_j / 2), mapped back to interior sites through the
/// mode matrix and offset by the base geometry. Ends stay exactly zero.
pub fn sample_initial_condition(
    modes: &NormalModeBasis,
    params: &ModelParams,
    master_seed: u64,
    trajectory_index: u64,
) -> Result<SampledInitialCondition> {
    params.validate()?;
    let n = params.n_sites;
    let nin = n - 2;
    if modes.frequencies.len() != nin || modes.modes.nrows() != nin {
        return Err(Error::InvalidInput(format!(
            "mode basis has {} modes, expected {}",
            modes.frequencies.len(),
            nin
        )));
    }
    if let Some(w) = modes.frequencies.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "cannot sample a mode with nonpositive frequency {w}"
        )));
    }

    let seed = trajectory_seed(master_seed, trajectory_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut q = vec![0.0; nin];
    let mut p_mode = vec![0.0; nin];
    for j in 0..nin {
        let w = modes.frequencies[j];
        let (zq, zp) = standard_normal_pair(&mut rng);
        q[j] = (params.hbar / (2.0 * params.mass * w)).sqrt() * zq;
        p_mode[j] = (params.hbar * params.mass * w / 2.0).sqrt() * zp;
    }

    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in 0..nin {
        let mut du = 0.0;
        let mut dp = 0.0;
        for j in 0..nin {
            du += modes.modes[(i, j)] * q[j];
            dp += modes.modes[(i, j)] * p_mode[j];
        }
        u[i + 1] = modes.base_geometry.u0[i + 1] + du;
        p[i + 1] = dp;
    }

    Ok(SampledInitialCondition {
        state: LatticeState::new(u, p, params)?,
        trajectory_index,
        seed,
    })
}
