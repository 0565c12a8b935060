//! Initial electronic states: per-spin occupation matrices
//! `Gamma^s[e][e'] = <phi(0)| c+_{e,s} c_{e',s} |phi(0)>` in the initial
//! eigenbasis, for the ground state, single determinants, and the coherent
//! two-determinant superpositions studied here, plus a brute-force Fock-space
//! oracle for small chains.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::relax::{excited_occupation, ground_state_occupation, OccupationFunction};

/// Per-spin one-particle occupation matrices in the level basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMatrix {
    pub up: Array2<Complex64>,
    pub down: Array2<Complex64>,
}

impl OccupationMatrix {
    pub fn empty(n_levels: usize) -> Self {
        OccupationMatrix {
            up: Array2::zeros((n_levels, n_levels)),
            down: Array2::zeros((n_levels, n_levels)),
        }
    }

    /// Diagonal matrix of a single determinant.
    pub fn from_occupation(occ: &OccupationFunction) -> Self {
        let n = occ.n_levels();
        let mut gamma = OccupationMatrix::empty(n);
        for k in 0..n {
            gamma.up[(k, k)] = Complex64::new(occ.weight(true, k), 0.0);
            gamma.down[(k, k)] = Complex64::new(occ.weight(false, k), 0.0);
        }
        gamma
    }

    pub fn n_levels(&self) -> usize {
        self.up.nrows()
    }

    pub fn spin_summed(&self) -> Array2<Complex64> {
        &self.up + &self.down
    }

    pub fn trace_up(&self) -> Complex64 {
        (0..self.n_levels()).map(|k| self.up[(k, k)]).sum()
    }

    pub fn trace_down(&self) -> Complex64 {
        (0..self.n_levels()).map(|k| self.down[(k, k)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n_levels();
        let mut worst: f64 = 0.0;
        for m in [&self.up, &self.down] {
            for i in 0..n {
                for j in i..n {
                    worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Which two-determinant superposition to prepare, and (through
/// `preparation_occupation`) which electronic surface the lattice is relaxed
/// on before sampling. Pair levels are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuperpositionSpec {
    /// (|phi_0> + |phi_1>)/sqrt(2), HOMO-LUMO coherence; lattice on the
    /// ground surface.
    GroundExcited,
    /// (|phi_i> + |phi_{i+1}>)/sqrt(2); lattice on the ground surface.
    PairGroundGeometry { level: usize },
    /// (|phi_i> + |phi_{i+1}>)/sqrt(2); lattice relaxed on the |phi_i>
    /// surface.
    PairExcitedGeometry { level: usize },
}

impl SuperpositionSpec {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        let n = params.n_sites;
        match *self {
            SuperpositionSpec::GroundExcited => Ok(()),
            SuperpositionSpec::PairGroundGeometry { level }
            | SuperpositionSpec::PairExcitedGeometry { level } => {
                if level < n / 2 + 1 || level > n - 1 {
                    Err(Error::InvalidInput(format!(
                        "pair level must satisfy {} <= i <= {} (both i and i+1 must exist \
                         above the gap), got {}",
                        n / 2 + 1,
                        n - 1,
                        level
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Determinant whose surface the nuclei are prepared on.
    pub fn preparation_occupation(&self, params: &ModelParams) -> Result<OccupationFunction> {
        self.validate(params)?;
        match *self {
            SuperpositionSpec::GroundExcited | SuperpositionSpec::PairGroundGeometry { .. } => {
                ground_state_occupation(params)
            }
            SuperpositionSpec::PairExcitedGeometry { level } => excited_occupation(level, params),
        }
    }

    /// The two levels (1-based) carrying the coherence.
    pub fn coherent_levels(&self, params: &ModelParams) -> (usize, usize) {
        match *self {
            SuperpositionSpec::GroundExcited => (params.homo(), params.lumo()),
            SuperpositionSpec::PairGroundGeometry { level }
            | SuperpositionSpec::PairExcitedGeometry { level } => (level, level + 1),
        }
    }
}

/// Occupation matrix of the chosen superposition with coefficients
/// (1/sqrt(2), 1/sqrt(2)); the excitation lives in the spin-up channel.
pub fn build_superposition(
    spec: &SuperpositionSpec,
    params: &ModelParams,
) -> Result<OccupationMatrix> {
    spec.validate(params)?;
    let n = params.n_sites;
    let half = Complex64::new(0.5, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut gamma = OccupationMatrix::empty(n);
    for k in 0..n / 2 {
        gamma.down[(k, k)] = one;
    }
    match *spec {
        SuperpositionSpec::GroundExcited => {
            let h = n / 2 - 1;
            let l = n / 2;
            for k in 0..h {
                gamma.up[(k, k)] = one;
            }
            gamma.up[(h, h)] = half;
            gamma.up[(l, l)] = half;
            gamma.up[(h, l)] = half;
            gamma.up[(l, h)] = half;
        }
        SuperpositionSpec::PairGroundGeometry { level }
        | SuperpositionSpec::PairExcitedGeometry { level } => {
            let i1 = level - 1;
            let i2 = level;
            for k in 0..n / 2 - 1 {
                gamma.up[(k, k)] = one;
            }
            gamma.up[(i1, i1)] = half;
            gamma.up[(i2, i2)] = half;
            gamma.up[(i1, i2)] = half;
            gamma.up[(i2, i1)] = half;
        }
    }
    Ok(gamma)
}

/// Largest chain the Fock-space oracle will enumerate.
pub const FOCK_ORACLE_MAX_SITES: usize = 8;

/// Many-electron state as an explicit (amplitude, up-mask, down-mask) sum
/// over determinants; bit k of a mask marks level k (0-based) occupied.
/// A determinant is the ordered product of creation operators, ascending
/// level index, spin-up block first.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub n_levels: usize,
    pub terms: Vec<(f64, u32, u32)>,
}

impl ManyBodyState {
    pub fn new(n_levels: usize, terms: Vec<(f64, u32, u32)>) -> Result<Self> {
        if n_levels > FOCK_ORACLE_MAX_SITES {
            return Err(Error::InvalidInput(format!(
                "Fock-space oracle is limited to {FOCK_ORACLE_MAX_SITES} levels, got {n_levels}"
            )));
        }
        let full = (1u32 << n_levels) - 1;
        if terms.iter().any(|&(_, um, dm)| um > full || dm > full) {
            return Err(Error::InvalidInput(
                "determinant mask addresses a level outside the chain".into(),
            ));
        }
        let norm2: f64 = terms.iter().map(|&(a, _, _)| a * a).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "state is not normalized: sum of squared amplitudes = {norm2}"
            )));
        }
        Ok(ManyBodyState { n_levels, terms })
    }

    pub fn determinant(occ: &OccupationFunction) -> Result<Self> {
        let mut um = 0u32;
        let mut dm = 0u32;
        for k in 0..occ.n_levels() {
            if occ.up[k] {
                um |= 1 << k;
            }
            if occ.down[k] {
                dm |= 1 << k;
            }
        }
        ManyBodyState::new(occ.n_levels(), vec![(1.0, um, dm)])
    }

    /// Applies `c+_{to,up} c_{from,up}` with fermionic signs (levels 0-based).
    pub fn excite_up(&self, from: usize, to: usize) -> Result<ManyBodyState> {
        let mut terms = Vec::new();
        for &(a, um, dm) in &self.terms {
            if let Some((sign, moved)) = apply_hop(um, from, to) {
                terms.push((a * sign, moved, dm));
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidInput(format!(
                "excitation {from}->{to} annihilates the state"
            )));
        }
        ManyBodyState::new(self.n_levels, terms)
    }

    /// Equal-weight in-phase combination of two states.
    pub fn mix(a: &ManyBodyState, b: &ManyBodyState) -> Result<ManyBodyState> {
        if a.n_levels != b.n_levels {
            return Err(Error::InvalidInput("level counts differ".into()));
        }
        let w = 1.0 / 2.0f64.sqrt();
        let mut terms: Vec<(f64, u32, u32)> = Vec::new();
        for &(amp, um, dm) in a.terms.iter().chain(b.terms.iter()) {
            if let Some(t) = terms.iter_mut().find(|t| t.1 == um && t.2 == dm) {
                t.0 += w * amp;
            } else {
                terms.push((w * amp, um, dm));
            }
        }
        terms.retain(|t| t.0 != 0.0);
        ManyBodyState::new(a.n_levels, terms)
    }
}

/// Number of set bits strictly below `level`.
fn parity_below(mask: u32, level: usize) -> f64 {
    if (mask & ((1u32 << level) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c+_to c_from |mask>`: None if it annihilates, else (sign, new mask).
fn apply_hop(mask: u32, from: usize, to: usize) -> Option<(f64, u32)> {
    if mask & (1 << from) == 0 {
        return None;
    }
    let mut sign = parity_below(mask, from);
    let removed = mask & !(1u32 << from);
    if removed & (1 << to) != 0 {
        return None;
    }
    sign *= parity_below(removed, to);
    Some((sign, removed | (1 << to)))
}

/// Brute-force 1-RDM `Gamma^s[e][e'] = <phi| c+_{e,s} c_{e',s} |phi>` by
/// direct operator application in the determinant basis. The spin-up block
/// is ordered first, so the down-channel cross signs cancel in c+c pairs.
pub fn fock_oracle_1rdm(state: &ManyBodyState) -> Result<OccupationMatrix> {
    let n = state.n_levels;
    if n > FOCK_ORACLE_MAX_SITES {
        return Err(Error::InvalidInput(format!(
            "Fock-space oracle is limited to {FOCK_ORACLE_MAX_SITES} levels, got {n}"
        )));
    }
    let mut gamma = OccupationMatrix::empty(n);
    for e in 0..n {
        for e2 in 0..n {
            let mut val_up = 0.0;
            let mut val_down = 0.0;
            for &(a_ket, um, dm) in &state.terms {
                if let Some((sign, moved)) = apply_hop(um, e2, e) {
                    for &(a_bra, um_b, dm_b) in &state.terms {
                        if um_b == moved && dm_b == dm {
                            val_up += a_bra * sign * a_ket;
                        }
                    }
                }
                if let Some((sign, moved)) = apply_hop(dm, e2, e) {
                    for &(a_bra, um_b, dm_b) in &state.terms {
                        if dm_b == moved && um_b == um {
                            val_down += a_bra * sign * a_ket;
                        }
                    }
                }
            }
            gamma.up[(e, e2)] = Complex64::new(val_up, 0.0);
            gamma.down[(e, e2)] = Complex64::new(val_down, 0.0);
        }
    }
    Ok(gamma)
}

/// The explicit many-body state a `SuperpositionSpec` describes, for
/// oracle-based verification on small chains.
pub fn explicit_state(spec: &SuperpositionSpec, params: &ModelParams) -> Result<ManyBodyState> {
    spec.validate(params)?;
    let ground = ManyBodyState::determinant(&ground_state_occupation(params)?)?;
    let homo0 = params.homo() - 1;
    match *spec {
        SuperpositionSpec::GroundExcited => {
            let excited = ground.excite_up(homo0, params.lumo() - 1)?;
            ManyBodyState::mix(&ground, &excited)
        }
        SuperpositionSpec::PairGroundGeometry { level }
        | SuperpositionSpec::PairExcitedGeometry { level } => {
            let a = ground.excite_up(homo0, level - 1)?;
            let b = ground.excite_up(homo0, level)?;
            ManyBodyState::mix(&a, &b)
        }
    }
}
