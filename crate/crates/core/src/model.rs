//! Tight-binding chain with linear electron-phonon coupling and clamped ends.
//!
//! Units throughout: energy in eV, length in Angstrom, time in fs, so
//! momenta are eV*fs/A and masses eV*fs^2/A^2.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::superposition::OccupationMatrix;

/// hbar in eV*fs.
pub const HBAR: f64 = 0.6582119569;

/// Chain parameters. Defaults are the standard polyacetylene set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of sites; must be even and >= 4.
    pub n_sites: usize,
    /// Bare hopping t0 (eV).
    pub t0: f64,
    /// Electron-phonon coupling alpha (eV/A).
    pub alpha: f64,
    /// Harmonic spring constant K (eV/A^2).
    pub spring_k: f64,
    /// Site mass M (eV*fs^2/A^2); the CH-unit mass.
    pub mass: f64,
    /// Undistorted lattice spacing a (A).
    pub lattice_a: f64,
    /// hbar (eV*fs); overridable only for testing scaled units.
    pub hbar: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_sites: 20,
            t0: 2.5,
            alpha: 4.1,
            spring_k: 21.0,
            mass: 1349.14,
            lattice_a: 1.22,
            hbar: HBAR,
        }
    }
}

impl ModelParams {
    pub fn with_sites(n_sites: usize) -> Result<Self> {
        let p = ModelParams {
            n_sites,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 4 || self.n_sites % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "n_sites must be even and >= 4, got {}",
                self.n_sites
            )));
        }
        for (name, v) in [
            ("t0", self.t0),
            ("spring_k", self.spring_k),
            ("mass", self.mass),
            ("lattice_a", self.lattice_a),
            ("hbar", self.hbar),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidInput(format!(
                "alpha must be non-negative and finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Level number (1-based) of the highest occupied level of the neutral chain.
    pub fn homo(&self) -> usize {
        self.n_sites / 2
    }

    /// Level number (1-based) of the lowest unoccupied level of the neutral chain.
    pub fn lumo(&self) -> usize {
        self.n_sites / 2 + 1
    }
}

/// Nuclear displacements and momenta. The end sites are clamped:
/// `u[0] == u[n-1] == p[0] == p[n-1] == 0` always.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl LatticeState {
    pub fn new(u: Vec<f64>, p: Vec<f64>, params: &ModelParams) -> Result<Self> {
        let n = params.n_sites;
        if u.len() != n || p.len() != n {
            return Err(Error::InvalidInput(format!(
                "lattice arrays must have length {n}, got u: {}, p: {}",
                u.len(),
                p.len()
            )));
        }
        if u.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite lattice value".into()));
        }
        for (name, a) in [("u", &u), ("p", &p)] {
            if a[0] != 0.0 || a[n - 1] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "end sites are clamped; {name}[0] and {name}[n-1] must be exactly 0"
                )));
            }
        }
        Ok(LatticeState { u, p })
    }

    /// All sites at rest at the undistorted geometry.
    pub fn at_rest(params: &ModelParams) -> Self {
        LatticeState {
            u: vec![0.0; params.n_sites],
            p: vec![0.0; params.n_sites],
        }
    }
}

/// One-electron Hamiltonian of the chain: zero on-site energies and
/// nearest-neighbour hopping `h[n] = -t0 + alpha * (u[n+1] - u[n])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    /// The n_sites - 1 nearest-neighbour matrix elements.
    pub hopping: Vec<f64>,
}

impl SingleParticleHamiltonian {
    pub fn n_sites(&self) -> usize {
        self.hopping.len() + 1
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n_sites();
        let mut h = Array2::zeros((n, n));
        for (k, &t) in self.hopping.iter().enumerate() {
            h[(k, k + 1)] = t;
            h[(k + 1, k)] = t;
        }
        h
    }
}

pub fn build_hamiltonian(u: &[f64], params: &ModelParams) -> Result<SingleParticleHamiltonian> {
    params.validate()?;
    if u.len() != params.n_sites {
        return Err(Error::InvalidInput(format!(
            "displacement array length {} does not match n_sites {}",
            u.len(),
            params.n_sites
        )));
    }
    let hopping = u
        .windows(2)
        .map(|w| -params.t0 + params.alpha * (w[1] - w[0]))
        .collect();
    Ok(SingleParticleHamiltonian { hopping })
}

/// Spin-summed one-particle density matrix on the site basis,
/// `rho[n][m] = <c+_n c_m>`.
#[derive(Debug, Clone)]
pub struct SiteDensityMatrix {
    pub rho: Array2<Complex64>,
}

impl SiteDensityMatrix {
    pub fn trace(&self) -> Complex64 {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.rho.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

pub const GAMMA_HERMITICITY_TOL: f64 = 1e-10;

/// Builds `rho[n][m] = sum_{e,e',s} conj(C[n][e]) Gamma_s[e][e'] C[m][e']`
/// from the orbital coefficient matrix `C` (column e = site amplitudes of
/// orbital e) and the occupation matrix expressed in the orbital basis.
pub fn site_density_matrix(
    orbitals: &Array2<Complex64>,
    gamma: &OccupationMatrix,
) -> Result<SiteDensityMatrix> {
    let n = orbitals.nrows();
    if orbitals.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "orbital matrix must be square, got {}x{}",
            n,
            orbitals.ncols()
        )));
    }
    if gamma.n_levels() != n {
        return Err(Error::InvalidInput(format!(
            "occupation matrix has {} levels but there are {} orbitals",
            gamma.n_levels(),
            n
        )));
    }
    let herm = gamma.hermiticity_error();
    if herm > GAMMA_HERMITICITY_TOL {
        return Err(Error::InvalidInput(format!(
            "occupation matrix is not Hermitian (deviation {herm:.3e})"
        )));
    }

    let g = gamma.spin_summed();
    // rho = conj(C) . G . C^T, evaluated as (conj(C) . G) . C^T.
    let cc = orbitals.mapv(|z| z.conj());
    let left = cc.dot(&g);
    let rho = left.dot(&orbitals.t());
    Ok(SiteDensityMatrix { rho })
}

/// Total Ehrenfest energy: nuclear kinetic + harmonic lattice + electronic
/// `sum_n 2 Re{ h[n] rho[n+1][n] }`.
pub fn total_energy(
    state: &LatticeState,
    rho: &SiteDensityMatrix,
    params: &ModelParams,
) -> Result<f64> {
    let n = params.n_sites;
    if state.u.len() != n || rho.rho.nrows() != n {
        return Err(Error::InvalidInput(
            "state/density dimensions do not match n_sites".into(),
        ));
    }
    let kinetic: f64 = state.p.iter().map(|p| p * p).sum::<f64>() / (2.0 * params.mass);
    let elastic: f64 = state
        .u
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        * 0.5
        * params.spring_k;
    let h = build_hamiltonian(&state.u, params)?;
    let electronic: f64 = h
        .hopping
        .iter()
        .enumerate()
        .map(|(k, &t)| 2.0 * (t * rho.rho[(k + 1, k)]).re)
        .sum();
    Ok(kinetic + elastic + electronic)
}

/// Gradient of the total energy with respect to the displacements,
/// `dE/du[m] = 2 alpha Re{ rho[m][m-1] - rho[m][m+1] } + K (2u[m] - u[m-1] - u[m+1])`
/// on interior sites; zero on the clamped ends.
pub fn energy_gradient(u: &[f64], rho: &SiteDensityMatrix, params: &ModelParams) -> Result<Vec<f64>> {
    let n = params.n_sites;
    if u.len() != n || rho.rho.nrows() != n {
        return Err(Error::InvalidInput(
            "displacement/density dimensions do not match n_sites".into(),
        ));
    }
    let mut grad = vec![0.0; n];
    for m in 1..n - 1 {
        let electronic = 2.0 * params.alpha * (rho.rho[(m, m - 1)] - rho.rho[(m, m + 1)]).re;
        let elastic = params.spring_k * (2.0 * u[m] - u[m - 1] - u[m + 1]);
        grad[m] = electronic + elastic;
    }
    Ok(grad)
}
