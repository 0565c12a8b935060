//! Occupation bookkeeping and self-consistent relaxation of the lattice
//! geometry on a chosen electronic surface.

use crate::eigensolve::eig_tridiagonal;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelParams};

/// Which single-particle levels are filled, per spin channel. Index 0 is the
/// lowest level; level numbers in the public API are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationFunction {
    pub up: Vec<bool>,
    pub down: Vec<bool>,
}

impl OccupationFunction {
    pub fn n_levels(&self) -> usize {
        self.up.len()
    }

    pub fn n_electrons(&self) -> usize {
        self.up.iter().filter(|&&o| o).count() + self.down.iter().filter(|&&o| o).count()
    }

    /// Occupation of `level` (0-based) in the given spin channel as a weight.
    pub fn weight(&self, spin_up: bool, level: usize) -> f64 {
        let occ = if spin_up { &self.up } else { &self.down };
        if occ[level] {
            1.0
        } else {
            0.0
        }
    }
}

/// Neutral chain at half filling: the lowest N/2 levels doubly occupied.
pub fn ground_state_occupation(params: &ModelParams) -> Result<OccupationFunction> {
    params.validate()?;
    let n = params.n_sites;
    let filled: Vec<bool> = (0..n).map(|k| k < n / 2).collect();
    Ok(OccupationFunction {
        up: filled.clone(),
        down: filled,
    })
}

/// Promotes the spin-up electron from the highest occupied level to `level`
/// (1-based, must lie in the empty half: N/2 + 1 <= level <= N).
pub fn excited_occupation(level: usize, params: &ModelParams) -> Result<OccupationFunction> {
    let mut occ = ground_state_occupation(params)?;
    let n = params.n_sites;
    if level < n / 2 + 1 || level > n {
        return Err(Error::InvalidInput(format!(
            "target level must satisfy {} <= level <= {}, got {}",
            n / 2 + 1,
            n,
            level
        )));
    }
    occ.up[n / 2 - 1] = false;
    occ.up[level - 1] = true;
    Ok(occ)
}

#[derive(Debug, Clone)]
pub struct RelaxOptions {
    /// Convergence threshold on the largest displacement change per sweep (A).
    pub tol: f64,
    pub max_iter: usize,
    /// Linear mixing weight on the updated geometry.
    pub mixing: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            tol: 1e-10,
            max_iter: 5000,
            mixing: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelaxedGeometry {
    /// Converged displacements (A); ends zero.
    pub u0: Vec<f64>,
    /// Sum of occupied level energies at `u0` (eV).
    pub electronic_energy: f64,
    pub iterations: usize,
    /// Largest displacement change in the final sweep (A).
    pub residual: f64,
}

/// Nearest-neighbour bond orders `b[k] = sum_{s,occ} C[k][e] C[k+1][e]` of the
/// determinant filled per `occ` from the eigenvectors at displacement `u`.
fn bond_orders(u: &[f64], occ: &OccupationFunction, params: &ModelParams) -> Result<Vec<f64>> {
    let h = build_hamiltonian(u, params)?;
    let eig = eig_tridiagonal(&h)?;
    let n = params.n_sites;
    let mut b = vec![0.0; n - 1];
    for level in 0..n {
        let w = occ.weight(true, level) + occ.weight(false, level);
        if w == 0.0 {
            continue;
        }
        let col = eig.vectors.column(level);
        for k in 0..n - 1 {
            b[k] += w * col[k] * col[k + 1];
        }
    }
    Ok(b)
}

/// Solves `u[m] - (u[m+1] + u[m-1])/2 = rhs[m]` for the interior sites with
/// clamped ends (Thomas algorithm on the 1, -1/2 tridiagonal system).
fn solve_clamped_chain(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut u = vec![0.0; n];
    if n <= 2 {
        return u;
    }
    let m = n - 2;
    let mut diag = vec![1.0; m];
    let mut b: Vec<f64> = rhs[1..n - 1].to_vec();
    for i in 1..m {
        let w = -0.5 / diag[i - 1];
        diag[i] -= w * -0.5;
        b[i] -= w * b[i - 1];
    }
    u[n - 2] = b[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        u[i + 1] = (b[i] + 0.5 * u[i + 2]) / diag[i];
    }
    u
}

/// Relaxes the geometry on the surface defined by `occ`. Each sweep refills
/// the determinant at the current geometry, then solves the stationarity
/// condition `u[m] = (u[m+1] + u[m-1])/2 - (alpha/K)(b[m-1] - b[m])` exactly
/// for that bond-order field and mixes the solution in; converged when the
/// unmixed displacement gap drops below `opts.tol`.
pub fn optimize_geometry(
    occ: &OccupationFunction,
    params: &ModelParams,
    opts: &RelaxOptions,
) -> Result<RelaxedGeometry> {
    params.validate()?;
    let n = params.n_sites;
    if occ.n_levels() != n {
        return Err(Error::InvalidInput(format!(
            "occupation has {} levels, expected {}",
            occ.n_levels(),
            n
        )));
    }
    if !(opts.tol > 0.0) || !(opts.mixing > 0.0 && opts.mixing <= 1.0) || opts.max_iter == 0 {
        return Err(Error::InvalidInput(
            "relaxation options must have tol > 0, 0 < mixing <= 1, max_iter >= 1".into(),
        ));
    }

    let ratio = params.alpha / params.spring_k;
    let mut u = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        let b = bond_orders(&u, occ, params)?;
        let mut rhs = vec![0.0; n];
        for m in 1..n - 1 {
            rhs[m] = -ratio * (b[m - 1] - b[m]);
        }
        let ustar = solve_clamped_chain(&rhs);
        residual = (1..n - 1)
            .map(|m| (ustar[m] - u[m]).abs())
            .fold(0.0, f64::max);
        for m in 1..n - 1 {
            u[m] = (1.0 - opts.mixing) * u[m] + opts.mixing * ustar[m];
        }
        history.push(residual);

        if residual < opts.tol {
            let h = build_hamiltonian(&u, params)?;
            let eig = eig_tridiagonal(&h)?;
            let electronic_energy = eig
                .values
                .iter()
                .enumerate()
                .map(|(k, &e)| (occ.weight(true, k) + occ.weight(false, k)) * e)
                .sum();
            return Ok(RelaxedGeometry {
                u0: u,
                electronic_energy,
                iterations: iter,
                residual,
            });
        }
    }

    let keep = history.len().saturating_sub(50);
    Err(Error::RelaxNoConvergence {
        iterations: opts.max_iter,
        residual,
        history: history.split_off(keep),
    })
}
