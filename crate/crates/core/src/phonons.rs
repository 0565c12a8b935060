//! Harmonic analysis around a relaxed geometry: effective Hessian from
//! second-order perturbation theory over the electronic spectrum, normal
//! modes, frequencies, and zero-point energy.

use ndarray::Array2;

use crate::eigensolve::{eig_tridiagonal, EigenDecomposition};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelParams};
use crate::relax::{OccupationFunction, RelaxedGeometry};

/// Occupied/empty level pairs closer than this (eV) make the perturbative
/// Hessian singular; refuse rather than regularize.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Normal modes of the interior sites around a relaxed geometry.
#[derive(Debug, Clone)]
pub struct NormalModeBasis {
    /// Mode angular frequencies (fs^-1), ascending.
    pub frequencies: Vec<f64>,
    /// (N-2)x(N-2) orthonormal matrix; column j is mode j over interior sites.
    pub modes: Array2<f64>,
    /// Sum of hbar*omega/2 over all modes (eV).
    pub zero_point_energy: f64,
    /// Geometry the expansion is anchored at.
    pub base_geometry: RelaxedGeometry,
}

/// Second derivative matrix of the adiabatic energy with respect to the
/// interior displacements (eV/A^2), built from the electronic spectrum at the
/// relaxed geometry: elastic part K(2,-1,-1) plus the level-pair response
///   V_nm = 2 alpha^2 sum_{occ e', empty e, s} V^n(e,e') V^m(e,e') / (e'-e).
pub fn build_hessian(
    relaxed: &RelaxedGeometry,
    occ: &OccupationFunction,
    params: &ModelParams,
) -> Result<Array2<f64>> {
    params.validate()?;
    let n = params.n_sites;
    if relaxed.u0.len() != n || occ.n_levels() != n {
        return Err(Error::InvalidInput(
            "geometry/occupation size does not match the model".into(),
        ));
    }
    let h = build_hamiltonian(&relaxed.u0, params)?;
    let eig = eig_tridiagonal(&h)?;
    hessian_from_spectrum(&eig, occ, params)
}

fn hessian_from_spectrum(
    eig: &EigenDecomposition,
    occ: &OccupationFunction,
    params: &ModelParams,
) -> Result<Array2<f64>> {
    let n = params.n_sites;
    let nin = n - 2;
    let mut f = Array2::<f64>::zeros((nin, nin));
    for i in 0..nin {
        f[(i, i)] = 2.0 * params.spring_k;
        if i + 1 < nin {
            f[(i, i + 1)] = -params.spring_k;
            f[(i + 1, i)] = -params.spring_k;
        }
    }

    // amp(e, n) with one-past-the-end site indices reading as zero
    let amp = |e: usize, site: isize| -> f64 {
        if site < 0 || site >= n as isize {
            0.0
        } else {
            eig.vectors[(site as usize, e)]
        }
    };

    let mut v = vec![0.0; nin];
    for spin_up in [true, false] {
        for src in 0..n {
            if occ.weight(spin_up, src) == 0.0 {
                continue;
            }
            for dst in 0..n {
                if occ.weight(spin_up, dst) != 0.0 {
                    continue;
                }
                let de = eig.values[src] - eig.values[dst];
                if de.abs() < DEGENERACY_TOL {
                    return Err(Error::DegenerateLevels {
                        occupied: src + 1,
                        empty: dst + 1,
                        splitting: de.abs(),
                    });
                }
                // V^n(dst, src) over interior n = 2..N-1 (1-based)
                for (i, vn) in v.iter_mut().enumerate() {
                    let site = (i + 1) as isize;
                    *vn = amp(dst, site) * (amp(src, site - 1) - amp(src, site + 1))
                        + amp(src, site) * (amp(dst, site - 1) - amp(dst, site + 1));
                }
                let w = 2.0 * params.alpha * params.alpha / de;
                // mirror the identical product so f stays symmetric bit for bit
                for i in 0..nin {
                    if v[i] == 0.0 {
                        continue;
                    }
                    let wv = w * v[i];
                    f[(i, i)] += wv * v[i];
                    for j in i + 1..nin {
                        let t = wv * v[j];
                        f[(i, j)] += t;
                        f[(j, i)] += t;
                    }
                }
            }
        }
    }
    Ok(f)
}

/// Diagonalizes the Hessian; frequencies are sqrt(eigenvalue / M).
pub fn normal_modes(
    hessian: &Array2<f64>,
    relaxed: &RelaxedGeometry,
    params: &ModelParams,
) -> Result<NormalModeBasis> {
    params.validate()?;
    if hessian.nrows() != params.n_sites - 2 {
        return Err(Error::InvalidInput(format!(
            "hessian is {}x{}, expected interior size {}",
            hessian.nrows(),
            hessian.ncols(),
            params.n_sites - 2
        )));
    }
    let eig = crate::eigensolve::eig_symmetric(hessian)?;
    let unstable: Vec<usize> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= 0.0)
        .map(|(j, _)| j + 1)
        .collect();
    if !unstable.is_empty() {
        return Err(Error::UnstableGeometry { modes: unstable });
    }
    let frequencies: Vec<f64> = eig.values.iter().map(|&l| (l / params.mass).sqrt()).collect();
    let zero_point_energy = frequencies.iter().map(|&w| 0.5 * params.hbar * w).sum();
    Ok(NormalModeBasis {
        frequencies,
        modes: eig.vectors,
        zero_point_energy,
        base_geometry: relaxed.clone(),
    })
}
