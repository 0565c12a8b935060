//! Single-trajectory Ehrenfest propagation: classical lattice EOM coupled to
//! the orbital Schrödinger equation, integrated with a fixed-step 8th-order
//! Runge-Kutta scheme, plus the observables recorded along the way.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::eigensolve::eig_tridiagonal;
use crate::error::{Error, Result};
use crate::model::{
    build_hamiltonian, LatticeState, ModelParams, SiteDensityMatrix, GAMMA_HERMITICITY_TOL,
};
use crate::superposition::OccupationMatrix;
use crate::wigner::SampledInitialCondition;

/// Full state of one trajectory at an instant.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub lattice: LatticeState,
    /// Column ε holds the propagated orbital ⟨n|ε(t)⟩.
    pub orbitals: Array2<Complex64>,
    pub time_fs: f64,
}

/// Observable series on the recording grid.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times_fs: Vec<f64>,
    /// Polarization (e·Å), one entry per recorded time.
    pub polarization: Vec<f64>,
    /// `level_populations[w][k]` = population of watched level `w` at time k.
    pub level_populations: Vec<Vec<f64>>,
    /// Total Ehrenfest energy (eV).
    pub total_energy: Vec<f64>,
}

/// Basis the level populations are projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PopulationBasis {
    /// Eigenbasis of H_elec at the current geometry u(t).
    Instantaneous,
    /// Eigenbasis of H_elec at the trajectory's initial geometry, held fixed.
    InitialGeometry,
}

/// Integration grid and what to record on it.
#[derive(Debug, Clone)]
pub struct RunGrid {
    pub dt_fs: f64,
    pub t_final_fs: f64,
    /// Observables recorded every this many steps.
    pub record_stride: usize,
    /// 1-based level numbers whose populations are recorded.
    pub watched_levels: Vec<usize>,
    pub population_basis: PopulationBasis,
}

impl RunGrid {
    /// Checks the grid and returns the step count.
    pub fn validate(&self, params: &ModelParams) -> Result<usize> {
        if !(self.dt_fs > 0.0) || !self.dt_fs.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt_fs)));
        }
        if !(self.t_final_fs >= 0.0) || !self.t_final_fs.is_finite() {
            return Err(Error::Config(format!(
                "tFinal must be nonnegative, got {}",
                self.t_final_fs
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("recordStride must be at least 1".into()));
        }
        let n_steps = (self.t_final_fs / self.dt_fs).round() as usize;
        if ((n_steps as f64) * self.dt_fs - self.t_final_fs).abs() > 1e-9 * self.dt_fs.max(1.0) {
            return Err(Error::Config(format!(
                "tFinal = {} is not a whole number of dt = {} steps",
                self.t_final_fs, self.dt_fs
            )));
        }
        if n_steps % self.record_stride != 0 {
            return Err(Error::Config(format!(
                "recordStride = {} does not divide the {} integration steps",
                self.record_stride, n_steps
            )));
        }
        for &w in &self.watched_levels {
            if w < 1 || w > params.n_sites {
                return Err(Error::Config(format!(
                    "watched level {} outside 1..={}",
                    w, params.n_sites
                )));
            }
        }
        Ok(n_steps)
    }
}

/// Spin-summed occupation matrix reduced to its nonzero structure: diagonal
/// weights plus Hermitian coherence pairs. Keeps the density-band evaluation
/// inside the force loop at O(N · support) instead of O(N³).
#[derive(Debug, Clone)]
struct GammaDecomposition {
    diag: Vec<(usize, f64)>,
    /// (i, j, Γ_{ij}) with i < j; the (j, i) partner is the conjugate.
    coh: Vec<(usize, usize, Complex64)>,
    support: Vec<usize>,
}

const GAMMA_PRUNE_TOL: f64 = 1e-13;

impl GammaDecomposition {
    fn new(gamma: &OccupationMatrix) -> Result<Self> {
        if gamma.hermiticity_error() > GAMMA_HERMITICITY_TOL {
            return Err(Error::InvalidInput(format!(
                "occupation matrix is not Hermitian (deviation {:.3e})",
                gamma.hermiticity_error()
            )));
        }
        let g = gamma.spin_summed();
        let n = g.nrows();
        let mut diag = Vec::new();
        let mut coh = Vec::new();
        let mut in_support = vec![false; n];
        for i in 0..n {
            let v = g[(i, i)];
            if v.norm() > GAMMA_PRUNE_TOL {
                diag.push((i, v.re));
                in_support[i] = true;
            }
            for j in i + 1..n {
                let c = g[(i, j)];
                if c.norm() > GAMMA_PRUNE_TOL {
                    coh.push((i, j, c));
                    in_support[i] = true;
                    in_support[j] = true;
                }
            }
        }
        let support = (0..n).filter(|&i| in_support[i]).collect();
        Ok(GammaDecomposition { diag, coh, support })
    }
}

/// Scratch buffers reused across derivative evaluations.
#[derive(Debug, Clone)]
pub struct DerivScratch {
    hopping: Vec<f64>,
    band: Vec<f64>,
}

/// Stage storage for the Runge-Kutta integrator.
#[derive(Debug, Clone)]
pub struct RkWorkspace {
    stages: Vec<Vec<f64>>,
    ytmp: Vec<f64>,
    scratch: DerivScratch,
}

impl RkWorkspace {
    /// Derivative scratch, reusable for standalone `derivative` and
    /// `total_energy` calls.
    pub fn scratch(&mut self) -> &mut DerivScratch {
        &mut self.scratch
    }
}

struct Tableau {
    a: [[f64; 11]; 11],
    b: [f64; 11],
    // stage abscissae; the RHS is autonomous so they are only consistency-checked
    #[allow(dead_code)]
    c: [f64; 11],
}

/// Cooper–Verner 11-stage 8th-order coefficients.
fn cooper_verner() -> &'static Tableau {
    static TABLEAU: OnceLock<Tableau> = OnceLock::new();
    TABLEAU.get_or_init(|| {
        let s = 21.0_f64.sqrt();
        let mut a = [[0.0; 11]; 11];
        a[1][0] = 0.5;
        a[2][0] = 0.25;
        a[2][1] = 0.25;
        a[3][0] = 1.0 / 7.0;
        a[3][1] = (-7.0 - 3.0 * s) / 98.0;
        a[3][2] = (21.0 + 5.0 * s) / 49.0;
        a[4][0] = (11.0 + s) / 84.0;
        a[4][2] = (18.0 + 4.0 * s) / 63.0;
        a[4][3] = (21.0 - s) / 252.0;
        a[5][0] = (5.0 + s) / 48.0;
        a[5][2] = (9.0 + s) / 36.0;
        a[5][3] = (-231.0 + 14.0 * s) / 360.0;
        a[5][4] = (63.0 - 7.0 * s) / 80.0;
        a[6][0] = (10.0 - s) / 42.0;
        a[6][2] = (-432.0 + 92.0 * s) / 315.0;
        a[6][3] = (633.0 - 145.0 * s) / 90.0;
        a[6][4] = (-504.0 + 115.0 * s) / 70.0;
        a[6][5] = (63.0 - 13.0 * s) / 35.0;
        a[7][0] = 1.0 / 14.0;
        a[7][4] = (14.0 - 3.0 * s) / 126.0;
        a[7][5] = (13.0 - 3.0 * s) / 63.0;
        a[7][6] = 1.0 / 9.0;
        a[8][0] = 1.0 / 32.0;
        a[8][4] = (91.0 - 21.0 * s) / 576.0;
        a[8][5] = 11.0 / 72.0;
        a[8][6] = (-385.0 - 75.0 * s) / 1152.0;
        a[8][7] = (63.0 + 13.0 * s) / 128.0;
        a[9][0] = 1.0 / 14.0;
        a[9][4] = 1.0 / 9.0;
        a[9][5] = (-733.0 - 147.0 * s) / 2205.0;
        a[9][6] = (515.0 + 111.0 * s) / 504.0;
        a[9][7] = (-51.0 - 11.0 * s) / 56.0;
        a[9][8] = (132.0 + 28.0 * s) / 245.0;
        a[10][4] = (-42.0 + 7.0 * s) / 18.0;
        a[10][5] = (-18.0 + 28.0 * s) / 45.0;
        a[10][6] = (-273.0 - 53.0 * s) / 72.0;
        a[10][7] = (301.0 + 53.0 * s) / 72.0;
        a[10][8] = (28.0 - 28.0 * s) / 45.0;
        a[10][9] = (49.0 - 7.0 * s) / 18.0;
        let mut b = [0.0; 11];
        b[0] = 1.0 / 20.0;
        b[7] = 49.0 / 180.0;
        b[8] = 16.0 / 45.0;
        b[9] = 49.0 / 180.0;
        b[10] = 1.0 / 20.0;
        let c = [
            0.0,
            0.5,
            0.5,
            (7.0 + s) / 14.0,
            (7.0 + s) / 14.0,
            0.5,
            (7.0 - s) / 14.0,
            (7.0 - s) / 14.0,
            0.5,
            (7.0 + s) / 14.0,
            1.0,
        ];
        Tableau { a, b, c }
    })
}

/// One trajectory's propagator: parameters plus the (static) occupation
/// matrix, operating on a packed state vector
/// `[u(N) | p(N) | orbital re/im pairs, column-major]`.
pub struct EhrenfestSystem {
    params: ModelParams,
    gamma: GammaDecomposition,
    n: usize,
}

impl EhrenfestSystem {
    pub fn new(params: &ModelParams, gamma: &OccupationMatrix) -> Result<Self> {
        params.validate()?;
        if gamma.n_levels() != params.n_sites {
            return Err(Error::InvalidInput(format!(
                "occupation matrix is {}x{}, expected {}",
                gamma.n_levels(),
                gamma.n_levels(),
                params.n_sites
            )));
        }
        Ok(EhrenfestSystem {
            params: params.clone(),
            gamma: GammaDecomposition::new(gamma)?,
            n: params.n_sites,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn state_len(&self) -> usize {
        2 * self.n + 2 * self.n * self.n
    }

    pub fn workspace(&self) -> RkWorkspace {
        let len = self.state_len();
        RkWorkspace {
            stages: vec![vec![0.0; len]; 11],
            ytmp: vec![0.0; len],
            scratch: DerivScratch {
                hopping: vec![0.0; self.n - 1],
                band: vec![0.0; self.n - 1],
            },
        }
    }

    #[inline]
    fn orb_base(&self, orbital: usize) -> usize {
        2 * self.n + 2 * orbital * self.n
    }

    pub fn pack(&self, lattice: &LatticeState, orbitals: &Array2<Complex64>) -> Result<Vec<f64>> {
        if lattice.u.len() != self.n || orbitals.nrows() != self.n || orbitals.ncols() != self.n {
            return Err(Error::InvalidInput("state size mismatch".into()));
        }
        let mut x = vec![0.0; self.state_len()];
        x[..self.n].copy_from_slice(&lattice.u);
        x[self.n..2 * self.n].copy_from_slice(&lattice.p);
        for e in 0..self.n {
            let base = self.orb_base(e);
            for m in 0..self.n {
                x[base + 2 * m] = orbitals[(m, e)].re;
                x[base + 2 * m + 1] = orbitals[(m, e)].im;
            }
        }
        Ok(x)
    }

    pub fn lattice_of(&self, x: &[f64]) -> LatticeState {
        LatticeState {
            u: x[..self.n].to_vec(),
            p: x[self.n..2 * self.n].to_vec(),
        }
    }

    pub fn orbitals_of(&self, x: &[f64]) -> Array2<Complex64> {
        let mut c = Array2::zeros((self.n, self.n));
        for e in 0..self.n {
            let base = self.orb_base(e);
            for m in 0..self.n {
                c[(m, e)] = Complex64::new(x[base + 2 * m], x[base + 2 * m + 1]);
            }
        }
        c
    }

    /// Packed initial state: orbitals are the eigenvectors of H_elec at the
    /// given geometry. Also returns the (real) eigenvector matrix for use as
    /// a fixed population-projection basis.
    pub fn initial_state(&self, lattice: &LatticeState) -> Result<(Vec<f64>, Array2<f64>)> {
        let h = build_hamiltonian(&lattice.u, &self.params)?;
        let eig = eig_tridiagonal(&h)?;
        let c = eig.vectors.mapv(|v| Complex64::new(v, 0.0));
        Ok((self.pack(lattice, &c)?, eig.vectors))
    }

    fn fill_hopping(&self, u: &[f64], hopping: &mut [f64]) {
        for k in 0..self.n - 1 {
            hopping[k] = -self.params.t0 + self.params.alpha * (u[k + 1] - u[k]);
        }
    }

    /// Near-diagonal density band `band[k] = Re ρ_{k,k+1}`.
    fn fill_density_band(&self, x: &[f64], band: &mut [f64]) {
        band.fill(0.0);
        for &(l, d) in &self.gamma.diag {
            let base = self.orb_base(l);
            for k in 0..self.n - 1 {
                let re_a = x[base + 2 * k];
                let im_a = x[base + 2 * k + 1];
                let re_b = x[base + 2 * k + 2];
                let im_b = x[base + 2 * k + 3];
                band[k] += d * (re_a * re_b + im_a * im_b);
            }
        }
        for &(i, j, g) in &self.gamma.coh {
            let bi = self.orb_base(i);
            let bj = self.orb_base(j);
            for k in 0..self.n - 1 {
                let ci = Complex64::new(x[bi + 2 * k], x[bi + 2 * k + 1]);
                let ci1 = Complex64::new(x[bi + 2 * k + 2], x[bi + 2 * k + 3]);
                let cj = Complex64::new(x[bj + 2 * k], x[bj + 2 * k + 1]);
                let cj1 = Complex64::new(x[bj + 2 * k + 2], x[bj + 2 * k + 3]);
                band[k] += (g * ci.conj() * cj1 + g.conj() * cj.conj() * ci1).re;
            }
        }
    }

    /// Time derivative of the packed state.
    pub fn derivative(&self, x: &[f64], dxdt: &mut [f64], scratch: &mut DerivScratch) {
        let n = self.n;
        let (u, rest) = x.split_at(n);
        let p = &rest[..n];
        self.fill_hopping(u, &mut scratch.hopping);
        self.fill_density_band(x, &mut scratch.band);
        let h = &scratch.hopping;
        let r = &scratch.band;

        dxdt[0] = 0.0;
        dxdt[n - 1] = 0.0;
        dxdt[n] = 0.0;
        dxdt[2 * n - 1] = 0.0;
        let inv_mass = 1.0 / self.params.mass;
        let k_spring = self.params.spring_k;
        let two_alpha = 2.0 * self.params.alpha;
        for m in 1..n - 1 {
            dxdt[m] = p[m] * inv_mass;
            dxdt[n + m] = two_alpha * (r[m] - r[m - 1])
                - k_spring * (2.0 * u[m] - u[m + 1] - u[m - 1]);
        }

        // i*hbar dC/dt = H C  =>  dC = (Im(v) - i Re(v))/hbar, v = (H C) row
        let inv_hbar = 1.0 / self.params.hbar;
        for e in 0..n {
            let base = self.orb_base(e);
            for m in 0..n {
                let mut vre = 0.0;
                let mut vim = 0.0;
                if m > 0 {
                    vre += h[m - 1] * x[base + 2 * (m - 1)];
                    vim += h[m - 1] * x[base + 2 * (m - 1) + 1];
                }
                if m + 1 < n {
                    vre += h[m] * x[base + 2 * (m + 1)];
                    vim += h[m] * x[base + 2 * (m + 1) + 1];
                }
                dxdt[base + 2 * m] = vim * inv_hbar;
                dxdt[base + 2 * m + 1] = -vre * inv_hbar;
            }
        }
    }

    /// One fixed-step Cooper–Verner update; re-asserts the clamps and fails
    /// on non-finite results.
    pub fn rk8_step(
        &self,
        x: &mut [f64],
        time_fs: f64,
        dt: f64,
        ws: &mut RkWorkspace,
    ) -> Result<()> {
        let tab = cooper_verner();
        let len = x.len();
        {
            let (k0, _) = ws.stages.split_first_mut().unwrap();
            self.derivative(x, k0, &mut ws.scratch);
        }
        for i in 1..11 {
            ws.ytmp.copy_from_slice(x);
            for j in 0..i {
                let a = tab.a[i][j];
                if a == 0.0 {
                    continue;
                }
                let adt = a * dt;
                let kj = &ws.stages[j];
                for m in 0..len {
                    ws.ytmp[m] += adt * kj[m];
                }
            }
            let (before, from_i) = ws.stages.split_at_mut(i);
            let _ = before;
            self.derivative(&ws.ytmp, &mut from_i[0], &mut ws.scratch);
        }
        for (i, &bi) in tab.b.iter().enumerate() {
            if bi == 0.0 {
                continue;
            }
            let bdt = bi * dt;
            let ki = &ws.stages[i];
            for m in 0..len {
                x[m] += bdt * ki[m];
            }
        }
        let n = self.n;
        x[0] = 0.0;
        x[n - 1] = 0.0;
        x[n] = 0.0;
        x[2 * n - 1] = 0.0;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                time_fs: time_fs + dt,
                detail: "non-finite state component after integration step".into(),
            });
        }
        Ok(())
    }

    /// Diagonal of the site density matrix.
    pub fn density_diagonal(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n];
        for &(l, w) in &self.gamma.diag {
            let base = self.orb_base(l);
            for m in 0..n {
                let re = x[base + 2 * m];
                let im = x[base + 2 * m + 1];
                d[m] += w * (re * re + im * im);
            }
        }
        for &(i, j, g) in &self.gamma.coh {
            let bi = self.orb_base(i);
            let bj = self.orb_base(j);
            for m in 0..n {
                let ci = Complex64::new(x[bi + 2 * m], x[bi + 2 * m + 1]);
                let cj = Complex64::new(x[bj + 2 * m], x[bj + 2 * m + 1]);
                d[m] += 2.0 * (g * ci.conj() * cj).re;
            }
        }
        d
    }

    /// Polarization μ = Σ_n x_n (1 − ρ_nn) with x_n = n·a + u_n (e·Å).
    pub fn polarization(&self, x: &[f64]) -> f64 {
        let rho_diag = self.density_diagonal(x);
        let a = self.params.lattice_a;
        let mut mu = 0.0;
        for m in 0..self.n {
            let pos = (m + 1) as f64 * a + x[m];
            mu += pos * (1.0 - rho_diag[m]);
        }
        mu
    }

    /// Total Ehrenfest energy (eV): kinetic + elastic + electronic.
    pub fn total_energy(&self, x: &[f64], scratch: &mut DerivScratch) -> f64 {
        let n = self.n;
        let u = &x[..n];
        let p = &x[n..2 * n];
        self.fill_hopping(u, &mut scratch.hopping);
        self.fill_density_band(x, &mut scratch.band);
        let kinetic: f64 = p.iter().map(|&pi| pi * pi / (2.0 * self.params.mass)).sum();
        let elastic: f64 = u
            .windows(2)
            .map(|w| 0.5 * self.params.spring_k * (w[1] - w[0]) * (w[1] - w[0]))
            .sum();
        let electronic: f64 = scratch
            .hopping
            .iter()
            .zip(scratch.band.iter())
            .map(|(&h, &r)| 2.0 * h * r)
            .sum();
        kinetic + elastic + electronic
    }

    /// Max deviation of the orbital Gram matrix from the identity.
    pub fn gram_error(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for e1 in 0..n {
            let b1 = self.orb_base(e1);
            for e2 in e1..n {
                let b2 = self.orb_base(e2);
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n {
                    let a = Complex64::new(x[b1 + 2 * m], x[b1 + 2 * m + 1]);
                    let b = Complex64::new(x[b2 + 2 * m], x[b2 + 2 * m + 1]);
                    acc += a.conj() * b;
                }
                let want = if e1 == e2 { 1.0 } else { 0.0 };
                worst = worst.max((acc - want).norm());
            }
        }
        worst
    }

    /// Spin-summed populations of the given (1-based) levels of the reference
    /// basis: p_κ = Σ_{εε'} S*_{εκ} Γ_{εε'} S_{ε'κ}, S_{εκ} = ⟨ε(t)|κ⟩.
    pub fn populations(
        &self,
        x: &[f64],
        reference: &Array2<f64>,
        watched: &[usize],
    ) -> Vec<f64> {
        let n = self.n;
        let supp = &self.gamma.support;
        // overlap rows for the support levels only
        let mut s = vec![Complex64::new(0.0, 0.0); supp.len() * watched.len()];
        for (si, &e) in supp.iter().enumerate() {
            let base = self.orb_base(e);
            for (wi, &lvl) in watched.iter().enumerate() {
                let kappa = lvl - 1;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n {
                    let c = Complex64::new(x[base + 2 * m], x[base + 2 * m + 1]);
                    acc += c.conj() * reference[(m, kappa)];
                }
                s[si * watched.len() + wi] = acc;
            }
        }
        let row = |level: usize, wi: usize| -> Complex64 {
            let si = supp.iter().position(|&e| e == level).unwrap();
            s[si * watched.len() + wi]
        };
        let mut pops = vec![0.0; watched.len()];
        for wi in 0..watched.len() {
            let mut acc = 0.0;
            for &(l, d) in &self.gamma.diag {
                acc += d * row(l, wi).norm_sqr();
            }
            for &(i, j, g) in &self.gamma.coh {
                acc += 2.0 * (g * row(i, wi).conj() * row(j, wi)).re;
            }
            pops[wi] = acc;
        }
        pops
    }

    /// Full site density matrix (test/diagnostic path).
    pub fn site_density(&self, x: &[f64]) -> Result<SiteDensityMatrix> {
        let n = self.n;
        let c = self.orbitals_of(x);
        let mut rho = Array2::<Complex64>::zeros((n, n));
        for &(l, d) in &self.gamma.diag {
            for a in 0..n {
                for b in 0..n {
                    rho[(a, b)] += d * c[(a, l)].conj() * c[(b, l)];
                }
            }
        }
        for &(i, j, g) in &self.gamma.coh {
            for a in 0..n {
                for b in 0..n {
                    rho[(a, b)] += g * c[(a, i)].conj() * c[(b, j)]
                        + g.conj() * c[(a, j)].conj() * c[(b, i)];
                }
            }
        }
        Ok(SiteDensityMatrix { rho })
    }
}

/// Polarization μ = Σ_n x_n (1 − ρ_{n,n}), x_n = n·a + u_n (sites 1-based),
/// in units of |e|·Å.
pub fn compute_polarization(
    lattice: &LatticeState,
    rho: &SiteDensityMatrix,
    params: &ModelParams,
) -> Result<f64> {
    let n = params.n_sites;
    if lattice.u.len() != n || rho.rho.nrows() != n {
        return Err(Error::InvalidInput("size mismatch".into()));
    }
    let mut mu = 0.0;
    for m in 0..n {
        let pos = (m + 1) as f64 * params.lattice_a + lattice.u[m];
        mu += pos * (1.0 - rho.rho[(m, m)].re);
    }
    Ok(mu)
}

/// Populations of the watched (1-based) levels in the instantaneous
/// eigenbasis of H_elec at the state's geometry.
pub fn level_populations(
    state: &TrajectoryState,
    gamma: &OccupationMatrix,
    watched: &[usize],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let system = EhrenfestSystem::new(params, gamma)?;
    let x = system.pack(&state.lattice, &state.orbitals)?;
    let h = build_hamiltonian(&state.lattice.u, params)?;
    let eig = eig_tridiagonal(&h)?;
    Ok(system.populations(&x, &eig.vectors, watched))
}

/// Propagates one trajectory from a sampled initial condition, recording
/// observables every `record_stride` steps (including t = 0 and the final
/// time). Initial orbitals are the eigenvectors at the sampled geometry.
pub fn propagate_trajectory(
    init: &SampledInitialCondition,
    gamma: &OccupationMatrix,
    params: &ModelParams,
    run: &RunGrid,
) -> Result<TrajectoryRecord> {
    let n_steps = run.validate(params)?;
    let system = EhrenfestSystem::new(params, gamma)?;
    let (mut x, initial_basis) = system.initial_state(&init.state)?;
    let mut ws = system.workspace();

    let n_records = n_steps / run.record_stride + 1;
    let mut rec = TrajectoryRecord {
        times_fs: Vec::with_capacity(n_records),
        polarization: Vec::with_capacity(n_records),
        level_populations: vec![Vec::with_capacity(n_records); run.watched_levels.len()],
        total_energy: Vec::with_capacity(n_records),
    };

    let mut record = |x: &[f64], t: f64, ws: &mut RkWorkspace| -> Result<()> {
        rec.times_fs.push(t);
        rec.polarization.push(system.polarization(x));
        rec.total_energy.push(system.total_energy(x, &mut ws.scratch));
        if !run.watched_levels.is_empty() {
            let pops = match run.population_basis {
                PopulationBasis::InitialGeometry => {
                    system.populations(x, &initial_basis, &run.watched_levels)
                }
                PopulationBasis::Instantaneous => {
                    let h = build_hamiltonian(&x[..params.n_sites], params)?;
                    let eig = eig_tridiagonal(&h)?;
                    system.populations(x, &eig.vectors, &run.watched_levels)
                }
            };
            for (w, p) in rec.level_populations.iter_mut().zip(pops) {
                w.push(p);
            }
        }
        Ok(())
    };

    record(&x, 0.0, &mut ws)?;
    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * run.dt_fs;
        system.rk8_step(&mut x, t_prev, run.dt_fs, &mut ws)?;
        if step % run.record_stride == 0 {
            record(&x, step as f64 * run.dt_fs, &mut ws)?;
        }
    }
    Ok(rec)
}
