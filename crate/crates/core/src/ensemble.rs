//! Monte Carlo ensemble driver: runs trajectories in parallel over a thread
//! pool, folds observables in strict trajectory-index order with compensated
//! summation (so the worker count can never perturb the result), checkpoints
//! partial sums, and extracts decoherence metrics from the averaged signal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{propagate_trajectory, RunGrid, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::model::{LatticeState, ModelParams};
use crate::phonons::{build_hessian, normal_modes, NormalModeBasis};
use crate::relax::{optimize_geometry, RelaxOptions};
use crate::superposition::{build_superposition, SuperpositionSpec};
use crate::wigner::{sample_initial_condition, trajectory_seed, SampledInitialCondition};

pub const CHECKPOINT_VERSION: u32 = 1;
const BLOCK: usize = 32;

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub trajectory_count: usize,
    pub master_seed: u64,
    pub workers: usize,
    /// All Q_j = P_j = 0: every trajectory starts at the relaxed geometry at
    /// rest (degenerate ensemble, useful for exactness tests).
    pub zero_variance: bool,
    pub checkpoint_path: Option<PathBuf>,
    /// Stop (with a checkpoint) after this many additional trajectories.
    pub session_trajectory_limit: Option<usize>,
    /// Progress lines on stderr after each block.
    pub progress: bool,
    pub relax: RelaxOptions,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            trajectory_count: 1000,
            master_seed: 1,
            workers: 1,
            zero_variance: false,
            checkpoint_path: None,
            session_trajectory_limit: None,
            progress: false,
            relax: RelaxOptions::default(),
        }
    }
}

/// Ensemble averages on the shared recording grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub times_fs: Vec<f64>,
    pub mean_polarization: Vec<f64>,
    pub stderr_polarization: Vec<f64>,
    pub watched_levels: Vec<usize>,
    /// `mean_populations[w][k]`: watched level `w`, time index `k`.
    pub mean_populations: Vec<Vec<f64>>,
    pub trajectories_completed: usize,
    pub trajectories_requested: usize,
    pub master_seed: u64,
}

impl EnsembleResult {
    pub fn is_complete(&self) -> bool {
        self.trajectories_completed == self.trajectories_requested
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Running partial sums, folded in trajectory-index order.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Accumulator {
    times_fs: Vec<f64>,
    pol: Vec<Kahan>,
    pol_sq: Vec<Kahan>,
    pops: Vec<Vec<Kahan>>,
    completed: usize,
}

impl Accumulator {
    fn new(times_fs: Vec<f64>, n_watched: usize) -> Self {
        let n = times_fs.len();
        Accumulator {
            times_fs,
            pol: vec![Kahan::default(); n],
            pol_sq: vec![Kahan::default(); n],
            pops: vec![vec![Kahan::default(); n]; n_watched],
            completed: 0,
        }
    }

    fn fold(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        if rec.times_fs != self.times_fs {
            return Err(Error::InvalidInput(
                "trajectory recorded on a different time grid".into(),
            ));
        }
        for (k, &mu) in rec.polarization.iter().enumerate() {
            self.pol[k].add(mu);
            self.pol_sq[k].add(mu * mu);
        }
        for (w, series) in rec.level_populations.iter().enumerate() {
            for (k, &v) in series.iter().enumerate() {
                self.pops[w][k].add(v);
            }
        }
        self.completed += 1;
        Ok(())
    }

    fn result(
        &self,
        watched_levels: &[usize],
        requested: usize,
        master_seed: u64,
    ) -> EnsembleResult {
        let m = self.completed as f64;
        let n = self.times_fs.len();
        let mut mean = vec![0.0; n];
        let mut stderr = vec![0.0; n];
        for k in 0..n {
            mean[k] = self.pol[k].sum / m;
            if self.completed > 1 {
                let var = ((self.pol_sq[k].sum - self.pol[k].sum * self.pol[k].sum / m)
                    / (m - 1.0))
                    .max(0.0);
                stderr[k] = (var / m).sqrt();
            }
        }
        let mean_populations = self
            .pops
            .iter()
            .map(|row| row.iter().map(|k| k.sum / m).collect())
            .collect();
        EnsembleResult {
            times_fs: self.times_fs.clone(),
            mean_polarization: mean,
            stderr_polarization: stderr,
            watched_levels: watched_levels.to_vec(),
            mean_populations,
            trajectories_completed: self.completed,
            trajectories_requested: requested,
            master_seed,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    param_hash: String,
    master_seed: u64,
    accumulator: Accumulator,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable hash of everything that must match for partial sums to be
/// continuable; the trajectory count is deliberately excluded so a resumed
/// run may extend the ensemble.
fn param_hash(
    spec: &SuperpositionSpec,
    params: &ModelParams,
    run: &RunGrid,
    opts: &EnsembleOptions,
) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "v{CHECKPOINT_VERSION}|n={}|t0={:016x}|alpha={:016x}|k={:016x}|mass={:016x}|a={:016x}|hbar={:016x}",
        params.n_sites,
        params.t0.to_bits(),
        params.alpha.to_bits(),
        params.spring_k.to_bits(),
        params.mass.to_bits(),
        params.lattice_a.to_bits(),
        params.hbar.to_bits(),
    );
    let _ = write!(
        s,
        "|spec={spec:?}|dt={:016x}|tf={:016x}|stride={}|watched={:?}|basis={:?}|seed={}|frozen={}",
        run.dt_fs.to_bits(),
        run.t_final_fs.to_bits(),
        run.record_stride,
        run.watched_levels,
        run.population_basis,
        opts.master_seed,
        opts.zero_variance,
    );
    let _ = write!(
        s,
        "|rtol={:016x}|rmax={}|rmix={:016x}",
        opts.relax.tol.to_bits(),
        opts.relax.max_iter,
        opts.relax.mixing.to_bits(),
    );
    format!("{:016x}", fnv1a64(s.as_bytes()))
}

fn load_checkpoint(path: &Path, expected_hash: &str) -> Result<Option<Accumulator>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => {
            return Err(Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        }
    };
    if bytes.is_empty() {
        return Ok(None);
    }
    let cp: Checkpoint = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Checkpoint(format!("unreadable checkpoint {}: {e}", path.display())))?;
    if cp.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {} unsupported (expected {})",
            cp.version, CHECKPOINT_VERSION
        )));
    }
    if cp.param_hash != expected_hash {
        return Err(Error::Checkpoint(
            "checkpoint was written with different run parameters; refusing to resume".into(),
        ));
    }
    Ok(Some(cp.accumulator))
}

fn write_checkpoint(path: &Path, hash: &str, master_seed: u64, acc: &Accumulator) -> Result<()> {
    let cp = Checkpoint {
        version: CHECKPOINT_VERSION,
        param_hash: hash.to_string(),
        master_seed,
        accumulator: acc.clone(),
    };
    let body = serde_json::to_vec(&cp)
        .map_err(|e| Error::Checkpoint(format!("cannot serialize checkpoint: {e}")))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &body).map_err(|e| Error::Io {
        path: tmp.clone(),
        source: e,
    })?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Runs (or resumes) the full pipeline: relax the preparation surface, build
/// the harmonic modes, sample, propagate, and average. Trajectory `i` is a
/// pure function of `(master_seed, i)`, and the reduction is an index-ordered
/// serial fold, so results are identical for any worker count.
pub fn run_ensemble(
    spec: &SuperpositionSpec,
    params: &ModelParams,
    run: &RunGrid,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    spec.validate(params)?;
    let n_steps = run.validate(params)?;
    if opts.trajectory_count == 0 {
        return Err(Error::InvalidInput("trajectoryCount must be at least 1".into()));
    }
    if opts.workers == 0 {
        return Err(Error::InvalidInput("workers must be at least 1".into()));
    }

    let occ = spec.preparation_occupation(params)?;
    let relaxed = optimize_geometry(&occ, params, &opts.relax)?;
    let modes: Option<NormalModeBasis> = if opts.zero_variance {
        None
    } else {
        let hessian = build_hessian(&relaxed, &occ, params)?;
        Some(normal_modes(&hessian, &relaxed, params)?)
    };
    let gamma = build_superposition(spec, params)?;

    let times: Vec<f64> = (0..=n_steps / run.record_stride)
        .map(|k| (k * run.record_stride) as f64 * run.dt_fs)
        .collect();
    let hash = param_hash(spec, params, run, opts);

    let mut acc = match &opts.checkpoint_path {
        Some(path) => match load_checkpoint(path, &hash)? {
            Some(loaded) => {
                if loaded.times_fs != times || loaded.pops.len() != run.watched_levels.len() {
                    return Err(Error::Checkpoint(
                        "checkpoint grid does not match this run".into(),
                    ));
                }
                if loaded.completed > opts.trajectory_count {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint already holds {} trajectories, more than the {} requested",
                        loaded.completed, opts.trajectory_count
                    )));
                }
                loaded
            }
            None => Accumulator::new(times.clone(), run.watched_levels.len()),
        },
        None => Accumulator::new(times.clone(), run.watched_levels.len()),
    };

    let target = match opts.session_trajectory_limit {
        Some(limit) => opts.trajectory_count.min(acc.completed + limit),
        None => opts.trajectory_count,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;

    let run_one = |index: u64| -> Result<TrajectoryRecord> {
        let init = match &modes {
            Some(basis) => sample_initial_condition(basis, params, opts.master_seed, index)?,
            None => SampledInitialCondition {
                state: LatticeState::new(
                    relaxed.u0.clone(),
                    vec![0.0; params.n_sites],
                    params,
                )?,
                trajectory_index: index,
                seed: trajectory_seed(opts.master_seed, index),
            },
        };
        propagate_trajectory(&init, &gamma, params, run).map_err(|e| Error::Trajectory {
            index,
            source: Box::new(e),
        })
    };

    while acc.completed < target {
        let block: Vec<u64> =
            (acc.completed as u64..target.min(acc.completed + BLOCK) as u64).collect();
        let records: Vec<TrajectoryRecord> =
            pool.install(|| block.par_iter().map(|&i| run_one(i)).collect::<Result<_>>())?;
        for rec in &records {
            acc.fold(rec)?;
        }
        if let Some(path) = &opts.checkpoint_path {
            write_checkpoint(path, &hash, opts.master_seed, &acc)?;
        }
        if opts.progress {
            eprintln!(
                "ensemble: {}/{} trajectories",
                acc.completed, opts.trajectory_count
            );
        }
    }

    Ok(acc.result(&run.watched_levels, opts.trajectory_count, opts.master_seed))
}

/// Decay and recurrence structure of the averaged polarization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoherenceMetrics {
    /// Earliest time after which the envelope stays below peak/e for the
    /// rest of the run; equals the run length when that never happens.
    pub decoherence_time_fs: f64,
    pub decohered: bool,
    /// Times of envelope crests above the noise floor.
    pub recurrence_times_fs: Vec<f64>,
    /// Spacings between consecutive crests.
    pub recurrence_periods_fs: Vec<f64>,
    /// Piecewise-linear envelope knots: local maxima of |mean polarization|.
    pub envelope_times_fs: Vec<f64>,
    pub envelope_values: Vec<f64>,
    pub peak_envelope: f64,
    /// 3x the mean standard error over the last tenth of the run.
    pub noise_floor: f64,
}

/// One-sided local maxima of a series: interior points not smaller than both
/// neighbours, endpoints not smaller than their single neighbour.
fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n == 1 {
        return vec![0];
    }
    let mut out = Vec::new();
    for k in 0..n {
        let left_ok = k == 0 || values[k] >= values[k - 1];
        let right_ok = k == n - 1 || values[k] >= values[k + 1];
        if left_ok && right_ok {
            out.push(k);
        }
    }
    out
}

pub fn extract_metrics(result: &EnsembleResult) -> Result<DecoherenceMetrics> {
    let n = result.times_fs.len();
    if n == 0 || result.mean_polarization.len() != n {
        return Err(Error::InvalidInput(
            "cannot extract metrics from an empty or inconsistent series".into(),
        ));
    }
    let abs: Vec<f64> = result.mean_polarization.iter().map(|v| v.abs()).collect();
    let knots = local_maxima(&abs);
    let knot_t: Vec<f64> = knots.iter().map(|&k| result.times_fs[k]).collect();
    let knot_v: Vec<f64> = knots.iter().map(|&k| abs[k]).collect();
    let peak = knot_v.iter().copied().fold(0.0, f64::max);
    let run_length = *result.times_fs.last().unwrap();

    // noise floor from the last tenth of the run
    let tail_start = n - (n / 10).max(1);
    let tail = &result.stderr_polarization[tail_start..];
    let noise_floor = 3.0 * tail.iter().sum::<f64>() / tail.len() as f64;

    // 1/e decoherence time on the envelope
    let threshold = peak / std::f64::consts::E;
    let last_above = knot_v.iter().rposition(|&v| v >= threshold);
    let (decohered, decoherence_time_fs) = match last_above {
        None => (true, 0.0),
        Some(j) if j + 1 == knot_v.len() => (false, run_length),
        Some(j) => {
            let (t0, v0) = (knot_t[j], knot_v[j]);
            let (t1, v1) = (knot_t[j + 1], knot_v[j + 1]);
            let t = t0 + (v0 - threshold) / (v0 - v1) * (t1 - t0);
            (true, t)
        }
    };

    // envelope crests: local maxima of the knot sequence, above the noise
    // floor, separated by a genuine dip (valley below half the lesser crest)
    let crest_candidates = local_maxima(&knot_v);
    let mut crest_idx: Vec<usize> = Vec::new();
    for &c in &crest_candidates {
        if knot_v[c] <= noise_floor || knot_v[c] == 0.0 {
            continue;
        }
        match crest_idx.last().copied() {
            None => crest_idx.push(c),
            Some(prev) => {
                let valley = knot_v[prev + 1..c].iter().copied().fold(f64::INFINITY, f64::min);
                if valley < 0.5 * knot_v[prev].min(knot_v[c]) {
                    crest_idx.push(c);
                } else if knot_v[c] > knot_v[prev] {
                    *crest_idx.last_mut().unwrap() = c;
                }
            }
        }
    }
    let recurrence_times_fs: Vec<f64> = crest_idx.iter().map(|&c| knot_t[c]).collect();
    let recurrence_periods_fs: Vec<f64> = recurrence_times_fs
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();

    Ok(DecoherenceMetrics {
        decoherence_time_fs,
        decohered,
        recurrence_times_fs,
        recurrence_periods_fs,
        envelope_times_fs: knot_t,
        envelope_values: knot_v,
        peak_envelope: peak,
        noise_floor,
    })
}
