//! Batch driver: relax geometries, tabulate normal modes, validate the
//! Wigner sampler, run trajectory ensembles, and post-process results.
//!
//! Exit codes: 0 success, 2 configuration, 3 convergence, 4 numerical.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ssh_ehrenfest::config::{load_config, RunConfig};
use ssh_ehrenfest::dynamics::PopulationBasis;
use ssh_ehrenfest::eigensolve::eig_tridiagonal;
use ssh_ehrenfest::ensemble::{extract_metrics, run_ensemble, EnsembleOptions};
use ssh_ehrenfest::error::{Error, Result};
use ssh_ehrenfest::model::build_hamiltonian;
use ssh_ehrenfest::output;
use ssh_ehrenfest::phonons::{build_hessian, normal_modes, NormalModeBasis};
use ssh_ehrenfest::relax::{optimize_geometry, RelaxedGeometry};
use ssh_ehrenfest::superposition::SuperpositionSpec;
use ssh_ehrenfest::wigner::sample_initial_condition;

#[derive(Parser)]
#[command(name = "sshdyn", version, about = "Electronic decoherence in polyene chains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Relax the preparation-surface geometry; report dimerization and gap
    Relax {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Normal-mode table (frequencies, quanta, participation) and ZPE
    Modes {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Draw Wigner samples and validate their moments against the harmonic
    /// ground state
    SampleCheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of samples to draw
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Run the full ensemble pipeline and write the time-series CSV
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also write a matplotlib script next to the CSV
        #[arg(long)]
        emit_plot_script: bool,
        /// Stop after this many new trajectories (checkpoint holds the rest)
        #[arg(long)]
        session_limit: Option<usize>,
    },
    /// Post-process a time-series CSV into decoherence metrics
    Metrics {
        /// Time-series CSV produced by `run`
        #[arg(long)]
        input: PathBuf,
        /// Also write the metrics as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Config file plus flag-level overrides; flags win.
#[derive(Args)]
struct ConfigArgs {
    /// TOML config file (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_sites: Option<usize>,
    /// ground-excited | pair-ground-geometry | pair-excited-geometry
    #[arg(long)]
    superposition: Option<String>,
    /// 1-based level i for the pair superpositions (coherence between i, i+1)
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Integration step (fs)
    #[arg(long)]
    dt: Option<f64>,
    /// Trajectory length (fs)
    #[arg(long)]
    t_final: Option<f64>,
    /// Record observables every this many steps
    #[arg(long)]
    record_stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (CSV)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated 1-based level numbers to record populations for
    #[arg(long)]
    watched_levels: Option<String>,
    /// instantaneous | initial-geometry
    #[arg(long)]
    population_basis: Option<String>,
    /// Checkpoint file for interruptible ensembles
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    spring_k: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    lattice_a: Option<f64>,
    /// Relaxation sweep limit
    #[arg(long)]
    max_sweeps: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.n_sites {
            cfg.n_sites = v;
        }
        match (self.superposition.as_deref(), self.level) {
            (None, None) => {}
            (kind, level) => {
                let kind = kind.map_or_else(
                    || match cfg.superposition {
                        SuperpositionSpec::GroundExcited => "ground-excited",
                        SuperpositionSpec::PairGroundGeometry { .. } => "pair-ground-geometry",
                        SuperpositionSpec::PairExcitedGeometry { .. } => "pair-excited-geometry",
                    },
                    |k| k,
                );
                cfg.superposition = parse_superposition(kind, level, &cfg.superposition)?;
            }
        }
        if let Some(v) = self.trajectories {
            cfg.trajectory_count = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_final {
            cfg.t_final = v;
        }
        if let Some(v) = self.record_stride {
            cfg.record_stride = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = &self.output {
            cfg.output_path = v.clone();
        }
        if let Some(v) = &self.watched_levels {
            cfg.watched_levels = parse_levels(v)?;
        }
        if let Some(v) = &self.population_basis {
            cfg.population_basis = match v.as_str() {
                "instantaneous" => PopulationBasis::Instantaneous,
                "initial-geometry" => PopulationBasis::InitialGeometry,
                other => {
                    return Err(Error::Config(format!(
                        "population_basis must be 'instantaneous' or 'initial-geometry', got '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = &self.checkpoint {
            cfg.checkpoint_path = Some(v.clone());
        }
        if let Some(v) = self.t0 {
            cfg.params.t0 = Some(v);
        }
        if let Some(v) = self.alpha {
            cfg.params.alpha = Some(v);
        }
        if let Some(v) = self.spring_k {
            cfg.params.spring_k = Some(v);
        }
        if let Some(v) = self.mass {
            cfg.params.mass = Some(v);
        }
        if let Some(v) = self.lattice_a {
            cfg.params.lattice_a = Some(v);
        }
        if let Some(v) = self.max_sweeps {
            cfg.relax.max_sweeps = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_superposition(
    kind: &str,
    level: Option<usize>,
    previous: &SuperpositionSpec,
) -> Result<SuperpositionSpec> {
    // --level alone re-targets the configured pair kind
    let inherited = match previous {
        SuperpositionSpec::PairGroundGeometry { level } | SuperpositionSpec::PairExcitedGeometry { level } => {
            Some(*level)
        }
        SuperpositionSpec::GroundExcited => None,
    };
    let level_for = |kind: &str| {
        level.or(inherited).ok_or_else(|| {
            Error::Config(format!("superposition '{kind}' requires --level"))
        })
    };
    match kind {
        "ground-excited" => Ok(SuperpositionSpec::GroundExcited),
        "pair-ground-geometry" => Ok(SuperpositionSpec::PairGroundGeometry {
            level: level_for(kind)?,
        }),
        "pair-excited-geometry" => Ok(SuperpositionSpec::PairExcitedGeometry {
            level: level_for(kind)?,
        }),
        other => Err(Error::Config(format!(
            "unknown superposition '{other}' (expected ground-excited, \
             pair-ground-geometry, or pair-excited-geometry)"
        ))),
    }
}

fn parse_levels(csv: &str) -> Result<Vec<usize>> {
    csv.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad level number '{}'", s.trim())))
        })
        .collect()
}

fn relax_pipeline(cfg: &RunConfig) -> Result<RelaxedGeometry> {
    let params = cfg.model_params();
    let occ = cfg.superposition.preparation_occupation(&params)?;
    optimize_geometry(&occ, &params, &cfg.relax_options())
}

fn modes_pipeline(cfg: &RunConfig) -> Result<(RelaxedGeometry, NormalModeBasis)> {
    let params = cfg.model_params();
    let occ = cfg.superposition.preparation_occupation(&params)?;
    let relaxed = optimize_geometry(&occ, &params, &cfg.relax_options())?;
    let hessian = build_hessian(&relaxed, &occ, &params)?;
    let modes = normal_modes(&hessian, &relaxed, &params)?;
    Ok((relaxed, modes))
}

fn cmd_relax(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let params = cfg.model_params();
    let relaxed = relax_pipeline(&cfg)?;
    let eig = eig_tridiagonal(&build_hamiltonian(&relaxed.u0, &params)?)?;
    let homo = eig.values[params.homo() - 1];
    let lumo = eig.values[params.lumo() - 1];
    let width = eig.values[params.n_sites - 1] - eig.values[0];
    let deltas: Vec<f64> = relaxed.u0.windows(2).map(|w| w[1] - w[0]).collect();
    let alternating = deltas
        .windows(2)
        .all(|pair| pair[0] * pair[1] < 0.0);

    println!("sites:               {}", params.n_sites);
    println!("sweeps:              {}", relaxed.iterations);
    println!("residual:            {:.3e} A", relaxed.residual);
    println!("electronic energy:   {:.6} eV", relaxed.electronic_energy);
    println!("spectral width:      {:.6} eV", width);
    println!("gap (HOMO-LUMO):     {:.6} eV", lumo - homo);
    println!("bond alternation:    {}", if alternating { "strict" } else { "broken" });
    if let Some(path) = &args.output {
        std::fs::write(path, output::geometry_csv(&relaxed.u0)).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        println!("geometry written to {}", path.display());
    }
    Ok(())
}

fn cmd_modes(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let params = cfg.model_params();
    let (_, modes) = modes_pipeline(&cfg)?;
    println!("modes:               {}", modes.frequencies.len());
    println!(
        "frequency range:     {:.6} .. {:.6} fs^-1",
        modes.frequencies.first().unwrap(),
        modes.frequencies.last().unwrap()
    );
    println!("zero-point energy:   {:.6} eV", modes.zero_point_energy);
    if let Some(path) = &args.output {
        output::write_modes_csv(path, &modes, params.hbar)?;
        println!("mode table written to {}", path.display());
    } else {
        print!("{}", output::modes_csv(&modes, params.hbar));
    }
    Ok(())
}

fn cmd_sample_check(args: &ConfigArgs, samples: usize) -> Result<()> {
    let cfg = args.resolve()?;
    let params = cfg.model_params();
    let (relaxed, modes) = modes_pipeline(&cfg)?;
    let nin = modes.frequencies.len();
    let m = samples.max(2) as f64;

    // accumulate normal-coordinate moments and the classical energy
    let mut q_mean = vec![0.0; nin];
    let mut q2 = vec![0.0; nin];
    let mut p2 = vec![0.0; nin];
    let mut energy = 0.0;
    for i in 0..samples {
        let s = sample_initial_condition(&modes, &params, cfg.master_seed, i as u64)?;
        let mut e_kin = 0.0;
        for site in 0..params.n_sites {
            e_kin += s.state.p[site] * s.state.p[site] / (2.0 * params.mass);
        }
        let mut e_pot = 0.0;
        for j in 0..nin {
            let mut q = 0.0;
            let mut p = 0.0;
            for site in 0..nin {
                q += modes.modes[(site, j)] * (s.state.u[site + 1] - relaxed.u0[site + 1]);
                p += modes.modes[(site, j)] * s.state.p[site + 1];
            }
            q_mean[j] += q;
            q2[j] += q * q;
            p2[j] += p * p;
            let w = modes.frequencies[j];
            e_pot += 0.5 * params.mass * w * w * q * q;
        }
        energy += e_kin + e_pot;
    }
    energy /= m;

    // 5-sigma bands on the sampled moments
    let var_tol = 5.0 * (2.0 / m).sqrt();
    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for j in 0..nin {
        let w = modes.frequencies[j];
        let var_q_ref = params.hbar / (2.0 * params.mass * w);
        let var_p_ref = params.hbar * params.mass * w / 2.0;
        let mean_sigmas = (q_mean[j] / m) / (var_q_ref / m).sqrt();
        worst_mean = worst_mean.max(mean_sigmas.abs());
        worst_var = worst_var.max((q2[j] / m / var_q_ref - 1.0).abs());
        worst_var = worst_var.max((p2[j] / m / var_p_ref - 1.0).abs());
    }
    let e_dev = (energy / modes.zero_point_energy - 1.0).abs();

    println!("samples:                 {samples}");
    println!("modes:                   {nin}");
    println!("worst |mean Q| (sigma):  {worst_mean:.2}");
    println!("worst variance dev:      {:.2}% (tolerance {:.2}%)", 100.0 * worst_var, 100.0 * var_tol);
    println!("mean classical energy:   {energy:.6} eV");
    println!("zero-point energy:       {:.6} eV", modes.zero_point_energy);
    println!("energy deviation:        {:.2}% (tolerance 2%)", 100.0 * e_dev);

    if worst_mean > 5.0 || worst_var > var_tol || e_dev > 0.02 {
        return Err(Error::NumericFailure {
            time_fs: 0.0,
            detail: "Wigner sample moments outside statistical tolerance".into(),
        });
    }
    println!("sample moments consistent with the harmonic ground state");
    Ok(())
}

fn cmd_run(args: &ConfigArgs, emit_plot_script: bool, session_limit: Option<usize>) -> Result<()> {
    let cfg = args.resolve()?;
    let params = cfg.model_params();
    if let Some(dir) = cfg.output_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
    }
    let resolved = cfg.resolved_path();
    std::fs::write(&resolved, cfg.to_toml_string()?).map_err(|e| Error::Io {
        path: resolved.clone(),
        source: e,
    })?;

    let opts = EnsembleOptions {
        trajectory_count: cfg.trajectory_count,
        master_seed: cfg.master_seed,
        workers: cfg.workers,
        zero_variance: false,
        checkpoint_path: cfg.checkpoint_path.clone(),
        session_trajectory_limit: session_limit,
        progress: true,
        relax: cfg.relax_options(),
    };
    let result = run_ensemble(&cfg.superposition, &params, &cfg.run_grid(), &opts)?;
    output::write_timeseries_csv(&cfg.output_path, &result)?;
    println!(
        "{} trajectories ({} requested), {} recorded times -> {}",
        result.trajectories_completed,
        result.trajectories_requested,
        result.times_fs.len(),
        cfg.output_path.display()
    );
    println!("resolved config -> {}", resolved.display());
    if emit_plot_script {
        let script = output::emit_plot_script(&cfg.output_path)?;
        println!("plot script -> {}", script.display());
    }
    if result.is_complete() {
        print_metrics(&extract_metrics(&result)?);
    }
    Ok(())
}

fn cmd_metrics(input: &PathBuf, json: &Option<PathBuf>) -> Result<()> {
    let result = output::read_timeseries_csv(input)?;
    let metrics = extract_metrics(&result)?;
    print_metrics(&metrics);
    if let Some(path) = json {
        let body = serde_json::to_string_pretty(&metrics)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize metrics: {e}")))?;
        std::fs::write(path, body).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        println!("metrics JSON -> {}", path.display());
    }
    Ok(())
}

fn print_metrics(m: &ssh_ehrenfest::ensemble::DecoherenceMetrics) {
    println!("peak envelope:       {:.6} eA", m.peak_envelope);
    println!("noise floor:         {:.3e} eA", m.noise_floor);
    if m.decohered {
        println!("decoherence time:    {:.2} fs", m.decoherence_time_fs);
    } else {
        println!(
            "decoherence time:    not reached within the run ({:.2} fs)",
            m.decoherence_time_fs
        );
    }
    let times: Vec<String> = m.recurrence_times_fs.iter().map(|t| format!("{t:.2}")).collect();
    println!("envelope crests:     [{}] fs", times.join(", "));
    let periods: Vec<String> = m.recurrence_periods_fs.iter().map(|t| format!("{t:.2}")).collect();
    println!("recurrence periods:  [{}] fs", periods.join(", "));
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Relax { cfg } => cmd_relax(cfg),
        Cmd::Modes { cfg } => cmd_modes(cfg),
        Cmd::SampleCheck { cfg, samples } => cmd_sample_check(cfg, *samples),
        Cmd::Run {
            cfg,
            emit_plot_script,
            session_limit,
        } => cmd_run(cfg, *emit_plot_script, *session_limit),
        Cmd::Metrics { input, json } => cmd_metrics(input, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
