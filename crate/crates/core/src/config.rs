//! Run configuration: a TOML file of `key = value` sections, fully validated
//! before any computation, with every field defaulting to the standard
//! polyacetylene parameter set. Unknown keys are rejected by name. Each run
//! writes its resolved configuration next to its output for provenance.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::dynamics::{PopulationBasis, RunGrid};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::relax::RelaxOptions;
use crate::superposition::SuperpositionSpec;

/// Optional overrides of the physical constants; anything left out keeps the
/// standard value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spring_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
}

impl ParamOverrides {
    fn apply(&self, base: &mut ModelParams) {
        if let Some(v) = self.t0 {
            base.t0 = v;
        }
        if let Some(v) = self.alpha {
            base.alpha = v;
        }
        if let Some(v) = self.spring_k {
            base.spring_k = v;
        }
        if let Some(v) = self.mass {
            base.mass = v;
        }
        if let Some(v) = self.lattice_a {
            base.lattice_a = v;
        }
        if let Some(v) = self.hbar {
            base.hbar = v;
        }
    }
}

/// Geometry-relaxation knobs; defaults converge for every tested chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_sites: usize,
    pub superposition: SuperpositionSpec,
    pub trajectory_count: usize,
    /// Integration step (fs).
    pub dt: f64,
    /// Trajectory length (fs).
    pub t_final: f64,
    /// Observables recorded every this many steps.
    pub record_stride: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub output_path: PathBuf,
    /// 1-based level numbers whose populations are recorded (empty: none).
    pub watched_levels: Vec<usize>,
    pub population_basis: PopulationBasis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_path: Option<PathBuf>,
    pub params: ParamOverrides,
    pub relax: RelaxOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_sites: 20,
            superposition: SuperpositionSpec::GroundExcited,
            trajectory_count: 1000,
            dt: 0.02,
            t_final: 200.0,
            record_stride: 25,
            master_seed: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            output_path: PathBuf::from("ensemble.csv"),
            watched_levels: Vec::new(),
            population_basis: PopulationBasis::Instantaneous,
            checkpoint_path: None,
            params: ParamOverrides::default(),
            relax: RelaxOverrides::default(),
        }
    }
}

impl RunConfig {
    /// Physical parameters with any overrides applied.
    pub fn model_params(&self) -> ModelParams {
        let mut p = ModelParams {
            n_sites: self.n_sites,
            ..Default::default()
        };
        self.params.apply(&mut p);
        p
    }

    pub fn relax_options(&self) -> RelaxOptions {
        let mut o = RelaxOptions::default();
        if let Some(v) = self.relax.tol {
            o.tol = v;
        }
        if let Some(v) = self.relax.max_sweeps {
            o.max_iter = v;
        }
        if let Some(v) = self.relax.mixing {
            o.mixing = v;
        }
        o
    }

    pub fn run_grid(&self) -> RunGrid {
        RunGrid {
            dt_fs: self.dt,
            t_final_fs: self.t_final,
            record_stride: self.record_stride,
            watched_levels: self.watched_levels.clone(),
            population_basis: self.population_basis,
        }
    }

    /// Every range check that can be done without running anything.
    pub fn validate(&self) -> Result<()> {
        let params = self.model_params();
        params.validate()?;
        self.superposition.validate(&params)?;
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        self.run_grid().validate(&params)?;
        if self.trajectory_count == 0 {
            return Err(Error::Config("trajectory_count must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Where the resolved copy of this config is written: next to the output,
    /// with a `.resolved.toml` extension.
    pub fn resolved_path(&self) -> PathBuf {
        self.output_path.with_extension("resolved.toml")
    }
}

/// Parses and validates a config; an empty string yields the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config error: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_standard_parameters() {
        let cfg = parse_config("").unwrap();
        let p = cfg.model_params();
        assert_eq!(p.t0, 2.5);
        assert_eq!(p.alpha, 4.1);
        assert_eq!(p.spring_k, 21.0);
        assert_eq!(p.mass, 1349.14);
        assert_eq!(p.lattice_a, 1.22);
        assert_eq!(cfg.n_sites, 20);
        assert_eq!(cfg.dt, 0.02);
        assert_eq!(cfg.superposition, SuperpositionSpec::GroundExcited);
    }

    #[test]
    fn odd_site_count_is_rejected() {
        let err = parse_config("n_sites = 5").unwrap_err();
        assert!(err.to_string().contains("even"), "{err}");
    }

    #[test]
    fn pair_level_at_chain_end_is_rejected() {
        let text = "n_sites = 20\n[superposition]\nkind = \"pair-ground-geometry\"\nlevel = 20\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("pair level"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let err = parse_config("n_stes = 20").unwrap_err();
        assert!(err.to_string().contains("n_stes"), "{err}");
        let err = parse_config("[params]\nt1 = 2.4").unwrap_err();
        assert!(err.to_string().contains("t1"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
            n_sites = 8
            trajectory_count = 64
            dt = 0.01
            t_final = 5.0
            record_stride = 50
            master_seed = 77
            workers = 3
            output_path = "runs/pair.csv"
            watched_levels = [5, 6]
            population_basis = "InitialGeometry"

            [superposition]
            kind = "pair-excited-geometry"
            level = 5

            [params]
            alpha = 3.9
        "#;
        let cfg = parse_config(text).unwrap();
        let serialized = cfg.to_toml_string().unwrap();
        let reparsed = parse_config(&serialized).unwrap();
        assert_eq!(cfg, reparsed);
        // defaults round-trip too
        let d = RunConfig::default();
        assert_eq!(d, parse_config(&d.to_toml_string().unwrap()).unwrap());
    }

    #[test]
    fn overrides_reach_model_params() {
        let cfg = parse_config("[params]\nt0 = 2.0\nhbar = 1.0").unwrap();
        let p = cfg.model_params();
        assert_eq!(p.t0, 2.0);
        assert_eq!(p.hbar, 1.0);
        assert_eq!(p.alpha, 4.1);
    }

    #[test]
    fn grid_mismatch_is_a_config_error() {
        let err = parse_config("dt = 0.03\nt_final = 0.1").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}
