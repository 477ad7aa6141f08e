//! Experiment configuration, read from a single TOML file. Every field has
//! a default; `config/default.toml` lists them all with comments.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sausage_core::clt::{CltConfig, SeedSet};
use sausage_core::regeneration::RegenerationParams;
use sausage_core::replica::{ProcessSpec, ReplicaSpec};
use sausage_core::topology::RadiusWindow;
use sausage_core::weight::{Piece, TestWeight};
use sausage_core::Point;

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub drift: [f64; 2],
    pub horizon: f64,
    pub dt: f64,
    pub max_spacing: f64,
    /// Raster cell for the sausage area at `r1`.
    pub cell: f64,
    pub window: WindowConfig,
    pub weights: Vec<WeightConfig>,
    pub regeneration: RegenerationConfig,
    pub replicas: ReplicaCounts,
    pub seeds: Seeds,
    pub clt: CltSection,
    pub surrogate: SurrogateConfig,
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub r0: f64,
    pub r1: f64,
}

/// A built-in shape (`kind`, defaulting to `name`) or explicit cubic pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<Piece>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegenerationConfig {
    pub level_spacing: f64,
    pub backtrack: f64,
    pub burn_in: f64,
    /// Defaults to `20 level_spacing / |drift|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_confirm: Option<f64>,
    pub osc_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicaCounts {
    pub calibration: usize,
    pub evaluation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub calibration: u64,
    pub evaluation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltSection {
    pub renewal_times: Vec<f64>,
    pub drop_initial: usize,
    pub projections: usize,
    pub projection_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub rho: f64,
    pub eta_mean: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            drift: [1.0, 0.0],
            horizon: 200.0,
            dt: 0.005,
            max_spacing: 0.1,
            cell: 0.01,
            window: WindowConfig { r0: 0.2, r1: 0.5 },
            weights: ["indicator", "hat", "ramp"].map(|n| WeightConfig { name: n.into(), kind: None, pieces: None }).to_vec(),
            regeneration: RegenerationConfig::default(),
            replicas: ReplicaCounts::default(),
            seeds: Seeds::default(),
            clt: CltSection::default(),
            surrogate: SurrogateConfig::default(),
            output: "out".into(),
        }
    }
}

impl Default for RegenerationConfig {
    fn default() -> Self {
        Self { level_spacing: 2.0, backtrack: 0.5, burn_in: 0.0, t_confirm: None, osc_grid: 16 }
    }
}

impl Default for ReplicaCounts {
    fn default() -> Self {
        Self { calibration: 2000, evaluation: 2000 }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Self { calibration: 1, evaluation: 2 }
    }
}

impl Default for CltSection {
    fn default() -> Self {
        Self { renewal_times: vec![25.0, 50.0, 100.0], drop_initial: 0, projections: 5, projection_seed: 7, functional_n: None }
    }
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { rho: 0.5, eta_mean: 1.0 }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, LabError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check(ok: bool, msg: &str) -> Result<(), LabError> {
    if ok { Ok(()) } else { Err(LabError::Config(msg.into())) }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        check(self.drift.iter().all(|v| v.is_finite()) && self.drift != [0.0, 0.0], "drift must be finite and nonzero")?;
        check(self.horizon > 0.0 && self.horizon.is_finite(), "horizon must be positive")?;
        check(self.dt > 0.0 && self.dt <= self.horizon, "dt must lie in (0, horizon]")?;
        check(self.max_spacing > 0.0 && self.max_spacing.is_finite(), "max_spacing must be positive")?;
        check(self.cell > 0.0 && self.cell <= self.window.r1 / 16.0, "cell must lie in (0, r1/16]")?;
        check(self.max_spacing <= 2.0 * self.window.r0, "max_spacing must not exceed 2 r0")?;
        check(!self.weights.is_empty(), "at least one weight is required")?;
        for w in &self.weights {
            check(
                !w.name.is_empty() && w.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
                "weight names must be nonempty [A-Za-z0-9_]",
            )?;
        }
        let mut names: Vec<&str> = self.weights.iter().map(|w| w.name.as_str()).collect();
        names.sort_unstable();
        check(names.windows(2).all(|p| p[0] != p[1]), "weight names must be distinct")?;
        check(self.replicas.evaluation > 0, "evaluation replica count must be positive")?;
        check(self.seeds.calibration != self.seeds.evaluation, "calibration and evaluation seeds must differ")?;
        check(self.surrogate.rho.is_finite() && self.surrogate.eta_mean > 0.0 && self.surrogate.eta_mean.is_finite(), "surrogate needs finite rho and positive eta_mean")?;
        check(self.clt.renewal_times.iter().all(|&s| s > 0.0 && s <= self.horizon), "renewal times must lie in (0, horizon]")?;
        self.weight_list()?;
        self.regeneration_params()?;
        Ok(())
    }

    pub fn window(&self) -> Result<RadiusWindow, LabError> {
        Ok(RadiusWindow::new(self.window.r0, self.window.r1)?)
    }

    pub fn weight_list(&self) -> Result<Vec<TestWeight>, LabError> {
        let window = self.window()?;
        self.weights
            .iter()
            .map(|w| {
                Ok(match (&w.kind, &w.pieces) {
                    (Some(_), Some(_)) => return Err(LabError::Config(format!("weight {}: give kind or pieces, not both", w.name))),
                    (_, Some(p)) => TestWeight::new(w.name.clone(), window, p.clone())?,
                    (k, None) => TestWeight::builtin(k.as_deref().unwrap_or(&w.name), window)?.with_name(w.name.clone()),
                })
            })
            .collect()
    }

    pub fn weight_names(&self) -> Vec<String> {
        self.weights.iter().map(|w| w.name.clone()).collect()
    }

    pub fn mu(&self) -> Point {
        Point::new(self.drift[0], self.drift[1])
    }

    pub fn regeneration_params(&self) -> Result<RegenerationParams, LabError> {
        let r = &self.regeneration;
        let speed = self.mu().norm();
        let t_confirm = r.t_confirm.unwrap_or(20.0 * r.level_spacing / speed);
        Ok(RegenerationParams::new(r.level_spacing, r.backtrack, r.burn_in, t_confirm)?)
    }

    pub fn process(&self, surrogate: bool) -> Result<ProcessSpec, LabError> {
        Ok(if surrogate {
            ProcessSpec::Surrogate { rho: self.surrogate.rho, eta_mean: self.surrogate.eta_mean }
        } else {
            ProcessSpec::Sausage {
                mu: self.mu(),
                dt: self.dt,
                max_spacing: self.max_spacing,
                regeneration: self.regeneration_params()?,
                osc_grid: self.regeneration.osc_grid,
            }
        })
    }

    pub fn replica_spec(&self, surrogate: bool) -> Result<ReplicaSpec, LabError> {
        Ok(ReplicaSpec {
            process: self.process(surrogate)?,
            weights: self.weight_list()?,
            horizon: self.horizon,
            observe_times: self.clt.renewal_times.clone(),
        })
    }

    pub fn clt_config(&self, surrogate: bool) -> Result<CltConfig, LabError> {
        Ok(CltConfig {
            spec: self.replica_spec(surrogate)?,
            calibration: SeedSet { master: self.seeds.calibration, first: 0, count: self.replicas.calibration },
            evaluation: SeedSet { master: self.seeds.evaluation, first: 0, count: self.replicas.evaluation },
            drop_initial: self.clt.drop_initial,
            projections: self.clt.projections,
            projection_seed: self.clt.projection_seed,
            functional_n: self.clt.functional_n,
        })
    }

    /// Replaces both master seeds, keeping them distinct.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = Seeds { calibration: seed, evaluation: seed.wrapping_add(1) };
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}
