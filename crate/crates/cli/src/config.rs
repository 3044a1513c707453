use std::path::{Path, PathBuf};

use ddqmc::engine::NwMode;
use ddqmc::lattice::build_lattice;
use ddqmc::{EngineParams, ImportanceScheme, ModelParams, Observable, XyzModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initiator_limits: Option<Vec<f64>>,
    /// Fit only this many of the smallest initiator limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolate_lowest: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "yes")]
    pub periodic: bool,
    #[serde(default)]
    pub dedupe_bonds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "Jx", alias = "jx")]
    pub jx: f64,
    #[serde(rename = "Jy", alias = "jy")]
    pub jy: f64,
    #[serde(rename = "Jz", alias = "jz")]
    pub jz: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub dt: f64,
    pub target_population: u64,
    pub delta: f64,
    pub shift_update_interval: u32,
    #[serde(rename = "S_init", alias = "initial_shift")]
    pub s_init: f64,
    #[serde(rename = "I_limit", alias = "initiator_limit")]
    pub i_limit: f64,
    pub all_initiators: bool,
    pub importance_p: f64,
    pub equilibration_steps: u64,
    pub measurement_steps: u64,
    pub seed: u64,
    pub n0: u64,
    pub hard_cap: u64,
    pub nw_mode: NwMode,
    pub shards: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "Jy", alias = "jy")]
    pub jy: Vec<f64>,
}

/// Config spelling of an [`EngineParams`] field.
fn engine_key(name: &str) -> &str {
    match name {
        "initial_shift" => "S_init",
        "initiator_limit" => "I_limit",
        "initial_walkers" => "n0",
        "importance" => "importance_p",
        other => other,
    }
}

fn default_observables() -> Vec<Observable> {
    vec!["mz".parse().expect("builtin observable")]
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig::from_params(&EngineParams::default())
    }
}

impl EngineConfig {
    pub fn from_params(p: &EngineParams<f64>) -> Self {
        EngineConfig {
            dt: p.dt,
            target_population: p.target_population,
            delta: p.delta,
            shift_update_interval: p.shift_update_interval,
            s_init: p.initial_shift,
            i_limit: p.initiator_limit,
            all_initiators: p.all_initiators,
            importance_p: p.importance.p,
            equilibration_steps: p.equilibration_steps,
            measurement_steps: p.measurement_steps,
            seed: p.seed,
            n0: p.initial_walkers,
            hard_cap: p.hard_cap,
            nw_mode: p.nw_mode,
            shards: p.shards,
        }
    }

    pub fn to_params(&self) -> EngineParams<f64> {
        EngineParams {
            dt: self.dt,
            target_population: self.target_population,
            delta: self.delta,
            shift_update_interval: self.shift_update_interval,
            initial_shift: self.s_init,
            initiator_limit: self.i_limit,
            all_initiators: self.all_initiators,
            importance: ImportanceScheme::new(self.importance_p),
            equilibration_steps: self.equilibration_steps,
            measurement_steps: self.measurement_steps,
            seed: self.seed,
            initial_walkers: self.n0,
            hard_cap: self.hard_cap,
            nw_mode: self.nw_mode,
            shards: self.shards,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        model
            .params
            .validate()
            .map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.engine.to_params().validate().map_err(|e| match e {
            ddqmc::Error::InvalidParameter { name, reason } => {
                CliError::Config(format!("engine.{}: {reason}", engine_key(name)))
            }
            other => CliError::Config(format!("engine: {other}")),
        })?;
        let n = model.n_sites();
        for (i, o) in self.observables.iter().enumerate() {
            if !o.is_valid_for(n) {
                return Err(CliError::Config(format!("observables[{i}]: {o} not defined on {n} sites")));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<XyzModel<f64>, CliError> {
        let l = &self.lattice;
        let mut lattice =
            build_lattice(l.rows, l.cols, l.periodic).map_err(|e| CliError::Config(format!("lattice: {e}")))?;
        if l.dedupe_bonds {
            lattice = lattice.dedupe_bonds();
        }
        let m = &self.model;
        let params = ModelParams {
            jx: m.jx,
            jy: m.jy,
            jz: m.jz,
            gamma: m.gamma,
            h: m.h,
            theta: m.theta,
        };
        Ok(XyzModel::new(lattice, params))
    }

    pub fn params(&self) -> EngineParams<f64> {
        self.engine.to_params()
    }
}
