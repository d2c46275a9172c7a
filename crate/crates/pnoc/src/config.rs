//! Experiment configuration file. One JSON document drives a whole run so
//! results can be reproduced from the file alone; every field has a default
//! and the CLI can override the common ones.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::LossParameters;
use crate::quality::SweepGrid;
use crate::signaling::SchemeKind;
use crate::simcore::{Policy, PolicyConfig, SimConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Topology JSON; empty means the built-in eight-cluster layout.
    pub topology_path: Option<PathBuf>,
    /// Loss parameter JSON; empty means the built-in device numbers.
    pub loss_params_path: Option<PathBuf>,
    pub signaling: SchemeKind,
    pub policy: PolicySection,
    pub sim: SimConfig,
    pub sweep: SweepSection,
    /// Error budget for operating-point selection, in percent.
    pub threshold_pct: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology_path: None,
            loss_params_path: None,
            signaling: SchemeKind::Ook,
            policy: PolicySection::default(),
            sim: SimConfig::default(),
            sweep: SweepSection::default(),
            threshold_pct: 10.0,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub name: Policy,
    pub num_approx_bits: u32,
    pub reduction_fraction: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            name: Policy::LossAwareOok,
            num_approx_bits: 16,
            reduction_fraction: 0.8,
        }
    }
}

impl PolicySection {
    pub fn build(&self) -> Result<PolicyConfig> {
        PolicyConfig::new(self.name, self.num_approx_bits, self.reduction_fraction)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kernel: String,
    pub grid: SweepGrid,
    /// Sweep transmitter; must be a node in the topology.
    pub source: String,
    /// Optional external input: a PGM image for the edge kernel, otherwise
    /// a JSON array of numbers. Empty means a built-in synthetic input.
    pub input_path: Option<PathBuf>,
    pub vector_len: usize,
    pub image_size: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kernel: "identity".into(),
            grid: SweepGrid::default(),
            source: "cluster0".into(),
            input_path: None,
            vector_len: 1024,
            image_size: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InputData(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("parsing {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Loss parameters, from file when configured.
    pub fn loss_parameters(&self) -> Result<LossParameters> {
        match &self.loss_params_path {
            Some(p) => LossParameters::load(p),
            None => Ok(LossParameters::default()),
        }
    }

    /// Topology, from file when configured.
    pub fn topology(&self) -> Result<Vec<crate::photonics::LinkPath>> {
        match &self.topology_path {
            Some(p) => crate::photonics::load_topology(p),
            None => Ok(crate::photonics::default_clos_topology()),
        }
    }
}
