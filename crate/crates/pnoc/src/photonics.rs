//! Optical loss bookkeeping: device loss parameters, per-link path geometry,
//! and precomputed per-source loss tables.
//!
//! Losses compose additively in dB along a path: waveguide propagation per
//! cm, a fixed hit per 90-degree bend, a through hit per microring resonator
//! passed without dropping, one drop hit at the destination ring, plus any
//! extra insertion loss. Microring tuning power is electrical, not optical,
//! but lives here because it is a property of the same path records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device and waveguide loss figures. Defaults are for a 5 GHz
/// wavelength-routed crossbar built from microring resonators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossParameters {
    pub detector_sensitivity_dbm: f64,
    pub mr_through_loss_db: f64,
    pub mr_drop_loss_db: f64,
    pub wg_propagation_loss_db_per_cm: f64,
    pub wg_bend_loss_db_per_90deg: f64,
    pub thermo_optic_tuning_uw_per_nm: f64,
    pub extra_insertion_loss_db: f64,
}

impl Default for LossParameters {
    fn default() -> Self {
        LossParameters {
            detector_sensitivity_dbm: -23.4,
            mr_through_loss_db: 0.02,
            mr_drop_loss_db: 0.7,
            wg_propagation_loss_db_per_cm: 0.25,
            wg_bend_loss_db_per_90deg: 0.01,
            thermo_optic_tuning_uw_per_nm: 240.0,
            extra_insertion_loss_db: 0.0,
        }
    }
}

impl LossParameters {
    /// Reads a flat key-value JSON file; missing keys take the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("loss parameters serialize");
        std::fs::write(path, text + "\n")
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Static geometry of one source-to-destination path on a waveguide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPath {
    pub source: String,
    pub dest: String,
    pub length_cm: f64,
    pub bends: u32,
    pub through_mrs: u32,
    pub tuned_mrs: u32,
    pub drift_nm: f64,
}

/// Total optical loss along `path` in dB.
pub fn path_loss(path: &LinkPath, params: &LossParameters) -> f64 {
    params.wg_propagation_loss_db_per_cm * path.length_cm
        + params.wg_bend_loss_db_per_90deg * f64::from(path.bends)
        + params.mr_through_loss_db * f64::from(path.through_mrs)
        + params.mr_drop_loss_db
        + params.extra_insertion_loss_db
}

/// Electrical power (mW) spent holding this path's rings on their resonance
/// wavelengths against thermal drift.
pub fn tuning_power_mw(path: &LinkPath, params: &LossParameters) -> f64 {
    f64::from(path.tuned_mrs) * path.drift_nm * params.thermo_optic_tuning_uw_per_nm / 1000.0
}

/// Destination losses seen from one source, precomputed offline so the
/// per-packet decision is a table lookup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTable {
    pub source: String,
    pub loss_db: BTreeMap<String, f64>,
}

impl LossTable {
    pub fn loss_to(&self, dest: &str) -> Result<f64> {
        self.loss_db
            .get(dest)
            .copied()
            .ok_or_else(|| Error::UnknownDestination {
                src: self.source.clone(),
                dst: dest.to_string(),
            })
    }

    /// Largest destination loss; the value full laser power is sized against.
    /// None for a source with no destinations.
    pub fn worst_case_loss_db(&self) -> Option<f64> {
        self.loss_db
            .values()
            .copied()
            .fold(None, |acc, l| match acc {
                None => Some(l),
                Some(a) => Some(a.max(l)),
            })
    }
}

/// Builds the loss table for `source` from the topology. Errors if the same
/// destination appears twice for one source.
pub fn build_loss_table(
    topology: &[LinkPath],
    params: &LossParameters,
    source: &str,
) -> Result<LossTable> {
    let mut loss_db = BTreeMap::new();
    for path in topology.iter().filter(|p| p.source == source) {
        let loss = path_loss(path, params);
        if loss_db.insert(path.dest.clone(), loss).is_some() {
            return Err(Error::DuplicatePath {
                src: source.to_string(),
                dst: path.dest.clone(),
            });
        }
    }
    Ok(LossTable {
        source: source.to_string(),
        loss_db,
    })
}

/// Loss tables for every source present in the topology.
pub fn build_all_loss_tables(
    topology: &[LinkPath],
    params: &LossParameters,
) -> Result<BTreeMap<String, LossTable>> {
    let mut tables = BTreeMap::new();
    for path in topology {
        if !tables.contains_key(&path.source) {
            let table = build_loss_table(topology, params, &path.source)?;
            tables.insert(path.source.clone(), table);
        }
    }
    Ok(tables)
}

/// Looks up the full path record for (source, dest).
pub fn find_path<'a>(topology: &'a [LinkPath], source: &str, dest: &str) -> Result<&'a LinkPath> {
    topology
        .iter()
        .find(|p| p.source == source && p.dest == dest)
        .ok_or_else(|| Error::UnknownDestination {
            src: source.to_string(),
            dst: dest.to_string(),
        })
}

/// Reads a topology descriptor: a JSON array of path records.
pub fn load_topology(path: &Path) -> Result<Vec<LinkPath>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn save_topology(topology: &[LinkPath], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(topology).expect("topology serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub const DEFAULT_CLUSTERS: usize = 8;

/// Default eight-cluster crossbar descriptor with single-writer multi-reader
/// waveguides between clusters laid out in a row.
///
/// The geometry is a placeholder, not a layout extraction: 0.5 cm and two
/// bends per hop, one 64-ring reader bank passed through per intermediate
/// cluster, and 128 tuned rings (modulator plus detector bank) per path
/// holding against 1 nm of drift. It exists to give destinations a realistic
/// loss spread (about 0.8 to 9.4 dB with default losses) so near and far
/// receivers genuinely differ.
pub fn default_clos_topology() -> Vec<LinkPath> {
    let mut paths = Vec::new();
    for i in 0..DEFAULT_CLUSTERS {
        for j in 0..DEFAULT_CLUSTERS {
            if i == j {
                continue;
            }
            let hops = (i as i32 - j as i32).unsigned_abs();
            paths.push(LinkPath {
                source: cluster_name(i),
                dest: cluster_name(j),
                length_cm: 0.5 * f64::from(hops),
                bends: 2 * hops,
                through_mrs: 64 * (hops - 1),
                tuned_mrs: 128,
                drift_nm: 1.0,
            });
        }
    }
    paths
}

pub fn cluster_name(index: usize) -> String {
    format!("cluster{index}")
}

/// All node names appearing in the topology, sources and destinations alike.
pub fn node_names(topology: &[LinkPath]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for p in topology {
        for n in [&p.source, &p.dest] {
            if !names.iter().any(|x| x == n) {
                names.push(n.clone());
            }
        }
    }
    names
}
