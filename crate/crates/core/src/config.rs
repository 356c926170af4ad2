//! Experiment configuration file.
//!
//! Every physical quantity carries its unit in the key name and is
//! converted to SI by [`ExperimentConfig::to_run_config`]. The file is
//! overlaid on the defaults key by key, so an empty file is a valid
//! configuration and a section may set only the keys it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_per_hz_to_watts, GainMode, RadioLink};
use crate::cost::{CostModel, ServerSpec};
use crate::error::{Error, Result};
use crate::profile::ModelProfile;
use crate::sim::{PenaltySpec, PinnedDevice, PopulationSpec, RunConfig};
use crate::solver::{BaselineParams, SchedulerKind};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: ProfileSection,
    pub server: ServerSection,
    pub channel: ChannelSection,
    pub devices: DevicesSection,
    pub penalty: PenaltySection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// Profile file; the bundled profile when absent. Relative paths are
    /// resolved against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub bytes_per_param: f64,
    pub local_updates: u32,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            path: None,
            bytes_per_param: 4.0,
            local_updates: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub freq_ghz: f64,
    pub flops_per_cycle: f64,
    pub cores: u32,
    pub kappa: f64,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self {
            freq_ghz: 3.0,
            flops_per_cycle: 16.0,
            cores: 32,
            kappa: 1e-26,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub bandwidth_mhz: f64,
    pub tx_power_w: f64,
    pub antenna_gain: f64,
    pub carrier_ghz: f64,
    pub pathloss_exp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub noise_psd_dbm_hz: f64,
    pub interference_psd_dbm_hz: f64,
    /// Treat `rho * mean_gain` as a power gain (true) or an amplitude.
    pub gain_is_power: bool,
    pub uplink: LinkSection,
    pub downlink: LinkSection,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            noise_psd_dbm_hz: -174.0,
            interference_psd_dbm_hz: -164.0,
            gain_is_power: true,
            uplink: LinkSection {
                bandwidth_mhz: 20.0,
                tx_power_w: 0.4,
                antenna_gain: 4.11,
                carrier_ghz: 2.0,
                pathloss_exp: 1.0,
            },
            downlink: LinkSection {
                bandwidth_mhz: 40.0,
                tx_power_w: 3.0,
                antenna_gain: 8.0,
                carrier_ghz: 2.0,
                pathloss_exp: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedSection {
    pub freq_ghz: f64,
    pub cores: u32,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DevicesSection {
    pub count: usize,
    pub flops_per_cycle: f64,
    /// Device capacitance; the server value when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub freq_ghz_range: [f64; 2],
    pub cores_range: [u32; 2],
    pub distance_m_range: [f64; 2],
    pub pinned: Vec<PinnedSection>,
}

impl Default for DevicesSection {
    fn default() -> Self {
        let pin = |f, c| PinnedSection {
            freq_ghz: f,
            cores: c,
            distance_m: 200.0,
        };
        Self {
            count: 30,
            flops_per_cycle: 8.0,
            kappa: None,
            freq_ghz_range: [0.5, 3.0],
            cores_range: [1, 8],
            distance_m_range: [100.0, 1000.0],
            pinned: vec![pin(0.5, 1), pin(1.0, 4), pin(2.0, 8), pin(4.0, 16)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySection {
    pub e_th_j: f64,
    /// Explicit V; calibrated when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    pub v_scale: f64,
}

impl Default for PenaltySection {
    fn default() -> Self {
        Self {
            e_th_j: 3000.0,
            v: None,
            v_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub episodes: u32,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub fixed_split: usize,
    pub share_floor: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        let b = BaselineParams::default();
        Self {
            episodes: 100,
            seed: 1,
            scheduler: SchedulerKind::Open,
            fixed_split: b.fixed_split,
            share_floor: b.share_floor,
        }
    }
}

/// Sets `dotted.key = value` inside a TOML tree, creating tables as needed.
/// The value is parsed as a TOML literal and falls back to a bare string.
pub fn apply_override(root: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.trim().is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let parsed = format!("x = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));

    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut table = root;
    for p in path {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {p} is not a table")))?;
    }
    table.insert(last.to_string(), parsed);
    Ok(())
}

/// Recursively overlays `top` on `base`. Tables merge; anything else,
/// arrays included, replaces.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `key=value`.
pub fn split_override(arg: &str) -> Result<(&str, &str)> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("override {arg:?} is not key=value")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut table =
            toml::Table::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut table, user);
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        Self::deserialize(toml::Value::Table(table))
            .map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a config file. Relative profile paths become relative to the
    /// file's directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)?;
        if let Some(p) = &cfg.profile.path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.profile.path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_profile(&self) -> Result<ModelProfile> {
        match &self.profile.path {
            Some(p) => ModelProfile::load(p),
            None => Ok(ModelProfile::bundled_lenet()),
        }
    }

    pub fn to_run_config(&self) -> Result<RunConfig> {
        let ch = &self.channel;
        let noise = dbm_per_hz_to_watts(ch.noise_psd_dbm_hz);
        let interference = dbm_per_hz_to_watts(ch.interference_psd_dbm_hz);
        let link = |l: &LinkSection| RadioLink {
            bandwidth_hz: l.bandwidth_mhz * 1e6,
            tx_power_w: l.tx_power_w,
            antenna_gain: l.antenna_gain,
            carrier_hz: l.carrier_ghz * 1e9,
            pathloss_exp: l.pathloss_exp,
            distance_m: 1.0,
            noise_psd_w_per_hz: noise,
            interference_psd_w_per_hz: interference,
        };
        let server = ServerSpec {
            freq_hz: self.server.freq_ghz * 1e9,
            flops_per_cycle: self.server.flops_per_cycle,
            cores: self.server.cores,
            kappa: self.server.kappa,
            downlink: link(&ch.downlink),
        };
        let d = &self.devices;
        let population = PopulationSpec {
            count: d.count,
            pinned: d
                .pinned
                .iter()
                .map(|p| PinnedDevice {
                    freq_hz: p.freq_ghz * 1e9,
                    cores: p.cores,
                    distance_m: p.distance_m,
                })
                .collect(),
            freq_hz_range: [d.freq_ghz_range[0] * 1e9, d.freq_ghz_range[1] * 1e9],
            cores_range: d.cores_range,
            distance_m_range: d.distance_m_range,
            flops_per_cycle: d.flops_per_cycle,
            kappa: d.kappa.unwrap_or(self.server.kappa),
            uplink: link(&ch.uplink),
        };
        let cfg = RunConfig {
            episodes: self.run.episodes,
            seed: self.run.seed,
            scheduler: self.run.scheduler,
            baseline: BaselineParams {
                fixed_split: self.run.fixed_split,
                share_floor: self.run.share_floor,
            },
            penalty: PenaltySpec {
                e_th: self.penalty.e_th_j,
                v: self.penalty.v,
                v_scale: self.penalty.v_scale,
            },
            population,
            server,
            cost_model: CostModel {
                local_updates: self.profile.local_updates,
                ..CostModel::with_bytes_per_param(self.profile.bytes_per_param)
            },
            gain_mode: GainMode::from_power_flag(ch.gain_is_power),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
