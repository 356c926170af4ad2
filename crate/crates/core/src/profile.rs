//! Layered model cost profile.
//!
//! A profile lists, per layer of a chain-structured model, the training
//! FLOPs for one batch, the parameter count, and the output activation and
//! activation-gradient sizes. Split point `s` places layers `1..=s` on the
//! device and the remainder on the edge server, so every per-split quantity
//! is either a prefix sum or a lookup at layer `s`.
//!
//! Profile files are TOML:
//!
//! ```toml
//! schema = "aslsim-profile/1"
//! name = "tiny"            # optional
//! batch_size = 16          # optional, informational
//! total_flops = 60.0       # optional, checked against the layer sum
//!
//! [[layer]]
//! index = 1
//! flops = 10.0
//! params = 5
//! activation_size = 100
//! gradient_size = 100      # optional, defaults to activation_size
//! ```

use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROFILE_SCHEMA: &str = "aslsim-profile/1";

const BUNDLED_LENET: &str = include_str!("../profiles/lenet12.toml");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerEntry {
    pub index: usize,
    pub kind: Option<String>,
    pub description: Option<String>,
    pub flops: f64,
    pub params: u64,
    pub activation_size: u64,
    pub gradient_size: u64,
}

impl LayerEntry {
    pub fn new(index: usize, flops: f64, params: u64, activation_size: u64) -> Self {
        Self {
            index,
            kind: None,
            description: None,
            flops,
            params,
            activation_size,
            gradient_size: activation_size,
        }
    }
}

/// Validated model profile. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    name: String,
    batch_size: Option<u32>,
    layers: Vec<LayerEntry>,
    /// `prefix_flops[s]` = FLOPs of layers 1..=s, with `prefix_flops[0] = 0`.
    prefix_flops: Vec<f64>,
    prefix_params: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    schema: String,
    name: Option<String>,
    batch_size: Option<u32>,
    total_flops: Option<f64>,
    #[serde(rename = "layer", default)]
    layers: Vec<RawLayer>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    index: i64,
    kind: Option<String>,
    description: Option<String>,
    flops: f64,
    params: i64,
    activation_size: i64,
    gradient_size: Option<i64>,
}

fn non_negative(index: usize, field: &str, value: i64) -> Result<u64> {
    u64::try_from(value).map_err(|_| Error::InvalidLayer {
        index,
        reason: format!("{field} is negative ({value})"),
    })
}

impl ModelProfile {
    /// Builds a profile from layers given in any order. Indices must form
    /// exactly `1..=S`.
    pub fn from_layers(name: impl Into<String>, mut layers: Vec<LayerEntry>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidProfile("profile has no layers".into()));
        }
        layers.sort_by_key(|l| l.index);
        for (pos, layer) in layers.iter().enumerate() {
            let expected = pos + 1;
            if layer.index == 0 {
                return Err(Error::InvalidLayer {
                    index: 0,
                    reason: "layer indices are 1-based".into(),
                });
            }
            if layer.index < expected {
                return Err(Error::InvalidLayer {
                    index: layer.index,
                    reason: "duplicate layer index".into(),
                });
            }
            if layer.index > expected {
                return Err(Error::InvalidLayer {
                    index: layer.index,
                    reason: format!("non-contiguous layer indices (expected {expected})"),
                });
            }
            if !layer.flops.is_finite() || layer.flops < 0.0 {
                return Err(Error::InvalidLayer {
                    index: layer.index,
                    reason: format!("flops must be finite and non-negative, got {}", layer.flops),
                });
            }
        }

        let mut prefix_flops = Vec::with_capacity(layers.len() + 1);
        let mut prefix_params = Vec::with_capacity(layers.len() + 1);
        prefix_flops.push(0.0);
        prefix_params.push(0u64);
        for layer in &layers {
            prefix_flops.push(prefix_flops.last().unwrap() + layer.flops);
            prefix_params.push(prefix_params.last().unwrap() + layer.params);
        }

        Ok(Self {
            name: name.into(),
            batch_size: None,
            layers,
            prefix_flops,
            prefix_params,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let raw: RawProfile =
            toml::from_str(text).map_err(|e| Error::ProfileParse(e.message().to_string()))?;
        if raw.schema != PROFILE_SCHEMA {
            return Err(Error::ProfileParse(format!(
                "unsupported schema {:?}, expected {PROFILE_SCHEMA:?}",
                raw.schema
            )));
        }

        let mut layers = Vec::with_capacity(raw.layers.len());
        for l in raw.layers {
            let index = usize::try_from(l.index).map_err(|_| Error::InvalidLayer {
                index: 0,
                reason: format!("layer index {} is negative", l.index),
            })?;
            let activation_size = non_negative(index, "activation_size", l.activation_size)?;
            layers.push(LayerEntry {
                index,
                kind: l.kind,
                description: l.description,
                flops: l.flops,
                params: non_negative(index, "params", l.params)?,
                activation_size,
                gradient_size: match l.gradient_size {
                    Some(g) => non_negative(index, "gradient_size", g)?,
                    None => activation_size,
                },
            });
        }

        let mut profile = Self::from_layers(raw.name.unwrap_or_else(|| "unnamed".into()), layers)?;
        profile.batch_size = raw.batch_size;

        if let Some(declared) = raw.total_flops {
            let sum = profile.total_flops();
            let scale = declared.abs().max(sum.abs()).max(f64::MIN_POSITIVE);
            if !declared.is_finite() || (declared - sum).abs() / scale > 1e-9 {
                return Err(Error::InvalidProfile(format!(
                    "declared total_flops {declared} does not match layer sum {sum}"
                )));
            }
        }
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// The bundled 12-layer LeNet-style profile (batch 16, 28x28 inputs).
    pub fn bundled_lenet() -> Self {
        Self::parse_str(BUNDLED_LENET).expect("bundled profile is valid")
    }

    pub fn bundled_lenet_source() -> &'static str {
        BUNDLED_LENET
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn batch_size(&self) -> Option<u32> {
        self.batch_size
    }

    pub fn layers(&self) -> &[LayerEntry] {
        &self.layers
    }

    /// Number of split points S.
    pub fn num_splits(&self) -> usize {
        self.layers.len()
    }

    pub fn split_points(&self) -> RangeInclusive<usize> {
        1..=self.layers.len()
    }

    pub fn contains_split(&self, s: usize) -> bool {
        (1..=self.layers.len()).contains(&s)
    }

    fn check(&self, s: usize) -> Result<()> {
        if self.contains_split(s) {
            Ok(())
        } else {
            Err(Error::SplitOutOfRange {
                split: s,
                max: self.layers.len(),
            })
        }
    }

    /// Total training workload of the model (η).
    pub fn total_flops(&self) -> f64 {
        *self.prefix_flops.last().unwrap()
    }

    /// Device-side workload η_D(s).
    pub fn device_flops(&self, s: usize) -> Result<f64> {
        self.check(s)?;
        Ok(self.prefix_flops[s])
    }

    /// Server-side workload η − η_D(s); exactly zero at s = S.
    pub fn server_flops(&self, s: usize) -> Result<f64> {
        Ok(self.total_flops() - self.device_flops(s)?)
    }

    /// Device-side parameter count ξ(s).
    pub fn device_params(&self, s: usize) -> Result<u64> {
        self.check(s)?;
        Ok(self.prefix_params[s])
    }

    /// Smashed-data size β(s), the activation output of layer s.
    pub fn smashed_size(&self, s: usize) -> Result<u64> {
        self.check(s)?;
        Ok(self.layers[s - 1].activation_size)
    }

    /// Smashed-data gradient size γ(s).
    pub fn gradient_size(&self, s: usize) -> Result<u64> {
        self.check(s)?;
        Ok(self.layers[s - 1].gradient_size)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            schema: &'static str,
            name: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            batch_size: Option<u32>,
            total_flops: f64,
            layer: &'a [LayerEntry],
        }
        toml::to_string(&Out {
            schema: PROFILE_SCHEMA,
            name: &self.name,
            batch_size: self.batch_size,
            total_flops: self.total_flops(),
            layer: &self.layers,
        })
        .expect("profile serializes")
    }
}
