use std::path::Path;

use anyhow::{bail, Context, Result};
use backscatter_core::harness::{ConstellationSpec, LinkSpec, RangeSearch, SweepAxis, XtechSetup};
use backscatter_core::impedance::MatchingSearch;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModspaceConfig {
    pub grid_step: f64,
    pub boundary_samples: usize,
    pub optimize: bool,
    pub search: MatchingSearch,
}

impl Default for ModspaceConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            boundary_samples: backscatter_core::impedance::DEFAULT_BOUNDARY_SAMPLES,
            optimize: false,
            search: MatchingSearch::default(),
        }
    }
}

/// Everything a run can be configured with. The link fields sit at the top
/// level; the other sections are only read by their own subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub link: LinkSpec,
    pub sweep: Option<SweepConfig>,
    pub range: RangeSearch,
    pub constellation: ConstellationSpec,
    pub xtech: XtechSetup,
    pub modspace: ModspaceConfig,
    /// Payload for `synth`, hex, most significant bit first.
    pub bits: Option<String>,
}

/// Loaded configuration together with the canonical JSON it was built from.
pub struct Loaded {
    pub config: RunConfig,
    pub digest: String,
}

pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Loaded> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    for (key, v) in overrides {
        set_path(&mut value, key, v.clone())?;
    }
    let config: RunConfig = serde_json::from_value(value).context("invalid configuration")?;
    // hash the fully resolved configuration so defaults are covered too
    let canonical = serde_json::to_vec(&serde_json::to_value(&config)?)?;
    let digest = Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, digest })
}

/// Sets `a.b.c` inside `root`, creating intermediate objects.
pub fn set_path(root: &mut Value, dotted: &str, v: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("empty segment in config key {dotted:?}");
        }
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Map::new());
            } else {
                bail!("config key {dotted:?} descends into a non-object");
            }
        }
        let obj = cur.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Parses `key=value`; the value is JSON when it parses as JSON, otherwise a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let Some((k, v)) = s.split_once('=') else {
        bail!("expected key=value, got {s:?}");
    };
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

pub fn parse_hex_bits(hex: &str) -> Result<Vec<u8>> {
    let hex = hex.trim().trim_start_matches("0x");
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let Some(d) = c.to_digit(16) else {
            bail!("invalid hex digit {c:?} in bit payload");
        };
        bits.extend((0..4).rev().map(|i| ((d >> i) & 1) as u8));
    }
    Ok(bits)
}
