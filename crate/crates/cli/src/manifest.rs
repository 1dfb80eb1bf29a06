//! Run manifests: the resolved configuration of a run together with
//! checksums of everything it read and wrote.
//!
//! A manifest carries no timestamps or host details, so re-running the same
//! invocation rewrites it byte-for-byte. Passing a manifest back through
//! `--config` replays its `config` object over the command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(subcommand: &str, seed: Option<u64>, config: &T) -> Result<Self> {
        Ok(Self {
            tool: format!("cad {}", env!("CARGO_PKG_VERSION")),
            subcommand: subcommand.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path_key(path), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path_key(path), sha256_file(path)?);
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config `{}`", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config `{}`", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing `{}`", path.display()))
    }
}

fn path_key(path: &Path) -> String {
    path.to_string_lossy().replace('\\', "/")
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading `{}`", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Manifest written next to a single output file: `db.csv` → `db.manifest.json`.
pub fn sibling_manifest(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.manifest.json"))
}

/// Applies the `config` object of the manifest at `path` over `args`.
///
/// Keys are applied one at a time so an unknown key or a badly typed value is
/// reported by name.
pub fn apply_config<T: Serialize + DeserializeOwned>(
    args: T,
    path: &Path,
    subcommand: &str,
) -> Result<T> {
    let manifest = RunManifest::load(path)?;
    if manifest.subcommand != subcommand {
        bail!(
            "config `{}`: key `subcommand` is `{}`, expected `{subcommand}`",
            path.display(),
            manifest.subcommand
        );
    }
    let Value::Object(overrides) = manifest.config else {
        bail!(
            "config `{}`: key `config` must be an object",
            path.display()
        );
    };
    let Value::Object(mut merged) = serde_json::to_value(&args)? else {
        bail!("arguments did not serialize to an object");
    };
    for (key, value) in overrides {
        if !merged.contains_key(&key) {
            bail!("config `{}`: unknown key `{key}`", path.display());
        }
        merged.insert(key.clone(), value);
        serde_json::from_value::<T>(Value::Object(merged.clone())).with_context(|| {
            format!("config `{}`: invalid value for key `{key}`", path.display())
        })?;
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}
