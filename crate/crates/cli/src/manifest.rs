use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config: serde_json::Value,
    pub inputs: &'a [InputDigest],
    pub outputs: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<&'a serde_json::Value>,
    pub wall_time_s: f64,
}

/// Tracks inputs and outputs of one subcommand for its manifest.
pub struct Session {
    start: Instant,
    pretty: bool,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    pub details: Option<serde_json::Value>,
}

impl Session {
    pub fn new(pretty: bool) -> Self {
        Session { start: Instant::now(), pretty, inputs: Vec::new(), outputs: Vec::new(), details: None }
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json<T: Serialize>(&self, value: &T) -> Result<String> {
        let mut s = if self.pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? };
        s.push('\n');
        Ok(s)
    }

    pub fn write_file(&mut self, path: &Path, data: &str) -> Result<()> {
        fs::write(path, data).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes the primary output and its manifest: `<out>.manifest.json`
    /// next to a file, or stderr when the data goes to stdout.
    pub fn finish<T: Serialize, C: Serialize>(mut self, subcommand: &str, config: &C, out: Option<&PathBuf>, value: &T) -> Result<()> {
        let data = self.to_json(value)?;
        match out {
            Some(p) => self.write_file(p, &data)?,
            None => std::io::stdout().write_all(data.as_bytes())?,
        }
        let manifest = RunManifest {
            tool: "symmix",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config: serde_json::to_value(config)?,
            inputs: &self.inputs,
            outputs: &self.outputs,
            details: self.details.as_ref(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        let text = self.to_json(&manifest)?;
        match out {
            Some(p) => {
                let mut name = p.as_os_str().to_owned();
                name.push(".manifest.json");
                fs::write(PathBuf::from(name), text)?;
            }
            None => std::io::stderr().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}
