use std::path::PathBuf;

use patchlum::table::write_csv;
use patchlum::{Device, DeviceConfig, Error, OutputMeta, Result};
use serde_json::{json, Value};

use crate::Common;

/// Loaded configuration, assembled device and output sink for one run.
pub struct Run {
    pub config: DeviceConfig,
    pub device: Device,
    out: PathBuf,
    meta: OutputMeta,
}

impl Run {
    pub fn start(common: &Common) -> Result<Self> {
        let config = match &common.config {
            Some(path) => DeviceConfig::from_path(path)?,
            None => DeviceConfig::from_bytes(b"")?,
        };
        let device = Device::from_config(&config)?;
        std::fs::create_dir_all(&common.out).map_err(|e| Error::Input(format!("{}: {e}", common.out.display())))?;
        let meta = OutputMeta {
            config_digest: config.digest.clone(),
            assumed: config.assumed_fields().iter().map(|s| s.to_string()).collect(),
        };
        Ok(Self {
            config,
            device,
            out: common.out.clone(),
            meta,
        })
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        write_csv(
            self.out.join(name),
            header,
            rows.iter().map(|r| r.as_slice()),
            &self.meta,
        )
    }

    /// Writes `summary.json` with the command's results under `results`.
    pub fn summary(&self, command: &str, results: Value) -> Result<()> {
        let doc = json!({
            "command": command,
            "config_digest": self.config.digest,
            "assumed": self.config.assumed,
            "config": {
                "cavity": self.config.cavity,
                "emitter": self.config.emitter,
                "cascade": self.config.cascade,
                "farfield": self.config.farfield,
            },
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(self.out.join("summary.json"), text)?;
        Ok(())
    }
}
