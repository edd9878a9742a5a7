//! Run manifests: the effective config, input digests, tool version and
//! results, in the same `key = value` layout as configs. Nothing
//! time-dependent is recorded, so reruns reproduce the manifest exactly.

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::{read_file, sha256_hex, write_file, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    header: Vec<(String, String)>,
    config: Vec<(String, String)>,
    results: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            header: vec![
                ("manifest.command".into(), command.into()),
                ("manifest.tool_version".into(), TOOL_VERSION.into()),
            ],
            config: Vec::new(),
            results: Vec::new(),
        }
    }

    pub fn with_config(mut self, config: &ExperimentConfig) -> Self {
        self.config = config.snapshot();
        self
    }

    /// Records the SHA-256 of an input file.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        let digest = sha256_hex(&read_file(path)?);
        self.header.push((format!("manifest.input.{name}"), path.display().to_string()));
        self.header.push((format!("manifest.input.{name}.sha256"), digest));
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((format!("result.{key}"), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# offense run manifest\n");
        for (k, v) in self.header.iter().chain(&self.config).chain(&self.results) {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.render().as_bytes())
    }
}
