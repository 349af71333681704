use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Provenance stamped on every output file.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

pub struct Context {
    pub meta: Metadata,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: &RunConfig, out: &Path) -> Self {
        let canonical = serde_json::to_string(cfg).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            meta: Metadata {
                tool: "sweetspot",
                version: env!("CARGO_PKG_VERSION"),
                config_sha256: hex,
                seed: cfg.seed,
            },
            out: out.to_path_buf(),
        }
    }

    /// Opens `name` in the output directory with the metadata header written
    /// as `#` comment lines.
    pub fn csv(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let mut w = BufWriter::new(File::create(self.out.join(name))?);
        writeln!(
            w,
            "# {} {} config_sha256={} seed={}",
            self.meta.tool, self.meta.version, self.meta.config_sha256, self.meta.seed
        )?;
        Ok(w)
    }

    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            metadata: &'a Metadata,
            data: &'a T,
        }
        let text = serde_json::to_string_pretty(&Doc {
            metadata: &self.meta,
            data,
        })
        .expect("outputs serialize");
        std::fs::write(self.out.join(name), text + "\n")?;
        Ok(())
    }
}
