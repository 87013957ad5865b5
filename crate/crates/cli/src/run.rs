use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    /// Which argument supplied the file.
    pub role: String,
    /// File name without its directory.
    pub name: String,
    pub sha256: String,
}

/// Fields that change from run to run; everything else in a manifest is a
/// function of the inputs and parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_utc: String,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timing: Timing,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: &'a T,
}

/// One command invocation: its manifest and its output directory.
pub struct Run {
    manifest: RunManifest,
    started: Instant,
    out: PathBuf,
}

impl Run {
    pub fn new(command: &str, out: &Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            manifest: RunManifest {
                command: command.to_string(),
                parameters: BTreeMap::new(),
                inputs: Vec::new(),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                timing: Timing {
                    started_utc: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                    wall_time_ms: 0,
                },
            },
            started: Instant::now(),
            out: out.to_path_buf(),
        })
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("parameter serializes");
        self.manifest.parameters.insert(key.to_string(), v);
        self
    }

    pub fn seed(&mut self, seed: Option<u64>) -> &mut Self {
        self.manifest.seed = seed;
        self
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.manifest.inputs.push(InputDigest {
            role: role.to_string(),
            name,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(self)
    }

    fn snapshot(&self) -> RunManifest {
        let mut m = self.manifest.clone();
        m.timing.wall_time_ms = self.started.elapsed().as_millis() as u64;
        m
    }

    /// Writes `name` in the output directory through a temporary file that
    /// is renamed into place once complete.
    pub fn write(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let target = self.out.join(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.out)
            .with_context(|| format!("creating temporary file in {}", self.out.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush()?;
        }
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("writing {}", target.display()))?;
        Ok(())
    }

    /// A JSON report with the manifest embedded under `manifest`.
    pub fn write_report<T: Serialize>(&self, name: &str, body: &T) -> Result<()> {
        let manifest = self.snapshot();
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &Report { manifest: &manifest, body })?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn finish(self) -> Result<()> {
        let manifest = self.snapshot();
        self.write("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

pub fn source(path: &Path) -> String {
    path.display().to_string()
}
