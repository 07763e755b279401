//! Atomic result files.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_atomic(path, &bytes)
}

/// Collects the paths a command wrote, in order.
#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    pub fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> anyhow::Result<()> {
        write_json(&path, value)?;
        self.0.push(path);
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, path: PathBuf, rows: &[T]) -> anyhow::Result<()> {
        write_csv(&path, rows)?;
        self.0.push(path);
        Ok(())
    }

    pub fn bytes(&mut self, path: PathBuf, bytes: &[u8]) -> anyhow::Result<()> {
        write_atomic(&path, bytes)?;
        self.0.push(path);
        Ok(())
    }
}
