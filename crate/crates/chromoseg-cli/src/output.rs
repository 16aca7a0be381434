//! Staged output writing: files accumulate in memory and hit disk only after
//! the whole command has succeeded, so a failing run leaves no partial
//! outputs behind.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> OutputSet {
        OutputSet { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, content: Vec<u8>) {
        self.files.push((self.dir.join(name), content));
    }

    /// Write every staged file; called once, after all computation succeeded.
    pub fn flush(self) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("cannot create output directory {}", self.dir.display()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (path, content) in self.files {
            std::fs::write(&path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Reproducibility header placed at the top of every output file.
pub fn header(subcommand: &str, seed: u64, resolved: &[(&str, String)]) -> String {
    let settings: Vec<String> =
        resolved.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "chromoseg {} | {subcommand} | seed={seed} | {}",
        env!("CARGO_PKG_VERSION"),
        settings.join(" ")
    )
}
