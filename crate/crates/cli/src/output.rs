use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Files produced by one command, written together once everything has
/// been computed.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Stage every file as a temporary in `dir`, then rename them into place.
    /// A failure while staging leaves no output behind.
    pub fn commit(self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("staging {name}"))?;
            tmp.write_all(contents.as_bytes())?;
            tmp.as_file().sync_all()?;
            staged.push((name, tmp));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (name, tmp) in staged {
            let target = dir.join(name);
            tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
            written.push(target.display().to_string());
        }
        Ok(written)
    }
}
