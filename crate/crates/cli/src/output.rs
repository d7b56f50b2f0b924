//! Output-directory bookkeeping and JSON/text writers.

use std::path::{Path, PathBuf};

use uavsense::Result;

/// Tracks the files written into one output directory so the manifest can
/// list them.
pub struct OutputSet {
    pub dir: PathBuf,
    produced: Vec<String>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            produced: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.produced.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn note(&mut self, name: &str) {
        self.produced.push(name.to_string());
    }

    pub fn produced(&self) -> &[String] {
        &self.produced
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
