//! Optional TOML config file. Keys mirror the command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub base: Option<String>,
    pub ontology: Option<PathBuf>,
    #[serde(default)]
    pub rules: Vec<PathBuf>,
    pub thesaurus: Option<PathBuf>,
    pub institution: Option<String>,
    pub language: Option<String>,
    pub workers: Option<usize>,
    pub strict: Option<bool>,
}

impl FileConfig {
    /// Relative paths in the file are taken relative to the file itself.
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        cfg.ontology.as_mut().map(rebase);
        cfg.thesaurus.as_mut().map(rebase);
        cfg.rules.iter_mut().for_each(rebase);
        Ok(cfg)
    }
}
