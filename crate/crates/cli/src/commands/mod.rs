pub mod data;
pub mod debias;
pub mod diagnose;
pub mod evaluate;
pub mod fit;
pub mod interva;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use insilico::physician::default_categories;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn categories_or_default(cats: &Option<Vec<String>>) -> Vec<String> {
    match cats {
        Some(c) => c.iter().map(|s| s.trim().to_string()).collect(),
        None => default_categories(),
    }
}
