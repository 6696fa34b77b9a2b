//! CSV files written by the commands.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bates_core::analysis::{ConvergenceTable, EfficiencyRecord};
use bates_core::GridField;

use crate::config::Settings;
use crate::experiments::{write_slice, SliceRow};

pub const SURFACE: &str = "surface.csv";
pub const SLICE: &str = "slice.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const EFFICIENCY: &str = "efficiency.csv";

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

/// Full surface with unscaled columns at τ = T.
pub fn write_surface(dir: &Path, s: &Settings, field: &GridField) -> Result<PathBuf> {
    let (path, w) = create(dir, SURFACE)?;
    field.write_csv(w, Some((&s.params, s.params.maturity)))?;
    Ok(path)
}

pub fn write_slice_file(dir: &Path, rows: &[SliceRow]) -> Result<PathBuf> {
    let (path, w) = create(dir, SLICE)?;
    write_slice(rows, w)?;
    Ok(path)
}

pub fn write_convergence(dir: &Path, table: &ConvergenceTable) -> Result<PathBuf> {
    let (path, w) = create(dir, CONVERGENCE)?;
    table.write_csv(w)?;
    Ok(path)
}

pub fn write_efficiency(dir: &Path, records: &[EfficiencyRecord]) -> Result<PathBuf> {
    let (path, w) = create(dir, EFFICIENCY)?;
    EfficiencyRecord::write_csv(records, w)?;
    Ok(path)
}
