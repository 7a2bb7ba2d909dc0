//! Atomic artifact writes and field files.

use std::io::Write;
use std::path::Path;

use lingrad_core::energy::{DualField, Field};
use lingrad_core::field_io::Lgf1;
use lingrad_core::geometry::GridDomain;

use crate::error::{CliError, CliResult};

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_lgf1(path: &Path) -> CliResult<Lgf1> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Lgf1::from_bytes(&bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_field(path: &Path) -> CliResult<Field> {
    Field::from_lgf1(read_lgf1(path)?).map_err(|e| CliError::io(path, e))
}

pub fn read_dual(path: &Path, domain: &GridDomain) -> CliResult<DualField> {
    DualField::from_lgf1(domain, &read_lgf1(path)?).map_err(|e| CliError::io(path, e))
}

pub fn write_field(path: &Path, u: &Field) -> CliResult<()> {
    write_atomic(path, &u.to_lgf1().to_bytes())
}

pub fn write_dual(path: &Path, z: &DualField, domain: &GridDomain) -> CliResult<()> {
    write_atomic(path, &z.to_lgf1(domain)?.to_bytes())
}
