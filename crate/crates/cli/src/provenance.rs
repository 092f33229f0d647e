use std::fs;
use std::path::Path;

use causal_decomp::{DecompError, Result};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sha256:<hex>` of a byte string.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| DecompError::Io(format!("{}: {e}", path.display())))
}

pub fn write_output(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| DecompError::Io(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| DecompError::Io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| DecompError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
