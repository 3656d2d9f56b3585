//! Deterministic report files: a `#`-prefixed header block carrying the
//! resolved-config hash, seed and library version, then the data body.
//! Files are written atomically (temp file + rename) and contain no
//! timestamps, so identical inputs give byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// FNV-1a 64-bit hash of the canonical config text.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn header(config_hash_value: u64, seed: u64) -> String {
    format!(
        "# helmix {}\n# config_hash = {:016x}\n# seed = {}\n",
        helmix::VERSION, config_hash_value, seed
    )
}

/// Writes `header + body` to `dir/name` through a temporary file.
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Formats a float with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
