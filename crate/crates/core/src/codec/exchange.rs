//! Directory-based block exchange, the seam for plugging in an external
//! (e.g. learned) codec.
//!
//! A block directory holds `manifest.json` and one raw little-endian `f32`
//! file per block: `structure.bin` and `tex_{row}_{col}.bin`. Missing blocks
//! of a reception are simply absent from the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BlockSet, ReceptionState, GRID, TEXTURE_BLOCKS};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const ENDIANNESS: &str = "little";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub r_s: usize,
    pub r_t: usize,
    pub grid: usize,
    pub endianness: String,
    pub blocks: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
}

fn write_block(dir: &Path, file: &str, samples: &[f32]) -> Result<ManifestEntry> {
    let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join(file), &bytes)?;
    Ok(ManifestEntry {
        file: file.to_string(),
        bytes: bytes.len(),
        row: None,
        col: None,
    })
}

pub fn export_reception(rx: &ReceptionState, r_s: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut blocks = Vec::new();
    if let Some(s) = &rx.structure {
        blocks.push(write_block(dir, "structure.bin", s)?);
    }
    for (cell, t) in rx.textures.iter().enumerate() {
        if let Some(t) = t {
            let (row, col) = (cell / GRID, cell % GRID);
            let mut entry = write_block(dir, &format!("tex_{row}_{col}.bin"), t)?;
            entry.row = Some(row);
            entry.col = Some(col);
            blocks.push(entry);
        }
    }
    let manifest = Manifest {
        r_s,
        r_t: rx.texture_len,
        grid: GRID,
        endianness: ENDIANNESS.to_string(),
        blocks,
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn export_blocks(blocks: &BlockSet, dir: &Path) -> Result<()> {
    export_reception(
        &blocks.clone().into_reception(),
        blocks.structure.len(),
        dir,
    )
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Reads a block directory (or its manifest path) into a reception state.
pub fn import_reception(path: &Path) -> Result<(ReceptionState, Manifest)> {
    let manifest_file = manifest_path(path);
    let dir = manifest_file.parent().unwrap_or(Path::new("."));
    let manifest: Manifest = serde_json::from_slice(&fs::read(&manifest_file)?)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_file.display())))?;
    if manifest.grid != GRID {
        return Err(Error::Manifest(format!(
            "grid {} unsupported, expected {GRID}",
            manifest.grid
        )));
    }
    if manifest.endianness != ENDIANNESS {
        return Err(Error::Manifest(format!(
            "endianness '{}' unsupported",
            manifest.endianness
        )));
    }

    let mut rx = ReceptionState::empty(manifest.r_t);
    for entry in &manifest.blocks {
        let (slot_name, expected) = match (entry.row, entry.col) {
            (None, None) => ("structure".to_string(), manifest.r_s),
            (Some(row), Some(col)) => {
                if row >= GRID || col >= GRID {
                    return Err(Error::GridIndex {
                        row,
                        col,
                        grid: GRID,
                    });
                }
                (format!("tex_{row}_{col}"), manifest.r_t)
            }
            _ => {
                return Err(Error::Manifest(format!(
                    "{}: row and col must be given together",
                    entry.file
                )))
            }
        };
        if entry.bytes != 4 * expected {
            return Err(Error::LengthMismatch {
                block: slot_name,
                expected,
                actual: entry.bytes / 4,
            });
        }
        let raw = fs::read(dir.join(&entry.file))?;
        if raw.len() != entry.bytes {
            return Err(Error::LengthMismatch {
                block: slot_name,
                expected,
                actual: raw.len() / 4,
            });
        }
        let samples: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let target = match (entry.row, entry.col) {
            (Some(row), Some(col)) => &mut rx.textures[row * GRID + col],
            _ => &mut rx.structure,
        };
        if target.replace(samples).is_some() {
            return Err(Error::Manifest(format!("duplicate entry for {slot_name}")));
        }
    }
    Ok((rx, manifest))
}

/// Imports a complete block set; every block must be present.
pub fn import_external_blocks(path: &Path) -> Result<BlockSet> {
    let (rx, _) = import_reception(path)?;
    let missing = rx.missing_count();
    if missing > 0 {
        return Err(Error::Manifest(format!(
            "{missing} of {} blocks missing",
            TEXTURE_BLOCKS + 1
        )));
    }
    Ok(BlockSet {
        structure: rx.structure.unwrap_or_default(),
        textures: rx
            .textures
            .into_iter()
            .map(Option::unwrap_or_default)
            .collect(),
    })
}
