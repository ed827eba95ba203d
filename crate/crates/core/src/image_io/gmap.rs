//! GMAP float-map container:
//!
//! ```text
//! "GMAP" | version: u8 = 1 | width: u32 LE | height: u32 LE | width*height f64 LE, row-major
//! ```

use super::FloatGrid;
use crate::error::{GmapError, Result};

pub const GMAP_MAGIC: &[u8; 4] = b"GMAP";
pub const GMAP_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

pub fn write_float_map(grid: &FloatGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(GMAP_MAGIC);
    out.push(GMAP_VERSION);
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    for v in grid.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_float_map(bytes: &[u8]) -> Result<FloatGrid> {
    if bytes.len() < 4 || &bytes[..4] != GMAP_MAGIC {
        return Err(GmapError::BadMagic.into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(GmapError::LengthMismatch {
            expected: HEADER_LEN,
            found: bytes.len(),
        }
        .into());
    }
    if bytes[4] != GMAP_VERSION {
        return Err(GmapError::UnsupportedVersion(bytes[4]).into());
    }
    let width = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() != expected {
        return Err(GmapError::LengthMismatch {
            expected,
            found: bytes.len(),
        }
        .into());
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FloatGrid::new(width, height, values)
}
