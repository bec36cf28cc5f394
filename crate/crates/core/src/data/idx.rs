//! IDX container (MNIST, Fashion-MNIST): a big-endian u32 magic
//! `0x0000 08 <ndim>`, then `ndim` big-endian u32 extents, then the unsigned
//! bytes in row-major order. Gzip-compressed files are accepted transparently.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Self {
        IdxArray {
            magic: 0x0800 | dims.len() as u32,
            dims,
            data,
        }
    }
}

/// Reads a file, inflating it first if it carries the gzip signature.
pub(crate) fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses an unsigned-byte IDX array, checking the magic against `expected`.
pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(Error::format(format!(
            "truncated IDX header: expected at least 4 bytes, found {}",
            bytes.len()
        )));
    }
    let magic = be_u32(bytes, 0);
    if magic != expected_magic {
        return Err(Error::format(format!(
            "bad IDX magic: expected {expected_magic:#010x}, found {magic:#010x}"
        )));
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::format(format!(
            "truncated IDX header: expected {header} bytes, found {}",
            bytes.len()
        )));
    }
    let dims: Vec<usize> = (0..ndim).map(|i| be_u32(bytes, 4 + 4 * i) as usize).collect();
    let body: usize = dims.iter().product();
    if bytes.len() != header + body {
        return Err(Error::format(format!(
            "IDX length mismatch: expected {} bytes, found {}",
            header + body,
            bytes.len()
        )));
    }
    Ok(IdxArray {
        magic,
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn encode_idx(array: &IdxArray) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * array.dims.len() + array.data.len());
    out.extend(array.magic.to_be_bytes());
    for &d in &array.dims {
        out.extend((d as u32).to_be_bytes());
    }
    out.extend(&array.data);
    out
}

/// (count, rows, cols) images; magic must be 0x00000803.
pub fn load_idx_images(path: &Path) -> Result<IdxArray> {
    parse_idx(&read_maybe_gz(path)?, IDX_IMAGES_MAGIC)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// (count) labels; magic must be 0x00000801.
pub fn load_idx_labels(path: &Path) -> Result<IdxArray> {
    parse_idx(&read_maybe_gz(path)?, IDX_LABELS_MAGIC)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}
