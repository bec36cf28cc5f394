//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! the red, green and blue 32x32 planes, each row-major.

use std::path::Path;

use super::{normalize, Dataset};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CIFAR_RECORD: usize = 3073;
pub const CIFAR_PIXELS: usize = 3072;

/// Splits raw batch bytes into labels and pixel planes.
pub fn parse_cifar10(bytes: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
    if bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::format(format!(
            "CIFAR-10 batch length {} is not a multiple of {CIFAR_RECORD}",
            bytes.len()
        )));
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut labels = Vec::with_capacity(n);
    let mut pixels = Vec::with_capacity(n * CIFAR_PIXELS);
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] >= 10 {
            return Err(Error::format(format!("record {i}: label {} out of range", rec[0])));
        }
        labels.push(rec[0]);
        pixels.extend_from_slice(&rec[1..]);
    }
    Ok((labels, pixels))
}

pub fn encode_cifar10(labels: &[u8], pixels: &[u8]) -> Vec<u8> {
    assert_eq!(labels.len() * CIFAR_PIXELS, pixels.len());
    let mut out = Vec::with_capacity(labels.len() * CIFAR_RECORD);
    for (l, px) in labels.iter().zip(pixels.chunks_exact(CIFAR_PIXELS)) {
        out.push(*l);
        out.extend_from_slice(px);
    }
    out
}

/// Concatenates the given batch files into one (N, 3, 32, 32) dataset.
pub fn load_cifar10<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut pixels = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let bytes = std::fs::read(p)?;
        let (l, px) =
            parse_cifar10(&bytes).map_err(|e| Error::format(format!("{}: {e}", p.display())))?;
        labels.extend(l);
        pixels.extend(px);
    }
    let n = labels.len();
    Dataset::new(
        "cifar10",
        Tensor::new(vec![n, 3, 32, 32], normalize(&pixels))?,
        labels.into_iter().map(usize::from).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let mut px = vec![0u8; CIFAR_PIXELS];
        px[0] = 255;
        let bytes = encode_cifar10(&[7], &px);
        assert_eq!(bytes.len(), CIFAR_RECORD);
        let (l, p) = parse_cifar10(&bytes).unwrap();
        assert_eq!(l, vec![7]);
        assert_eq!(p, px);
    }

    #[test]
    fn truncated() {
        let bytes = vec![0u8; CIFAR_RECORD - 1];
        assert!(matches!(parse_cifar10(&bytes), Err(Error::Format(_))));
    }
}
