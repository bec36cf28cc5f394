//! Dataset loaders (IDX, CIFAR-10 binary), normalization, augmentation and a
//! synthetic offline dataset.

mod augment;
mod cifar;
mod idx;
mod synthetic;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use augment::{augment_batch, augment_cifar, augment_with, AUGMENT_PAD};
pub use cifar::{encode_cifar10, load_cifar10, parse_cifar10, CIFAR_PIXELS, CIFAR_RECORD};
pub use idx::{
    encode_idx, load_idx_images, load_idx_labels, parse_idx, IdxArray, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
};
pub use synthetic::synthetic_dataset;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 10;

/// Images (N, C, H, W) in [0, 1] with class labels in [0, 10).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub images: Tensor,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(name: &str, images: Tensor, labels: Vec<usize>) -> Result<Self> {
        let (n, ..) = images.dims4()?;
        if n != labels.len() {
            return Err(Error::shape(format!("{n} images but {} labels", labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::format(format!("label {bad} out of range")));
        }
        Ok(Dataset {
            name: name.to_string(),
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// (C, H, W) of one sample.
    pub fn sample_shape(&self) -> [usize; 3] {
        let s = self.images.shape();
        [s[1], s[2], s[3]]
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            images: self.images.gather_batch(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// First `n` samples after a seeded shuffle.
    pub fn subset(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.len() {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        Rng::new(seed).shuffle(&mut idx);
        idx.truncate(n);
        self.select(&idx)
    }

    /// Zero-pads H and W symmetrically (extra row/column at the bottom/right)
    /// up to `side`. No-op when already that large.
    pub fn pad_to(&self, side: usize) -> Dataset {
        let (n, c, h, w) = self.images.dims4().unwrap();
        if h >= side && w >= side {
            return self.clone();
        }
        let (top, left) = ((side - h) / 2, (side - w) / 2);
        let mut out = vec![0.0; n * c * side * side];
        let src = self.images.data();
        for plane in 0..n * c {
            for y in 0..h {
                let s = &src[(plane * h + y) * w..][..w];
                out[(plane * side + y + top) * side + left..][..w].copy_from_slice(s);
            }
        }
        Dataset {
            name: self.name.clone(),
            images: Tensor::new(vec![n, c, side, side], out).unwrap(),
            labels: self.labels.clone(),
        }
    }
}

/// Maps bytes to [0, 1] by dividing by 255.
pub fn normalize(bytes: &[u8]) -> Vec<f64> {
    bytes.iter().map(|&b| f64::from(b) / 255.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    Mnist,
    FashionMnist,
    Cifar10,
    Synthetic,
}

impl DatasetName {
    pub fn id(&self) -> &'static str {
        match self {
            DatasetName::Mnist => "mnist",
            DatasetName::FashionMnist => "fashion_mnist",
            DatasetName::Cifar10 => "cifar10",
            DatasetName::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mnist" => Ok(DatasetName::Mnist),
            "fashion_mnist" | "fashion" | "fmnist" => Ok(DatasetName::FashionMnist),
            "cifar10" | "cifar_10" | "cifar" => Ok(DatasetName::Cifar10),
            "synthetic" => Ok(DatasetName::Synthetic),
            _ => Err(Error::config(format!("unknown dataset '{s}'"))),
        }
    }
}

/// Train and test splits.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Synthetic sizes when no subset is requested.
pub const SYNTHETIC_TRAIN: usize = 2000;
pub const SYNTHETIC_TEST: usize = 500;
const SYNTHETIC_TEST_SEED_OFFSET: u64 = 0x7e57;

/// The synthetic train/test pair generated from `seed`.
pub fn synthetic_splits(seed: u64, n_train: usize) -> Result<Splits> {
    Ok(Splits {
        train: synthetic_dataset(seed, n_train)?,
        test: synthetic_dataset(seed.wrapping_add(SYNTHETIC_TEST_SEED_OFFSET), SYNTHETIC_TEST)?,
    })
}

fn find_file(dir: &Path, names: &[&str]) -> Result<PathBuf> {
    for name in names {
        for candidate in [dir.join(name), dir.join(format!("{name}.gz"))] {
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("none of {names:?} (or .gz) found in {}", dir.display()),
    )))
}

fn load_idx_split(dir: &Path, prefix: &str, name: &str) -> Result<Dataset> {
    let images = load_idx_images(&find_file(
        dir,
        &[
            &format!("{prefix}-images-idx3-ubyte"),
            &format!("{prefix}-images.idx3-ubyte"),
        ],
    )?)?;
    let labels = load_idx_labels(&find_file(
        dir,
        &[
            &format!("{prefix}-labels-idx1-ubyte"),
            &format!("{prefix}-labels.idx1-ubyte"),
        ],
    )?)?;
    if images.dims.len() != 3 || labels.dims.len() != 1 || images.dims[0] != labels.dims[0] {
        return Err(Error::format(format!(
            "image dims {:?} and label dims {:?} disagree",
            images.dims, labels.dims
        )));
    }
    let (n, h, w) = (images.dims[0], images.dims[1], images.dims[2]);
    Dataset::new(
        name,
        Tensor::new(vec![n, 1, h, w], normalize(&images.data))?,
        labels.data.iter().map(|&l| usize::from(l)).collect(),
    )
}

/// MNIST or Fashion-MNIST from the standard `train-*`/`t10k-*` IDX files.
pub fn load_idx_dataset(dir: &Path, name: DatasetName) -> Result<Splits> {
    Ok(Splits {
        train: load_idx_split(dir, "train", name.id())?,
        test: load_idx_split(dir, "t10k", name.id())?,
    })
}

/// CIFAR-10 from `data_batch_1..5.bin` and `test_batch.bin`, either in `dir`
/// or in `dir/cifar-10-batches-bin`.
pub fn load_cifar10_dir(dir: &Path) -> Result<Splits> {
    let nested = dir.join("cifar-10-batches-bin");
    let base = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let train: Vec<PathBuf> = (1..=5).map(|i| base.join(format!("data_batch_{i}.bin"))).collect();
    let test = [base.join("test_batch.bin")];
    Ok(Splits {
        train: load_cifar10(&train)?,
        test: load_cifar10(&test)?,
    })
}
