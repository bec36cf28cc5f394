use std::f64::consts::PI;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

const SIDE: usize = 28;
const JITTER: f64 = 2.0;
const HALF_WIDTH: f64 = 1.5;
const NOISE: f64 = 0.1;

/// Ten-class 1x28x28 images: class `k` is a bar through the (jittered)
/// centre at angle `k * 18` degrees, plus Gaussian pixel noise, clamped to
/// [0, 1]. Labels are assigned round-robin.
pub fn synthetic_dataset(seed: u64, n: usize) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::argument(format!("synthetic dataset needs n >= 10, got {n}")));
    }
    let mut rng = Rng::new(seed);
    let mut pixels = Vec::with_capacity(n * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    let centre = (SIDE as f64 - 1.0) / 2.0;
    for i in 0..n {
        let class = i % 10;
        let theta = class as f64 * PI / 10.0;
        let (sin, cos) = theta.sin_cos();
        let cx = centre + rng.uniform_range(-JITTER, JITTER);
        let cy = centre + rng.uniform_range(-JITTER, JITTER);
        for y in 0..SIDE {
            for x in 0..SIDE {
                // distance from the line through (cx, cy) with direction (cos, sin)
                let d = ((x as f64 - cx) * sin - (y as f64 - cy) * cos).abs();
                let bar = (HALF_WIDTH + 0.5 - d).clamp(0.0, 1.0);
                pixels.push((bar + NOISE * rng.normal()).clamp(0.0, 1.0));
            }
        }
        labels.push(class);
    }
    Dataset::new(
        "synthetic",
        Tensor::new(vec![n, 1, SIDE, SIDE], pixels)?,
        labels,
    )
}
