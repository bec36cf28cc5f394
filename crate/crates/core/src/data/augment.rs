use crate::rng::Rng;
use crate::tensor::Tensor;

/// Zero padding on each side before cropping.
pub const AUGMENT_PAD: usize = 4;

/// Pad-4 random crop plus horizontal flip with probability 1/2, for one
/// (C, H, W) image. Exactly two draws per image, crop first then flip.
pub fn augment_cifar(image: &Tensor, rng: &mut Rng) -> Tensor {
    let span = 2 * AUGMENT_PAD + 1;
    let offset = rng.index(span * span);
    let flip = rng.uniform() < 0.5;
    augment_with(image, offset / span, offset % span, flip)
}

/// Deterministic core of [`augment_cifar`]: crop the padded image at
/// (`dy`, `dx`), `0..=8` each, then optionally mirror left-right.
/// `(4, 4, false)` is the identity.
pub fn augment_with(image: &Tensor, dy: usize, dx: usize, flip: bool) -> Tensor {
    let (c, h, w) = match *image.shape() {
        [c, h, w] => (c, h, w),
        _ => panic!("augment expects a (C, H, W) image, got {:?}", image.shape()),
    };
    assert!(dy <= 2 * AUGMENT_PAD && dx <= 2 * AUGMENT_PAD);
    let src = image.data();
    let mut out = vec![0.0; src.len()];
    for ch in 0..c {
        for y in 0..h {
            let sy = (y + dy) as isize - AUGMENT_PAD as isize;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            for x in 0..w {
                let sx = (x + dx) as isize - AUGMENT_PAD as isize;
                if sx < 0 || sx >= w as isize {
                    continue;
                }
                let tx = if flip { w - 1 - x } else { x };
                out[(ch * h + y) * w + tx] = src[(ch * h + sy as usize) * w + sx as usize];
            }
        }
    }
    Tensor::new(vec![c, h, w], out).unwrap()
}

/// Augments every sample of an (N, C, H, W) batch in order.
pub fn augment_batch(batch: &Tensor, rng: &mut Rng) -> Tensor {
    let (n, c, h, w) = batch.dims4().expect("augment_batch expects (N, C, H, W)");
    let per = c * h * w;
    let mut out = Vec::with_capacity(batch.len());
    for s in 0..n {
        let img = Tensor::new(vec![c, h, w], batch.data()[s * per..(s + 1) * per].to_vec()).unwrap();
        out.extend(augment_cifar(&img, rng).into_data());
    }
    Tensor::new(batch.shape().to_vec(), out).unwrap()
}
