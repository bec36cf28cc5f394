//! C ABI over `colu-core`.
//!
//! Every function returns a [`ColuStatus`]; results come back through out
//! pointers. After a non-OK status, `colu_last_error` returns a message
//! describing the failure on the calling thread. Networks and training
//! configurations are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use colu_core::activation::{derivative, eval};
use colu_core::analysis::{classify, global_minimum};
use colu_core::data::DatasetName;
use colu_core::experiments::{train, Architecture, TrainConfig};
use colu_core::nn::{Mode, Network};
use colu_core::{ActivationKind, Error, Rng, Tensor};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColuStatus {
    Ok = 0,
    Domain = 1,
    Argument = 2,
    Shape = 3,
    Usage = 4,
    Config = 5,
    Format = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColuKind {
    Colu = 0,
    Relu = 1,
    Swish = 2,
    Sigmoid = 3,
    Mish = 4,
    Elu = 5,
    Selu = 6,
    Tanh = 7,
    Softplus = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColuArch {
    DepthSweep = 0,
    SmallCnn8 = 1,
    Vgg13 = 2,
    Resnet9 = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColuDataset {
    Mnist = 0,
    FashionMnist = 1,
    Cifar10 = 2,
    Synthetic = 3,
}

/// Activation kind (a `ColuKind` value) plus the ELU alpha, which other
/// kinds ignore.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ColuActivation {
    pub kind: i32,
    pub alpha: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ColuProperties {
    pub global_min_x: f64,
    pub global_min_f: f64,
    pub bounded_below: bool,
    pub bounded_above: bool,
    pub monotonic: bool,
    pub saturates_above: bool,
    pub kink_at_zero: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ColuTrainResult {
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub epochs: usize,
    pub param_count: usize,
}

/// Opaque network handle.
pub struct ColuNetwork {
    net: Network,
    input: [usize; 3],
    outputs: usize,
}

/// Opaque training configuration handle.
pub struct ColuTrainConfig {
    config: TrainConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn status_of(e: &Error) -> ColuStatus {
    match e {
        Error::Domain { .. } => ColuStatus::Domain,
        Error::Argument(_) => ColuStatus::Argument,
        Error::Shape(_) => ColuStatus::Shape,
        Error::Usage(_) => ColuStatus::Usage,
        Error::Config(_) => ColuStatus::Config,
        Error::Format(_) => ColuStatus::Format,
        Error::Io(_) => ColuStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> FfiResult) -> ColuStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ColuStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            let status = status_of(&e);
            set_last_error(e.to_string());
            status
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            ColuStatus::NullPointer
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            ColuStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &'static str) -> FfiResult<&'a mut [T]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

fn unknown(what: &str, code: i32) -> Failure {
    Failure::Core(Error::Argument(format!("unknown {what} code {code}")))
}

fn kind_of(a: ColuActivation) -> FfiResult<ActivationKind> {
    const ELU: i32 = ColuKind::Elu as i32;
    if a.kind == ELU {
        return Ok(ActivationKind::elu(a.alpha)?);
    }
    [
        (ColuKind::Colu, ActivationKind::Colu),
        (ColuKind::Relu, ActivationKind::Relu),
        (ColuKind::Swish, ActivationKind::Swish),
        (ColuKind::Sigmoid, ActivationKind::Sigmoid),
        (ColuKind::Mish, ActivationKind::Mish),
        (ColuKind::Selu, ActivationKind::Selu),
        (ColuKind::Tanh, ActivationKind::Tanh),
        (ColuKind::Softplus, ActivationKind::Softplus),
    ]
    .into_iter()
    .find(|(k, _)| *k as i32 == a.kind)
    .map(|(_, kind)| kind)
    .ok_or_else(|| unknown("activation", a.kind))
}

fn arch_of(arch: i32, depth: usize) -> FfiResult<Architecture> {
    Ok(match arch {
        x if x == ColuArch::DepthSweep as i32 => Architecture::DepthSweep(depth),
        x if x == ColuArch::SmallCnn8 as i32 => Architecture::SmallCnn8,
        x if x == ColuArch::Vgg13 as i32 => Architecture::Vgg13,
        x if x == ColuArch::Resnet9 as i32 => Architecture::Resnet9,
        _ => return Err(unknown("architecture", arch)),
    })
}

fn dataset_of(dataset: i32) -> FfiResult<DatasetName> {
    Ok(match dataset {
        x if x == ColuDataset::Mnist as i32 => DatasetName::Mnist,
        x if x == ColuDataset::FashionMnist as i32 => DatasetName::FashionMnist,
        x if x == ColuDataset::Cifar10 as i32 => DatasetName::Cifar10,
        x if x == ColuDataset::Synthetic as i32 => DatasetName::Synthetic,
        _ => return Err(unknown("dataset", dataset)),
    })
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn colu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn colu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_eval(act: ColuActivation, x: f64, out: *mut f64) -> ColuStatus {
    guard(|| {
        let out = unsafe { self::out(out, "out") }?;
        *out = eval(kind_of(act)?, x)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_derivative(act: ColuActivation, x: f64, out: *mut f64) -> ColuStatus {
    guard(|| {
        let out = unsafe { self::out(out, "out") }?;
        *out = derivative(kind_of(act)?, x)?;
        Ok(())
    })
}

fn batch(
    act: ColuActivation,
    xs: &[f64],
    out: &mut [f64],
    f: fn(ActivationKind, f64) -> colu_core::Result<f64>,
) -> FfiResult {
    let kind = kind_of(act)?;
    for (i, (x, o)) in xs.iter().zip(out.iter_mut()).enumerate() {
        *o = f(kind, *x).map_err(|_| Error::Domain {
            value: *x,
            index: Some(i),
        })?;
    }
    Ok(())
}

/// Elementwise value of `n` inputs. On a non-finite input returns
/// `Domain` and the message names its index.
///
/// # Safety
/// `xs` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn colu_eval_batch(
    act: ColuActivation,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> ColuStatus {
    guard(|| unsafe { batch(act, slice(xs, n, "xs")?, slice_mut(out, n, "out")?, eval) })
}

/// Elementwise derivative; see [`colu_eval_batch`].
///
/// # Safety
/// `xs` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn colu_derivative_batch(
    act: ColuActivation,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> ColuStatus {
    guard(|| unsafe {
        batch(act, slice(xs, n, "xs")?, slice_mut(out, n, "out")?, derivative)
    })
}

/// Global minimum of the activation over `[lo, hi]`.
///
/// # Safety
/// `x_min` and `f_min` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn colu_global_minimum(
    act: ColuActivation,
    lo: f64,
    hi: f64,
    x_min: *mut f64,
    f_min: *mut f64,
) -> ColuStatus {
    guard(|| {
        let (xo, fo) = unsafe { (out(x_min, "x_min")?, out(f_min, "f_min")?) };
        let m = global_minimum(kind_of(act)?, lo, hi)?;
        *xo = m.x;
        *fo = m.f;
        Ok(())
    })
}

/// # Safety
/// `props` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_classify(act: ColuActivation, props: *mut ColuProperties) -> ColuStatus {
    guard(|| {
        let props = unsafe { out(props, "props") }?;
        let r = classify(kind_of(act)?);
        *props = ColuProperties {
            global_min_x: r.global_min_x,
            global_min_f: r.global_min_f,
            bounded_below: r.bounded_below,
            bounded_above: r.bounded_above,
            monotonic: r.monotonic,
            saturates_above: r.saturates_above,
            kink_at_zero: r.kink_at_zero,
        };
        Ok(())
    })
}

/// Builds a network (`arch` is a `ColuArch` value) for `channels x height x width` inputs with ten
/// outputs. `depth` is used by `DepthSweep` only. The handle must be
/// released with `colu_network_free`.
///
/// # Safety
/// `net` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_network_build(
    arch: i32,
    depth: usize,
    act: ColuActivation,
    channels: usize,
    height: usize,
    width: usize,
    width_mult: f64,
    seed: u64,
    net: *mut *mut ColuNetwork,
) -> ColuStatus {
    guard(|| {
        let slot = unsafe { out(net, "net") }?;
        *slot = ptr::null_mut();
        let input = [channels, height, width];
        let mut rng = Rng::new(seed);
        let mut network = arch_of(arch, depth)?.build(kind_of(act)?, input, width_mult, &mut rng)?;
        let shape = network.output_shape(&[2, channels, height, width])?;
        network.set_mode(Mode::Eval);
        *slot = Box::into_raw(Box::new(ColuNetwork {
            net: network,
            input,
            outputs: shape[1..].iter().product(),
        }));
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle from `colu_network_build` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn colu_network_free(net: *mut ColuNetwork) {
    if !net.is_null() {
        drop(unsafe { Box::from_raw(net) });
    }
}

/// # Safety
/// `net` must be a live handle and `count` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_network_param_count(net: *const ColuNetwork, count: *mut usize) -> ColuStatus {
    guard(|| {
        let (net, count) = unsafe { (net.as_ref().ok_or(Failure::Null("net"))?, out(count, "count")?) };
        *count = net.net.param_count();
        Ok(())
    })
}

/// Number of outputs per sample (the logits width).
///
/// # Safety
/// `net` must be a live handle and `outputs` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_network_outputs(net: *const ColuNetwork, outputs: *mut usize) -> ColuStatus {
    guard(|| {
        let (net, o) = unsafe { (net.as_ref().ok_or(Failure::Null("net"))?, out(outputs, "outputs")?) };
        *o = net.outputs;
        Ok(())
    })
}

/// Eval-mode forward pass over `batch` samples laid out N x C x H x W.
/// `out_len` must equal `batch` times the output width.
///
/// # Safety
/// `net` must be a live handle; `x` must hold `batch * C * H * W` doubles
/// and `out` must hold `out_len`.
#[no_mangle]
pub unsafe extern "C" fn colu_network_forward(
    net: *mut ColuNetwork,
    x: *const f64,
    batch: usize,
    out: *mut f64,
    out_len: usize,
) -> ColuStatus {
    guard(|| {
        let net = unsafe { net.as_mut() }.ok_or(Failure::Null("net"))?;
        let [c, h, w] = net.input;
        if batch == 0 {
            return Err(Error::Argument("batch must be >= 1".into()).into());
        }
        if out_len != batch * net.outputs {
            return Err(Error::Shape(format!(
                "output buffer holds {out_len} values, need {}",
                batch * net.outputs
            ))
            .into());
        }
        let xs = unsafe { slice(x, batch * c * h * w, "x")? };
        let dst = unsafe { slice_mut(out, out_len, "out")? };
        let input = Tensor::new(vec![batch, c, h, w], xs.to_vec())?;
        let y = net.net.forward(&input)?;
        dst.copy_from_slice(y.data());
        Ok(())
    })
}

/// New configuration with the default protocol (CoLU, small_cnn8, MNIST,
/// lr 0.001, decay 1e-4, momentum 0.9, L2 1e-4, batch 64, 30 epochs).
#[no_mangle]
pub extern "C" fn colu_train_config_new() -> *mut ColuTrainConfig {
    Box::into_raw(Box::new(ColuTrainConfig {
        config: TrainConfig::default(),
    }))
}

/// # Safety
/// `cfg` must be NULL or a handle from `colu_train_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_free(cfg: *mut ColuTrainConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

fn with_config(cfg: *mut ColuTrainConfig, f: impl FnOnce(&mut TrainConfig) -> FfiResult) -> ColuStatus {
    guard(|| {
        let cfg = unsafe { cfg.as_mut() }.ok_or(Failure::Null("cfg"))?;
        f(&mut cfg.config)
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_set_activation(
    cfg: *mut ColuTrainConfig,
    act: ColuActivation,
) -> ColuStatus {
    with_config(cfg, |c| {
        c.activation = kind_of(act)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_set_arch(
    cfg: *mut ColuTrainConfig,
    arch: i32,
    depth: usize,
    width_mult: f64,
) -> ColuStatus {
    with_config(cfg, |c| {
        c.architecture = arch_of(arch, depth)?;
        c.width_mult = width_mult;
        Ok(())
    })
}

/// Sets the dataset (a `ColuDataset` value); `data_dir` may be NULL for
/// the synthetic set.
///
/// # Safety
/// `cfg` must be a live handle; `data_dir` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_set_dataset(
    cfg: *mut ColuTrainConfig,
    dataset: i32,
    data_dir: *const c_char,
) -> ColuStatus {
    with_config(cfg, |c| {
        c.dataset = dataset_of(dataset)?;
        c.augment = c.dataset == DatasetName::Cifar10;
        c.data_dir = if data_dir.is_null() {
            None
        } else {
            let s = unsafe { CStr::from_ptr(data_dir) }
                .to_str()
                .map_err(|_| Error::Argument("data_dir is not UTF-8".into()))?;
            Some(PathBuf::from(s))
        };
        Ok(())
    })
}

/// Sets the optimizer: initial rate, decay, momentum and L2 factor.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_set_sgd(
    cfg: *mut ColuTrainConfig,
    lr: f64,
    decay: f64,
    momentum: f64,
    l2: f64,
) -> ColuStatus {
    with_config(cfg, |c| {
        c.sgd.lr0 = lr;
        c.sgd.decay = decay;
        c.sgd.momentum = momentum;
        c.sgd.l2_factor = l2;
        Ok(())
    })
}

/// Sets epochs, batch size, seed and the training subset (0 = all).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colu_train_config_set_schedule(
    cfg: *mut ColuTrainConfig,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    subset: usize,
) -> ColuStatus {
    with_config(cfg, |c| {
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.seed = seed;
        c.subset = (subset > 0).then_some(subset);
        Ok(())
    })
}

/// Runs training to completion.
///
/// # Safety
/// `cfg` must be a live handle and `result` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn colu_train(cfg: *const ColuTrainConfig, result: *mut ColuTrainResult) -> ColuStatus {
    guard(|| {
        let cfg = unsafe { cfg.as_ref() }.ok_or(Failure::Null("cfg"))?;
        let result = unsafe { out(result, "result") }?;
        let r = train(&cfg.config)?;
        *result = ColuTrainResult {
            final_accuracy: r.final_accuracy,
            final_loss: r.final_loss,
            epochs: r.test_accuracy.len(),
            param_count: r.param_count,
        };
        Ok(())
    })
}
