//! Parameter files.
//!
//! `<path>` holds every value as a little-endian f64, in order: the network
//! parameters (as listed by [`Network::params`]), then each batchnorm layer's
//! running mean and running variance (depth-first layer order).
//! `<path>.manifest` lists the same entries one per line:
//!
//! ```text
//! param 0 weight 32x1x3x3
//! param 1 bias 32
//! buffer 0 running_mean 32
//! buffer 1 running_var 32
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::layer::Layer;
use super::network::Network;
use super::param::ParamRole;
use crate::error::{Error, Result};

fn manifest_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".manifest");
    PathBuf::from(p)
}

fn role_name(role: ParamRole) -> &'static str {
    match role {
        ParamRole::Weight => "weight",
        ParamRole::Bias => "bias",
        ParamRole::Scale => "scale",
        ParamRole::Shift => "shift",
    }
}

fn manifest(net: &Network) -> String {
    let mut m = String::new();
    for (i, p) in net.params().iter().enumerate() {
        let dims: Vec<String> = p.value.shape().iter().map(usize::to_string).collect();
        writeln!(m, "param {i} {} {}", role_name(p.role), dims.join("x")).unwrap();
    }
    let mut i = 0;
    net.walk(|l| {
        if let Layer::BatchNorm2d(bn) = l {
            writeln!(m, "buffer {i} running_mean {}", bn.running_mean.len()).unwrap();
            writeln!(m, "buffer {} running_var {}", i + 1, bn.running_var.len()).unwrap();
            i += 2;
        }
    });
    m
}

/// Flat parameter record, in file order.
pub fn flatten_state(net: &Network) -> Vec<f64> {
    let mut out: Vec<f64> = net
        .params()
        .iter()
        .flat_map(|p| p.value.data().iter().copied())
        .collect();
    net.walk(|l| {
        if let Layer::BatchNorm2d(bn) = l {
            out.extend(&bn.running_mean);
            out.extend(&bn.running_var);
        }
    });
    out
}

pub fn save_parameters(net: &Network, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = flatten_state(net)
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    fs::write(path, bytes)?;
    fs::write(manifest_path(path), manifest(net))?;
    Ok(())
}

/// Loads a record written by [`save_parameters`] into a network of the same
/// architecture; the manifest must match exactly.
pub fn load_parameters(net: &mut Network, path: &Path) -> Result<()> {
    let found = fs::read_to_string(manifest_path(path))?;
    if found != manifest(net) {
        return Err(Error::format(format!(
            "manifest {} does not match this architecture",
            manifest_path(path).display()
        )));
    }
    let bytes = fs::read(path)?;
    let expected = flatten_state(net).len() * 8;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "parameter file has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for p in net.params_mut() {
        for v in p.value.data_mut() {
            *v = values.next().unwrap();
        }
    }
    net.walk_mut(|l| {
        if let Layer::BatchNorm2d(bn) = l {
            for v in bn.running_mean.iter_mut().chain(bn.running_var.iter_mut()) {
                *v = values.next().unwrap();
            }
        }
    });
    Ok(())
}
