use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::train::{train_on, Architecture, TrainConfig};
use crate::activation::ActivationKind;
use crate::data::Splits;
use crate::error::{Error, Result};

pub const SWEEP_CSV_HEADER: &str = "activation,n_conv,final_accuracy,final_loss,seed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub activation: ActivationKind,
    pub n_conv: usize,
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub seed: u64,
}

/// Cells in depth-major order; cell `i` is trained with seed `base.seed + i`.
pub fn sweep_cells(base: &TrainConfig, depths: &[usize], activations: &[ActivationKind]) -> Vec<TrainConfig> {
    let mut cells = Vec::with_capacity(depths.len() * activations.len());
    for &depth in depths {
        for &act in activations {
            let i = cells.len() as u64;
            cells.push(TrainConfig {
                activation: act,
                architecture: Architecture::DepthSweep(depth),
                seed: base.seed.wrapping_add(i),
                ..base.clone()
            });
        }
    }
    cells
}

/// Trains every (depth, activation) cell on shared data. Cells run on up to
/// `available_parallelism` threads; rows come back in cell order.
pub fn run_depth_sweep_on(
    base: &TrainConfig,
    splits: &Splits,
    depths: &[usize],
    activations: &[ActivationKind],
) -> Result<Vec<SweepRow>> {
    if depths.is_empty() || activations.is_empty() {
        return Err(Error::config("sweep needs at least one depth and one activation"));
    }
    let cells = sweep_cells(base, depths, activations);
    for c in &cells {
        c.validate()?;
    }
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cells.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepRow>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let row = train_on(cell, splits).map(|r| {
                    eprintln!(
                        "cell {i}: {} n_conv={} accuracy={:.4}",
                        cell.activation,
                        depth_of(cell),
                        r.final_accuracy
                    );
                    SweepRow {
                        activation: cell.activation,
                        n_conv: depth_of(cell),
                        final_accuracy: r.final_accuracy,
                        final_loss: r.final_loss,
                        seed: cell.seed,
                    }
                });
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every cell is visited"))
        .collect()
}

fn depth_of(cell: &TrainConfig) -> usize {
    match cell.architecture {
        Architecture::DepthSweep(n) => n,
        _ => unreachable!(),
    }
}

pub fn run_depth_sweep(
    base: &TrainConfig,
    depths: &[usize],
    activations: &[ActivationKind],
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let splits = base.load_data()?;
    run_depth_sweep_on(base, &splits, depths, activations)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.activation.cli_name(),
            r.n_conv,
            r.final_accuracy,
            r.final_loss,
            r.seed
        ));
    }
    s
}
