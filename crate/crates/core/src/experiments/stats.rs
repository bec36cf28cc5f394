use serde::{Deserialize, Serialize};

use super::train::{train_on, TrainConfig, TrainReport};
use crate::data::Splits;
use crate::error::{Error, Result};

/// Mean and sample standard deviation (n - 1) of repeated runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_loss: f64,
    pub std_loss: f64,
    pub accuracies: Vec<f64>,
    pub losses: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Welford's running update; identical inputs give exactly zero spread.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    (mean, (m2 / (values.len() - 1) as f64).sqrt())
}

impl RunStats {
    pub fn from_reports(reports: &[TrainReport]) -> Result<Self> {
        if reports.len() < 2 {
            return Err(Error::argument(format!(
                "need at least 2 runs for a sample deviation, got {}",
                reports.len()
            )));
        }
        let accuracies: Vec<f64> = reports.iter().map(|r| r.final_accuracy).collect();
        let losses: Vec<f64> = reports.iter().map(|r| r.final_loss).collect();
        let (mean_accuracy, std_accuracy) = mean_std(&accuracies);
        let (mean_loss, std_loss) = mean_std(&losses);
        Ok(RunStats {
            runs: reports.len(),
            mean_accuracy,
            std_accuracy,
            mean_loss,
            std_loss,
            accuracies,
            losses,
            seeds: reports.iter().map(|r| r.seed).collect(),
        })
    }

    /// `run,seed,final_accuracy,final_loss` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("run,seed,final_accuracy,final_loss\n");
        for (i, ((a, l), seed)) in self.accuracies.iter().zip(&self.losses).zip(&self.seeds).enumerate() {
            s.push_str(&format!("{i},{seed},{a},{l}\n"));
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "runs={}\nmean_accuracy={}\nstd_accuracy={}\nmean_loss={}\nstd_loss={}\n",
            self.runs, self.mean_accuracy, self.std_accuracy, self.mean_loss, self.std_loss
        )
    }
}

/// Trains once per seed on the same data.
pub fn run_with_seeds(config: &TrainConfig, splits: &Splits, seeds: &[u64]) -> Result<Vec<TrainReport>> {
    seeds
        .iter()
        .map(|&seed| {
            train_on(
                &TrainConfig {
                    seed,
                    ..config.clone()
                },
                splits,
            )
        })
        .collect()
}

/// `n_runs` runs with seeds `config.seed + i`.
pub fn run_repeated(config: &TrainConfig, n_runs: usize) -> Result<RunStats> {
    if n_runs < 2 {
        return Err(Error::config(format!("need at least 2 runs, got {n_runs}")));
    }
    config.validate()?;
    let splits = config.load_data()?;
    let seeds: Vec<u64> = (0..n_runs as u64).map(|i| config.seed.wrapping_add(i)).collect();
    RunStats::from_reports(&run_with_seeds(config, &splits, &seeds)?)
}
