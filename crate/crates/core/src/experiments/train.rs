use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::data::{
    augment_batch, load_cifar10_dir, load_idx_dataset, synthetic_splits, Dataset, DatasetName,
    Splits, NUM_CLASSES, SYNTHETIC_TRAIN,
};
use crate::error::{Error, Result};
use crate::nn::{
    build_depth_sweep_cnn_for, build_resnet9, build_vgg13, cross_entropy_per_sample,
    softmax_cross_entropy, Mode, Network,
};
use crate::optim::{sgd_step, OptState, SgdConfig};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    DepthSweep(usize),
    SmallCnn8,
    Vgg13,
    Resnet9,
}

impl Architecture {
    pub fn name(&self) -> String {
        match self {
            Architecture::DepthSweep(n) => format!("depth_sweep({n})"),
            Architecture::SmallCnn8 => "small_cnn8".into(),
            Architecture::Vgg13 => "vgg13".into(),
            Architecture::Resnet9 => "resnet9".into(),
        }
    }

    /// Minimum spatial side the architecture expects; smaller inputs are
    /// zero-padded up to it.
    fn input_side(&self) -> usize {
        match self {
            Architecture::Vgg13 | Architecture::Resnet9 => 32,
            _ => 0,
        }
    }

    pub fn build(
        &self,
        act: ActivationKind,
        input: [usize; 3],
        width_mult: f64,
        rng: &mut Rng,
    ) -> Result<Network> {
        match *self {
            Architecture::DepthSweep(n) => {
                build_depth_sweep_cnn_for(n, act, input, NUM_CLASSES, rng)
            }
            Architecture::SmallCnn8 => build_depth_sweep_cnn_for(8, act, input, NUM_CLASSES, rng),
            Architecture::Vgg13 => build_vgg13(act, input[0], NUM_CLASSES, width_mult, rng),
            Architecture::Resnet9 => build_resnet9(act, input[0], NUM_CLASSES, width_mult, rng),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    /// `small_cnn8`, `vgg13`, `resnet9`, or `depth_sweep:N`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        match lower.as_str() {
            "small_cnn8" | "cnn8" => Ok(Architecture::SmallCnn8),
            "vgg13" => Ok(Architecture::Vgg13),
            "resnet9" => Ok(Architecture::Resnet9),
            _ => match lower.strip_prefix("depth_sweep:") {
                Some(n) => n
                    .parse()
                    .map(Architecture::DepthSweep)
                    .map_err(|_| Error::config(format!("bad depth in '{s}'"))),
                None => Err(Error::config(format!("unknown architecture '{s}'"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub activation: ActivationKind,
    pub architecture: Architecture,
    pub width_mult: f64,
    /// Train on the first N samples of a seeded shuffle (seeded by `data_seed`).
    pub subset: Option<usize>,
    pub sgd: SgdConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds weight init, batch order, dropout and augmentation.
    pub seed: u64,
    pub dataset: DatasetName,
    pub data_dir: Option<PathBuf>,
    pub augment: bool,
    /// Seeds the subset selection and the synthetic generator, so runs with
    /// different `seed` see the same data.
    pub data_seed: u64,
}

impl Default for TrainConfig {
    /// The MNIST depth-sweep protocol: SGD lr 0.001, decay 1e-4, momentum 0.9,
    /// L2 1e-4, batch 64, 30 epochs.
    fn default() -> Self {
        TrainConfig {
            activation: ActivationKind::Colu,
            architecture: Architecture::SmallCnn8,
            width_mult: 1.0,
            subset: None,
            sgd: SgdConfig::default(),
            batch_size: 64,
            epochs: 30,
            seed: 0,
            dataset: DatasetName::Mnist,
            data_dir: None,
            augment: false,
            data_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::config(format!(
                "batch size must be >= 2 for batchnorm, got {}",
                self.batch_size
            )));
        }
        if self.epochs < 1 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if matches!(self.architecture, Architecture::DepthSweep(0)) {
            return Err(Error::config("depth must be >= 1"));
        }
        if !(self.width_mult > 0.0 && self.width_mult.is_finite()) {
            return Err(Error::config(format!(
                "width multiplier must be > 0, got {}",
                self.width_mult
            )));
        }
        if self.subset == Some(0) {
            return Err(Error::config("subset must be >= 1"));
        }
        self.sgd.validate()
    }

    /// Loads the configured train/test splits (subset and padding applied).
    pub fn load_data(&self) -> Result<Splits> {
        let splits = match self.dataset {
            DatasetName::Synthetic => {
                synthetic_splits(self.data_seed, self.subset.unwrap_or(SYNTHETIC_TRAIN).max(10))?
            }
            DatasetName::Mnist | DatasetName::FashionMnist => {
                load_idx_dataset(&self.require_dir()?, self.dataset)?
            }
            DatasetName::Cifar10 => load_cifar10_dir(&self.require_dir()?)?,
        };
        Ok(self.prepare(splits))
    }

    fn require_dir(&self) -> Result<PathBuf> {
        self.data_dir.clone().ok_or_else(|| {
            Error::config(format!("dataset {} needs --data-dir", self.dataset))
        })
    }

    /// Subset and pad already-loaded splits for this configuration.
    pub fn prepare(&self, splits: Splits) -> Splits {
        let mut train = splits.train;
        if let Some(n) = self.subset {
            train = train.subset(n, self.data_seed);
        }
        let side = self.architecture.input_side();
        Splits {
            train: train.pad_to(side),
            test: splits.test.pad_to(side),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    /// Mean cross-entropy over each epoch's training batches (L2 excluded).
    pub train_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub test_loss: Vec<f64>,
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub seed: u64,
    pub param_count: usize,
}

impl TrainReport {
    /// One `key=value` per line. Wall-clock times are left out so the text
    /// is a pure function of the configuration.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "activation={}", c.activation.cli_name());
        let _ = writeln!(s, "architecture={}", c.architecture.name());
        let _ = writeln!(s, "width_mult={}", c.width_mult);
        let _ = writeln!(s, "dataset={}", c.dataset);
        let _ = writeln!(s, "train_samples={}", c.subset.map_or("all".into(), |n| n.to_string()));
        let _ = writeln!(s, "epochs={}", c.epochs);
        let _ = writeln!(s, "batch_size={}", c.batch_size);
        let _ = writeln!(s, "lr={}", c.sgd.lr0);
        let _ = writeln!(s, "decay={}", c.sgd.decay);
        let _ = writeln!(s, "decay_mode={}", match c.sgd.decay_mode {
            crate::optim::DecayMode::LrDecay => "lr_decay",
            crate::optim::DecayMode::WeightDecay => "weight_decay",
        });
        let _ = writeln!(s, "momentum={}", c.sgd.momentum);
        let _ = writeln!(s, "l2={}", c.sgd.l2_factor);
        let _ = writeln!(s, "augment={}", c.augment);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "param_count={}", self.param_count);
        for (i, ((tl, acc), loss)) in self
            .train_loss
            .iter()
            .zip(&self.test_accuracy)
            .zip(&self.test_loss)
            .enumerate()
        {
            let _ = writeln!(s, "epoch.{}.train_loss={tl}", i + 1);
            let _ = writeln!(s, "epoch.{}.test_accuracy={acc}", i + 1);
            let _ = writeln!(s, "epoch.{}.test_loss={loss}", i + 1);
        }
        let _ = writeln!(s, "final_accuracy={}", self.final_accuracy);
        let _ = writeln!(s, "final_loss={}", self.final_loss);
        s
    }
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy_from_logits(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let (n, k) = logits.dims2()?;
    if n != labels.len() || n == 0 {
        return Err(Error::argument(format!("{n} logit rows for {} labels", labels.len())));
    }
    let correct = logits
        .data()
        .chunks_exact(k)
        .zip(labels)
        .filter(|(row, &y)| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            best == y
        })
        .count();
    Ok(correct as f64 / n as f64)
}

const EVAL_BATCH: usize = 256;

/// Test accuracy and mean per-sample cross-entropy in eval mode. The
/// network's mode is restored afterwards.
pub fn evaluate(network: &mut Network, dataset: &Dataset) -> Result<(f64, f64)> {
    if dataset.is_empty() {
        return Err(Error::argument("cannot evaluate on an empty dataset"));
    }
    let mode = network.mode();
    network.set_mode(Mode::Eval);
    let mut correct = 0.0;
    let mut loss = 0.0;
    let n = dataset.len();
    let result = (|| {
        for start in (0..n).step_by(EVAL_BATCH) {
            let end = (start + EVAL_BATCH).min(n);
            let x = dataset.images.slice_batch(start, end);
            let labels = &dataset.labels[start..end];
            let logits = network.forward(&x)?;
            correct += accuracy_from_logits(&logits, labels)? * (end - start) as f64;
            loss += cross_entropy_per_sample(&logits, labels)?.iter().sum::<f64>();
        }
        Ok::<_, Error>(())
    })();
    network.set_mode(mode);
    result?;
    Ok((correct / n as f64, loss / n as f64))
}

/// Loads the configured data and trains.
pub fn train(config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let splits = config.load_data()?;
    train_on(config, &splits)
}

/// Trains on prepared splits. Returns the report and the trained network.
pub fn train_network(config: &TrainConfig, splits: &Splits) -> Result<(TrainReport, Network)> {
    train_network_with(config, splits, |_| {})
}

/// [`train_network`] calling `on_epoch` with the partial report after each epoch.
pub fn train_network_with(
    config: &TrainConfig,
    splits: &Splits,
    mut on_epoch: impl FnMut(&TrainReport),
) -> Result<(TrainReport, Network)> {
    config.validate()?;
    let shape = splits.train.sample_shape();
    let mut rng = Rng::new(config.seed);
    let mut net = config
        .architecture
        .build(config.activation, shape, config.width_mult, &mut rng)?;
    let out = net
        .output_shape(&[config.batch_size, shape[0], shape[1], shape[2]])
        .map_err(|e| {
            Error::config(format!(
                "{} cannot take {:?} inputs: {e}",
                config.architecture.name(),
                shape
            ))
        })?;
    if out != [config.batch_size, NUM_CLASSES] {
        return Err(Error::config(format!(
            "{} produces {out:?}, expected (N, {NUM_CLASSES})",
            config.architecture.name()
        )));
    }
    if splits.test.sample_shape() != shape {
        return Err(Error::config("train and test image shapes differ"));
    }

    let mut stream = rng.fork();
    let mut opt = OptState::default();
    let mut report = TrainReport {
        config: config.clone(),
        train_loss: Vec::with_capacity(config.epochs),
        test_accuracy: Vec::with_capacity(config.epochs),
        test_loss: Vec::with_capacity(config.epochs),
        epoch_seconds: Vec::with_capacity(config.epochs),
        final_accuracy: 0.0,
        final_loss: 0.0,
        seed: config.seed,
        param_count: net.param_count(),
    };

    let n = splits.train.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.epochs {
        let started = Instant::now();
        net.set_mode(Mode::Train);
        stream.shuffle(&mut order);
        let mut seen = 0usize;
        let mut epoch_loss = 0.0;
        // a trailing batch of one sample cannot be batch-normalized; drop it
        for batch in order.chunks(config.batch_size).filter(|b| b.len() >= 2) {
            let mut x = splits.train.images.gather_batch(batch);
            if config.augment {
                x = augment_batch(&x, &mut stream);
            }
            let labels: Vec<usize> = batch.iter().map(|&i| splits.train.labels[i]).collect();
            net.zero_grad();
            let logits = net.forward(&x)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            net.backward(&grad)?;
            net.apply_l2(config.sgd.l2_factor);
            sgd_step(&mut net.params_mut(), &mut opt, &config.sgd)?;
            epoch_loss += loss * batch.len() as f64;
            seen += batch.len();
        }
        let (acc, loss) = evaluate(&mut net, &splits.test)?;
        report.train_loss.push(epoch_loss / seen.max(1) as f64);
        report.test_accuracy.push(acc);
        report.test_loss.push(loss);
        report.epoch_seconds.push(started.elapsed().as_secs_f64());
        on_epoch(&report);
    }
    report.final_accuracy = *report.test_accuracy.last().unwrap();
    report.final_loss = *report.test_loss.last().unwrap();
    Ok((report, net))
}

/// [`train_network`] without the network.
pub fn train_on(config: &TrainConfig, splits: &Splits) -> Result<TrainReport> {
    train_network(config, splits).map(|(r, _)| r)
}
