//! Command-line front end for the `colu` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::activation::ActivationKind;
use crate::analysis::classify;
use crate::data::DatasetName;
use crate::error::{Error, Result};
use crate::experiments::{
    emit_activation_plots, run_depth_sweep, run_repeated, sweep_csv, train_network_with,
    Architecture, TrainConfig,
};
use crate::nn::save_parameters;
use crate::optim::{DecayMode, SgdConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// The five activations of the MNIST depth sweep.
pub const SWEEP_ACTIVATIONS: [ActivationKind; 5] = [
    ActivationKind::Colu,
    ActivationKind::Selu,
    ActivationKind::Mish,
    ActivationKind::Swish,
    ActivationKind::Relu,
];

#[derive(Parser, Debug)]
#[command(name = "colu", version, about = "CoLU activation analysis and CNN experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Print the property table of every activation (CSV with --out).
    Classify,
    /// Write SVG plots of each activation and its derivative into --out.
    Plot,
    /// Train one network and print a key=value report.
    Train,
    /// Train every (depth, activation) cell and print CSV.
    Sweep,
    /// Repeat a training run over seeds and print mean and std.
    Repeat,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchArg {
    #[value(alias = "depth_sweep")]
    DepthSweep,
    #[value(alias = "small_cnn8")]
    SmallCnn8,
    Vgg13,
    Resnet9,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayArg {
    Lr,
    Weight,
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Activation kind(s), comma separated (`elu:0.5` sets alpha).
    #[arg(long, global = true, value_delimiter = ',')]
    pub activation: Option<Vec<ActivationKind>>,
    #[arg(long, global = true, value_enum, default_value = "small-cnn8")]
    pub arch: ArchArg,
    /// Conv depth(s) for the depth-sweep family, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub depth: Option<Vec<usize>>,
    #[arg(long, global = true, default_value = "synthetic")]
    pub dataset: DatasetName,
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Train on this many samples of a seeded shuffle.
    #[arg(long, global = true)]
    pub subset: Option<usize>,
    #[arg(long, global = true, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, global = true, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, global = true, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub decay: f64,
    #[arg(long, global = true, value_enum, default_value = "lr")]
    pub decay_mode: DecayArg,
    #[arg(long, global = true, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Seed for subset selection and synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long, global = true, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub width_mult: f64,
    /// Random crop and flip (default: on for cifar10 only).
    #[arg(long, global = true, conflicts_with = "no_augment")]
    pub augment: bool,
    #[arg(long, global = true)]
    pub no_augment: bool,
    /// Output file (directory for `plot`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Save trained parameters (train only).
    #[arg(long, global = true)]
    pub save: Option<PathBuf>,
}

impl Options {
    fn activations(&self, default: &[ActivationKind]) -> Vec<ActivationKind> {
        self.activation.clone().unwrap_or_else(|| default.to_vec())
    }

    fn single_activation(&self) -> Result<ActivationKind> {
        match self.activations(&[ActivationKind::Colu]).as_slice() {
            [k] => Ok(*k),
            many => Err(Error::config(format!(
                "expected one activation, got {}",
                many.len()
            ))),
        }
    }

    fn architecture(&self) -> Result<Architecture> {
        Ok(match self.arch {
            ArchArg::DepthSweep => match self.depth.as_deref() {
                Some([n]) => Architecture::DepthSweep(*n),
                _ => return Err(Error::config("--arch depth-sweep needs a single --depth")),
            },
            ArchArg::SmallCnn8 => Architecture::SmallCnn8,
            ArchArg::Vgg13 => Architecture::Vgg13,
            ArchArg::Resnet9 => Architecture::Resnet9,
        })
    }

    /// Training configuration for `activation` and `architecture`.
    pub fn train_config(&self, activation: ActivationKind, architecture: Architecture) -> TrainConfig {
        TrainConfig {
            activation,
            architecture,
            width_mult: self.width_mult,
            subset: self.subset,
            sgd: SgdConfig {
                lr0: self.lr,
                momentum: self.momentum,
                decay: self.decay,
                l2_factor: self.l2,
                decay_mode: match self.decay_mode {
                    DecayArg::Lr => DecayMode::LrDecay,
                    DecayArg::Weight => DecayMode::WeightDecay,
                },
            },
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            dataset: self.dataset,
            data_dir: self.data_dir.clone(),
            augment: if self.augment || self.no_augment {
                self.augment
            } else {
                self.dataset == DatasetName::Cifar10
            },
            data_seed: self.data_seed,
        }
    }
}

/// Property table as CSV.
pub fn classify_csv() -> String {
    let mut s = String::from(
        "activation,global_min_x,global_min_f,bounded_below,bounded_above,monotonic,saturates_above,kink_at_zero\n",
    );
    for kind in ActivationKind::ALL {
        let r = classify(kind);
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            kind.cli_name(),
            r.global_min_x,
            r.global_min_f,
            r.bounded_below,
            r.bounded_above,
            r.monotonic,
            r.saturates_above,
            r.kink_at_zero
        ));
    }
    s
}

fn classify_table() -> String {
    let yn = |b: bool| if b { "yes" } else { "no" };
    let mut s = format!(
        "{:<9} {:>12} {:>12} {:>8} {:>8} {:>10} {:>10} {:>5}\n",
        "kind", "min x", "min f", "bnd.low", "bnd.high", "monotonic", "saturates", "kink"
    );
    for kind in ActivationKind::ALL {
        let r = classify(kind);
        s.push_str(&format!(
            "{:<9} {:>12.6} {:>12.6} {:>8} {:>8} {:>10} {:>10} {:>5}\n",
            kind.to_string(),
            r.global_min_x,
            r.global_min_f,
            yn(r.bounded_below),
            yn(r.bounded_above),
            yn(r.monotonic),
            yn(r.saturates_above),
            yn(r.kink_at_zero)
        ));
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Runs a parsed command, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let o = &cli.opts;
    match cli.command {
        Command::Classify => {
            stdout.write_all(classify_table().as_bytes())?;
            if let Some(out) = &o.out {
                write_file(out, &classify_csv())?;
            }
        }
        Command::Plot => {
            let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("plots"));
            for path in emit_activation_plots(&dir)? {
                writeln!(stdout, "{}", path.display())?;
            }
        }
        Command::Train => {
            let config = o.train_config(o.single_activation()?, o.architecture()?);
            config.validate()?;
            let splits = config.load_data()?;
            let (report, net) = train_network_with(&config, &splits, |r| {
                let e = r.test_accuracy.len();
                eprintln!(
                    "epoch {e}/{}: train_loss={:.5} test_accuracy={:.4} ({:.1}s)",
                    config.epochs,
                    r.train_loss[e - 1],
                    r.test_accuracy[e - 1],
                    r.epoch_seconds[e - 1]
                );
            })?;
            let text = report.to_text();
            stdout.write_all(text.as_bytes())?;
            if let Some(out) = &o.out {
                write_file(out, &text)?;
            }
            if let Some(path) = &o.save {
                save_parameters(&net, path)?;
            }
        }
        Command::Sweep => {
            let depths = o.depth.clone().unwrap_or_else(|| vec![2, 4, 6]);
            let acts = o.activations(&SWEEP_ACTIVATIONS);
            let base = o.train_config(acts[0], Architecture::DepthSweep(depths[0]));
            let csv = sweep_csv(&run_depth_sweep(&base, &depths, &acts)?);
            stdout.write_all(csv.as_bytes())?;
            if let Some(out) = &o.out {
                write_file(out, &csv)?;
            }
        }
        Command::Repeat => {
            let config = o.train_config(o.single_activation()?, o.architecture()?);
            let stats = run_repeated(&config, o.runs)?;
            let csv = stats.to_csv();
            stdout.write_all(csv.as_bytes())?;
            stdout.write_all(stats.summary().as_bytes())?;
            if let Some(out) = &o.out {
                write_file(out, &csv)?;
            }
        }
    }
    Ok(())
}

fn fetch_hint(dataset: DatasetName) -> Option<&'static str> {
    match dataset {
        DatasetName::Mnist => Some(
            "MNIST: download train-images-idx3-ubyte.gz, train-labels-idx1-ubyte.gz, \
             t10k-images-idx3-ubyte.gz and t10k-labels-idx1-ubyte.gz from \
             https://yann.lecun.com/exdb/mnist/ (or a mirror) into --data-dir; \
             gzipped or plain files both work.",
        ),
        DatasetName::FashionMnist => Some(
            "Fashion-MNIST: download the four *-idx*-ubyte.gz files from \
             https://github.com/zalandoresearch/fashion-mnist (data/fashion) into --data-dir.",
        ),
        DatasetName::Cifar10 => Some(
            "CIFAR-10: download cifar-10-binary.tar.gz from \
             https://www.cs.toronto.edu/~kriz/cifar.html and extract it into --data-dir \
             (data_batch_1.bin ... data_batch_5.bin, test_batch.bin).",
        ),
        DatasetName::Synthetic => None,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code: 0 on success, 1 for usage or configuration errors, 2 for data and
/// file errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                if let Some(hint) = fetch_hint(cli.opts.dataset) {
                    eprintln!("{hint}");
                }
                EXIT_DATA
            } else {
                EXIT_CONFIG
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("colu").chain(args.iter().copied()))
    }

    #[test]
    fn flags_after_subcommand() {
        let cli = parse(&["train", "--activation", "mish", "--epochs", "3", "--lr", "0.01"]).unwrap();
        assert_eq!(cli.command, Command::Train);
        assert_eq!(cli.opts.arch, ArchArg::SmallCnn8);
        assert_eq!(cli.opts.single_activation().unwrap(), ActivationKind::Mish);
        let c = cli.opts.train_config(ActivationKind::Mish, Architecture::SmallCnn8);
        assert_eq!(c.epochs, 3);
        assert_eq!(c.sgd.lr0, 0.01);
        assert_eq!(c.batch_size, 64);
        assert!(!c.augment);
        let cli = parse(&["train", "--arch", "small_cnn8"]).unwrap();
        assert_eq!(cli.opts.arch, ArchArg::SmallCnn8);
    }

    #[test]
    fn lists_and_depth_sweep() {
        let cli = parse(&["sweep", "--activation", "colu,elu:0.5", "--depth", "2,3"]).unwrap();
        assert_eq!(
            cli.opts.activations(&[]),
            vec![ActivationKind::Colu, ActivationKind::Elu { alpha: 0.5 }]
        );
        assert!(cli.opts.architecture().is_ok());
        let cli = parse(&["train", "--arch", "depth-sweep"]).unwrap();
        assert!(matches!(cli.opts.architecture(), Err(Error::Config(_))));
        let cli = parse(&["train", "--arch", "depth_sweep", "--depth", "5"]).unwrap();
        assert_eq!(cli.opts.architecture().unwrap(), Architecture::DepthSweep(5));
    }

    #[test]
    fn rejects_unknown_flags_and_values() {
        assert!(parse(&["train", "--bogus"]).is_err());
        assert!(parse(&["train", "--activation", "prelu"]).is_err());
        assert!(parse(&["train", "--dataset", "imagenet"]).is_err());
        assert!(parse(&["train", "--augment", "--no-augment"]).is_err());
        assert!(parse(&[]).is_err());
    }

    #[test]
    fn cifar_augments_by_default() {
        let cli = parse(&["train", "--dataset", "cifar10"]).unwrap();
        assert!(cli.opts.train_config(ActivationKind::Colu, Architecture::Resnet9).augment);
        let cli = parse(&["train", "--dataset", "cifar10", "--no-augment"]).unwrap();
        assert!(!cli.opts.train_config(ActivationKind::Colu, Architecture::Resnet9).augment);
    }

    #[test]
    fn classify_csv_has_nine_rows() {
        let csv = classify_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.lines().nth(1).unwrap().starts_with("colu,"));
    }
}
