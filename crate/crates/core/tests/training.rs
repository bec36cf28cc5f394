use std::f64::consts::LN_10;

use colu_core::activation::ActivationKind;
use colu_core::data::{synthetic_splits, Dataset, DatasetName, Splits};
use colu_core::experiments::{
    accuracy_from_logits, evaluate, train_network, train_on, Architecture, TrainConfig,
};
use colu_core::nn::{Dense, Flatten, Layer, Mode, Network};
use colu_core::optim::SgdConfig;
use colu_core::{Error, Rng, Tensor};

fn synthetic_config(activation: ActivationKind, epochs: usize, subset: usize) -> TrainConfig {
    TrainConfig {
        activation,
        architecture: Architecture::DepthSweep(2),
        subset: Some(subset),
        epochs,
        seed: 11,
        dataset: DatasetName::Synthetic,
        ..TrainConfig::default()
    }
}

fn splits(config: &TrainConfig) -> Splits {
    config.load_data().unwrap()
}

#[test]
fn synthetic_two_conv_reaches_99_percent_in_three_epochs() {
    let config = synthetic_config(ActivationKind::Colu, 3, 2000);
    let report = train_on(&config, &splits(&config)).unwrap();
    assert_eq!(report.test_accuracy.len(), 3);
    assert!(report.final_accuracy >= 0.99, "{}", report.to_text());
}

#[test]
fn train_loss_decreases_for_every_kind() {
    let mut kinds = ActivationKind::ALL.to_vec();
    kinds.push(ActivationKind::Elu { alpha: 0.5 });
    for kind in kinds {
        let config = synthetic_config(kind, 3, 400);
        let report = train_on(&config, &splits(&config)).unwrap();
        let l = &report.train_loss;
        assert!(l[0] > l[1] && l[1] > l[2], "{kind}: {l:?}");
        assert!(report.test_accuracy.iter().all(|a| (0.0..=1.0).contains(a)));
    }
}

#[test]
fn same_seed_gives_bit_identical_reports() {
    let config = synthetic_config(ActivationKind::Mish, 2, 200);
    let data = splits(&config);
    let a = train_on(&config, &data).unwrap();
    let b = train_on(&config, &data).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let bits = |r: &colu_core::experiments::TrainReport| -> Vec<u64> {
        r.train_loss
            .iter()
            .chain(&r.test_accuracy)
            .chain(&r.test_loss)
            .map(|v| v.to_bits())
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));

    let other = TrainConfig { seed: 12, ..config.clone() };
    assert_ne!(bits(&train_on(&other, &data).unwrap()), bits(&a));
}

fn trainable(net: &Network) -> Vec<u64> {
    net.params()
        .iter()
        .flat_map(|p| p.value.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect()
}

fn copy_running_stats(from: &Network, to: &mut Network) {
    let mut stats = Vec::new();
    from.walk(|l| {
        if let Layer::BatchNorm2d(bn) = l {
            stats.push((bn.running_mean.clone(), bn.running_var.clone()));
        }
    });
    let mut it = stats.into_iter();
    to.walk_mut(|l| {
        if let Layer::BatchNorm2d(bn) = l {
            let (m, v) = it.next().unwrap();
            bn.running_mean = m;
            bn.running_var = v;
        }
    });
}

#[test]
fn zero_learning_rate_changes_nothing_trainable() {
    let mut config = synthetic_config(ActivationKind::Colu, 2, 200);
    config.sgd = SgdConfig { lr0: 0.0, ..SgdConfig::default() };
    let data = splits(&config);
    let (report, mut trained) = train_network(&config, &data).unwrap();

    let mut fresh = config
        .architecture
        .build(config.activation, data.train.sample_shape(), 1.0, &mut Rng::new(config.seed))
        .unwrap();
    assert_eq!(trainable(&trained), trainable(&fresh));

    // batchnorm running estimates are statistics, not parameters, and still track the data
    copy_running_stats(&trained, &mut fresh);
    let (acc, loss) = evaluate(&mut fresh, &data.test).unwrap();
    assert_eq!(acc.to_bits(), report.final_accuracy.to_bits());
    assert_eq!(loss.to_bits(), report.final_loss.to_bits());
    let (acc2, _) = evaluate(&mut trained, &data.test).unwrap();
    assert_eq!(acc, acc2);
}

/// Flatten -> dense with the given (10, k) weight and zero bias.
fn linear_net(weight: Tensor) -> Network {
    let outputs = weight.shape()[0];
    Network::new(vec![
        Layer::Flatten(Flatten::default()),
        Layer::Dense(Dense::from_parts(weight, Tensor::zeros(&[outputs])).unwrap()),
    ])
}

fn one_hot_dataset(labels: &[usize]) -> Dataset {
    let mut px = vec![0.0; labels.len() * 10];
    for (i, &l) in labels.iter().enumerate() {
        px[i * 10 + l] = 1.0;
    }
    Dataset::new("one_hot", Tensor::new(vec![labels.len(), 1, 1, 10], px).unwrap(), labels.to_vec())
        .unwrap()
}

#[test]
fn evaluate_examples() {
    let labels = [3, 1, 4, 1, 5, 9, 2, 6];
    let ds = one_hot_dataset(&labels);
    let mut eye = Tensor::zeros(&[10, 10]);
    for i in 0..10 {
        eye.data_mut()[i * 11] = 10.0;
    }
    let mut net = linear_net(eye);
    net.set_mode(Mode::Train);
    let (acc, _) = evaluate(&mut net, &ds).unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(net.mode(), Mode::Train);

    let mut uniform = linear_net(Tensor::zeros(&[10, 10]));
    let (acc, loss) = evaluate(&mut uniform, &ds).unwrap();
    assert!((loss - LN_10).abs() < 1e-15);
    // ties resolve to class 0, which no sample carries
    assert_eq!(acc, 0.0);

    let empty = Dataset::new("empty", Tensor::zeros(&[0, 1, 1, 10]), vec![]).unwrap();
    assert!(matches!(evaluate(&mut uniform, &empty), Err(Error::Argument(_))));
}

#[test]
fn five_hand_set_logits_three_correct() {
    let logits = Tensor::new(
        vec![5, 3],
        vec![
            0.9, 0.1, 0.0, //
            0.2, 0.7, 0.1, //
            0.1, 0.1, 0.8, //
            0.6, 0.3, 0.1, //
            0.3, 0.3, 0.4, //
        ],
    )
    .unwrap();
    let acc = accuracy_from_logits(&logits, &[0, 1, 2, 2, 0]).unwrap();
    assert!((acc - 0.6).abs() < 1e-15);
}

#[test]
fn shape_incompatible_configuration_fails_before_training() {
    let data = synthetic_splits(0, 20).unwrap();
    let config = TrainConfig {
        architecture: Architecture::DepthSweep(40),
        dataset: DatasetName::Synthetic,
        epochs: 1,
        ..TrainConfig::default()
    };
    // 40 blocks on 28x28 survive (only four pools), so force a channel mismatch instead
    let cifar_shaped = Splits {
        train: Dataset::new("c", Tensor::zeros(&[4, 3, 32, 32]), vec![0, 1, 2, 3]).unwrap(),
        test: data.test.clone(),
    };
    assert!(matches!(train_on(&config, &cifar_shaped), Err(Error::Config(_))));

    let bad_batch = TrainConfig { batch_size: 1, ..config.clone() };
    assert!(matches!(train_on(&bad_batch, &data), Err(Error::Config(_))));
    let no_dir = TrainConfig { dataset: DatasetName::Mnist, data_dir: None, ..config };
    assert!(matches!(colu_core::experiments::train(&no_dir), Err(Error::Config(_))));
}
