use audiostego::net::{Architecture, StegoNet};
use audiostego::training::{Control, Example, LossWeights, Pairing, TrainConfig, TrainLog, Trainer};
use audiostego::{Method, PlanarTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig {
        method: Method::Stft,
        feature_maps: 4,
        batch_size: 1,
        seed,
        pairing: Pairing::Fixed,
        ..TrainConfig::default()
    }
}

fn toy_examples(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Example {
            cover: PlanarTensor::from_fn(8, 8, 3, |_, _, _| rng.gen_range(0.1..0.9)),
            secret: PlanarTensor::from_fn(8, 8, 2, |_, _, _| rng.gen_range(-0.3..0.3)),
        })
        .collect()
}

#[test]
fn single_pair_is_memorized() {
    let ex = toy_examples(1, 1).pop().unwrap();
    let mut trainer = Trainer::new(toy_config(0)).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..5000 {
        last = trainer.train_step(&[(&ex.cover, &ex.secret)]).unwrap().loss;
        if last < 1e-3 {
            break;
        }
    }
    assert!(last < 1e-3, "loss {last} after {} steps", trainer.steps_taken());
}

#[test]
fn zero_learning_rate_keeps_loss_constant() {
    let ex = toy_examples(1, 2).pop().unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.0,
        ..toy_config(3)
    };
    let mut trainer = Trainer::new(cfg).unwrap();
    let losses: Vec<f64> = (0..5)
        .map(|_| trainer.train_step(&[(&ex.cover, &ex.secret)]).unwrap().loss)
        .collect();
    assert!(losses.windows(2).all(|w| w[0] == w[1]), "{losses:?}");
}

#[test]
fn same_seed_gives_identical_curves() {
    let train = toy_examples(6, 4);
    let val = toy_examples(2, 5);
    let run = || {
        let cfg = TrainConfig {
            batch_size: 2,
            epochs: 3,
            pairing: Pairing::ShufflePerEpoch,
            ..toy_config(9)
        };
        let mut log = TrainLog::new();
        let mut trainer = Trainer::new(cfg).unwrap();
        let outcome = trainer.fit(&train, &val, &mut log, |_, _| Control::Continue).unwrap();
        (log.entries, outcome.best)
    };
    let (a, net_a) = run();
    let (b, net_b) = run();
    assert_eq!(a, b);
    assert_eq!(net_a, net_b);
    assert_eq!(a.iter().filter(|e| e.val_loss.is_some()).count(), 3);
}

#[test]
fn hook_stops_training_and_max_steps_is_respected() {
    let train = toy_examples(4, 6);
    let mut trainer = Trainer::new(toy_config(1)).unwrap();
    let mut log = TrainLog::new();
    let out = trainer
        .fit(&train, &[], &mut log, |s, _| if s.step == 3 { Control::Stop } else { Control::Continue })
        .unwrap();
    assert_eq!(out.steps, 3);

    let cfg = TrainConfig {
        max_steps: Some(5),
        ..toy_config(1)
    };
    let mut trainer = Trainer::new(cfg).unwrap();
    let out = trainer.fit(&train, &[], &mut TrainLog::new(), |_, _| Control::Continue).unwrap();
    assert_eq!(out.steps, 5);
}

#[test]
fn non_finite_loss_reports_step() {
    let ex = toy_examples(1, 7).pop().unwrap();
    let mut net = StegoNet::<f32>::init(Architecture::for_secret(2, 4), 0).unwrap();
    for p in net.reveal.params_mut() {
        *p = f32::MAX;
    }
    let mut trainer = Trainer::with_net(net, toy_config(0)).unwrap();
    match trainer.train_step(&[(&ex.cover, &ex.secret)]) {
        Err(audiostego::StegoError::NonFiniteLoss { step }) => assert_eq!(step, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn checkpoints_and_log_file_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let train = toy_examples(4, 8);
    let cfg = TrainConfig {
        checkpoint_every: 2,
        checkpoint_dir: Some(dir.path().join("ckpt")),
        max_steps: Some(4),
        ..toy_config(2)
    };
    let log_path = dir.path().join("train.log");
    let mut log = TrainLog::with_file(&log_path);
    let mut trainer = Trainer::new(cfg).unwrap();
    trainer.fit(&train, &[], &mut log, |_, _| Control::Continue).unwrap();
    assert!(dir.path().join("ckpt/step-000002.bin").exists());
    assert!(dir.path().join("ckpt/step-000004.bin").exists());
    let text = std::fs::read_to_string(&log_path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().next().unwrap().starts_with("1, 1, "));
    let net = audiostego::net::load_weights(dir.path().join("ckpt/step-000004.bin"), None).unwrap();
    assert_eq!(&net, trainer.net());
}

#[test]
fn loss_weight_scaling_is_bit_identical() {
    let ex = toy_examples(1, 9).pop().unwrap();
    let mut curves = Vec::new();
    for (a, b) in [(1.0, 1.0), (3.0, 3.0), (2.0, 1.0), (8.0, 4.0)] {
        let cfg = TrainConfig {
            loss_weights: LossWeights::new(a, b).unwrap(),
            ..toy_config(4)
        };
        let mut trainer = Trainer::new(cfg).unwrap();
        let c: Vec<f64> = (0..3)
            .map(|_| trainer.train_step(&[(&ex.cover, &ex.secret)]).unwrap().loss)
            .collect();
        curves.push((c, trainer.into_net()));
    }
    assert_eq!(curves[0], curves[1]);
    assert_eq!(curves[2], curves[3]);
    assert_ne!(curves[0].0, curves[2].0);
}
