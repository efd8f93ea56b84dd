mod common;

use audiostego::net::{Architecture, StegoNet, Tape};
use audiostego::training::LossWeights;
use audiostego::PlanarTensor;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-3;
const TOLERANCE: f64 = 1e-4;
const FLOOR: f64 = 1e-8;
const SEED: u64 = 6;

fn toy(seed: u64) -> (StegoNet<f64>, PlanarTensor<f64>, PlanarTensor<f64>) {
    let net = StegoNet::<f32>::init(Architecture::for_secret(2, 4), seed).unwrap().cast();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let cover = PlanarTensor::from_fn(8, 8, 3, |_, _, _| rng.gen_range(0.0..1.0));
    let secret = PlanarTensor::from_fn(8, 8, 2, |_, _, _| rng.gen_range(-0.5..0.5));
    (net, cover, secret)
}

#[test]
fn library_forward_matches_naive_oracle() {
    let (net, cover, secret) = toy(5);
    let mut tape = Tape::new();
    let out = net.forward_recorded(&cover, &secret, &mut tape).unwrap();
    let (container, revealed) = naive_forward(&net, &cover, &secret, &mut Masks::default());
    for (a, b) in planes(&out.container).iter().zip(&container) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    for (a, b) in planes(&out.revealed).iter().zip(&revealed) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn every_parameter_matches_central_differences() {
    let (net, cover, secret) = toy(SEED);
    let w = LossWeights::new(1.0, 1.0).unwrap();
    let r = gradient_check(&net, &cover, &secret, &w, STEP, TOLERANCE, FLOOR);
    println!("{r:?}");
    assert_eq!(r.params, net.param_count());
    assert_eq!(r.failures, 0, "worst relative error {} at {}", r.max_rel_error, r.worst_index);
}

#[test]
fn doubling_loss_scale_doubles_gradients() {
    let (net, cover, secret) = toy(2);
    let w = LossWeights::default();
    let g1 = library_gradient(&net, &cover, &secret, &w, 1.0);
    let g2 = library_gradient(&net, &cover, &secret, &w, 2.0);
    assert!(g1.iter().any(|&g| g != 0.0));
    for (a, b) in g1.iter().zip(&g2) {
        assert_eq!(2.0 * a, *b);
    }
}

#[test]
fn branch_read_by_zero_weights_gets_zero_gradient() {
    let (mut net, cover, secret) = toy(3);
    let f = 4;
    let last = net.reveal.layers().len() - 1;
    // Final reveal conv: weights reading stage-2 branch 0 (channels 0..f).
    {
        let layer = &mut net.reveal.layers_mut()[last];
        let k = layer.kernel;
        for o in 0..layer.out_channels {
            for c in 0..f {
                for t in 0..k * k {
                    layer.weight[(o * layer.in_channels + c) * k * k + t] = 0.0;
                }
            }
        }
    }
    let mut tape = Tape::new();
    let out = net.forward_recorded(&cover, &secret, &mut tape).unwrap();
    let g = audiostego::training::joint_loss_gradient(
        &cover,
        &out.container,
        &secret,
        &out.revealed,
        &LossWeights::default(),
        1.0,
    )
    .unwrap();
    let mut grads = StegoNet::zeros(net.architecture()).unwrap();
    net.backward(&tape, &g.d_container, &g.d_revealed, &mut grads).unwrap();
    let stage2_branch0 = &grads.reveal.layers()[last - 3];
    assert!(stage2_branch0.weight.iter().chain(&stage2_branch0.bias).all(|&v| v == 0.0));
    assert!(grads.reveal.layers()[last - 2].weight.iter().any(|&v| v != 0.0));
}

#[test]
fn backward_without_forward_is_an_error() {
    let (net, _, _) = toy(1);
    let t = PlanarTensor::<f64>::zeros(8, 8, 3);
    let s = PlanarTensor::<f64>::zeros(8, 8, 2);
    let mut grads = StegoNet::zeros(net.architecture()).unwrap();
    assert!(net.backward(&Tape::new(), &t, &s, &mut grads).is_err());
}

