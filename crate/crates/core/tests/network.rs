use featacq::mlp::{sample_dropout_mask, Dense, DenseNetwork, OutputTarget};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

/// Random network with 1-3 hidden layers and a random input in `[0, 1]^d`.
fn random_case(seed: u64) -> (DenseNetwork, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..8);
    let k = rng.random_range(2..5);
    let mut dims = vec![d];
    for _ in 0..rng.random_range(1..4) {
        dims.push(rng.random_range(2..10));
    }
    dims.push(k);
    let mut net = DenseNetwork::glorot(&dims, &mut rng).unwrap();
    // Nonzero biases so rectifier kinks are not all at the origin.
    let layers = net
        .layers()
        .iter()
        .map(|l| Dense {
            biases: (0..l.out_dim).map(|_| rng.random_range(-0.5..0.5)).collect(),
            ..l.clone()
        })
        .collect();
    net = DenseNetwork::from_layers(layers).unwrap();
    let x = (0..d).map(|_| rng.random::<f64>()).collect();
    (net, x)
}

fn central_difference(net: &DenseNetwork, x: &[f64], class: usize, j: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[j] += h;
    down[j] -= h;
    (net.forward(&up).unwrap()[class] - net.forward(&down).unwrap()[class]) / (2.0 * h)
}

/// True when a rectifier input lies within `h` of its kink, where the
/// finite difference straddles the nondifferentiable point.
fn near_kink(net: &DenseNetwork, x: &[f64], h: f64) -> bool {
    let mut act = x.to_vec();
    let n = net.layers().len();
    let mut scale: f64 = 1.0;
    for (l, layer) in net.layers().iter().enumerate() {
        let z: Vec<f64> = (0..layer.out_dim)
            .map(|o| layer.biases[o] + layer.row(o).iter().zip(&act).map(|(w, a)| w * a).sum::<f64>())
            .collect();
        scale *= layer.weights.iter().fold(1.0f64, |m, w| m.max(w.abs())) * layer.in_dim as f64;
        if l + 1 < n {
            if z.iter().any(|v| v.abs() < 10.0 * h * scale) {
                return true;
            }
            act = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    false
}

#[test]
fn input_gradient_matches_finite_differences() {
    let h = 1e-5;
    let mut checked = 0;
    let mut seed = 0;
    while checked < 200 {
        seed += 1;
        let (net, x) = random_case(seed);
        if near_kink(&net, &x, h) {
            continue;
        }
        let class = (seed as usize) % net.class_count();
        let g = net.input_gradient(&x, class).unwrap();
        for (j, &gj) in g.iter().enumerate() {
            let fd = central_difference(&net, &x, class, j, h);
            let err = (gj - fd).abs() / gj.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-4, "seed {seed} class {class} feature {j}: {gj} vs {fd}");
        }
        checked += 1;
    }
}

#[test]
fn hand_computed_two_by_two_posterior() {
    // logits = [0.5 + 0.5 + 0.1, -0.5 + 0.125 - 0.2] = [1.1, -0.575]
    let net = DenseNetwork::from_layers(vec![Dense {
        in_dim: 2,
        out_dim: 2,
        weights: vec![1.0, 2.0, -1.0, 0.5],
        biases: vec![0.1, -0.2],
    }])
    .unwrap();
    let p = net.forward(&[0.5, 0.25]).unwrap();
    let p0 = 1.0 / (1.0 + (-1.675f64).exp());
    assert!((p[0] - p0).abs() < 1e-15);
    assert!((p[1] - (1.0 - p0)).abs() < 1e-15);
}

#[test]
fn mean_path_jacobian_agrees_with_pointwise_average() {
    for seed in 0..30 {
        let (net, x) = random_case(seed);
        let from: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let m = 17;
        let fast = net.mean_path_jacobian(&from, &x, m, OutputTarget::Posterior).unwrap();
        for k in 0..net.class_count() {
            let mut avg = vec![0.0; x.len()];
            for s in 1..=m {
                let t = s as f64 / m as f64;
                let p: Vec<f64> = from.iter().zip(&x).map(|(a, b)| a + t * (b - a)).collect();
                for (a, g) in avg.iter_mut().zip(net.input_gradient(&p, k).unwrap()) {
                    *a += g / m as f64;
                }
            }
            for (i, a) in avg.iter().enumerate() {
                assert!((fast.get(k, i) - a).abs() < 1e-12, "seed {seed} k {k} i {i}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posterior_is_a_distribution(seed in any::<u64>(), scale in 0.0f64..50.0) {
        let (net, x) = random_case(seed);
        let x: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let p = net.forward(&x).unwrap();
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_class_gradients_are_antisymmetric(seed in any::<u64>(), x in prop::collection::vec(0.0f64..1.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = DenseNetwork::glorot(&[4, 6, 3, 2], &mut rng).unwrap();
        let g0 = net.input_gradient(&x, 0).unwrap();
        let g1 = net.input_gradient(&x, 1).unwrap();
        for (a, b) in g0.iter().zip(&g1) {
            prop_assert!((a + b).abs() <= 1e-15 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>()) {
        let (net, x) = random_case(seed);
        prop_assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }
}

#[test]
fn dropout_mean_drop_fraction_is_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 100_000;
    let d = 64;
    let dropped: usize = (0..n)
        .map(|_| {
            sample_dropout_mask(d, 1.5, 1.5, &mut rng)
                .unwrap()
                .iter()
                .filter(|&&keep| !keep)
                .count()
        })
        .sum();
    let mean = dropped as f64 / (n * d) as f64;
    assert!((mean - 0.5).abs() < 0.01, "mean drop fraction {mean}");
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn dropout_fraction_variance_matches_compound_distribution() {
    let n = 100_000;
    let d = 64;
    // Oracle: simulate the compound draw directly, p ~ Beta then a Binomial
    // count built from independent uniforms.
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(1234);
    let beta = Beta::new(1.5, 1.5).unwrap();
    let oracle: Vec<f64> = (0..n)
        .map(|_| {
            let p: f64 = beta.sample(&mut oracle_rng);
            (0..d).filter(|_| oracle_rng.random::<f64>() < p).count() as f64 / d as f64
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let observed: Vec<f64> = (0..n)
        .map(|_| {
            let m = sample_dropout_mask(d, 1.5, 1.5, &mut rng).unwrap();
            m.iter().filter(|&&keep| !keep).count() as f64 / d as f64
        })
        .collect();
    // Var[Beta(1.5, 1.5)] = 1/16, plus the binomial term E[p(1-p)]/d.
    let analytic = 0.0625 + (0.25 - 0.0625) / d as f64;
    let (vo, vs) = (variance(&oracle), variance(&observed));
    assert!((vo - analytic).abs() < 0.005, "oracle variance {vo}");
    assert!((vs - vo).abs() < 0.005, "sampled variance {vs} vs oracle {vo}");
}
