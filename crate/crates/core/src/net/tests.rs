use rand::Rng as _;

use super::*;
use crate::error::Error;
use crate::exec::Exec;
use crate::nepdf::{build_nepdf, Label, NepdfMatrix, NepdfOptions, PairSample};
use crate::rng;

fn random_inputs(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| (0..k * k).map(|_| r.random::<f64>()).collect()).collect()
}

fn views(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

/// 16x16 images with a noisy blob in the top-left (class 0) or bottom-right
/// (class 1) quadrant.
fn corner_dataset(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let class = i % 2;
        let mut img = vec![0.0; 256];
        for _ in 0..30 {
            let (a, b) = (r.random_range(0..6), r.random_range(0..6));
            let (o, p) = if class == 0 { (a, b) } else { (15 - a, 15 - b) };
            img[o * 16 + p] += 1.0;
        }
        let max = img.iter().copied().fold(0.0, f64::max);
        img.iter_mut().for_each(|v| *v /= max);
        xs.push(img);
        ys.push(class);
    }
    (xs, ys)
}

fn samples<'a>(xs: &'a [Vec<f64>], ys: &[usize], groups: &'a [String]) -> Vec<Sample<'a>> {
    xs.iter().zip(ys).zip(groups).map(|((x, &t), g)| Sample { input: x, target: t, group: g }).collect()
}

fn accuracy<T: Scalar>(net: &Network<T>, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
    let probs = net.forward(&views(xs)).unwrap();
    probs.iter().zip(ys).filter(|(p, &t)| argmax(p) == t).count() as f64 / ys.len() as f64
}

#[test]
fn init_is_deterministic() {
    let a = Network::<f32>::new(16, Task::ThreeClass, None, 7).unwrap();
    let b = Network::<f32>::new(16, Task::ThreeClass, None, 7).unwrap();
    let c = Network::<f32>::new(16, Task::ThreeClass, None, 8).unwrap();
    assert_eq!(a.params(), b.params());
    assert_ne!(a.params(), c.params());
    let bound = (6.0f32 / 9.0).sqrt();
    assert!(a.params()[..144].iter().all(|w| w.abs() <= bound));
    assert!(a.params()[144..160].iter().all(|&b| b == 0.0));
}

#[test]
fn tiny_input_rejected() {
    assert!(matches!(Network::<f32>::new(2, Task::ThreeClass, None, 0), Err(Error::BadArchitecture(_))));
    assert!(matches!(
        Network::<f32>::new(2, Task::ThreeClass, Some(&default_arch()), 0),
        Err(Error::BadArchitecture(_))
    ));
}

#[test]
fn softmax_rows_sum_to_one() {
    let net = Network::<f32>::new(16, Task::ThreeClass, None, 1).unwrap();
    let xs = random_inputs(5, 16, 2);
    for p in net.forward(&views(&xs)).unwrap() {
        assert_eq!(p.len(), 3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }
    let bin = Network::<f32>::new(16, Task::Direction, None, 1).unwrap();
    for p in bin.forward(&views(&xs)).unwrap() {
        assert_eq!(p.len(), 2);
        assert_eq!(p[1], 1.0 - p[0]);
    }
}

#[test]
fn zero_weights_give_uniform_output() {
    let mut net = Network::<f64>::new(16, Task::ThreeClass, None, 1).unwrap();
    net.params_mut().fill(0.0);
    let p = net.forward(&[&[0.0; 256][..]]).unwrap();
    for v in &p[0] {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn forward_is_bit_deterministic_and_exec_independent() {
    let net = Network::<f32>::new(16, Task::ThreeClass, None, 3).unwrap();
    let xs = random_inputs(7, 16, 4);
    let a = net.forward_batch(&views(&xs), Exec::Sequential).unwrap();
    let b = net.forward_batch(&views(&xs), Exec::default()).unwrap();
    let c = net.forward_batch(&views(&xs), Exec::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn shape_mismatch() {
    let net = Network::<f32>::new(16, Task::ThreeClass, None, 3).unwrap();
    assert!(matches!(net.forward(&[&[0.0; 255][..]]), Err(Error::ShapeMismatch { .. })));
    assert!(matches!(loss(&[vec![0.5, 0.5]], &[0, 1]), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn loss_examples() {
    assert_eq!(loss(&[vec![0.0, 1.0, 0.0]], &[1]).unwrap(), 0.0);
    let third = 1.0 / 3.0;
    assert!((loss(&[vec![third; 3]], &[2]).unwrap() - 3f64.ln()).abs() < 1e-12);
    let a = loss(&[vec![0.2, 0.8]], &[0]).unwrap();
    let b = loss(&[vec![0.6, 0.4]], &[1]).unwrap();
    let both = loss(&[vec![0.2, 0.8], vec![0.6, 0.4]], &[0, 1]).unwrap();
    assert!((both - (a + b) / 2.0).abs() < 1e-15);
    // confident mistakes are clamped, not infinite
    assert!((loss(&[vec![0.0, 1.0]], &[0]).unwrap() - (-PROB_FLOOR.ln())).abs() < 1e-9);
}

#[test]
fn zero_input_has_zero_conv_weight_gradients() {
    let net = Network::<f64>::new(16, Task::ThreeClass, None, 5).unwrap();
    let zeros = vec![0.0; 256];
    let (_, g) = net.batch_gradient(&[&zeros[..], &zeros[..]], &[0, 2], Exec::Sequential).unwrap();
    for (name, off, len) in net.param_arrays() {
        if name.contains("conv") && name.ends_with("weight") {
            assert!(g[off..off + len].iter().all(|&v| v == 0.0), "{name}");
        }
        if name.contains("output.bias") {
            assert!(g[off..off + len].iter().any(|&v| v != 0.0));
        }
    }
}

#[test]
fn duplicated_batch_has_same_gradient() {
    let net = Network::<f64>::new(8, Task::ThreeClass, Some(&gradcheck_arch()), 5).unwrap();
    let xs = random_inputs(2, 8, 6);
    let v = views(&xs);
    let (l1, g1) = net.batch_gradient(&v, &[0, 1], Exec::Sequential).unwrap();
    let (l2, g2) = net.batch_gradient(&[v[0], v[1], v[0], v[1]], &[0, 1, 0, 1], Exec::Sequential).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for (a, b) in g1.iter().zip(&g2) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3));
    }
}

#[test]
fn gradient_independent_of_exec() {
    let net = Network::<f32>::new(16, Task::ThreeClass, None, 9).unwrap();
    let xs = random_inputs(6, 16, 10);
    let t = [0, 1, 2, 0, 1, 2];
    let a = net.batch_gradient(&views(&xs), &t, Exec::Sequential).unwrap();
    let b = net.batch_gradient(&views(&xs), &t, Exec::default()).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}

#[test]
fn default_network_gradients_match_finite_differences() {
    // Spot-check the full-size default stack at double precision.
    let net = Network::<f64>::new(16, Task::ThreeClass, None, 21).unwrap();
    let xs = random_inputs(2, 16, 22);
    let v = views(&xs);
    let t = [0, 2];
    let (_, g) = net.batch_gradient(&v, &t, Exec::Sequential).unwrap();
    let mut probe = net.clone();
    for (_, off, len) in net.param_arrays() {
        for i in [off, off + len / 2, off + len - 1] {
            let h = 1e-5;
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = probe.batch_loss(&v, &t, Exec::Sequential).unwrap();
            probe.params_mut()[i] = orig - h;
            let down = probe.batch_loss(&v, &t, Exec::Sequential).unwrap();
            probe.params_mut()[i] = orig;
            let num = (up - down) / (2.0 * h);
            let rel = (num - g[i]).abs() / num.abs().max(g[i].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: analytic {} numeric {num}", g[i]);
        }
    }
}

#[test]
fn learns_separable_corners() {
    let (xs, ys) = corner_dataset(200, 1);
    let groups: Vec<String> = (0..200).map(|i| format!("g{i}")).collect();
    let mut net = Network::<f32>::new(16, Task::Direction, None, 2).unwrap();
    let cfg = TrainConfig { epochs: 10, early_stop_patience: 0, seed: 3, ..Default::default() };
    let hist = train(&mut net, &samples(&xs, &ys, &groups), &cfg, Exec::default()).unwrap();
    assert_eq!(hist.len(), 10);
    assert!(accuracy(&net, &xs, &ys) >= 0.99);
}

#[test]
fn held_out_accuracy_on_corners() {
    let (xs, ys) = corner_dataset(250, 11);
    let groups: Vec<String> = (0..250).map(|i| format!("g{i}")).collect();
    let (train_x, test_x) = xs.split_at(200);
    let (train_y, test_y) = ys.split_at(200);
    let mut net = Network::<f32>::new(16, Task::Direction, None, 12).unwrap();
    let cfg = TrainConfig { epochs: 10, seed: 13, ..Default::default() };
    train(&mut net, &samples(train_x, train_y, &groups), &cfg, Exec::default()).unwrap();
    assert!(accuracy(&net, test_x, test_y) >= 0.95);
}

#[test]
fn first_epoch_descends_at_small_learning_rate() {
    let (xs, ys) = corner_dataset(200, 4);
    let groups: Vec<String> = (0..200).map(|i| format!("g{i}")).collect();
    let mut net = Network::<f32>::new(16, Task::Direction, None, 5).unwrap();
    let before = net.batch_loss(&views(&xs), &ys, Exec::default()).unwrap();
    let cfg = TrainConfig { epochs: 1, learning_rate: 1e-3, early_stop_patience: 0, seed: 6, ..Default::default() };
    train(&mut net, &samples(&xs, &ys, &groups), &cfg, Exec::default()).unwrap();
    let after = net.batch_loss(&views(&xs), &ys, Exec::default()).unwrap();
    assert!(after <= before, "{before} -> {after}");
}

#[test]
fn training_is_deterministic() {
    let (xs, ys) = corner_dataset(64, 7);
    let groups: Vec<String> = (0..64).map(|i| format!("g{}", i / 2)).collect();
    let cfg = TrainConfig { epochs: 3, seed: 8, ..Default::default() };
    let run = |exec| {
        let mut net = Network::<f32>::new(16, Task::Direction, None, 9).unwrap();
        let h = train(&mut net, &samples(&xs, &ys, &groups), &cfg, exec).unwrap();
        (net, h)
    };
    let (a, ha) = run(Exec::default());
    let (b, hb) = run(Exec::default());
    let (c, _) = run(Exec::Sequential);
    assert_eq!(a.params(), b.params());
    assert_eq!(a.params(), c.params());
    assert_eq!(ha, hb);
}

#[test]
fn zero_patience_runs_all_epochs() {
    let (xs, ys) = corner_dataset(40, 8);
    let groups: Vec<String> = (0..40).map(|i| format!("g{i}")).collect();
    let mut net = Network::<f32>::new(16, Task::Direction, None, 1).unwrap();
    // A huge learning rate makes validation loss worsen quickly.
    let cfg = TrainConfig { epochs: 6, early_stop_patience: 0, learning_rate: 5.0, seed: 2, ..Default::default() };
    assert_eq!(train(&mut net, &samples(&xs, &ys, &groups), &cfg, Exec::default()).unwrap().len(), 6);
}

#[test]
fn train_errors() {
    let mut net = Network::<f32>::new(16, Task::Direction, None, 1).unwrap();
    let cfg = TrainConfig::default();
    assert!(matches!(train(&mut net, &[], &cfg, Exec::default()), Err(Error::EmptyDataset)));
    let x = vec![0.0; 256];
    let s = [Sample { input: &x, target: 2, group: "a" }];
    assert!(matches!(train(&mut net, &s, &cfg, Exec::default()), Err(Error::LabelOutOfRange { .. })));
    assert!(matches!(Task::Direction.target(Label::Independent), Err(Error::LabelOutOfRange { .. })));
}

fn some_matrices() -> Vec<NepdfMatrix> {
    let mut r = rng::seeded(30);
    (0..5)
        .map(|_| {
            let x: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
            let y: Vec<f64> = x.iter().map(|v| v * v + 0.1 * r.random::<f64>()).collect();
            build_nepdf(&PairSample::new("p", x, y, Label::Causal).unwrap(), &NepdfOptions::default()).unwrap()
        })
        .collect()
}

#[test]
fn predict_consistency() {
    let net = Network::<f32>::new(16, Task::ThreeClass, None, 31).unwrap();
    let ms = some_matrices();
    let refs: Vec<&NepdfMatrix> = ms.iter().collect();
    let batch = net.predict_batch(&refs, Exec::default()).unwrap();
    for (m, b) in ms.iter().zip(&batch) {
        let single = net.predict(m).unwrap();
        assert_eq!(&single, b);
        assert_eq!(single.class, argmax(&single.probs));
        assert_eq!(single.label, Label::from_class_index(single.class));
    }
    let small = build_nepdf(
        &PairSample::new("q", vec![1.0, 2.0], vec![1.0, 3.0], Label::Causal).unwrap(),
        &NepdfOptions { k: 8, ..Default::default() },
    )
    .unwrap();
    assert!(matches!(net.predict(&small), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn model_round_trip() {
    let mut net = Network::<f32>::new(16, Task::Dependence, None, 40).unwrap();
    net.meta.provenance = "abc123".into();
    net.meta.nepdf.log_transform = true;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&net, &path).unwrap();
    let back: Network<f32> = load_model(&path).unwrap();
    assert_eq!(back, net);
    let xs = random_inputs(3, 16, 41);
    let a = net.forward(&views(&xs)).unwrap();
    let b = back.forward(&views(&xs)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn model_integrity_errors() {
    let net = Network::<f32>::new(8, Task::ThreeClass, Some(&gradcheck_arch()), 1).unwrap();
    let bytes = encode(&net);
    assert!(matches!(decode::<f32>(&bytes[..bytes.len() - 10]), Err(Error::CorruptChecksum)));
    assert!(matches!(decode::<f32>(&bytes[..3]), Err(Error::CorruptChecksum)));
    let mut bumped = bytes.clone();
    bumped[VERSION_OFFSET] += 1;
    assert!(matches!(decode::<f32>(&bumped), Err(Error::FormatVersionMismatch { found: 2, expected: 1 })));
    let mut flipped = bytes.clone();
    flipped[40] ^= 0x10;
    assert!(matches!(decode::<f32>(&flipped), Err(Error::CorruptChecksum)));
    let mut magic = bytes;
    magic[0] = b'X';
    assert!(matches!(decode::<f32>(&magic), Err(Error::BadMagic)));
}

#[test]
fn f64_model_loads_as_f32() {
    let net = Network::<f64>::new(8, Task::ThreeClass, Some(&gradcheck_arch()), 1).unwrap();
    let back: Network<f32> = decode(&encode(&net)).unwrap();
    for (a, b) in net.params().iter().zip(back.params()) {
        assert_eq!(*a as f32, *b);
    }
}
