use prediff::parallel::with_workers;
use prediff::patch_model::{extract_corpus, PatchGeometry};
use prediff::relevance::measures::laplace_correct;
use prediff::relevance::removed_estimate;
use prediff::relevance::windows::coverage;
use prediff::synthetic::{noise_image, random_conv_net, smooth_image};
use prediff::{
    explain, ClassLayer, ExplainConfig, GaussianPatchModel, Image, Laplace, Layer, LayerKind, MarginalSampler, Network,
    PatchSource, Selection, SamplerKind, Shape, Target,
};

const W: [f64; 9] = [1.5, -2.0, 0.7, 0.3, 2.2, -1.1, -0.4, 0.9, 1.3];
const B: f64 = -0.6;

/// Two-logit softmax with logits (0, w·x + b), i.e. logistic regression.
fn logistic_net() -> Network {
    let mut weights = vec![0.0; 9];
    weights.extend(W);
    Network::new(
        Shape::new(3, 3, 1),
        100,
        vec![
            Layer::new("fc", LayerKind::Dense { inputs: 9, outputs: 2, weights, biases: vec![0.0, B] }),
            Layer::new("prob", LayerKind::Softmax),
        ],
    )
    .unwrap()
}

fn logistic(x: &[f64]) -> f64 {
    let z: f64 = W.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + B;
    1.0 / (1.0 + (-z).exp())
}

fn log2_odds(p: f64) -> f64 {
    (p / (1.0 - p)).log2()
}

fn binary_setup() -> (Image, MarginalSampler) {
    let x = Image::new(3, 3, 1, vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let sources = vec![Image::filled(3, 3, 1, 0.0).unwrap(), Image::filled(3, 3, 1, 1.0).unwrap()];
    (x, MarginalSampler::new(sources, Selection::Cycle).unwrap())
}

/// Exact marginalization over the two pixel values, then the log-odds difference.
fn brute_force(x: &Image, class: usize, laplace: Option<(u64, u32)>) -> Vec<f64> {
    let prob = |v: &[f64]| if class == 1 { logistic(v) } else { 1.0 - logistic(v) };
    let adjust = |p: f64| match laplace {
        Some((n, k)) => laplace_correct(p, n, k),
        None => p,
    };
    let full = prob(x.data());
    (0..9)
        .map(|i| {
            let mut removed = 0.0;
            for v in [0.0, 1.0] {
                let mut y = x.data().to_vec();
                y[i] = v;
                removed += 0.5 * prob(&y);
            }
            log2_odds(adjust(full)) - log2_odds(adjust(removed))
        })
        .collect()
}

fn binary_config(class: usize, laplace: Option<Laplace>) -> ExplainConfig {
    ExplainConfig {
        inner: 1,
        outer: 2,
        samples: 2,
        target: Target::Class { class, layer: ClassLayer::Probabilities },
        sampler: SamplerKind::Marginal,
        laplace,
        seed: 0,
        stride: 1,
    }
}

#[test]
fn exhaustive_marginal_matches_brute_force() {
    let net = logistic_net();
    let (x, sampler) = binary_setup();
    for class in [0, 1] {
        for laplace in [None, Some((100, 2))] {
            let cfg = binary_config(class, laplace.map(|(n, k)| Laplace::new(n, k).unwrap()));
            let map = explain(&net, &x, PatchSource::Marginal(&sampler), &cfg).unwrap();
            let want = brute_force(&x, class, laplace);
            for (got, want) in map.scores.iter().zip(&want) {
                assert!((got - want).abs() < 1e-10, "class {class}: {got} vs {want}");
            }
            assert!(map.counts.iter().all(|&c| c == 1));
        }
    }
}

#[test]
fn logit_target_is_activation_difference() {
    let net = logistic_net();
    let (x, sampler) = binary_setup();
    let cfg = ExplainConfig { target: Target::Class { class: 1, layer: ClassLayer::Logits }, ..binary_config(1, None) };
    let map = explain(&net, &x, PatchSource::Marginal(&sampler), &cfg).unwrap();
    for (i, s) in map.scores.iter().enumerate() {
        // Removing pixel i replaces w_i x_i by its mean w_i / 2.
        let want = W[i] * (x.data()[i] - 0.5);
        assert!((s - want).abs() < 1e-12);
    }
}

#[test]
fn count_law_holds_for_small_images() {
    let net_for = |n: usize| {
        Network::<f64>::new(
            Shape::new(n, n, 1),
            10,
            vec![
                Layer::new("fc", LayerKind::Dense { inputs: n * n, outputs: 2, weights: vec![0.0; 2 * n * n], biases: vec![0.0; 2] }),
                Layer::new("prob", LayerKind::Softmax),
            ],
        )
        .unwrap()
    };
    for n in [1, 2, 5, 9, 16] {
        let net = net_for(n);
        let x = Image::filled(n, n, 1, 0.5).unwrap();
        let sampler = MarginalSampler::new(vec![x.clone()], Selection::Cycle).unwrap();
        for k in 1..=n.min(8) {
            for stride in 1..=k {
                let cfg = ExplainConfig { inner: k, outer: k + 1, samples: 1, stride, ..binary_config(0, None) };
                let map = explain(&net, &x, PatchSource::Marginal(&sampler), &cfg).unwrap();
                assert!(map.counts.iter().all(|&c| c >= 1), "n={n} k={k} stride={stride}");
                if stride == 1 {
                    for r in 0..n {
                        for c in 0..n {
                            assert_eq!(map.count(r, c) as usize, coverage(r, n, k) * coverage(c, n, k));
                        }
                    }
                }
            }
        }
    }
    for n in 1..=32 {
        for k in 1..=n.min(8) {
            let by_enumeration = |i: usize| (0..=n - k).filter(|&s| s <= i && i < s + k).count();
            for i in 0..n {
                assert_eq!(coverage(i, n, k), by_enumeration(i));
                assert_eq!(coverage(i, n, k), (i + 1).min(k).min(n - k + 1).min(n - i));
            }
        }
    }
}

#[test]
fn five_by_five_window_counts() {
    let net = Network::<f64>::new(
        Shape::new(5, 5, 1),
        10,
        vec![
            Layer::new("fc", LayerKind::Dense { inputs: 25, outputs: 2, weights: vec![0.1; 50], biases: vec![0.0; 2] }),
            Layer::new("prob", LayerKind::Softmax),
        ],
    )
    .unwrap();
    let x = Image::filled(5, 5, 1, 0.5).unwrap();
    let sampler = MarginalSampler::new(vec![x.clone()], Selection::Cycle).unwrap();
    let cfg = ExplainConfig { inner: 2, outer: 3, samples: 1, ..binary_config(0, None) };
    let map = explain(&net, &x, PatchSource::Marginal(&sampler), &cfg).unwrap();
    assert_eq!(map.count(0, 0), 1);
    assert_eq!(map.count(0, 4), 1);
    assert_eq!(map.count(0, 2), 2);
    assert_eq!(map.count(3, 0), 2);
    assert_eq!(map.count(2, 2), 4);
    assert_eq!(map.count(1, 3), 4);
}

#[test]
fn independent_target_scores_zero() {
    let net = Network::<f64>::new(
        Shape::new(6, 6, 1),
        10,
        vec![
            Layer::new("fc", LayerKind::Dense { inputs: 36, outputs: 3, weights: vec![0.0; 108], biases: vec![0.2, -1.0, 0.4] }),
            Layer::new("prob", LayerKind::Softmax),
        ],
    )
    .unwrap();
    let images: Vec<Image> = (0..3).map(|s| smooth_image(6, 6, 1, s)).collect();
    let g = PatchGeometry::new(2, 4, 1).unwrap();
    let model = GaussianPatchModel::fit(&extract_corpus(&images, g, 200, 1).unwrap(), 1e-6).unwrap();
    let cfg = ExplainConfig::for_class(&net, 1, 2, 4, 5, SamplerKind::Conditional, 3).unwrap();
    let map = explain(&net, &images[0], PatchSource::Conditional(&model), &cfg).unwrap();
    assert!(map.scores.iter().all(|&s| s == 0.0));
}

fn conv_setup() -> (Network, Image, GaussianPatchModel) {
    let net = random_conv_net(Shape::new(28, 28, 3), (4, 4), 3, 11).unwrap();
    let images: Vec<Image> = (0..6).map(|s| smooth_image(28, 28, 3, 100 + s)).collect();
    let g = PatchGeometry::new(4, 8, 3).unwrap();
    let model = GaussianPatchModel::fit(&extract_corpus(&images, g, 3000, 2).unwrap(), 1e-6).unwrap();
    (net, smooth_image(28, 28, 3, 7), model)
}

#[test]
fn worker_count_does_not_change_the_map() {
    let (net, x, model) = conv_setup();
    let cfg = ExplainConfig::for_class(&net, 2, 4, 8, 10, SamplerKind::Conditional, 42).unwrap();
    let run = |w| {
        with_workers(Some(w), || explain(&net, &x, PatchSource::Conditional(&model), &cfg).unwrap().to_bytes()).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
    // A different seed must change the sampled values.
    let other = ExplainConfig { seed: 43, ..cfg.clone() };
    assert_ne!(explain(&net, &x, PatchSource::Conditional(&model), &other).unwrap().to_bytes(), one);
}

#[test]
fn estimate_spread_shrinks_with_sample_count() {
    // Noise images keep the conditional variance well away from zero.
    let net = random_conv_net(Shape::new(16, 16, 3), (4, 4), 3, 11).unwrap();
    let images: Vec<Image> = (0..6).map(|s| noise_image(16, 16, 3, 100 + s)).collect();
    let model = GaussianPatchModel::fit(&extract_corpus(&images, PatchGeometry::new(4, 8, 3).unwrap(), 3000, 2).unwrap(), 1e-6).unwrap();
    let x = noise_image(16, 16, 3, 7);
    let spread = |samples: usize| {
        let values: Vec<f64> = (0..24)
            .map(|seed| {
                let mut cfg = ExplainConfig::for_class(&net, 0, 4, 8, samples, SamplerKind::Conditional, seed).unwrap();
                cfg.target = Target::Class { class: 0, layer: ClassLayer::Logits };
                removed_estimate(&net, &x, PatchSource::Conditional(&model), &cfg, 6, 6).unwrap()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
    };
    let (s10, s100, s1000) = (spread(10), spread(100), spread(1000));
    // Expected ratio sqrt(10) ≈ 3.16 per step; allow sampling noise of the spread itself.
    assert!(s10 > 0.0);
    assert!((1.8..5.5).contains(&(s10 / s100)), "{s10} {s100}");
    assert!((1.8..5.5).contains(&(s100 / s1000)), "{s100} {s1000}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let (net, x, model) = conv_setup();
    let src = PatchSource::Conditional(&model);
    let base = ExplainConfig::for_class(&net, 0, 4, 8, 2, SamplerKind::Conditional, 0).unwrap();
    let err = |cfg: ExplainConfig| explain(&net, &x, src, &cfg).unwrap_err().to_string();

    assert!(err(ExplainConfig { stride: 5, ..base.clone() }).contains("stride"));
    assert!(err(ExplainConfig { target: Target::Class { class: 3, layer: ClassLayer::Probabilities }, ..base.clone() })
        .contains("out of range"));
    assert!(err(ExplainConfig { inner: 3, ..base.clone() }).contains("geometry"));
    assert!(err(ExplainConfig { outer: 4, ..base.clone() }).contains("l > k"));
    assert!(err(ExplainConfig { samples: 0, ..base.clone() }).contains("sample"));
    assert!(err(ExplainConfig { sampler: SamplerKind::Marginal, ..base.clone() }).contains("sampler"));

    let tiny = Image::filled(3, 3, 1, 0.5).unwrap();
    let sampler = MarginalSampler::new(vec![tiny.clone()], Selection::Cycle).unwrap();
    let cfg = ExplainConfig { inner: 4, outer: 5, ..binary_config(0, None) };
    let e = explain(&logistic_net(), &tiny, PatchSource::Marginal(&sampler), &cfg).unwrap_err().to_string();
    assert!(e.contains("larger than"), "{e}");
}

#[test]
fn map_file_round_trip() {
    let net = logistic_net();
    let (x, sampler) = binary_setup();
    let cfg = binary_config(1, Some(Laplace::new(100, 2).unwrap()));
    let map = explain(&net, &x, PatchSource::Marginal(&sampler), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pdrm");
    map.save(&path).unwrap();
    let back = prediff::RelevanceMap::<f64>::load(&path).unwrap();
    assert_eq!(back, map);
    let mut bytes = map.to_bytes();
    bytes.pop();
    assert!(prediff::RelevanceMap::<f64>::from_bytes(&bytes).is_err());
}
