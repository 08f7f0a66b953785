use super::*;
use crate::dataset::{FeatureLayout, FeatureMask, FeatureStats, InputSample};
use crate::nnkernel::gradcheck::{numerical_gradient, relative_error};
use crate::nnkernel::Activation;
use crate::tensor::Tensor;
use crate::testutil::rand_tensor;
use crate::training::{batch_gradients, TrainConfig};

fn tiny_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        variant,
        lookback: 2,
        conv_filters: vec![2, 2],
        filter_length: 3,
        indrnn_hidden: 2,
        indrnn_layers: 2,
        dense_layers: 2,
        dense_units: 3,
        seed: 11,
        ..Default::default()
    }
}

fn tiny(variant: Variant, mask: FeatureMask) -> Network {
    let layout = FeatureLayout::new(2, 2, mask).unwrap();
    Network::build(
        &tiny_config(variant),
        3,
        layout,
        FeatureStats::identity(layout.n_features()),
    )
    .unwrap()
}

fn sample_for(net: &Network, seed: u64) -> InputSample {
    let x = rand_tensor(&[net.n_zones, net.layout.n_features()], seed);
    let target = rand_tensor(&[net.n_zones], seed + 1000).into_data();
    InputSample {
        x,
        target,
        slot_index: 2,
        layout: net.layout,
    }
}

#[test]
fn components_per_variant() {
    let full = tiny(Variant::Focir, FeatureMask::ALL);
    assert_eq!(
        full.components(),
        vec![
            "feature_importance",
            "conv1d",
            "conv1d",
            "indrnn",
            "indrnn",
            "dense",
            "dense",
            "output"
        ]
    );
    let fin = tiny(Variant::Fin, FeatureMask::ALL);
    assert_eq!(
        fin.components(),
        vec!["feature_importance", "dense", "dense", "output"]
    );
    assert_eq!(fin.passthrough_columns().len(), fin.layout.n_features());
    let ocir = tiny(Variant::Ocir, FeatureMask::ALL);
    assert!(ocir.importance.is_none());
    assert_eq!(
        ocir.passthrough_columns(),
        ocir.layout.context_range().collect::<Vec<_>>()
    );
    let foc = tiny(Variant::Foc, FeatureMask::ALL);
    assert!(foc.indrnn.is_none());
    assert_eq!(
        foc.passthrough_columns().len(),
        foc.layout.temporal_width() + 5
    );

    // every variant's component set is contained in the full network's
    for v in Variant::ALL {
        let net = tiny(v, FeatureMask::ALL);
        for c in net.components() {
            assert!(full.components().contains(&c), "{v}: {c}");
        }
    }
}

#[test]
fn masked_layouts_drop_inactive_branches() {
    let temporal_ctx = FeatureMask {
        spatio_temporal: false,
        temporal: true,
        context: true,
    };
    let net = tiny(Variant::Focir, temporal_ctx);
    assert!(net.conv.is_empty());
    assert!(net.indrnn.is_some());
    let ctx_only = FeatureMask {
        spatio_temporal: false,
        temporal: false,
        context: true,
    };
    let net = tiny(Variant::Focir, ctx_only);
    assert!(net.conv.is_empty() && net.indrnn.is_none());
    assert_eq!(net.passthrough_columns(), vec![0, 1, 2, 3, 4]);
}

#[test]
fn build_is_deterministic() {
    for v in Variant::ALL {
        assert_eq!(tiny(v, FeatureMask::ALL), tiny(v, FeatureMask::ALL));
    }
    let mut cfg = tiny_config(Variant::Focir);
    cfg.seed = 12;
    let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
    let other =
        Network::build(&cfg, 3, layout, FeatureStats::identity(layout.n_features())).unwrap();
    assert_ne!(
        other.flat_params(),
        tiny(Variant::Focir, FeatureMask::ALL).flat_params()
    );
}

#[test]
fn build_rejects_bad_configs() {
    let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
    let id = FeatureStats::identity(layout.n_features());
    let mut cfg = tiny_config(Variant::Focir);
    cfg.filter_length = 4;
    assert!(Network::build(&cfg, 3, layout, id.clone()).is_err());
    let mut cfg = tiny_config(Variant::Focir);
    cfg.lookback = 3;
    assert!(Network::build(&cfg, 3, layout, id.clone()).is_err());
    assert!(Network::build(&tiny_config(Variant::Focir), 0, layout, id).is_err());
}

#[test]
fn zero_parameters_predict_output_bias() {
    for v in Variant::ALL {
        let mut net = tiny(v, FeatureMask::ALL);
        net.set_flat_params(&vec![0.0; net.num_params()]).unwrap();
        net.output.bias.data_mut()[0] = 1.75;
        let pred = net.forward(&sample_for(&net, 3)).unwrap();
        assert_eq!(pred, vec![1.75; 3], "{v}");
    }
}

#[test]
fn fin_forward_by_hand() {
    let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
    let cfg = ModelConfig {
        variant: Variant::Fin,
        lookback: 1,
        dense_layers: 0,
        ..Default::default()
    };
    let f = layout.n_features();
    let mut net = Network::build(&cfg, 2, layout, FeatureStats::identity(f)).unwrap();
    net.importance
        .as_mut()
        .unwrap()
        .weights
        .data_mut()
        .fill(0.0);
    let w: Vec<f64> = (0..f).map(|j| 0.1 * j as f64 - 0.3).collect();
    net.output.weights.data_mut().copy_from_slice(&w);
    net.output.bias.data_mut()[0] = 0.25;
    let s = sample_for(&net, 9);
    let pred = net.forward(&s).unwrap();
    for (z, p) in pred.iter().enumerate() {
        let expect: f64 = 0.25 + (0..f).map(|j| 0.5 * s.x.at2(z, j) * w[j]).sum::<f64>();
        assert!((p - expect).abs() < 1e-12);
    }
}

#[test]
fn forward_rejects_mismatched_samples() {
    let net = tiny(Variant::Focir, FeatureMask::ALL);
    let mut s = sample_for(&net, 1);
    s.x = Tensor::zeros(&[2, net.layout.n_features()]);
    assert!(net.forward(&s).is_err());
    let mut s = sample_for(&net, 1);
    s.x.data_mut()[0] = f64::NAN;
    assert!(matches!(net.forward(&s), Err(crate::Error::NonFinite(_))));
}

#[test]
fn indrnn_only_is_zone_permutation_equivariant() {
    let net = tiny(Variant::IndrnnOnly, FeatureMask::ALL);
    let s = sample_for(&net, 4);
    let perm = [2usize, 0, 1];
    let mut permuted = s.clone();
    for (dst, &src) in perm.iter().enumerate() {
        permuted.x.row_mut(dst).copy_from_slice(s.x.row(src));
    }
    let a = net.forward(&s).unwrap();
    let b = net.forward(&permuted).unwrap();
    for (dst, &src) in perm.iter().enumerate() {
        assert!((b[dst] - a[src]).abs() <= 1e-12);
    }
}

/// Moves every parameter off zero so no ReLU sits exactly on its kink.
fn randomized(mut net: Network, seed: u64) -> Network {
    let p = rand_tensor(&[net.num_params()], seed).map(|v| 0.5 * v);
    net.set_flat_params(p.data()).unwrap();
    net.constrain_recurrent();
    net
}

fn full_loss_gradcheck(net: &Network, seed: u64) -> f64 {
    let net = &randomized(net.clone(), seed + 7);
    let s = sample_for(net, seed);
    let cfg = TrainConfig {
        l2_alpha: 0.01,
        l1_beta: 0.01,
        ..Default::default()
    };
    let analytic: Vec<f64> = batch_gradients(net, &[&s], &cfg)
        .unwrap()
        .grads
        .iter()
        .flat_map(|t| t.data().to_vec())
        .collect();
    let mut probe = net.clone();
    let f = |p: &[f64]| {
        probe.set_flat_params(p).unwrap();
        batch_gradients(&probe, &[&s], &cfg).unwrap().loss
    };
    let numeric = numerical_gradient(f, &net.flat_params(), 1e-6);
    numeric
        .iter()
        .zip(&analytic)
        .map(|(&n, &a)| relative_error(a, n))
        .fold(0.0, f64::max)
}

#[test]
fn full_network_gradients_match_finite_differences() {
    for v in Variant::ALL {
        let net = tiny(v, FeatureMask::ALL);
        let err = full_loss_gradcheck(&net, 21);
        assert!(err <= 1e-5, "{v}: {err}");
    }
}

#[test]
fn tanh_recurrence_gradients() {
    let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
    let mut cfg = tiny_config(Variant::Fir);
    cfg.indrnn_activation = Activation::Tanh;
    let net = Network::build(&cfg, 3, layout, FeatureStats::identity(layout.n_features())).unwrap();
    assert!(full_loss_gradcheck(&net, 5) <= 1e-5);
}

#[test]
fn importance_uniform_when_weights_zero() {
    let mut net = tiny(Variant::Fin, FeatureMask::ALL);
    net.importance
        .as_mut()
        .unwrap()
        .weights
        .data_mut()
        .fill(0.0);
    let r = extract_importance(&net).unwrap();
    let f = net.layout.n_features();
    for &s in &r.spatial_avg {
        assert!((s - 1.0 / f as f64).abs() < 1e-15);
    }
    assert!(r.raw_scores.data().iter().all(|&s| s == 0.5));
    for p in 0..3 {
        assert!((r.temporal_avg.row(p).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    // ties keep column order
    assert_eq!(r.ranking[0].0, r.feature_names[0]);
}

#[test]
fn importance_dominant_column_ranks_first() {
    let mut net = tiny(Variant::Focir, FeatureMask::ALL);
    let f = net.layout.n_features();
    let w = &mut net.importance.as_mut().unwrap().weights;
    w.data_mut().fill(0.0);
    for p in 0..3 {
        w.set2(p, 7, 5.0);
    }
    let r = extract_importance(&net).unwrap();
    assert_eq!(r.ranking[0].0, r.feature_names[7]);
    assert!((r.spatial_avg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(r.feature_names.len(), f);
}

#[test]
fn importance_hand_case() {
    let mask = FeatureMask {
        spatio_temporal: false,
        temporal: false,
        context: true,
    };
    let layout = FeatureLayout::new(1, 1, mask).unwrap();
    let cfg = ModelConfig {
        variant: Variant::Fin,
        lookback: 1,
        dense_layers: 0,
        ..Default::default()
    };
    let mut net = Network::build(&cfg, 2, layout, FeatureStats::identity(5)).unwrap();
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let scores = [[0.2, 0.4, 0.6, 0.8, 0.5], [0.6, 0.4, 0.2, 0.0001, 0.5]];
    for (p, row) in scores.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            net.importance
                .as_mut()
                .unwrap()
                .weights
                .set2(p, j, logit(s));
        }
    }
    let r = extract_importance(&net).unwrap();
    let means = [0.4, 0.4, 0.4, 0.40005, 0.5];
    let total: f64 = means.iter().sum();
    for j in 0..5 {
        assert!((r.spatial_avg[j] - means[j] / total).abs() < 1e-12);
    }
    assert_eq!(r.ranking[0].0, "poi");
}

#[test]
fn importance_requires_gate() {
    let net = tiny(Variant::Ocir, FeatureMask::ALL);
    assert!(matches!(
        extract_importance(&net),
        Err(crate::Error::Unsupported(_))
    ));
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let net = tiny(Variant::Focir, FeatureMask::ALL);
    let ck = Checkpoint::new(net.clone(), DataSpec::default());
    let text = ck.to_json().unwrap();
    let back = Checkpoint::from_json(&text).unwrap();
    assert_eq!(back, ck);
    let s = sample_for(&net, 8);
    let a = net.forward(&s).unwrap();
    let b = back.network.forward(&s).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn checkpoint_rejects_tampering() {
    let net = tiny(Variant::Fir, FeatureMask::ALL);
    let text = Checkpoint::new(net, DataSpec::default()).to_json().unwrap();
    let wrong_version = text.replacen("\"version\": 1", "\"version\": 9", 1);
    assert!(matches!(
        Checkpoint::from_json(&wrong_version),
        Err(crate::Error::Checkpoint(_))
    ));
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["network"]["config"]["indrnn_hidden"] = serde_json::json!(5);
    assert!(Checkpoint::from_json(&v.to_string()).is_err());
    assert!(Checkpoint::from_json("{").is_err());
}
