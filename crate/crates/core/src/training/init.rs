use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::focirnet::{Network, ParamKind};

/// Half-width of the uniform feature-importance initialization. Under a
/// sigmoid gate every score starts within about 1.25% of 0.5.
pub const FI_INIT_RANGE: f64 = 0.05;

/// Reinitializes every parameter from `seed`:
/// feature-importance weights `U(-0.05, 0.05)`, other weights
/// `U(-L, L)` with `L = sqrt(6 / (fan_in + fan_out))`, recurrent weights
/// `U(0, bound)`, biases zero.
pub fn init_weights(net: &mut Network, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = net.config.recurrent_bound().unwrap_or(1.0);
    let groups = net.param_groups();
    for (group, t) in groups.iter().zip(net.params_mut()) {
        match group.kind {
            ParamKind::Bias => t.data_mut().fill(0.0),
            ParamKind::Importance => t
                .data_mut()
                .iter_mut()
                .for_each(|w| *w = rng.random_range(-FI_INIT_RANGE..=FI_INIT_RANGE)),
            ParamKind::Recurrent => t
                .data_mut()
                .iter_mut()
                .for_each(|w| *w = rng.random_range(0.0..=bound)),
            ParamKind::Weight => {
                let (fan_in, fan_out) = fans(&group.shape);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                t.data_mut()
                    .iter_mut()
                    .for_each(|w| *w = rng.random_range(-limit..=limit));
            }
        }
    }
}

/// `[out, in]` for dense-like weights, `[K, E, F_in]` for conv filters.
fn fans(shape: &[usize]) -> (usize, usize) {
    match *shape {
        [out, inp] => (inp, out),
        [k, e, f] => (e * f, e * k),
        _ => {
            let n: usize = shape.iter().product();
            (n, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureLayout, FeatureMask, FeatureStats};
    use crate::focirnet::{ModelConfig, Variant};
    use crate::nnkernel::Activation;

    fn small() -> Network {
        let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
        let cfg = ModelConfig {
            lookback: 2,
            conv_filters: vec![3, 4],
            filter_length: 3,
            indrnn_hidden: 4,
            dense_units: 4,
            seed: 5,
            ..Default::default()
        };
        Network::build(&cfg, 4, layout, FeatureStats::identity(layout.n_features())).unwrap()
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let mut a = small();
        let b = small();
        assert_eq!(a, b);
        init_weights(&mut a, 5);
        assert_eq!(a, b);
        init_weights(&mut a, 6);
        assert_ne!(a.flat_params(), b.flat_params());
    }

    #[test]
    fn ranges_per_kind() {
        let net = small();
        let sig = |x: f64| Activation::Sigmoid.apply(x);
        let fi = net.importance.as_ref().unwrap();
        for s in fi.scores().data() {
            assert!(*s >= sig(-0.05) && *s <= sig(0.05));
        }
        assert!(sig(-0.05) > 0.4875 && sig(0.05) < 0.5125);
        // dense 4 -> 4 limit sqrt(6/8)
        let d = &net.dense[1];
        assert_eq!(d.weights.shape(), &[4, 4]);
        assert!(d
            .weights
            .data()
            .iter()
            .all(|w| w.abs() <= (6.0f64 / 8.0).sqrt()));
        assert!((6.0f64 / 8.0).sqrt() - 0.866 < 1e-3);
        for (g, t) in net.param_groups().iter().zip(net.params()) {
            match g.kind {
                ParamKind::Bias => assert!(t.data().iter().all(|&v| v == 0.0), "{}", g.name),
                ParamKind::Recurrent => {
                    let bound = 2f64.powf(0.5);
                    assert!(t.data().iter().all(|&v| (0.0..=bound).contains(&v)))
                }
                _ => {}
            }
        }
        assert_eq!(Variant::Focir, net.config.variant);
    }
}
