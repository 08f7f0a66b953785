use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::dataset::{FeatureLayout, FeatureStats, InputSample};
use crate::error::{Error, Result};
use crate::nnkernel::{
    concatenate, gather_columns, gather_steps, scatter_columns, scatter_steps, split_columns,
    Activation, Conv1d, Conv1dCache, Dense, DenseCache, FeatureImportance, IndRnnCache,
    IndRnnLayer, ZoneDistributedIndRnn,
};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    /// Feature-importance weights, L1-regularized.
    Importance,
    Weight,
    Bias,
    /// IndRNN recurrent weights, bounded after every update.
    Recurrent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
}

/// A configured network: optional feature-importance gate, optional conv
/// branch over the spatio-temporal columns, optional recurrent branch over
/// the lagged columns, and a per-zone dense head.
///
/// Columns not consumed by any branch (always the context columns; the
/// temporal columns when there is no recurrent branch; everything when there
/// are no branches) are passed straight to the head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub config: ModelConfig,
    pub layout: FeatureLayout,
    pub n_zones: usize,
    pub standardizer: FeatureStats,
    pub importance: Option<FeatureImportance>,
    pub conv: Vec<Conv1d>,
    pub indrnn: Option<ZoneDistributedIndRnn>,
    pub dense: Vec<Dense>,
    pub output: Dense,
}

/// Intermediate values kept by [`Network::forward_cached`] for the backward
/// pass.
pub struct ForwardCache {
    x: Tensor,
    conv: Vec<Conv1dCache>,
    indrnn: Option<IndRnnCache>,
    dense: Vec<DenseCache>,
    output: DenseCache,
    head_widths: Vec<usize>,
}

impl Network {
    /// Builds the network for `config` and initializes its parameters from
    /// `config.seed`.
    pub fn build(
        config: &ModelConfig,
        n_zones: usize,
        layout: FeatureLayout,
        standardizer: FeatureStats,
    ) -> Result<Network> {
        config.validate()?;
        if n_zones == 0 {
            return Err(Error::Config("network needs at least one zone".into()));
        }
        if layout.lookback != config.lookback {
            return Err(Error::Layout(format!(
                "layout lookback {} differs from model lookback {}",
                layout.lookback, config.lookback
            )));
        }
        if standardizer.n_features() != layout.n_features() {
            return Err(Error::Layout(format!(
                "standardizer covers {} columns, layout has {}",
                standardizer.n_features(),
                layout.n_features()
            )));
        }
        let variant = config.variant;

        let importance = variant
            .has_feature_importance()
            .then(|| FeatureImportance::new(n_zones, layout.n_features(), config.fi_activation));

        let mut conv = Vec::new();
        if variant.has_conv() && layout.mask.spatio_temporal {
            let mut f_in = layout.spatio_temporal_width();
            for &k in &config.conv_filters {
                conv.push(Conv1d::new(
                    k,
                    config.filter_length,
                    f_in,
                    config.conv_activation,
                )?);
                f_in = k;
            }
        }

        let indrnn = if variant.has_indrnn() && layout.step_width() > 0 {
            let bound = config.recurrent_bound()?;
            let mut f_in = layout.step_width();
            let layers = (0..config.indrnn_layers)
                .map(|_| {
                    let l = IndRnnLayer::new(
                        f_in,
                        config.indrnn_hidden,
                        config.indrnn_activation,
                        bound,
                    );
                    f_in = config.indrnn_hidden;
                    l
                })
                .collect();
            Some(ZoneDistributedIndRnn { layers })
        } else {
            None
        };

        let mut net = Network {
            config: config.clone(),
            layout,
            n_zones,
            standardizer,
            importance,
            conv,
            indrnn,
            dense: Vec::new(),
            output: Dense::new(1, 1, config.output_activation),
        };
        let mut f_in = net.head_width();
        if f_in == 0 {
            return Err(Error::Layout("no input reaches the dense head".into()));
        }
        for _ in 0..config.dense_layers {
            net.dense.push(Dense::new(
                f_in,
                config.dense_units,
                config.dense_hidden_activation,
            ));
            f_in = config.dense_units;
        }
        net.output = Dense::new(f_in, 1, config.output_activation);
        crate::training::init_weights(&mut net, config.seed);
        Ok(net)
    }

    /// Columns handed to the head without passing through a branch.
    pub fn passthrough_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = Vec::new();
        if self.conv.is_empty() && self.indrnn.is_none() {
            cols.extend(self.layout.spatio_temporal_range());
        }
        if self.indrnn.is_none() {
            cols.extend(self.layout.temporal_range());
        }
        cols.extend(self.layout.context_range());
        cols
    }

    fn head_width(&self) -> usize {
        self.conv.last().map_or(0, Conv1d::n_filters)
            + self
                .indrnn
                .as_ref()
                .map_or(0, ZoneDistributedIndRnn::hidden)
            + self.passthrough_columns().len()
    }

    /// Names of the components present, in data-flow order.
    pub fn components(&self) -> Vec<&'static str> {
        let mut c = Vec::new();
        if self.importance.is_some() {
            c.push("feature_importance");
        }
        c.extend(self.conv.iter().map(|_| "conv1d"));
        if let Some(r) = &self.indrnn {
            c.extend(r.layers.iter().map(|_| "indrnn"));
        }
        c.extend(self.dense.iter().map(|_| "dense"));
        c.push("output");
        c
    }

    pub fn param_groups(&self) -> Vec<ParamGroup> {
        let mut out = Vec::new();
        let mut push = |name: String, kind, t: &Tensor| {
            out.push(ParamGroup {
                name,
                kind,
                shape: t.shape().to_vec(),
            })
        };
        if let Some(fi) = &self.importance {
            push(
                "importance.weights".into(),
                ParamKind::Importance,
                &fi.weights,
            );
        }
        for (i, c) in self.conv.iter().enumerate() {
            push(format!("conv{i}.filters"), ParamKind::Weight, &c.filters);
            push(format!("conv{i}.bias"), ParamKind::Bias, &c.bias);
        }
        if let Some(r) = &self.indrnn {
            for (i, l) in r.layers.iter().enumerate() {
                push(
                    format!("indrnn{i}.input_weights"),
                    ParamKind::Weight,
                    &l.input_weights,
                );
                push(
                    format!("indrnn{i}.recurrent_weights"),
                    ParamKind::Recurrent,
                    &l.recurrent_weights,
                );
                push(format!("indrnn{i}.bias"), ParamKind::Bias, &l.bias);
            }
        }
        for (i, d) in self.dense.iter().enumerate() {
            push(format!("dense{i}.weights"), ParamKind::Weight, &d.weights);
            push(format!("dense{i}.bias"), ParamKind::Bias, &d.bias);
        }
        push(
            "output.weights".into(),
            ParamKind::Weight,
            &self.output.weights,
        );
        push("output.bias".into(), ParamKind::Bias, &self.output.bias);
        out
    }

    /// Parameter tensors in [`Network::param_groups`] order.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        if let Some(fi) = &self.importance {
            out.push(&fi.weights);
        }
        for c in &self.conv {
            out.extend([&c.filters, &c.bias]);
        }
        if let Some(r) = &self.indrnn {
            for l in &r.layers {
                out.extend([&l.input_weights, &l.recurrent_weights, &l.bias]);
            }
        }
        for d in &self.dense {
            out.extend([&d.weights, &d.bias]);
        }
        out.extend([&self.output.weights, &self.output.bias]);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        if let Some(fi) = &mut self.importance {
            out.push(&mut fi.weights);
        }
        for c in &mut self.conv {
            out.extend([&mut c.filters, &mut c.bias]);
        }
        if let Some(r) = &mut self.indrnn {
            for l in &mut r.layers {
                out.extend([&mut l.input_weights, &mut l.recurrent_weights, &mut l.bias]);
            }
        }
        for d in &mut self.dense {
            out.extend([&mut d.weights, &mut d.bias]);
        }
        out.extend([&mut self.output.weights, &mut self.output.bias]);
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut rest = flat;
        for t in self.params_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.data_mut().copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Clips every IndRNN recurrent weight into its activation bound.
    pub fn constrain_recurrent(&mut self) {
        if let Some(r) = &mut self.indrnn {
            r.layers.iter_mut().for_each(IndRnnLayer::constrain);
        }
    }

    pub fn recurrent_within_bounds(&self) -> bool {
        self.indrnn
            .as_ref()
            .is_none_or(|r| r.layers.iter().all(IndRnnLayer::within_bound))
    }

    fn check_input(&self, sample: &InputSample) -> Result<()> {
        self.layout.check_compatible(&sample.layout)?;
        sample
            .x
            .expect_shape(&[self.n_zones, self.layout.n_features()], "network input")
    }

    /// Per-zone prediction for one sample, on the raw target scale.
    pub fn forward(&self, sample: &InputSample) -> Result<Vec<f64>> {
        self.check_input(sample)?;
        Ok(self.forward_cached(&sample.x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Vec<f64>, ForwardCache)> {
        x.check_finite("network input")?;
        let gated = match &self.importance {
            Some(fi) => fi.forward(x)?.0,
            None => x.clone(),
        };

        let mut parts: Vec<Tensor> = Vec::with_capacity(3);
        let mut conv_caches = Vec::with_capacity(self.conv.len());
        if !self.conv.is_empty() {
            let cols: Vec<usize> = self.layout.spatio_temporal_range().collect();
            let mut h = gather_columns(&gated, &cols);
            for layer in &self.conv {
                let (out, cache) = layer.forward(&h)?;
                conv_caches.push(cache);
                h = out;
            }
            parts.push(h);
        }
        let mut rnn_cache = None;
        if let Some(rnn) = &self.indrnn {
            let steps = gather_steps(&gated, &self.layout.step_columns());
            let (out, cache) = rnn.forward(&steps)?;
            rnn_cache = Some(cache);
            parts.push(out);
        }
        let pass = self.passthrough_columns();
        if !pass.is_empty() {
            parts.push(gather_columns(&gated, &pass));
        }
        let head_widths = parts.iter().map(Tensor::cols).collect();
        let refs: Vec<&Tensor> = parts.iter().collect();
        let mut h = concatenate(&refs)?;

        let mut dense_caches = Vec::with_capacity(self.dense.len());
        for layer in &self.dense {
            let (out, cache) = layer.forward(&h)?;
            dense_caches.push(cache);
            h = out;
        }
        let (out, out_cache) = self.output.forward(&h)?;
        let pred = out.into_data();
        Ok((
            pred,
            ForwardCache {
                x: x.clone(),
                conv: conv_caches,
                indrnn: rnn_cache,
                dense: dense_caches,
                output: out_cache,
                head_widths,
            },
        ))
    }

    /// Parameter gradients (in [`Network::params`] order) given `dL/dpred`.
    pub fn backward(&self, cache: &ForwardCache, grad_pred: &[f64]) -> Result<Vec<Tensor>> {
        let n = self.n_zones;
        let g_out = Tensor::from_vec(&[n, 1], grad_pred.to_vec())?;
        let out_g = self.output.backward(&g_out, &cache.output)?;
        let mut dense_grads = Vec::with_capacity(self.dense.len());
        let mut d = out_g.x;
        for (layer, c) in self.dense.iter().zip(&cache.dense).rev() {
            let g = layer.backward(&d, c)?;
            d = g.x;
            dense_grads.push((g.weights, g.bias));
        }
        dense_grads.reverse();

        let mut parts = split_columns(&d, &cache.head_widths)?.into_iter();
        let mut d_gated = Tensor::zeros(cache.x.shape());

        let mut conv_grads = Vec::with_capacity(self.conv.len());
        if !self.conv.is_empty() {
            let mut d = parts.next().expect("conv part");
            for (layer, c) in self.conv.iter().zip(&cache.conv).rev() {
                let g = layer.backward(&d, c)?;
                d = g.x;
                conv_grads.push((g.filters, g.bias));
            }
            conv_grads.reverse();
            let cols: Vec<usize> = self.layout.spatio_temporal_range().collect();
            scatter_columns(&d, &cols, &mut d_gated);
        }
        let mut rnn_grads = Vec::new();
        if let (Some(rnn), Some(c)) = (&self.indrnn, &cache.indrnn) {
            let d = parts.next().expect("indrnn part");
            let (dx, g) = rnn.backward(&d, c)?;
            scatter_steps(&dx, &self.layout.step_columns(), &mut d_gated);
            rnn_grads = g;
        }
        if let Some(d) = parts.next() {
            scatter_columns(&d, &self.passthrough_columns(), &mut d_gated);
        }

        let mut grads = Vec::new();
        if let Some(fi) = &self.importance {
            let (_, gw) = fi.backward(&d_gated, &cache.x)?;
            grads.push(gw);
        }
        for (w, b) in conv_grads {
            grads.extend([w, b]);
        }
        for g in rnn_grads {
            grads.extend([g.input_weights, g.recurrent_weights, g.bias]);
        }
        for (w, b) in dense_grads {
            grads.extend([w, b]);
        }
        grads.extend([out_g.weights, out_g.bias]);
        Ok(grads)
    }

    pub fn output_activation(&self) -> Activation {
        self.output.activation
    }
}
