use ndarray::{Array1, Array2, ArrayD, ArrayView1, ArrayView2, ArrayView3, Ix1, Ix2, Ix3, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ArchitectureConfig;
use super::layers::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, gru_backward, gru_forward,
    Activation, ConvCache, DenseCache, GruCache, GruParams,
};
use super::loss::dice_loss;
use crate::data::PaddedBatch;
use crate::error::{Error, Result};

/// A named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: ArrayD<f64>,
}

#[derive(Debug, Clone, Copy)]
enum LayerSpec {
    Conv { weight: usize, bias: usize },
    Gru { input_weight: usize, recurrent_weight: usize, bias: usize },
    Dense { weight: usize, bias: usize, activation: Activation },
}

/// Parameter names and shapes implied by `config`, in storage order.
pub fn parameter_shapes(config: &ArchitectureConfig) -> Vec<(String, Vec<usize>)> {
    let mut shapes = Vec::new();
    let mut width = config.input_channels;
    for (i, conv) in config.conv_layers.iter().enumerate() {
        shapes.push((format!("conv{i}.weight"), vec![conv.kernel_size, width, conv.filters]));
        shapes.push((format!("conv{i}.bias"), vec![conv.filters]));
        width = conv.filters;
    }
    for (i, &hidden) in config.gru_layers.iter().enumerate() {
        shapes.push((format!("gru{i}.input_weight"), vec![width, 3 * hidden]));
        shapes.push((format!("gru{i}.recurrent_weight"), vec![hidden, 3 * hidden]));
        shapes.push((format!("gru{i}.bias"), vec![3 * hidden]));
        width = hidden;
    }
    shapes.push(("dense.weight".into(), vec![width, config.dense_hidden]));
    shapes.push(("dense.bias".into(), vec![config.dense_hidden]));
    shapes.push(("output.weight".into(), vec![config.dense_hidden, config.num_states]));
    shapes.push(("output.bias".into(), vec![config.num_states]));
    shapes
}

fn layout(config: &ArchitectureConfig) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    let mut next = 0;
    let mut take = |k: usize| {
        let start = next;
        next += k;
        start
    };
    for _ in &config.conv_layers {
        let w = take(2);
        specs.push(LayerSpec::Conv { weight: w, bias: w + 1 });
    }
    for _ in &config.gru_layers {
        let w = take(3);
        specs.push(LayerSpec::Gru {
            input_weight: w,
            recurrent_weight: w + 1,
            bias: w + 2,
        });
    }
    let w = take(2);
    specs.push(LayerSpec::Dense {
        weight: w,
        bias: w + 1,
        activation: Activation::LeakyRelu(config.leaky_alpha),
    });
    let w = take(2);
    specs.push(LayerSpec::Dense {
        weight: w,
        bias: w + 1,
        activation: Activation::Softmax,
    });
    specs
}

enum Cache {
    Conv(ConvCache),
    Gru(GruCache),
    Dense(DenseCache),
}

/// Activations retained by [`Network::forward`] for [`Network::backward`].
pub struct ForwardPass {
    pub probs: Array2<f64>,
    caches: Vec<Cache>,
}

/// Convolution stack, GRU stack and a two-layer dense head with softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: ArchitectureConfig,
    params: Vec<Tensor>,
}

impl Network {
    /// Glorot-uniform weights and zero biases, drawn from `seed`.
    pub fn new(config: ArchitectureConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = parameter_shapes(&config)
            .into_iter()
            .map(|(name, shape)| {
                let value = if name.ends_with("bias") {
                    ArrayD::zeros(IxDyn(&shape))
                } else {
                    let (fan_in, fan_out) = match shape.as_slice() {
                        [k, cin, cout] => (k * cin, k * cout),
                        [rows, cols] => (*rows, *cols),
                        _ => unreachable!("weights are 2-D or 3-D"),
                    };
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    ArrayD::from_shape_simple_fn(IxDyn(&shape), || rng.gen_range(-limit..limit))
                };
                Tensor { name, value }
            })
            .collect();
        Ok(Self { config, params })
    }

    /// Rebuilds a network from stored tensors, checking every shape.
    pub fn from_parameters(config: ArchitectureConfig, params: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let expected = parameter_shapes(&config);
        if expected.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                expected.len(),
                params.len()
            )));
        }
        for ((name, shape), t) in expected.iter().zip(&params) {
            if *name != t.name || shape.as_slice() != t.value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {} {:?} does not match expected {name} {shape:?}",
                    t.name,
                    t.value.shape()
                )));
            }
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[Tensor] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|t| t.value.len()).sum()
    }

    fn view2(&self, i: usize) -> ArrayView2<'_, f64> {
        self.params[i].value.view().into_dimensionality::<Ix2>().expect("2-D")
    }

    fn view1(&self, i: usize) -> ArrayView1<'_, f64> {
        self.params[i].value.view().into_dimensionality::<Ix1>().expect("1-D")
    }

    fn view3(&self, i: usize) -> ArrayView3<'_, f64> {
        self.params[i].value.view().into_dimensionality::<Ix3>().expect("3-D")
    }

    /// Runs the network on an unpadded `len x n` input and returns per-timestep
    /// class probabilities.
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<ForwardPass> {
        if input.ncols() != self.config.input_channels {
            return Err(Error::ChannelMismatch {
                expected: self.config.input_channels,
                found: input.ncols(),
            });
        }
        let mut x = input.to_owned();
        let mut caches = Vec::new();
        for spec in layout(&self.config) {
            let (out, cache) = match spec {
                LayerSpec::Conv { weight, bias } => {
                    let (o, c) = conv1d_forward(x.view(), self.view3(weight), self.view1(bias))?;
                    (o, Cache::Conv(c))
                }
                LayerSpec::Gru {
                    input_weight,
                    recurrent_weight,
                    bias,
                } => {
                    let params = GruParams {
                        input_weight: self.view2(input_weight),
                        recurrent_weight: self.view2(recurrent_weight),
                        bias: self.view1(bias),
                    };
                    let (o, c) = gru_forward(x.view(), params, None)?;
                    (o, Cache::Gru(c))
                }
                LayerSpec::Dense {
                    weight,
                    bias,
                    activation,
                } => {
                    let (o, c) =
                        dense_forward(x.view(), self.view2(weight), self.view1(bias), activation)?;
                    (o, Cache::Dense(c))
                }
            };
            caches.push(cache);
            x = out;
        }
        Ok(ForwardPass { probs: x, caches })
    }

    /// Forward pass over a padded input: the network runs on the unmasked
    /// prefix and masked rows of the `L x N_s` output hold the uniform
    /// distribution. Activations at padded positions are therefore zero at
    /// every layer and the padded tail cannot influence unmasked outputs.
    pub fn forward_padded(&self, batch: &PaddedBatch) -> Result<Array2<f64>> {
        let fwd = self.forward(batch.valid())?;
        let ns = self.config.num_states;
        let mut out = Array2::from_elem((batch.target_length(), ns), 1.0 / ns as f64);
        out.slice_mut(ndarray::s![..batch.original_length, ..])
            .assign(&fwd.probs);
        Ok(out)
    }

    /// Gradients of a scalar objective with respect to every parameter, given
    /// its gradient with respect to the output probabilities.
    pub fn backward(&self, pass: &ForwardPass, d_probs: ArrayView2<'_, f64>) -> Vec<ArrayD<f64>> {
        let mut grads: Vec<ArrayD<f64>> = self
            .params
            .iter()
            .map(|t| ArrayD::zeros(t.value.raw_dim()))
            .collect();
        let mut d = d_probs.to_owned();
        for (spec, cache) in layout(&self.config).into_iter().zip(&pass.caches).rev() {
            d = match (spec, cache) {
                (LayerSpec::Conv { weight, bias }, Cache::Conv(c)) => {
                    let (dx, dw, db) = conv1d_backward(c, self.view3(weight), d.view());
                    let shape = self.params[weight].value.raw_dim();
                    grads[weight] = dw.into_shape_with_order(shape).expect("conv grad shape");
                    grads[bias] = db.into_dyn();
                    dx
                }
                (
                    LayerSpec::Gru {
                        input_weight,
                        recurrent_weight,
                        bias,
                    },
                    Cache::Gru(c),
                ) => {
                    let params = GruParams {
                        input_weight: self.view2(input_weight),
                        recurrent_weight: self.view2(recurrent_weight),
                        bias: self.view1(bias),
                    };
                    let g = gru_backward(c, params, d.view());
                    grads[input_weight] = g.input_weight.into_dyn();
                    grads[recurrent_weight] = g.recurrent_weight.into_dyn();
                    grads[bias] = g.bias.into_dyn();
                    g.input
                }
                (
                    LayerSpec::Dense {
                        weight,
                        bias,
                        activation,
                    },
                    Cache::Dense(c),
                ) => {
                    let (dx, dw, db) = dense_backward(c, self.view2(weight), activation, d.view());
                    grads[weight] = dw.into_dyn();
                    grads[bias] = db.into_dyn();
                    dx
                }
                _ => unreachable!("cache order follows layout"),
            };
        }
        grads
    }

    /// Dice loss of one unpadded sample and the gradients of every parameter.
    pub fn loss_and_gradients(
        &self,
        input: ArrayView2<'_, f64>,
        target: ArrayView2<'_, f64>,
    ) -> Result<(f64, Array2<f64>, Vec<ArrayD<f64>>)> {
        let pass = self.forward(input)?;
        let mask = vec![true; input.nrows()];
        let (loss, d_probs) = dice_loss(pass.probs.view(), target, &mask)?;
        let grads = self.backward(&pass, d_probs.view());
        Ok((loss, pass.probs, grads))
    }
}

/// Flattened parameter view used by tests and the optimizer.
pub fn flatten(tensors: &[ArrayD<f64>]) -> Array1<f64> {
    tensors.iter().flat_map(|t| t.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::{ArchitectureConfig, ConvSpec, Preset, Variant};

    fn tiny(variant: Variant) -> ArchitectureConfig {
        ArchitectureConfig {
            variant: Variant::Hybrid,
            conv_layers: vec![ConvSpec::new(3, 3), ConvSpec::new(2, 4)],
            gru_layers: vec![4, 3],
            dense_hidden: 5,
            leaky_alpha: 0.3,
            num_states: 3,
            input_channels: 2,
            max_length: 20,
        }
        .with_variant(variant)
    }

    #[test]
    fn paper_scale_parameter_count() {
        // conv: 1984 + 20544 + 41024 + 61504 + 81984 = 207040
        // gru: (64*384 + 128*384 + 384) + (128*384 + 128*384 + 384) = 74112 + 98688
        // dense: 128*128 + 128 = 16512; output: 128*25 + 25 = 3225
        let cfg = ArchitectureConfig::preset(Preset::PaperScale, 10, 25);
        let net = Network::new(cfg, 0).unwrap();
        assert_eq!(net.num_parameters(), 399_577);
    }

    #[test]
    fn ablations_drop_their_section() {
        let cfg = ArchitectureConfig::preset(Preset::Desk, 10, 9);
        let cnn = Network::new(cfg.clone().with_variant(Variant::CnnOnly), 0).unwrap();
        assert!(cnn.parameters().iter().all(|t| !t.name.starts_with("gru")));
        let rnn = Network::new(cfg.with_variant(Variant::RnnOnly), 0).unwrap();
        assert!(rnn.parameters().iter().all(|t| !t.name.starts_with("conv")));
    }

    #[test]
    fn output_rows_are_distributions() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for variant in Variant::ALL {
            let net = Network::new(tiny(variant), 1).unwrap();
            let x = Array2::from_shape_fn((9, 2), |_| rng.gen_range(-2.0..2.0));
            let pass = net.forward(x.view()).unwrap();
            assert_eq!(pass.probs.dim(), (9, 3));
            for row in pass.probs.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn padded_tail_does_not_leak() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::new(tiny(Variant::Hybrid), 2).unwrap();
        let mut data = Array2::from_shape_fn((12, 2), |_| rng.gen_range(-1.0..1.0));
        let mask: Vec<bool> = (0..12).map(|t| t < 8).collect();
        let a = net
            .forward_padded(&PaddedBatch {
                data: data.clone(),
                mask: mask.clone(),
                original_length: 8,
            })
            .unwrap();
        data.slice_mut(ndarray::s![8.., ..]).mapv_inplace(|_| rng.gen_range(-50.0..50.0));
        let b = net
            .forward_padded(&PaddedBatch {
                data,
                mask,
                original_length: 8,
            })
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), (12, 3));
    }

    #[test]
    fn rejects_mismatched_tensors() {
        let cfg = tiny(Variant::Hybrid);
        let mut params = Network::new(cfg.clone(), 0).unwrap().parameters().to_vec();
        params[0].value = ArrayD::zeros(IxDyn(&[1, 1, 1]));
        assert!(matches!(
            Network::from_parameters(cfg, params),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn channel_mismatch() {
        let net = Network::new(tiny(Variant::Hybrid), 0).unwrap();
        assert!(matches!(
            net.forward(Array2::zeros((4, 5)).view()),
            Err(Error::ChannelMismatch { expected: 2, found: 5 })
        ));
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        for (seed, variant) in [(1, Variant::Hybrid), (2, Variant::CnnOnly), (3, Variant::RnnOnly)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = Network::new(tiny(variant), seed).unwrap();
            // Random biases keep pre-activations off the activation kinks.
            for t in net.parameters_mut() {
                t.value.mapv_inplace(|v| v + rng.gen_range(-0.3..0.3));
            }
            let x = Array2::from_shape_fn((7, 2), |_| rng.gen_range(-1.0..1.0));
            let mut target = Array2::zeros((7, 3));
            for t in 0..7 {
                target[[t, rng.gen_range(0..3)]] = 1.0;
            }
            let (_, _, grads) = net.loss_and_gradients(x.view(), target.view()).unwrap();
            let h = 1e-5;
            for p in 0..net.parameters().len() {
                for i in 0..net.parameters()[p].value.len() {
                    let orig = net.params[p].value.as_slice_mut().unwrap()[i];
                    net.params[p].value.as_slice_mut().unwrap()[i] = orig + h;
                    let up = net.loss_and_gradients(x.view(), target.view()).unwrap().0;
                    net.params[p].value.as_slice_mut().unwrap()[i] = orig - h;
                    let down = net.loss_and_gradients(x.view(), target.view()).unwrap().0;
                    net.params[p].value.as_slice_mut().unwrap()[i] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = grads[p].as_slice().unwrap()[i];
                    let err = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6);
                    assert!(err < 1e-4, "{:?} {} [{i}]: {analytic} vs {numeric}", variant, net.params[p].name);
                }
            }
        }
    }
}
