use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tensor::Tensor;

#[derive(Debug, Error)]
#[error("shape mismatch at layer {layer}: {message}")]
pub struct ShapeError {
    pub layer: usize,
    pub message: String,
}

/// Layer descriptions. Convolution is cross-correlation in the usual
/// deep-learning convention; transposed convolution is its adjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    TransposedConv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        output_padding: usize,
    },
    Relu,
    LeakyRelu {
        slope: f64,
    },
    Sigmoid,
    Flatten,
    Reshape {
        shape: Vec<usize>,
    },
}

/// Weight and bias tensors for one layer (absent for parameterless layers).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerParams {
    pub weight: Option<Tensor>,
    pub bias: Option<Tensor>,
}

pub type LayerGrads = LayerParams;

impl LayerParams {
    pub fn zeros_like(&self) -> LayerParams {
        LayerParams {
            weight: self.weight.as_ref().map(|t| Tensor::zeros(&t.shape)),
            bias: self.bias.as_ref().map(|t| Tensor::zeros(&t.shape)),
        }
    }

    pub fn add_scaled(&mut self, other: &LayerParams, scale: f64) {
        if let (Some(a), Some(b)) = (self.weight.as_mut(), other.weight.as_ref()) {
            a.add_scaled(b, scale);
        }
        if let (Some(a), Some(b)) = (self.bias.as_mut(), other.bias.as_ref()) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, scale: f64) {
        if let Some(w) = self.weight.as_mut() {
            w.scale(scale);
        }
        if let Some(b) = self.bias.as_mut() {
            b.scale(scale);
        }
    }
}

/// Centered-uniform (Glorot) initialization with zero biases,
/// deterministic per seed.
pub fn init_params(specs: &[LayerSpec], seed: u64) -> Vec<LayerParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    specs
        .iter()
        .map(|spec| match spec {
            LayerSpec::Dense { inputs, outputs } => {
                let limit = (6.0 / (*inputs as f64 + *outputs as f64)).sqrt();
                let weight = uniform_tensor(&mut rng, &[*outputs, *inputs], limit);
                LayerParams { weight: Some(weight), bias: Some(Tensor::zeros(&[*outputs])) }
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                let fan_in = in_channels * kernel * kernel;
                let fan_out = out_channels * kernel * kernel;
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight = uniform_tensor(
                    &mut rng,
                    &[*out_channels, *in_channels, *kernel, *kernel],
                    limit,
                );
                LayerParams {
                    weight: Some(weight),
                    bias: Some(Tensor::zeros(&[*out_channels])),
                }
            }
            LayerSpec::TransposedConv2d { in_channels, out_channels, kernel, .. } => {
                let fan_in = in_channels * kernel * kernel;
                let fan_out = out_channels * kernel * kernel;
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight = uniform_tensor(
                    &mut rng,
                    &[*in_channels, *out_channels, *kernel, *kernel],
                    limit,
                );
                LayerParams {
                    weight: Some(weight),
                    bias: Some(Tensor::zeros(&[*out_channels])),
                }
            }
            _ => LayerParams::default(),
        })
        .collect()
}

fn uniform_tensor(rng: &mut ChaCha8Rng, shape: &[usize], limit: f64) -> Tensor {
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::from_vec(shape, data)
}

/// Numerically stable softmax: shift by the max logit before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer, plus the final output at the end.
    pub activations: Vec<Tensor>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.activations.last().expect("non-empty cache")
    }
}

/// A sequential network: layer specs plus matching parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<LayerSpec>,
    pub params: Vec<LayerParams>,
}

impl Network {
    pub fn new(layers: Vec<LayerSpec>, seed: u64) -> Network {
        let params = init_params(&layers, seed);
        Network { layers, params }
    }

    pub fn zero_grads(&self) -> Vec<LayerGrads> {
        self.params.iter().map(LayerParams::zeros_like).collect()
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, ShapeError> {
        let mut cache = self.forward_cached(input)?;
        Ok(cache.activations.pop().expect("non-empty cache"))
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<ForwardCache, ShapeError> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for (idx, (spec, params)) in self.layers.iter().zip(&self.params).enumerate() {
            let out = forward_layer(spec, params, activations.last().unwrap())
                .map_err(|message| ShapeError { layer: idx, message })?;
            activations.push(out);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse pass: gradient of a scalar loss with respect to every
    /// parameter and to the network input, given d(loss)/d(output).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &Tensor,
    ) -> (Vec<LayerGrads>, Tensor) {
        let mut grads: Vec<LayerGrads> = self.params.iter().map(|p| p.zeros_like()).collect();
        let mut upstream = grad_output.clone();
        for idx in (0..self.layers.len()).rev() {
            let input = &cache.activations[idx];
            let (layer_grads, grad_in) =
                backward_layer(&self.layers[idx], &self.params[idx], input, &upstream);
            grads[idx] = layer_grads;
            upstream = grad_in;
        }
        (grads, upstream)
    }

    /// Average gradient of `loss` over a batch. The loss closure returns
    /// the scalar value and its gradient with respect to each output;
    /// accumulation order is fixed (batch order) for reproducibility.
    pub fn gradients<F>(
        &self,
        inputs: &[Tensor],
        loss: F,
    ) -> Result<(f64, Vec<LayerGrads>), ShapeError>
    where
        F: Fn(&[Tensor]) -> (f64, Vec<Tensor>),
    {
        let caches: Vec<ForwardCache> = inputs
            .iter()
            .map(|x| self.forward_cached(x))
            .collect::<Result<_, _>>()?;
        let outputs: Vec<Tensor> = caches.iter().map(|c| c.output().clone()).collect();
        let (value, output_grads) = loss(&outputs);
        assert_eq!(output_grads.len(), outputs.len(), "loss must grade every output");
        let mut total = self.zero_grads();
        for (cache, grad_out) in caches.iter().zip(&output_grads) {
            let (sample_grads, _) = self.backward(cache, grad_out);
            for (t, s) in total.iter_mut().zip(&sample_grads) {
                t.add_scaled(s, 1.0);
            }
        }
        Ok((value, total))
    }

    pub fn param_count(&self) -> usize {
        self.params
            .iter()
            .map(|p| {
                p.weight.as_ref().map_or(0, Tensor::len) + p.bias.as_ref().map_or(0, Tensor::len)
            })
            .sum()
    }
}

fn chw(input: &Tensor) -> Result<(usize, usize, usize), String> {
    match input.shape.as_slice() {
        [c, h, w] => Ok((*c, *h, *w)),
        other => Err(format!("expected [C,H,W] input, got {other:?}")),
    }
}

fn forward_layer(
    spec: &LayerSpec,
    params: &LayerParams,
    input: &Tensor,
) -> Result<Tensor, String> {
    match spec {
        LayerSpec::Dense { inputs, outputs } => {
            if input.len() != *inputs {
                return Err(format!("dense expects {} inputs, got {}", inputs, input.len()));
            }
            let w = params.weight.as_ref().unwrap();
            let b = params.bias.as_ref().unwrap();
            let mut out = vec![0.0; *outputs];
            for o in 0..*outputs {
                let row = &w.data[o * inputs..(o + 1) * inputs];
                let mut acc = b.data[o];
                for (wi, xi) in row.iter().zip(&input.data) {
                    acc += wi * xi;
                }
                out[o] = acc;
            }
            Ok(Tensor::from_vec(&[*outputs], out))
        }
        LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
            let (c, h, w) = chw(input)?;
            if c != *in_channels {
                return Err(format!("conv2d expects {in_channels} channels, got {c}"));
            }
            let k = *kernel;
            let s = *stride;
            let p = *padding;
            if h + 2 * p < k || w + 2 * p < k {
                return Err("kernel larger than padded input".to_string());
            }
            let oh = (h + 2 * p - k) / s + 1;
            let ow = (w + 2 * p - k) / s + 1;
            let weight = params.weight.as_ref().unwrap();
            let bias = params.bias.as_ref().unwrap();
            let mut out = Tensor::zeros(&[*out_channels, oh, ow]);
            for o in 0..*out_channels {
                for i in 0..oh {
                    for j in 0..ow {
                        let mut acc = bias.data[o];
                        for ci in 0..c {
                            for u in 0..k {
                                let y = (i * s + u) as isize - p as isize;
                                if y < 0 || y >= h as isize {
                                    continue;
                                }
                                for v in 0..k {
                                    let x = (j * s + v) as isize - p as isize;
                                    if x < 0 || x >= w as isize {
                                        continue;
                                    }
                                    let wv = weight.data
                                        [((o * c + ci) * k + u) * k + v];
                                    let xv = input.data
                                        [(ci * h + y as usize) * w + x as usize];
                                    acc += wv * xv;
                                }
                            }
                        }
                        out.data[(o * oh + i) * ow + j] = acc;
                    }
                }
            }
            Ok(out)
        }
        LayerSpec::TransposedConv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            output_padding,
        } => {
            let (c, h, w) = chw(input)?;
            if c != *in_channels {
                return Err(format!(
                    "transposed_conv2d expects {in_channels} channels, got {c}"
                ));
            }
            let k = *kernel;
            let s = *stride;
            let p = *padding;
            let oh = (h - 1) * s + k + output_padding - 2 * p;
            let ow = (w - 1) * s + k + output_padding - 2 * p;
            let weight = params.weight.as_ref().unwrap();
            let bias = params.bias.as_ref().unwrap();
            let mut out = Tensor::zeros(&[*out_channels, oh, ow]);
            for o in 0..*out_channels {
                for y in 0..oh {
                    for x in 0..ow {
                        out.data[(o * oh + y) * ow + x] = bias.data[o];
                    }
                }
            }
            // Scatter: each input cell contributes a kernel patch.
            for ci in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        let xv = input.data[(ci * h + i) * w + j];
                        for o in 0..*out_channels {
                            for u in 0..k {
                                let y = (i * s + u) as isize - p as isize;
                                if y < 0 || y >= oh as isize {
                                    continue;
                                }
                                for v in 0..k {
                                    let x = (j * s + v) as isize - p as isize;
                                    if x < 0 || x >= ow as isize {
                                        continue;
                                    }
                                    let wv = weight.data
                                        [((ci * out_channels + o) * k + u) * k + v];
                                    out.data[(o * oh + y as usize) * ow + x as usize] +=
                                        wv * xv;
                                }
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
        LayerSpec::Relu => Ok(Tensor {
            shape: input.shape.clone(),
            data: input.data.iter().map(|&v| v.max(0.0)).collect(),
        }),
        LayerSpec::LeakyRelu { slope } => Ok(Tensor {
            shape: input.shape.clone(),
            data: input
                .data
                .iter()
                .map(|&v| if v > 0.0 { v } else { slope * v })
                .collect(),
        }),
        LayerSpec::Sigmoid => Ok(Tensor {
            shape: input.shape.clone(),
            data: input.data.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect(),
        }),
        LayerSpec::Flatten => Ok(input.reshaped(&[input.len()])),
        LayerSpec::Reshape { shape } => {
            if shape.iter().product::<usize>() != input.len() {
                return Err(format!(
                    "cannot reshape {} elements to {shape:?}",
                    input.len()
                ));
            }
            Ok(input.reshaped(shape))
        }
    }
}

fn backward_layer(
    spec: &LayerSpec,
    params: &LayerParams,
    input: &Tensor,
    grad_out: &Tensor,
) -> (LayerGrads, Tensor) {
    match spec {
        LayerSpec::Dense { inputs, outputs } => {
            let w = params.weight.as_ref().unwrap();
            let mut gw = Tensor::zeros(&[*outputs, *inputs]);
            let mut gb = Tensor::zeros(&[*outputs]);
            let mut gin = Tensor::zeros(&input.shape);
            for o in 0..*outputs {
                let g = grad_out.data[o];
                gb.data[o] = g;
                for i in 0..*inputs {
                    gw.data[o * inputs + i] = g * input.data[i];
                    gin.data[i] += g * w.data[o * inputs + i];
                }
            }
            (LayerGrads { weight: Some(gw), bias: Some(gb) }, gin)
        }
        LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
            let (c, h, w) = chw(input).expect("validated in forward");
            let k = *kernel;
            let s = *stride;
            let p = *padding;
            let oh = (h + 2 * p - k) / s + 1;
            let ow = (w + 2 * p - k) / s + 1;
            let weight = params.weight.as_ref().unwrap();
            let mut gw = Tensor::zeros(&weight.shape);
            let mut gb = Tensor::zeros(&[*out_channels]);
            let mut gin = Tensor::zeros(&input.shape);
            let _ = in_channels;
            for o in 0..*out_channels {
                for i in 0..oh {
                    for j in 0..ow {
                        let g = grad_out.data[(o * oh + i) * ow + j];
                        gb.data[o] += g;
                        for ci in 0..c {
                            for u in 0..k {
                                let y = (i * s + u) as isize - p as isize;
                                if y < 0 || y >= h as isize {
                                    continue;
                                }
                                for v in 0..k {
                                    let x = (j * s + v) as isize - p as isize;
                                    if x < 0 || x >= w as isize {
                                        continue;
                                    }
                                    let in_idx = (ci * h + y as usize) * w + x as usize;
                                    let w_idx = ((o * c + ci) * k + u) * k + v;
                                    gw.data[w_idx] += g * input.data[in_idx];
                                    gin.data[in_idx] += g * weight.data[w_idx];
                                }
                            }
                        }
                    }
                }
            }
            (LayerGrads { weight: Some(gw), bias: Some(gb) }, gin)
        }
        LayerSpec::TransposedConv2d {
            in_channels: _,
            out_channels,
            kernel,
            stride,
            padding,
            output_padding,
        } => {
            let (c, h, w) = chw(input).expect("validated in forward");
            let k = *kernel;
            let s = *stride;
            let p = *padding;
            let oh = (h - 1) * s + k + output_padding - 2 * p;
            let ow = (w - 1) * s + k + output_padding - 2 * p;
            let weight = params.weight.as_ref().unwrap();
            let mut gw = Tensor::zeros(&weight.shape);
            let mut gb = Tensor::zeros(&[*out_channels]);
            let mut gin = Tensor::zeros(&input.shape);
            for o in 0..*out_channels {
                for y in 0..oh {
                    for x in 0..ow {
                        gb.data[o] += grad_out.data[(o * oh + y) * ow + x];
                    }
                }
            }
            for ci in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        let in_idx = (ci * h + i) * w + j;
                        let xv = input.data[in_idx];
                        for o in 0..*out_channels {
                            for u in 0..k {
                                let y = (i * s + u) as isize - p as isize;
                                if y < 0 || y >= oh as isize {
                                    continue;
                                }
                                for v in 0..k {
                                    let x = (j * s + v) as isize - p as isize;
                                    if x < 0 || x >= ow as isize {
                                        continue;
                                    }
                                    let g = grad_out.data
                                        [(o * oh + y as usize) * ow + x as usize];
                                    let w_idx = ((ci * out_channels + o) * k + u) * k + v;
                                    gw.data[w_idx] += g * xv;
                                    gin.data[in_idx] += g * weight.data[w_idx];
                                }
                            }
                        }
                    }
                }
            }
            (LayerGrads { weight: Some(gw), bias: Some(gb) }, gin)
        }
        LayerSpec::Relu => {
            let data = input
                .data
                .iter()
                .zip(&grad_out.data)
                .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                .collect();
            (LayerGrads::default(), Tensor { shape: input.shape.clone(), data })
        }
        LayerSpec::LeakyRelu { slope } => {
            let data = input
                .data
                .iter()
                .zip(&grad_out.data)
                .map(|(&x, &g)| if x > 0.0 { g } else { slope * g })
                .collect();
            (LayerGrads::default(), Tensor { shape: input.shape.clone(), data })
        }
        LayerSpec::Sigmoid => {
            let data = input
                .data
                .iter()
                .zip(&grad_out.data)
                .map(|(&x, &g)| {
                    let y = 1.0 / (1.0 + (-x).exp());
                    g * y * (1.0 - y)
                })
                .collect();
            (LayerGrads::default(), Tensor { shape: input.shape.clone(), data })
        }
        LayerSpec::Flatten | LayerSpec::Reshape { .. } => {
            (LayerGrads::default(), grad_out.reshaped(&input.shape))
        }
    }
}
