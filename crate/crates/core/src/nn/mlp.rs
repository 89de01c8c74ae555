use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Input width plus (width, activation) of every layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub layers: Vec<(usize, Activation)>,
}

impl Architecture {
    pub fn new(input: usize, layers: Vec<(usize, Activation)>) -> Self {
        Self { input, layers }
    }

    /// `input -> hidden... (relu) -> output (head)`.
    pub fn mlp(input: usize, hidden: &[usize], output: usize, head: Activation) -> Self {
        let mut layers: Vec<(usize, Activation)> =
            hidden.iter().map(|&h| (h, Activation::Relu)).collect();
        layers.push((output, head));
        Self { input, layers }
    }

    pub fn output(&self) -> usize {
        self.layers.last().map_or(self.input, |l| l.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// out x in
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Activations of one batched forward pass: entry 0 is the input, entry
/// `i + 1` the activated output of layer `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("input is always cached")
    }
}

/// Which gradients a reverse pass produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    /// Parameters and input.
    All,
    /// Parameters only; `Gradients::input` comes back empty.
    Params,
    /// Input only; `Gradients::layers` comes back empty.
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameter gradients (summed over the batch) and per-row input gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Array2<f64>,
}

impl Gradients {
    /// Flat view in the same order as [`Mlp::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weights.iter());
            out.extend(g.bias.iter());
        }
        out
    }
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ArchitectureMismatch(
                "network needs at least one layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[1].weights.ncols() != pair[0].weights.nrows() {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer output {} does not feed input {}",
                    pair[0].weights.nrows(),
                    pair[1].weights.ncols()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::ArchitectureMismatch(
                    "bias length differs from layer width".into(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.nrows()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input: self.input_dim(),
            layers: self
                .layers
                .iter()
                .map(|l| (l.weights.nrows(), l.activation))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        Ok(())
    }

    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.ncols())?;
        let mut x = inputs.to_owned();
        for l in &self.layers {
            x = affine(&x, l);
        }
        Ok(x)
    }

    pub fn forward_cached(&self, inputs: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(inputs.ncols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_owned());
        for l in &self.layers {
            let y = affine(activations.last().expect("non-empty"), l);
            activations.push(y);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse pass for the scalar `sum(output * output_grad)`; parameter
    /// gradients are summed over the batch.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        output_grad: ArrayView2<f64>,
        target: GradTarget,
    ) -> Result<Gradients> {
        let out = cache.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::DimensionMismatch {
                expected: out.len(),
                actual: output_grad.len(),
            });
        }
        let param_grads = target != GradTarget::Input;
        let mut grad = output_grad.to_owned();
        let mut layers = Vec::with_capacity(if param_grads { self.layers.len() } else { 0 });
        for (i, l) in self.layers.iter().enumerate().rev() {
            let a = &cache.activations[i + 1];
            grad.zip_mut_with(a, |g, &a| *g *= l.activation.derivative_from_output(a));
            if param_grads {
                layers.push(LayerGrad {
                    weights: grad
                        .t()
                        .dot(&cache.activations[i])
                        .as_standard_layout()
                        .into_owned(),
                    bias: grad.sum_axis(Axis(0)),
                });
            }
            if i > 0 || target != GradTarget::Params {
                grad = grad.dot(&l.weights);
            } else {
                grad = Array2::zeros((0, 0));
            }
        }
        layers.reverse();
        Ok(Gradients {
            layers,
            input: grad,
        })
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: got,
            });
        }
        Ok(())
    }
}

fn affine(x: &Array2<f64>, layer: &Layer) -> Array2<f64> {
    let mut z = x.dot(&layer.weights.t());
    z += &layer.bias;
    let act = layer.activation;
    if act != Activation::Identity {
        z.mapv_inplace(|v| act.apply(v));
    }
    z
}

/// Single-input forward pass.
pub fn forward(net: &Mlp, input: &[f64]) -> Result<Vec<f64>> {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    Ok(net.forward_batch(x)?.into_raw_vec_and_offset().0)
}

/// Single-input reverse pass; `input` of the result holds one row.
pub fn backward(net: &Mlp, input: &[f64], output_grad: &[f64]) -> Result<Gradients> {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    let cache = net.forward_cached(x)?;
    let g = ArrayView2::from_shape((1, output_grad.len()), output_grad).expect("row vector");
    net.backward_batch(&cache, g, GradTarget::All)
}

/// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
pub fn init_params(arch: &Architecture, rng: &mut RngStream) -> Mlp {
    let mut fan_in = arch.input;
    let mut layers = Vec::with_capacity(arch.layers.len());
    for &(width, activation) in &arch.layers {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weights =
            Array2::from_shape_simple_fn((width, fan_in), || bound * (2.0 * rng.uniform() - 1.0));
        layers.push(Layer {
            weights,
            bias: Array1::zeros(width),
            activation,
        });
        fan_in = width;
    }
    Mlp::from_layers(layers).expect("architecture chains by construction")
}

/// Blends every target parameter toward the online one: `tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if target.architecture() != online.architecture() {
        return Err(Error::ArchitectureMismatch(
            "soft update between different architectures".into(),
        ));
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        t.weights
            .zip_mut_with(&o.weights, |t, &o| *t = tau * o + (1.0 - tau) * *t);
        t.bias
            .zip_mut_with(&o.bias, |t, &o| *t = tau * o + (1.0 - tau) * *t);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn linear(w: Array2<f64>, b: Array1<f64>, activation: Activation) -> Mlp {
        Mlp::from_layers(vec![Layer {
            weights: w,
            bias: b,
            activation,
        }])
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input() {
        let net = linear(Array2::eye(3), Array1::zeros(3), Activation::Identity);
        assert_eq!(
            forward(&net, &[0.5, -2.0, 7.0]).unwrap(),
            vec![0.5, -2.0, 7.0]
        );
    }

    #[test]
    fn zero_weights_output_bias() {
        let net = linear(
            Array2::zeros((2, 3)),
            arr1(&[0.3, -0.1]),
            Activation::Identity,
        );
        assert_eq!(forward(&net, &[9.0, 9.0, 9.0]).unwrap(), vec![0.3, -0.1]);
    }

    #[test]
    fn tanh_head_is_bounded() {
        let arch = Architecture::mlp(4, &[16], 3, Activation::Tanh);
        let mut net = init_params(&arch, &mut RngStream::new(1));
        net.layers_mut()[1].weights *= 50.0;
        let y = forward(&net, &[10.0, -10.0, 3.0, 1.0]).unwrap();
        assert!(y.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = linear(Array2::eye(2), Array1::zeros(2), Activation::Identity);
        assert!(matches!(
            forward(&net, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
        assert!(backward(&net, &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn linear_gradients_match_calculus() {
        let w = arr2(&[[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]]);
        let net = linear(w.clone(), arr1(&[0.1, 0.2]), Activation::Identity);
        let x = [1.0, -2.0, 0.5];
        let g = [2.0, -1.0];
        let grads = backward(&net, &x, &g).unwrap();
        let expected_dw = arr2(&[[2.0, -4.0, 1.0], [-1.0, 2.0, -0.5]]);
        assert_eq!(grads.layers[0].weights, expected_dw);
        assert_eq!(grads.layers[0].bias, arr1(&g));
        let dx: Vec<f64> = grads.input.row(0).to_vec();
        assert_eq!(dx, vec![1.5, 4.0, -5.0]);
    }

    #[test]
    fn relu_blocks_negative_preactivation() {
        let net = linear(arr2(&[[1.0], [-1.0]]), Array1::zeros(2), Activation::Relu);
        let grads = backward(&net, &[2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(grads.layers[0].weights, arr2(&[[2.0], [0.0]]));
        assert_eq!(grads.layers[0].bias, arr1(&[1.0, 0.0]));
    }

    #[test]
    fn init_respects_fan_in_bound_and_seed() {
        let arch = Architecture::mlp(100, &[50], 1, Activation::Identity);
        let a = init_params(&arch, &mut RngStream::new(7));
        let b = init_params(&arch, &mut RngStream::new(7));
        assert_eq!(a, b);
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= 0.1));
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_weight_mean_is_centered() {
        let arch = Architecture::new(100, vec![(1000, Activation::Relu)]);
        let net = init_params(&arch, &mut RngStream::new(13));
        let w = &net.layers()[0].weights;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        // uniform on [-0.1, 0.1]: sigma = 0.1 / sqrt(3)
        assert!(mean.abs() < 3.0 * (0.1 / 3f64.sqrt()) / n.sqrt());
    }

    #[test]
    fn soft_update_endpoints_and_midpoint() {
        let arch = Architecture::mlp(3, &[4], 2, Activation::Tanh);
        let online = init_params(&arch, &mut RngStream::new(1));
        let original = init_params(&arch, &mut RngStream::new(2));

        let mut target = original.clone();
        soft_update(&mut target, &online, 0.0).unwrap();
        assert_eq!(target, original);
        soft_update(&mut target, &online, 1.0).unwrap();
        assert_eq!(target, online);

        let mut zero = online.clone();
        zero.set_flat_params(&vec![0.0; online.param_count()])
            .unwrap();
        let mut ones = online.clone();
        ones.set_flat_params(&vec![1.0; online.param_count()])
            .unwrap();
        soft_update(&mut zero, &ones, 0.5).unwrap();
        assert!(zero.flat_params().iter().all(|&p| p == 0.5));

        let other = init_params(
            &Architecture::mlp(3, &[5], 2, Activation::Tanh),
            &mut RngStream::new(1),
        );
        assert!(soft_update(&mut target, &other, 0.5).is_err());
    }

    #[test]
    fn soft_update_contracts_geometrically() {
        let arch = Architecture::mlp(2, &[3], 1, Activation::Identity);
        let online = init_params(&arch, &mut RngStream::new(1));
        let mut target = init_params(&arch, &mut RngStream::new(2));
        let dist = |a: &Mlp, b: &Mlp| {
            a.flat_params()
                .iter()
                .zip(b.flat_params())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let d0 = dist(&target, &online);
        let tau = 0.2;
        for k in 1..=20 {
            soft_update(&mut target, &online, tau).unwrap();
            let expected = d0 * (1.0 - tau).powi(k);
            assert!((dist(&target, &online) - expected).abs() <= 1e-12 * d0);
        }
    }

    #[test]
    fn forward_is_pure() {
        let arch = Architecture::mlp(5, &[8, 8], 2, Activation::Tanh);
        let net = init_params(&arch, &mut RngStream::new(3));
        let x = [0.1, 0.2, -0.3, 0.4, 0.9];
        let a = forward(&net, &x).unwrap();
        let b = forward(&net, &x).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn flat_params_round_trip() {
        let arch = Architecture::mlp(3, &[4], 2, Activation::Tanh);
        let net = init_params(&arch, &mut RngStream::new(1));
        let mut other = init_params(&arch, &mut RngStream::new(2));
        other.set_flat_params(&net.flat_params()).unwrap();
        assert_eq!(other, net);
        assert!(other.set_flat_params(&[0.0]).is_err());
    }

    #[test]
    fn from_layers_rejects_broken_chain() {
        let a = Layer {
            weights: Array2::zeros((3, 2)),
            bias: Array1::zeros(3),
            activation: Activation::Relu,
        };
        let b = Layer {
            weights: Array2::zeros((1, 4)),
            bias: Array1::zeros(1),
            activation: Activation::Relu,
        };
        assert!(Mlp::from_layers(vec![a, b]).is_err());
        assert!(Mlp::from_layers(vec![]).is_err());
    }
}
