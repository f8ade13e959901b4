use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamSet, Tensor};
use crate::{Error, Result};

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Affine layer followed by an activation. `weight` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            weight,
            ..Self::zeros(inputs, outputs, activation)
        }
    }

    fn affine(&self, x: &[f64], pre: &mut [f64]) {
        for (o, row) in self.weight.chunks_exact(self.inputs).enumerate() {
            pre[o] = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn activate(&self, pre: &[f64]) -> Vec<f64> {
        match self.activation {
            Activation::Relu => pre.iter().map(|&z| z.max(0.0)).collect(),
            Activation::Linear => pre.to_vec(),
        }
    }
}

/// Multilayer perceptron parameters.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Dense>,
    stamp: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Per-layer inputs and pre-activations of one forward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    stamp: u64,
}

impl MlpCache {
    /// Folds the sign pattern of every ReLU pre-activation into a hash; two
    /// passes on the same linear piece of the network share a signature.
    pub fn relu_signature(&self, layers: &[Dense]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (layer, pre) in layers.iter().zip(&self.pre) {
            if layer.activation == Activation::Relu {
                for &z in pre {
                    h = (h ^ u64::from(z > 0.0)).wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

impl Mlp {
    /// Checks that adjacent widths chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weight.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape(format!("layer {i}: tensor sizes disagree with dims")));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].outputs,
                    i + 1,
                    w[1].inputs
                )));
            }
        }
        Ok(Self {
            layers,
            stamp: fresh_stamp(),
        })
    }

    /// `widths = [in, h1, ..., out]`; hidden layers use `hidden`, the last `output`.
    pub fn glorot<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(widths.len() >= 2, "need input and output widths");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::glorot(widths[i], widths[i + 1], act, rng)
            })
            .collect();
        Self::from_layers(layers).expect("widths chain by construction")
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Mutable access; invalidates caches from earlier forward passes.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.stamp = fresh_stamp();
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    /// Forward pass keeping what backward needs.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.outputs];
            layer.affine(&cur, &mut pre);
            let next = layer.activate(&pre);
            inputs.push(cur);
            pres.push(pre);
            cur = next;
        }
        Ok((
            cur,
            MlpCache {
                inputs,
                pre: pres,
                stamp: self.stamp,
            },
        ))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.outputs];
            layer.affine(&cur, &mut pre);
            cur = layer.activate(&pre);
        }
        Ok(cur)
    }

    /// Accumulates the gradient of `dot(y, grad_y)` into `grads` and returns
    /// the gradient with respect to the input.
    pub fn backward_into(
        &self,
        cache: &MlpCache,
        grad_y: &[f64],
        grads: &mut Mlp,
    ) -> Result<Vec<f64>> {
        if cache.stamp != self.stamp || cache.pre.len() != self.layers.len() {
            return Err(Error::Contract(
                "cache does not come from a forward pass of these parameters".into(),
            ));
        }
        if grad_y.len() != self.output_width() {
            return Err(Error::Shape(format!(
                "output gradient has {} entries, network outputs {}",
                grad_y.len(),
                self.output_width()
            )));
        }
        if grads.layers.len() != self.layers.len()
            || grads
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(g, l)| g.inputs != l.inputs || g.outputs != l.outputs)
        {
            return Err(Error::Shape("gradient container does not match network".into()));
        }

        let mut g = grad_y.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                for (gi, &z) in g.iter_mut().zip(&cache.pre[i]) {
                    if z <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let x = &cache.inputs[i];
            let acc = &mut grads.layers[i];
            let mut gx = vec![0.0; layer.inputs];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                acc.bias[o] += go;
                let row = o * layer.inputs;
                let w = &layer.weight[row..row + layer.inputs];
                let gw = &mut acc.weight[row..row + layer.inputs];
                for j in 0..layer.inputs {
                    gw[j] += go * x[j];
                    gx[j] += w[j] * go;
                }
            }
            g = gx;
        }
        Ok(g)
    }

    /// Fresh-gradient variant of [`Mlp::backward_into`]: returns `(grad_params, grad_x)`.
    pub fn backward(&self, cache: &MlpCache, grad_y: &[f64]) -> Result<(Mlp, Vec<f64>)> {
        let mut grads = self.zeros_like();
        let gx = self.backward_into(cache, grad_y, &mut grads)?;
        Ok((grads, gx))
    }

    pub(crate) fn named_tensors<'a>(&'a self, prefix: &str, out: &mut Vec<Tensor<'a>>) {
        for (i, l) in self.layers.iter().enumerate() {
            out.push(Tensor {
                name: format!("{prefix}layer{i}.weight"),
                shape: vec![l.outputs, l.inputs],
                data: &l.weight,
            });
            out.push(Tensor {
                name: format!("{prefix}layer{i}.bias"),
                shape: vec![l.outputs],
                data: &l.bias,
            });
        }
    }

    pub(crate) fn push_tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        self.stamp = fresh_stamp();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
    }
}

impl ParamSet for Mlp {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        self.named_tensors("", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        self.push_tensors_mut(&mut out);
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs, l.activation))
                .collect(),
            stamp: fresh_stamp(),
        }
    }
}
