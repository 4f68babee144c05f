use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Dense layer `y = W x + b`, `W` stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.n_out {
            let row = &self.weights[r * self.n_in..(r + 1) * self.n_in];
            let dot: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            out.push(dot + self.biases[r]);
        }
    }
}

/// Fully connected network with leaky-rectifier hidden layers and a linear
/// output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
    pub leaky_slope: f64,
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: &[usize], leaky_slope: f64, rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let weights = (0..n_in * n_out).map(|_| rng.gen_range(-limit..limit)).collect();
                DenseLayer {
                    n_in,
                    n_out,
                    weights,
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Self { layers, leaky_slope }
    }

    pub fn zeros(sizes: &[usize], leaky_slope: f64) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
            leaky_slope,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n_in)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Weights then biases per layer, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        for w in self.layers.windows(2) {
            if w[0].n_out != w[1].n_in {
                return Err(Error::ShapeMismatch {
                    expected: w[0].n_out,
                    actual: w[1].n_in,
                });
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(Error::ShapeMismatch {
                    expected: l.n_in * l.n_out,
                    actual: l.weights.len(),
                });
            }
        }
        Ok(())
    }

    /// Order-sensitive FNV hash of all parameter bits.
    pub fn checksum(&self) -> u64 {
        self.flatten().iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
            (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Pre-activations of every layer for one input.
struct Trace {
    pre: Vec<Vec<f64>>,
}

fn run(params: &MlpParams, features: &[f64]) -> Result<(Vec<f64>, Trace)> {
    if features.len() != params.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: params.input_dim(),
            actual: features.len(),
        });
    }
    let n = params.layers.len();
    let mut pre = Vec::with_capacity(n);
    let mut act = features.to_vec();
    let mut z = Vec::new();
    for (i, layer) in params.layers.iter().enumerate() {
        layer.apply(&act, &mut z);
        pre.push(z.clone());
        if i + 1 < n {
            act = z.iter().map(|&v| leaky(v, params.leaky_slope)).collect();
        } else {
            act = z.clone();
        }
    }
    Ok((act, Trace { pre }))
}

/// Raw network output (pre-transform mixture parameters).
pub fn forward(params: &MlpParams, features: &[f64]) -> Result<Vec<f64>> {
    Ok(run(params, features)?.0)
}

/// Signs of every hidden pre-activation; two parameter settings with equal
/// patterns lie on the same linear piece of the network.
pub fn activation_pattern(params: &MlpParams, features: &[f64]) -> Result<Vec<bool>> {
    let (_, trace) = run(params, features)?;
    let hidden = trace.pre.len().saturating_sub(1);
    Ok(trace.pre[..hidden].iter().flatten().map(|&z| z > 0.0).collect())
}

/// Reverse-mode gradient of `upstream · forward(params, features)` with
/// respect to every weight and bias.
pub fn backward(params: &MlpParams, features: &[f64], upstream: &[f64]) -> Result<MlpParams> {
    let (_, trace) = run(params, features)?;
    if upstream.len() != params.output_dim() {
        return Err(Error::ShapeMismatch {
            expected: params.output_dim(),
            actual: upstream.len(),
        });
    }
    let n = params.layers.len();
    let mut grads: Vec<DenseLayer> = params
        .layers
        .iter()
        .map(|l| DenseLayer::zeros(l.n_in, l.n_out))
        .collect();
    // dL/dz for the current layer's pre-activation
    let mut delta = upstream.to_vec();
    for i in (0..n).rev() {
        let layer = &params.layers[i];
        let input: Vec<f64> = if i == 0 {
            features.to_vec()
        } else {
            trace.pre[i - 1]
                .iter()
                .map(|&v| leaky(v, params.leaky_slope))
                .collect()
        };
        let g = &mut grads[i];
        for r in 0..layer.n_out {
            let d = delta[r];
            g.biases[r] = d;
            if d != 0.0 {
                let row = &mut g.weights[r * layer.n_in..(r + 1) * layer.n_in];
                for (w, x) in row.iter_mut().zip(&input) {
                    *w = d * x;
                }
            }
        }
        if i > 0 {
            let mut next = vec![0.0; layer.n_in];
            for r in 0..layer.n_out {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[r * layer.n_in..(r + 1) * layer.n_in];
                for (acc, w) in next.iter_mut().zip(row) {
                    *acc += d * w;
                }
            }
            for (acc, &z) in next.iter_mut().zip(&trace.pre[i - 1]) {
                if z <= 0.0 {
                    *acc *= params.leaky_slope;
                }
            }
            delta = next;
        }
    }
    Ok(MlpParams {
        layers: grads,
        leaky_slope: params.leaky_slope,
    })
}
