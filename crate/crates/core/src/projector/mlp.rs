use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::check_dims;

/// One affine layer; `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }
}

/// Feed-forward projector: rectifier on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    /// Classes seen during base learning.
    #[serde(default)]
    pub base_classes: Vec<String>,
}

/// Activations recorded by [`Mlp::forward_trace`]: `values[0]` is the input,
/// `values[l + 1]` the (post-activation) output of layer `l`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("trace has an input")
    }
}

impl Mlp {
    /// Seeded uniform init scaled by fan-in; biases start at zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let gain = if l == last { 3.0 } else { 6.0 };
                let bound = (gain / fan_in as f64).sqrt();
                Layer {
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-bound..bound))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
            base_classes: Vec::new(),
        })
    }

    /// All-zero parameters.
    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            sizes: sizes.to_vec(),
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            base_classes: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn forward(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(f)?.values.pop().expect("output"))
    }

    pub fn forward_trace(&self, f: &[f64]) -> Result<Trace> {
        check_dims(self.input_dim(), f.len())?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(f.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &values[l];
            let mut y = layer.biases.clone();
            for (o, y_o) in y.iter_mut().enumerate().take(n_out) {
                let row = &layer.weights[o * n_in..(o + 1) * n_in];
                *y_o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                if l != last && *y_o < 0.0 {
                    *y_o = 0.0;
                }
            }
            values.push(y);
        }
        Ok(Trace { values })
    }

    /// Accumulates `scale · ∂loss/∂θ` into `grads` given `d_out = ∂loss/∂h`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], scale: f64, grads: &mut [Layer]) {
        let mut delta: Vec<f64> = d_out.iter().map(|g| g * scale).collect();
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l != last {
                // Rectifier: zero gradient where the unit was clamped.
                for (d, &y) in delta.iter_mut().zip(&trace.values[l + 1]) {
                    if y <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &trace.values[l];
            let g = &mut grads[l];
            for o in 0..n_out {
                g.biases[o] += delta[o];
                if delta[o] != 0.0 {
                    let row = &mut g.weights[o * n_in..(o + 1) * n_in];
                    row.iter_mut().zip(x).for_each(|(w, v)| *w += delta[o] * v);
                }
            }
            if l > 0 {
                let layer = &self.layers[l];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * n_in..(o + 1) * n_in];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += delta[o] * w);
                }
                delta = prev;
            }
        }
    }

    pub fn zero_grads(&self) -> Vec<Layer> {
        self.sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}
