//! Shortcut-connected multilayer perceptron.
//!
//! Fixed architecture `[n_in, 6, 6, n_out]` with every pair of distinct
//! layers connected (input→h1, input→h2, input→out, h1→h2, h1→out, h2→out)
//! and one bias per hidden/output node. Hidden nodes are tanh; the output
//! layer is either tanh (action networks) or linear with a configurable
//! slope (critic networks).
//!
//! Weights live in one flat vector in canonical order — by destination
//! layer, then destination node, then bias followed by every source node of
//! every earlier layer. The order is what makes seeded initialisation and
//! per-weight finite differences reproducible.

use std::cell::RefCell;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

thread_local! {
    // Reused activation/delta buffers; the nets are tiny and the training
    // loops call forward/backward tens of millions of times.
    static ACTS: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
    static DELTAS: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

pub const HIDDEN_SIZE: usize = 6;
pub const INIT_RANGE: f64 = 0.1;

/// Output-layer activation. Hidden layers are always tanh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Tanh,
    Linear { slope: f64 },
}

#[derive(Debug, Clone)]
pub struct MlpNet {
    layer_sizes: Vec<usize>,
    output: OutputActivation,
    weights: Vec<f64>,
}

impl MlpNet {
    /// Network with all weights (and biases) i.i.d. uniform on [−0.1, 0.1].
    pub fn init(n_in: usize, n_out: usize, output: OutputActivation, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeroed(n_in, n_out, output);
        for w in &mut net.weights {
            *w = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
        }
        net
    }

    pub fn zeroed(n_in: usize, n_out: usize, output: OutputActivation) -> Self {
        assert!(n_in >= 1 && n_out >= 1);
        let layer_sizes = vec![n_in, HIDDEN_SIZE, HIDDEN_SIZE, n_out];
        let n_weights = Self::weight_count(&layer_sizes);
        MlpNet {
            layer_sizes,
            output,
            weights: vec![0.0; n_weights],
        }
    }

    fn weight_count(sizes: &[usize]) -> usize {
        let mut total = 0;
        let mut fan_in = 0;
        for d in 1..sizes.len() {
            fan_in += sizes[d - 1];
            total += sizes[d] * (1 + fan_in);
        }
        total
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_in(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// `w += scale · delta`.
    pub fn apply_delta(&mut self, delta: &[f64], scale: f64) {
        assert_eq!(delta.len(), self.weights.len());
        for (w, d) in self.weights.iter_mut().zip(delta) {
            *w += scale * d;
        }
    }

    /// Flat index of the bias of `dst_node` in `dst_layer` (1-based layer
    /// index over non-input layers' positions in `layer_sizes`).
    pub fn bias_index(&self, dst_layer: usize, dst_node: usize) -> usize {
        self.block_start(dst_layer, dst_node)
    }

    /// Flat index of the connection `(src_layer, src_node) → (dst_layer,
    /// dst_node)`; `src_layer < dst_layer`.
    pub fn weight_index(
        &self,
        dst_layer: usize,
        dst_node: usize,
        src_layer: usize,
        src_node: usize,
    ) -> usize {
        assert!(src_layer < dst_layer);
        let mut offset = 1; // bias comes first in the block
        for s in 0..src_layer {
            offset += self.layer_sizes[s];
        }
        self.block_start(dst_layer, dst_node) + offset + src_node
    }

    /// Flat index where destination layer `d`'s weight blocks begin.
    fn layer_block_start(&self, d: usize) -> usize {
        let mut start = 0;
        let mut fan_in = 0;
        for d2 in 1..d {
            fan_in += self.layer_sizes[d2 - 1];
            start += self.layer_sizes[d2] * (1 + fan_in);
        }
        start
    }

    fn block_start(&self, dst_layer: usize, dst_node: usize) -> usize {
        assert!(dst_layer >= 1 && dst_layer < self.layer_sizes.len());
        assert!(dst_node < self.layer_sizes[dst_layer]);
        let mut start = 0;
        let mut fan_in = 0;
        for d in 1..dst_layer {
            fan_in += self.layer_sizes[d - 1];
            start += self.layer_sizes[d] * (1 + fan_in);
        }
        fan_in += self.layer_sizes[dst_layer - 1];
        start + dst_node * (1 + fan_in)
    }

    fn total_nodes(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    /// Offset of layer `d` inside the flat activation buffer.
    fn layer_offset(&self, d: usize) -> usize {
        self.layer_sizes[..d].iter().sum()
    }

    /// Forward pass writing every node activation (input included) into one
    /// flat buffer, layer by layer.
    fn activations_flat(&self, input: &[f64], acts: &mut Vec<f64>) {
        assert_eq!(input.len(), self.n_in(), "input dim");
        let last = self.layer_sizes.len() - 1;
        acts.clear();
        acts.extend_from_slice(input);
        let mut idx = 0;
        let mut fan_in = 0;
        for d in 1..self.layer_sizes.len() {
            fan_in += self.layer_sizes[d - 1];
            for _ in 0..self.layer_sizes[d] {
                let mut z = self.weights[idx];
                idx += 1;
                for s in 0..fan_in {
                    z += self.weights[idx] * acts[s];
                    idx += 1;
                }
                let y = if d == last {
                    match self.output {
                        OutputActivation::Tanh => z.tanh(),
                        OutputActivation::Linear { slope } => slope * z,
                    }
                } else {
                    z.tanh()
                };
                acts.push(y);
            }
        }
        debug_assert_eq!(idx, self.weights.len());
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        ACTS.with(|buf| {
            let mut acts = buf.borrow_mut();
            self.activations_flat(input, &mut acts);
            acts[self.layer_offset(self.layer_sizes.len() - 1)..].to_vec()
        })
    }

    /// Reverse pass for the scalar `cotangent · output`: returns the
    /// gradients with respect to every weight and every input component.
    pub fn grad_both(&self, input: &[f64], cotangent: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut wgrad = vec![0.0; self.weights.len()];
        let input_grad = self.grad_into(input, cotangent, &mut wgrad, 1.0);
        (wgrad, input_grad)
    }

    /// Reverse pass accumulating `scale · ∂(cotangent·output)/∂weights` into
    /// `wgrad_acc` and returning the input gradient. The workhorse for the
    /// per-step products inside the training loops.
    pub fn grad_into(
        &self,
        input: &[f64],
        cotangent: &[f64],
        wgrad_acc: &mut [f64],
        scale: f64,
    ) -> Vec<f64> {
        assert_eq!(cotangent.len(), self.n_out(), "cotangent dim");
        assert_eq!(wgrad_acc.len(), self.weights.len());
        ACTS.with(|abuf| {
            DELTAS.with(|dbuf| {
                let mut acts = abuf.borrow_mut();
                let mut deltas = dbuf.borrow_mut();
                self.activations_flat(input, &mut acts);
                self.backward_flat(cotangent, &acts, &mut deltas);
                let mut idx = 0;
                let mut fan_in = 0;
                for d in 1..self.layer_sizes.len() {
                    fan_in += self.layer_sizes[d - 1];
                    let off = self.layer_offset(d);
                    for j in 0..self.layer_sizes[d] {
                        let delta = scale * deltas[off + j];
                        wgrad_acc[idx] += delta;
                        idx += 1;
                        for a in &acts[..fan_in] {
                            wgrad_acc[idx] += delta * a;
                            idx += 1;
                        }
                    }
                }
                deltas[..self.n_in()].to_vec()
            })
        })
    }

    /// Node deltas of `cotangent · output` with respect to each node's
    /// pre-activation, flat and aligned with `acts`; input-layer entries end
    /// up holding the gradient with respect to the inputs themselves.
    fn backward_flat(&self, cotangent: &[f64], acts: &[f64], deltas: &mut Vec<f64>) {
        let last = self.layer_sizes.len() - 1;

        deltas.clear();
        deltas.resize(self.total_nodes(), 0.0);
        let out_off = self.layer_offset(last);
        for j in 0..self.layer_sizes[last] {
            deltas[out_off + j] = match self.output {
                OutputActivation::Tanh => {
                    let y = acts[out_off + j];
                    cotangent[j] * (1.0 - y * y)
                }
                OutputActivation::Linear { slope } => cotangent[j] * slope,
            };
        }
        // Propagate backward a destination layer at a time, walking each
        // layer's contiguous weight blocks once. A destination block is
        // [bias, then every earlier node in flat order], so the scatter into
        // earlier layers is a sequential sweep. Raw sums become deltas when
        // their own layer is processed (input nodes keep the raw sum).
        for d in (1..=last).rev() {
            let off = self.layer_offset(d);
            if d < last {
                for i in 0..self.layer_sizes[d] {
                    let y = acts[off + i];
                    deltas[off + i] *= 1.0 - y * y;
                }
            }
            let mut idx = self.layer_block_start(d);
            for j in 0..self.layer_sizes[d] {
                let delta = deltas[off + j];
                idx += 1; // bias
                for s in 0..off {
                    deltas[s] += delta * self.weights[idx];
                    idx += 1;
                }
            }
        }
    }

    /// `∂(cotangent·output)/∂weights` by reverse accumulation.
    pub fn grad_weights(&self, input: &[f64], cotangent: &[f64]) -> Vec<f64> {
        self.grad_both(input, cotangent).0
    }

    /// `∂(cotangent·output)/∂input`.
    pub fn grad_input(&self, input: &[f64], cotangent: &[f64]) -> Vec<f64> {
        self.grad_both(input, cotangent).1
    }

    /// Write the weights as a versioned plain-text snapshot.
    pub fn save<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "clipdp-mlp v1")?;
        write!(w, "layers")?;
        for s in &self.layer_sizes {
            write!(w, " {s}")?;
        }
        writeln!(w)?;
        match self.output {
            OutputActivation::Tanh => writeln!(w, "output tanh")?,
            OutputActivation::Linear { slope } => writeln!(w, "output linear {slope}")?,
        }
        for v in &self.weights {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn load<R: std::io::BufRead>(r: R) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("mlp snapshot: {msg}"));
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        if header.trim() != "clipdp-mlp v1" {
            return Err(bad("unknown header"));
        }
        let layers_line = lines.next().ok_or_else(|| bad("missing layers line"))??;
        let mut parts = layers_line.split_whitespace();
        if parts.next() != Some("layers") {
            return Err(bad("missing layers line"));
        }
        let layer_sizes: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| bad("bad layer size")))
            .collect::<Result<_>>()?;
        if layer_sizes.len() != 4 {
            return Err(bad("expected 4 layer sizes"));
        }
        let out_line = lines.next().ok_or_else(|| bad("missing output line"))??;
        let mut parts = out_line.split_whitespace();
        if parts.next() != Some("output") {
            return Err(bad("missing output line"));
        }
        let output = match parts.next() {
            Some("tanh") => OutputActivation::Tanh,
            Some("linear") => {
                let slope: f64 = parts
                    .next()
                    .ok_or_else(|| bad("missing slope"))?
                    .parse()
                    .map_err(|_| bad("bad slope"))?;
                OutputActivation::Linear { slope }
            }
            _ => return Err(bad("unknown output activation")),
        };
        let expected = Self::weight_count(&layer_sizes);
        let mut weights = Vec::with_capacity(expected);
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            weights.push(t.parse().map_err(|_| bad("bad weight value"))?);
        }
        if weights.len() != expected {
            return Err(bad(&format!(
                "expected {expected} weights, found {}",
                weights.len()
            )));
        }
        Ok(MlpNet {
            layer_sizes,
            output,
            weights,
        })
    }
}
