use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense layer `y = x·W + b` with `W` stored `fan_in × fan_out`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Linear<S> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            fan_in,
            fan_out,
            weight: vec![S::zero(); fan_in * fan_out],
            bias: vec![S::zero(); fan_out],
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut layer = Self::zeros(fan_in, fan_out);
        for w in &mut layer.weight {
            *w = S::lit(rng.random_range(-limit..limit));
        }
        layer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
}

impl<S: Scalar> BatchNorm<S> {
    fn identity(width: usize) -> Self {
        BatchNorm {
            gamma: vec![S::one(); width],
            beta: vec![S::zero(); width],
            running_mean: vec![S::zero(); width],
            running_var: vec![S::one(); width],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcBlock<S> {
    pub lin1: Linear<S>,
    pub bn1: Option<BatchNorm<S>>,
    pub lin2: Linear<S>,
    pub bn2: Option<BatchNorm<S>>,
}

impl<S: Scalar> FcBlock<S> {
    pub fn width(&self) -> usize {
        self.lin2.fan_out
    }
}

/// All network tensors: trainable weights plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub input: Linear<S>,
    pub blocks: Vec<FcBlock<S>>,
    pub output: Linear<S>,
}

impl<S: Scalar> ModelParams<S> {
    /// Parameters of the right shape with every entry zero, including
    /// batch-norm scales. Used as the gradient accumulator.
    pub fn zeros(config: &ModelConfig) -> Self {
        let mut prev = config.input_dim();
        let input = Linear::zeros(prev, config.widths[0]);
        prev = config.widths[0];
        let zero_bn = |w: usize| {
            config.use_batchnorm.then(|| BatchNorm {
                gamma: vec![S::zero(); w],
                beta: vec![S::zero(); w],
                running_mean: vec![S::zero(); w],
                running_var: vec![S::zero(); w],
            })
        };
        let blocks = config
            .widths
            .iter()
            .map(|&w| {
                let b = FcBlock {
                    lin1: Linear::zeros(prev, w),
                    bn1: zero_bn(w),
                    lin2: Linear::zeros(w, w),
                    bn2: zero_bn(w),
                };
                prev = w;
                b
            })
            .collect();
        ModelParams {
            input,
            blocks,
            output: Linear::zeros(prev, 1),
        }
    }

    /// Trainable tensors in canonical order: input projection, then per block
    /// L₁, BN₁ (γ, β), L₂, BN₂ (γ, β), then the output layer.
    pub fn trainable(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = vec![&self.input.weight, &self.input.bias];
        for b in &self.blocks {
            out.push(&b.lin1.weight);
            out.push(&b.lin1.bias);
            if let Some(bn) = &b.bn1 {
                out.push(&bn.gamma);
                out.push(&bn.beta);
            }
            out.push(&b.lin2.weight);
            out.push(&b.lin2.bias);
            if let Some(bn) = &b.bn2 {
                out.push(&bn.gamma);
                out.push(&bn.beta);
            }
        }
        out.push(&self.output.weight);
        out.push(&self.output.bias);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [S]> {
        let mut out: Vec<&mut [S]> = vec![&mut self.input.weight, &mut self.input.bias];
        for b in &mut self.blocks {
            out.push(&mut b.lin1.weight);
            out.push(&mut b.lin1.bias);
            if let Some(bn) = &mut b.bn1 {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
            out.push(&mut b.lin2.weight);
            out.push(&mut b.lin2.bias);
            if let Some(bn) = &mut b.bn2 {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out.push(&mut self.output.weight);
        out.push(&mut self.output.bias);
        out
    }

    /// Names matching [`trainable`](Self::trainable), for diagnostics.
    pub fn trainable_names(&self) -> Vec<String> {
        let mut out = vec!["input.weight".to_string(), "input.bias".to_string()];
        for (i, b) in self.blocks.iter().enumerate() {
            for (layer, bn) in [("1", b.bn1.is_some()), ("2", b.bn2.is_some())] {
                out.push(format!("block{i}.linear{layer}.weight"));
                out.push(format!("block{i}.linear{layer}.bias"));
                if bn {
                    out.push(format!("block{i}.bn{layer}.gamma"));
                    out.push(format!("block{i}.bn{layer}.beta"));
                }
            }
        }
        out.push("output.weight".into());
        out.push("output.bias".into());
        out
    }

    /// Running statistics: per block BN₁ mean, var, BN₂ mean, var.
    pub fn running(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = Vec::new();
        for bn in self.blocks.iter().flat_map(|b| [&b.bn1, &b.bn2]).flatten() {
            out.push(&bn.running_mean);
            out.push(&bn.running_var);
        }
        out
    }

    pub fn running_mut(&mut self) -> Vec<&mut [S]> {
        let mut out: Vec<&mut [S]> = Vec::new();
        for b in &mut self.blocks {
            for bn in [&mut b.bn1, &mut b.bn2].into_iter().flatten() {
                out.push(&mut bn.running_mean);
                out.push(&mut bn.running_var);
            }
        }
        out
    }

    pub fn running_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for (layer, bn) in [("1", b.bn1.is_some()), ("2", b.bn2.is_some())] {
                if bn {
                    out.push(format!("block{i}.bn{layer}.running_mean"));
                    out.push(format!("block{i}.bn{layer}.running_var"));
                }
            }
        }
        out
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable().iter().map(|t| t.len()).sum()
    }

    pub fn running_count(&self) -> usize {
        self.running().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.trainable()
            .into_iter()
            .chain(self.running())
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Checks that tensor shapes match `config`.
    pub fn check_shape(&self, config: &ModelConfig) -> Result<()> {
        let want = ModelParams::<S>::zeros(config);
        let same = self.input.fan_in == want.input.fan_in
            && self.input.fan_out == want.input.fan_out
            && self.blocks.len() == want.blocks.len()
            && self
                .trainable()
                .iter()
                .zip(want.trainable())
                .all(|(a, b)| a.len() == b.len())
            && self.trainable().len() == want.trainable().len()
            && self.running().len() == want.running().len();
        if same {
            Ok(())
        } else {
            Err(Error::Dimension("parameter shapes do not match the model config".into()))
        }
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        let c = |v: &Vec<S>| v.iter().map(|&x| T::lit(x.widen())).collect::<Vec<T>>();
        let lin = |l: &Linear<S>| Linear {
            fan_in: l.fan_in,
            fan_out: l.fan_out,
            weight: c(&l.weight),
            bias: c(&l.bias),
        };
        let bn = |b: &Option<BatchNorm<S>>| {
            b.as_ref().map(|b| BatchNorm {
                gamma: c(&b.gamma),
                beta: c(&b.beta),
                running_mean: c(&b.running_mean),
                running_var: c(&b.running_var),
            })
        };
        ModelParams {
            input: lin(&self.input),
            blocks: self
                .blocks
                .iter()
                .map(|b| FcBlock {
                    lin1: lin(&b.lin1),
                    bn1: bn(&b.bn1),
                    lin2: lin(&b.lin2),
                    bn2: bn(&b.bn2),
                })
                .collect(),
            output: lin(&self.output),
        }
    }
}

/// Uniform fan-average initialization: weights in `±sqrt(6/(fan_in+fan_out))`,
/// zero biases, identity batch norms.
pub fn init_params<S: Scalar>(config: &ModelConfig, seed: u64) -> Result<ModelParams<S>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev = config.widths[0];
    let input = Linear::glorot(config.input_dim(), prev, &mut rng);
    let mut blocks = Vec::with_capacity(config.depth());
    for &w in &config.widths {
        let lin1 = Linear::glorot(prev, w, &mut rng);
        let lin2 = Linear::glorot(w, w, &mut rng);
        blocks.push(FcBlock {
            lin1,
            bn1: config.use_batchnorm.then(|| BatchNorm::identity(w)),
            lin2,
            bn2: config.use_batchnorm.then(|| BatchNorm::identity(w)),
        });
        prev = w;
    }
    let output = Linear::glorot(prev, 1, &mut rng);
    Ok(ModelParams { input, blocks, output })
}

/// Closed-form trainable parameter count for a uniform-width network with all
/// toggles on: `6m·w + w + d·(2w² + 2w + 4w) + w + 1`.
pub fn param_count(d: usize, w: usize, m: usize) -> usize {
    6 * m * w + w + d * (2 * w * w + 2 * w + 4 * w) + w + 1
}
