use super::config::{Activation, ModelConfig};
use super::params::{BatchNorm, Linear, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{column_sums, matmul_bias};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm; activations are cached for backward.
    Train,
    /// Running statistics; every row is computed independently.
    Infer,
}

/// Per-layer batch-norm state captured in train mode.
#[derive(Debug, Clone)]
pub(crate) struct BnCache<S> {
    pub xhat: Vec<S>,
    pub inv_std: Vec<S>,
    pub mean: Vec<S>,
    pub var: Vec<S>,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockCache<S> {
    pub h_in: Vec<S>,
    /// Activation slope at each first-layer pre-activation.
    pub slope1: Vec<S>,
    pub bn1: Option<BnCache<S>>,
    pub a: Vec<S>,
    pub slope2: Vec<S>,
    pub bn2: Option<BnCache<S>>,
}

/// Activations of a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    pub(crate) batch: usize,
    pub(crate) input: Vec<S>,
    pub(crate) blocks: Vec<BlockCache<S>>,
    pub(crate) last: Vec<S>,
    /// Network output before scaling, one per row.
    pub raw: Vec<S>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn linear<S: Scalar>(layer: &Linear<S>, x: &[S], batch: usize) -> Vec<S> {
    let mut y = vec![S::zero(); batch * layer.fan_out];
    matmul_bias(x, &layer.weight, &layer.bias, &mut y, layer.fan_in, layer.fan_out);
    y
}

/// Normalizes `z` in place with batch statistics and returns the cache.
fn batch_norm_train<S: Scalar>(bn: &BatchNorm<S>, z: &mut [S], width: usize, eps: S) -> BnCache<S> {
    let batch = z.len() / width;
    let inv_b = S::one() / S::lit(batch as f64);
    let mut mean = vec![S::zero(); width];
    column_sums(z, width, &mut mean);
    mean.iter_mut().for_each(|m| *m *= inv_b);
    let mut var = vec![S::zero(); width];
    for row in z.chunks_exact(width) {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            let d = x - m;
            *v += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v *= inv_b);
    let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + eps).sqrt()).collect();
    let mut xhat = vec![S::zero(); z.len()];
    for (zrow, xrow) in z.chunks_exact_mut(width).zip(xhat.chunks_exact_mut(width)) {
        for j in 0..width {
            let xh = (zrow[j] - mean[j]) * inv_std[j];
            xrow[j] = xh;
            zrow[j] = bn.gamma[j] * xh + bn.beta[j];
        }
    }
    BnCache {
        xhat,
        inv_std,
        mean,
        var,
    }
}

fn batch_norm_infer<S: Scalar>(bn: &BatchNorm<S>, z: &mut [S], width: usize, eps: S) {
    let scale: Vec<S> = bn
        .gamma
        .iter()
        .zip(&bn.running_var)
        .map(|(&g, &v)| g / (v + eps).sqrt())
        .collect();
    let shift: Vec<S> = bn
        .beta
        .iter()
        .zip(&bn.running_mean)
        .zip(&scale)
        .map(|((&b, &m), &s)| b - m * s)
        .collect();
    for row in z.chunks_exact_mut(width) {
        for ((x, &s), &t) in row.iter_mut().zip(&scale).zip(&shift) {
            *x = *x * s + t;
        }
    }
}

/// Activation values and slopes in one pass.
fn activate_with_slope<S: Scalar>(act: Activation, pre: &[S]) -> (Vec<S>, Vec<S>) {
    pre.iter().map(|&x| act.apply_with_derivative(x)).unzip()
}

fn check_input<S: Scalar>(params: &ModelParams<S>, config: &ModelConfig, inputs: &[S]) -> Result<usize> {
    let dim = config.input_dim();
    if params.input.fan_in != dim {
        return Err(Error::Dimension(format!(
            "input projection expects {} features, config gives {dim}",
            params.input.fan_in
        )));
    }
    if inputs.is_empty() || inputs.len() % dim != 0 {
        return Err(Error::Dimension(format!(
            "input length {} is not a nonempty multiple of {dim}",
            inputs.len()
        )));
    }
    Ok(inputs.len() / dim)
}

/// Train-mode forward over encoded input rows.
pub fn forward_train<S: Scalar>(params: &ModelParams<S>, config: &ModelConfig, inputs: &[S]) -> Result<ForwardCache<S>> {
    let batch = check_input(params, config, inputs)?;
    if batch < 2 {
        return Err(Error::invalid("train-mode batch norm needs at least two rows"));
    }
    let eps = S::lit(config.bn_eps);
    let act = config.activation;
    let mut h = linear(&params.input, inputs, batch);
    let mut blocks = Vec::with_capacity(params.blocks.len());
    for blk in &params.blocks {
        let w = blk.width();
        let mut pre1 = linear(&blk.lin1, &h, batch);
        let bn1 = blk.bn1.as_ref().map(|bn| batch_norm_train(bn, &mut pre1, w, eps));
        let (a, slope1) = activate_with_slope(act, &pre1);
        let mut pre2 = linear(&blk.lin2, &a, batch);
        let bn2 = blk.bn2.as_ref().map(|bn| batch_norm_train(bn, &mut pre2, w, eps));
        let (mut out, slope2) = activate_with_slope(act, &pre2);
        if config.use_skip {
            out.iter_mut().zip(&h).for_each(|(o, &x)| *o += x);
        }
        blocks.push(BlockCache {
            h_in: std::mem::replace(&mut h, out),
            slope1,
            bn1,
            a,
            slope2,
            bn2,
        });
    }
    let raw = linear(&params.output, &h, batch);
    Ok(ForwardCache {
        batch,
        input: inputs.to_vec(),
        blocks,
        last: h,
        raw,
    })
}

/// Infer-mode forward. Each output depends only on its own input row.
pub fn forward_infer<S: Scalar>(params: &ModelParams<S>, config: &ModelConfig, inputs: &[S]) -> Result<Vec<S>> {
    let batch = check_input(params, config, inputs)?;
    let eps = S::lit(config.bn_eps);
    let act = config.activation;
    let mut h = linear(&params.input, inputs, batch);
    for blk in &params.blocks {
        let w = blk.width();
        let mut z = linear(&blk.lin1, &h, batch);
        if let Some(bn) = &blk.bn1 {
            batch_norm_infer(bn, &mut z, w, eps);
        }
        z.iter_mut().for_each(|x| *x = act.apply(*x));
        let mut z2 = linear(&blk.lin2, &z, batch);
        if let Some(bn) = &blk.bn2 {
            batch_norm_infer(bn, &mut z2, w, eps);
        }
        z2.iter_mut().for_each(|x| *x = act.apply(*x));
        if config.use_skip {
            z2.iter_mut().zip(&h).for_each(|(o, &x)| *o += x);
        }
        h = z2;
    }
    Ok(linear(&params.output, &h, batch))
}

/// Runs either mode; the cache is only produced in train mode.
pub fn forward<S: Scalar>(
    params: &ModelParams<S>,
    config: &ModelConfig,
    inputs: &[S],
    mode: Mode,
) -> Result<(Vec<S>, Option<ForwardCache<S>>)> {
    match mode {
        Mode::Train => {
            let cache = forward_train(params, config, inputs)?;
            Ok((cache.raw.clone(), Some(cache)))
        }
        Mode::Infer => Ok((forward_infer(params, config, inputs)?, None)),
    }
}

impl<S: Scalar> ModelParams<S> {
    /// Folds the batch statistics of a train-mode pass into the running
    /// statistics (`running ← (1−momentum)·running + momentum·batch`, variance
    /// unbiased).
    pub fn update_running_stats(&mut self, cache: &ForwardCache<S>, momentum: f64) {
        let mom = S::lit(momentum);
        let keep = S::one() - mom;
        let n = cache.batch as f64;
        let unbias = S::lit(n / (n - 1.0));
        for (blk, bc) in self.blocks.iter_mut().zip(&cache.blocks) {
            for (bn, c) in [(&mut blk.bn1, &bc.bn1), (&mut blk.bn2, &bc.bn2)] {
                if let (Some(bn), Some(c)) = (bn, c) {
                    for j in 0..bn.running_mean.len() {
                        bn.running_mean[j] = keep * bn.running_mean[j] + mom * c.mean[j];
                        bn.running_var[j] = keep * bn.running_var[j] + mom * c.var[j] * unbias;
                    }
                }
            }
        }
    }
}
