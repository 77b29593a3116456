use super::config::ModelConfig;
use super::forward::{BnCache, ForwardCache};
use super::params::{BatchNorm, Linear, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{column_sums, matmul_transa, matmul_transb};
use crate::scalar::Scalar;

/// Accumulates weight/bias gradients of `layer` and returns the gradient with
/// respect to its input.
fn linear_backward<S: Scalar>(layer: &Linear<S>, grad: &mut Linear<S>, x: &[S], dy: &[S], need_dx: bool) -> Vec<S> {
    matmul_transa(x, dy, &mut grad.weight, layer.fan_in, layer.fan_out);
    column_sums(dy, layer.fan_out, &mut grad.bias);
    if !need_dx {
        return Vec::new();
    }
    let mut dx = vec![S::zero(); x.len()];
    matmul_transb(dy, &layer.weight, &mut dx, layer.fan_out, layer.fan_in);
    dx
}

/// Replaces `dy` (gradient w.r.t. the normalized output) with the gradient
/// w.r.t. the pre-normalization input, including the batch-statistics terms.
fn batch_norm_backward<S: Scalar>(bn: &BatchNorm<S>, grad: &mut BatchNorm<S>, c: &BnCache<S>, dy: &mut [S]) {
    let width = bn.gamma.len();
    let batch = dy.len() / width;
    grad.gamma.iter_mut().for_each(|g| *g = S::zero());
    grad.beta.iter_mut().for_each(|g| *g = S::zero());
    for (drow, xrow) in dy.chunks_exact(width).zip(c.xhat.chunks_exact(width)) {
        for j in 0..width {
            grad.gamma[j] += drow[j] * xrow[j];
            grad.beta[j] += drow[j];
        }
    }
    let b = S::lit(batch as f64);
    let inv_b = S::one() / b;
    for (drow, xrow) in dy.chunks_exact_mut(width).zip(c.xhat.chunks_exact(width)) {
        for j in 0..width {
            let g = bn.gamma[j];
            // Σ dx̂ = γ·dβ and Σ dx̂·x̂ = γ·dγ
            let dxhat = drow[j] * g;
            drow[j] = c.inv_std[j] * inv_b * (b * dxhat - g * grad.beta[j] - xrow[j] * g * grad.gamma[j]);
        }
    }
}

/// Gradients of every trainable tensor given `d_loss / d_raw`.
///
/// Running-statistics slots of the result are left at zero.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    config: &ModelConfig,
    cache: &ForwardCache<S>,
    d_raw: &[S],
) -> Result<ModelParams<S>> {
    if d_raw.len() != cache.batch
        || cache.blocks.len() != params.blocks.len()
        || cache.input.len() != cache.batch * params.input.fan_in
        || cache.last.len() != cache.batch * params.output.fan_in
    {
        return Err(Error::Dimension("forward cache does not match parameters or upstream gradient".into()));
    }
    let mut grads = ModelParams::<S>::zeros(config);
    grads.check_shape(config)?;
    params.check_shape(config)?;

    let mut g = linear_backward(&params.output, &mut grads.output, &cache.last, d_raw, true);

    for ((blk, gblk), bc) in params
        .blocks
        .iter()
        .zip(grads.blocks.iter_mut())
        .zip(&cache.blocks)
        .rev()
    {
        // g: gradient w.r.t. the block output
        let mut d = g.clone();
        d.iter_mut().zip(&bc.slope2).for_each(|(d, &s)| *d *= s);
        if let (Some(bn), Some(gbn), Some(c)) = (&blk.bn2, gblk.bn2.as_mut(), &bc.bn2) {
            batch_norm_backward(bn, gbn, c, &mut d);
        }
        let mut da = linear_backward(&blk.lin2, &mut gblk.lin2, &bc.a, &d, true);
        da.iter_mut().zip(&bc.slope1).for_each(|(d, &s)| *d *= s);
        if let (Some(bn), Some(gbn), Some(c)) = (&blk.bn1, gblk.bn1.as_mut(), &bc.bn1) {
            batch_norm_backward(bn, gbn, c, &mut da);
        }
        let dh = linear_backward(&blk.lin1, &mut gblk.lin1, &bc.h_in, &da, true);
        if config.use_skip {
            g.iter_mut().zip(&dh).for_each(|(g, &d)| *g += d);
        } else {
            g = dh;
        }
    }

    linear_backward(&params.input, &mut grads.input, &cache.input, &g, false);
    Ok(grads)
}
