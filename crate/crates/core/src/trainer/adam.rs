use crate::error::{Error, Result};
use crate::network::ModelParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments for every trainable tensor, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m: Vec<Vec<S>>,
    pub v: Vec<Vec<S>>,
    pub step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ModelParams<S>) -> Self {
        let zeros = || params.trainable().iter().map(|t| vec![S::zero(); t.len()]).collect();
        AdamState {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<S: Scalar>(
    state: &mut AdamState<S>,
    params: &mut ModelParams<S>,
    grads: &ModelParams<S>,
    cfg: &AdamConfig,
) -> Result<()> {
    let g_tensors = grads.trainable();
    {
        let p_tensors = params.trainable();
        let shapes_ok = p_tensors.len() == g_tensors.len()
            && p_tensors.len() == state.m.len()
            && p_tensors
                .iter()
                .zip(&g_tensors)
                .zip(&state.m)
                .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
        if !shapes_ok {
            return Err(Error::Dimension("Adam: parameter, gradient and moment shapes differ".into()));
        }
    }
    let bad: Vec<String> = grads
        .trainable_names()
        .into_iter()
        .zip(&g_tensors)
        .filter(|(_, g)| g.iter().any(|x| !x.is_finite()))
        .map(|(n, _)| n)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Numerical(format!(
            "non-finite gradient at Adam step {} in {}",
            state.step + 1,
            bad.join(", ")
        )));
    }

    state.step += 1;
    let t = state.step as i32;
    let b1 = S::lit(cfg.beta1);
    let b2 = S::lit(cfg.beta2);
    let one = S::one();
    let bc1 = S::lit(1.0 - cfg.beta1.powi(t));
    let bc2 = S::lit(1.0 - cfg.beta2.powi(t));
    let lr = S::lit(cfg.learning_rate);
    let eps = S::lit(cfg.eps);

    for (((p, g), m), v) in params
        .trainable_mut()
        .into_iter()
        .zip(g_tensors)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for k in 0..p.len() {
            let gk = g[k];
            m[k] = b1 * m[k] + (one - b1) * gk;
            v[k] = b2 * v[k] + (one - b2) * gk * gk;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
