use half::f16;

use crate::error::{Error, Result};
use crate::network::{ModelConfig, ModelParams};
use crate::scalar::Scalar;

/// Half-precision image of a parameter set, as raw little-endian bit
/// patterns in canonical tensor order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfBlob {
    pub weights: Vec<u16>,
    pub bn_stats: Vec<u16>,
}

fn to_half<S: Scalar>(names: Vec<String>, tensors: Vec<&[S]>, out: &mut Vec<u16>, bad: &mut Vec<String>) {
    let limit = f16::MAX.to_f64();
    for (name, t) in names.into_iter().zip(tensors) {
        let mut worst: Option<f64> = None;
        for &x in t {
            let w = x.widen();
            if !(w.abs() <= limit) {
                worst = Some(worst.map_or(w, |v: f64| if w.abs() > v.abs() || w.is_nan() { w } else { v }));
            }
            out.push(x.to_f16().to_bits());
        }
        if let Some(w) = worst {
            bad.push(format!("{name} (|w| = {:e})", w.abs()));
        }
    }
}

/// Round-to-nearest-even conversion of every trainable tensor and the
/// batch-norm running statistics. Values beyond the half-precision range are
/// an error naming each offending tensor.
pub fn quantize<S: Scalar>(params: &ModelParams<S>) -> Result<HalfBlob> {
    let mut bad = Vec::new();
    let mut weights = Vec::with_capacity(params.trainable_count());
    let mut bn_stats = Vec::with_capacity(params.running_count());
    to_half(params.trainable_names(), params.trainable(), &mut weights, &mut bad);
    to_half(params.running_names(), params.running(), &mut bn_stats, &mut bad);
    if bad.is_empty() {
        Ok(HalfBlob { weights, bn_stats })
    } else {
        Err(Error::Overflow(bad))
    }
}

/// Exact widening of a blob into parameters shaped by `config`. Running
/// variances are floored at the smallest positive normal half value.
pub fn dequantize<S: Scalar>(blob: &HalfBlob, config: &ModelConfig) -> Result<ModelParams<S>> {
    let mut params = ModelParams::<S>::zeros(config);
    let (nw, nb) = (params.trainable_count(), params.running_count());
    if blob.weights.len() != nw || blob.bn_stats.len() != nb {
        return Err(Error::Dimension(format!(
            "half blob has {} weights and {} statistics, model needs {nw} and {nb}",
            blob.weights.len(),
            blob.bn_stats.len()
        )));
    }
    let mut src = blob.weights.iter();
    for t in params.trainable_mut() {
        for (x, &h) in t.iter_mut().zip(&mut src) {
            *x = S::from_f16(f16::from_bits(h));
        }
    }
    let floor = S::from_f16(f16::MIN_POSITIVE);
    let mut src = blob.bn_stats.iter();
    // running tensors alternate mean, variance
    for (i, t) in params.running_mut().into_iter().enumerate() {
        for (x, &h) in t.iter_mut().zip(&mut src) {
            let v = S::from_f16(f16::from_bits(h));
            *x = if i % 2 == 1 { v.max(floor) } else { v };
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    fn cfg() -> ModelConfig {
        ModelConfig::uniform(2, 8, 4, 1.0, 1.0, 1.0)
    }

    #[test]
    fn representable_values_survive() {
        let mut p: ModelParams<f32> = init_params(&cfg(), 1).unwrap();
        for (i, t) in p.trainable_mut().into_iter().enumerate() {
            t.iter_mut().for_each(|x| *x = [0.5, 1.0, -2.0, 0.0][i % 4]);
        }
        let back: ModelParams<f32> = dequantize(&quantize(&p).unwrap(), &cfg()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn overflow_names_tensor() {
        let mut p: ModelParams<f32> = init_params(&cfg(), 1).unwrap();
        p.blocks[1].lin1.weight[3] = 1e6;
        match quantize(&p) {
            Err(Error::Overflow(list)) => {
                assert_eq!(list.len(), 1);
                assert!(list[0].starts_with("block1.linear1.weight"), "{list:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_blob_and_variance_floor() {
        let p: ModelParams<f32> = ModelParams::zeros(&cfg());
        let blob = quantize(&p).unwrap();
        assert!(blob.weights.iter().all(|&b| b == 0));
        let back: ModelParams<f32> = dequantize(&blob, &cfg()).unwrap();
        assert!(back.trainable().iter().all(|t| t.iter().all(|&x| x == 0.0)));
        let floor = f16::MIN_POSITIVE.to_f32();
        for (i, t) in back.running().iter().enumerate() {
            let want = if i % 2 == 1 { floor } else { 0.0 };
            assert!(t.iter().all(|&x| x == want));
        }
    }

    #[test]
    fn size_mismatch() {
        let p: ModelParams<f32> = init_params(&cfg(), 1).unwrap();
        let mut blob = quantize(&p).unwrap();
        blob.weights.pop();
        assert!(matches!(dequantize::<f32>(&blob, &cfg()), Err(Error::Dimension(_))));
    }
}
