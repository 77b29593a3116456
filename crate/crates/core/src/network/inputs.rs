use rayon::prelude::*;

use super::config::ModelConfig;
use crate::coords::{normalize_unchecked, NormalizedCoord, Sample};
use crate::features::FourierBasis;
use crate::scalar::Scalar;

fn encode_row<S: Scalar>(config: &ModelConfig, basis: &FourierBasis, v: &NormalizedCoord, phases: &mut [f64], row: &mut [S]) {
    if config.use_fourier {
        basis.encode_into(v, phases, row);
    } else if config.use_xyz {
        for (r, c) in row.iter_mut().zip([v.t_hat, v.p_hat, v.x, v.y, v.z]) {
            *r = S::lit(c);
        }
    } else {
        for (r, c) in row.iter_mut().zip([v.t_hat, v.p_hat, v.psi_hat, v.phi_hat]) {
            *r = S::lit(c);
        }
    }
}

/// Network input rows (`coords.len() × config.input_dim()`).
pub fn encode_inputs<S: Scalar>(config: &ModelConfig, basis: &FourierBasis, coords: &[NormalizedCoord]) -> Vec<S> {
    let dim = config.input_dim();
    let mut out = vec![S::zero(); coords.len() * dim];
    let work = |(row, v): (&mut [S], &NormalizedCoord)| {
        let mut phases = vec![0.0; 3 * basis.m];
        encode_row(config, basis, v, &mut phases, row);
    };
    if rayon::current_num_threads() > 1 && coords.len() >= 256 {
        out.par_chunks_mut(dim).zip(coords.par_iter()).for_each(work);
    } else {
        let mut phases = vec![0.0; 3 * basis.m];
        for (row, v) in out.chunks_mut(dim).zip(coords) {
            encode_row(config, basis, v, &mut phases, row);
        }
    }
    out
}

/// Normalizes sampler output and encodes it.
pub fn encode_samples<S: Scalar>(
    config: &ModelConfig,
    basis: &FourierBasis,
    samples: &[Sample],
    pressures: &[f64],
) -> Vec<S> {
    let coords: Vec<NormalizedCoord> = samples
        .iter()
        .map(|s| normalize_unchecked(s.t, pressures[s.p_index], s.psi, s.phi, config.c_t, config.c_p))
        .collect();
    encode_inputs(config, basis, &coords)
}
