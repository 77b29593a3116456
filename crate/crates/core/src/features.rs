//! Fixed Gaussian Fourier features with a block-diagonal frequency matrix.
//!
//! Time and pressure each get their own `m` frequencies; the spatial block
//! mixes only the sphere coordinates. The encoding of a coordinate `v` is
//! `[cos(Bv), sin(Bv)]`, length `6m`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::coords::NormalizedCoord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    pub m: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Columns of the spatial block: 3 for (x, y, z), 2 for (ψ̂, φ̂).
    pub spatial_dim: usize,
    pub b_t: Vec<f32>,
    pub b_p: Vec<f32>,
    /// `m × spatial_dim`, row-major.
    pub b_s: Vec<f32>,
}

pub fn make_basis(m: usize, sigma: f64, seed: u64) -> Result<FourierBasis> {
    FourierBasis::sample(m, sigma, seed, 3)
}

impl FourierBasis {
    pub fn sample(m: usize, sigma: f64, seed: u64, spatial_dim: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("Fourier feature count m must be >= 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("Fourier sigma must be positive, got {sigma}")));
        }
        if !(2..=3).contains(&spatial_dim) {
            return Err(Error::invalid(format!("spatial block width {spatial_dim} not in 2..=3")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| normal.sample(&mut rng) as f32).collect() };
        let b_t = draw(m);
        let b_p = draw(m);
        let b_s = draw(m * spatial_dim);
        Ok(FourierBasis {
            m,
            sigma,
            seed,
            spatial_dim,
            b_t,
            b_p,
            b_s,
        })
    }

    /// Number of stored (nonzero) entries of B.
    pub fn stored_len(&self) -> usize {
        self.b_t.len() + self.b_p.len() + self.b_s.len()
    }

    pub fn feature_len(&self) -> usize {
        6 * self.m
    }

    fn spatial<'a>(&self, v: &'a NormalizedCoord, buf: &'a mut [f64; 3]) -> &'a [f64] {
        if self.spatial_dim == 3 {
            *buf = [v.x, v.y, v.z];
            &buf[..]
        } else {
            buf[0] = v.psi_hat;
            buf[1] = v.phi_hat;
            &buf[..2]
        }
    }

    /// Phases `B·v` in f64, blocks ordered (time, pressure, spatial).
    pub fn phases(&self, v: &NormalizedCoord, out: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(out.len(), 3 * m);
        let mut buf = [0.0; 3];
        let s = self.spatial(v, &mut buf);
        for k in 0..m {
            out[k] = self.b_t[k] as f64 * v.t_hat;
            out[m + k] = self.b_p[k] as f64 * v.p_hat;
            let row = &self.b_s[k * self.spatial_dim..(k + 1) * self.spatial_dim];
            out[2 * m + k] = row.iter().zip(s).map(|(&b, &c)| b as f64 * c).sum();
        }
    }

    /// Writes `[cos(Bv), sin(Bv)]` into `out` (length `6m`).
    pub fn encode_into<S: Scalar>(&self, v: &NormalizedCoord, phases: &mut [f64], out: &mut [S]) {
        let n = 3 * self.m;
        self.phases(v, phases);
        let (cos, sin) = out.split_at_mut(n);
        for ((c, s), &ph) in cos.iter_mut().zip(sin.iter_mut()).zip(phases.iter()) {
            let (sn, cs) = ph.sin_cos();
            *c = S::lit(cs);
            *s = S::lit(sn);
        }
    }

    pub fn encode(&self, v: &NormalizedCoord) -> Vec<f64> {
        let mut phases = vec![0.0; 3 * self.m];
        let mut out = vec![0.0; 6 * self.m];
        self.encode_into(v, &mut phases, &mut out);
        out
    }

    /// Analytic derivative of [`encode`](Self::encode) with respect to `t̂`.
    pub fn encode_d_t_hat(&self, v: &NormalizedCoord) -> Vec<f64> {
        let m = self.m;
        let mut phases = vec![0.0; 3 * m];
        self.phases(v, &mut phases);
        let mut out = vec![0.0; 6 * m];
        for k in 0..m {
            let b = self.b_t[k] as f64;
            out[k] = -b * phases[k].sin();
            out[3 * m + k] = b * phases[k].cos();
        }
        out
    }
}
