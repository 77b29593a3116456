use super::sobol::{splitmix64, ScrambledSobol};
use super::sphere_from_unit_square;
use crate::gridfield::Grid;

/// One training coordinate: time (hours), pressure level index, latitude and
/// longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p_index: usize,
    pub psi: f64,
    pub phi: f64,
}

/// Stateful low-discrepancy sampler over the data domain.
///
/// Sequence dimensions 0 and 1 drive longitude and latitude through the
/// equal-area map, dimension 2 drives time. The pressure level comes from a
/// counter-based hash of the sequence index, independent of the sequence.
#[derive(Debug, Clone)]
pub struct QuasiSampler {
    seed: u64,
    sobol: ScrambledSobol,
    level_key: u64,
    next_index: u64,
}

impl QuasiSampler {
    pub fn new(seed: u64) -> Self {
        QuasiSampler {
            seed,
            sobol: ScrambledSobol::new(splitmix64(seed ^ 0x50b0_1)),
            level_key: splitmix64(seed ^ 0x1e7e_15),
            next_index: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the next point `next_batch` will emit.
    pub fn position(&self) -> u64 {
        self.next_index
    }

    /// The point at sequence position `index`; pure, so workers may split the
    /// sequence by striding.
    pub fn point(&self, index: u64, grid: &Grid) -> Sample {
        let u1 = self.sobol.sample(index, 0);
        let u2 = self.sobol.sample(index, 1);
        let ut = self.sobol.sample(index, 2);
        let (psi, phi) = sphere_from_unit_square(u1, u2);
        let (t0, t1) = grid.time_span();
        let n_levels = grid.pressures.len() as u128;
        let h = splitmix64(self.level_key.wrapping_add(index));
        Sample {
            t: t0 + (t1 - t0) * ut,
            p_index: ((h as u128 * n_levels) >> 64) as usize,
            psi: psi.to_degrees().clamp(-90.0, 90.0),
            phi: phi.to_degrees(),
        }
    }

    pub fn next_batch(&mut self, n: usize, grid: &Grid) -> Vec<Sample> {
        let start = self.next_index;
        self.next_index += n as u64;
        (start..start + n as u64).map(|i| self.point(i, grid)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(levels: usize) -> Grid {
        Grid::equiangular(vec![0.0, 24.0], (1..=levels).map(|k| 100.0 * k as f64).collect(), 5, 8).unwrap()
    }

    #[test]
    fn batches_continue_the_sequence() {
        let g = grid(3);
        let mut a = QuasiSampler::new(9);
        let first = a.next_batch(10, &g);
        let second = a.next_batch(10, &g);
        let mut b = QuasiSampler::new(9);
        let both = b.next_batch(20, &g);
        assert_eq!([first, second].concat(), both);
        assert_eq!(a.position(), 20);
    }

    #[test]
    fn single_level_and_ranges() {
        let g = grid(1);
        let mut s = QuasiSampler::new(1);
        for p in s.next_batch(4096, &g) {
            assert_eq!(p.p_index, 0);
            assert!((0.0..=24.0).contains(&p.t));
            assert!((-90.0..=90.0).contains(&p.psi));
            assert!((0.0..360.0).contains(&p.phi));
        }
    }

    #[test]
    fn levels_are_roughly_uniform() {
        let g = grid(4);
        let mut s = QuasiSampler::new(5);
        let mut counts = [0usize; 4];
        for p in s.next_batch(40_000, &g) {
            counts[p.p_index] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }
}
