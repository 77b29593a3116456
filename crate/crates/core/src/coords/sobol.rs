//! Three-dimensional Sobol sequence with hash-based Owen scrambling.

/// Primitive-polynomial data `(a, m)` for the first three dimensions
/// (Joe & Kuo direction numbers). Dimension 0 is the van der Corput sequence.
const POLYS: [(u32, &[u32]); 3] = [(0, &[]), (0, &[1]), (1, &[1, 3])];

pub const SOBOL_DIMS: usize = 3;

fn direction_numbers(a: u32, m: &[u32]) -> [u32; 32] {
    let mut v = [0u32; 32];
    if m.is_empty() {
        for (k, v) in v.iter_mut().enumerate() {
            *v = 1 << (31 - k);
        }
        return v;
    }
    let s = m.len();
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..32 {
        v[k] = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                v[k] ^= v[k - j];
            }
        }
    }
    v
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Owen scramble of a 32-bit fraction: each output bit is flipped according
/// to a hash of the bits above it. Operates on reversed bits, where carries
/// and multiplications only propagate towards what are originally less
/// significant positions.
#[inline]
fn owen_scramble(x: u32, seed: u32) -> u32 {
    let mut r = x.reverse_bits();
    r ^= r.wrapping_mul(0x3d20_adea);
    r = r.wrapping_add(seed);
    r = r.wrapping_mul((seed >> 16) | 1);
    r ^= r.wrapping_mul(0x0552_6c56);
    r ^= r.wrapping_mul(0x53a2_2864);
    r.reverse_bits()
}

#[derive(Debug, Clone)]
pub struct ScrambledSobol {
    directions: [[u32; 32]; SOBOL_DIMS],
    seed: u64,
}

impl ScrambledSobol {
    pub fn new(seed: u64) -> Self {
        let mut directions = [[0u32; 32]; SOBOL_DIMS];
        for (d, (a, m)) in POLYS.iter().enumerate() {
            directions[d] = direction_numbers(*a, m);
        }
        ScrambledSobol { directions, seed }
    }

    /// Unscrambled 32-bit Sobol integer for `index` in dimension `dim`.
    pub fn raw(&self, index: u32, dim: usize) -> u32 {
        let v = &self.directions[dim];
        let mut x = 0u32;
        let mut bits = index;
        let mut k = 0;
        while bits != 0 {
            if bits & 1 == 1 {
                x ^= v[k];
            }
            bits >>= 1;
            k += 1;
        }
        x
    }

    /// Point `index` in `[0, 1)`. Indices beyond 2³² continue with a fresh
    /// scramble for every further block of 2³² points.
    pub fn sample(&self, index: u64, dim: usize) -> f64 {
        let epoch = index >> 32;
        let key = splitmix64(self.seed ^ splitmix64(epoch.wrapping_mul(SOBOL_DIMS as u64) + dim as u64));
        let bits = owen_scramble(self.raw(index as u32, dim), key as u32);
        bits as f64 * (1.0 / 4_294_967_296.0)
    }
}
