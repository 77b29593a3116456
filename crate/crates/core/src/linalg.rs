//! Dense row-major kernels.
//!
//! Every output element is accumulated in a fixed order that depends only on
//! the reduction length, never on how many rows are processed together or on
//! which worker processes them. Row-parallel execution is therefore bit-exact
//! with the serial path.

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Rows handed to one worker at a time.
const PAR_ROWS: usize = 64;

fn parallel() -> bool {
    rayon::current_num_threads() > 1
}

/// Rows of `a` sharing each pass over `b`.
const TILE: usize = 4;

/// `c_blk = a_blk · b + bias` for a block of consecutive rows. Each output
/// element starts at its bias and adds the `k` products in ascending order,
/// whatever the block height.
fn rows_times<S: Scalar>(a_blk: &[S], b: &[S], bias: Option<&[S]>, c_blk: &mut [S], k: usize, n: usize) {
    let init = |row: &mut [S]| match bias {
        Some(bias) => row.copy_from_slice(bias),
        None => row.iter_mut().for_each(|c| *c = S::zero()),
    };
    let mut a_tiles = a_blk.chunks_exact(k * TILE);
    let mut c_tiles = c_blk.chunks_exact_mut(n * TILE);
    for (a4, c4) in (&mut a_tiles).zip(&mut c_tiles) {
        let (c0, rest) = c4.split_at_mut(n);
        let (c1, rest) = rest.split_at_mut(n);
        let (c2, c3) = rest.split_at_mut(n);
        for row in [&mut *c0, &mut *c1, &mut *c2, &mut *c3] {
            init(row);
        }
        for (l, b_row) in b.chunks_exact(n).enumerate() {
            let (x0, x1, x2, x3) = (a4[l], a4[k + l], a4[2 * k + l], a4[3 * k + l]);
            for j in 0..n {
                let bj = b_row[j];
                c0[j] += x0 * bj;
                c1[j] += x1 * bj;
                c2[j] += x2 * bj;
                c3[j] += x3 * bj;
            }
        }
    }
    for (a_row, c_row) in a_tiles
        .remainder()
        .chunks_exact(k)
        .zip(c_tiles.into_remainder().chunks_exact_mut(n))
    {
        init(c_row);
        for (&x, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
            for (c, &bj) in c_row.iter_mut().zip(b_row) {
                *c += x * bj;
            }
        }
    }
}

fn rows_parallel<S: Scalar>(a: &[S], b: &[S], bias: Option<&[S]>, c: &mut [S], k: usize, n: usize) {
    let m = c.len() / n.max(1);
    if parallel() && m > PAR_ROWS {
        a.par_chunks(k * PAR_ROWS)
            .zip(c.par_chunks_mut(n * PAR_ROWS))
            .for_each(|(a_blk, c_blk)| rows_times(a_blk, b, bias, c_blk, k, n));
    } else {
        rows_times(a, b, bias, c, k, n);
    }
}

/// `c (m×n) = a (m×k) · b (k×n) + bias (n)`.
pub fn matmul_bias<S: Scalar>(a: &[S], b: &[S], bias: &[S], c: &mut [S], k: usize, n: usize) {
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(bias.len(), n);
    debug_assert_eq!(a.len(), c.len() / n.max(1) * k);
    rows_parallel(a, b, Some(bias), c, k, n);
}

/// `c (m×k) = a (m×n) · bᵀ` where `b` is `k×n`.
pub fn matmul_transb<S: Scalar>(a: &[S], b: &[S], c: &mut [S], n: usize, k: usize) {
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(a.len(), c.len() / k.max(1) * n);
    let mut bt = vec![S::zero(); n * k];
    for (r, b_row) in b.chunks_exact(n).enumerate() {
        for (j, &v) in b_row.iter().enumerate() {
            bt[j * k + r] = v;
        }
    }
    rows_parallel(a, &bt, None, c, n, k);
}

/// `c (k×n) = aᵀ · b` where `a` is `m×k` and `b` is `m×n`.
///
/// Output rows are independent, so workers split over `k`; each output element
/// still sums over the `m` batch rows in ascending order.
pub fn matmul_transa<S: Scalar>(a: &[S], b: &[S], c: &mut [S], k: usize, n: usize) {
    let m = b.len() / n.max(1);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(c.len(), k * n);

    // output rows kk0 .. kk0 + c_blk.len()/n
    let out_rows = |(kk0, c_blk): (usize, &mut [S])| {
        c_blk.iter_mut().for_each(|c| *c = S::zero());
        let rows = c_blk.len() / n;
        if rows == TILE {
            let (c0, rest) = c_blk.split_at_mut(n);
            let (c1, rest) = rest.split_at_mut(n);
            let (c2, c3) = rest.split_at_mut(n);
            for (a_row, b_row) in a.chunks_exact(k).zip(b.chunks_exact(n)) {
                let (x0, x1, x2, x3) = (a_row[kk0], a_row[kk0 + 1], a_row[kk0 + 2], a_row[kk0 + 3]);
                for j in 0..n {
                    let bj = b_row[j];
                    c0[j] += x0 * bj;
                    c1[j] += x1 * bj;
                    c2[j] += x2 * bj;
                    c3[j] += x3 * bj;
                }
            }
        } else {
            for (a_row, b_row) in a.chunks_exact(k).zip(b.chunks_exact(n)) {
                for (r, c_row) in c_blk.chunks_exact_mut(n).enumerate() {
                    let x = a_row[kk0 + r];
                    for (c, &bj) in c_row.iter_mut().zip(b_row) {
                        *c += x * bj;
                    }
                }
            }
        }
    };

    if parallel() && k * m > PAR_ROWS * 64 {
        c.par_chunks_mut(n * TILE).enumerate().map(|(i, blk)| (i * TILE, blk)).for_each(out_rows);
    } else {
        c.chunks_mut(n * TILE).enumerate().map(|(i, blk)| (i * TILE, blk)).for_each(out_rows);
    }
}

/// Column sums of an `m×n` matrix, accumulated top to bottom.
pub fn column_sums<S: Scalar>(a: &[S], n: usize, out: &mut [S]) {
    out.iter_mut().for_each(|o| *o = S::zero());
    for row in a.chunks_exact(n) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// Dot product with eight interleaved accumulators combined in a fixed tree.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [S::zero(); 8];
    let split = a.len() - a.len() % 8;
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut tail = S::zero();
    for (&x, &y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7])) + tail
}
